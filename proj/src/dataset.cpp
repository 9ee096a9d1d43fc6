#include "fvgm/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fvgm/error.hpp"

namespace fvgm {

BoolDataset::BoolDataset(std::vector<std::string> columns)
    : names_(std::move(columns)), data_(names_.size()) {}

void BoolDataset::add_row(const std::vector<std::uint8_t>& row) {
  if (row.size() != names_.size()) {
    throw InputError("row has " + std::to_string(row.size()) + " values, expected " +
                     std::to_string(names_.size()));
  }
  for (std::size_t c = 0; c < row.size(); ++c) data_[c].push_back(row[c] ? 1 : 0);
  ++rows_;
}

bool BoolDataset::has_column(const std::string& name) const {
  for (const auto& n : names_) {
    if (n == name) return true;
  }
  return false;
}

std::size_t BoolDataset::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw InputError("dataset has no column '" + name + "'");
}

BoolDataset BoolDataset::select_rows(const std::vector<std::size_t>& rows) const {
  BoolDataset out(names_);
  for (std::size_t c = 0; c < names_.size(); ++c) {
    out.data_[c].reserve(rows.size());
    for (auto r : rows) out.data_[c].push_back(data_[c][r]);
  }
  out.rows_ = rows.size();
  return out;
}

std::size_t Table::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw InputError("CSV has no column '" + name + "'");
}

bool Table::has_column(const std::string& name) const {
  for (const auto& h : header) {
    if (h == name) return true;
  }
  return false;
}

std::vector<double> Table::numeric_column(const std::string& name) const {
  const auto col = column_index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& s = rows[r][col];
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    while (begin < end && *begin == ' ') ++begin;
    if (begin < end && *begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
      if (s == "true" || s == "True") {
        v = 1.0;
      } else if (s == "false" || s == "False") {
        v = 0.0;
      } else {
        throw InputError("line " + std::to_string(lines[r]) + ": column '" + name +
                         "' value '" + s + "' is not numeric");
      }
    }
    out.push_back(v);
  }
  return out;
}

namespace {

std::vector<std::string> split_record(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw InputError("line " + std::to_string(line_no) + ": unterminated quoted field");
  out.push_back(field);
  return out;
}

}  // namespace

Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_record(line, line_no);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                       " fields, found " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lines.push_back(line_no);
  }
  if (!have_header) throw InputError("CSV input is empty");
  return t;
}

Table read_csv(const std::string& path) { return parse_csv(read_file(path)); }

std::string write_csv(const Table& table) {
  std::ostringstream os;
  auto emit = [&os](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os << ',';
      if (fields[i].find_first_of(",\"") != std::string::npos) {
        os << '"';
        for (char c : fields[i]) {
          if (c == '"') os << '"';
          os << c;
        }
        os << '"';
      } else {
        os << fields[i];
      }
    }
    os << '\n';
  };
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << contents;
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fvgm
