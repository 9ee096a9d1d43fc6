#include "fvgm/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fvgm/error.hpp"

namespace fvgm::clf {

std::string to_string(Role role) { return role == Role::Sensitive ? "sensitive" : "nonsensitive"; }

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::Continuous: return "continuous";
    case Kind::Boolean: return "boolean";
    case Kind::Categorical: return "categorical";
  }
  return "continuous";
}

void LinearClassifier::validate() const {
  if (weights.size() != features.size() || category_weights.size() != features.size()) {
    throw InputError("classifier must have exactly one weight per feature");
  }
  std::set<std::string> seen;
  for (const auto& f : features) {
    if (f.name.empty()) throw InputError("classifier feature with empty name");
    if (!seen.insert(f.name).second) throw InputError("duplicate classifier feature '" + f.name + "'");
  }
}

std::size_t LinearClassifier::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  throw InputError("classifier has no feature '" + name + "'");
}

int predict(const LinearClassifier& clf, const FeatureRow& row) {
  double score = 0.0;
  for (std::size_t i = 0; i < clf.features.size(); ++i) {
    const auto& f = clf.features[i];
    auto it = row.find(f.name);
    if (it == row.end()) throw InputError("row is missing feature '" + f.name + "'");
    if (f.kind == Kind::Categorical) {
      const auto* cat = std::get_if<std::string>(&it->second);
      if (!cat) throw InputError("categorical feature '" + f.name + "' needs a text value");
      auto w = clf.category_weights[i].find(*cat);
      score += w == clf.category_weights[i].end() ? 0.0 : w->second;
    } else {
      const auto* x = std::get_if<double>(&it->second);
      if (!x) throw InputError("feature '" + f.name + "' needs a numeric value");
      score += clf.weights[i] * *x;
    }
  }
  return score >= clf.bias ? 1 : 0;
}

std::vector<int> predict_all(const LinearClassifier& clf, const Table& data) {
  std::vector<double> score(data.rows.size(), 0.0);
  for (std::size_t i = 0; i < clf.features.size(); ++i) {
    const auto& f = clf.features[i];
    if (f.kind == Kind::Categorical) {
      const auto col = data.column_index(f.name);
      for (std::size_t r = 0; r < data.rows.size(); ++r) {
        auto w = clf.category_weights[i].find(data.cell(r, col));
        if (w != clf.category_weights[i].end()) score[r] += w->second;
      }
    } else {
      const auto xs = data.numeric_column(f.name);
      for (std::size_t r = 0; r < xs.size(); ++r) score[r] += clf.weights[i] * xs[r];
    }
  }
  std::vector<int> out(score.size());
  for (std::size_t r = 0; r < score.size(); ++r) out[r] = score[r] >= clf.bias ? 1 : 0;
  return out;
}

std::size_t BinSpec::bin_of(double x) const {
  return static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), x) - edges.begin());
}

std::size_t QuantizedClassifier::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  throw InputError("quantized classifier has no feature '" + name + "'");
}

std::vector<ExclusiveGroup> QuantizedClassifier::groups() const {
  std::vector<ExclusiveGroup> out;
  for (const auto& f : features) {
    if (f.kind == IndicatorKind::Passthrough) continue;
    if (out.empty() || out.back().source != f.source) out.push_back({f.source, f.role, {}, {}});
    out.back().members.push_back(f.name);
    out.back().labels.push_back(f.label);
  }
  return out;
}

std::vector<std::string> QuantizedClassifier::sources() const {
  std::vector<std::string> out;
  for (const auto& f : features) {
    if (std::find(out.begin(), out.end(), f.source) == out.end()) out.push_back(f.source);
  }
  return out;
}

std::vector<std::string> QuantizedClassifier::sensitive_sources() const {
  std::vector<std::string> out;
  for (const auto& f : features) {
    if (f.role == Role::Sensitive && std::find(out.begin(), out.end(), f.source) == out.end()) {
      out.push_back(f.source);
    }
  }
  return out;
}

std::vector<std::string> QuantizedClassifier::indicators_of(const std::string& source) const {
  std::vector<std::string> out;
  for (const auto& f : features) {
    if (f.source == source) out.push_back(f.name);
  }
  if (out.empty()) throw InputError("classifier has no feature '" + source + "'");
  return out;
}

std::map<std::string, std::vector<std::string>> collect_categories(const LinearClassifier& clf, const Table& data) {
  std::map<std::string, std::vector<std::string>> out;
  for (std::size_t i = 0; i < clf.features.size(); ++i) {
    const auto& f = clf.features[i];
    if (f.kind != Kind::Categorical) continue;
    std::set<std::string> values;
    for (const auto& [cat, w] : clf.category_weights[i]) values.insert(cat);
    if (data.has_column(f.name)) {
      const auto col = data.column_index(f.name);
      for (const auto& row : data.rows) values.insert(row[col]);
    }
    out[f.name] = {values.begin(), values.end()};
  }
  return out;
}

namespace {

/// Equal-frequency cut points; ties land in the lower bin.
BinSpec make_bins(const std::string& name, std::vector<double> values, std::size_t k, std::vector<std::string>& warnings) {
  BinSpec spec;
  spec.feature = name;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::size_t distinct = 1;
  for (std::size_t i = 1; i < n; ++i) distinct += values[i] != values[i - 1] ? 1 : 0;
  if (distinct == 1) {
    warnings.push_back("feature '" + name + "' is constant; using a single bin");
    spec.means = {values.front()};
    return spec;
  }
  if (k > distinct) {
    warnings.push_back("feature '" + name + "' has " + std::to_string(distinct) + " distinct values; bins reduced from " +
                       std::to_string(k) + " to " + std::to_string(distinct));
    k = distinct;
  }
  for (std::size_t j = 1; j < k; ++j) {
    const std::size_t pos = (j * n + k - 1) / k - 1;
    const double cut = values[pos];
    if (cut >= values.back()) continue;
    if (!spec.edges.empty() && cut <= spec.edges.back()) continue;
    spec.edges.push_back(cut);
  }
  const std::size_t bins = spec.edges.size() + 1;
  if (bins < k) {
    warnings.push_back("feature '" + name + "' has tied quantiles; bins reduced from " + std::to_string(k) + " to " +
                       std::to_string(bins));
  }
  std::vector<double> sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (double x : values) {
    const auto b = spec.bin_of(x);
    sum[b] += x;
    ++count[b];
  }
  for (std::size_t b = 0; b < bins; ++b) spec.means.push_back(sum[b] / static_cast<double>(count[b]));
  return spec;
}

std::string bin_name(const std::string& source, std::size_t bin) { return source + "#" + std::to_string(bin); }
std::string category_name(const std::string& source, const std::string& cat) { return source + "=" + cat; }

}  // namespace

double reconstruction_mse(const BinSpec& spec, const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double x : values) {
    const double d = x - spec.means[spec.bin_of(x)];
    s += d * d;
  }
  return s / static_cast<double>(values.size());
}

Discretization discretize(const LinearClassifier& clf, const Table& data, std::size_t k,
                          const std::map<std::string, std::vector<std::string>>* categories) {
  clf.validate();
  if (k < 1) throw InputError("bins per feature must be positive");
  if (data.rows.empty()) throw InputError("cannot discretize an empty dataset");
  DiscretizedClassifier out;
  out.bins_per_feature = k;
  out.threshold = clf.bias;
  out.categories = categories ? *categories : collect_categories(clf, data);
  for (std::size_t i = 0; i < clf.features.size(); ++i) {
    const auto& f = clf.features[i];
    switch (f.kind) {
      case Kind::Boolean:
        out.features.push_back({f.name, f.name, f.role, IndicatorKind::Passthrough, ""});
        out.coefficients.push_back(clf.weights[i]);
        break;
      case Kind::Categorical: {
        const auto& cats = out.categories.at(f.name);
        for (const auto& cat : cats) {
          out.features.push_back({category_name(f.name, cat), f.name, f.role, IndicatorKind::Category, cat});
          auto w = clf.category_weights[i].find(cat);
          out.coefficients.push_back(w == clf.category_weights[i].end() ? 0.0 : w->second);
        }
        break;
      }
      case Kind::Continuous: {
        auto spec = make_bins(f.name, data.numeric_column(f.name), k, out.warnings);
        for (std::size_t b = 0; b < spec.num_bins(); ++b) {
          out.features.push_back({bin_name(f.name, b), f.name, f.role, IndicatorKind::Bin, std::to_string(b)});
          out.coefficients.push_back(clf.weights[i] * spec.means[b]);
        }
        out.bins.push_back(std::move(spec));
        break;
      }
    }
  }
  Discretization d;
  d.data = encode(out, clf, data);
  d.classifier = std::move(out);
  return d;
}

BoolDataset encode(const DiscretizedClassifier& scheme, const LinearClassifier& clf, const Table& data) {
  std::vector<std::string> names;
  for (const auto& f : scheme.features) names.push_back(f.name);
  const std::size_t rows = data.rows.size();
  std::vector<std::vector<std::uint8_t>> cols(names.size(), std::vector<std::uint8_t>(rows, 0));
  std::size_t c = 0;
  std::size_t bin_idx = 0;
  for (const auto& f : clf.features) {
    switch (f.kind) {
      case Kind::Boolean: {
        const auto xs = data.numeric_column(f.name);
        for (std::size_t r = 0; r < rows; ++r) cols[c][r] = xs[r] != 0.0 ? 1 : 0;
        ++c;
        break;
      }
      case Kind::Categorical: {
        const auto& cats = scheme.categories.at(f.name);
        const auto col = data.column_index(f.name);
        for (std::size_t r = 0; r < rows; ++r) {
          const auto& v = data.cell(r, col);
          auto it = std::lower_bound(cats.begin(), cats.end(), v);
          if (it == cats.end() || *it != v) {
            throw InputError("line " + std::to_string(data.lines[r]) + ": unknown category '" + v + "' for '" +
                             f.name + "'");
          }
          cols[c + static_cast<std::size_t>(it - cats.begin())][r] = 1;
        }
        c += cats.size();
        break;
      }
      case Kind::Continuous: {
        const auto& spec = scheme.bins.at(bin_idx++);
        const auto xs = data.numeric_column(f.name);
        for (std::size_t r = 0; r < rows; ++r) cols[c + spec.bin_of(xs[r])][r] = 1;
        c += spec.num_bins();
        break;
      }
    }
  }
  BoolDataset out(names);
  std::vector<std::uint8_t> row(names.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < names.size(); ++j) row[j] = cols[j][r];
    out.add_row(row);
  }
  return out;
}

QuantizedClassifier quantize(const DiscretizedClassifier& clf, std::int64_t multiplier) {
  if (multiplier < 1) throw InputError("multiplier must be at least 1");
  QuantizedClassifier q;
  q.features = clf.features;
  q.multiplier = multiplier;
  q.bins_per_feature = clf.bins_per_feature;
  q.bins = clf.bins;
  q.categories = clf.categories;
  const double l = static_cast<double>(multiplier);
  for (double c : clf.coefficients) q.weights.push_back(static_cast<std::int64_t>(std::round(c * l)));
  q.threshold = static_cast<std::int64_t>(std::round(clf.threshold * l));
  return q;
}

int predict(const QuantizedClassifier& clf, const BoolDataset& data, std::size_t row) {
  std::int64_t score = 0;
  for (std::size_t i = 0; i < clf.features.size(); ++i) {
    if (data.column(clf.features[i].name)[row]) score += clf.weights[i];
  }
  return score >= clf.threshold ? 1 : 0;
}

int predict(const QuantizedClassifier& clf, const std::map<std::string, int>& row) {
  std::int64_t score = 0;
  for (std::size_t i = 0; i < clf.features.size(); ++i) {
    auto it = row.find(clf.features[i].name);
    if (it == row.end()) throw InputError("row is missing feature '" + clf.features[i].name + "'");
    if (it->second) score += clf.weights[i];
  }
  return score >= clf.threshold ? 1 : 0;
}

double agreement(const QuantizedClassifier& clf, const BoolDataset& data, const std::vector<int>& reference) {
  if (data.num_rows() == 0) return 0.0;
  std::vector<std::int64_t> score(data.num_rows(), 0);
  for (std::size_t i = 0; i < clf.features.size(); ++i) {
    if (clf.weights[i] == 0) continue;
    const auto& col = data.column(clf.features[i].name);
    for (std::size_t r = 0; r < score.size(); ++r) {
      if (col[r]) score[r] += clf.weights[i];
    }
  }
  std::size_t agree = 0;
  for (std::size_t r = 0; r < score.size(); ++r) agree += (score[r] >= clf.threshold ? 1 : 0) == reference[r];
  return static_cast<double>(agree) / static_cast<double>(score.size());
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::size_t rows, std::uint64_t seed) {
  std::vector<std::size_t> idx(rows);
  for (std::size_t i = 0; i < rows; ++i) idx[i] = i;
  if (rows <= 1) return {idx, idx};
  std::mt19937_64 rng(seed);
  for (std::size_t i = rows - 1; i > 0; --i) std::swap(idx[i], idx[rng() % (i + 1)]);
  const std::size_t val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(rows))));
  std::vector<std::size_t> validation(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(val));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(val), idx.end());
  std::sort(train.begin(), train.end());
  std::sort(validation.begin(), validation.end());
  return {train, validation};
}

Table select_rows(const Table& data, const std::vector<std::size_t>& rows) {
  Table t;
  t.header = data.header;
  for (auto r : rows) {
    t.rows.push_back(data.rows[r]);
    t.lines.push_back(data.lines[r]);
  }
  return t;
}

TuneResult tune(const LinearClassifier& clf, const Table& data, std::uint64_t seed, const TuneGrid& grid) {
  if (data.rows.empty()) throw InputError("cannot tune on an empty dataset");
  const auto categories = collect_categories(clf, data);
  const auto [train_idx, val_idx] = split_rows(data.rows.size(), seed);
  const Table train = select_rows(data, train_idx);
  const Table validation = select_rows(data, val_idx);
  const auto reference = predict_all(clf, validation);

  TuneResult best;
  best.fidelity = -1.0;
  for (std::size_t k = grid.min_bins; k <= grid.max_bins; ++k) {
    const auto disc = discretize(clf, train, k, &categories);
    const auto encoded = encode(disc.classifier, clf, validation);
    for (std::int64_t l = grid.min_multiplier; l <= grid.max_multiplier; ++l) {
      const double fid = agreement(quantize(disc.classifier, l), encoded, reference);
      if (fid > best.fidelity) best = {k, l, fid};
    }
  }
  return best;
}

LinearClassifier classifier_from_json(const nlohmann::json& j) {
  try {
    LinearClassifier clf;
    for (const auto& jf : j.at("features")) {
      FeatureSpec f;
      f.name = jf.at("name").get<std::string>();
      const auto role = jf.value("role", std::string("nonsensitive"));
      if (role == "sensitive") {
        f.role = Role::Sensitive;
      } else if (role == "nonsensitive") {
        f.role = Role::Nonsensitive;
      } else {
        throw InputError("feature '" + f.name + "' has unknown role '" + role + "'");
      }
      const auto kind = jf.value("kind", std::string("continuous"));
      if (kind == "continuous") {
        f.kind = Kind::Continuous;
      } else if (kind == "boolean") {
        f.kind = Kind::Boolean;
      } else if (kind == "categorical") {
        f.kind = Kind::Categorical;
      } else {
        throw InputError("feature '" + f.name + "' has unknown kind '" + kind + "'");
      }
      clf.features.push_back(f);
    }
    const auto& jw = j.at("weights");
    if (!jw.is_array() || jw.size() != clf.features.size()) {
      throw InputError("classifier must list exactly one weight per feature");
    }
    for (std::size_t i = 0; i < clf.features.size(); ++i) {
      std::map<std::string, double> per_category;
      double w = 0.0;
      if (clf.features[i].kind == Kind::Categorical) {
        if (!jw[i].is_object()) {
          throw InputError("categorical feature '" + clf.features[i].name + "' needs a {category: weight} object");
        }
        for (const auto& [cat, v] : jw[i].items()) per_category[cat] = v.get<double>();
      } else {
        if (!jw[i].is_number()) throw InputError("feature '" + clf.features[i].name + "' needs a numeric weight");
        w = jw[i].get<double>();
      }
      clf.weights.push_back(w);
      clf.category_weights.push_back(std::move(per_category));
    }
    clf.bias = j.at("bias").get<double>();
    clf.validate();
    return clf;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed classifier file: ") + e.what());
  }
}

LinearClassifier load_classifier(const std::string& path) {
  try {
    return classifier_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("cannot parse classifier '" + path + "': " + e.what());
  }
}

nlohmann::ordered_json to_json(const LinearClassifier& clf) {
  nlohmann::ordered_json j;
  auto features = nlohmann::ordered_json::array();
  auto weights = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < clf.features.size(); ++i) {
    const auto& f = clf.features[i];
    features.push_back({{"name", f.name}, {"role", to_string(f.role)}, {"kind", to_string(f.kind)}});
    if (f.kind == Kind::Categorical) {
      nlohmann::ordered_json w = nlohmann::ordered_json::object();
      for (const auto& [cat, v] : clf.category_weights[i]) w[cat] = v;
      weights.push_back(w);
    } else {
      weights.push_back(clf.weights[i]);
    }
  }
  j["features"] = features;
  j["weights"] = weights;
  j["bias"] = clf.bias;
  return j;
}

namespace {
std::string indicator_kind_name(IndicatorKind k) {
  switch (k) {
    case IndicatorKind::Passthrough: return "passthrough";
    case IndicatorKind::Bin: return "bin";
    case IndicatorKind::Category: return "category";
  }
  return "passthrough";
}
}  // namespace

nlohmann::ordered_json to_json(const QuantizedClassifier& clf) {
  nlohmann::ordered_json j;
  j["multiplier"] = clf.multiplier;
  j["bins_per_feature"] = clf.bins_per_feature;
  j["threshold"] = clf.threshold;
  auto features = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < clf.features.size(); ++i) {
    const auto& f = clf.features[i];
    features.push_back({{"name", f.name},
                        {"source", f.source},
                        {"role", to_string(f.role)},
                        {"kind", indicator_kind_name(f.kind)},
                        {"label", f.label},
                        {"weight", clf.weights[i]}});
  }
  j["features"] = features;
  auto bins = nlohmann::ordered_json::array();
  for (const auto& b : clf.bins) bins.push_back({{"feature", b.feature}, {"edges", b.edges}, {"means", b.means}});
  j["bins"] = bins;
  nlohmann::ordered_json cats = nlohmann::ordered_json::object();
  for (const auto& [name, values] : clf.categories) cats[name] = values;
  j["categories"] = cats;
  return j;
}

QuantizedClassifier quantized_from_json(const nlohmann::json& j) {
  try {
    QuantizedClassifier q;
    q.multiplier = j.at("multiplier").get<std::int64_t>();
    q.bins_per_feature = j.value("bins_per_feature", std::size_t{0});
    q.threshold = j.at("threshold").get<std::int64_t>();
    for (const auto& jf : j.at("features")) {
      BoolFeature f;
      f.name = jf.at("name").get<std::string>();
      f.source = jf.value("source", f.name);
      f.role = jf.value("role", std::string("nonsensitive")) == "sensitive" ? Role::Sensitive : Role::Nonsensitive;
      const auto kind = jf.value("kind", std::string("passthrough"));
      f.kind = kind == "bin" ? IndicatorKind::Bin : kind == "category" ? IndicatorKind::Category : IndicatorKind::Passthrough;
      f.label = jf.value("label", std::string());
      q.features.push_back(f);
      q.weights.push_back(jf.at("weight").get<std::int64_t>());
    }
    for (const auto& jb : j.value("bins", nlohmann::json::array())) {
      q.bins.push_back({jb.at("feature").get<std::string>(), jb.at("edges").get<std::vector<double>>(),
                        jb.at("means").get<std::vector<double>>()});
    }
    if (j.contains("categories")) {
      q.categories = j.at("categories").get<std::map<std::string, std::vector<std::string>>>();
    }
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed quantized classifier: ") + e.what());
  }
}

}  // namespace fvgm::clf
