#include "fvgm/report.hpp"

#include <cmath>
#include <charconv>
#include <map>

#include "fvgm/error.hpp"

namespace fvgm::report {

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

Json group_json(const metrics::GroupResult& g) {
  Json j;
  j["group"] = metrics::to_string(g.group);
  j["ppv"] = g.ppv;
  return j;
}

}  // namespace

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json to_json(const metrics::FairnessReport& r) {
  Json j;
  j["most_favored"] = group_json(r.max_group);
  j["least_favored"] = group_json(r.min_group);
  Json m;
  m["di"] = r.di;
  m["sp"] = r.sp;
  m["eo"] = optional_number(r.eo);
  m["pcf"] = optional_number(r.pcf);
  j["metrics"] = m;
  Json eps = Json::object(), verdicts = Json::object();
  for (const auto& [k, v] : r.epsilon) eps[k] = v;
  for (const auto& [k, v] : r.verdicts) verdicts[k] = v;
  j["epsilon"] = eps;
  j["verdicts"] = verdicts;
  j["pass"] = r.all_pass();
  Json s;
  s["group_mode"] = r.enumerated ? "enumerate" : "quantifier";
  s["memo_entries"] = r.stats.memo_entries;
  s["dp_calls"] = r.stats.dp_calls;
  j["solver"] = s;
  Json p;
  p["bins"] = r.provenance.bins;
  p["multiplier"] = r.provenance.multiplier;
  p["fidelity"] = r.provenance.fidelity;
  p["network"] = r.provenance.network;
  p["dataset_hash"] = r.provenance.dataset_hash;
  p["warnings"] = r.provenance.warnings;
  j["provenance"] = p;
  if (r.elapsed_ms) j["elapsed_ms"] = *r.elapsed_ms;
  return j;
}

std::string to_csv(const metrics::FairnessReport& r) {
  std::string out = "metric,value,epsilon,verdict\n";
  for (auto m : {metrics::Metric::DI, metrics::Metric::SP, metrics::Metric::EO, metrics::Metric::PCF}) {
    const auto name = metrics::to_string(m);
    const auto v = r.value(m);
    auto e = r.epsilon.find(name);
    auto verdict = r.verdicts.find(name);
    out += name + "," + (v ? num(*v) : "") + "," + (e == r.epsilon.end() ? "" : num(e->second)) + "," +
           (verdict == r.verdicts.end() ? "" : (verdict->second ? "pass" : "fail")) + "\n";
  }
  out += "ppv_max," + num(r.max_group.ppv) + ",," + csv_field(metrics::to_string(r.max_group.group)) + "\n";
  out += "ppv_min," + num(r.min_group.ppv) + ",," + csv_field(metrics::to_string(r.min_group.group)) + "\n";
  return out;
}

namespace {

Json fif_row(const fif::FifResult& r) {
  Json j;
  j["subset"] = r.subset;
  j["group"] = r.group;
  j["base_ppv"] = r.base_ppv;
  j["ablated_ppv"] = r.ablated_ppv;
  j["influence"] = r.influence;
  return j;
}

std::string join(const std::vector<std::string>& xs, char sep) {
  std::string out;
  for (const auto& x : xs) {
    if (!out.empty()) out += sep;
    out += x;
  }
  return out;
}

}  // namespace

Json to_json(const fif::FifReport& r, const std::optional<fif::FifResult>& subset_query) {
  Json j;
  j["group"] = r.group;
  j["base_ppv"] = r.base_ppv;
  Json rows = Json::array();
  for (const auto& x : r.results) rows.push_back(fif_row(x));
  j["features"] = rows;
  j["subset"] = subset_query ? fif_row(*subset_query) : Json(nullptr);
  return j;
}

std::string to_csv(const fif::FifReport& r, const std::optional<fif::FifResult>& subset_query) {
  std::string out = "subset,group,base_ppv,ablated_ppv,influence\n";
  auto row = [&](const fif::FifResult& x) {
    out += csv_field(join(x.subset, ';')) + "," + csv_field(x.group) + "," + num(x.base_ppv) + "," +
           num(x.ablated_ppv) + "," + num(x.influence) + "\n";
  };
  for (const auto& x : r.results) row(x);
  if (subset_query) row(*subset_query);
  return out;
}

double BenchTrial::error() const { return std::abs(verifier_di - analytic_di); }
double BenchTrial::independent_error() const { return std::abs(independent_di - analytic_di); }

double BenchReport::mean_error() const {
  double s = 0.0;
  for (const auto& t : trials) s += t.error();
  return trials.empty() ? 0.0 : s / static_cast<double>(trials.size());
}

double BenchReport::mean_independent_error() const {
  double s = 0.0;
  for (const auto& t : trials) s += t.independent_error();
  return trials.empty() ? 0.0 : s / static_cast<double>(trials.size());
}

Json to_json(const BenchReport& r) {
  Json j;
  j["seed"] = r.seed;
  j["samples"] = r.samples;
  j["sigma"] = r.sigma;
  Json rows = Json::array();
  std::map<std::size_t, std::pair<double, double>> by_n;
  std::map<std::size_t, std::size_t> count;
  for (const auto& t : r.trials) {
    Json row;
    row["n"] = t.n;
    row["trial"] = t.trial;
    row["seed"] = t.seed;
    row["analytic_di"] = t.analytic_di;
    row["verifier_di"] = t.verifier_di;
    row["independent_di"] = t.independent_di;
    row["abs_error"] = t.error();
    row["independent_abs_error"] = t.independent_error();
    row["bins"] = t.bins;
    row["multiplier"] = t.multiplier;
    row["fidelity"] = t.fidelity;
    row["memo_entries"] = t.memo_entries;
    if (t.elapsed_ms) row["elapsed_ms"] = *t.elapsed_ms;
    rows.push_back(row);
    by_n[t.n].first += t.error();
    by_n[t.n].second += t.independent_error();
    ++count[t.n];
  }
  j["trials"] = rows;
  Json agg = Json::array();
  for (const auto& [n, sums] : by_n) {
    Json a;
    a["n"] = n;
    a["trials"] = count[n];
    a["mean_abs_error"] = sums.first / static_cast<double>(count[n]);
    a["independent_mean_abs_error"] = sums.second / static_cast<double>(count[n]);
    agg.push_back(a);
  }
  j["by_n"] = agg;
  j["mean_abs_error"] = r.mean_error();
  j["independent_mean_abs_error"] = r.mean_independent_error();
  return j;
}

std::string to_csv(const BenchReport& r) {
  bool timed = false;
  for (const auto& t : r.trials) timed = timed || t.elapsed_ms.has_value();
  std::string out =
      "n,trial,seed,analytic_di,verifier_di,independent_di,abs_error,independent_abs_error,bins,multiplier,"
      "fidelity,memo_entries";
  out += timed ? ",elapsed_ms\n" : "\n";
  for (const auto& t : r.trials) {
    out += std::to_string(t.n) + "," + std::to_string(t.trial) + "," + std::to_string(t.seed) + "," +
           num(t.analytic_di) + "," + num(t.verifier_di) + "," + num(t.independent_di) + "," + num(t.error()) + "," +
           num(t.independent_error()) + "," + std::to_string(t.bins) + "," + std::to_string(t.multiplier) + "," +
           num(t.fidelity) + "," + std::to_string(t.memo_entries);
    if (timed) out += "," + (t.elapsed_ms ? num(*t.elapsed_ms) : std::string());
    out += "\n";
  }
  return out;
}

Json diff(const nlohmann::json& a, const nlohmann::json& b) {
  if (!a.contains("metrics") || !b.contains("metrics")) throw InputError("diff expects two verify reports");
  Json out;
  Json rows = Json::object();
  for (const char* m : {"di", "sp", "eo", "pcf"}) {
    const auto& va = a["metrics"].value(m, nlohmann::json());
    const auto& vb = b["metrics"].value(m, nlohmann::json());
    Json row;
    row["a"] = va.is_number() ? Json(va.get<double>()) : Json(nullptr);
    row["b"] = vb.is_number() ? Json(vb.get<double>()) : Json(nullptr);
    row["delta"] = va.is_number() && vb.is_number() ? Json(vb.get<double>() - va.get<double>()) : Json(nullptr);
    rows[m] = row;
  }
  out["metrics"] = rows;
  auto group = [](const nlohmann::json& r, const char* key) {
    return r.contains(key) ? r[key].value("group", std::string()) : std::string();
  };
  out["most_favored"] = {{"a", group(a, "most_favored")}, {"b", group(b, "most_favored")}};
  out["least_favored"] = {{"a", group(a, "least_favored")}, {"b", group(b, "least_favored")}};
  return out;
}

std::string diff_csv(const Json& d) {
  std::string out = "metric,a,b,delta\n";
  for (const auto& [m, row] : d.at("metrics").items()) {
    auto cell = [&](const char* k) { return row[k].is_number() ? num(row[k].get<double>()) : std::string(); };
    out += m + "," + cell("a") + "," + cell("b") + "," + cell("delta") + "\n";
  }
  return out;
}

}  // namespace fvgm::report
