#include "fvgm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <set>

#include "fvgm/error.hpp"
#include "fvgm/fif.hpp"
#include "fvgm/synthbench.hpp"

namespace fvgm::cli {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void emit(const RunConfig& config, const std::string& text, std::ostream& out) {
  if (config.out.empty()) {
    out << text;
  } else {
    write_file(config.out, text);
  }
}

std::vector<std::uint8_t> parse_labels(const Table& data, const std::string& label) {
  if (!data.has_column(label)) throw InputError("dataset has no label column '" + label + "'");
  const auto col = data.column_index(label);
  std::vector<std::uint8_t> out;
  out.reserve(data.rows.size());
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    const auto& v = data.cell(r, col);
    if (v == "1" || v == "true") {
      out.push_back(1);
    } else if (v == "0" || v == "false") {
      out.push_back(0);
    } else {
      throw InputError("line " + std::to_string(data.lines[r]) + ": label '" + v + "' is not 0 or 1");
    }
  }
  return out;
}

std::set<std::string> sensitive_indicators(const clf::QuantizedClassifier& qclf) {
  std::set<std::string> out;
  for (const auto& f : qclf.features) {
    if (f.role == clf::Role::Sensitive) out.insert(f.name);
  }
  return out;
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const StructureError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const OrderingError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const ResourceLimitError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
  }
  return 2;
}

void dedupe(std::vector<std::string>& xs) {
  std::set<std::string> seen;
  std::erase_if(xs, [&](const std::string& x) { return !seen.insert(x).second; });
}

s3p::SolveOptions solve_options() {
  s3p::SolveOptions o;
  o.memo_budget = s3p::memo_budget_from_env();
  return o;
}

}  // namespace

clf::LinearClassifier apply_roles(clf::LinearClassifier clf, const std::vector<std::string>& sensitive) {
  if (sensitive.empty()) return clf;
  std::set<std::string> wanted(sensitive.begin(), sensitive.end());
  for (auto& f : clf.features) {
    f.role = wanted.erase(f.name) ? clf::Role::Sensitive : clf::Role::Nonsensitive;
  }
  if (!wanted.empty()) throw InputError("unknown sensitive feature '" + *wanted.begin() + "'");
  return clf;
}

Prepared prepare(const clf::LinearClassifier& raw, const Table& data, const RunConfig& config) {
  const auto clf = apply_roles(raw, config.sensitive);
  clf.validate();
  for (const auto& f : clf.features) {
    if (!data.has_column(f.name)) throw InputError("dataset has no column '" + f.name + "'");
  }
  if (data.rows.empty()) throw InputError("dataset has no rows");
  Prepared p;
  if (!config.label.empty()) p.labels = parse_labels(data, config.label);

  std::size_t k = config.bins.value_or(0);
  std::int64_t l = config.multiplier.value_or(0);
  if (!config.bins || !config.multiplier) {
    clf::TuneGrid grid;
    if (config.bins) grid.min_bins = grid.max_bins = *config.bins;
    if (config.multiplier) grid.min_multiplier = grid.max_multiplier = *config.multiplier;
    const auto t = clf::tune(clf, data, config.seed, grid);
    k = t.bins;
    l = t.multiplier;
  }
  auto disc = clf::discretize(clf, data, k);
  p.qclf = clf::quantize(disc.classifier, l);
  p.data = std::move(disc.data);
  p.provenance.warnings = disc.classifier.warnings;
  p.provenance.fidelity = clf::agreement(p.qclf, p.data, clf::predict_all(clf, data));
  p.provenance.bins = k;
  p.provenance.multiplier = l;
  p.provenance.dataset_hash = content_hash(write_csv(data));

  auto& dc = p.dist_config;
  dc.smoothing = config.smoothing;
  dc.max_parents = config.max_parents;
  dc.restarts = config.restarts;
  dc.seed = config.seed;
  if (!config.bn_path.empty()) {
    auto net = bn::load(config.bn_path);
    for (const auto& n : net.dag.nodes) {
      if (!p.data.has_column(n)) throw InputError("network node '" + n + "' is not a Boolean feature of the classifier");
    }
    net.validate(sensitive_indicators(p.qclf));
    dc.mode = NetworkMode::Fixed;
    dc.network = std::move(net);
  } else if (config.learn_bn) {
    dc.mode = NetworkMode::Learn;
  }
  p.dist = fit_distribution(p.qclf, p.data, dc, &p.provenance.warnings);
  p.provenance.network = summarize(p.dist.net);
  dedupe(p.provenance.warnings);
  return p;
}

Prepared prepare_without_data(const clf::LinearClassifier& raw, const bn::BayesNet& net, const RunConfig& config) {
  const auto clf = apply_roles(raw, config.sensitive);
  clf.validate();
  clf::DiscretizedClassifier disc;
  for (std::size_t i = 0; i < clf.features.size(); ++i) {
    const auto& f = clf.features[i];
    if (f.kind != clf::Kind::Boolean) {
      throw InputError("without --data every feature must be boolean; '" + f.name + "' is not");
    }
    disc.features.push_back({f.name, f.name, f.role, clf::IndicatorKind::Passthrough, ""});
    disc.coefficients.push_back(clf.weights[i]);
  }
  disc.threshold = clf.bias;
  Prepared p;
  p.qclf = clf::quantize(disc, config.multiplier.value_or(1));
  net.validate(sensitive_indicators(p.qclf));
  p.dist.net = net;
  for (const auto& n : net.dag.nodes) {
    const auto& c = net.cpt(n);
    if (c.parents.empty()) p.dist.marginals[n] = c.table.at(0);
  }
  p.dist_config.mode = NetworkMode::Fixed;
  p.dist_config.network = net;
  p.provenance.multiplier = p.qclf.multiplier;
  p.provenance.network = summarize(net);
  p.provenance.dataset_hash = "";
  return p;
}

metrics::FairnessReport audit(const Prepared& p, const RunConfig& config) {
  metrics::PpvOptions opts;
  opts.mode = config.group_mode;
  opts.solve = solve_options();
  metrics::FairnessReport r;
  r.provenance = p.provenance;
  const auto mm = metrics::max_min_ppv(p.qclf, p.dist, opts);
  r.max_group = mm.max;
  r.min_group = mm.min;
  r.di = metrics::disparate_impact(mm.max, mm.min);
  r.sp = metrics::statistical_parity(mm.max, mm.min);
  r.stats = mm.stats;
  r.enumerated = mm.enumerated;

  const bool has_data = p.data.num_rows() > 0;
  if (p.labels) {
    auto eo = metrics::equalized_odds(p.qclf, p.data, *p.labels, p.dist_config, opts);
    r.eo = eo.value;
    for (auto& w : eo.warnings) r.provenance.warnings.push_back(std::move(w));
  } else if (config.epsilons.count("eo")) {
    throw InputError("equalized odds needs --label");
  }
  if (!config.mediators.empty() || config.epsilons.count("pcf")) {
    if (config.mediators.empty()) {
      r.pcf = r.sp;
    } else if (!has_data) {
      throw InputError("path-specific causal fairness needs --data");
    } else {
      r.pcf = metrics::path_specific_causal_fairness(p.qclf, p.data, config.mediators, p.dist_config, opts);
    }
  }
  dedupe(r.provenance.warnings);
  r.apply_epsilons(config.epsilons);
  return r;
}

BenchSpec BenchSpec::from_json(const nlohmann::json& j) {
  BenchSpec s;
  if (j.contains("n")) {
    s.n_values.clear();
    if (j["n"].is_array()) {
      for (const auto& v : j["n"]) s.n_values.push_back(v.get<std::size_t>());
    } else {
      s.n_values.push_back(j["n"].get<std::size_t>());
    }
  }
  s.trials = j.value("trials", s.trials);
  s.samples = j.value("samples", s.samples);
  s.sigma = j.value("sigma", s.sigma);
  s.seed = j.value("seed", s.seed);
  if (j.contains("bins")) s.bins = j["bins"].get<std::size_t>();
  if (j.contains("multiplier")) s.multiplier = j["multiplier"].get<std::int64_t>();
  return s;
}

report::BenchReport run_bench(const BenchSpec& spec) {
  if (spec.samples < 10) throw InputError("bench needs at least 10 samples");
  report::BenchReport out;
  out.seed = spec.seed;
  out.samples = spec.samples;
  out.sigma = spec.sigma;
  std::size_t index = 0;
  for (auto n : spec.n_values) {
    for (std::size_t t = 0; t < spec.trials; ++t, ++index) {
      const auto t0 = Clock::now();
      report::BenchTrial trial;
      trial.n = n;
      trial.trial = t;
      trial.seed = spec.seed + index;
      const auto sspec = synth::random_spec(n, spec.samples, trial.seed, spec.sigma);
      const auto data = synth::generate(sspec);
      const auto clf = synth::unit_classifier(sspec);
      trial.analytic_di = synth::analytic_di(std::vector<double>(n - 1, 1.0), 0.0, clf.bias, sspec);

      RunConfig rc;
      rc.bins = spec.bins;
      rc.multiplier = spec.multiplier;
      rc.seed = trial.seed;
      rc.learn_bn = true;
      const auto prepared = prepare(clf, data, rc);
      const auto verified = audit(prepared, rc);
      trial.verifier_di = verified.di;
      trial.memo_entries = verified.stats.memo_entries;
      trial.bins = prepared.provenance.bins;
      trial.multiplier = prepared.provenance.multiplier;
      trial.fidelity = prepared.provenance.fidelity;

      Prepared independent = prepared;
      independent.dist = fit_distribution(prepared.qclf, prepared.data, DistributionConfig{});
      trial.independent_di = audit(independent, rc).di;
      if (spec.timing) trial.elapsed_ms = ms_since(t0);
      out.trials.push_back(trial);
    }
  }
  return out;
}

int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto t0 = Clock::now();
    if (config.classifier_path.empty()) throw InputError("verify needs --classifier");
    const auto clf = clf::load_classifier(config.classifier_path);
    Prepared p;
    if (config.data_path.empty()) {
      if (config.bn_path.empty()) throw InputError("verify needs --data, or --bn with marginals on its root nodes");
      p = prepare_without_data(clf, bn::load(config.bn_path), config);
    } else {
      p = prepare(clf, read_csv(config.data_path), config);
    }
    auto r = audit(p, config);
    if (config.timing) r.elapsed_ms = ms_since(t0);
    for (const auto& w : r.provenance.warnings) err << "warning: " << w << "\n";
    emit(config, config.format == OutputFormat::Csv ? report::to_csv(r) : report::dump(report::to_json(r)), out);
    return r.all_pass() ? 0 : 1;
  });
}

int cmd_fif(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config.group.empty()) throw InputError("fif needs --group (a compound group like A=1, or all)");
    if (config.classifier_path.empty()) throw InputError("fif needs --classifier");
    const auto clf = clf::load_classifier(config.classifier_path);
    Prepared p;
    if (config.data_path.empty()) {
      if (config.bn_path.empty()) throw InputError("fif needs --data, or --bn with marginals on its root nodes");
      p = prepare_without_data(clf, bn::load(config.bn_path), config);
    } else {
      p = prepare(clf, read_csv(config.data_path), config);
    }
    std::optional<metrics::Group> group;
    if (config.group != "all") group = metrics::parse_group(config.group);
    const auto opts = solve_options();
    const auto all = fif::fif_all(p.qclf, p.dist, group, opts);
    std::optional<fif::FifResult> subset;
    if (!config.subset.empty()) subset = fif::fif(p.qclf, p.dist, group, config.subset, opts);
    for (const auto& w : p.provenance.warnings) err << "warning: " << w << "\n";
    emit(config, config.format == OutputFormat::Csv ? report::to_csv(all, subset)
                                                    : report::dump(report::to_json(all, subset)),
         out);
    return 0;
  });
}

int cmd_bench(const BenchSpec& spec, const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto r = run_bench(spec);
    emit(config, config.format == OutputFormat::Csv ? report::to_csv(r) : report::dump(report::to_json(r)), out);
    return 0;
  });
}

int cmd_learn_bn(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config.classifier_path.empty() || config.data_path.empty()) {
      throw InputError("learn-bn needs --classifier and --data");
    }
    RunConfig rc = config;
    rc.learn_bn = true;
    rc.bn_path.clear();
    const auto p = prepare(clf::load_classifier(config.classifier_path), read_csv(config.data_path), rc);
    for (const auto& w : p.provenance.warnings) err << "warning: " << w << "\n";
    emit(config, report::dump(bn::to_json(p.dist.net)), out);
    return 0;
  });
}

int cmd_diff(const std::string& a, const std::string& b, const RunConfig& config, std::ostream& out,
             std::ostream& err) {
  return guarded(err, [&] {
    const auto ja = nlohmann::json::parse(read_file(a));
    const auto jb = nlohmann::json::parse(read_file(b));
    const auto d = report::diff(ja, jb);
    emit(config, config.format == OutputFormat::Csv ? report::diff_csv(d) : report::dump(d), out);
    return 0;
  });
}

}  // namespace fvgm::cli
