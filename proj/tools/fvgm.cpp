#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fvgm/dataset.hpp"
#include "fvgm/error.hpp"
#include "fvgm/pipeline.hpp"

namespace {

using fvgm::cli::OutputFormat;
using fvgm::cli::RunConfig;

struct Flags {
  RunConfig config;
  std::vector<std::string> epsilons;
  std::string bins = "auto";
  std::string multiplier = "auto";
  std::string format = "json";
  std::string group_mode = "auto";
};

void add_common(CLI::App* cmd, Flags& f) {
  auto& c = f.config;
  cmd->add_option("--classifier", c.classifier_path, "Linear classifier JSON");
  cmd->add_option("--data", c.data_path, "Dataset CSV with a header row");
  cmd->add_option("--label", c.label, "Label column (enables equalized odds)");
  cmd->add_option("--sensitive", c.sensitive, "Sensitive feature names (overrides roles in the classifier)")
      ->delimiter(',');
  cmd->add_option("--bins", f.bins, "Bins per continuous feature, or auto");
  cmd->add_option("--multiplier", f.multiplier, "Quantization multiplier, or auto");
  cmd->add_option("--bn", c.bn_path, "Bayesian network JSON to use as the feature law");
  cmd->add_flag("--learn-bn", c.learn_bn, "Learn the network from the data");
  cmd->add_option("--smoothing", c.smoothing, "Additive smoothing for probability estimates");
  cmd->add_option("--max-parents", c.max_parents, "Parent cap for structure learning");
  cmd->add_option("--restarts", c.restarts, "Random restarts for structure learning");
  cmd->add_option("--epsilon", f.epsilons, "metric=value, repeatable (di, sp, eo, pcf)");
  cmd->add_option("--mediators", c.mediators, "Mediator features for path-specific causal fairness")
      ->delimiter(',');
  cmd->add_option("--seed", c.seed, "Seed for tuning splits and search restarts");
  cmd->add_option("--out", c.out, "Output file (default stdout)");
  cmd->add_option("--format", f.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--group-mode", f.group_mode, "auto, quantifier or enumerate")
      ->check(CLI::IsMember({"auto", "quantifier", "enumerate"}));
  cmd->add_flag("--timing", c.timing, "Include wall-clock times in the report");
}

template <class T>
std::optional<T> auto_or(const std::string& text, const char* flag) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size() || v < 1) throw std::invalid_argument(text);
    return static_cast<T>(v);
  } catch (const std::exception&) {
    throw fvgm::InputError(std::string(flag) + " must be a positive integer or auto");
  }
}

void finish(Flags& f) {
  auto& c = f.config;
  c.bins = auto_or<std::size_t>(f.bins, "--bins");
  c.multiplier = auto_or<std::int64_t>(f.multiplier, "--multiplier");
  c.format = f.format == "csv" ? OutputFormat::Csv : OutputFormat::Json;
  c.group_mode = f.group_mode == "quantifier"  ? fvgm::metrics::GroupMode::Quantifier
                 : f.group_mode == "enumerate" ? fvgm::metrics::GroupMode::Enumerate
                                               : fvgm::metrics::GroupMode::Auto;
  for (const auto& e : f.epsilons) {
    const auto eq = e.find('=');
    if (eq == std::string::npos) throw fvgm::InputError("--epsilon expects metric=value, got '" + e + "'");
    const auto metric = fvgm::metrics::to_string(fvgm::metrics::parse_metric(e.substr(0, eq)));
    double v = 0.0;
    try {
      v = std::stod(e.substr(eq + 1));
    } catch (const std::exception&) {
      throw fvgm::InputError("--epsilon value for " + metric + " is not a number");
    }
    if (!(v >= 0.0 && v <= 1.0)) throw fvgm::InputError("--epsilon for " + metric + " must lie in [0,1]");
    c.epsilons[metric] = v;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness verification of linear classifiers over Boolean feature distributions"};
  app.require_subcommand(1);

  Flags verify_f, fif_f, learn_f, bench_f, diff_f;
  auto* verify = app.add_subcommand("verify", "Compute DI, SP, EO and PCF and check epsilon bounds");
  add_common(verify, verify_f);

  auto* fif = app.add_subcommand("fif", "Fairness influence of each feature on a group's PPV");
  add_common(fif, fif_f);
  fif->add_option("--group", fif_f.config.group, "Compound group such as race=b,sex=1, or all");
  fif->add_option("--subset", fif_f.config.subset, "Feature subset to ablate jointly")->delimiter(',');

  auto* learn = app.add_subcommand("learn-bn", "Learn and fit a network over the classifier's Boolean features");
  add_common(learn, learn_f);

  auto* bench = app.add_subcommand("bench", "Synthetic Gaussian benchmarks against the analytic DI");
  std::string spec_path;
  std::vector<std::size_t> n_values;
  fvgm::cli::BenchSpec spec;
  bench->add_option("--spec", spec_path, "Benchmark spec JSON");
  bench->add_option("--n", n_values, "Feature counts including the sensitive one")->delimiter(',');
  auto* trials_opt = bench->add_option("--trials", spec.trials, "Trials per feature count");
  auto* samples_opt = bench->add_option("--samples", spec.samples, "Rows per trial");
  auto* seed_opt = bench->add_option("--seed", spec.seed, "Master seed; trial i uses seed + i");
  bench->add_option("--bins", bench_f.bins, "Bins per feature, or auto");
  bench->add_option("--multiplier", bench_f.multiplier, "Quantization multiplier, or auto");
  bench->add_option("--out", bench_f.config.out, "Output file (default stdout)");
  bench->add_option("--format", bench_f.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  bench->add_flag("--timing", spec.timing, "Include per-trial wall-clock times");

  auto* diff = app.add_subcommand("diff", "Compare the metrics of two verify reports");
  std::string diff_a, diff_b;
  diff->add_option("a", diff_a, "First report")->required();
  diff->add_option("b", diff_b, "Second report")->required();
  diff->add_option("--out", diff_f.config.out, "Output file (default stdout)");
  diff->add_option("--format", diff_f.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (verify->parsed()) {
      finish(verify_f);
      return fvgm::cli::cmd_verify(verify_f.config, std::cout, std::cerr);
    }
    if (fif->parsed()) {
      finish(fif_f);
      return fvgm::cli::cmd_fif(fif_f.config, std::cout, std::cerr);
    }
    if (learn->parsed()) {
      finish(learn_f);
      return fvgm::cli::cmd_learn_bn(learn_f.config, std::cout, std::cerr);
    }
    if (bench->parsed()) {
      finish(bench_f);
      if (!spec_path.empty()) {
        auto from_file = fvgm::cli::BenchSpec::from_json(nlohmann::json::parse(fvgm::read_file(spec_path)));
        if (trials_opt->count()) from_file.trials = spec.trials;
        if (samples_opt->count()) from_file.samples = spec.samples;
        if (seed_opt->count()) from_file.seed = spec.seed;
        from_file.timing = spec.timing;
        spec = from_file;
      }
      if (!n_values.empty()) spec.n_values = n_values;
      if (bench_f.config.bins) spec.bins = bench_f.config.bins;
      if (bench_f.config.multiplier) spec.multiplier = bench_f.config.multiplier;
      return fvgm::cli::cmd_bench(spec, bench_f.config, std::cout, std::cerr);
    }
    if (diff->parsed()) {
      finish(diff_f);
      return fvgm::cli::cmd_diff(diff_a, diff_b, diff_f.config, std::cout, std::cerr);
    }
  } catch (const fvgm::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
