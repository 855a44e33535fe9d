// snrml command-line driver: fig1, train, eval, compare, hash-eval, gradcheck.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "snrml/experiment.hpp"
#include "snrml/gradcheck.hpp"

namespace {

using namespace snrml;

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumeric = 4 };

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return kConfig;
    case ErrorCategory::Data: return kData;
    case ErrorCategory::Numeric:
    case ErrorCategory::Degenerate: return kNumeric;
    default: return kOther;
  }
}

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCategory::Data, "cannot write " + path.string());
  f << text;
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::Data, "cannot create output directory " + dir);
}

void print_summary(const ExperimentResult& r) {
  const auto& m = r.metrics;
  std::cout << std::setprecision(6);
  if (!r.trace.epoch_loss.empty() || r.command == "train") {
    std::cout << "loss: initial " << r.trace.initial_loss << " final " << r.trace.final_loss()
              << " (" << r.trace.steps << " steps)\n";
  }
  for (const auto& w : r.trace.warnings) std::cout << "warning: " << w << '\n';
  for (const auto& [k, v] : m.recall) std::cout << "recall@" << k << ": " << v << '\n';
  std::cout << "map@" << m.map_t << ": " << m.map << '\n';
  if (m.f1) std::cout << "f1: " << *m.f1 << "\nnmi: " << *m.nmi << '\n';
  std::cout << "intra/inter: " << m.intra_distance << " / " << m.inter_distance << '\n';
  if (m.hashing) {
    std::cout << "hamming map: " << m.hashing->map << '\n'
              << "hamming intra/inter: " << m.hashing->intra << " / " << m.hashing->inter << '\n';
  }
}

int run_fig1(std::size_t dim, std::size_t trials, const std::vector<double>& sigma2,
             std::uint64_t seed, const std::string& out_dir) {
  const auto rows = run_fig1_experiment(dim, sigma2, trials, seed);
  const std::string csv = fig1_csv(rows);
  if (out_dir.empty()) {
    std::cout << csv;
  } else {
    make_dir(out_dir);
    write_file(std::filesystem::path(out_dir) / "fig1.csv", csv);
  }
  return kOk;
}

int run_train(const Common& c, bool hashing) {
  ExperimentConfig cfg = load(c);
  if (hashing) cfg.eval.hashing = true;
  ExperimentResult r = run_experiment(cfg);
  if (hashing) r.command = "hash-eval";
  write_experiment_outputs(r, c.out_dir);
  print_summary(r);
  return kOk;
}

int run_eval(const Common& c, const std::string& model_path) {
  const ExperimentConfig cfg = load(c);
  const ExperimentResult r = evaluate_experiment(cfg, load_checkpoint(model_path));
  make_dir(c.out_dir);
  write_file(std::filesystem::path(c.out_dir) / "report.json", report_json(r).dump(2) + "\n");
  print_summary(r);
  return kOk;
}

int run_compare(const Common& c, std::vector<std::uint64_t> seeds, std::size_t runs) {
  const ExperimentConfig cfg = load(c);
  if (seeds.empty()) {
    for (std::size_t i = 0; i < runs; ++i) seeds.push_back(cfg.seed + i);
  }
  const auto rows = compare_metrics(cfg, seeds);
  make_dir(c.out_dir);
  const Json j = comparison_json(rows);
  write_file(std::filesystem::path(c.out_dir) / "comparison.json", j.dump(2) + "\n");
  write_file(std::filesystem::path(c.out_dir) / "comparison.csv", comparison_csv(rows));
  std::cout << std::setprecision(6) << "seed  ratio_snr  ratio_euclidean\n";
  for (const auto& row : rows) {
    std::cout << row.seed << "  " << row.snr.spread_ratio() << "  " << row.euclidean.spread_ratio()
              << '\n';
  }
  std::cout << "snr ratio no worse in " << j["snr_ratio_no_worse_count"].get<std::size_t>() << " of "
            << rows.size() << " seeds\n";
  return kOk;
}

int run_gradcheck_verb(std::size_t instances, std::uint64_t seed, double tolerance) {
  GradCheckOptions opts;
  opts.instances = instances;
  SeededRng rng(seed);
  bool ok = true;
  std::cout << std::setprecision(3);
  for (LossKind kind : {LossKind::Contrastive, LossKind::Triplet, LossKind::Lifted, LossKind::Npair}) {
    for (MetricKind metric : {MetricKind::Snr, MetricKind::Euclidean}) {
      for (VarianceMode mode : {VarianceMode::ZeroMeanAssumed, VarianceMode::MeanSubtracted}) {
        if (metric == MetricKind::Euclidean && mode == VarianceMode::MeanSubtracted) continue;
        const auto s = run_gradcheck(kind, metric, mode, opts, rng);
        const bool pass = s.max_rel_error < tolerance;
        ok = ok && pass;
        std::cout << (pass ? "ok   " : "FAIL ") << to_string(kind) << ' ' << to_string(metric);
        if (metric == MetricKind::Snr) std::cout << ' ' << to_string(mode);
        std::cout << "  max_rel_error " << s.max_rel_error << "  rejected " << s.rejected_near_kink
                  << '\n';
      }
    }
  }
  return ok ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SNR-distance metric learning experiments"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", common.config_path, "experiment config file");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "override the config seed");
    sub->add_option("--out", common.out_dir, "output directory")->required();
  };

  std::size_t dim = 32, trials = 10000;
  std::vector<double> sigma2{0.2, 0.5, 1.0, 2.0};
  std::uint64_t fig1_seed = 1;
  std::string fig1_out;
  auto* fig1 = app.add_subcommand("fig1", "Monte-Carlo SNR distance versus noise variance");
  fig1->add_option("--dim", dim, "signal dimension")->capture_default_str();
  fig1->add_option("--trials", trials, "trials per noise level")->capture_default_str();
  fig1->add_option("--sigma2", sigma2, "noise variances")->delimiter(',');
  fig1->add_option("--seed", fig1_seed)->capture_default_str();
  fig1->add_option("--out", fig1_out, "directory for fig1.csv (stdout when omitted)");

  auto* train = app.add_subcommand("train", "train and evaluate");
  add_common(train, true);
  auto* hash = app.add_subcommand("hash-eval", "train, quantize to binary codes, Hamming ranking");
  add_common(hash, true);

  std::string model_path;
  auto* eval = app.add_subcommand("eval", "evaluate a saved model");
  add_common(eval, true);
  eval->add_option("--model", model_path, "checkpoint from train")->required()->check(CLI::ExistingFile);

  std::vector<std::uint64_t> seeds;
  std::size_t runs = 10;
  auto* compare = app.add_subcommand("compare", "SNR versus Euclidean with matched seeds");
  add_common(compare, true);
  compare->add_option("--seeds", seeds, "explicit seed list")->delimiter(',');
  compare->add_option("--runs", runs, "consecutive seeds from the config seed")->capture_default_str();

  std::size_t instances = 100;
  std::uint64_t grad_seed = 1;
  double tolerance = 1e-5;
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every loss");
  grad->add_option("--instances", instances)->capture_default_str();
  grad->add_option("--seed", grad_seed)->capture_default_str();
  grad->add_option("--tolerance", tolerance)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kOther;
  }

  try {
    if (*fig1) return run_fig1(dim, trials, sigma2, fig1_seed, fig1_out);
    if (*train) return run_train(common, false);
    if (*hash) return run_train(common, true);
    if (*eval) return run_eval(common, model_path);
    if (*compare) return run_compare(common, seeds, runs);
    if (*grad) return run_gradcheck_verb(instances, grad_seed, tolerance);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.category()) << "): " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
