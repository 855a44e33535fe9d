#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "snrml/config.hpp"
#include "snrml/dataset.hpp"
#include "snrml/model.hpp"

namespace snrml {

using Json = nlohmann::ordered_json;

struct Fig1Row {
  double sigma2 = 0.0;
  double mean_distance = 0.0;  // mean over trials of per-trial d_S
  double std_distance = 0.0;   // population std over trials
  double pooled_distance = 0.0; // sum of noise variances / sum of anchor variances
};

/// Monte-Carlo SNR distance between anchor ~ N(0, I_dim) and anchor + N(0, sigma2 I),
/// zero-mean variance mode, one row per sigma2.
std::vector<Fig1Row> run_fig1_experiment(std::size_t dim, const std::vector<double>& sigma2_list,
                                         std::size_t trials, std::uint64_t seed);

std::string fig1_csv(const std::vector<Fig1Row>& rows);

struct HashMetrics {
  double map = 0.0;
  std::vector<std::pair<std::size_t, double>> recall;
  double intra = 0.0;
  double inter = 0.0;
};

struct EvalMetrics {
  MetricKind ranking = MetricKind::Snr;
  std::size_t map_t = 0;
  std::vector<std::pair<std::size_t, double>> recall;
  double map = 0.0;
  std::optional<double> f1;   // single-label data only
  std::optional<double> nmi;
  double intra_distance = 0.0;
  double inter_distance = 0.0;
  std::optional<HashMetrics> hashing;

  double spread_ratio() const { return intra_distance / inter_distance; }
  double recall_at(std::size_t k) const;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string command;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t input_dim = 0;
  TrainTrace trace;
  EvalMetrics metrics;
  MlpModel model{std::vector<std::size_t>{1, 1}};
  Matrix test_embeddings;
  Dataset data;
};

/// Seeds for the independent random streams of one experiment.
struct ExperimentSeeds {
  std::uint64_t data, init, train, cluster;
  static ExperimentSeeds derive(std::uint64_t seed);
};

/// Embeds the test split with `model` and computes every configured metric.
EvalMetrics evaluate_model(const MlpModel& model, const Dataset& data,
                           const ExperimentConfig& config, Matrix* test_embeddings = nullptr);

/// Generates or loads the data, trains, and evaluates. epochs == 0 evaluates
/// the freshly initialized model.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Evaluates an existing model on the configured dataset without training.
ExperimentResult evaluate_experiment(const ExperimentConfig& config, const MlpModel& model);

Json metrics_json(const EvalMetrics& metrics);
Json report_json(const ExperimentResult& result);

/// report.json, loss_curve.csv, model.ckpt, plus embeddings.csv and codes.txt
/// when enabled.
void write_experiment_outputs(const ExperimentResult& result, const std::string& out_dir);

struct ComparisonRow {
  std::uint64_t seed = 0;
  EvalMetrics snr;
  EvalMetrics euclidean;
};

/// Same config and seed, trained once per metric.
std::vector<ComparisonRow> compare_metrics(const ExperimentConfig& config,
                                           const std::vector<std::uint64_t>& seeds);
Json comparison_json(const std::vector<ComparisonRow>& rows);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

}  // namespace snrml
