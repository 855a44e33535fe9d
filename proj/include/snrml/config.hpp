#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "snrml/losses.hpp"
#include "snrml/model.hpp"

namespace snrml {

enum class DatasetSource { Blobs, Fig1, Csv };
enum class RankingChoice { Auto, Snr, Euclidean };
enum class EvalProtocol { WithinTest, TestVsTrain };

struct DatasetSpec {
  DatasetSource source = DatasetSource::Blobs;
  // blobs / fig1 generators
  std::size_t classes = 10;
  std::size_t dim = 20;
  std::size_t train_per_class = 50;
  std::size_t test_per_class = 20;
  double separation = 1.0;  // blobs: std of each class-mean coordinate
  double noise = 1.0;       // blobs: within-class std
  double sigma2 = 0.5;      // fig1: noise variance around each class anchor
  // csv
  std::string path;
  std::string label_column = "label";
  bool multi_label = false;
  double train_fraction = 0.7;

  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct EvalSpec {
  std::vector<std::size_t> recall_k = {1, 2, 4, 8};
  std::size_t map_t = 0;  // 0 means the whole gallery
  RankingChoice ranking = RankingChoice::Auto;
  EvalProtocol protocol = EvalProtocol::WithinTest;
  bool hashing = false;
  std::size_t kmeans_iters = 100;
  bool export_embeddings = false;

  friend bool operator==(const EvalSpec&, const EvalSpec&) = default;
};

struct ExperimentConfig {
  LossKind loss_kind = LossKind::Triplet;
  LossConfig loss;
  std::vector<std::size_t> hidden = {64};
  std::size_t embedding = 16;
  double learning_rate = 1e-3;
  std::size_t batch_size = 50;
  std::size_t epochs = 30;
  std::uint64_t seed = 1;
  DatasetSpec dataset;
  EvalSpec eval;

  static constexpr double kMomentum = 0.9;
  static constexpr int kFormatVersion = 1;

  /// Throws a Config error naming the offending key.
  void validate() const;
  TrainConfig train_config() const;
  MetricKind ranking_metric() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Sectioned key = value text. '#' starts a comment. Unknown keys, bad values,
/// and a missing or unsupported `version` are Config errors that carry the
/// line number.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Writes every field; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

std::string_view to_string(DatasetSource source) noexcept;
std::string_view to_string(RankingChoice ranking) noexcept;
std::string_view to_string(EvalProtocol protocol) noexcept;
std::string_view to_string(VarianceMode mode) noexcept;

}  // namespace snrml
