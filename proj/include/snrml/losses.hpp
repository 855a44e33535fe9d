#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string_view>

#include "snrml/mining.hpp"
#include "snrml/numerics.hpp"

namespace snrml {

enum class MetricKind { Snr, Euclidean };
enum class LossKind { Contrastive, Triplet, Lifted, Npair };

/// How the triplet hinge sum is normalized: by every valid triplet, or only by
/// the triplets whose hinge is active.
enum class TripletAveraging { AllValid, ActiveOnly };

std::string_view to_string(MetricKind kind) noexcept;
std::string_view to_string(LossKind kind) noexcept;
std::string_view to_string(TripletAveraging averaging) noexcept;
MetricKind parse_metric_kind(std::string_view text);
LossKind parse_loss_kind(std::string_view text);
TripletAveraging parse_triplet_averaging(std::string_view text);

struct LossConfig {
  MetricKind metric = MetricKind::Snr;
  double margin = 1.0;              // alpha; unused by the N-pair loss
  double lifted_scale = 1.0;        // beta; lifted loss only
  double regularizer_weight = 0.01; // lambda, applied once to the unweighted regularizer
  VarianceMode variance_mode = VarianceMode::ZeroMeanAssumed;
  /// SNR pairs are anchor-sensitive, so both (i, j) and (j, i) are mined by
  /// default. Euclidean losses always use unordered pairs.
  bool ordered_pairs = true;
  TripletAveraging triplet_averaging = TripletAveraging::AllValid;
  /// Upper bound on the SNR similarity used by the N-pair loss.
  double similarity_cap = 1e6;

  void validate() const;

  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

/// Loss value and dJ/dh for every row of the input embedding matrix.
///
/// `positive_term` and `negative_term` are the structural parts of the loss:
///   contrastive: sum of positive distances, sum of active negative hinges
///   lifted:      positive-distance and hardest-negative parts of the active J_ij
///   triplet:     mean positive distance, mean negative distance (diagnostic)
///   N-pair:      mean positive similarity, mean negative similarity (diagnostic)
/// `structure` is the loss without the regularizer, so
/// value == structure + lambda * regularizer.
struct LossReport {
  double value = 0.0;
  Matrix gradients;
  double structure = 0.0;
  double positive_term = 0.0;
  double negative_term = 0.0;
  double regularizer = 0.0;
  std::size_t terms = 0;
  std::size_t active_terms = 0;
  std::size_t clamped_similarities = 0;
  /// Smallest distance from any hinge, max, or absolute-value argument to its
  /// kink. Finite-difference checks are only meaningful when this exceeds the
  /// step size by a wide margin.
  double kink_margin = std::numeric_limits<double>::infinity();
  /// Hash of which side of every kink the batch sits on (hinge signs, max
  /// winners, regularizer signs). Equal patterns at two nearby points mean no
  /// kink lies between them.
  std::uint64_t kink_pattern = 0;
};

/// Mean absolute feature sum, (1/N) sum_i |sum_m h_im|. No lambda factor.
double regularizer(const Matrix& embeddings);

LossReport contrastive_loss(const Matrix& embeddings, const PairSets& pairs,
                            const LossConfig& cfg);
LossReport triplet_loss(const Matrix& embeddings, const std::vector<TripletIndex>& triplets,
                        const LossConfig& cfg);
LossReport lifted_loss(const Matrix& embeddings, const PairSets& pairs, const LossConfig& cfg);
LossReport lifted_loss(const LabeledBatch& batch, const LossConfig& cfg);
LossReport npair_loss(const Matrix& embeddings, const NpairTuplets& tuplets,
                      const LossConfig& cfg);

/// Mines the structure `kind` needs from `batch` and evaluates the loss.
LossReport evaluate_loss(LossKind kind, const LabeledBatch& batch, const LossConfig& cfg);

/// Analytic dJ/dh for every embedding of `batch`.
inline Matrix loss_gradient(LossKind kind, const LabeledBatch& batch, const LossConfig& cfg) {
  return evaluate_loss(kind, batch, cfg).gradients;
}

/// Pair orientation used when mining pairs for `cfg`.
inline bool uses_ordered_pairs(const LossConfig& cfg) {
  return cfg.metric == MetricKind::Snr && cfg.ordered_pairs;
}

}  // namespace snrml
