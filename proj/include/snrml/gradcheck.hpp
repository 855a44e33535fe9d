#pragma once

#include <cstddef>
#include <functional>

#include "snrml/losses.hpp"
#include "snrml/numerics.hpp"

namespace snrml {

enum class Stencil { ThreePoint, FivePoint };

/// Central difference quotient of f for every entry of `at`. ThreePoint is
/// (f(x+e) - f(x-e)) / 2e; FivePoint is the fourth-order
/// (8(f(x+e) - f(x-e)) - (f(x+2e) - f(x-2e))) / 12e.
Matrix central_difference(const std::function<double(const Matrix&)>& f, const Matrix& at,
                          double step, Stencil stencil = Stencil::ThreePoint);

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor). The floor keeps entries that
/// sit below finite-difference resolution from dominating; it defaults to
/// 1e-5 of the largest analytic entry.
double max_relative_error(const Matrix& analytic, const Matrix& numeric, double floor = -1.0);

struct GradCheckSummary {
  LossKind kind = LossKind::Contrastive;
  MetricKind metric = MetricKind::Snr;
  VarianceMode mode = VarianceMode::ZeroMeanAssumed;
  std::size_t instances = 0;
  /// Draws rejected for lying within `kink_tolerance` of a kink, or with a
  /// stencil point on the other side of one.
  std::size_t rejected_near_kink = 0;
  double max_rel_error = 0.0;
};

struct GradCheckOptions {
  std::size_t instances = 100;
  std::size_t min_dim = 4, max_dim = 32;
  std::size_t min_batch = 4, max_batch = 16;
  double step = 5e-5;  // five-point reach 2 * step matches the kink exclusion radius
  Stencil stencil = Stencil::FivePoint;
  double kink_tolerance = 1e-4;
  double regularizer_weight = 0.01;
};

/// A random labeled batch on which `kind` is minable. Embeddings are
/// N(0, 1/M) so Euclidean distances land near the sampled margin.
LabeledBatch random_loss_instance(LossKind kind, std::size_t dim, std::size_t batch,
                                  SeededRng& rng);

/// Runs `opts.instances` random finite-difference checks of evaluate_loss.
GradCheckSummary run_gradcheck(LossKind kind, MetricKind metric, VarianceMode mode,
                               const GradCheckOptions& opts, SeededRng& rng);

}  // namespace snrml
