#pragma once

#include <span>

#include "snrml/numerics.hpp"

namespace snrml {

/// A pair of features where `anchor` plays the signal and `compared` the
/// noisy signal. The noise is compared - anchor.
struct AnchoredPair {
  std::span<const double> anchor;
  std::span<const double> compared;
};

/// var(anchor) / var(compared - anchor).
///
/// Returns +infinity when the noise variance is exactly zero (identical pair);
/// snr_distance maps that case to 0. Throws a Degenerate error when the anchor
/// has zero variance under `mode`.
double snr(AnchoredPair pair, VarianceMode mode);

/// var(compared - anchor) / var(anchor). The first member is always the anchor,
/// so the distance is not symmetric.
double snr_distance(AnchoredPair pair, VarianceMode mode);

inline double snr_distance(std::span<const double> anchor, std::span<const double> compared,
                           VarianceMode mode) {
  return snr_distance(AnchoredPair{anchor, compared}, mode);
}

/// 1 / d_S^2, i.e. SNR squared. Identical pairs give +infinity.
double snr_similarity(AnchoredPair pair, VarianceMode mode);

double euclidean_distance(std::span<const double> a, std::span<const double> b);
double squared_euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Correlation of zero-mean signal and signal + independent noise, 1 / sqrt(1 + d_S).
double correlation_from_snr_distance(double d_s);

}  // namespace snrml
