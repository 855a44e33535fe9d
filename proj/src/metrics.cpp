#include "snrml/metrics.hpp"

#include <cmath>
#include <limits>

namespace snrml {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b,
                         const char* what) {
  if (a.size() != b.size()) {
    throw Error(ErrorCategory::Dimension,
                std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw Error(ErrorCategory::Dimension, std::string(what) + ": empty vectors");
}

struct VariancePair {
  double signal;
  double noise;
};

VariancePair pair_variances(AnchoredPair pair, VarianceMode mode) {
  require_same_length(pair.anchor, pair.compared, "snr");
  Vector noise(pair.anchor.size());
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = pair.compared[i] - pair.anchor[i];
  const double signal = variance(pair.anchor, mode);
  if (!(signal > 0.0)) {
    throw Error(ErrorCategory::Degenerate, "snr: anchor has zero variance");
  }
  return {signal, variance(noise, mode)};
}

}  // namespace

double snr(AnchoredPair pair, VarianceMode mode) {
  const auto v = pair_variances(pair, mode);
  if (v.noise == 0.0) return std::numeric_limits<double>::infinity();
  return v.signal / v.noise;
}

double snr_distance(AnchoredPair pair, VarianceMode mode) {
  const auto v = pair_variances(pair, mode);
  return v.noise / v.signal;
}

double snr_similarity(AnchoredPair pair, VarianceMode mode) {
  const double d = snr_distance(pair, mode);
  if (d == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (d * d);
}

double squared_euclidean_distance(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "euclidean_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_euclidean_distance(a, b));
}

double correlation_from_snr_distance(double d_s) {
  if (!(d_s >= 0.0)) {
    throw Error(ErrorCategory::Parameter, "correlation_from_snr_distance: d_s must be >= 0");
  }
  return 1.0 / std::sqrt(1.0 + d_s);
}

}  // namespace snrml
