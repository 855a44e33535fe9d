#include "snrml/numerics.hpp"

#include <cmath>
#include <string>

namespace snrml {

const char* to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Dimension: return "dimension";
    case ErrorCategory::Numeric: return "numeric";
    case ErrorCategory::Parameter: return "parameter";
    case ErrorCategory::Degenerate: return "degenerate";
    case ErrorCategory::Mining: return "mining";
    case ErrorCategory::State: return "state";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Data: return "data";
  }
  return "unknown";
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw Error(ErrorCategory::Dimension, "Matrix: ragged initializer rows");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols_) {
      throw Error(ErrorCategory::Dimension,
                  "Matrix::from_rows: row " + std::to_string(r) + " has length " +
                      std::to_string(rows[r].size()) + ", expected " +
                      std::to_string(m.cols_));
    }
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void require_finite(std::span<const double> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw Error(ErrorCategory::Numeric, std::string(what) + ": non-finite entry at index " +
                                              std::to_string(i));
    }
  }
}

double variance(std::span<const double> v, VarianceMode mode) {
  if (v.empty()) throw Error(ErrorCategory::Dimension, "variance: empty vector");
  require_finite(v, "variance");
  const double n = static_cast<double>(v.size());
  if (mode == VarianceMode::ZeroMeanAssumed) return squared_norm(v) / n;

  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  // Two-pass with the compensation term; keeps shift invariance near machine precision.
  double sq = 0.0;
  double drift = 0.0;
  for (double x : v) {
    const double d = x - mean;
    sq += d * d;
    drift += d;
  }
  return std::max(0.0, (sq - drift * drift / n) / n);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCategory::Dimension, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double SeededRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t SeededRng::uniform_index(std::size_t n) {
  if (n == 0) throw Error(ErrorCategory::Parameter, "uniform_index: n must be positive");
  const std::uint64_t bound = n;
  // Rejection sampling on the top of the range removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * scale;
  has_spare_ = true;
  return u * scale;
}

Vector sample_gaussian(SeededRng& rng, std::size_t dim, double mean, double var) {
  if (!(var >= 0.0) || !std::isfinite(var)) {
    throw Error(ErrorCategory::Parameter, "sample_gaussian: variance must be finite and >= 0");
  }
  if (!std::isfinite(mean)) throw Error(ErrorCategory::Parameter, "sample_gaussian: bad mean");
  const double sd = std::sqrt(var);
  Vector out(dim);
  for (auto& x : out) x = mean + sd * rng.normal();
  return out;
}

}  // namespace snrml
