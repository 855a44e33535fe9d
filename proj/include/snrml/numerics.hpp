#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

#include "snrml/error.hpp"

namespace snrml {

/// An M-dimensional real feature vector.
using Vector = std::vector<double>;

/// Which variance formula a distance computation uses.
///
/// MeanSubtracted is the textbook population variance, sum((v - mean)^2) / M.
/// ZeroMeanAssumed drops the mean, sum(v^2) / M, which makes the SNR distance
/// exactly a ratio of squared Euclidean norms.
enum class VarianceMode { MeanSubtracted, ZeroMeanAssumed };

/// Dense row-major matrix. Rows are samples, columns are features.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  void fill(double value);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Throws a Numeric error if any entry is NaN or infinite.
void require_finite(std::span<const double> v, const char* what);

/// Population variance (divide by M) under the given mode.
double variance(std::span<const double> v, VarianceMode mode);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> v);

/// Seeded pseudorandom source with a platform-independent sample stream.
///
/// Raw bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Every derived sampler (uniform, normal, index, shuffle) is
/// implemented here rather than through the <random> distributions, whose
/// algorithms are implementation-defined. Normals use the Marsaglia polar
/// method and cache the second variate.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// i.i.d. draws from N(mean, var).
Vector sample_gaussian(SeededRng& rng, std::size_t dim, double mean, double var);

}  // namespace snrml
