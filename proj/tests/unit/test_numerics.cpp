#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "snrml/error.hpp"
#include "snrml/numerics.hpp"

using namespace snrml;

namespace {

ErrorCategory category_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.category();
  }
  FAIL("expected an snrml::Error");
  return ErrorCategory::State;
}

}  // namespace

TEST_CASE("variance examples") {
  const Vector a{1.0, -1.0};
  CHECK(variance(a, VarianceMode::MeanSubtracted) == doctest::Approx(1.0).epsilon(1e-15));
  const Vector c(7, 3.25);
  CHECK(variance(c, VarianceMode::MeanSubtracted) == 0.0);
  const Vector b{1.0, 2.0, 3.0};
  CHECK(variance(b, VarianceMode::MeanSubtracted) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(variance(b, VarianceMode::ZeroMeanAssumed) == doctest::Approx(14.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("variance errors") {
  CHECK(category_of([] { variance(Vector{}, VarianceMode::MeanSubtracted); }) ==
        ErrorCategory::Dimension);
  const Vector bad{1.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK(category_of([&] { variance(bad, VarianceMode::ZeroMeanAssumed); }) ==
        ErrorCategory::Numeric);
  const Vector inf{std::numeric_limits<double>::infinity()};
  CHECK(category_of([&] { variance(inf, VarianceMode::MeanSubtracted); }) ==
        ErrorCategory::Numeric);
}

TEST_CASE("variance properties on random vectors") {
  SeededRng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 1 + rng.uniform_index(64);
    Vector v(m);
    for (double& x : v) x = 3.0 * rng.normal() + rng.uniform();
    const double base = variance(v, VarianceMode::MeanSubtracted);
    const double zero_mean = variance(v, VarianceMode::ZeroMeanAssumed);
    CHECK(base == doctest::Approx(oracle::var(v, VarianceMode::MeanSubtracted)).epsilon(1e-12));
    CHECK(zero_mean == doctest::Approx(oracle::var(v, VarianceMode::ZeroMeanAssumed)).epsilon(1e-12));
    CHECK(zero_mean >= base);

    const double shift = 20.0 * (rng.uniform() - 0.5);
    Vector shifted = v;
    for (double& x : shifted) x += shift;
    const double after = variance(shifted, VarianceMode::MeanSubtracted);
    CHECK(std::abs(after - base) <= 1e-12 * std::max(base, 1e-300) + 1e-15 * shift * shift);

    const double k = 0.1 + 5.0 * rng.uniform();
    Vector scaled = v;
    for (double& x : scaled) x *= k;
    for (auto mode : {VarianceMode::MeanSubtracted, VarianceMode::ZeroMeanAssumed}) {
      const double expect = k * k * variance(v, mode);
      CHECK(std::abs(variance(scaled, mode) - expect) <= 1e-12 * expect + 1e-300);
    }
  }
}

TEST_CASE("variance keeps shift invariance for a large offset") {
  const Vector v{1e8 + 1.0, 1e8 - 1.0, 1e8 + 1.0, 1e8 - 1.0};
  CHECK(variance(v, VarianceMode::MeanSubtracted) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sample_gaussian") {
  SeededRng rng(5);
  const Vector z = sample_gaussian(rng, 9, 0.0, 0.0);
  CHECK(z == Vector(9, 0.0));

  const Vector a = sample_gaussian(rng, 100000, 0.0, 1.0);
  double mean = 0.0;
  for (double x : a) mean += x;
  mean /= static_cast<double>(a.size());
  CHECK(std::abs(mean) < 0.02);

  const Vector b = sample_gaussian(rng, 100000, 0.0, 2.0);
  CHECK(variance(b, VarianceMode::MeanSubtracted) == doctest::Approx(2.0).epsilon(0.025));

  const Vector c = sample_gaussian(rng, 100000, 3.0, 0.25);
  double mc = 0.0;
  for (double x : c) mc += x;
  CHECK(mc / 100000.0 == doctest::Approx(3.0).epsilon(0.003));

  CHECK(category_of([&] { sample_gaussian(rng, 4, 0.0, -1.0); }) == ErrorCategory::Parameter);
}

TEST_CASE("SeededRng determinism and ranges") {
  SeededRng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs = differs || x != c.next_u64();
  }
  CHECK(differs);
  SeededRng r(1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    ++counts[r.uniform_index(7)];
  }
  for (int n : counts) CHECK(std::abs(n - 10000) < 500);

  std::vector<int> items{0, 1, 2, 3, 4, 5, 6, 7};
  SeededRng s1(9), s2(9);
  auto i1 = items, i2 = items;
  s1.shuffle(i1);
  s2.shuffle(i2);
  CHECK(i1 == i2);
  std::sort(i1.begin(), i1.end());
  CHECK(i1 == items);
}

TEST_CASE("Matrix basics") {
  Matrix m{{1, 2, 3}, {4, 5, 6}};
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 6);
  CHECK(m.row(1)[0] == 4);
  CHECK(Matrix::from_rows({{1, 2, 3}, {4, 5, 6}}) == m);
  CHECK(dot(m.row(0), m.row(1)) == 32);
  CHECK(squared_norm(m.row(0)) == 14);
  CHECK(category_of([&] { dot(m.row(0), Vector{1.0}); }) == ErrorCategory::Dimension);
}
