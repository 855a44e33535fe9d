#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "snrml/error.hpp"
#include "snrml/eval.hpp"
#include "snrml/hashing.hpp"

using namespace snrml;

namespace {

BinaryCode code_of(const std::string& bits) {
  std::vector<double> h;
  for (char c : bits) h.push_back(c == '1' ? 1.0 : -1.0);
  return quantize(h);
}

}  // namespace

TEST_CASE("sign quantization") {
  const std::vector<double> h{0.3, -0.2, 0.0};
  const auto c = quantize(h);
  CHECK(c.to_string() == "100");
  CHECK(c.size() == 3);
  CHECK(c.to_signs() == Vector{1.0, -1.0, -1.0});
  CHECK(quantize(std::vector<double>{}).size() == 0);

  // h and -h give complementary codes whenever no coordinate is exactly zero.
  SeededRng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + rng.uniform_index(150)), neg;
    for (double& x : v) x = rng.normal();
    for (double x : v) neg.push_back(-x);
    CHECK(quantize(neg) == quantize(v).complement());
    CHECK(quantize(v).to_string() == [&] {
      std::string s;
      for (int b : oracle::sign_bits(v)) s += b ? '1' : '0';
      return s;
    }());
  }
}

TEST_CASE("hamming distance") {
  CHECK(hamming_distance(code_of("0110"), code_of("0011")) == 2);
  CHECK(hamming_distance(code_of("0110"), code_of("0110")) == 0);
  const auto c = code_of("1011001110001");
  CHECK(hamming_distance(c, c.complement()) == c.size());
  CHECK_THROWS_AS(hamming_distance(code_of("01"), code_of("011")), Error);

  // Counts stay exact across the 64-bit word boundary.
  std::string a(130, '0'), b(130, '0');
  b[0] = b[63] = b[64] = b[129] = '1';
  CHECK(hamming_distance(code_of(a), code_of(b)) == 4);
}

TEST_CASE("hamming distance relates to the sign-vector inner product") {
  SeededRng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.uniform_index(96);
    std::vector<double> x(m), y(m);
    for (double& v : x) v = rng.normal();
    for (double& v : y) v = rng.normal();
    const auto cx = quantize(x), cy = quantize(y);
    const Vector sx = cx.to_signs(), sy = cy.to_signs();
    double dot = 0.0;
    for (std::size_t i = 0; i < m; ++i) dot += sx[i] * sy[i];
    CHECK(static_cast<double>(hamming_distance(cx, cy)) == doctest::Approx((m - dot) / 2.0));
    CHECK(hamming_distance(cx, cy) == oracle::hamming(oracle::sign_bits(x), oracle::sign_bits(y)));
  }
}

TEST_CASE("hamming_rank orders by distance then index") {
  const auto q = code_of("0000");
  const std::vector<BinaryCode> g{code_of("1110"), code_of("1000"), code_of("1100")};
  CHECK(hamming_rank(q, g) == std::vector<std::size_t>{1, 2, 0});
  const std::vector<BinaryCode> tie{code_of("1000"), code_of("0100"), code_of("0000")};
  CHECK(hamming_rank(q, tie) == std::vector<std::size_t>{2, 0, 1});
}

TEST_CASE("hamming ranking and MAP match the oracle") {
  SeededRng rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(12), m = 4 + rng.uniform_index(20);
    Matrix h(n, m);
    for (double& x : h.data()) x = rng.normal();
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back(static_cast<int>(rng.uniform_index(3)));
    const auto codes = quantize_rows(h);
    std::vector<std::vector<int>> bits;
    for (std::size_t i = 0; i < n; ++i) bits.push_back(oracle::sign_bits(oracle::row_of(h, i)));
    const std::size_t q = rng.uniform_index(n);
    CHECK(hamming_rank(codes[q], codes) == oracle::hamming_order(bits[q], bits));

    std::vector<RankedRetrieval> rs;
    double expect = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      RankedRetrieval r;
      std::vector<bool> rel;
      for (std::size_t g : oracle::hamming_order(bits[i], bits)) {
        if (g == i) continue;
        r.ranking.push_back(g);
        rel.push_back(labels[g] == labels[i]);
      }
      r.relevant = rel;
      rs.push_back(r);
      expect += oracle::ap(rel, n);
    }
    CHECK(map_at_t(rs, n) == doctest::Approx(expect / static_cast<double>(n)).epsilon(1e-12));
  }
}

TEST_CASE("hamming spread") {
  const std::vector<BinaryCode> c{code_of("0000"), code_of("0001"), code_of("1111"), code_of("1110")};
  const auto s = hamming_spread(c, {{0}, {0}, {1}, {1}});
  CHECK(s.intra == doctest::Approx(1.0));
  CHECK(s.inter == doctest::Approx((4 + 3 + 3 + 4) / 4.0));
}

TEST_CASE("write_codes format") {
  std::ostringstream out;
  write_codes(out, {code_of("101"), code_of("010")}, {"a", "b"});
  CHECK(out.str() == "a 101\nb 010\n");
  std::ostringstream bad;
  CHECK_THROWS_AS(write_codes(bad, {code_of("1")}, {"a", "b"}), Error);
}
