#include <doctest.h>

#include "oracles.hpp"
#include "snrml/error.hpp"
#include "snrml/mining.hpp"

using namespace snrml;

namespace {

LabeledBatch batch_of(const std::vector<int>& labels, std::size_t dim = 3) {
  return make_single_label_batch(Matrix(labels.size(), dim, 1.0), labels);
}

std::vector<IndexPair> as_pairs(std::initializer_list<std::pair<std::size_t, std::size_t>> l) {
  std::vector<IndexPair> out;
  for (auto [a, b] : l) out.push_back({a, b});
  return out;
}

bool mining_error(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.category() == ErrorCategory::Mining;
  }
  return false;
}

}  // namespace

TEST_CASE("all_pairs on [A,A,B]") {
  const auto p = all_pairs(batch_of({0, 0, 1}));
  CHECK(p.positives == as_pairs({{0, 1}, {1, 0}}));
  CHECK(p.negatives == as_pairs({{0, 2}, {1, 2}, {2, 0}, {2, 1}}));
  CHECK(p.ordered);
  const auto u = all_pairs(batch_of({0, 0, 1}), false);
  CHECK(u.positives == as_pairs({{0, 1}}));
  CHECK(u.negatives == as_pairs({{0, 2}, {1, 2}}));
  CHECK_FALSE(u.ordered);
}

TEST_CASE("all_pairs degenerate label patterns") {
  CHECK(all_pairs(batch_of({4, 4, 4, 4})).negatives.empty());
  CHECK(all_pairs(batch_of({1, 2, 3, 4})).positives.empty());
}

TEST_CASE("all_valid_triplets") {
  const auto t = all_valid_triplets(batch_of({0, 0, 1}));
  REQUIRE(t.size() == 2);
  CHECK(t[0] == TripletIndex{0, 1, 2});
  CHECK(t[1] == TripletIndex{1, 0, 2});
  CHECK(all_valid_triplets(batch_of({0, 0, 1, 1})).size() == 8);
  CHECK(mining_error([] { all_valid_triplets(batch_of({0, 1, 2})); }));
  CHECK(mining_error([] { all_valid_triplets(batch_of({5, 5, 5})); }));
}

TEST_CASE("build_npair_tuplets") {
  const auto t3 = build_npair_tuplets(batch_of({2, 0, 1, 0, 2, 1}));
  CHECK(t3.classes() == 3);
  CHECK(t3.queries == std::vector<std::size_t>{1, 2, 0});
  CHECK(t3.positives == std::vector<std::size_t>{3, 5, 4});
  const auto t2 = build_npair_tuplets(batch_of({0, 1, 0, 1}));
  CHECK(t2.classes() == 2);
  CHECK(mining_error([] { build_npair_tuplets(batch_of({0, 0, 0, 1, 1})); }));
  CHECK(mining_error([] { build_npair_tuplets(batch_of({0, 0})); }));
}

TEST_CASE("multi-label similarity shares at least one label") {
  LabeledBatch b{Matrix(3, 2, 1.0), {make_label_set({1, 2}), make_label_set({2, 3}), make_label_set({4})}};
  CHECK(b.similar(0, 1));
  CHECK_FALSE(b.similar(0, 2));
  CHECK(make_label_set({3, 1, 3}) == LabelSet{1, 3});
  const auto p = all_pairs(b);
  CHECK(p.positives == as_pairs({{0, 1}, {1, 0}}));
}

TEST_CASE("batch validation") {
  LabeledBatch one{Matrix(1, 2), {LabelSet{0}}};
  CHECK_THROWS_AS(one.validate(), Error);
  LabeledBatch mismatch{Matrix(3, 2), {LabelSet{0}, LabelSet{1}}};
  CHECK_THROWS_AS(mismatch.validate(), Error);
  LabeledBatch empty_label{Matrix(2, 2), {LabelSet{0}, LabelSet{}}};
  CHECK_THROWS_AS(empty_label.validate(), Error);
}

TEST_CASE("mining matches brute-force enumeration") {
  SeededRng rng(71);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(12);
    const bool multi = trial % 3 == 0;
    std::vector<std::vector<int>> raw(n);
    std::vector<LabelSet> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t count = multi ? 1 + rng.uniform_index(2) : 1;
      for (std::size_t c = 0; c < count; ++c) raw[i].push_back(static_cast<int>(rng.uniform_index(4)));
      labels[i] = make_label_set(raw[i]);
    }
    LabeledBatch b{Matrix(n, 2, 1.0), labels};
    for (bool ordered : {true, false}) {
      const auto p = all_pairs(b, ordered);
      const auto o = oracle::pairs(raw, ordered);
      std::vector<IndexPair> pos, neg;
      for (auto [x, y] : o.pos) pos.push_back({x, y});
      for (auto [x, y] : o.neg) neg.push_back({x, y});
      CHECK(p.positives == pos);
      CHECK(p.negatives == neg);
      CHECK(p.positives.size() + p.negatives.size() == (ordered ? n * (n - 1) : n * (n - 1) / 2));
    }
    const auto ot = oracle::triplets(raw);
    if (ot.empty()) {
      CHECK(mining_error([&] { all_valid_triplets(b); }));
    } else {
      const auto t = all_valid_triplets(b);
      REQUIRE(t.size() == ot.size());
      for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(t[i] == TripletIndex{ot[i].a, ot[i].p, ot[i].n});
        CHECK(b.similar(t[i].anchor, t[i].positive));
        CHECK_FALSE(b.similar(t[i].anchor, t[i].negative));
      }
      CHECK(all_valid_triplets(b) == t);
    }
  }
}
