#pragma once

#include <cstddef>
#include <vector>

#include "snrml/numerics.hpp"

namespace snrml {

/// Sorted, duplicate-free set of integer class labels. Single-label data uses
/// one-element sets.
using LabelSet = std::vector<int>;

LabelSet make_label_set(std::vector<int> labels);

/// True when the two label sets share at least one label.
bool similar(const LabelSet& a, const LabelSet& b);

/// Embeddings (one row per sample) with their label sets.
struct LabeledBatch {
  Matrix embeddings;
  std::vector<LabelSet> labels;

  std::size_t size() const noexcept { return labels.size(); }
  bool similar(std::size_t i, std::size_t j) const;
  /// Throws unless N >= 2 and the label count matches the embedding rows.
  void validate() const;
};

LabeledBatch make_single_label_batch(Matrix embeddings, const std::vector<int>& labels);

/// Ordered index pair. For SNR distances `first` is the anchor.
struct IndexPair {
  std::size_t first;
  std::size_t second;
  friend bool operator==(const IndexPair&, const IndexPair&) = default;
  friend auto operator<=>(const IndexPair&, const IndexPair&) = default;
};

struct PairSets {
  std::vector<IndexPair> positives;
  std::vector<IndexPair> negatives;
  /// False when each unordered pair appears once as (i, j) with i < j.
  bool ordered = true;
};

struct TripletIndex {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;
  friend bool operator==(const TripletIndex&, const TripletIndex&) = default;
};

/// One tuplet per class: a query, its positive, and (implicitly) every other
/// class's positive as a negative.
struct NpairTuplets {
  std::vector<std::size_t> queries;
  std::vector<std::size_t> positives;

  std::size_t classes() const noexcept { return queries.size(); }
};

/// Every ordered pair (i, j), i != j, in lexicographic order, split by label
/// similarity. With `ordered == false` only i < j pairs are emitted.
PairSets all_pairs(const LabeledBatch& batch, bool ordered = true);

/// Every (a, p, n) with a != p, similar(a, p), !similar(a, n), lexicographic.
/// Throws a Mining error when there are none.
std::vector<TripletIndex> all_valid_triplets(const LabeledBatch& batch);

/// Requires single-label data with exactly two samples per class and at least
/// two classes. Classes are ordered by label value; within a class the first
/// sample (by index) is the query.
NpairTuplets build_npair_tuplets(const LabeledBatch& batch);

}  // namespace snrml
