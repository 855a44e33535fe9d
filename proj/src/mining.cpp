#include "snrml/mining.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace snrml {

LabelSet make_label_set(std::vector<int> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

bool similar(const LabelSet& a, const LabelSet& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia == *ib) return true;
    if (*ia < *ib) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return false;
}

bool LabeledBatch::similar(std::size_t i, std::size_t j) const {
  return snrml::similar(labels[i], labels[j]);
}

void LabeledBatch::validate() const {
  if (labels.size() != embeddings.rows()) {
    throw Error(ErrorCategory::Dimension, "LabeledBatch: " + std::to_string(labels.size()) +
                                              " label sets for " +
                                              std::to_string(embeddings.rows()) + " embeddings");
  }
  if (labels.size() < 2) throw Error(ErrorCategory::Mining, "LabeledBatch: need N >= 2");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) {
      throw Error(ErrorCategory::Mining, "LabeledBatch: sample " + std::to_string(i) +
                                             " has an empty label set");
    }
  }
}

LabeledBatch make_single_label_batch(Matrix embeddings, const std::vector<int>& labels) {
  LabeledBatch batch{std::move(embeddings), {}};
  batch.labels.reserve(labels.size());
  for (int l : labels) batch.labels.push_back({l});
  return batch;
}

PairSets all_pairs(const LabeledBatch& batch, bool ordered) {
  batch.validate();
  PairSets out;
  out.ordered = ordered;
  const std::size_t n = batch.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = ordered ? 0 : i + 1; j < n; ++j) {
      if (i == j) continue;
      (batch.similar(i, j) ? out.positives : out.negatives).push_back({i, j});
    }
  }
  return out;
}

std::vector<TripletIndex> all_valid_triplets(const LabeledBatch& batch) {
  batch.validate();
  const std::size_t n = batch.size();
  std::vector<TripletIndex> out;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t p = 0; p < n; ++p) {
      if (p == a || !batch.similar(a, p)) continue;
      for (std::size_t q = 0; q < n; ++q) {
        if (!batch.similar(a, q)) out.push_back({a, p, q});
      }
    }
  }
  if (out.empty()) throw Error(ErrorCategory::Mining, "all_valid_triplets: no valid triplets");
  return out;
}

NpairTuplets build_npair_tuplets(const LabeledBatch& batch) {
  batch.validate();
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.labels[i].size() != 1) {
      throw Error(ErrorCategory::Mining, "build_npair_tuplets: sample " + std::to_string(i) +
                                             " is multi-label");
    }
    by_class[batch.labels[i].front()].push_back(i);
  }
  if (by_class.size() < 2) {
    throw Error(ErrorCategory::Mining, "build_npair_tuplets: need at least 2 classes");
  }
  NpairTuplets out;
  for (const auto& [label, members] : by_class) {
    if (members.size() != 2) {
      throw Error(ErrorCategory::Mining, "build_npair_tuplets: class " + std::to_string(label) +
                                             " has " + std::to_string(members.size()) +
                                             " samples, expected 2");
    }
    out.queries.push_back(members[0]);
    out.positives.push_back(members[1]);
  }
  return out;
}

}  // namespace snrml
