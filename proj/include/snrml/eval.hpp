#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "snrml/losses.hpp"
#include "snrml/mining.hpp"
#include "snrml/numerics.hpp"

namespace snrml {

/// One query's gallery ordering, nearest first, with a relevance flag per rank.
struct RankedRetrieval {
  std::size_t query = 0;
  std::vector<std::size_t> ranking;
  std::vector<bool> relevant;
};

/// Orders gallery items by ascending distance; equal distances keep ascending
/// gallery index. `skip` (if < distances.size()) is left out of the ranking.
RankedRetrieval rank_by_distance(std::size_t query, std::span<const double> distances,
                                 const LabelSet& query_labels,
                                 const std::vector<LabelSet>& gallery_labels,
                                 std::size_t skip = static_cast<std::size_t>(-1));

/// Every sample queries all the others. With the SNR metric the query is the anchor.
std::vector<RankedRetrieval> rank_leave_one_out(const LabeledBatch& batch, MetricKind metric,
                                                VarianceMode mode);

/// Each query row against the whole gallery.
std::vector<RankedRetrieval> rank_queries(const LabeledBatch& queries, const LabeledBatch& gallery,
                                          MetricKind metric, VarianceMode mode);

/// Fraction of queries with at least one relevant item among the first k.
double recall_at_k(const std::vector<RankedRetrieval>& retrievals, std::size_t k);

/// AP@T = sum_t P(t) rel(t) / sum_t rel(t) over the first T ranks. T larger
/// than the list is truncated to the list; no relevant item gives 0.
double average_precision(const std::vector<bool>& relevant, std::size_t t);

double map_at_t(const std::vector<RankedRetrieval>& retrievals, std::size_t t);

struct ClusteringResult {
  std::vector<int> predicted;
  std::vector<int> truth;
};

/// Pairwise F1: precision and recall of "same cluster" against "same label"
/// over all unordered sample pairs.
double f1_score(const ClusteringResult& clustering);

/// I(C; L) / ((H(C) + H(L)) / 2) with natural logs. Both entropies zero gives 1.
double nmi(const ClusteringResult& clustering);

struct KMeansResult {
  std::vector<int> assignments;
  Matrix centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

/// Lloyd iterations from k-means++ seeding. Stops when assignments stop
/// changing or after max_iters. Empty clusters keep their previous centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, SeededRng& rng, std::size_t max_iters);

/// Mean Euclidean distance over same-label and different-label unordered pairs.
struct ClassSpread {
  double intra = 0.0;
  double inter = 0.0;
  double ratio() const { return intra / inter; }
};

ClassSpread class_spread(const Matrix& embeddings, const std::vector<LabelSet>& labels);

}  // namespace snrml
