#include "snrml/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "snrml/metrics.hpp"

namespace snrml {

RankedRetrieval rank_by_distance(std::size_t query, std::span<const double> distances,
                                 const LabelSet& query_labels,
                                 const std::vector<LabelSet>& gallery_labels, std::size_t skip) {
  if (distances.size() != gallery_labels.size()) {
    throw Error(ErrorCategory::Dimension, "rank_by_distance: distance/label count mismatch");
  }
  RankedRetrieval r;
  r.query = query;
  r.ranking.reserve(distances.size());
  for (std::size_t g = 0; g < distances.size(); ++g) {
    if (g != skip) r.ranking.push_back(g);
  }
  std::stable_sort(r.ranking.begin(), r.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return distances[a] < distances[b]; });
  r.relevant.reserve(r.ranking.size());
  for (std::size_t g : r.ranking) r.relevant.push_back(similar(query_labels, gallery_labels[g]));
  return r;
}

namespace {

double metric_distance(std::span<const double> query, std::span<const double> item,
                       MetricKind metric, VarianceMode mode) {
  return metric == MetricKind::Snr ? snr_distance(query, item, mode)
                                   : euclidean_distance(query, item);
}

}  // namespace

std::vector<RankedRetrieval> rank_leave_one_out(const LabeledBatch& batch, MetricKind metric,
                                                VarianceMode mode) {
  batch.validate();
  const std::size_t n = batch.size();
  std::vector<RankedRetrieval> out;
  out.reserve(n);
  std::vector<double> dist(n);
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t g = 0; g < n; ++g) {
      dist[g] = g == q ? 0.0
                       : metric_distance(batch.embeddings.row(q), batch.embeddings.row(g),
                                         metric, mode);
    }
    out.push_back(rank_by_distance(q, dist, batch.labels[q], batch.labels, q));
  }
  return out;
}

std::vector<RankedRetrieval> rank_queries(const LabeledBatch& queries, const LabeledBatch& gallery,
                                          MetricKind metric, VarianceMode mode) {
  if (queries.embeddings.cols() != gallery.embeddings.cols()) {
    throw Error(ErrorCategory::Dimension, "rank_queries: query/gallery dimension mismatch");
  }
  std::vector<RankedRetrieval> out;
  out.reserve(queries.size());
  std::vector<double> dist(gallery.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      dist[g] = metric_distance(queries.embeddings.row(q), gallery.embeddings.row(g), metric, mode);
    }
    out.push_back(rank_by_distance(q, dist, queries.labels[q], gallery.labels));
  }
  return out;
}

double recall_at_k(const std::vector<RankedRetrieval>& retrievals, std::size_t k) {
  if (retrievals.empty()) throw Error(ErrorCategory::Parameter, "recall_at_k: no queries");
  std::size_t hits = 0;
  for (const auto& r : retrievals) {
    if (k < 1 || k > r.relevant.size()) {
      throw Error(ErrorCategory::Parameter, "recall_at_k: K=" + std::to_string(k) +
                                                " outside [1, " +
                                                std::to_string(r.relevant.size()) + "]");
    }
    if (std::find(r.relevant.begin(), r.relevant.begin() + static_cast<std::ptrdiff_t>(k), true) !=
        r.relevant.begin() + static_cast<std::ptrdiff_t>(k)) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(retrievals.size());
}

double average_precision(const std::vector<bool>& relevant, std::size_t t) {
  if (t < 1) throw Error(ErrorCategory::Parameter, "average_precision: T must be >= 1");
  t = std::min(t, relevant.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < t; ++i) {
    if (!relevant[i]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

double map_at_t(const std::vector<RankedRetrieval>& retrievals, std::size_t t) {
  if (retrievals.empty()) throw Error(ErrorCategory::Parameter, "map_at_t: no queries");
  double sum = 0.0;
  for (const auto& r : retrievals) sum += average_precision(r.relevant, t);
  return sum / static_cast<double>(retrievals.size());
}

namespace {

void require_clustering(const ClusteringResult& c, const char* what) {
  if (c.predicted.empty()) throw Error(ErrorCategory::Parameter, std::string(what) + ": empty");
  if (c.predicted.size() != c.truth.size()) {
    throw Error(ErrorCategory::Dimension, std::string(what) + ": predicted/truth size mismatch");
  }
}

double pairs_within(const std::map<int, std::size_t>& counts) {
  double s = 0.0;
  for (const auto& [key, n] : counts) s += 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return s;
}

}  // namespace

double f1_score(const ClusteringResult& c) {
  require_clustering(c, "f1_score");
  std::map<int, std::size_t> clusters, labels;
  std::map<std::pair<int, int>, std::size_t> joint;
  for (std::size_t i = 0; i < c.predicted.size(); ++i) {
    ++clusters[c.predicted[i]];
    ++labels[c.truth[i]];
    ++joint[{c.predicted[i], c.truth[i]}];
  }
  double tp = 0.0;
  for (const auto& [key, n] : joint) tp += 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const double predicted_pos = pairs_within(clusters);
  const double actual_pos = pairs_within(labels);
  if (predicted_pos == 0.0 || actual_pos == 0.0 || tp == 0.0) return 0.0;
  const double p = tp / predicted_pos;
  const double r = tp / actual_pos;
  return 2.0 * p * r / (p + r);
}

double nmi(const ClusteringResult& c) {
  require_clustering(c, "nmi");
  const double n = static_cast<double>(c.predicted.size());
  std::map<int, double> pc, pl;
  std::map<std::pair<int, int>, double> pj;
  for (std::size_t i = 0; i < c.predicted.size(); ++i) {
    pc[c.predicted[i]] += 1.0;
    pl[c.truth[i]] += 1.0;
    pj[{c.predicted[i], c.truth[i]}] += 1.0;
  }
  auto entropy = [n](const std::map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [key, k] : counts) h -= (k / n) * std::log(k / n);
    return h;
  };
  const double hc = entropy(pc);
  const double hl = entropy(pl);
  if (hc == 0.0 && hl == 0.0) return 1.0;
  double mi = 0.0;
  for (const auto& [key, k] : pj) {
    mi += (k / n) * std::log(k * n / (pc[key.first] * pl[key.second]));
  }
  return std::clamp(mi / (0.5 * (hc + hl)), 0.0, 1.0);
}

KMeansResult kmeans(const Matrix& points, std::size_t k, SeededRng& rng, std::size_t max_iters) {
  const std::size_t n = points.rows();
  if (k < 1) throw Error(ErrorCategory::Parameter, "kmeans: k must be >= 1");
  if (k > n) throw Error(ErrorCategory::Parameter, "kmeans: k exceeds the number of points");
  require_finite(points.data(), "kmeans");

  KMeansResult res;
  res.centroids = Matrix(k, points.cols());
  std::vector<bool> chosen(n, false);
  auto place = [&](std::size_t c, std::size_t idx) {
    chosen[idx] = true;
    auto src = points.row(idx);
    std::copy(src.begin(), src.end(), res.centroids.row(c).begin());
  };

  // k-means++ seeding.
  place(0, rng.uniform_index(n));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i],
                            squared_euclidean_distance(points.row(i), res.centroids.row(c - 1)));
      total += nearest[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (nearest[i] == 0.0) continue;
        acc += nearest[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    place(c, pick);
  }

  res.assignments.assign(n, -1);
  for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iters, 1); ++iter) {
    bool changed = false;
    res.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_euclidean_distance(points.row(i), res.centroids.row(c));
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      res.inertia += best_d;
      if (res.assignments[i] != best) {
        res.assignments[i] = best;
        changed = true;
      }
    }
    res.iterations = iter + 1;
    if (!changed) break;

    Matrix sums(k, points.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(res.assignments[i]);
      ++counts[c];
      auto row = points.row(i);
      auto s = sums.row(c);
      for (std::size_t d = 0; d < row.size(); ++d) s[d] += row[d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      auto s = sums.row(c);
      auto dst = res.centroids.row(c);
      for (std::size_t d = 0; d < s.size(); ++d) dst[d] = s[d] / static_cast<double>(counts[c]);
    }
  }
  return res;
}

ClassSpread class_spread(const Matrix& embeddings, const std::vector<LabelSet>& labels) {
  if (embeddings.rows() != labels.size()) {
    throw Error(ErrorCategory::Dimension, "class_spread: label count mismatch");
  }
  double intra = 0.0, inter = 0.0;
  std::size_t n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      const double d = euclidean_distance(embeddings.row(i), embeddings.row(j));
      if (similar(labels[i], labels[j])) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  }
  if (n_intra == 0 || n_inter == 0) {
    throw Error(ErrorCategory::Parameter, "class_spread: need both same- and cross-label pairs");
  }
  return {intra / static_cast<double>(n_intra), inter / static_cast<double>(n_inter)};
}

}  // namespace snrml
