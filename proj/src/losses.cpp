#include "snrml/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "pair_field.hpp"

namespace snrml {

using detail::DistanceForm;
using detail::PairField;

std::string_view to_string(MetricKind kind) noexcept {
  return kind == MetricKind::Snr ? "snr" : "euclidean";
}

std::string_view to_string(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::Contrastive: return "contrastive";
    case LossKind::Triplet: return "triplet";
    case LossKind::Lifted: return "lifted";
    case LossKind::Npair: return "npair";
  }
  return "unknown";
}

std::string_view to_string(TripletAveraging averaging) noexcept {
  return averaging == TripletAveraging::AllValid ? "all" : "active";
}

MetricKind parse_metric_kind(std::string_view text) {
  if (text == "snr") return MetricKind::Snr;
  if (text == "euclidean") return MetricKind::Euclidean;
  throw Error(ErrorCategory::Parameter,
              "unknown metric '" + std::string(text) + "' (expected snr|euclidean)");
}

LossKind parse_loss_kind(std::string_view text) {
  if (text == "contrastive") return LossKind::Contrastive;
  if (text == "triplet") return LossKind::Triplet;
  if (text == "lifted") return LossKind::Lifted;
  if (text == "npair") return LossKind::Npair;
  throw Error(ErrorCategory::Parameter, "unknown loss '" + std::string(text) +
                                            "' (expected contrastive|triplet|lifted|npair)");
}

TripletAveraging parse_triplet_averaging(std::string_view text) {
  if (text == "all") return TripletAveraging::AllValid;
  if (text == "active") return TripletAveraging::ActiveOnly;
  throw Error(ErrorCategory::Parameter,
              "unknown triplet averaging '" + std::string(text) + "' (expected all|active)");
}

void LossConfig::validate() const {
  auto bad = [](const char* what) { throw Error(ErrorCategory::Parameter, what); };
  if (!(margin >= 0.0) || !std::isfinite(margin)) bad("LossConfig: margin must be >= 0");
  if (!(lifted_scale > 0.0) || !std::isfinite(lifted_scale)) {
    bad("LossConfig: lifted scale must be > 0");
  }
  if (!(regularizer_weight >= 0.0) || !std::isfinite(regularizer_weight)) {
    bad("LossConfig: regularizer weight must be >= 0");
  }
  if (!(similarity_cap > 0.0)) bad("LossConfig: similarity cap must be > 0");
}

namespace {

void mix(std::uint64_t& h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
}

struct Regularized {
  double value = 0.0;
  double margin = std::numeric_limits<double>::infinity();
  std::uint64_t pattern = 0;
};

/// Adds lambda * dL_r/dh for the selected rows and returns the unweighted L_r.
Regularized apply_regularizer(const Matrix& h, const std::vector<bool>& used, double lambda,
                              Matrix& grad) {
  std::size_t count = 0;
  for (bool u : used) count += u ? 1 : 0;
  if (count == 0) throw Error(ErrorCategory::Parameter, "regularizer: empty batch");
  Regularized out;
  const double scale = lambda / static_cast<double>(count);
  for (std::size_t i = 0; i < h.rows(); ++i) {
    if (!used[i]) continue;
    double s = 0.0;
    for (double x : h.row(i)) s += x;
    out.value += std::abs(s);
    out.margin = std::min(out.margin, std::abs(s));
    mix(out.pattern, s > 0.0 ? 1 : (s < 0.0 ? 2 : 3));
    if (s == 0.0 || lambda == 0.0) continue;
    const double g = s > 0.0 ? scale : -scale;
    for (double& x : grad.row(i)) x += g;
  }
  out.value /= static_cast<double>(count);
  return out;
}

void finish(LossReport& r, const Matrix& h, const std::vector<bool>& used, const LossConfig& cfg) {
  const auto reg = apply_regularizer(h, used, cfg.regularizer_weight, r.gradients);
  r.regularizer = reg.value;
  mix(r.kink_pattern, r.clamped_similarities);
  if (cfg.regularizer_weight > 0.0) {
    r.kink_margin = std::min(r.kink_margin, reg.margin);
    mix(r.kink_pattern, reg.pattern);
  }
  r.value = r.structure + cfg.regularizer_weight * r.regularizer;
  require_finite(r.gradients.data(), "loss gradient");
  if (!std::isfinite(r.value)) throw Error(ErrorCategory::Numeric, "loss value is not finite");
}

void check_embeddings(const Matrix& h, const char* what) {
  if (h.rows() == 0 || h.cols() == 0) {
    throw Error(ErrorCategory::Dimension, std::string(what) + ": empty embedding matrix");
  }
  require_finite(h.data(), what);
}

void check_index(std::size_t i, const Matrix& h, const char* what) {
  if (i >= h.rows()) {
    throw Error(ErrorCategory::Dimension,
                std::string(what) + ": index " + std::to_string(i) + " out of range");
  }
}

}  // namespace

double regularizer(const Matrix& embeddings) {
  if (embeddings.rows() == 0) throw Error(ErrorCategory::Parameter, "regularizer: empty batch");
  Matrix scratch(embeddings.rows(), embeddings.cols());
  return apply_regularizer(embeddings, std::vector<bool>(embeddings.rows(), true), 0.0, scratch)
      .value;
}

LossReport contrastive_loss(const Matrix& h, const PairSets& pairs, const LossConfig& cfg) {
  cfg.validate();
  check_embeddings(h, "contrastive_loss");
  if (pairs.positives.empty() && pairs.negatives.empty()) {
    throw Error(ErrorCategory::Mining, "contrastive_loss: no pairs");
  }
  const bool snr = cfg.metric == MetricKind::Snr;
  PairField pos(h, snr ? DistanceForm::Snr : DistanceForm::SquaredEuclidean, cfg.variance_mode);
  PairField neg(h, snr ? DistanceForm::Snr : DistanceForm::Euclidean, cfg.variance_mode);

  LossReport r;
  r.gradients = Matrix(h.rows(), h.cols());
  std::vector<bool> used(h.rows(), false);
  for (const auto& p : pairs.positives) {
    check_index(std::max(p.first, p.second), h, "contrastive_loss");
    used[p.first] = used[p.second] = true;
    r.positive_term += pos.value(p.first, p.second);
    pos.add(p.first, p.second, 1.0);
  }
  for (const auto& p : pairs.negatives) {
    check_index(std::max(p.first, p.second), h, "contrastive_loss");
    used[p.first] = used[p.second] = true;
    const double x = cfg.margin - neg.value(p.first, p.second);
    r.kink_margin = std::min({r.kink_margin, std::abs(x), neg.kink_margin(p.first, p.second)});
    mix(r.kink_pattern, x > 0.0);
    if (x > 0.0) {
      r.negative_term += x;
      neg.add(p.first, p.second, -1.0);
      ++r.active_terms;
    }
  }
  r.terms = pairs.positives.size() + pairs.negatives.size();
  r.active_terms += pairs.positives.size();
  r.structure = r.positive_term + r.negative_term;
  pos.backpropagate(r.gradients);
  neg.backpropagate(r.gradients);
  finish(r, h, used, cfg);
  return r;
}

LossReport triplet_loss(const Matrix& h, const std::vector<TripletIndex>& triplets,
                        const LossConfig& cfg) {
  cfg.validate();
  check_embeddings(h, "triplet_loss");
  if (triplets.empty()) throw Error(ErrorCategory::Mining, "triplet_loss: no triplets");
  PairField d(h, cfg.metric == MetricKind::Snr ? DistanceForm::Snr : DistanceForm::SquaredEuclidean,
              cfg.variance_mode);

  LossReport r;
  r.gradients = Matrix(h.rows(), h.cols());
  r.terms = triplets.size();
  std::vector<bool> used(h.rows(), false);
  std::vector<double> hinges(triplets.size());
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    const auto& tr = triplets[t];
    check_index(std::max({tr.anchor, tr.positive, tr.negative}), h, "triplet_loss");
    used[tr.anchor] = used[tr.positive] = used[tr.negative] = true;
    const double dp = d.value(tr.anchor, tr.positive);
    const double dn = d.value(tr.anchor, tr.negative);
    r.positive_term += dp;
    r.negative_term += dn;
    hinges[t] = dp - dn + cfg.margin;
    r.kink_margin = std::min(r.kink_margin, std::abs(hinges[t]));
    mix(r.kink_pattern, hinges[t] > 0.0);
    if (hinges[t] > 0.0) ++r.active_terms;
  }
  r.positive_term /= static_cast<double>(triplets.size());
  r.negative_term /= static_cast<double>(triplets.size());

  const std::size_t denom =
      cfg.triplet_averaging == TripletAveraging::AllValid ? triplets.size() : r.active_terms;
  if (denom > 0) {
    const double w = 1.0 / static_cast<double>(denom);
    for (std::size_t t = 0; t < triplets.size(); ++t) {
      if (hinges[t] <= 0.0) continue;
      r.structure += hinges[t];
      d.add(triplets[t].anchor, triplets[t].positive, w);
      d.add(triplets[t].anchor, triplets[t].negative, -w);
    }
    r.structure *= w;
  }
  d.backpropagate(r.gradients);
  finish(r, h, used, cfg);
  return r;
}

LossReport lifted_loss(const Matrix& h, const PairSets& pairs, const LossConfig& cfg) {
  cfg.validate();
  check_embeddings(h, "lifted_loss");
  if (pairs.positives.empty()) throw Error(ErrorCategory::Mining, "lifted_loss: no positive pairs");
  PairField d(h, cfg.metric == MetricKind::Snr ? DistanceForm::Snr : DistanceForm::Euclidean,
              cfg.variance_mode);

  // Negatives incident to each sample, as (anchor, other). With ordered pairs
  // only those anchored at the sample count; unordered pairs count from either end.
  std::vector<std::vector<std::size_t>> incident(h.rows());
  std::vector<bool> used(h.rows(), false);
  for (const auto& p : pairs.negatives) {
    check_index(std::max(p.first, p.second), h, "lifted_loss");
    used[p.first] = used[p.second] = true;
    incident[p.first].push_back(p.second);
    if (!pairs.ordered) incident[p.second].push_back(p.first);
  }

  LossReport r;
  r.gradients = Matrix(h.rows(), h.cols());
  r.terms = pairs.positives.size();
  const double alpha = cfg.margin;
  const double beta = cfg.lifted_scale;
  const double w = 1.0 / (2.0 * static_cast<double>(pairs.positives.size()));
  for (const auto& p : pairs.positives) {
    check_index(std::max(p.first, p.second), h, "lifted_loss");
    used[p.first] = used[p.second] = true;
    double best = -std::numeric_limits<double>::infinity();
    double runner_up = -std::numeric_limits<double>::infinity();
    std::size_t best_anchor = 0, best_other = 0;
    for (std::size_t endpoint : {p.first, p.second}) {
      for (std::size_t other : incident[endpoint]) {
        const double v = alpha - beta * d.value(endpoint, other);
        r.kink_margin = std::min(r.kink_margin, d.kink_margin(endpoint, other));
        if (v > best) {
          runner_up = best;
          best = v;
          best_anchor = endpoint;
          best_other = other;
        } else if (v > runner_up) {
          runner_up = v;
        }
      }
    }
    const double dp = d.value(p.first, p.second);
    r.kink_margin = std::min(r.kink_margin, d.kink_margin(p.first, p.second));
    if (std::isfinite(runner_up)) r.kink_margin = std::min(r.kink_margin, best - runner_up);
    const double j = best + beta * dp;  // best == -inf when no incident negatives
    if (std::isfinite(j)) r.kink_margin = std::min(r.kink_margin, std::abs(j));
    mix(r.kink_pattern, j > 0.0);
    mix(r.kink_pattern, best_anchor * 1000003u + best_other);
    if (!(j > 0.0)) continue;
    ++r.active_terms;
    r.positive_term += w * beta * dp;
    d.add(p.first, p.second, w * beta);
    if (std::isfinite(best)) {
      r.negative_term += w * best;
      d.add(best_anchor, best_other, -w * beta);
    }
  }
  r.structure = r.positive_term + r.negative_term;
  d.backpropagate(r.gradients);
  finish(r, h, used, cfg);
  return r;
}

LossReport lifted_loss(const LabeledBatch& batch, const LossConfig& cfg) {
  return lifted_loss(batch.embeddings, all_pairs(batch, uses_ordered_pairs(cfg)), cfg);
}

LossReport npair_loss(const Matrix& h, const NpairTuplets& tuplets, const LossConfig& cfg) {
  cfg.validate();
  check_embeddings(h, "npair_loss");
  const std::size_t n = tuplets.classes();
  if (n < 2 || tuplets.positives.size() != n) {
    throw Error(ErrorCategory::Mining, "npair_loss: need at least 2 classes");
  }
  const bool snr = cfg.metric == MetricKind::Snr;
  PairField d(h, snr ? DistanceForm::Snr : DistanceForm::InnerProduct, cfg.variance_mode);

  LossReport r;
  r.gradients = Matrix(h.rows(), h.cols());
  r.terms = n;
  std::vector<bool> used(h.rows(), false);
  for (std::size_t i = 0; i < n; ++i) {
    check_index(std::max(tuplets.queries[i], tuplets.positives[i]), h, "npair_loss");
    used[tuplets.queries[i]] = used[tuplets.positives[i]] = true;
  }

  // S_ij and dS_ij/d(dist) for the query of class i against the positive of class j.
  std::vector<double> sim(n), dsim(n), p(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t q = tuplets.queries[i];
    double neg_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = d.value(q, tuplets.positives[j]);
      if (!snr) {
        sim[j] = v;
        dsim[j] = 1.0;
      } else if (v == 0.0 || 1.0 / (v * v) >= cfg.similarity_cap) {
        sim[j] = cfg.similarity_cap;
        dsim[j] = 0.0;
        ++r.clamped_similarities;
      } else {
        sim[j] = 1.0 / (v * v);
        dsim[j] = -2.0 / (v * v * v);
      }
      if (j != i) neg_sum += sim[j];
    }
    r.positive_term += sim[i];
    r.negative_term += neg_sum / static_cast<double>(n - 1);

    // log(1 + sum_j exp(z_j)), z_j = S_ij - S_ii, evaluated as a shifted log-sum-exp.
    double shift = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) shift = std::max(shift, sim[j] - sim[i]);
    }
    double total = std::exp(-shift);
    for (std::size_t j = 0; j < n; ++j) {
      p[j] = j == i ? 0.0 : std::exp(sim[j] - sim[i] - shift);
      total += p[j];
    }
    const double term = shift + std::log(total);
    r.structure += term;
    if (term > 0.0) ++r.active_terms;

    double p_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      p[j] /= total;
      p_sum += p[j];
      d.add(q, tuplets.positives[j], inv_n * p[j] * dsim[j]);
    }
    d.add(q, tuplets.positives[i], -inv_n * p_sum * dsim[i]);
  }
  r.structure *= inv_n;
  r.positive_term *= inv_n;
  r.negative_term *= inv_n;
  d.backpropagate(r.gradients);
  finish(r, h, used, cfg);
  return r;
}

LossReport evaluate_loss(LossKind kind, const LabeledBatch& batch, const LossConfig& cfg) {
  switch (kind) {
    case LossKind::Contrastive:
      return contrastive_loss(batch.embeddings, all_pairs(batch, uses_ordered_pairs(cfg)), cfg);
    case LossKind::Triplet:
      return triplet_loss(batch.embeddings, all_valid_triplets(batch), cfg);
    case LossKind::Lifted: return lifted_loss(batch, cfg);
    case LossKind::Npair:
      return npair_loss(batch.embeddings, build_npair_tuplets(batch), cfg);
  }
  throw Error(ErrorCategory::Parameter, "evaluate_loss: unknown loss kind");
}

}  // namespace snrml
