#include "snrml/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace snrml {

Matrix central_difference(const std::function<double(const Matrix&)>& f, const Matrix& at,
                          double step, Stencil stencil) {
  Matrix probe = at;
  Matrix out(at.rows(), at.cols());
  auto p = probe.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    auto at_offset = [&](double offset) {
      p[i] = saved + offset;
      return f(probe);
    };
    if (stencil == Stencil::ThreePoint) {
      out.data()[i] = (at_offset(step) - at_offset(-step)) / (2.0 * step);
    } else {
      out.data()[i] = (8.0 * (at_offset(step) - at_offset(-step)) -
                       (at_offset(2.0 * step) - at_offset(-2.0 * step))) /
                      (12.0 * step);
    }
    p[i] = saved;
  }
  return out;
}

double max_relative_error(const Matrix& analytic, const Matrix& numeric, double floor) {
  if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols()) {
    throw Error(ErrorCategory::Dimension, "max_relative_error: shape mismatch");
  }
  auto a = analytic.data();
  auto n = numeric.data();
  if (floor < 0.0) {
    double scale = 0.0;
    for (double x : a) scale = std::max(scale, std::abs(x));
    floor = std::max(1e-5 * scale, 1e-300);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(n[i]), floor});
    worst = std::max(worst, std::abs(a[i] - n[i]) / denom);
  }
  return worst;
}

LabeledBatch random_loss_instance(LossKind kind, std::size_t dim, std::size_t batch,
                                  SeededRng& rng) {
  if (kind == LossKind::Npair && batch % 2 != 0) ++batch;
  const std::size_t classes = std::max<std::size_t>(2, batch / 2);
  std::vector<int> labels(batch);
  for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i % classes);
  rng.shuffle(labels);
  Matrix h(batch, dim);
  const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& x : h.data()) x = sd * rng.normal();
  return make_single_label_batch(std::move(h), labels);
}

GradCheckSummary run_gradcheck(LossKind kind, MetricKind metric, VarianceMode mode,
                               const GradCheckOptions& opts, SeededRng& rng) {
  GradCheckSummary s;
  s.kind = kind;
  s.metric = metric;
  s.mode = mode;
  auto pick = [&](std::size_t lo, std::size_t hi) { return lo + rng.uniform_index(hi - lo + 1); };
  while (s.instances < opts.instances) {
    const std::size_t dim = pick(opts.min_dim, opts.max_dim);
    const std::size_t batch = pick(opts.min_batch, opts.max_batch);
    LossConfig cfg;
    cfg.metric = metric;
    cfg.variance_mode = mode;
    cfg.margin = 0.5 + 2.0 * rng.uniform();
    cfg.lifted_scale = 0.5 + 1.5 * rng.uniform();
    cfg.regularizer_weight = opts.regularizer_weight;
    LabeledBatch inst = random_loss_instance(kind, dim, batch, rng);

    const LossReport report = evaluate_loss(kind, inst, cfg);
    if (report.kink_margin < opts.kink_tolerance) {
      ++s.rejected_near_kink;
      continue;
    }
    // A stencil point on the far side of a kink means the instance is within
    // finite-difference reach of it; reject rather than compare.
    bool crossed = false;
    const auto f = [&](const Matrix& h) {
      const LossReport at = evaluate_loss(kind, LabeledBatch{h, inst.labels}, cfg);
      crossed = crossed || at.kink_pattern != report.kink_pattern;
      return at.value;
    };
    const Matrix numeric = central_difference(f, inst.embeddings, opts.step, opts.stencil);
    if (crossed) {
      ++s.rejected_near_kink;
      continue;
    }
    s.max_rel_error = std::max(s.max_rel_error, max_relative_error(report.gradients, numeric));
    ++s.instances;
  }
  return s;
}

}  // namespace snrml
