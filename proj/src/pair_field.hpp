#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "snrml/metrics.hpp"
#include "snrml/numerics.hpp"

namespace snrml::detail {

enum class DistanceForm { Snr, Euclidean, SquaredEuclidean, InnerProduct };

/// Memoized pairwise distances over the rows of an embedding matrix, plus an
/// accumulator for dJ/dd per ordered pair. backpropagate() turns the
/// accumulated coefficients into dJ/dh in one pass.
class PairField {
 public:
  PairField(const Matrix& h, DistanceForm form, VarianceMode mode)
      : h_(h), form_(form), mode_(mode), n_(h.rows()),
        value_(n_ * n_, std::numeric_limits<double>::quiet_NaN()), coef_(n_ * n_, 0.0) {}

  double value(std::size_t a, std::size_t b) {
    double& slot = value_[a * n_ + b];
    if (std::isnan(slot)) slot = compute(a, b);
    return slot;
  }

  void add(std::size_t a, std::size_t b, double coef) { coef_[a * n_ + b] += coef; }

  /// Distance of the nearest non-differentiable point of the form itself.
  /// Only the plain Euclidean distance has one (at zero).
  double kink_margin(std::size_t a, std::size_t b) {
    return form_ == DistanceForm::Euclidean ? value(a, b)
                                            : std::numeric_limits<double>::infinity();
  }

  void backpropagate(Matrix& grad) const {
    const std::size_t m = h_.cols();
    Vector noise(m), centered_anchor(m);
    for (std::size_t a = 0; a < n_; ++a) {
      for (std::size_t b = 0; b < n_; ++b) {
        const double c = coef_[a * n_ + b];
        if (c == 0.0) continue;
        auto ha = h_.row(a);
        auto hb = h_.row(b);
        auto ga = grad.row(a);
        auto gb = grad.row(b);
        switch (form_) {
          case DistanceForm::Snr: {
            for (std::size_t k = 0; k < m; ++k) {
              noise[k] = hb[k] - ha[k];
              centered_anchor[k] = ha[k];
            }
            if (mode_ == VarianceMode::MeanSubtracted) {
              center(noise);
              center(centered_anchor);
            }
            const double num = squared_norm(noise);
            const double den = squared_norm(centered_anchor);
            // d = num / den; dd/dh_b = 2 n / den; dd/dh_a = -2 n / den - 2 num h_a / den^2.
            const double s_noise = 2.0 * c / den;
            const double s_anchor = 2.0 * c * num / (den * den);
            for (std::size_t k = 0; k < m; ++k) {
              gb[k] += s_noise * noise[k];
              ga[k] -= s_noise * noise[k] + s_anchor * centered_anchor[k];
            }
            break;
          }
          case DistanceForm::SquaredEuclidean:
            for (std::size_t k = 0; k < m; ++k) {
              const double d = 2.0 * c * (ha[k] - hb[k]);
              ga[k] += d;
              gb[k] -= d;
            }
            break;
          case DistanceForm::Euclidean: {
            const double dist = value_[a * n_ + b];
            if (!(dist > 0.0)) break;  // subgradient 0 at coincident points
            for (std::size_t k = 0; k < m; ++k) {
              const double d = c * (ha[k] - hb[k]) / dist;
              ga[k] += d;
              gb[k] -= d;
            }
            break;
          }
          case DistanceForm::InnerProduct:
            for (std::size_t k = 0; k < m; ++k) {
              ga[k] += c * hb[k];
              gb[k] += c * ha[k];
            }
            break;
        }
      }
    }
  }

 private:
  static void center(Vector& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double& x : v) x -= mean;
  }

  double compute(std::size_t a, std::size_t b) const {
    switch (form_) {
      case DistanceForm::Snr: return snr_distance(h_.row(a), h_.row(b), mode_);
      case DistanceForm::Euclidean: return euclidean_distance(h_.row(a), h_.row(b));
      case DistanceForm::SquaredEuclidean:
        return squared_euclidean_distance(h_.row(a), h_.row(b));
      case DistanceForm::InnerProduct: return dot(h_.row(a), h_.row(b));
    }
    return 0.0;
  }

  const Matrix& h_;
  DistanceForm form_;
  VarianceMode mode_;
  std::size_t n_;
  std::vector<double> value_;
  std::vector<double> coef_;
};

}  // namespace snrml::detail
