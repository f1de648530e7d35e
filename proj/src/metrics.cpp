#include "msbd/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "msbd/errors.hpp"
#include "msbd/fft.hpp"

namespace msbd {

AlignmentReport shift_sign_distance(const Vector& g_hat, const Vector& g_ref) {
  if (g_hat.size() != g_ref.size() || g_ref.size() == 0) {
    throw DimensionError(
        fmt::format("shift_sign_distance: lengths {} and {}", g_hat.size(), g_ref.size()));
  }
  const Eigen::Index n = g_ref.size();
  const Shape shape = Shape::line(static_cast<std::size_t>(n));
  // corr[j] = <g_ref, S_j g_hat> = sum_k g_ref[k] g_hat[k - j].
  const ComplexVector cross =
      fft::forward(shape, g_ref).cwiseProduct(fft::forward(shape, g_hat).conjugate());
  const Vector corr = fft::inverse(shape, cross).real();

  // g_hat ≈ s S_m(g_ref) pairs with correlation index j = -m (mod n).
  // FFT round-off must not reorder exact ties, so later candidates have to
  // win by more than it.
  const double slack = 1e-12 * g_ref.norm() * g_hat.norm();
  AlignmentReport report;
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; m < n; ++m) {
    const double c = corr[(n - m) % n];
    for (const Sign s : {Sign::Plus, Sign::Minus}) {
      const double value = to_double(s) * c;
      if (value > best + slack) {
        best = value;
        report.best_shift = static_cast<long>(m);
        report.best_sign = s;
      }
    }
  }
  // The norm expansion of the distance cancels badly near a match, so measure
  // it directly at the chosen alignment.
  report.distance =
      (g_hat - to_double(report.best_sign) * circular_shift(g_ref, report.best_shift)).norm();
  const double denom = g_ref.norm() * g_hat.norm();
  report.peak_ratio = denom > 0.0 ? std::min(1.0, best / denom) : 0.0;
  return report;
}

SuccessScore success_indicator(const Vector& g_inv_hat, const Filter& g_true) {
  const Vector v = conv_apply(g_true, g_inv_hat);
  const double l2 = v.norm();
  if (!(l2 > 0.0)) return {false, 0.0};
  const double score = v.cwiseAbs().maxCoeff() / l2;
  return {score > kSuccessThreshold, score};
}

double normalized_error(const Vector& g_inv_hat, const Filter& g_true) {
  const Vector u = conv_apply(g_true, g_inv_hat);
  const double norm = u.norm();
  if (!(norm > 0.0)) throw NonInvertibleFilter("equalized filter vanished");
  // The nearest ±e_j sits at the largest magnitude entry.
  Eigen::Index j = 0;
  u.cwiseAbs().maxCoeff(&j);
  Vector diff = u / norm;
  diff[j] -= diff[j] < 0.0 ? -1.0 : 1.0;
  return diff.norm();
}

double normalized_error(const SphereVector& h, const Preconditioner& R, const Filter& g_true) {
  return normalized_error(R.apply(h.vec()), g_true);
}

}  // namespace msbd
