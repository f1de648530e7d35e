#pragma once

#include "msbd/circulant.hpp"
#include "msbd/sphere.hpp"
#include "msbd/surrogate.hpp"
#include "msbd/types.hpp"

namespace msbd {

struct AlignmentReport {
  /// min over shifts j and signs s of ||g_ref - s S_j(g_hat)||_2.
  double distance = 0.0;
  /// g_hat ≈ best_sign * S_{best_shift}(g_ref) at the optimum.
  long best_shift = 0;
  Sign best_sign = Sign::Plus;
  /// Largest |<g_ref, S_j g_hat>| / (||g_ref|| ||g_hat||).
  double peak_ratio = 0.0;
};

/// Shift- and sign-aware distance. All n correlations come from one FFT
/// cross-correlation; ties go to the smallest shift, then to '+'.
AlignmentReport shift_sign_distance(const Vector& g_hat, const Vector& g_ref);

struct SuccessScore {
  bool success = false;
  double score = 0.0;
};

/// v = C(g) ĝ_inv; score = ||v||_∞ / ||v||_2, success when score > 0.99.
SuccessScore success_indicator(const Vector& g_inv_hat, const Filter& g_true);

inline constexpr double kSuccessThreshold = 0.99;

/// Distance of the normalized equalized filter u = C(g) R h / ||C(g) R h|| to
/// the nearest ±e_j, i.e. sqrt(2 - 2 max_j |u_j|). Lies in [0, sqrt(2)].
double normalized_error(const SphereVector& h, const Preconditioner& R, const Filter& g_true);

/// The same quantity for an already formed estimate ĝ_inv = R h.
double normalized_error(const Vector& g_inv_hat, const Filter& g_true);

}  // namespace msbd
