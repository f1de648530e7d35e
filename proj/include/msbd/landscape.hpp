#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "msbd/signal_model.hpp"
#include "msbd/solver.hpp"
#include "msbd/surrogate.hpp"

namespace msbd {

/// wᵀ∇φ(w) / ||w|| for φ(w) = f(h(w)), with ∇φ(w) = J_h(w) ∇f(h(w)).
double directional_gradient_w(const Vector& w, const Objective& objective);
double directional_gradient_w(const Vector& w, const ObservationSet& obs, const Preconditioner& R,
                              const LossConfig& cfg);

/// Analytic Hessian of φ at w:
///   J [(1/p) Σ A_iᵀ diag(ψ''(A_i h)) A_i] Jᵀ - ([∇f(h)]_n / h_n) J Jᵀ,
/// where h = h(w) and A_i = C(y_i) R. Assembled densely; meant for n <= 32.
Matrix hessian_w(const Vector& w, const Objective& objective);
Matrix hessian_w(const Vector& w, const ObservationSet& obs, const Preconditioner& R,
                 const LossConfig& cfg);

struct GeometryParams {
  std::size_t n = 8;
  std::size_t p = 4096;
  double theta = 0.3;
  double kappa = 1.0;
  double xi0 = 0.5;
  double mu = 0.05;
  std::size_t samples = 200;
  std::uint64_t seed = 0;
};

enum class Region { Q1, Q2 };

struct RegionStats {
  Region region = Region::Q1;
  std::size_t samples = 0;
  /// Q1: smallest directional gradient. Q2: smallest Hessian eigenvalue.
  double minimum = 0.0;
  /// Samples where the quantity is not strictly positive.
  std::size_t violations = 0;
};

struct GeometryReport {
  RegionStats q1;
  RegionStats q2;
  GeometryParams params;
};

/// Radial bounds of the two sub-regions of the basin around e_n:
/// Q1 = {μ/(4√2) <= ||w|| <= sqrt((n-1)/(n+ξ₀))}, Q2 = {||w|| <= μ/(4√2)}.
double q2_radius(double mu);
double q1_outer_radius(std::size_t n, double xi0);

/// Objective in the frame where the shifted ground truths sit at ±e_i. For
/// κ == 1 this is the identity filter without preconditioning. Otherwise the
/// observations come from a synthesized filter g and the loss is evaluated on
/// C(y_i) R Uᵀ with U = C(g)(C(g)ᵀC(g))^{-1/2}; this needs ground truth and is
/// only used for verification.
Objective ground_truth_frame_objective(const GeometryParams& params);

/// Samples Q1 and Q2 (uniform direction, radius uniform over the region's
/// radial interval; Q1 samples with h(w) outside S_ξ₀^{(n+)} are redrawn) and
/// checks the sign conditions: positive directional gradient on Q1 and a
/// positive-definite Hessian on Q2.
GeometryReport verify_geometry(const GeometryParams& params);
GeometryReport verify_geometry(const Objective& objective, const GeometryParams& params);

struct SurfacePoint {
  double azimuth = 0.0;
  double elevation = 0.0;
  double loss = 0.0;
};

/// Loss on a grid x grid lattice of spherical angles for n = 3:
/// azimuth 2πa/grid, elevation -π/2 + π(b + 1/2)/grid, rows ordered by
/// elevation then azimuth.
std::vector<SurfacePoint> export_sphere_surface(const Objective& objective, int grid);

/// CSV with header `azimuth,elevation,loss`, 17 significant digits.
void write_surface_csv(std::ostream& out, const std::vector<SurfacePoint>& surface);

/// Strict local minima of an exported lattice (8-neighbourhood, periodic in
/// azimuth), sorted by loss.
std::vector<SurfacePoint> surface_local_minima(const std::vector<SurfacePoint>& surface, int grid);

/// Unit vector for spherical angles.
Vector sphere_point(double azimuth, double elevation);

/// Runs MGD from e_n (w = 0) until the Riemannian gradient drops below
/// `cfg.tol` and returns the w-coordinates of the limit.
Vector local_minimizer_w(const Objective& objective, const SolverConfig& cfg);

}  // namespace msbd
