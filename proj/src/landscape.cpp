#include "msbd/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "msbd/errors.hpp"
#include "msbd/fft.hpp"
#include "msbd/rng.hpp"
#include "msbd/sphere.hpp"

namespace msbd {
namespace {

void require_ball(const Vector& w, Eigen::Index n) {
  if (w.size() != n - 1) {
    throw DimensionError(fmt::format("w must have length {}, got {}", n - 1, w.size()));
  }
}

Vector random_direction(Rng& rng, Eigen::Index m) {
  Vector u(m);
  for (Eigen::Index k = 0; k < m; ++k) u[k] = rng.normal();
  return u / u.norm();
}

constexpr int kMaxRejections = 100000;

}  // namespace

double directional_gradient_w(const Vector& w, const Objective& objective) {
  require_ball(w, objective.n());
  const double norm = w.norm();
  if (!(norm > 0.0)) throw DomainError("directional gradient is undefined at w = 0");
  const Reparametrization rep = reparam(w);
  Vector grad_h;
  objective.value_and_gradient(rep.h.vec(), grad_h);
  const Vector grad_w = rep.jacobian * grad_h;
  return w.dot(grad_w) / norm;
}

double directional_gradient_w(const Vector& w, const ObservationSet& obs, const Preconditioner& R,
                              const LossConfig& cfg) {
  return directional_gradient_w(w, Objective(obs, R, LossKind::LogCosh, cfg.mu));
}

Matrix hessian_w(const Vector& w, const Objective& objective) {
  const Eigen::Index n = objective.n();
  require_ball(w, n);
  const Reparametrization rep = reparam(w);
  const Vector& h = rep.h.vec();
  const Matrix& jac = rep.jacobian;

  Vector grad_h;
  objective.value_and_gradient(h, grad_h);

  Matrix curvature = Matrix::Zero(n, n);
  Vector weights(n);
  for (Eigen::Index i = 0; i < objective.p(); ++i) {
    const Matrix A = dense_circulant(objective.operator_filter(i));
    const Vector z = A * h;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (objective.kind() == LossKind::LogCosh) {
        const double t = std::tanh(z[k] / objective.mu());
        weights[k] = (1.0 - t * t) / objective.mu();
      } else {
        weights[k] = -3.0 * z[k] * z[k];
      }
    }
    curvature.noalias() += A.transpose() * weights.asDiagonal() * A;
  }
  curvature /= static_cast<double>(objective.p());

  const double hn = h[n - 1];
  const Matrix jjt = jac * jac.transpose();
  Matrix H = jac * curvature * jac.transpose() - (grad_h[n - 1] / hn) * jjt;

  const double asym = (H - H.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * std::max(1.0, H.cwiseAbs().maxCoeff())) {
    throw NumericalError(fmt::format("assembled Hessian asymmetric by {:.3e}", asym));
  }
  return 0.5 * (H + H.transpose());
}

Matrix hessian_w(const Vector& w, const ObservationSet& obs, const Preconditioner& R,
                 const LossConfig& cfg) {
  return hessian_w(w, Objective(obs, R, LossKind::LogCosh, cfg.mu));
}

double q2_radius(double mu) { return mu / (4.0 * std::numbers::sqrt2); }

double q1_outer_radius(std::size_t n, double xi0) {
  return std::sqrt((static_cast<double>(n) - 1.0) / (static_cast<double>(n) + xi0));
}

Objective ground_truth_frame_objective(const GeometryParams& params) {
  const auto n = static_cast<Eigen::Index>(params.n);
  const auto p = static_cast<Eigen::Index>(params.p);
  const Shape shape = Shape::line(params.n);
  const SparseInputs x = sample_bernoulli_gaussian(n, p, params.theta, params.seed);

  if (params.kappa == 1.0) {
    const ObservationSet obs = generate_observations(Filter::identity(shape), x);
    return Objective(obs, Preconditioner::identity(shape), LossKind::LogCosh, params.mu);
  }

  const Filter g = synthesize_filter(n, params.kappa, params.seed);
  const ObservationSet obs = generate_observations(g, x);
  const Preconditioner R = build_preconditioner(obs, params.theta);
  // m has spectrum r_k conj(u_k) with u_k = ĝ_k / |ĝ_k|, so C(m) = R Uᵀ.
  const ComplexVector gh = fft::forward(shape, g.coeffs());
  ComplexVector mh(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    mh[k] = R.fourier_eigs()[k] * std::conj(gh[k] / std::abs(gh[k]));
  }
  const Filter m(shape, fft::inverse_real(shape, mh));
  ObservationSet rotated = ObservationSet::from_matrix(shape, Matrix(n, p));
  for (Eigen::Index i = 0; i < p; ++i) rotated.Y.col(i) = conv_apply(m, obs.Y.col(i));
  return Objective(rotated, Preconditioner::identity(shape), LossKind::LogCosh, params.mu);
}

GeometryReport verify_geometry(const Objective& objective, const GeometryParams& params) {
  const auto n = static_cast<Eigen::Index>(params.n);
  if (objective.n() != n) throw DimensionError("objective and geometry parameters disagree");
  if (!(params.xi0 > 0.0)) throw ParameterError("xi0 must be positive");

  GeometryReport report;
  report.params = params;
  report.q1 = {Region::Q1, 0, std::numeric_limits<double>::infinity(), 0};
  report.q2 = {Region::Q2, 0, std::numeric_limits<double>::infinity(), 0};

  Rng rng(params.seed, Stream::Sampling);
  const double inner = q2_radius(params.mu);
  const double outer = q1_outer_radius(params.n, params.xi0);
  const RegionLabel home{n - 1, Sign::Plus, params.xi0};

  for (std::size_t s = 0; s < params.samples; ++s) {
    Vector w;
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxRejections) {
        throw NumericalError("could not draw a Q1 sample inside the basin");
      }
      w = rng.uniform(inner, outer) * random_direction(rng, n - 1);
      const auto label = region_membership(reparam(w).h, params.xi0);
      if (label && *label == home) break;
    }
    const double value = directional_gradient_w(w, objective);
    report.q1.minimum = std::min(report.q1.minimum, value);
    if (!(value > 0.0)) ++report.q1.violations;
    ++report.q1.samples;
  }

  for (std::size_t s = 0; s < params.samples; ++s) {
    const Vector w = rng.uniform(0.0, inner) * random_direction(rng, n - 1);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian_w(w, objective),
                                                    Eigen::EigenvaluesOnly);
    const double value = eig.eigenvalues().minCoeff();
    report.q2.minimum = std::min(report.q2.minimum, value);
    if (!(value > 0.0)) ++report.q2.violations;
    ++report.q2.samples;
  }
  return report;
}

GeometryReport verify_geometry(const GeometryParams& params) {
  if (params.n < 3) throw ParameterError("geometry verification needs n >= 3");
  if (!(params.theta > 0.0 && params.theta < 1.0)) throw ParameterError("theta must lie in (0, 1)");
  if (!(params.kappa >= 1.0)) throw ParameterError("kappa must be >= 1");
  if (!(params.mu > 0.0)) throw ParameterError("mu must be positive");
  return verify_geometry(ground_truth_frame_objective(params), params);
}

Vector sphere_point(double azimuth, double elevation) {
  Vector h(3);
  h << std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
      std::sin(elevation);
  return h;
}

std::vector<SurfacePoint> export_sphere_surface(const Objective& objective, int grid) {
  if (objective.n() != 3) {
    throw ParameterError(fmt::format("surface export needs n = 3, got {}", objective.n()));
  }
  if (grid < 1) throw ParameterError("grid must be positive");
  std::vector<SurfacePoint> out;
  out.reserve(static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid));
  const double pi = std::numbers::pi;
  for (int b = 0; b < grid; ++b) {
    const double elevation = -pi / 2.0 + pi * (b + 0.5) / grid;
    for (int a = 0; a < grid; ++a) {
      const double azimuth = 2.0 * pi * a / grid;
      out.push_back({azimuth, elevation, objective.value(sphere_point(azimuth, elevation))});
    }
  }
  return out;
}

void write_surface_csv(std::ostream& out, const std::vector<SurfacePoint>& surface) {
  out << "azimuth,elevation,loss\n";
  for (const auto& pt : surface) {
    out << fmt::format("{:.17g},{:.17g},{:.17g}\n", pt.azimuth, pt.elevation, pt.loss);
  }
}

std::vector<SurfacePoint> surface_local_minima(const std::vector<SurfacePoint>& surface,
                                               int grid) {
  if (surface.size() != static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid)) {
    throw DimensionError("surface does not match the grid size");
  }
  const auto at = [&](int b, int a) -> const SurfacePoint& {
    return surface[static_cast<std::size_t>(b * grid + ((a % grid) + grid) % grid)];
  };
  std::vector<SurfacePoint> minima;
  for (int b = 0; b < grid; ++b) {
    for (int a = 0; a < grid; ++a) {
      const double v = at(b, a).loss;
      bool is_min = true;
      for (int db = -1; db <= 1 && is_min; ++db) {
        const int nb = b + db;
        if (nb < 0 || nb >= grid) continue;
        for (int da = -1; da <= 1; ++da) {
          if ((db != 0 || da != 0) && !(v < at(nb, a + da).loss)) {
            is_min = false;
            break;
          }
        }
      }
      if (is_min) minima.push_back(at(b, a));
    }
  }
  std::sort(minima.begin(), minima.end(),
            [](const SurfacePoint& x, const SurfacePoint& y) { return x.loss < y.loss; });
  return minima;
}

Vector local_minimizer_w(const Objective& objective, const SolverConfig& cfg) {
  const Eigen::Index n = objective.n();
  const RecoveryResult run = run_mgd(objective, SphereVector::basis(n, n - 1), cfg);
  return w_of_h(run.h_final);
}

}  // namespace msbd
