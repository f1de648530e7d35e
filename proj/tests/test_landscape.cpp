#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "msbd/errors.hpp"
#include "msbd/landscape.hpp"
#include "msbd/rng.hpp"
#include "oracles.hpp"

using namespace msbd;

namespace {

ObservationSet random_obs(std::mt19937_64& rng, long n, long p) {
  return ObservationSet::from_matrix(Shape::line(static_cast<std::size_t>(n)),
                                     oracle::gaussian(rng, n, p));
}

/// φ(w) = f(h(w)) through the unconstrained objective.
std::function<double(const Vector&)> phi(const Objective& f) {
  return [&f](const Vector& w) { return f.value(reparam(w).h.vec()); };
}

Vector ball_point(std::mt19937_64& rng, long m, double radius) {
  return radius * oracle::unit(rng, m);
}

Objective orthogonal_objective(long n, long p, double theta, double mu, std::uint64_t seed) {
  GeometryParams params;
  params.n = static_cast<std::size_t>(n);
  params.p = static_cast<std::size_t>(p);
  params.theta = theta;
  params.mu = mu;
  params.seed = seed;
  return ground_truth_frame_objective(params);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_CASE("directional gradient matches a finite difference along w") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const ObservationSet obs = random_obs(rng, 8, 5);
    const Preconditioner R = build_preconditioner(obs, 0.3);
    const Objective f(obs, R, LossKind::LogCosh, 0.1);
    const Vector w = ball_point(rng, 7, 0.3 + 0.05 * t);
    const Vector u = w / w.norm();
    const double step = 1e-5;
    const double fd = (phi(f)(w + step * u) - phi(f)(w - step * u)) / (2.0 * step);
    const double analytic = directional_gradient_w(w, obs, R, {0.1, 0.3});
    CHECK(std::abs(analytic - fd) <= 1e-5 * std::abs(fd));
    CHECK(directional_gradient_w(w, f) == analytic);

    // chain rule: J ∇f(h(w)) against finite differences of f∘h
    Vector grad;
    f.value_and_gradient(reparam(w).h.vec(), grad);
    const Vector chain = reparam(w).jacobian * grad;
    CHECK(oracle::relative_error(chain, oracle::fd_gradient(phi(f), w)) <= 1e-5);
  }
}

TEST_CASE("directional gradient edge cases") {
  const ObservationSet zero = ObservationSet::from_matrix(Shape::line(5), Matrix::Zero(5, 3));
  const Preconditioner I = Preconditioner::identity(Shape::line(5));
  CHECK(directional_gradient_w(Vector::Constant(4, 0.2), zero, I, {0.1, 0.3}) == 0.0);
  CHECK_THROWS_AS(directional_gradient_w(Vector::Zero(4), zero, I, {0.1, 0.3}), DomainError);
  CHECK_THROWS_AS(directional_gradient_w(Vector::Ones(4), zero, I, {0.1, 0.3}), DomainError);
  CHECK_THROWS_AS(directional_gradient_w(Vector::Constant(3, 0.1), zero, I, {0.1, 0.3}),
                  DimensionError);
}

TEST_CASE("analytic Hessian matches finite differences") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const ObservationSet obs = random_obs(rng, 6, 3);
    const Preconditioner R = build_preconditioner(obs, 0.3);
    for (double mu : {0.1, 0.5}) {
      const Objective f(obs, R, LossKind::LogCosh, mu);
      const Vector w = ball_point(rng, 5, 0.5);
      const Matrix H = hessian_w(w, obs, R, {mu, 0.3});
      CHECK(H == H.transpose());
      const Matrix fd = oracle::fd_hessian(phi(f), w);
      CHECK((H - fd).cwiseAbs().maxCoeff() <= 1e-4 * (1.0 + H.norm()));
    }
  }
}

TEST_CASE("Hessian edge cases") {
  const ObservationSet zero = ObservationSet::from_matrix(Shape::line(5), Matrix::Zero(5, 3));
  const Preconditioner I = Preconditioner::identity(Shape::line(5));
  CHECK(hessian_w(Vector::Constant(4, 0.2), zero, I, {0.1, 0.3}).isZero(0.0));
  CHECK_THROWS_AS(hessian_w(Vector::Ones(4), zero, I, {0.1, 0.3}), DomainError);
}

TEST_CASE("Hessian is equivariant under reflecting the lattice") {
  // y'_k = y_{-k} and h'_j = h_{2(n-1)-j} permute every response, so the
  // loss is unchanged and the w-Hessian is conjugated by j -> n-2-j.
  std::mt19937_64 rng(3);
  const long n = 7;
  const ObservationSet obs = random_obs(rng, n, 4);
  ObservationSet mirrored = obs;
  for (long k = 0; k < n; ++k) mirrored.Y.row(k) = obs.Y.row(oracle::wrap(-k, n));
  const Preconditioner R = build_preconditioner(obs, 0.3);
  const Preconditioner Rm = build_preconditioner(mirrored, 0.3);
  Matrix Q = Matrix::Zero(n - 1, n - 1);
  for (long j = 0; j < n - 1; ++j) Q(n - 2 - j, j) = 1.0;
  const Vector w = ball_point(rng, n - 1, 0.4);
  const Matrix H = hessian_w(w, obs, R, {0.2, 0.3});
  const Matrix Hm = hessian_w(Q * w, mirrored, Rm, {0.2, 0.3});
  CHECK(oracle::relative_error(Hm, Matrix(Q * H * Q.transpose())) < 1e-12);
}

TEST_CASE("strong convexity at the basin centre") {
  const Objective f = orthogonal_objective(6, 8192, 0.3, 0.05, 4);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian_w(Vector::Zero(5), f));
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("region radii") {
  CHECK(q2_radius(0.05) == doctest::Approx(0.05 / (4.0 * std::sqrt(2.0))));
  CHECK(q1_outer_radius(8, 0.5) == doctest::Approx(std::sqrt(7.0 / 8.5)));
}

TEST_CASE("verify_geometry reports are well formed") {
  GeometryParams params;
  params.n = 8;
  params.p = 1;
  params.samples = 20;
  const GeometryReport tiny = verify_geometry(params);
  CHECK(tiny.q1.region == Region::Q1);
  CHECK(tiny.q2.region == Region::Q2);
  CHECK(tiny.q1.samples == 20);
  CHECK(tiny.q2.samples == 20);
  CHECK(tiny.q1.violations <= 20);
  CHECK(std::isfinite(tiny.q1.minimum));
  CHECK(std::isfinite(tiny.q2.minimum));
  CHECK(tiny.params.p == 1);

  params.xi0 = 0.0;
  CHECK_THROWS_AS(verify_geometry(params), ParameterError);
}

TEST_CASE("geometry holds for a large orthogonal sample") {
  GeometryParams params;
  params.n = 8;
  params.p = 4096;
  params.samples = 40;
  params.seed = 5;
  const GeometryReport report = verify_geometry(params);
  CHECK(report.q1.violations == 0);
  CHECK(report.q1.minimum > 0.0);
  CHECK(report.q2.violations == 0);
  CHECK(report.q2.minimum > 0.0);
}

TEST_CASE("Q1 outer radius is the edge of the basin along the diagonal") {
  // with all |w_j| equal, h_n^2 = (1 + ξ₀) w_j^2 exactly at the outer radius
  const double inner = q2_radius(0.05), outer = q1_outer_radius(8, 0.5);
  CHECK(inner < outer);
  const Vector diag = Vector::Ones(7) / std::sqrt(7.0);
  const auto inside = region_membership(reparam(Vector((outer - 1e-9) * diag)).h, 0.5);
  REQUIRE(inside.has_value());
  CHECK(inside->index == 7);
  CHECK(inside->sign == Sign::Plus);
  CHECK_FALSE(region_membership(reparam(Vector((outer + 1e-9) * diag)).h, 0.5).has_value());
}

TEST_CASE("ill-conditioned filters do not improve the directional gradient") {
  std::vector<double> flat, steep;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GeometryParams params;
    params.n = 8;
    params.p = 1024;
    params.samples = 20;
    params.seed = 600 + seed;
    flat.push_back(verify_geometry(params).q1.minimum);
    params.kappa = 4.0;
    steep.push_back(verify_geometry(params).q1.minimum);
  }
  CHECK(median(steep) <= median(flat));
}

TEST_CASE("sphere surface export") {
  std::mt19937_64 rng(7);
  const ObservationSet zero = ObservationSet::from_matrix(Shape::line(3), Matrix::Zero(3, 4));
  const Objective flat(zero, Preconditioner::identity(Shape::line(3)), LossKind::LogCosh, 0.05);
  const std::vector<SurfacePoint> two = export_sphere_surface(flat, 2);
  REQUIRE(two.size() == 4);
  for (const SurfacePoint& s : two) CHECK(s.loss == 0.0);
  std::ostringstream csv;
  write_surface_csv(csv, two);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "azimuth,elevation,loss");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 2);
  }
  CHECK(rows == 4);

  const ObservationSet four = random_obs(rng, 4, 2);
  const Objective wrong(four, Preconditioner::identity(Shape::line(4)), LossKind::LogCosh, 0.05);
  CHECK_THROWS_AS(export_sphere_surface(wrong, 10), ParameterError);

  const Vector v = sphere_point(0.3, -0.7);
  CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(v[2] == doctest::Approx(std::sin(-0.7)));
}

TEST_CASE("surface minima sit near the signed basis vectors") {
  const Objective f = orthogonal_objective(3, 30, 0.3, 0.05, 8);
  const int grid = 90;
  const std::vector<SurfacePoint> surface = export_sphere_surface(f, grid);
  std::vector<SurfacePoint> minima = surface_local_minima(surface, grid);
  REQUIRE(minima.size() >= 6);
  minima.resize(6);
  std::vector<int> hit(6, 0);
  for (const SurfacePoint& m : minima) {
    const Vector u = sphere_point(m.azimuth, m.elevation);
    double best = 10.0;
    int which = -1;
    for (int i = 0; i < 3; ++i) {
      for (int s : {1, -1}) {
        const double angle = std::acos(std::clamp(s * u[i], -1.0, 1.0));
        if (angle < best) best = angle, which = 2 * i + (s < 0);
      }
    }
    CHECK(best <= 0.2);
    ++hit[static_cast<std::size_t>(which)];
  }
  for (int h : hit) CHECK(h == 1);
}

TEST_CASE("local minimizer moves toward the basin centre as p grows") {
  SolverConfig cfg;
  cfg.use_preconditioner = false;
  cfg.mu = 0.05;
  cfg.eta = 0.01;
  cfg.max_iters = 3000;
  std::vector<double> medians;
  for (long p : {256L, 4096L}) {
    std::vector<double> norms;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Objective f = orthogonal_objective(8, p, 0.3, 0.05, 700 + seed);
      norms.push_back(local_minimizer_w(f, cfg).norm());
    }
    medians.push_back(median(norms));
  }
  CHECK(medians[1] < medians[0]);
}
