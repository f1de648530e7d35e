#include <doctest.h>

#include "msbd/errors.hpp"
#include "msbd/rng.hpp"
#include "msbd/sphere.hpp"
#include "oracles.hpp"

using namespace msbd;

namespace {

SphereVector point(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double x : values) v[k++] = x;
  return SphereVector::normalize(v);
}

}  // namespace

TEST_CASE("SphereVector checks the norm") {
  CHECK_THROWS_AS(SphereVector(Vector::Ones(3)), DomainError);
  CHECK_NOTHROW(SphereVector(Vector::Unit(3, 1)));
  CHECK_THROWS_AS(SphereVector::normalize(Vector::Zero(3)), DegenerateStep);
  Vector bad = Vector::Ones(3);
  bad[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(SphereVector::normalize(bad), DegenerateStep);
  CHECK(SphereVector::basis(4, 2, Sign::Minus).vec() == -Vector::Unit(4, 2));
}

TEST_CASE("riemannian_gradient projects onto the tangent space") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const SphereVector h(oracle::unit(rng, 10));
    const Vector g = oracle::gaussian(rng, 10);
    const Vector r = riemannian_gradient(h, g);
    CHECK(std::abs(h.vec().dot(r)) <= 1e-12 * g.norm());
    const Matrix P = Matrix::Identity(10, 10) - h.vec() * h.vec().transpose();
    CHECK(oracle::relative_error(r, Vector(P * g)) < 1e-13);
    CHECK(riemannian_gradient(h, r).isApprox(r, 1e-13));
  }
  // a tangent gradient passes through unchanged; a radial one vanishes
  const SphereVector e0 = SphereVector::basis(5, 0);
  CHECK(riemannian_gradient(e0, Vector::Unit(5, 3)) == Vector::Unit(5, 3));
  const SphereVector e = SphereVector::basis(5, 1);
  CHECK(riemannian_gradient(e, 3.0 * e.vec()).norm() < 1e-15);
  CHECK_THROWS_AS(riemannian_gradient(e, Vector::Ones(4)), DimensionError);
}

TEST_CASE("retract_step") {
  std::mt19937_64 rng(2);
  const SphereVector h(oracle::unit(rng, 6));
  const Vector g = riemannian_gradient(h, oracle::gaussian(rng, 6));
  const SphereVector next = retract_step(h, g, 0.3);
  CHECK(std::abs(next.vec().norm() - 1.0) < 1e-15);
  const Vector step = h.vec() - 0.3 * g;
  CHECK(oracle::relative_error(next.vec(), Vector(step / step.norm())) < 1e-15);
  CHECK(retract_step(h, Vector::Zero(6), 0.5).vec() == h.vec());
  const Vector diag = retract_step(SphereVector::basis(3, 0), Vector::Unit(3, 1), 1.0).vec();
  CHECK(diag[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(diag[1] == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(diag[2] == 0.0);
  CHECK_THROWS_AS(retract_step(h, g, 0.0), ParameterError);
  CHECK_THROWS_AS(retract_step(h, Vector::Ones(5), 0.1), DimensionError);
  // stepping exactly onto the origin is degenerate
  CHECK_THROWS_AS(retract_step(h, h.vec(), 1.0), DegenerateStep);
}

TEST_CASE("random_sphere_point") {
  const SphereVector a = random_sphere_point(8, 5);
  CHECK(a.vec() == random_sphere_point(8, 5).vec());
  CHECK(a.vec() != random_sphere_point(8, 6).vec());
  CHECK_THROWS_AS(random_sphere_point(1, 0), ParameterError);

  // uniform on the sphere: E[h] = 0 and E[h hᵀ] = I/n
  const long n = 8, m = 100000;
  Vector mean = Vector::Zero(n);
  Matrix second = Matrix::Zero(n, n);
  for (long s = 0; s < m; ++s) {
    const Vector h = random_sphere_point(n, static_cast<std::uint64_t>(s)).vec();
    CHECK(std::abs(h.norm() - 1.0) < 1e-15);
    mean += h;
    second += h * h.transpose();
  }
  mean /= static_cast<double>(m);
  second /= static_cast<double>(m);
  // sd of h_k is 1/sqrt(n); Var(h_k^2) = 2(n-1)/(n^2(n+2)); Var(h_j h_k) = 1/(n(n+2))
  const double nd = static_cast<double>(n), md = static_cast<double>(m);
  CHECK(mean.cwiseAbs().maxCoeff() < 5.0 / std::sqrt(nd * md));
  for (long j = 0; j < n; ++j) {
    for (long k = 0; k < n; ++k) {
      const double var = j == k ? 2.0 * (nd - 1.0) / (nd * nd * (nd + 2.0)) : 1.0 / (nd * (nd + 2.0));
      CHECK(std::abs(second(j, k) - (j == k ? 1.0 / nd : 0.0)) < 5.0 * std::sqrt(var / md));
    }
  }
}

TEST_CASE("region_membership reference examples") {
  const auto plus = region_membership(SphereVector::basis(5, 3), 0.5);
  REQUIRE(plus.has_value());
  CHECK(plus->index == 3);
  CHECK(plus->sign == Sign::Plus);

  const auto minus = region_membership(point({0.1, -0.9, 0.2}), 0.5);
  REQUIRE(minus.has_value());
  CHECK(minus->index == 1);
  CHECK(minus->sign == Sign::Minus);

  // 0.6^2 = 0.36 vs (1 + 0.5) 0.5^2 = 0.375
  CHECK_FALSE(region_membership(point({0.6, 0.5, 0.0}), 0.5).has_value());
  CHECK(region_membership(point({0.6, 0.5, 0.0}), 0.4).has_value());

  CHECK_FALSE(region_membership(SphereVector(Vector::Constant(6, 1.0 / std::sqrt(6.0))), 0.1));
  CHECK(region_membership(SphereVector::basis(5, 2, Sign::Minus), 7.0)->sign == Sign::Minus);

  // ties
  CHECK_FALSE(region_membership(point({1.0, -1.0, 0.0}), 0.1).has_value());
  const auto tie = region_membership(point({0.0, -1.0, 1.0}), 0.0);
  REQUIRE(tie.has_value());
  CHECK(tie->index == 1);
  CHECK(tie->sign == Sign::Minus);
  CHECK_THROWS_AS(region_membership(point({1.0, 0.0}), -0.1), ParameterError);
}

TEST_CASE("region_membership agrees with the defining inequality") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 500; ++t) {
    const SphereVector h(oracle::unit(rng, 7));
    for (double xi : {0.0, 0.1, 1.0}) {
      const auto label = region_membership(h, xi);
      int hits = 0;
      for (Eigen::Index i = 0; i < 7; ++i) {
        double rest = 0.0;
        for (Eigen::Index k = 0; k < 7; ++k) {
          if (k != i) rest = std::max(rest, std::abs(h[k]));
        }
        if (h[i] * h[i] >= (1.0 + xi) * rest * rest) {
          ++hits;
          REQUIRE(label.has_value());
          CHECK(label->index == i);
          CHECK(to_double(label->sign) == (h[i] > 0 ? 1.0 : -1.0));
        }
      }
      CHECK(hits == (label.has_value() ? 1 : 0));
    }
  }
}

TEST_CASE("random initializations land in a basin at least half the time") {
  for (long n : {8L, 64L, 256L}) {
    const double xi0 = 1.0 / (4.0 * std::log(static_cast<double>(n)));
    const double bound = (static_cast<double>(n) - 1.0) / (static_cast<double>(n) + xi0);
    long hits = 0;
    for (std::uint64_t s = 0; s < 10000; ++s) {
      const SphereVector h = random_sphere_point(n, derive_seed(n, s));
      const auto label = region_membership(h, xi0);
      if (!label) continue;
      ++hits;
      CHECK(basin_coordinates(h, *label).squaredNorm() <= bound);
    }
    CHECK(static_cast<double>(hits) / 1e4 >= 0.5 - 3.0 * std::sqrt(0.25 / 1e4));
  }
}

TEST_CASE("basins cover the sphere for xi = 0 and shrink as xi grows") {
  long covered0 = 0, covered1 = 0, covered5 = 0;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const SphereVector h = random_sphere_point(6, s);
    covered0 += region_membership(h, 0.0).has_value();
    const bool in5 = region_membership(h, 5.0).has_value();
    const bool in1 = region_membership(h, 1.0).has_value();
    covered1 += in1;
    covered5 += in5;
    if (in5) CHECK(in1);
  }
  CHECK(covered0 == 2000);
  CHECK(covered1 < 2000);
  CHECK(covered5 < covered1);
}

TEST_CASE("basin_coordinates") {
  const SphereVector h = point({0.1, -0.9, 0.2});
  const RegionLabel label{1, Sign::Minus, 0.5};
  const Vector w = basin_coordinates(h, label);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == doctest::Approx(-h[0]));
  CHECK(w[1] == doctest::Approx(-h[2]));
}

TEST_CASE("reparam and w_of_h") {
  const Reparametrization origin = reparam(Vector::Zero(5));
  CHECK(origin.h.vec() == Vector::Unit(6, 5));
  CHECK(origin.jacobian.leftCols(5) == Matrix::Identity(5, 5));
  CHECK(origin.jacobian.col(5).isZero(0.0));

  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    Vector w = oracle::unit(rng, 5) * 0.8;
    const Reparametrization r = reparam(w);
    CHECK(std::abs(r.h.vec().norm() - 1.0) < 1e-15);
    CHECK(r.h[5] == doctest::Approx(0.6));
    CHECK(w_of_h(r.h) == w);

    // the Jacobian rows are the partial derivatives of h(w)
    const double step = 1e-6;
    Matrix fd(5, 6);
    for (Eigen::Index j = 0; j < 5; ++j) {
      Vector a = w, b = w;
      a[j] += step;
      b[j] -= step;
      fd.row(j) = (reparam(a).h.vec() - reparam(b).h.vec()).transpose() / (2.0 * step);
    }
    CHECK(oracle::relative_error(r.jacobian, fd) < 1e-8);
  }
  CHECK_THROWS_AS(reparam(Vector::Unit(3, 0)), DomainError);
  CHECK_THROWS_AS(reparam(Vector::Ones(3)), DomainError);
  CHECK_THROWS_AS(w_of_h(SphereVector::basis(4, 0)), DomainError);
  CHECK_THROWS_AS(w_of_h(SphereVector::basis(4, 3, Sign::Minus)), DomainError);
}
