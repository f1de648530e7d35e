#include "msbd/sphere.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include <fmt/format.h>

#include "msbd/errors.hpp"
#include "msbd/rng.hpp"

namespace msbd {

SphereVector::SphereVector(Vector h) : h_(std::move(h)) {
  const double norm = h_.norm();
  if (!(std::abs(norm - 1.0) <= kUnitTolerance)) {
    throw DomainError(fmt::format("sphere vector has norm {:.12g}", norm));
  }
}

SphereVector SphereVector::normalize(const Vector& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DegenerateStep(fmt::format("cannot normalize a vector of norm {}", norm));
  }
  return SphereVector(v / norm, Unchecked{});
}

SphereVector SphereVector::basis(Eigen::Index n, Eigen::Index i, Sign sign) {
  Vector e = Vector::Zero(n);
  e[i] = to_double(sign);
  return SphereVector(std::move(e), Unchecked{});
}

Vector riemannian_gradient(const SphereVector& h, const Vector& euclid_grad) {
  const Vector& v = h.vec();
  if (euclid_grad.size() != v.size()) throw DimensionError("gradient length mismatch");
  Vector out = euclid_grad - v * v.dot(euclid_grad);
  // One correction pass removes the residual radial component left by round-off.
  out -= v * v.dot(out);
  return out;
}

SphereVector retract_step(const SphereVector& h, const Vector& grad, double eta) {
  if (!(eta > 0.0)) throw ParameterError(fmt::format("step size must be positive, got {}", eta));
  if (grad.size() != h.size()) throw DimensionError("gradient length mismatch");
  return SphereVector::normalize(h.vec() - eta * grad);
}

SphereVector random_sphere_point(Eigen::Index n, std::uint64_t seed) {
  if (n < 2) throw ParameterError("sphere dimension must be at least 2");
  Rng rng(seed, Stream::Init);
  Vector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = rng.normal();
  return SphereVector::normalize(v);
}

std::optional<RegionLabel> region_membership(const SphereVector& h, double xi) {
  if (!(xi >= 0.0)) throw ParameterError("xi must be non-negative");
  const Vector& v = h.vec();
  Eigen::Index top = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k) {
    if (std::abs(v[k]) > std::abs(v[top])) top = k;
  }
  if (v[top] == 0.0) return std::nullopt;
  double rest = 0.0;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (k != top) rest = std::max(rest, std::abs(v[k]));
  }
  const double lead2 = v[top] * v[top];
  const bool inside = rest == 0.0 || lead2 >= (1.0 + xi) * rest * rest;
  if (!inside) return std::nullopt;
  return RegionLabel{top, v[top] > 0.0 ? Sign::Plus : Sign::Minus, xi};
}

Vector basin_coordinates(const SphereVector& h, const RegionLabel& label) {
  const Vector& v = h.vec();
  const Eigen::Index n = v.size();
  Vector w(n - 1);
  for (Eigen::Index k = 0, j = 0; k < n; ++k) {
    if (k != label.index) w[j++] = to_double(label.sign) * v[k];
  }
  return w;
}

Reparametrization reparam(const Vector& w) {
  const double r2 = w.squaredNorm();
  if (!(r2 < 1.0)) throw DomainError(fmt::format("reparam needs ||w|| < 1, got {}", std::sqrt(r2)));
  const Eigen::Index m = w.size();
  Vector h(m + 1);
  h.head(m) = w;
  const double hn = std::sqrt(1.0 - r2);
  h[m] = hn;
  Matrix jac(m, m + 1);
  jac.leftCols(m).setIdentity();
  jac.col(m) = -w / hn;
  return {SphereVector(std::move(h)), std::move(jac)};
}

Vector w_of_h(const SphereVector& h) {
  const Eigen::Index m = h.size() - 1;
  if (!(h[m] > 0.0)) throw DomainError("w_of_h requires a positive last coordinate");
  return h.vec().head(m);
}

}  // namespace msbd
