#pragma once

#include <cstdint>
#include <optional>

#include "msbd/types.hpp"

namespace msbd {

inline constexpr double kUnitTolerance = 1e-9;

/// A point on the unit sphere S^{n-1}; the norm is checked on construction.
class SphereVector {
 public:
  explicit SphereVector(Vector h);

  /// v / ||v||_2. Throws DegenerateStep for a zero or non-finite v.
  static SphereVector normalize(const Vector& v);
  static SphereVector basis(Eigen::Index n, Eigen::Index i, Sign sign = Sign::Plus);

  [[nodiscard]] const Vector& vec() const { return h_; }
  [[nodiscard]] Eigen::Index size() const { return h_.size(); }
  double operator[](Eigen::Index i) const { return h_[i]; }

 private:
  struct Unchecked {};
  SphereVector(Vector h, Unchecked) : h_(std::move(h)) {}
  Vector h_;
};

/// One of the 2n signed basins S_ξ^{(i±)} around ±e_i.
struct RegionLabel {
  Eigen::Index index = 0;
  Sign sign = Sign::Plus;
  double xi = 0.0;

  friend bool operator==(const RegionLabel& a, const RegionLabel& b) {
    return a.index == b.index && a.sign == b.sign;
  }
};

/// (I - h hᵀ) g.
Vector riemannian_gradient(const SphereVector& h, const Vector& euclid_grad);

/// (h - η g) / ||h - η g||_2.
SphereVector retract_step(const SphereVector& h, const Vector& grad, double eta);

/// Normalized standard Gaussian vector, uniform on the sphere.
SphereVector random_sphere_point(Eigen::Index n, std::uint64_t seed);

/// The basin containing h, if any: sign(h_i) with h_i^2 >= (1 + ξ) ||h_{\i}||_∞^2.
/// The ratio is +∞ when the rest of h vanishes. Exact magnitude ties give no
/// basin for ξ > 0 and the lowest tied index for ξ = 0.
std::optional<RegionLabel> region_membership(const SphereVector& h, double xi);

/// Coordinates of h relative to a basin: h with entry `label.index` removed,
/// multiplied by the basin sign so that the dropped entry is positive.
Vector basin_coordinates(const SphereVector& h, const RegionLabel& label);

struct Reparametrization {
  SphereVector h;
  /// (n-1) x n Jacobian [I, -w / h_n].
  Matrix jacobian;
};

/// h(w) = (w, sqrt(1 - ||w||^2)) for ||w|| < 1; DomainError otherwise.
Reparametrization reparam(const Vector& w);

/// Inverse of `reparam`: the first n-1 entries of h. Requires h_n > 0.
Vector w_of_h(const SphereVector& h);

}  // namespace msbd
