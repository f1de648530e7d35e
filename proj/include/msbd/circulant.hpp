#pragma once

#include "msbd/types.hpp"

namespace msbd {

/// Default invertibility threshold, relative to the largest spectral magnitude.
inline constexpr double kDefaultInvertRelEps = 1e-10;

/// A real filter on a periodic lattice. C(g) is the circulant (or, for images,
/// block-circulant with circulant blocks) matrix whose first column is g.
class Filter {
 public:
  explicit Filter(Vector coeffs);
  Filter(const Shape& shape, Vector coeffs);

  /// Kronecker delta at index 0, the identity filter.
  static Filter identity(const Shape& shape);

  [[nodiscard]] const Vector& coeffs() const { return coeffs_; }
  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] std::size_t size() const { return shape_.size(); }

 private:
  Shape shape_;
  Vector coeffs_;
};

/// Unnormalized forward DFT of a filter.
struct Spectrum {
  Shape shape;
  ComplexVector values;
};

Spectrum spectrum(const Filter& g);

/// C(g) x, computed through the DFT.
Vector conv_apply(const Filter& g, const Vector& x);

/// [S_j x]_k = x_{k-j}, indices mod n.
Vector circular_shift(const Vector& x, long j);

/// Two-dimensional circular shift of a row-major image by (dr, dc).
Vector circular_shift(const Vector& x, const Shape& shape, long dr, long dc);

/// The filter whose spectrum is 1/ĝ. Throws NonInvertibleFilter when
/// min |ĝ_k| <= rel_eps * max |ĝ_k|.
Filter inverse_filter(const Filter& g, double rel_eps = kDefaultInvertRelEps);

/// max |ĝ_k| / min |ĝ_k|.
double condition_number(const Filter& g, double rel_eps = kDefaultInvertRelEps);

/// g / ||g||_2. Throws NonInvertibleFilter on the zero filter.
Filter unit_norm(const Filter& g);

/// Dense C(g), built column by column from circular shifts of g. Meant for
/// small problems and as a reference for the FFT path.
Matrix dense_circulant(const Filter& g);

}  // namespace msbd
