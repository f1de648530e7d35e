#include "msbd/circulant.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "msbd/errors.hpp"
#include "msbd/fft.hpp"

namespace msbd {
namespace {

std::size_t wrap(long k, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((k % m) + m) % m);
}

void require_invertible(const ComplexVector& values, double rel_eps) {
  const Vector mags = values.cwiseAbs();
  const double hi = mags.maxCoeff();
  const double lo = mags.minCoeff();
  if (!(hi > 0.0) || !(lo > rel_eps * hi)) {
    throw NonInvertibleFilter(
        fmt::format("spectral magnitude {:.3e} is below {:.1e} x max {:.3e}", lo, rel_eps, hi));
  }
}

}  // namespace

// Copies rather than moves: the shape argument reads coeffs.size() and
// argument evaluation order is unspecified.
Filter::Filter(Vector coeffs)
    : Filter(Shape::line(static_cast<std::size_t>(coeffs.size())), coeffs) {}

Filter::Filter(const Shape& shape, Vector coeffs) : shape_(shape), coeffs_(std::move(coeffs)) {
  if (shape_.size() < 2) throw DimensionError("filter length must be at least 2");
  if (static_cast<std::size_t>(coeffs_.size()) != shape_.size()) {
    throw DimensionError(fmt::format("filter has {} coefficients for a {}x{} lattice",
                                     coeffs_.size(), shape_.rows, shape_.cols));
  }
  if (!coeffs_.allFinite()) throw ParameterError("filter coefficients must be finite");
}

Filter Filter::identity(const Shape& shape) {
  Vector e = Vector::Zero(static_cast<Eigen::Index>(shape.size()));
  if (e.size() > 0) e[0] = 1.0;
  return Filter(shape, std::move(e));
}

Spectrum spectrum(const Filter& g) { return {g.shape(), fft::forward(g.shape(), g.coeffs())}; }

Vector conv_apply(const Filter& g, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != g.size()) {
    throw DimensionError(
        fmt::format("conv_apply: filter length {} vs signal length {}", g.size(), x.size()));
  }
  const ComplexVector gh = fft::forward(g.shape(), g.coeffs());
  const ComplexVector xh = fft::forward(g.shape(), x);
  return fft::inverse_real(g.shape(), gh.cwiseProduct(xh));
}

Vector circular_shift(const Vector& x, long j) {
  const auto n = static_cast<std::size_t>(x.size());
  Vector out(x.size());
  for (std::size_t k = 0; k < n; ++k) {
    out[static_cast<Eigen::Index>(wrap(static_cast<long>(k) + j, n))] =
        x[static_cast<Eigen::Index>(k)];
  }
  return out;
}

Vector circular_shift(const Vector& x, const Shape& shape, long dr, long dc) {
  if (static_cast<std::size_t>(x.size()) != shape.size()) {
    throw ShapeError("circular_shift: image size does not match shape");
  }
  Vector out(x.size());
  for (std::size_t r = 0; r < shape.rows; ++r) {
    const std::size_t rr = wrap(static_cast<long>(r) + dr, shape.rows);
    for (std::size_t c = 0; c < shape.cols; ++c) {
      const std::size_t cc = wrap(static_cast<long>(c) + dc, shape.cols);
      out[static_cast<Eigen::Index>(rr * shape.cols + cc)] =
          x[static_cast<Eigen::Index>(r * shape.cols + c)];
    }
  }
  return out;
}

Filter inverse_filter(const Filter& g, double rel_eps) {
  const ComplexVector gh = fft::forward(g.shape(), g.coeffs());
  require_invertible(gh, rel_eps);
  const ComplexVector inv = gh.cwiseInverse();
  return Filter(g.shape(), fft::inverse_real(g.shape(), inv));
}

double condition_number(const Filter& g, double rel_eps) {
  const ComplexVector gh = fft::forward(g.shape(), g.coeffs());
  require_invertible(gh, rel_eps);
  const Vector mags = gh.cwiseAbs();
  return mags.maxCoeff() / mags.minCoeff();
}

Filter unit_norm(const Filter& g) {
  const double norm = g.coeffs().norm();
  if (!(norm > 0.0)) throw NonInvertibleFilter("cannot normalize the zero filter");
  return Filter(g.shape(), g.coeffs() / norm);
}

Matrix dense_circulant(const Filter& g) {
  const Shape& s = g.shape();
  const auto n = static_cast<Eigen::Index>(s.size());
  Matrix c(n, n);
  // Column (r', c') holds g shifted by (r', c').
  for (std::size_t r0 = 0; r0 < s.rows; ++r0) {
    for (std::size_t c0 = 0; c0 < s.cols; ++c0) {
      c.col(static_cast<Eigen::Index>(r0 * s.cols + c0)) =
          circular_shift(g.coeffs(), s, static_cast<long>(r0), static_cast<long>(c0));
    }
  }
  return c;
}

}  // namespace msbd
