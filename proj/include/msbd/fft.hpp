#pragma once

#include <memory>

#include "msbd/types.hpp"

namespace msbd::fft {

/// A forward/backward FFTW plan pair for one lattice shape. Both directions
/// are unnormalized; callers scale the backward result by 1/size().
///
/// Instances are obtained through `plan_for`, which keeps a per-thread cache,
/// so a Plan must never be handed to another thread.
class Plan {
 public:
  explicit Plan(const Shape& shape);
  ~Plan();
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;

  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] std::size_t size() const { return shape_.size(); }

  // `in` and `out` may alias.
  void forward(const Complex* in, Complex* out) const;
  void backward(const Complex* in, Complex* out) const;

  /// Real-input transforms over the half spectrum (rows x (cols/2 + 1),
  /// row-major). Unnormalized; `in` and `out` must not alias, and
  /// backward_real overwrites its input.
  [[nodiscard]] std::size_t half_size() const { return shape_.rows * (shape_.cols / 2 + 1); }
  void forward_real(const double* in, Complex* out) const;
  void backward_real(Complex* in, double* out) const;

 private:
  Shape shape_;
  struct Handles;
  std::unique_ptr<Handles> handles_;
};

const Plan& plan_for(const Shape& shape);

/// Unnormalized DFT of a real signal.
ComplexVector forward(const Shape& shape, const Vector& x);
ComplexVector forward(const Shape& shape, const ComplexVector& x);

/// Inverse DFT including the 1/N factor.
ComplexVector inverse(const Shape& shape, const ComplexVector& spectrum);

/// Inverse DFT of a spectrum that should belong to a real signal. Throws
/// NumericalError when the imaginary residue exceeds `rel_tol` times the
/// norm of the complex result.
Vector inverse_real(const Shape& shape, const ComplexVector& spectrum,
                    double rel_tol = 1e-9);

}  // namespace msbd::fft
