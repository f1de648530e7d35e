#include "msbd/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "msbd/errors.hpp"

namespace msbd::fft {
namespace {

// The FFTW planner is not reentrant; only fftw_execute_* is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }
fftw_complex* as_fftw(const Complex* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<Complex*>(p));
}

void check_size(const Shape& shape, Eigen::Index n) {
  if (shape.size() == 0 || static_cast<std::size_t>(n) != shape.size()) {
    throw DimensionError(fmt::format("fft: signal length {} does not match shape {}x{}", n,
                                     shape.rows, shape.cols));
  }
}

}  // namespace

struct Plan::Handles {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

Plan::Plan(const Shape& shape) : shape_(shape), handles_(std::make_unique<Handles>()) {
  if (shape.size() == 0) throw DimensionError("fft: empty shape");
  ComplexVector scratch(static_cast<Eigen::Index>(shape.size()));
  const int rows = static_cast<int>(shape.rows);
  const int cols = static_cast<int>(shape.cols);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard lock(planner_mutex());
  handles_->fwd = fftw_plan_dft_2d(rows, cols, as_fftw(scratch.data()), as_fftw(scratch.data()),
                                   FFTW_FORWARD, flags);
  handles_->bwd = fftw_plan_dft_2d(rows, cols, as_fftw(scratch.data()), as_fftw(scratch.data()),
                                   FFTW_BACKWARD, flags);
  std::vector<double> real_scratch(shape.size());
  ComplexVector half(static_cast<Eigen::Index>(half_size()));
  handles_->r2c = fftw_plan_dft_r2c_2d(rows, cols, real_scratch.data(), as_fftw(half.data()), flags);
  handles_->c2r = fftw_plan_dft_c2r_2d(rows, cols, as_fftw(half.data()), real_scratch.data(), flags);
  if (handles_->fwd == nullptr || handles_->bwd == nullptr || handles_->r2c == nullptr ||
      handles_->c2r == nullptr) {
    throw NumericalError("fft: FFTW failed to create a plan");
  }
}

Plan::~Plan() {
  std::lock_guard lock(planner_mutex());
  if (handles_->fwd != nullptr) fftw_destroy_plan(handles_->fwd);
  if (handles_->bwd != nullptr) fftw_destroy_plan(handles_->bwd);
  if (handles_->r2c != nullptr) fftw_destroy_plan(handles_->r2c);
  if (handles_->c2r != nullptr) fftw_destroy_plan(handles_->c2r);
}

void Plan::forward(const Complex* in, Complex* out) const {
  fftw_execute_dft(handles_->fwd, as_fftw(in), as_fftw(out));
}

void Plan::backward(const Complex* in, Complex* out) const {
  fftw_execute_dft(handles_->bwd, as_fftw(in), as_fftw(out));
}

void Plan::forward_real(const double* in, Complex* out) const {
  fftw_execute_dft_r2c(handles_->r2c, const_cast<double*>(in), as_fftw(out));
}

void Plan::backward_real(Complex* in, double* out) const {
  fftw_execute_dft_c2r(handles_->c2r, as_fftw(in), out);
}

const Plan& plan_for(const Shape& shape) {
  thread_local std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<Plan>> cache;
  auto& slot = cache[{shape.rows, shape.cols}];
  if (!slot) slot = std::make_unique<Plan>(shape);
  return *slot;
}

ComplexVector forward(const Shape& shape, const Vector& x) {
  check_size(shape, x.size());
  ComplexVector out = x.cast<Complex>();
  plan_for(shape).forward(out.data(), out.data());
  return out;
}

ComplexVector forward(const Shape& shape, const ComplexVector& x) {
  check_size(shape, x.size());
  ComplexVector out = x;
  plan_for(shape).forward(out.data(), out.data());
  return out;
}

ComplexVector inverse(const Shape& shape, const ComplexVector& spectrum) {
  check_size(shape, spectrum.size());
  ComplexVector out = spectrum;
  plan_for(shape).backward(out.data(), out.data());
  out /= static_cast<double>(shape.size());
  return out;
}

Vector inverse_real(const Shape& shape, const ComplexVector& spectrum, double rel_tol) {
  const ComplexVector full = inverse(shape, spectrum);
  const double residue = full.imag().norm();
  const double scale = full.norm();
  if (!(residue <= rel_tol * scale) && residue > 0.0) {
    throw NumericalError(fmt::format(
        "fft: imaginary residue {:.3e} exceeds {:.1e} x result norm {:.3e}", residue, rel_tol,
        scale));
  }
  return full.real();
}

}  // namespace msbd::fft
