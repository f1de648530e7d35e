#include "msbd/surrogate.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include <fmt/format.h>

#include "msbd/errors.hpp"
#include "msbd/fft.hpp"

namespace msbd {
namespace {

double log_cosh(double u) {
  const double a = std::abs(u);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

// The r2c layout: for each row r, columns 0..cols/2 of the full spectrum.
Vector half_spectrum(const Shape& shape, const Vector& full) {
  const std::size_t hc = shape.cols / 2 + 1;
  Vector out(static_cast<Eigen::Index>(shape.rows * hc));
  for (std::size_t r = 0; r < shape.rows; ++r) {
    for (std::size_t c = 0; c < hc; ++c) {
      out[static_cast<Eigen::Index>(r * hc + c)] = full[static_cast<Eigen::Index>(r * shape.cols + c)];
    }
  }
  return out;
}

void require_unit(const Vector& h) {
  const double norm = h.norm();
  if (!(std::abs(norm - 1.0) <= 1e-9)) {
    throw DomainError(fmt::format("expected a unit vector, got norm {:.12g}", norm));
  }
}

}  // namespace

SurrogateValue surrogate_eval(double z, double mu) {
  if (!(mu > 0.0)) throw ParameterError(fmt::format("mu must be positive, got {}", mu));
  const double u = z / mu;
  const double t = std::tanh(u);
  // sech² = 4e/(1+e)² with e = exp(-2|u|); 1 - t² cancels to 0 for large |u|
  const double e = std::exp(-2.0 * std::abs(u));
  return {mu * log_cosh(u), t, 4.0 * e / ((1.0 + e) * (1.0 + e) * mu)};
}

double default_mu(std::size_t n) {
  return std::min(10.0 * std::pow(static_cast<double>(n), -1.25), 0.05);
}

Preconditioner::Preconditioner(const Shape& shape, Vector fourier_eigs)
    : shape_(shape), eigs_(std::move(fourier_eigs)) {
  if (static_cast<std::size_t>(eigs_.size()) != shape_.size()) {
    throw DimensionError("preconditioner eigenvalue count does not match the lattice");
  }
  if (!eigs_.allFinite() || !(eigs_.minCoeff() > 0.0)) {
    throw NonInvertiblePreconditioner("preconditioner eigenvalues must be finite and positive");
  }
}

Preconditioner Preconditioner::identity(const Shape& shape) {
  Preconditioner r(shape, Vector::Ones(static_cast<Eigen::Index>(shape.size())));
  r.identity_ = true;
  return r;
}

Vector Preconditioner::apply(const Vector& h) const {
  if (static_cast<std::size_t>(h.size()) != shape_.size()) {
    throw DimensionError("preconditioner applied to a vector of the wrong length");
  }
  if (identity_) return h;
  ComplexVector spec = fft::forward(shape_, h);
  spec.array() *= eigs_.array().cast<Complex>();
  return fft::inverse(shape_, spec).real();
}

Filter Preconditioner::as_filter() const {
  return Filter(shape_, fft::inverse(shape_, eigs_.cast<Complex>()).real());
}

Matrix Preconditioner::dense() const { return dense_circulant(as_filter()); }

Preconditioner build_preconditioner(const ObservationSet& obs, double theta, double rel_eps) {
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw ParameterError(fmt::format("theta must lie in (0, 1], got {}", theta));
  }
  if (obs.p() < 1) throw ParameterError("at least one observation is required");
  const Shape& shape = obs.shape;
  const auto& plan = fft::plan_for(shape);
  const auto n = static_cast<Eigen::Index>(shape.size());
  Vector power = Vector::Zero(n);
  ComplexVector buf(n);
  for (Eigen::Index i = 0; i < obs.p(); ++i) {
    buf = obs.Y.col(i).cast<Complex>();
    plan.forward(buf.data(), buf.data());
    power += buf.cwiseAbs2();
  }
  const Vector lambda = power / (theta * static_cast<double>(n) * static_cast<double>(obs.p()));
  const double hi = lambda.maxCoeff();
  const double lo = lambda.minCoeff();
  if (!(hi > 0.0) || !(lo > rel_eps * hi)) {
    throw NonInvertiblePreconditioner(fmt::format(
        "observation covariance eigenvalue {:.3e} is below {:.1e} x max {:.3e}", lo, rel_eps, hi));
  }
  return Preconditioner(shape, lambda.cwiseSqrt().cwiseInverse());
}

std::string_view to_string(LossKind kind) { return kind == LossKind::LogCosh ? "logcosh" : "l4"; }

LossKind parse_loss_kind(std::string_view text) {
  if (text == "logcosh") return LossKind::LogCosh;
  if (text == "l4") return LossKind::L4;
  throw ParameterError(fmt::format("unknown loss '{}' (expected logcosh or l4)", text));
}

Objective::Objective(const ObservationSet& obs, const Preconditioner& R, LossKind kind, double mu)
    : shape_(obs.shape), R_(R), kind_(kind), mu_(mu) {
  if (!(mu > 0.0)) throw ParameterError(fmt::format("mu must be positive, got {}", mu));
  if (R.shape() != obs.shape) throw DimensionError("preconditioner and observations disagree");
  const auto& plan = fft::plan_for(shape_);
  // Half spectra of a_i = C(y_i) R e_1; R's eigenvalues are symmetric, so the
  // first half_size() bins of the full DFT are what r2c produces.
  const auto half = static_cast<Eigen::Index>(plan.half_size());
  spectra_.resize(half, obs.p());
  const Eigen::VectorXd r_half = half_spectrum(shape_, R.fourier_eigs());
  for (Eigen::Index i = 0; i < obs.p(); ++i) {
    const Vector y = obs.Y.col(i);
    plan.forward_real(y.data(), spectra_.col(i).data());
    if (!R.is_identity()) spectra_.col(i).array() *= r_half.array().cast<Complex>();
  }
}

Filter Objective::operator_filter(Eigen::Index i) const {
  const auto& plan = fft::plan_for(shape_);
  ComplexVector buf = spectra_.col(i);
  Vector a(n());
  plan.backward_real(buf.data(), a.data());
  return Filter(shape_, a / static_cast<double>(n()));
}

double Objective::value(const Vector& h) const { return evaluate(h).value; }

double Objective::value_and_gradient(const Vector& h, Vector& grad) const {
  const Evaluation e = evaluate(h);
  grad = gradient(e);
  return e.value;
}

Evaluation Objective::evaluate(const Vector& h) const {
  const Eigen::Index n = this->n();
  if (h.size() != n) {
    throw DimensionError(fmt::format("objective expects length {}, got {}", n, h.size()));
  }
  const auto& plan = fft::plan_for(shape_);
  const double inv_n = 1.0 / static_cast<double>(n);

  ComplexVector h_hat(spectra_.rows());
  plan.forward_real(h.data(), h_hat.data());

  Evaluation e;
  e.responses.resize(n, p());
  ComplexVector buf(spectra_.rows());
  for (Eigen::Index i = 0; i < p(); ++i) {
    buf.array() = spectra_.col(i).array() * h_hat.array();
    plan.backward_real(buf.data(), e.responses.col(i).data());
  }

  e.responses *= inv_n;
  const auto z = e.responses.array();
  double total = 0.0;
  if (kind_ == LossKind::LogCosh) {
    // log cosh(u) = |u| + log(1 + e^{-2|u|}) - log 2. log rather than log1p:
    // e^{-2|u|} <= 1, so the absolute error stays at round-off, and the
    // vectorized log is much faster.
    const double inv_mu = 1.0 / mu_;
    total = mu_ * ((z.abs() * inv_mu + (1.0 + (z.abs() * (-2.0 * inv_mu)).exp()).log()).sum() -
                   std::numbers::ln2 * static_cast<double>(z.size()));
  } else {
    total = -0.25 * z.square().square().sum();
  }
  e.value = total / static_cast<double>(p());
  return e;
}

Matrix Objective::derivative(const Evaluation& e) const {
  const auto z = e.responses.array();
  if (kind_ == LossKind::LogCosh) {
    // tanh(u) = sign(u) (1 - e^{-2|u|}) / (1 + e^{-2|u|}); Eigen's tanh is slower.
    const Eigen::ArrayXXd ex = (z.abs() * (-2.0 / mu_)).exp();
    return (z.sign() * (1.0 - ex) / (1.0 + ex)).matrix();
  }
  return (-z.cube()).matrix();
}

Vector Objective::gradient(const Evaluation& e) const {
  const Eigen::Index n = this->n();
  if (e.responses.rows() != n || e.responses.cols() != p()) {
    throw DimensionError("evaluation does not belong to this objective");
  }
  const Matrix d = derivative(e);
  const auto& plan = fft::plan_for(shape_);
  ComplexVector buf(spectra_.rows());
  ComplexVector acc = ComplexVector::Zero(spectra_.rows());
  for (Eigen::Index i = 0; i < p(); ++i) {
    plan.forward_real(d.col(i).data(), buf.data());
    acc.array() += spectra_.col(i).array().conjugate() * buf.array();
  }
  Vector grad(n);
  plan.backward_real(acc.data(), grad.data());
  return grad / (static_cast<double>(n) * static_cast<double>(p()));
}

double loss_value(const Vector& h, const ObservationSet& obs, const Preconditioner& R,
                  const LossConfig& cfg) {
  require_unit(h);
  return Objective(obs, R, LossKind::LogCosh, cfg.mu).value(h);
}

Vector euclidean_gradient(const Vector& h, const ObservationSet& obs, const Preconditioner& R,
                          const LossConfig& cfg) {
  require_unit(h);
  Vector g;
  Objective(obs, R, LossKind::LogCosh, cfg.mu).value_and_gradient(h, g);
  return g;
}

ValueAndGradient l4_loss_gradient(const Vector& h, const ObservationSet& obs,
                                  const Preconditioner& R) {
  require_unit(h);
  ValueAndGradient out;
  // mu is unused by the l4 objective.
  out.value = Objective(obs, R, LossKind::L4, 1.0).value_and_gradient(h, out.gradient);
  return out;
}

}  // namespace msbd
