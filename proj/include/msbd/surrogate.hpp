#pragma once

#include <string_view>
#include <vector>

#include "msbd/circulant.hpp"
#include "msbd/signal_model.hpp"
#include "msbd/types.hpp"

namespace msbd {

struct SurrogateValue {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

/// ψ_μ(z) = μ log cosh(z/μ) with its first two derivatives. The log cosh is
/// evaluated as |u| + log1p(e^{-2|u|}) - log 2, which never overflows.
SurrogateValue surrogate_eval(double z, double mu);

/// min(10 n^{-5/4}, 0.05), the smoothing used for the synthetic experiments.
double default_mu(std::size_t n);

struct LossConfig {
  double mu = 0.05;
  /// Activation probability assumed when building the preconditioner.
  double theta = 0.3;

  static LossConfig defaults(std::size_t n, double theta) { return {default_mu(n), theta}; }
};

/// Symmetric positive-definite circulant operator stored by its DFT
/// eigenvalues (all real and positive).
class Preconditioner {
 public:
  Preconditioner(const Shape& shape, Vector fourier_eigs);

  static Preconditioner identity(const Shape& shape);

  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] const Vector& fourier_eigs() const { return eigs_; }
  [[nodiscard]] bool is_identity() const { return identity_; }

  [[nodiscard]] Vector apply(const Vector& h) const;
  /// R e_1, the first column of R.
  [[nodiscard]] Filter as_filter() const;
  [[nodiscard]] Matrix dense() const;

 private:
  Shape shape_;
  Vector eigs_;
  bool identity_ = false;
};

/// R = [(1/(θnp)) Σ C(y_i)ᵀ C(y_i)]^{-1/2}. The average is circulant with
/// eigenvalues λ_k = (1/(θnp)) Σ |ŷ_i[k]|², so R has eigenvalues λ_k^{-1/2}.
/// Throws NonInvertiblePreconditioner if some λ_k <= rel_eps * max λ.
Preconditioner build_preconditioner(const ObservationSet& obs, double theta,
                                    double rel_eps = kDefaultInvertRelEps);

enum class LossKind { LogCosh, L4 };

/// The loss at one point together with the responses A_i h (column i for
/// observation i), from which the gradient follows with one forward FFT per
/// observation.
struct Evaluation {
  double value = 0.0;
  Matrix responses;
};

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view text);

/// The empirical objective over the observations, with A_i = C(y_i) R.
///
///   logcosh:  f(h) = (1/p) Σ_i Σ_k ψ_μ([A_i h]_k)
///   l4:       L(h) = -(1/(4p)) Σ_i ||A_i h||_4^4
///
/// Evaluation is unconstrained (h need not be unit norm) so the gradient is
/// the Euclidean gradient of the extension to R^n. Each evaluation costs one
/// inverse and, with the gradient, one forward FFT per observation; the
/// gradient is accumulated in the frequency domain.
class Objective {
 public:
  Objective(const ObservationSet& obs, const Preconditioner& R, LossKind kind, double mu);

  [[nodiscard]] double value(const Vector& h) const;
  double value_and_gradient(const Vector& h, Vector& grad) const;

  /// Split form used by line searches: evaluate at trial points, and form the
  /// gradient only for the accepted one.
  [[nodiscard]] Evaluation evaluate(const Vector& h) const;
  [[nodiscard]] Vector gradient(const Evaluation& e) const;
  /// ψ' (logcosh) or -z³ (l4) applied entrywise to the responses.
  [[nodiscard]] Matrix derivative(const Evaluation& e) const;

  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] Eigen::Index n() const { return static_cast<Eigen::Index>(shape_.size()); }
  [[nodiscard]] Eigen::Index p() const { return spectra_.cols(); }
  [[nodiscard]] LossKind kind() const { return kind_; }
  [[nodiscard]] double mu() const { return mu_; }
  [[nodiscard]] const Preconditioner& preconditioner() const { return R_; }

  /// The filters a_i = C(y_i) R e_1, so that A_i = C(a_i).
  [[nodiscard]] Filter operator_filter(Eigen::Index i) const;

 private:
  Shape shape_;
  Preconditioner R_;
  LossKind kind_;
  double mu_;
  Eigen::MatrixXcd spectra_;  // column i: DFT of a_i
};

/// f(h) for unit h; throws DomainError if |‖h‖ - 1| > 1e-9.
double loss_value(const Vector& h, const ObservationSet& obs, const Preconditioner& R,
                  const LossConfig& cfg);

/// ∇f(h) = (1/p) Σ Rᵀ C(y_i)ᵀ tanh(C(y_i) R h / μ) for unit h.
Vector euclidean_gradient(const Vector& h, const ObservationSet& obs, const Preconditioner& R,
                          const LossConfig& cfg);

struct ValueAndGradient {
  double value = 0.0;
  Vector gradient;
};

/// ℓ4 baseline value and Euclidean gradient for unit h.
ValueAndGradient l4_loss_gradient(const Vector& h, const ObservationSet& obs,
                                  const Preconditioner& R);

}  // namespace msbd
