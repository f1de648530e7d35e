#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "msbd/circulant.hpp"
#include "msbd/types.hpp"

namespace msbd {

/// Sparse inputs x_i = Ω_i ⊙ z_i stored as the columns of an n x p matrix.
struct SparseInputs {
  Shape shape;
  Matrix X;
  double theta = 0.0;
  std::uint64_t seed = 0;

  [[nodiscard]] Eigen::Index n() const { return X.rows(); }
  [[nodiscard]] Eigen::Index p() const { return X.cols(); }
};

/// p observations y_i (columns of Y). The generating filter and inputs are kept
/// when the set was synthesized, so harnesses can score recoveries.
struct ObservationSet {
  Shape shape;
  Matrix Y;
  double theta = 0.0;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  std::optional<Filter> filter;
  std::optional<Matrix> inputs;

  [[nodiscard]] Eigen::Index n() const { return Y.rows(); }
  [[nodiscard]] Eigen::Index p() const { return Y.cols(); }

  /// Wraps a bare matrix (no provenance).
  static ObservationSet from_matrix(const Shape& shape, Matrix Y);
};

/// i.i.d. Bernoulli(θ) x N(0,1) entries. θ = 1 is accepted and gives a dense
/// Gaussian matrix.
SparseInputs sample_bernoulli_gaussian(const Shape& shape, Eigen::Index p, double theta,
                                       std::uint64_t seed);
SparseInputs sample_bernoulli_gaussian(Eigen::Index n, Eigen::Index p, double theta,
                                       std::uint64_t seed);

struct SynthesizedFilter {
  Filter filter;
  /// |ĝ_k| as drawn, for k = 0..n-1 (mirrored bins repeat their partner).
  Vector gains;
};

/// Random real filter whose spectral gains are i.i.d. Uniform[1, κ].
///
/// Index map (0-based bins): ĝ_k = conj(ĝ_{n-k}) for k = 1..n-1. Bins
/// k = 1..⌈n/2⌉-1 draw a gain and a phase in [0, 2π); their mirrors are set by
/// conjugation. The DC bin is real and positive. For even n the Nyquist bin
/// k = n/2 is real with a uniformly random sign.
SynthesizedFilter synthesize_filter_with_gains(Eigen::Index n, double kappa, std::uint64_t seed);
Filter synthesize_filter(Eigen::Index n, double kappa, std::uint64_t seed);

/// y_i = C(g) x_i + σ w_i, with w drawn from the noise stream of `inputs.seed`.
ObservationSet generate_observations(const Filter& g, const SparseInputs& inputs,
                                     double noise_sigma = 0.0);

/// Convenience bundle used by the harnesses.
struct ProblemSpec {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  double theta = 0.3;
  double kappa = 1.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Synthesizes filter (identity when κ == 1 and `orthogonal_identity`),
/// inputs and observations for one trial.
ObservationSet synthesize_problem(const ProblemSpec& spec, bool orthogonal_identity = false);

/// Observation file: '#'-prefixed header lines carrying key=value metadata
/// (format, rows, cols, n, p, theta, seed, sigma) followed by the n x p matrix
/// Y in row-major order, one matrix row per line, comma separated, 17
/// significant digits.
void write_observations(const std::filesystem::path& path, const ObservationSet& obs);
ObservationSet read_observations(const std::filesystem::path& path);

/// One value per line, 17 significant digits.
void write_vector(const std::filesystem::path& path, const Vector& v);
Vector read_vector(const std::filesystem::path& path);

}  // namespace msbd
