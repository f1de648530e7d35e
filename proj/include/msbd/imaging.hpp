#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "msbd/solver.hpp"
#include "msbd/types.hpp"

namespace msbd {

enum class Channel { Mono, Red, Green, Blue };

/// One channel of an image, row-major, linear intensity.
struct ImagePlane {
  Shape shape;
  Vector pixels;
  Channel channel = Channel::Mono;

  ImagePlane() = default;
  ImagePlane(const Shape& shape, Vector pixels, Channel channel = Channel::Mono);

  [[nodiscard]] double at(std::size_t r, std::size_t c) const {
    return pixels[static_cast<Eigen::Index>(r * shape.cols + c)];
  }
};

/// A mono (one plane) or RGB (three planes) image.
struct Image {
  std::vector<ImagePlane> planes;

  [[nodiscard]] const Shape& shape() const { return planes.front().shape; }
  [[nodiscard]] bool is_mono() const { return planes.size() == 1; }
};

enum class KernelMode { MotionBlur, BernoulliGaussian };

struct KernelStack {
  std::vector<ImagePlane> kernels;
  KernelMode mode = KernelMode::BernoulliGaussian;
};

/// Two-dimensional circular convolution through the 2D DFT.
ImagePlane conv2d_apply(const ImagePlane& g, const ImagePlane& x);

/// p Bernoulli-Gaussian sparse kernels on the image lattice.
KernelStack bernoulli_gaussian_kernels(const Shape& shape, std::size_t p, double theta,
                                       std::uint64_t seed);

/// Observations y_i = g ⊛ k_i for one image plane.
std::vector<ImagePlane> blur_plane(const ImagePlane& image, const KernelStack& kernels);

struct ShiftAlignment {
  long rows = 0;
  long cols = 0;
  Sign sign = Sign::Plus;
  /// Normalized correlation at the optimum, in [0, 1].
  double correlation = 0.0;
};

/// The circular shift and sign maximizing <reference, sign * S_(dr,dc) moving>.
ShiftAlignment align_to(const ImagePlane& moving, const ImagePlane& reference);

/// Applies an alignment found by `align_to`.
ImagePlane apply_alignment(const ImagePlane& moving, const ShiftAlignment& alignment);

/// min over shift, sign and scale of ||truth - c S(estimate)|| / ||truth||.
double aligned_relative_error(const ImagePlane& estimate, const ImagePlane& truth);

/// ||x||_∞ / ||x||_2, 1 for a (scaled, shifted) delta.
double peak_ratio(const ImagePlane& plane);

struct ChannelRecovery {
  Channel channel = Channel::Mono;
  ImagePlane image;
  ShiftAlignment alignment;
  RecoveryResult solve;
};

struct DeblurResult {
  /// Per-channel recoveries, aligned to the first channel and scaled so that
  /// ||ĝ||² = mean_i ||y_i||² / (θ n), the energy the observations imply.
  std::vector<ChannelRecovery> channels;

  [[nodiscard]] Image image() const;
};

/// Per channel: builds the 2D preconditioner from the observations, runs MGD
/// with restarts, forms ĝ = F⁻¹[F(R ĥ)^{⊙-1}] and aligns it to the first
/// channel. Throws ReconstructionError when F(R ĥ) has a (relative) zero.
DeblurResult deblur_channels(const std::vector<std::vector<ImagePlane>>& observations,
                             const SolverConfig& cfg, double rel_eps = 1e-10);

/// Reads a PNG kernel, converts it to grayscale, embeds it centred on an
/// H x W canvas with circular wrap and normalizes it to unit sum.
ImagePlane kernel_ingest(const std::filesystem::path& path, const Shape& canvas);
ImagePlane kernel_from_plane(const ImagePlane& raw, const Shape& canvas);

/// 8-bit PNG I/O. Values are linear intensities in [0, 1] (pixel / 255).
Image read_png(const std::filesystem::path& path);
/// Writes planes clamped to [0, 1]; with `stretch`, first maps the joint
/// [min, max] of all planes onto [0, 1].
void write_png(const std::filesystem::path& path, const Image& image, bool stretch = false);

/// Deterministic test scene: smooth background with a few blobs and bars.
ImagePlane synthetic_scene(const Shape& shape, std::uint64_t seed);

}  // namespace msbd
