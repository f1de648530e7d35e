#include "msbd/imaging.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <fmt/format.h>

#include "msbd/circulant.hpp"
#include "msbd/errors.hpp"
#include "msbd/fft.hpp"
#include "msbd/rng.hpp"
#include "msbd/signal_model.hpp"

namespace msbd {
namespace {

void require_same_shape(const ImagePlane& a, const ImagePlane& b, const char* what) {
  if (a.shape != b.shape) {
    throw ShapeError(fmt::format("{}: {}x{} vs {}x{}", what, a.shape.rows, a.shape.cols,
                                 b.shape.rows, b.shape.cols));
  }
}

/// corr[s] = <reference, S_s moving> over all 2D circular shifts s.
Vector cross_correlation(const ImagePlane& moving, const ImagePlane& reference) {
  const ComplexVector spec = fft::forward(reference.shape, reference.pixels)
                                 .cwiseProduct(fft::forward(moving.shape, moving.pixels).conjugate());
  return fft::inverse(reference.shape, spec).real();
}

std::size_t wrap(long k, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((k % m) + m) % m);
}

}  // namespace

ImagePlane::ImagePlane(const Shape& shape_, Vector pixels_, Channel channel_)
    : shape(shape_), pixels(std::move(pixels_)), channel(channel_) {
  if (shape.rows < 2 || shape.cols < 2) throw ShapeError("image planes must be at least 2x2");
  if (static_cast<std::size_t>(pixels.size()) != shape.size()) {
    throw ShapeError("pixel count does not match the plane shape");
  }
  if (!pixels.allFinite()) throw ParameterError("image pixels must be finite");
}

ImagePlane conv2d_apply(const ImagePlane& g, const ImagePlane& x) {
  require_same_shape(g, x, "conv2d_apply");
  return ImagePlane(g.shape, conv_apply(Filter(g.shape, g.pixels), x.pixels), g.channel);
}

KernelStack bernoulli_gaussian_kernels(const Shape& shape, std::size_t p, double theta,
                                       std::uint64_t seed) {
  const SparseInputs x =
      sample_bernoulli_gaussian(shape, static_cast<Eigen::Index>(p), theta, seed);
  KernelStack stack;
  stack.mode = KernelMode::BernoulliGaussian;
  stack.kernels.reserve(p);
  for (Eigen::Index i = 0; i < x.p(); ++i) stack.kernels.emplace_back(shape, x.X.col(i));
  return stack;
}

std::vector<ImagePlane> blur_plane(const ImagePlane& image, const KernelStack& kernels) {
  std::vector<ImagePlane> out;
  out.reserve(kernels.kernels.size());
  for (const auto& k : kernels.kernels) {
    ImagePlane y = conv2d_apply(image, k);
    y.channel = image.channel;
    out.push_back(std::move(y));
  }
  return out;
}

ShiftAlignment align_to(const ImagePlane& moving, const ImagePlane& reference) {
  require_same_shape(moving, reference, "align_to");
  const Vector corr = cross_correlation(moving, reference);
  ShiftAlignment best;
  double best_value = -std::numeric_limits<double>::infinity();
  for (Eigen::Index s = 0; s < corr.size(); ++s) {
    for (const Sign sign : {Sign::Plus, Sign::Minus}) {
      const double v = to_double(sign) * corr[s];
      if (v > best_value) {
        best_value = v;
        best.rows = static_cast<long>(static_cast<std::size_t>(s) / reference.shape.cols);
        best.cols = static_cast<long>(static_cast<std::size_t>(s) % reference.shape.cols);
        best.sign = sign;
      }
    }
  }
  const double denom = moving.pixels.norm() * reference.pixels.norm();
  best.correlation = denom > 0.0 ? std::min(1.0, best_value / denom) : 0.0;
  return best;
}

ImagePlane apply_alignment(const ImagePlane& moving, const ShiftAlignment& alignment) {
  return ImagePlane(moving.shape,
                    to_double(alignment.sign) *
                        circular_shift(moving.pixels, moving.shape, alignment.rows, alignment.cols),
                    moving.channel);
}

double aligned_relative_error(const ImagePlane& estimate, const ImagePlane& truth) {
  require_same_shape(estimate, truth, "aligned_relative_error");
  const double te = truth.pixels.norm();
  const double ee = estimate.pixels.norm();
  if (!(te > 0.0)) throw ParameterError("reference image is zero");
  if (!(ee > 0.0)) return 1.0;
  const double peak = cross_correlation(estimate, truth).cwiseAbs().maxCoeff() / (te * ee);
  return std::sqrt(std::max(0.0, 1.0 - peak * peak));
}

double peak_ratio(const ImagePlane& plane) {
  const double l2 = plane.pixels.norm();
  return l2 > 0.0 ? plane.pixels.cwiseAbs().maxCoeff() / l2 : 0.0;
}

Image DeblurResult::image() const {
  Image out;
  for (const auto& c : channels) out.planes.push_back(c.image);
  return out;
}

DeblurResult deblur_channels(const std::vector<std::vector<ImagePlane>>& observations,
                             const SolverConfig& cfg, double rel_eps) {
  if (observations.empty()) throw ParameterError("no channels to deblur");
  const Shape shape = observations.front().empty() ? Shape{} : observations.front().front().shape;
  DeblurResult result;
  for (std::size_t c = 0; c < observations.size(); ++c) {
    const auto& planes = observations[c];
    if (planes.empty()) throw ParameterError("every channel needs at least one observation");
    const auto n = static_cast<Eigen::Index>(shape.size());
    ObservationSet obs =
        ObservationSet::from_matrix(shape, Matrix(n, static_cast<Eigen::Index>(planes.size())));
    for (std::size_t i = 0; i < planes.size(); ++i) {
      if (planes[i].shape != shape) throw ShapeError("all observation planes must share a shape");
      obs.Y.col(static_cast<Eigen::Index>(i)) = planes[i].pixels;
    }
    obs.theta = cfg.theta;

    SolverConfig channel_cfg = cfg;
    channel_cfg.seed = derive_seed(cfg.seed, 0x100 + static_cast<std::uint64_t>(planes[0].channel));
    RecoveryResult solve = run_with_restarts(obs, channel_cfg);

    const ComplexVector spec = fft::forward(shape, solve.g_inv_hat);
    const Vector mags = spec.cwiseAbs();
    if (!(mags.minCoeff() > rel_eps * mags.maxCoeff())) {
      throw ReconstructionError(fmt::format(
          "recovered inverse filter has spectral magnitude {:.3e} (max {:.3e})",
          mags.minCoeff(), mags.maxCoeff()));
    }
    Vector g_hat = fft::inverse_real(shape, spec.cwiseInverse());

    const double energy =
        obs.Y.colwise().squaredNorm().mean() / (cfg.theta * static_cast<double>(n));
    g_hat *= std::sqrt(energy) / g_hat.norm();

    ChannelRecovery rec{planes[0].channel, ImagePlane(shape, std::move(g_hat), planes[0].channel),
                        ShiftAlignment{}, std::move(solve)};
    if (c == 0) {
      // Intensities are non-negative on average; pick that sign for the reference.
      if (rec.image.pixels.sum() < 0.0) {
        rec.image.pixels = -rec.image.pixels;
        rec.alignment.sign = Sign::Minus;
      }
      rec.alignment.correlation = 1.0;
    } else {
      rec.alignment = align_to(rec.image, result.channels.front().image);
      rec.image = apply_alignment(rec.image, rec.alignment);
    }
    result.channels.push_back(std::move(rec));
  }
  return result;
}

ImagePlane kernel_from_plane(const ImagePlane& raw, const Shape& canvas) {
  if (canvas.rows < 2 || canvas.cols < 2) throw ShapeError("kernel canvas must be at least 2x2");
  Vector out = Vector::Zero(static_cast<Eigen::Index>(canvas.size()));
  const long cr = static_cast<long>(raw.shape.rows / 2);
  const long cc = static_cast<long>(raw.shape.cols / 2);
  for (std::size_t r = 0; r < raw.shape.rows; ++r) {
    for (std::size_t c = 0; c < raw.shape.cols; ++c) {
      const std::size_t rr = wrap(static_cast<long>(r) - cr, canvas.rows);
      const std::size_t cc2 = wrap(static_cast<long>(c) - cc, canvas.cols);
      out[static_cast<Eigen::Index>(rr * canvas.cols + cc2)] += std::max(0.0, raw.at(r, c));
    }
  }
  const double mass = out.sum();
  if (!(mass > 0.0)) throw DegenerateKernel("kernel has no positive mass");
  return ImagePlane(canvas, out / mass, Channel::Mono);
}

ImagePlane kernel_ingest(const std::filesystem::path& path, const Shape& canvas) {
  const Image img = read_png(path);
  Vector gray = Vector::Zero(static_cast<Eigen::Index>(img.shape().size()));
  for (const auto& p : img.planes) gray += p.pixels;
  gray /= static_cast<double>(img.planes.size());
  // Kernel files may be 1 pixel wide; ImagePlane needs 2x2, so pad to at least that.
  Shape raw_shape{std::max<std::size_t>(2, img.shape().rows),
                  std::max<std::size_t>(2, img.shape().cols)};
  Vector padded = Vector::Zero(static_cast<Eigen::Index>(raw_shape.size()));
  for (std::size_t r = 0; r < img.shape().rows; ++r) {
    for (std::size_t c = 0; c < img.shape().cols; ++c) {
      padded[static_cast<Eigen::Index>(r * raw_shape.cols + c)] =
          gray[static_cast<Eigen::Index>(r * img.shape().cols + c)];
    }
  }
  return kernel_from_plane(ImagePlane(raw_shape, std::move(padded)), canvas);
}

Image read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
    throw IoError(fmt::format("cannot read PNG '{}': {}", path.string(), image.message));
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = color ? 3 : 1;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
    throw IoError(fmt::format("cannot decode PNG '{}': {}", path.string(), image.message));
  }
  const Shape shape{image.height, image.width};
  Image out;
  const Channel names[3] = {Channel::Red, Channel::Green, Channel::Blue};
  for (std::size_t ch = 0; ch < channels; ++ch) {
    Vector px(static_cast<Eigen::Index>(shape.size()));
    for (std::size_t k = 0; k < shape.size(); ++k) {
      px[static_cast<Eigen::Index>(k)] = buffer[k * channels + ch] / 255.0;
    }
    ImagePlane plane;
    plane.shape = shape;
    plane.pixels = std::move(px);
    plane.channel = color ? names[ch] : Channel::Mono;
    out.planes.push_back(std::move(plane));
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Image& img, bool stretch) {
  if (img.planes.size() != 1 && img.planes.size() != 3) {
    throw ParameterError("PNG output needs 1 or 3 planes");
  }
  const Shape shape = img.shape();
  double lo = 0.0;
  double hi = 1.0;
  if (stretch) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (const auto& p : img.planes) {
      lo = std::min(lo, p.pixels.minCoeff());
      hi = std::max(hi, p.pixels.maxCoeff());
    }
    if (!(hi > lo)) hi = lo + 1.0;
  }
  const std::size_t channels = img.planes.size();
  std::vector<png_byte> buffer(shape.size() * channels);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    const Vector& px = img.planes[ch].pixels;
    for (std::size_t k = 0; k < shape.size(); ++k) {
      const double v = std::clamp((px[static_cast<Eigen::Index>(k)] - lo) / (hi - lo), 0.0, 1.0);
      buffer[k * channels + ch] = static_cast<png_byte>(std::lround(v * 255.0));
    }
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(shape.cols);
  image.height = static_cast<png_uint_32>(shape.rows);
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr) == 0) {
    throw IoError(fmt::format("cannot write PNG '{}': {}", path.string(), image.message));
  }
}

ImagePlane synthetic_scene(const Shape& shape, std::uint64_t seed) {
  // Smooth blobs alone have a spectrum that vanishes at high frequencies, so
  // the scene also gets sharp-edged rectangles and a faint pixel texture, as
  // natural images do. That keeps every DFT bin away from zero.
  Rng rng(seed, Stream::Image);
  const auto idx = [&](std::size_t r, std::size_t c) {
    return static_cast<Eigen::Index>((r % shape.rows) * shape.cols + c % shape.cols);
  };
  Vector px = Vector::Constant(static_cast<Eigen::Index>(shape.size()), 0.2);
  const double rows = static_cast<double>(shape.rows);
  const double cols = static_cast<double>(shape.cols);
  for (int blob = 0; blob < 4; ++blob) {
    const double r0 = rng.uniform(0.0, rows);
    const double c0 = rng.uniform(0.0, cols);
    const double sigma = rng.uniform(0.8, 2.5);
    const double amp = rng.uniform(0.3, 0.8);
    for (std::size_t r = 0; r < shape.rows; ++r) {
      for (std::size_t c = 0; c < shape.cols; ++c) {
        // Periodic distance keeps the scene consistent with circular convolution.
        double dr = std::abs(static_cast<double>(r) - r0);
        double dc = std::abs(static_cast<double>(c) - c0);
        dr = std::min(dr, rows - dr);
        dc = std::min(dc, cols - dc);
        px[idx(r, c)] += amp * std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
      }
    }
  }
  for (int box = 0; box < 5; ++box) {
    const auto r0 = static_cast<std::size_t>(rng.uniform(0.0, rows));
    const auto c0 = static_cast<std::size_t>(rng.uniform(0.0, cols));
    const auto h = static_cast<std::size_t>(rng.uniform(2.0, std::max(3.0, rows / 3.0)));
    const auto w = static_cast<std::size_t>(rng.uniform(2.0, std::max(3.0, cols / 3.0)));
    const double amp = rng.uniform(-0.3, 0.5);
    for (std::size_t r = r0; r < r0 + h; ++r) {
      for (std::size_t c = c0; c < c0 + w; ++c) px[idx(r, c)] += amp;
    }
  }
  for (Eigen::Index k = 0; k < px.size(); ++k) px[k] += rng.uniform(0.0, 0.1);
  return ImagePlane(shape, std::move(px));
}

}  // namespace msbd
