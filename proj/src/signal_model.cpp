#include "msbd/signal_model.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

#include <fmt/format.h>

#include "msbd/errors.hpp"
#include "msbd/fft.hpp"
#include "msbd/rng.hpp"

namespace msbd {

ObservationSet ObservationSet::from_matrix(const Shape& shape, Matrix Y) {
  if (static_cast<std::size_t>(Y.rows()) != shape.size()) {
    throw DimensionError("observation rows do not match the lattice size");
  }
  ObservationSet obs;
  obs.shape = shape;
  obs.Y = std::move(Y);
  return obs;
}

SparseInputs sample_bernoulli_gaussian(const Shape& shape, Eigen::Index p, double theta,
                                       std::uint64_t seed) {
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw ParameterError(fmt::format("theta must lie in (0, 1], got {}", theta));
  }
  if (shape.size() < 1 || p < 1) throw ParameterError("n and p must be positive");
  Rng rng(seed, Stream::Inputs);
  SparseInputs out;
  out.shape = shape;
  out.theta = theta;
  out.seed = seed;
  out.X.resize(static_cast<Eigen::Index>(shape.size()), p);
  // Column-major fill: observation i is generated in full before i + 1.
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index k = 0; k < out.X.rows(); ++k) {
      const bool active = rng.bernoulli(theta);
      const double z = rng.normal();
      out.X(k, i) = active ? z : 0.0;
    }
  }
  return out;
}

SparseInputs sample_bernoulli_gaussian(Eigen::Index n, Eigen::Index p, double theta,
                                       std::uint64_t seed) {
  return sample_bernoulli_gaussian(Shape::line(static_cast<std::size_t>(n)), p, theta, seed);
}

SynthesizedFilter synthesize_filter_with_gains(Eigen::Index n, double kappa, std::uint64_t seed) {
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) {
    throw ParameterError(fmt::format("kappa must be >= 1, got {}", kappa));
  }
  if (n < 2) throw ParameterError("filter length must be at least 2");
  Rng rng(seed, Stream::Filter);
  ComplexVector spec(n);
  Vector gains(n);

  const double dc = rng.uniform(1.0, kappa);
  spec[0] = Complex(dc, 0.0);
  gains[0] = dc;

  const Eigen::Index half = (n + 1) / 2;  // free bins are 1..half-1
  for (Eigen::Index k = 1; k < half; ++k) {
    const double gain = rng.uniform(1.0, kappa);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    spec[k] = std::polar(gain, phase);
    spec[n - k] = std::conj(spec[k]);
    gains[k] = gains[n - k] = gain;
  }
  if (n % 2 == 0) {
    const double gain = rng.uniform(1.0, kappa);
    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    spec[n / 2] = Complex(sign * gain, 0.0);
    gains[n / 2] = gain;
  }
  const Shape shape = Shape::line(static_cast<std::size_t>(n));
  return {Filter(shape, fft::inverse_real(shape, spec, 1e-12)), gains};
}

Filter synthesize_filter(Eigen::Index n, double kappa, std::uint64_t seed) {
  return synthesize_filter_with_gains(n, kappa, seed).filter;
}

ObservationSet generate_observations(const Filter& g, const SparseInputs& inputs,
                                     double noise_sigma) {
  if (!(noise_sigma >= 0.0)) throw ParameterError("noise sigma must be non-negative");
  if (g.shape() != inputs.shape || static_cast<std::size_t>(inputs.X.rows()) != g.size()) {
    throw DimensionError(fmt::format("filter length {} vs input length {}", g.size(),
                                     inputs.X.rows()));
  }
  const Shape& shape = g.shape();
  const auto& plan = fft::plan_for(shape);
  const ComplexVector gh = fft::forward(shape, g.coeffs());
  const double scale = 1.0 / static_cast<double>(shape.size());

  ObservationSet obs;
  obs.shape = shape;
  obs.theta = inputs.theta;
  obs.seed = inputs.seed;
  obs.noise_sigma = noise_sigma;
  obs.Y.resize(inputs.X.rows(), inputs.X.cols());
  ComplexVector buf(inputs.X.rows());
  for (Eigen::Index i = 0; i < inputs.X.cols(); ++i) {
    buf = inputs.X.col(i).cast<Complex>();
    plan.forward(buf.data(), buf.data());
    buf.array() *= gh.array();
    plan.backward(buf.data(), buf.data());
    obs.Y.col(i) = buf.real() * scale;
  }
  if (noise_sigma > 0.0) {
    Rng rng(inputs.seed, Stream::Noise);
    for (Eigen::Index i = 0; i < obs.Y.cols(); ++i) {
      for (Eigen::Index k = 0; k < obs.Y.rows(); ++k) obs.Y(k, i) += noise_sigma * rng.normal();
    }
  }
  obs.filter = g;
  obs.inputs = inputs.X;
  return obs;
}

ObservationSet synthesize_problem(const ProblemSpec& spec, bool orthogonal_identity) {
  const Filter g = (orthogonal_identity && spec.kappa == 1.0)
                       ? Filter::identity(Shape::line(static_cast<std::size_t>(spec.n)))
                       : synthesize_filter(spec.n, spec.kappa, spec.seed);
  const SparseInputs x = sample_bernoulli_gaussian(spec.n, spec.p, spec.theta, spec.seed);
  return generate_observations(g, x, spec.noise_sigma);
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  return in;
}

double parse_double(const std::string& token, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw IoError(fmt::format("'{}': malformed number '{}'", path.string(), token));
  }
}

}  // namespace

void write_observations(const std::filesystem::path& path, const ObservationSet& obs) {
  auto out = open_for_write(path);
  out << "# format=msbd-observations-v1\n";
  out << fmt::format("# rows={} cols={} n={} p={} theta={:.17g} seed={} sigma={:.17g}\n",
                     obs.shape.rows, obs.shape.cols, obs.n(), obs.p(), obs.theta, obs.seed,
                     obs.noise_sigma);
  std::string line;
  for (Eigen::Index k = 0; k < obs.Y.rows(); ++k) {
    line.clear();
    for (Eigen::Index i = 0; i < obs.Y.cols(); ++i) {
      if (i > 0) line += ',';
      line += fmt::format("{:.17g}", obs.Y(k, i));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

ObservationSet read_observations(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::map<std::string, std::string> meta;
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream fields(line.substr(1));
      std::string kv;
      while (fields >> kv) {
        const auto eq = kv.find('=');
        if (eq != std::string::npos) meta[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      continue;
    }
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(parse_double(cell, path));
    rows.push_back(std::move(row));
  }
  if (meta["format"] != "msbd-observations-v1") {
    throw IoError(fmt::format("'{}' is not an observation file", path.string()));
  }
  const auto get_size = [&](const char* key) -> std::size_t {
    const auto it = meta.find(key);
    if (it == meta.end()) throw IoError(fmt::format("'{}': missing header key {}", path.string(), key));
    return static_cast<std::size_t>(parse_double(it->second, path));
  };
  const std::size_t n = get_size("n");
  const std::size_t p = get_size("p");
  Shape shape{get_size("rows"), get_size("cols")};
  if (shape.size() != n || rows.size() != n) {
    throw IoError(fmt::format("'{}': expected {} matrix rows, found {}", path.string(), n,
                              rows.size()));
  }
  ObservationSet obs;
  obs.shape = shape;
  obs.Y.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < n; ++k) {
    if (rows[k].size() != p) {
      throw IoError(fmt::format("'{}': row {} has {} entries, expected {}", path.string(), k,
                                rows[k].size(), p));
    }
    for (std::size_t i = 0; i < p; ++i) {
      obs.Y(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = rows[k][i];
    }
  }
  if (meta.contains("theta")) obs.theta = parse_double(meta["theta"], path);
  if (meta.contains("seed")) {
    try {
      obs.seed = std::stoull(meta["seed"]);
    } catch (const std::exception&) {
      throw IoError(fmt::format("'{}': malformed seed '{}'", path.string(), meta["seed"]));
    }
  }
  if (meta.contains("sigma")) obs.noise_sigma = parse_double(meta["sigma"], path);
  return obs;
}

void write_vector(const std::filesystem::path& path, const Vector& v) {
  auto out = open_for_write(path);
  for (Eigen::Index k = 0; k < v.size(); ++k) out << fmt::format("{:.17g}\n", v[k]);
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

Vector read_vector(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    values.push_back(parse_double(line, path));
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace msbd
