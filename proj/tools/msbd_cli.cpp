// msbd: command-line front end for synthesis, single solves, phase grids,
// landscape exports and image deblurring.
//
// Precedence: built-in defaults < --config file < command-line flags.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "msbd/circulant.hpp"
#include "msbd/errors.hpp"
#include "msbd/harness.hpp"
#include "msbd/imaging.hpp"
#include "msbd/landscape.hpp"
#include "msbd/metrics.hpp"
#include "msbd/rng.hpp"
#include "msbd/signal_model.hpp"
#include "msbd/solver.hpp"

namespace fs = std::filesystem;
using namespace msbd;

namespace {

struct CommonFlags {
  std::optional<std::size_t> n, p;
  std::optional<double> theta, kappa, mu, eta, tol, trial_budget;
  std::optional<int> max_iters, restarts, trials;
  std::optional<std::string> loss, grid;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool no_precondition = false;
  bool backtracking = false;
  bool fixed_step = false;
  bool timing = false;
  std::string config;
  std::string out;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--n", f.n, "signal length (1D)");
  app->add_option("--p", f.p, "number of observations");
  app->add_option("--theta", f.theta, "Bernoulli activation probability");
  app->add_option("--kappa", f.kappa, "filter condition number");
  app->add_option("--mu", f.mu, "log-cosh smoothing (default min(10 n^-5/4, 0.05))");
  app->add_option("--eta", f.eta, "step size");
  app->add_option("--max-iters", f.max_iters, "iterations per restart");
  app->add_option("--restarts", f.restarts, "random initializations (default ceil(3 ln n))");
  app->add_option("--loss", f.loss, "logcosh or l4");
  app->add_flag("--no-precondition", f.no_precondition, "skip the preconditioner");
  app->add_flag("--backtracking", f.backtracking, "Armijo backtracking on the step");
  app->add_flag("--fixed-step", f.fixed_step, "constant step, no backtracking");
  app->add_option("--tol", f.tol, "stop once the Riemannian gradient norm is below this");
  app->add_option("--seed", f.seed, "base seed");
  app->add_option("--trials", f.trials, "trials per cell");
  app->add_option("--out", f.out, "output path");
  app->add_option("--config", f.config, "JSON config file");
  app->add_option("--grid", f.grid, "axis spec, e.g. \"n=32,64;p=64,128\"");
  app->add_option("--threads", f.threads, "worker threads");
  app->add_option("--trial-budget", f.trial_budget, "per-trial wall clock budget in seconds");
  app->add_flag("--timing", f.timing, "record mean_runtime_ms (breaks byte reproducibility)");
}

ExperimentGrid resolve(const CommonFlags& f) {
  ExperimentGrid grid;
  if (!f.config.empty()) apply_config(grid, load_config(f.config));
  if (f.grid) apply_grid_spec(grid.axes, *f.grid);
  if (f.n) grid.axes.n = {*f.n};
  if (f.p) grid.axes.p = {*f.p};
  if (f.theta) grid.axes.theta = {*f.theta};
  if (f.kappa) grid.axes.kappa = {*f.kappa};
  if (f.loss) grid.axes.losses = {parse_loss_kind(*f.loss)};
  if (f.mu) {
    grid.solver.mu = *f.mu;
    grid.auto_mu = false;
  }
  if (f.restarts) {
    grid.solver.restarts = *f.restarts;
    grid.auto_restarts = false;
  }
  if (f.eta) grid.solver.eta = *f.eta;
  if (f.max_iters) grid.solver.max_iters = *f.max_iters;
  if (f.tol) grid.solver.tol = *f.tol;
  if (f.no_precondition) grid.solver.use_preconditioner = false;
  if (f.backtracking) grid.solver.backtracking = true;
  if (f.fixed_step) grid.solver.backtracking = false;
  if (f.seed) grid.base_seed = *f.seed;
  if (f.trials) grid.trials_per_cell = *f.trials;
  if (f.threads) grid.threads = *f.threads;
  if (f.trial_budget) grid.trial_budget_s = *f.trial_budget;
  if (f.timing) grid.record_timing = true;
  return grid;
}

/// Solver settings for a single instance described by the first grid value.
SolverConfig single_solver(const ExperimentGrid& grid) {
  SolverConfig cfg = grid.solver;
  const std::size_t n = grid.axes.n.front();
  cfg.loss_kind = grid.axes.losses.front();
  cfg.theta = grid.axes.theta.front();
  cfg.seed = grid.base_seed;
  if (grid.auto_mu) cfg.mu = default_mu(n);
  if (grid.auto_restarts) cfg.restarts = SolverConfig::default_restarts(n);
  if (grid.trial_budget_s > 0.0) cfg.time_budget_s = grid.trial_budget_s;
  return cfg;
}

ProblemSpec single_problem(const ExperimentGrid& grid, double sigma) {
  ProblemSpec spec;
  spec.n = static_cast<Eigen::Index>(grid.axes.n.front());
  spec.p = static_cast<Eigen::Index>(grid.axes.p.front());
  spec.theta = grid.axes.theta.front();
  spec.kappa = grid.axes.kappa.front();
  spec.noise_sigma = sigma;
  spec.seed = grid.base_seed;
  return spec;
}

int cmd_synth(const CommonFlags& f, double sigma, const std::string& filter_out) {
  const ExperimentGrid grid = resolve(f);
  if (f.out.empty()) throw ParameterError("synth needs --out");
  const ObservationSet obs = synthesize_problem(single_problem(grid, sigma));
  write_observations(f.out, obs);
  if (!filter_out.empty()) write_vector(filter_out, obs.filter->coeffs());
  fmt::print("wrote n={} p={} to {}\n", obs.n(), obs.p(), f.out);
  return 0;
}

int cmd_solve(const CommonFlags& f, const std::string& in, const std::string& filter_in,
              double sigma) {
  const ExperimentGrid grid = resolve(f);
  ObservationSet obs = in.empty() ? synthesize_problem(single_problem(grid, sigma))
                                  : read_observations(in);
  if (!filter_in.empty()) obs.filter = Filter(read_vector(filter_in));
  SolverConfig cfg = single_solver(grid);
  if (!in.empty()) {
    cfg.theta = obs.theta > 0.0 ? obs.theta : cfg.theta;
    if (grid.auto_mu) cfg.mu = default_mu(static_cast<std::size_t>(obs.n()));
    if (grid.auto_restarts) cfg.restarts = SolverConfig::default_restarts(static_cast<std::size_t>(obs.n()));
  }

  const RecoveryResult res = run_with_restarts(obs, cfg);
  fmt::print("loss={:.17g} iterations={} restart={} converged={}\n", res.final_loss,
             res.iterations_used, res.restart_index, res.converged ? 1 : 0);
  if (obs.filter) {
    const Vector truth = inverse_filter(*obs.filter).coeffs();
    const AlignmentReport rep =
        shift_sign_distance(res.g_inv_hat / res.g_inv_hat.norm(), truth / truth.norm());
    const SuccessScore score = success_indicator(res.g_inv_hat, *obs.filter);
    fmt::print("distance={:.17g} shift={} sign={} peak_ratio={:.17g} score={:.17g} success={}\n",
               rep.distance, rep.best_shift, to_char(rep.best_sign), rep.peak_ratio, score.score,
               score.success ? 1 : 0);
  }
  if (!f.out.empty()) write_vector(f.out, res.g_inv_hat);
  return 0;
}

int cmd_phase(const CommonFlags& f, bool progress) {
  const ExperimentGrid grid = resolve(f);
  TrialCallback cb;
  if (progress) {
    cb = [](const CellParams& c, LossKind loss, int trial, const TrialOutcome& o) {
      fmt::print(stderr, "n={} p={} theta={} kappa={} loss={} trial={} success={} score={:.4f}{}\n",
                 c.n, c.p, c.theta, c.kappa, to_string(loss), trial, o.success ? 1 : 0, o.score,
                 o.error.empty() ? "" : " error=" + o.error);
    };
  }
  const SuccessRateTable table = run_phase_grid(grid, cb);
  if (f.out.empty()) {
    std::cout << format_results(table);
  } else {
    emit_results(table, f.out);
  }
  return 0;
}

int cmd_landscape(const CommonFlags& f, int resolution, bool geometry, double xi0,
                  std::size_t samples) {
  const ExperimentGrid grid = resolve(f);
  if (geometry) {
    GeometryParams params;
    params.n = f.n ? *f.n : 8;
    params.p = f.p ? *f.p : 4096;
    params.theta = grid.axes.theta.front();
    params.kappa = f.kappa ? *f.kappa : 1.0;
    params.xi0 = xi0;
    params.mu = grid.auto_mu ? 0.05 : grid.solver.mu;
    params.samples = samples;
    params.seed = grid.base_seed;
    const GeometryReport rep = verify_geometry(params);
    fmt::print("region,samples,minimum,violations\n");
    fmt::print("Q1,{},{:.17g},{}\n", rep.q1.samples, rep.q1.minimum, rep.q1.violations);
    fmt::print("Q2,{},{:.17g},{}\n", rep.q2.samples, rep.q2.minimum, rep.q2.violations);
    return rep.q1.violations + rep.q2.violations == 0 ? 0 : 1;
  }

  ProblemSpec spec = single_problem(grid, 0.0);
  spec.n = 3;
  if (!f.p) spec.p = 30;
  if (!f.kappa) spec.kappa = 1.0;
  const ObservationSet obs = synthesize_problem(spec, /*orthogonal_identity=*/true);
  SolverConfig cfg = single_solver(grid);
  if (grid.auto_mu) cfg.mu = 0.05;
  const Objective objective = make_objective(obs, cfg);
  const auto surface = export_sphere_surface(objective, resolution);
  if (f.out.empty()) {
    write_surface_csv(std::cout, surface);
  } else {
    std::ofstream out(f.out);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", f.out));
    write_surface_csv(out, surface);
  }
  return 0;
}

int cmd_deblur(const CommonFlags& f, const std::string& in, const std::string& size,
               const std::string& kernel_dir, const std::string& blurred_out) {
  const ExperimentGrid grid = resolve(f);
  if (f.out.empty()) throw ParameterError("deblur needs --out");

  Image truth;
  if (!in.empty()) {
    truth = read_png(in);
  } else {
    std::size_t rows = 32, cols = 32;
    if (!size.empty() && std::sscanf(size.c_str(), "%zux%zu", &rows, &cols) != 2) {
      throw ParameterError(fmt::format("bad --size '{}', expected HxW", size));
    }
    truth.planes.push_back(synthetic_scene({rows, cols}, grid.base_seed));
  }
  const Shape shape = truth.shape();
  const double theta = f.theta ? *f.theta : 0.1;
  const std::size_t p = f.p ? *f.p : 200;

  KernelStack kernels;
  if (!kernel_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(kernel_dir)) {
      if (entry.path().extension() == ".png") files.push_back(entry.path());
    }
    if (files.empty()) throw IoError(fmt::format("no PNG kernels in '{}'", kernel_dir));
    std::sort(files.begin(), files.end());
    kernels.mode = KernelMode::MotionBlur;
    for (const auto& file : files) kernels.kernels.push_back(kernel_ingest(file, shape));
  } else {
    kernels = bernoulli_gaussian_kernels(shape, p, theta, grid.base_seed);
  }

  std::vector<std::vector<ImagePlane>> observations;
  for (const auto& plane : truth.planes) observations.push_back(blur_plane(plane, kernels));
  if (!blurred_out.empty()) {
    Image first;
    for (const auto& obs : observations) first.planes.push_back(obs.front());
    write_png(blurred_out, first, /*stretch=*/true);
  }

  SolverConfig cfg = grid.solver;
  cfg.theta = theta;
  cfg.seed = grid.base_seed;
  cfg.mu = grid.auto_mu ? default_mu(shape.size()) : grid.solver.mu;
  cfg.restarts = grid.auto_restarts ? 1 : grid.solver.restarts;
  cfg.loss_kind = grid.axes.losses.front();
  const DeblurResult result = deblur_channels(observations, cfg);
  write_png(f.out, result.image(), /*stretch=*/true);
  for (std::size_t c = 0; c < result.channels.size(); ++c) {
    fmt::print("channel={} aligned_error={:.6g} iterations={}\n", c,
               aligned_relative_error(result.channels[c].image, truth.planes[c]),
               result.channels[c].solve.iterations_used);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multichannel sparse blind deconvolution on the sphere"};
  app.require_subcommand(1);

  CommonFlags synth_f, solve_f, phase_f, land_f, deblur_f;
  double sigma = 0.0;
  std::string filter_out, in, filter_in, size, kernel_dir, blurred_out, img_in;
  bool progress = false, geometry = false;
  int resolution = 60;
  double xi0 = 0.5;
  std::size_t samples = 200;

  auto* synth = app.add_subcommand("synth", "synthesize and write an observation set");
  add_common(synth, synth_f);
  synth->add_option("--sigma", sigma, "additive noise level");
  synth->add_option("--filter-out", filter_out, "also write the true filter");

  auto* solve = app.add_subcommand("solve", "recover one instance and report the alignment");
  add_common(solve, solve_f);
  solve->add_option("--in", in, "observation file (synthesized from flags when absent)");
  solve->add_option("--filter", filter_in, "true filter for scoring a file input");
  solve->add_option("--sigma", sigma, "additive noise level for synthesized input");

  auto* phase = app.add_subcommand("phase", "Monte Carlo success-rate grid");
  add_common(phase, phase_f);
  phase->add_flag("--progress", progress, "one stderr line per trial");

  auto* land = app.add_subcommand("landscape", "n = 3 loss surface or geometry report");
  add_common(land, land_f);
  land->add_option("--resolution", resolution, "surface grid points per angle");
  land->add_flag("--geometry", geometry, "sample Q1/Q2 and report sign checks instead");
  land->add_option("--xi0", xi0, "basin parameter for --geometry");
  land->add_option("--samples", samples, "samples per region for --geometry");

  auto* deblur = app.add_subcommand("deblur", "blur an image with random kernels and recover it");
  add_common(deblur, deblur_f);
  deblur->add_option("--image", img_in, "PNG input (synthetic scene when absent)");
  deblur->add_option("--size", size, "synthetic scene size HxW (default 32x32)");
  deblur->add_option("--kernels", kernel_dir, "directory of PNG blur kernels");
  deblur->add_option("--blurred-out", blurred_out, "write the first blurred observation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: ParameterError: " << e.what() << '\n';
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_f, sigma, filter_out);
    if (solve->parsed()) return cmd_solve(solve_f, in, filter_in, sigma);
    if (phase->parsed()) return cmd_phase(phase_f, progress);
    if (land->parsed()) return cmd_landscape(land_f, resolution, geometry, xi0, samples);
    if (deblur->parsed()) return cmd_deblur(deblur_f, img_in, size, kernel_dir, blurred_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: Error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
