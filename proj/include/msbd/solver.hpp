#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "msbd/signal_model.hpp"
#include "msbd/sphere.hpp"
#include "msbd/surrogate.hpp"

namespace msbd {

struct SolverConfig {
  double eta = 0.1;
  int max_iters = 200;
  double mu = 0.05;
  int restarts = 1;
  bool backtracking = false;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  /// Backtracking gives up (DegenerateStep) once the step drops below this.
  double min_step = 1e-12;
  double tol = 1e-8;
  LossKind loss_kind = LossKind::LogCosh;
  bool use_preconditioner = true;
  /// Activation probability assumed by the preconditioner.
  double theta = 0.3;
  std::uint64_t seed = 0;
  /// Overrides the per-restart initialization seeds when set.
  std::optional<std::vector<std::uint64_t>> restart_seeds;
  /// Wall-clock budget per run_with_restarts call; TimeoutError when exceeded.
  std::optional<double> time_budget_s;

  /// ⌈c log n⌉ random initializations.
  static int default_restarts(std::size_t n, double c = 3.0);

  /// Step size c μ ξ₀ θ / (n² sqrt(log(np))) from the convergence analysis.
  /// Much smaller than the experimental default; exposed for comparison only.
  static double theoretical_step(double mu, double xi0, double theta, std::size_t n,
                                 std::size_t p, double c = 1.0);

  void validate() const;
};

struct TrajectoryPoint {
  double loss = 0.0;
  /// Present only when ground truth was available to the caller.
  std::optional<double> error;
};

struct RecoveryResult {
  /// R h^(T) (h^(T) itself without preconditioning).
  Vector g_inv_hat;
  SphereVector h_final;
  std::vector<TrajectoryPoint> trajectory;
  int iterations_used = 0;
  int restart_index = 0;
  bool converged = false;
  double final_loss = 0.0;
};

/// Scores an iterate against ground truth, e.g. `normalized_error`.
using ErrorProbe = std::function<double(const SphereVector&)>;
/// Sees every iterate h^(k), k = 0, 1, ..., in order.
using IterateObserver = std::function<void(int, const SphereVector&)>;

struct SolveHooks {
  ErrorProbe error;
  IterateObserver observer;
};

/// Manifold gradient descent h ← normalize(h - η ∂f(h)) on a prepared
/// objective. Stops after max_iters steps or once ||∂f|| <= tol.
RecoveryResult run_mgd(const Objective& objective, const SphereVector& h0,
                       const SolverConfig& cfg, const SolveHooks& hooks = {});

/// Builds the preconditioner (when enabled) and objective, then runs MGD.
RecoveryResult run_mgd(const ObservationSet& obs, const SphereVector& h0, const SolverConfig& cfg,
                       const SolveHooks& hooks = {});

/// Runs MGD from `cfg.restarts` uniform random initializations (restart r
/// uses seed derive_seed(cfg.seed, r) unless overridden) and keeps the run
/// with the lowest final loss; ties keep the earliest restart.
RecoveryResult run_with_restarts(const Objective& objective, const SolverConfig& cfg,
                                 const SolveHooks& hooks = {});
RecoveryResult run_with_restarts(const ObservationSet& obs, const SolverConfig& cfg,
                                 const SolveHooks& hooks = {});

/// The objective a solver configuration implies for these observations.
Objective make_objective(const ObservationSet& obs, const SolverConfig& cfg);

/// x̂_i = C(ĝ_inv) y_i for every observation.
Matrix recover_inputs(const Vector& g_inv_hat, const ObservationSet& obs);

}  // namespace msbd
