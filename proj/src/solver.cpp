#include "msbd/solver.hpp"

#include <chrono>
#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "msbd/errors.hpp"
#include "msbd/fft.hpp"
#include "msbd/rng.hpp"

namespace msbd {
namespace {

using Clock = std::chrono::steady_clock;

class Deadline {
 public:
  explicit Deadline(std::optional<double> budget_s) {
    if (budget_s) {
      end_ = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                std::chrono::duration<double>(*budget_s));
    }
  }
  void check() const {
    if (end_ && Clock::now() > *end_) throw TimeoutError("solver exceeded its wall-clock budget");
  }

 private:
  std::optional<Clock::time_point> end_;
};

RecoveryResult descend(const Objective& objective, const SphereVector& h0, const SolverConfig& cfg,
                       const SolveHooks& hooks, const Deadline& deadline) {
  if (h0.size() != objective.n()) throw DimensionError("initial point has the wrong length");

  SphereVector h = h0;
  Vector euclid;
  double loss = objective.value_and_gradient(h.vec(), euclid);
  Vector riem = riemannian_gradient(h, euclid);

  RecoveryResult result{Vector(), h0, {}, 0, 0, false, loss};
  result.trajectory.reserve(static_cast<std::size_t>(cfg.max_iters) + 1);
  const auto record = [&](int k) {
    TrajectoryPoint point{loss, std::nullopt};
    if (hooks.error) point.error = hooks.error(h);
    result.trajectory.push_back(point);
    if (hooks.observer) hooks.observer(k, h);
  };
  record(0);

  for (int k = 0; k < cfg.max_iters; ++k) {
    const double grad_norm2 = riem.squaredNorm();
    if (std::sqrt(grad_norm2) <= cfg.tol) {
      result.converged = true;
      break;
    }
    deadline.check();

    double eta = cfg.eta;
    while (true) {
      SphereVector trial = retract_step(h, riem, eta);
      Evaluation at_trial = objective.evaluate(trial.vec());
      const double trial_loss = at_trial.value;
      const double slack = 1e-12 * std::max(1.0, std::abs(loss));
      const bool accept = !cfg.backtracking ||
                          trial_loss <= loss - cfg.sufficient_decrease * eta * grad_norm2 + slack;
      if (accept) {
        h = std::move(trial);
        loss = trial_loss;
        euclid = objective.gradient(at_trial);
        break;
      }
      eta *= cfg.shrink;
      if (eta < cfg.min_step) {
        throw DegenerateStep(
            fmt::format("backtracking step fell below {:.1e} at iteration {}", cfg.min_step, k));
      }
    }
    riem = riemannian_gradient(h, euclid);
    result.iterations_used = k + 1;
    record(k + 1);
  }
  if (!result.converged && riem.norm() <= cfg.tol) result.converged = true;

  result.h_final = h;
  result.final_loss = loss;
  const Preconditioner& R = objective.preconditioner();
  result.g_inv_hat = R.is_identity() ? h.vec() : R.apply(h.vec());
  return result;
}

}  // namespace

int SolverConfig::default_restarts(std::size_t n, double c) {
  return std::max(1, static_cast<int>(std::ceil(c * std::log(static_cast<double>(n)))));
}

double SolverConfig::theoretical_step(double mu, double xi0, double theta, std::size_t n,
                                      std::size_t p, double c) {
  const double nn = static_cast<double>(n);
  return c * mu * xi0 * theta /
         (nn * nn * std::sqrt(std::log(nn * static_cast<double>(p))));
}

void SolverConfig::validate() const {
  if (!(eta > 0.0)) throw ParameterError(fmt::format("eta must be positive, got {}", eta));
  if (!(shrink > 0.0 && shrink < 1.0)) throw ParameterError("shrink factor must lie in (0, 1)");
  if (max_iters < 1) throw ParameterError("max_iters must be at least 1");
  if (restarts < 1) throw ParameterError("restarts must be at least 1");
  if (!(mu > 0.0)) throw ParameterError(fmt::format("mu must be positive, got {}", mu));
  if (!(tol >= 0.0)) throw ParameterError("tol must be non-negative");
  if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0)) {
    throw ParameterError("sufficient-decrease constant must lie in (0, 1)");
  }
  if (restart_seeds && restart_seeds->size() < static_cast<std::size_t>(restarts)) {
    throw ParameterError("fewer forced restart seeds than restarts");
  }
}

Objective make_objective(const ObservationSet& obs, const SolverConfig& cfg) {
  const Preconditioner R = cfg.use_preconditioner ? build_preconditioner(obs, cfg.theta)
                                                  : Preconditioner::identity(obs.shape);
  return Objective(obs, R, cfg.loss_kind, cfg.mu);
}

RecoveryResult run_mgd(const Objective& objective, const SphereVector& h0, const SolverConfig& cfg,
                       const SolveHooks& hooks) {
  cfg.validate();
  return descend(objective, h0, cfg, hooks, Deadline(cfg.time_budget_s));
}

RecoveryResult run_mgd(const ObservationSet& obs, const SphereVector& h0, const SolverConfig& cfg,
                       const SolveHooks& hooks) {
  cfg.validate();
  return run_mgd(make_objective(obs, cfg), h0, cfg, hooks);
}

RecoveryResult run_with_restarts(const Objective& objective, const SolverConfig& cfg,
                                 const SolveHooks& hooks) {
  cfg.validate();
  const Deadline deadline(cfg.time_budget_s);
  std::optional<RecoveryResult> best;
  for (int r = 0; r < cfg.restarts; ++r) {
    const std::uint64_t seed = cfg.restart_seeds
                                   ? (*cfg.restart_seeds)[static_cast<std::size_t>(r)]
                                   : derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
    RecoveryResult run =
        descend(objective, random_sphere_point(objective.n(), seed), cfg, hooks, deadline);
    run.restart_index = r;
    if (!best || run.final_loss < best->final_loss) best = std::move(run);
  }
  return std::move(*best);
}

RecoveryResult run_with_restarts(const ObservationSet& obs, const SolverConfig& cfg,
                                 const SolveHooks& hooks) {
  cfg.validate();
  return run_with_restarts(make_objective(obs, cfg), cfg, hooks);
}

Matrix recover_inputs(const Vector& g_inv_hat, const ObservationSet& obs) {
  if (static_cast<std::size_t>(g_inv_hat.size()) != obs.shape.size()) {
    throw DimensionError(fmt::format("inverse filter length {} vs observation length {}",
                                     g_inv_hat.size(), obs.n()));
  }
  const auto& plan = fft::plan_for(obs.shape);
  const ComplexVector gh = fft::forward(obs.shape, g_inv_hat);
  const double scale = 1.0 / static_cast<double>(obs.shape.size());
  Matrix X(obs.n(), obs.p());
  ComplexVector buf(obs.n());
  for (Eigen::Index i = 0; i < obs.p(); ++i) {
    buf = obs.Y.col(i).cast<Complex>();
    plan.forward(buf.data(), buf.data());
    buf.array() *= gh.array();
    plan.backward(buf.data(), buf.data());
    X.col(i) = buf.real() * scale;
  }
  return X;
}

}  // namespace msbd
