#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "msbd/solver.hpp"
#include "msbd/surrogate.hpp"

namespace msbd {

/// Parameter lists for a phase diagram. At most two of n, p, theta, kappa
/// may have more than one value; every listed loss is run on the same trials.
struct GridAxes {
  std::vector<std::size_t> n{64};
  std::vector<std::size_t> p{256};
  std::vector<double> theta{0.3};
  std::vector<double> kappa{8.0};
  std::vector<LossKind> losses{LossKind::LogCosh};
};

struct ExperimentGrid {
  GridAxes axes;
  int trials_per_cell = 10;
  std::uint64_t base_seed = 0;
  /// Template solver settings; mu and restarts are filled per cell unless set.
  SolverConfig solver = default_solver();
  bool auto_mu = true;
  bool auto_restarts = true;
  double trial_budget_s = 60.0;
  unsigned threads = 1;
  /// Wall-clock timing makes the table non-reproducible, so it is opt-in;
  /// without it mean_runtime_ms is written as 0.
  bool record_timing = false;

  static SolverConfig default_solver();
  void validate() const;
};

/// Problem parameters of one grid cell (shared by every loss kind).
struct CellParams {
  std::size_t n = 0;
  std::size_t p = 0;
  double theta = 0.0;
  double kappa = 1.0;
};

/// Trial seed: base_seed + cell_index * trials_per_cell + trial. Cells are
/// enumerated in (n, p, theta, kappa) order.
std::uint64_t trial_seed(const ExperimentGrid& grid, std::size_t cell_index, int trial);

std::vector<CellParams> grid_cells(const ExperimentGrid& grid);

struct TrialOutcome {
  bool success = false;
  double score = 0.0;
  int iterations = 0;
  double runtime_ms = 0.0;
  /// Empty on a clean run, otherwise the error kind (e.g. "TimeoutError").
  std::string error;
};

/// One synthesized instance scored by the success indicator. Never throws for
/// solver failures; they come back as unsuccessful outcomes with an error tag.
TrialOutcome run_trial(const CellParams& cell, LossKind loss, std::uint64_t seed,
                       const ExperimentGrid& grid);

struct TableRow {
  std::size_t n = 0;
  std::size_t p = 0;
  double theta = 0.0;
  double kappa = 0.0;
  std::string loss;
  int trials = 0;
  int successes = 0;
  double rate = 0.0;
  double mean_iters = 0.0;
  double mean_runtime_ms = 0.0;
};

struct SuccessRateTable {
  std::vector<TableRow> rows;

  /// Orders rows by (n, p, theta, kappa, loss).
  void sort();
};

using TrialCallback =
    std::function<void(const CellParams&, LossKind, int trial, const TrialOutcome&)>;

/// Runs every (cell, loss, trial) on `grid.threads` workers. The returned
/// table is sorted and does not depend on the thread count.
SuccessRateTable run_phase_grid(const ExperimentGrid& grid, const TrialCallback& on_trial = {});

inline constexpr std::string_view kResultsHeader =
    "n,p,theta,kappa,loss,trials,successes,rate,mean_iters,mean_runtime_ms";

/// Canonical CSV text: header, then sorted rows, floats at 17 significant digits.
std::string format_results(const SuccessRateTable& table);
SuccessRateTable parse_results(std::string_view csv);

void emit_results(const SuccessRateTable& table, const std::filesystem::path& path);
SuccessRateTable read_results(const std::filesystem::path& path);

/// "n=8,16;p=64,128" style axis overrides; unknown axes raise ParameterError.
void apply_grid_spec(GridAxes& axes, std::string_view spec);

/// Applies config-file keys to a grid. Recognized keys: n, p, theta, kappa
/// (number or list), loss (string or list), mu, eta, max_iters, restarts,
/// backtracking, precondition, tol, seed, trials, threads, trial_budget_s,
/// timing, grid (axis spec string).
void apply_config(ExperimentGrid& grid, const nlohmann::json& config);
nlohmann::json load_config(const std::filesystem::path& path);

}  // namespace msbd
