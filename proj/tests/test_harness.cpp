#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>

#include "msbd/errors.hpp"
#include "msbd/harness.hpp"

using namespace msbd;
namespace fs = std::filesystem;

namespace {

ExperimentGrid small_grid() {
  ExperimentGrid grid;
  grid.axes.n = {8, 12};
  grid.axes.p = {32, 64};
  grid.axes.theta = {0.3};
  grid.axes.kappa = {2.0};
  grid.axes.losses = {LossKind::LogCosh, LossKind::L4};
  grid.trials_per_cell = 3;
  grid.base_seed = 17;
  grid.solver.max_iters = 20;
  grid.auto_restarts = false;
  grid.solver.restarts = 2;
  return grid;
}

TableRow row(std::size_t n, std::size_t p, double theta, double kappa, std::string loss) {
  TableRow r;
  r.n = n;
  r.p = p;
  r.theta = theta;
  r.kappa = kappa;
  r.loss = std::move(loss);
  r.trials = 10;
  r.successes = 7;
  r.rate = 0.7;
  r.mean_iters = 123.4;
  r.mean_runtime_ms = 1.0 / 3.0;
  return r;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("msbd_harness_" + name);
}

}  // namespace

TEST_CASE("grid cells and trial seeds") {
  const ExperimentGrid grid = small_grid();
  const std::vector<CellParams> cells = grid_cells(grid);
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].n == 8);
  CHECK(cells[0].p == 32);
  CHECK(cells[1].p == 64);
  CHECK(cells[2].n == 12);

  std::set<std::uint64_t> seeds;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (int t = 0; t < grid.trials_per_cell; ++t) {
      const std::uint64_t s = trial_seed(grid, c, t);
      CHECK(s == grid.base_seed + c * 3 + static_cast<std::uint64_t>(t));
      seeds.insert(s);
    }
  }
  CHECK(seeds.size() == cells.size() * 3);
}

TEST_CASE("grid validation") {
  CHECK_NOTHROW(small_grid().validate());
  ExperimentGrid three = small_grid();
  three.axes.theta = {0.1, 0.2};
  CHECK_THROWS_AS(three.validate(), ParameterError);
  ExperimentGrid no_trials = small_grid();
  no_trials.trials_per_cell = 0;
  CHECK_THROWS_AS(no_trials.validate(), ParameterError);
  ExperimentGrid empty = small_grid();
  empty.axes.p.clear();
  CHECK_THROWS_AS(empty.validate(), ParameterError);
  ExperimentGrid bad_theta = small_grid();
  bad_theta.axes.theta = {1.5};
  CHECK_THROWS_AS(bad_theta.validate(), ParameterError);
  ExperimentGrid no_threads = small_grid();
  no_threads.threads = 0;
  CHECK_THROWS_AS(no_threads.validate(), ParameterError);
}

TEST_CASE("results CSV formatting") {
  CHECK(format_results({}) == std::string(kResultsHeader) + "\n");

  SuccessRateTable table;
  table.rows = {row(16, 64, 0.3, 8.0, "logcosh"), row(8, 128, 0.1, 1.0, "l4"),
                row(8, 128, 0.1, 1.0, "logcosh"), row(8, 64, 0.2, 1.0, "logcosh")};
  const std::string csv = format_results(table);
  const SuccessRateTable back = parse_results(csv);
  REQUIRE(back.rows.size() == 4);
  CHECK(back.rows[0].p == 64);
  CHECK(back.rows[1].loss == "l4");
  CHECK(back.rows[2].loss == "logcosh");
  CHECK(back.rows[3].n == 16);
  CHECK(back.rows[3].mean_runtime_ms == 1.0 / 3.0);
  CHECK(back.rows[0].theta == 0.2);
  CHECK(format_results(back) == csv);

  // 17 significant digits
  CHECK(csv.find("0.33333333333333331") != std::string::npos);
  CHECK(csv.find("0.29999999999999999") != std::string::npos);
  CHECK(csv.substr(0, csv.find('\n')) == kResultsHeader);
}

TEST_CASE("results files") {
  SuccessRateTable one;
  one.rows = {row(8, 32, 0.3, 2.0, "logcosh")};
  const fs::path path = temp_file("one.csv");
  emit_results(one, path);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 2);
  CHECK(format_results(read_results(path)) == format_results(one));

  {
    std::ofstream out(path);
    out << kResultsHeader << "\n8,32,0.3,2,logcosh,10,x,0.7,1,0\n";
  }
  CHECK_THROWS_AS(read_results(path), IoError);
  {
    std::ofstream out(path);
    out << "n,p\n8,32\n";
  }
  CHECK_THROWS_AS(read_results(path), IoError);
  fs::remove(path);
  CHECK_THROWS_AS(read_results(path), IoError);
  CHECK_THROWS_AS(emit_results(one, "/nonexistent/dir/out.csv"), IoError);
}

TEST_CASE("grid specs") {
  GridAxes axes;
  apply_grid_spec(axes, "n=8,16;p=64,128;loss=logcosh,l4");
  CHECK(axes.n == std::vector<std::size_t>{8, 16});
  CHECK(axes.p == std::vector<std::size_t>{64, 128});
  CHECK(axes.losses == std::vector<LossKind>{LossKind::LogCosh, LossKind::L4});
  apply_grid_spec(axes, "theta=0.1,0.2");
  CHECK(axes.theta == std::vector<double>{0.1, 0.2});
  CHECK_THROWS_AS(apply_grid_spec(axes, "m=3"), ParameterError);
  CHECK_THROWS_AS(apply_grid_spec(axes, "n=abc"), ParameterError);
  CHECK_THROWS_AS(apply_grid_spec(axes, "n"), ParameterError);
  CHECK_THROWS_AS(apply_grid_spec(axes, "loss=l2"), ParameterError);
}

TEST_CASE("config files") {
  const fs::path path = temp_file("config.json");
  {
    std::ofstream out(path);
    out << R"({
      // comments are allowed
      "n": [16, 32], "p": 128, "theta": 0.2, "kappa": [1, 4],
      "loss": "l4", "mu": 0.02, "eta": 0.05, "max_iters": 50, "restarts": 3,
      "backtracking": false, "precondition": false, "tol": 1e-6, "seed": 9,
      "trials": 4, "threads": 2, "trial_budget_s": 5, "timing": true
    })";
  }
  ExperimentGrid grid;
  apply_config(grid, load_config(path));
  CHECK(grid.axes.n == std::vector<std::size_t>{16, 32});
  CHECK(grid.axes.p == std::vector<std::size_t>{128});
  CHECK(grid.axes.kappa == std::vector<double>{1.0, 4.0});
  CHECK(grid.axes.losses == std::vector<LossKind>{LossKind::L4});
  CHECK(grid.solver.mu == 0.02);
  CHECK_FALSE(grid.auto_mu);
  CHECK(grid.solver.restarts == 3);
  CHECK_FALSE(grid.auto_restarts);
  CHECK(grid.solver.eta == 0.05);
  CHECK(grid.solver.max_iters == 50);
  CHECK_FALSE(grid.solver.backtracking);
  CHECK_FALSE(grid.solver.use_preconditioner);
  CHECK(grid.solver.tol == 1e-6);
  CHECK(grid.base_seed == 9);
  CHECK(grid.trials_per_cell == 4);
  CHECK(grid.threads == 2);
  CHECK(grid.trial_budget_s == 5.0);
  CHECK(grid.record_timing);

  ExperimentGrid other;
  apply_config(other, nlohmann::json::parse(R"({"grid": "n=8;p=16,32"})"));
  CHECK(other.axes.p == std::vector<std::size_t>{16, 32});
  CHECK_THROWS_AS(apply_config(other, nlohmann::json::parse(R"({"n": "eight"})")), ParameterError);
  CHECK_THROWS_AS(apply_config(other, nlohmann::json::parse(R"({"colour": 1})")), ParameterError);

  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS(load_config(path));
  fs::remove(path);
  CHECK_THROWS_AS(load_config(path), IoError);
}

TEST_CASE("run_trial tags failures instead of throwing") {
  ExperimentGrid grid = small_grid();
  grid.trial_budget_s = 1e-9;
  grid.solver.max_iters = 200;
  const TrialOutcome t = run_trial({32, 256, 0.3, 4.0}, LossKind::LogCosh, 5, grid);
  CHECK_FALSE(t.success);
  CHECK(t.error == "TimeoutError");

  grid.trial_budget_s = 60.0;
  const TrialOutcome ok = run_trial({8, 64, 0.3, 2.0}, LossKind::LogCosh, 5, grid);
  CHECK(ok.error.empty());
  CHECK(ok.iterations > 0);
  CHECK(ok.runtime_ms == 0.0);
  CHECK(ok.score > 0.0);
  CHECK(ok.score <= 1.0);
}

TEST_CASE("phase grid output is independent of the thread count") {
  ExperimentGrid grid = small_grid();
  std::mutex m;
  int calls = 0;
  const SuccessRateTable serial = run_phase_grid(grid, [&](const CellParams&, LossKind, int,
                                                           const TrialOutcome&) {
    std::lock_guard lock(m);
    ++calls;
  });
  CHECK(calls == 4 * 2 * 3);
  REQUIRE(serial.rows.size() == 8);
  for (const TableRow& r : serial.rows) {
    CHECK(r.trials == 3);
    CHECK(r.successes >= 0);
    CHECK(r.successes <= 3);
    CHECK(r.rate == static_cast<double>(r.successes) / 3.0);
    CHECK(r.mean_runtime_ms == 0.0);
  }
  grid.threads = 3;
  CHECK(format_results(run_phase_grid(grid)) == format_results(serial));
}

TEST_CASE("an easy cell always succeeds and a dense one fails") {
  ExperimentGrid grid;
  grid.axes.n = {8};
  grid.axes.p = {2048};
  grid.axes.theta = {0.2, 0.99};
  grid.axes.kappa = {1.0};
  grid.base_seed = 1;
  const SuccessRateTable t = run_phase_grid(grid);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].theta == 0.2);
  CHECK(t.rows[0].rate == 1.0);
  CHECK(t.rows[1].theta == 0.99);
  CHECK(t.rows[1].rate <= 0.1);
}
