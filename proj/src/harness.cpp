#include "msbd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "msbd/errors.hpp"
#include "msbd/metrics.hpp"
#include "msbd/signal_model.hpp"

namespace msbd {
namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : text) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParameterError(fmt::format("not a number: '{}'", s));
  }
}

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParameterError(fmt::format("not a non-negative integer: '{}'", s));
  }
  return v;
}

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view text, Parse parse) {
  std::vector<T> out;
  for (const auto& item : split(text, ',')) out.push_back(parse(trim(item)));
  return out;
}

template <typename T, typename Conv>
std::vector<T> json_list(const nlohmann::json& v, Conv conv) {
  std::vector<T> out;
  if (v.is_array()) {
    for (const auto& x : v) out.push_back(conv(x));
  } else {
    out.push_back(conv(v));
  }
  return out;
}

}  // namespace

SolverConfig ExperimentGrid::default_solver() {
  SolverConfig cfg;
  cfg.eta = 0.1;
  cfg.max_iters = 200;
  cfg.backtracking = true;
  cfg.use_preconditioner = true;
  return cfg;
}

void ExperimentGrid::validate() const {
  const std::size_t varying = (axes.n.size() > 1) + (axes.p.size() > 1) +
                              (axes.theta.size() > 1) + (axes.kappa.size() > 1);
  if (varying > 2) throw ParameterError("at most two of n, p, theta, kappa may vary");
  if (axes.n.empty() || axes.p.empty() || axes.theta.empty() || axes.kappa.empty() ||
      axes.losses.empty()) {
    throw ParameterError("every grid axis needs at least one value");
  }
  for (const auto n : axes.n) {
    if (n < 2) throw ParameterError("n must be at least 2");
  }
  for (const auto p : axes.p) {
    if (p < 1) throw ParameterError("p must be at least 1");
  }
  for (const auto t : axes.theta) {
    if (!(t > 0.0 && t <= 1.0)) throw ParameterError("theta must lie in (0, 1]");
  }
  for (const auto k : axes.kappa) {
    if (!(k >= 1.0)) throw ParameterError("kappa must be >= 1");
  }
  if (trials_per_cell < 1) throw ParameterError("trials must be at least 1");
  if (threads < 1) throw ParameterError("threads must be at least 1");
  SolverConfig probe = solver;
  probe.restarts = std::max(1, probe.restarts);
  probe.validate();
}

std::vector<CellParams> grid_cells(const ExperimentGrid& grid) {
  std::vector<CellParams> cells;
  for (const auto n : grid.axes.n) {
    for (const auto p : grid.axes.p) {
      for (const auto theta : grid.axes.theta) {
        for (const auto kappa : grid.axes.kappa) cells.push_back({n, p, theta, kappa});
      }
    }
  }
  return cells;
}

std::uint64_t trial_seed(const ExperimentGrid& grid, std::size_t cell_index, int trial) {
  return grid.base_seed +
         static_cast<std::uint64_t>(cell_index) * static_cast<std::uint64_t>(grid.trials_per_cell) +
         static_cast<std::uint64_t>(trial);
}

TrialOutcome run_trial(const CellParams& cell, LossKind loss, std::uint64_t seed,
                       const ExperimentGrid& grid) {
  TrialOutcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    ProblemSpec spec;
    spec.n = static_cast<Eigen::Index>(cell.n);
    spec.p = static_cast<Eigen::Index>(cell.p);
    spec.theta = cell.theta;
    spec.kappa = cell.kappa;
    spec.seed = seed;
    const ObservationSet obs = synthesize_problem(spec);

    SolverConfig cfg = grid.solver;
    cfg.loss_kind = loss;
    cfg.theta = cell.theta;
    cfg.seed = seed;
    if (grid.auto_mu) cfg.mu = default_mu(cell.n);
    if (grid.auto_restarts) cfg.restarts = SolverConfig::default_restarts(cell.n);
    if (grid.trial_budget_s > 0.0) cfg.time_budget_s = grid.trial_budget_s;

    const RecoveryResult res = run_with_restarts(obs, cfg);
    const SuccessScore score = success_indicator(res.g_inv_hat, *obs.filter);
    out.success = score.success;
    out.score = score.score;
    out.iterations = res.iterations_used;
  } catch (const Error& e) {
    out.success = false;
    out.error = std::string(e.kind());
  }
  if (grid.record_timing) {
    out.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                               start)
                         .count();
  }
  return out;
}

void SuccessRateTable::sort() {
  std::sort(rows.begin(), rows.end(), [](const TableRow& a, const TableRow& b) {
    return std::tie(a.n, a.p, a.theta, a.kappa, a.loss) <
           std::tie(b.n, b.p, b.theta, b.kappa, b.loss);
  });
}

SuccessRateTable run_phase_grid(const ExperimentGrid& grid, const TrialCallback& on_trial) {
  grid.validate();
  const std::vector<CellParams> cells = grid_cells(grid);

  struct Job {
    std::size_t cell;
    std::size_t loss;
    int trial;
  };
  std::vector<Job> jobs;
  std::set<std::uint64_t> seeds;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (int t = 0; t < grid.trials_per_cell; ++t) {
      if (!seeds.insert(trial_seed(grid, c, t)).second) {
        throw ParameterError("trial seeds collide; the grid is too large for 64-bit seeds");
      }
      for (std::size_t l = 0; l < grid.axes.losses.size(); ++l) jobs.push_back({c, l, t});
    }
  }

  std::vector<TrialOutcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  const auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const Job& job = jobs[j];
      const LossKind loss = grid.axes.losses[job.loss];
      outcomes[j] = run_trial(cells[job.cell], loss, trial_seed(grid, job.cell, job.trial), grid);
      if (on_trial) {
        std::lock_guard lock(callback_mutex);
        on_trial(cells[job.cell], loss, job.trial, outcomes[j]);
      }
    }
  };
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(grid.threads, std::max<std::size_t>(1, jobs.size())));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  // Aggregate in job order, which is fixed regardless of scheduling.
  std::map<std::pair<std::size_t, std::size_t>, TableRow> rows;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const Job& job = jobs[j];
    const CellParams& cell = cells[job.cell];
    TableRow& row = rows[{job.cell, job.loss}];
    row.n = cell.n;
    row.p = cell.p;
    row.theta = cell.theta;
    row.kappa = cell.kappa;
    row.loss = std::string(to_string(grid.axes.losses[job.loss]));
    row.trials += 1;
    row.successes += outcomes[j].success ? 1 : 0;
    row.mean_iters += outcomes[j].iterations;
    row.mean_runtime_ms += outcomes[j].runtime_ms;
  }
  SuccessRateTable table;
  for (auto& [key, row] : rows) {
    row.rate = static_cast<double>(row.successes) / row.trials;
    row.mean_iters /= row.trials;
    row.mean_runtime_ms /= row.trials;
    table.rows.push_back(row);
  }
  table.sort();
  return table;
}

std::string format_results(const SuccessRateTable& table) {
  SuccessRateTable sorted = table;
  sorted.sort();
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& r : sorted.rows) {
    out += fmt::format("{},{},{:.17g},{:.17g},{},{},{},{:.17g},{:.17g},{:.17g}\n", r.n, r.p,
                       r.theta, r.kappa, r.loss, r.trials, r.successes, r.rate, r.mean_iters,
                       r.mean_runtime_ms);
  }
  return out;
}

SuccessRateTable parse_results(std::string_view csv) {
  SuccessRateTable table;
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || trim(line) != kResultsHeader) {
    throw IoError("results file does not start with the expected header");
  }
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 10) throw IoError(fmt::format("malformed results row: '{}'", line));
    TableRow r;
    try {
      r.n = parse_size(f[0]);
      r.p = parse_size(f[1]);
      r.theta = parse_double(f[2]);
      r.kappa = parse_double(f[3]);
      r.loss = f[4];
      r.trials = static_cast<int>(parse_size(f[5]));
      r.successes = static_cast<int>(parse_size(f[6]));
      r.rate = parse_double(f[7]);
      r.mean_iters = parse_double(f[8]);
      r.mean_runtime_ms = parse_double(trim(f[9]));
    } catch (const ParameterError& e) {
      throw IoError(fmt::format("malformed results row '{}': {}", line, e.what()));
    }
    if (r.successes > r.trials) throw IoError("successes exceed trials");
    table.rows.push_back(std::move(r));
  }
  return table;
}

void emit_results(const SuccessRateTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << format_results(table);
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

SuccessRateTable read_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_results(buf.str());
}

void apply_grid_spec(GridAxes& axes, std::string_view spec) {
  for (const auto& part : split(spec, ';')) {
    const std::string item = trim(part);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParameterError(fmt::format("bad grid axis '{}'", item));
    const std::string key = trim(item.substr(0, eq));
    const std::string values = item.substr(eq + 1);
    if (key == "n") {
      axes.n = parse_list<std::size_t>(values, parse_size);
    } else if (key == "p") {
      axes.p = parse_list<std::size_t>(values, parse_size);
    } else if (key == "theta") {
      axes.theta = parse_list<double>(values, parse_double);
    } else if (key == "kappa") {
      axes.kappa = parse_list<double>(values, parse_double);
    } else if (key == "loss") {
      axes.losses = parse_list<LossKind>(values, [](const std::string& s) { return parse_loss_kind(s); });
    } else {
      throw ParameterError(fmt::format("unknown grid axis '{}'", key));
    }
  }
}

void apply_config(ExperimentGrid& grid, const nlohmann::json& config) {
  if (!config.is_object()) throw ParameterError("config must be a JSON object");
  try {
    for (const auto& [key, v] : config.items()) {
      if (key == "n") {
        grid.axes.n = json_list<std::size_t>(v, [](const auto& x) { return x.template get<std::size_t>(); });
      } else if (key == "p") {
        grid.axes.p = json_list<std::size_t>(v, [](const auto& x) { return x.template get<std::size_t>(); });
      } else if (key == "theta") {
        grid.axes.theta = json_list<double>(v, [](const auto& x) { return x.template get<double>(); });
      } else if (key == "kappa") {
        grid.axes.kappa = json_list<double>(v, [](const auto& x) { return x.template get<double>(); });
      } else if (key == "loss") {
        grid.axes.losses = json_list<LossKind>(
            v, [](const auto& x) { return parse_loss_kind(x.template get<std::string>()); });
      } else if (key == "mu") {
        grid.solver.mu = v.get<double>();
        grid.auto_mu = false;
      } else if (key == "eta") {
        grid.solver.eta = v.get<double>();
      } else if (key == "max_iters") {
        grid.solver.max_iters = v.get<int>();
      } else if (key == "restarts") {
        grid.solver.restarts = v.get<int>();
        grid.auto_restarts = false;
      } else if (key == "backtracking") {
        grid.solver.backtracking = v.get<bool>();
      } else if (key == "precondition") {
        grid.solver.use_preconditioner = v.get<bool>();
      } else if (key == "tol") {
        grid.solver.tol = v.get<double>();
      } else if (key == "seed") {
        grid.base_seed = v.get<std::uint64_t>();
      } else if (key == "trials") {
        grid.trials_per_cell = v.get<int>();
      } else if (key == "threads") {
        grid.threads = v.get<unsigned>();
      } else if (key == "trial_budget_s") {
        grid.trial_budget_s = v.get<double>();
      } else if (key == "timing") {
        grid.record_timing = v.get<bool>();
      } else if (key == "grid") {
        apply_grid_spec(grid.axes, v.get<std::string>());
      } else {
        throw ParameterError(fmt::format("unknown config key '{}'", key));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(fmt::format("bad config value: {}", e.what()));
  }
}

nlohmann::json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config '{}'", path.string()));
  try {
    return nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

}  // namespace msbd
