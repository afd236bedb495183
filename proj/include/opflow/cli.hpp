#pragma once

// Command implementations behind the `flow` executable. Each command reads
// an experiment config, runs the requested solvers and writes CSV traces
// plus a JSON summary. Exit codes: 0 converged, 2 max-iterations or stalled,
// 1 configuration or input error.

#include "opflow/baselines.hpp"
#include "opflow/config.hpp"
#include "opflow/flow.hpp"
#include "opflow/trace_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace opflow::cli {

inline constexpr int kExitConverged = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitNotConverged = 2;

inline int exit_code(RunStatus s) {
  return s == RunStatus::converged ? kExitConverged : kExitNotConverged;
}

/// Seeded Gaussian matrix, orthonormalized; or the ground space of the
/// linear part of the model.
inline Orbitals initial_orbitals(const ModelConfig &m, const GridModel &model,
                                 std::uint64_t seed) {
  const auto [ng, n] = model.dimension();
  if (m.initial == InitialGuess::linear_ground_state)
    return dense_ground_space(quadratic_model(model.spec()), n).eigenvectors;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat c(ng, n);
  for (Index j = 0; j < n; ++j)
    for (Index g = 0; g < ng; ++g) c(g, j) = normal(rng);
  return orthonormalize(Orbitals(std::move(c), model.quadrature()));
}

inline FlowResult solve(SolverKind kind, const GridModel &model, const Orbitals &U0,
                        const FlowConfig &cfg) {
  if (kind == SolverKind::retraction) return run_retraction(model, U0, cfg);
  return run_flow(model, U0, cfg);
}

struct RunRecord {
  FlowResult result;
  double wall_seconds = 0.0;
};

inline RunRecord timed_solve(SolverKind kind, const GridModel &model, const Orbitals &U0,
                             const FlowConfig &cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord r{solve(kind, model, U0, cfg), 0.0};
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline double max_orth_error(const std::vector<TraceRecord> &trace) {
  double m = 0.0;
  for (const auto &r : trace) m = std::max(m, r.orth_error);
  return m;
}

inline nlohmann::json summary_json(const ExperimentConfig &cfg, SolverKind kind,
                                   const SolverConfig &solver, const RunRecord &run) {
  const auto &res = run.result;
  const auto &last = res.trace.back();
  nlohmann::json j;
  j["status"] = to_string(res.status);
  j["final_energy"] = last.energy;
  j["final_grad_norm"] = last.grad_norm;
  j["iterations"] = last.iter;
  j["rejected_steps"] = res.rejected_steps;
  j["initial_dt"] = res.initial_dt;
  j["final_dt"] = last.dt;
  j["max_orth_error"] = max_orth_error(res.trace);
  j["wall_time_seconds"] = run.wall_seconds;
  j["seed"] = cfg.seed;
  j["solver"] = to_string(kind);
  j["model"] = to_string(cfg.model.kind);
  j["dt"] = solver.dt;
  j["inner_iters"] = solver.inner_iters;
  if (res.rate) {
    j["rate"] = {{"rho_hat", res.rate->rho_hat}, {"r_squared", res.rate->r_squared}};
  } else {
    j["rate"] = nullptr;
  }
  return j;
}

namespace detail {

inline void write_file(const std::filesystem::path &p, const std::string &text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
  if (!os) throw std::runtime_error("write failed for " + p.string());
}

inline void write_run(const std::filesystem::path &dir, const ExperimentConfig &cfg,
                      SolverKind kind, const SolverConfig &solver, const RunRecord &run) {
  std::filesystem::create_directories(dir);
  std::ostringstream trace;
  write_trace_csv(trace, run.result.trace);
  write_file(dir / "trace.csv", trace.str());
  write_file(dir / "summary.json", summary_json(cfg, kind, solver, run).dump(2) + "\n");
}

template <class Body>
int guarded(std::ostream &err, Body &&body) {
  try {
    return body();
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << '\n';
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitConfigError;
}

inline ExperimentConfig load(const std::string &path, const std::optional<std::string> &output_dir) {
  ExperimentConfig cfg = load_config(path);
  if (output_dir) cfg.output_dir = *output_dir;
  return cfg;
}

} // namespace detail

/// Single run: <output_dir>/trace.csv and <output_dir>/summary.json.
inline int cmd_run(const std::string &config_path, const std::optional<std::string> &output_dir = std::nullopt,
                   std::ostream &out = std::cout, std::ostream &err = std::cerr) {
  return detail::guarded(err, [&] {
    const ExperimentConfig cfg = detail::load(config_path, output_dir);
    const GridModel model = build_model(cfg.model);
    const Orbitals U0 = initial_orbitals(cfg.model, model, cfg.seed);
    const RunRecord run = timed_solve(cfg.solver.kind, model, U0, to_flow_config(cfg.solver, cfg.seed));
    detail::write_run(cfg.output_dir, cfg, cfg.solver.kind, cfg.solver, run);
    const auto &last = run.result.trace.back();
    out << to_string(run.result.status) << ": iterations=" << last.iter
        << " energy=" << format_double(last.energy) << " grad_norm=" << format_double(last.grad_norm)
        << '\n';
    return exit_code(run.result.status);
  });
}

inline constexpr const char *kCompareHeader =
    "iter,energy_a,energy_b,energy_gap,half_spec_min_a,half_spec_max_a,half_spec_min_b,"
    "half_spec_max_b";

/// Paired runs from the same initial orbitals. Traces go to
/// <output_dir>/a_<solver> and <output_dir>/b_<solver>; compare.csv holds the
/// common iterations side by side with energy_gap = energy_a - energy_b.
inline int cmd_compare(const std::string &config_path,
                       const std::optional<std::string> &output_dir = std::nullopt,
                       std::ostream &out = std::cout, std::ostream &err = std::cerr) {
  return detail::guarded(err, [&] {
    const ExperimentConfig cfg = detail::load(config_path, output_dir);
    if (!cfg.compare) throw ConfigError(config_path + ": compare needs a [compare] section");
    const GridModel model = build_model(cfg.model);
    const Orbitals U0 = initial_orbitals(cfg.model, model, cfg.seed);
    std::vector<RunRecord> runs;
    const char *labels[] = {"a_", "b_"};
    for (std::size_t i = 0; i < 2; ++i) {
      SolverConfig s = cfg.solver;
      s.kind = cfg.compare->solvers[i];
      runs.push_back(timed_solve(s.kind, model, U0, to_flow_config(s, cfg.seed)));
      detail::write_run(std::filesystem::path(cfg.output_dir) / (labels[i] + std::string(to_string(s.kind))),
                        cfg, s.kind, s, runs.back());
    }
    const auto &ta = runs[0].result.trace;
    const auto &tb = runs[1].result.trace;
    std::ostringstream csv;
    csv << kCompareHeader << '\n';
    for (std::size_t k = 0; k < std::min(ta.size(), tb.size()); ++k) {
      csv << ta[k].iter << ',' << format_double(ta[k].energy) << ',' << format_double(tb[k].energy) << ','
          << format_double(ta[k].energy - tb[k].energy) << ',' << format_double(ta[k].half_spec_min) << ','
          << format_double(ta[k].half_spec_max) << ',' << format_double(tb[k].half_spec_min) << ','
          << format_double(tb[k].half_spec_max) << '\n';
    }
    detail::write_file(std::filesystem::path(cfg.output_dir) / "compare.csv", csv.str());
    int code = kExitConverged;
    for (std::size_t i = 0; i < 2; ++i) {
      out << labels[i] << to_string(cfg.compare->solvers[i]) << ": " << to_string(runs[i].result.status)
          << " iterations=" << runs[i].result.trace.back().iter << '\n';
      code = std::max(code, exit_code(runs[i].result.status));
    }
    return code;
  });
}

/// Worker count for sweeps: FLOW_THREADS if set, else the logical CPU count.
inline unsigned sweep_threads() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const char *env = std::getenv("FLOW_THREADS");
  if (!env || !*env) return hw;
  char *end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1)
    throw ConfigError(std::string("FLOW_THREADS must be a positive integer, got '") + env + "'");
  return static_cast<unsigned>(std::min<long>(v, 1024));
}

struct SweepPoint {
  double dt = 0.0;
  std::int64_t inner_iters = 0;
};

inline std::vector<SweepPoint> sweep_grid(const ExperimentConfig &cfg) {
  const std::vector<double> dts = cfg.sweep && !cfg.sweep->dt.empty()
                                      ? cfg.sweep->dt
                                      : std::vector<double>{cfg.solver.dt};
  const std::vector<std::int64_t> ps = cfg.sweep && !cfg.sweep->inner_iters.empty()
                                           ? cfg.sweep->inner_iters
                                           : std::vector<std::int64_t>{cfg.solver.inner_iters};
  std::vector<SweepPoint> grid;
  for (double dt : dts)
    for (auto p : ps) grid.push_back({dt, p});
  return grid;
}

inline constexpr const char *kIndexHeader =
    "run,dir,dt,inner_iters,status,iterations,rejected_steps,final_energy,final_grad_norm,"
    "max_orth_error,rho_hat,r_squared";

/// One run per grid point in <output_dir>/run_NNN, executed on up to
/// sweep_threads() workers. index.csv lists the runs in grid order.
inline int cmd_sweep(const std::string &config_path, const std::optional<std::string> &output_dir = std::nullopt,
                     std::ostream &out = std::cout, std::ostream &err = std::cerr) {
  return detail::guarded(err, [&] {
    const ExperimentConfig cfg = detail::load(config_path, output_dir);
    if (!cfg.sweep) throw ConfigError(config_path + ": sweep needs a [sweep] section");
    const unsigned threads = sweep_threads();
    const GridModel model = build_model(cfg.model);
    const Orbitals U0 = initial_orbitals(cfg.model, model, cfg.seed);
    const auto grid = sweep_grid(cfg);

    std::vector<std::optional<RunRecord>> runs(grid.size());
    std::vector<std::string> failures(grid.size());
    std::atomic<std::size_t> next{0};
    const auto dir_name = [](std::size_t i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "run_%03zu", i);
      return std::string(buf);
    };
    const auto worker = [&] {
      for (std::size_t i = next++; i < grid.size(); i = next++) {
        try {
          SolverConfig s = cfg.solver;
          s.dt = grid[i].dt;
          s.inner_iters = grid[i].inner_iters;
          RunRecord r = timed_solve(s.kind, model, U0, to_flow_config(s, cfg.seed));
          detail::write_run(std::filesystem::path(cfg.output_dir) / dir_name(i), cfg, s.kind, s, r);
          runs[i] = std::move(r);
        } catch (const std::exception &e) {
          failures[i] = e.what();
        }
      }
    };
    {
      std::vector<std::jthread> pool;
      const unsigned n = std::min<unsigned>(threads, static_cast<unsigned>(grid.size()));
      for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    }
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (!failures[i].empty()) throw std::runtime_error(dir_name(i) + ": " + failures[i]);

    std::ostringstream csv;
    csv << kIndexHeader << '\n';
    int code = kExitConverged;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto &res = runs[i]->result;
      const auto &last = res.trace.back();
      csv << i << ',' << dir_name(i) << ',' << format_double(grid[i].dt) << ',' << grid[i].inner_iters << ','
          << to_string(res.status) << ',' << last.iter << ',' << res.rejected_steps << ','
          << format_double(last.energy) << ',' << format_double(last.grad_norm) << ','
          << format_double(max_orth_error(res.trace)) << ',' << (res.rate ? format_double(res.rate->rho_hat) : "")
          << ',' << (res.rate ? format_double(res.rate->r_squared) : "") << '\n';
      code = std::max(code, exit_code(res.status));
    }
    std::filesystem::create_directories(cfg.output_dir);
    detail::write_file(std::filesystem::path(cfg.output_dir) / "index.csv", csv.str());
    out << grid.size() << " runs written to " << cfg.output_dir << '\n';
    return code;
  });
}

} // namespace opflow::cli
