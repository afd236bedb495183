#pragma once

// Time stepping for the orthogonality-preserving gradient flow
//
//   dU/dt = -A_U U,   A_U = grad E(U) U^T - U grad E(U)^T.
//
// One step solves the first half of the split midpoint scheme by the
// fixed-point iteration
//
//   U_half^(k) = (I + dt/2 A_{U_half^(k-1)})^{-1} U_n,   U_half^(0) = U_n,
//
// and finishes with U_{n+1} = 2 U_half - U_n. A fixed number of sweeps p is
// the practical orthogonality preserving iteration; iterating to a tolerance
// approximates the exact implicit midpoint step. Every sweep is a Cayley-type
// solve, so U_{n+1} stays on the Stiefel manifold for any p.

#include "opflow/manifold.hpp"
#include "opflow/models.hpp"
#include "opflow/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace opflow {

struct FixedCount {
  int p = 2;
};

struct ToTolerance {
  double tol = 1e-12;
  int max_inner = 100;
};

using InnerMode = std::variant<FixedCount, ToTolerance>;

enum class DtPolicy { fixed, adaptive };

// How a sampled Lipschitz constant L1_hat becomes a step size.
//  optimal_rate: 2 / L1_hat, the minimizer of the midpoint rate bound. For
//                fixed-count inner sweeps this is the neutral-stability edge.
//  contraction:  2 / (L1_hat sqrt(N)), the inner fixed-point contraction
//                bound; strictly inside the monotone regime.
enum class SeedRule { optimal_rate, contraction };

struct FlowConfig {
  double dt = 0.05;
  DtPolicy dt_policy = DtPolicy::adaptive;
  double dt_min = 1e-8;
  double dt_max = 1.0;
  double epsilon = 1e-8;
  int max_outer = 10000;
  InnerMode inner = FixedCount{2};
  bool rate_probe = false;

  // Seed dt from a sampled Lipschitz constant, clamped to [dt_min, dt_max].
  bool lipschitz_seed = false;
  SeedRule seed_rule = SeedRule::optimal_rate;
  int lipschitz_samples = 16;
  double lipschitz_radius = 1e-3;
  std::uint64_t seed = 0;

  double grow_factor = 1.2;
  double shrink_factor = 0.5;
  int grow_after = 5;

  void validate() const {
    if (!(dt_min > 0.0) || !(dt_max > 0.0))
      throw PreconditionError("flow config: dt_min and dt_max must be positive");
    if (!(dt > 0.0)) throw PreconditionError("flow config: dt must be positive");
    if (!(dt_min <= dt && dt <= dt_max))
      throw PreconditionError("flow config: need dt_min <= dt <= dt_max");
    if (!(epsilon > 0.0)) throw PreconditionError("flow config: epsilon must be positive");
    if (max_outer < 0) throw PreconditionError("flow config: max_outer must be >= 0");
    if (const auto *f = std::get_if<FixedCount>(&inner); f && f->p < 1)
      throw PreconditionError("flow config: inner iteration count p must be >= 1");
    if (const auto *t = std::get_if<ToTolerance>(&inner);
        t && (!(t->tol > 0.0) || t->max_inner < 1))
      throw PreconditionError("flow config: inner tolerance must be > 0 and "
                              "max_inner >= 1");
    if (lipschitz_seed && (lipschitz_samples < 1 || !(lipschitz_radius > 0.0)))
      throw PreconditionError("flow config: Lipschitz probe needs samples >= 1 "
                              "and radius > 0");
  }
};

enum class StepStatus {
  accepted,
  energy_increase,
  inner_not_converged,
  inner_expanding,
  breakdown
};

inline const char *to_string(StepStatus s) {
  switch (s) {
  case StepStatus::accepted: return "accepted";
  case StepStatus::energy_increase: return "energy_increase";
  case StepStatus::inner_not_converged: return "inner_not_converged";
  case StepStatus::inner_expanding: return "inner_expanding";
  case StepStatus::breakdown: return "breakdown";
  }
  return "unknown";
}

struct StepOutcome {
  Orbitals U_next;
  Orbitals U_half;
  int inner_iters_used = 0;
  double inner_residual = 0.0;
  std::pair<double, double> half_spectrum{1.0, 1.0};
  double energy_before = 0.0;
  double energy_after = 0.0;
  bool accepted = false;
  StepStatus status = StepStatus::accepted;
  std::string diagnostic;
};

inline constexpr double kEnergyIncreaseTolerance = 1e-12;

inline bool energy_not_increased(double before, double after) {
  return after <= before + kEnergyIncreaseTolerance * std::abs(before);
}

namespace detail {

/// Shared inner loop. `before` avoids re-evaluating E(U_n) when the caller
/// already has it.
template <EnergyModel M>
StepOutcome midpoint_step(const M &model, const Orbitals &U, double dt,
                          const InnerMode &mode, std::optional<double> before) {
  StepOutcome out;
  out.energy_before = before ? *before : model.energy(U);
  if (dt == 0.0) {
    out.U_next = U;
    out.U_half = U;
    out.half_spectrum = spectrum_bounds(gram(U, U));
    out.energy_after = out.energy_before;
    out.accepted = true;
    return out;
  }

  const auto *fixed = std::get_if<FixedCount>(&mode);
  const auto *tolerance = std::get_if<ToTolerance>(&mode);
  const int limit = fixed ? fixed->p : tolerance->max_inner;

  Orbitals half = U;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool converged = fixed != nullptr;
  bool expanding = false;
  // Residuals below this are rounding noise and say nothing about contraction.
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, trace_norm(U));
  try {
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= limit; ++k) {
      const SkewGenerator a(model.gradient(half), half);
      Orbitals next = cayley_solve_smw(a, 0.5 * dt, U);
      const auto [smin, smax] = spectrum_bounds(gram(next, next));
      lo = std::min(lo, smin);
      hi = std::max(hi, smax);
      out.inner_residual = trace_norm(next.like(next.coeffs - half.coeffs));
      half = std::move(next);
      out.inner_iters_used = k;
      if (tolerance && out.inner_residual <= tolerance->tol * dt) {
        converged = true;
        break;
      }
      // The sweep map must contract (dt below the contraction radius);
      // growing updates mean the fixed point is not being approached.
      expanding = out.inner_residual > previous && out.inner_residual > noise;
      if (tolerance && expanding) break;
      previous = out.inner_residual;
    }
  } catch (const NumericalBreakdown &e) {
    out.U_next = U;
    out.U_half = half;
    out.half_spectrum = {lo, hi};
    out.energy_after = out.energy_before;
    out.status = StepStatus::breakdown;
    out.diagnostic = e.what();
    return out;
  }

  out.U_half = half;
  out.half_spectrum = {lo, hi};
  out.U_next = U.like(2.0 * half.coeffs - U.coeffs);
  out.energy_after = model.energy(out.U_next);
  if (!converged) {
    out.status = StepStatus::inner_not_converged;
    out.diagnostic = expanding ? "inner iteration diverging"
                               : "inner iteration did not reach tolerance in " +
                                     std::to_string(limit) + " sweeps";
  } else if (expanding) {
    out.status = StepStatus::inner_expanding;
    out.diagnostic = "inner sweeps are not contracting";
  } else if (!energy_not_increased(out.energy_before, out.energy_after)) {
    out.status = StepStatus::energy_increase;
    out.diagnostic = "energy increased";
  } else {
    out.accepted = true;
  }
  return out;
}

} // namespace detail

/// One step of the orthogonality preserving iteration with p Cayley sweeps.
template <EnergyModel M>
StepOutcome step_opi(const M &model, const Orbitals &U, double dt, int p) {
  if (p < 1) throw PreconditionError("step_opi: p must be >= 1");
  if (orth_error(U) > kManifoldTolerance)
    throw PreconditionError("step_opi: U is not orthonormal");
  return detail::midpoint_step(model, U, dt, FixedCount{p}, std::nullopt);
}

/// Implicit midpoint step; the inner fixed-point iteration runs until
/// |||U^(k) - U^(k-1)||| <= tol * dt. Non-convergence rejects the step.
template <EnergyModel M>
StepOutcome step_midpoint(const M &model, const Orbitals &U, double dt,
                          double tol, int max_inner) {
  if (orth_error(U) > kManifoldTolerance)
    throw PreconditionError("step_midpoint: U is not orthonormal");
  return detail::midpoint_step(model, U, dt, ToTolerance{tol, max_inner},
                               std::nullopt);
}

template <EnergyModel M>
StepOutcome step(const M &model, const Orbitals &U, double dt,
                 const InnerMode &mode) {
  if (orth_error(U) > kManifoldTolerance)
    throw PreconditionError("step: U is not orthonormal");
  return detail::midpoint_step(model, U, dt, mode, std::nullopt);
}

struct TraceRecord {
  int iter = 0;
  double sim_time = 0.0;
  double energy = 0.0;
  double grad_norm = 0.0;
  double orth_error = 0.0;
  double half_spec_min = 1.0;
  double half_spec_max = 1.0;
  double dt = 0.0;
  int inner_iters = 0;

  bool operator==(const TraceRecord &) const = default;
};

enum class RunStatus { converged, max_iterations, stalled };

inline const char *to_string(RunStatus s) {
  switch (s) {
  case RunStatus::converged: return "converged";
  case RunStatus::max_iterations: return "max-iterations";
  case RunStatus::stalled: return "stalled";
  }
  return "unknown";
}

struct RateEstimate {
  double rho_hat = 1.0;
  double r_squared = 0.0;
};

struct FlowResult {
  Orbitals final;
  std::vector<TraceRecord> trace;
  RunStatus status = RunStatus::max_iterations;
  int rejected_steps = 0;
  double initial_dt = 0.0;
  std::optional<RateEstimate> rate;
};

/// Least-squares fit of log(grad_norm) against the iteration index over the
/// final half of the trace. rho_hat is the per-iteration contraction factor.
inline RateEstimate estimate_rate(const std::vector<TraceRecord> &trace) {
  std::vector<std::pair<double, double>> pts;
  for (const auto &r : trace)
    if (r.grad_norm > 0.0 && std::isfinite(r.grad_norm))
      pts.emplace_back(static_cast<double>(r.iter), std::log(r.grad_norm));
  if (pts.size() < 20)
    throw PreconditionError("estimate_rate: need at least 20 records with "
                            "positive gradient norm, got " +
                            std::to_string(pts.size()));
  const std::size_t first = pts.size() / 2;
  const double m = static_cast<double>(pts.size() - first);
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = first; i < pts.size(); ++i) {
    sx += pts[i].first;
    sy += pts[i].second;
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = first; i < pts.size(); ++i) {
    const double dx = pts[i].first - mx, dy = pts[i].second - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  const double slope = sxy / sxx;
  const double ss_res = std::max(0.0, syy - slope * sxy);
  RateEstimate est;
  est.rho_hat = std::exp(slope);
  est.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return est;
}

inline constexpr int kLipschitzPowerSteps = 40;

/// Probe directions for the Lipschitz estimate: Gaussian starts, each refined
/// by power iteration on the Grassmann-gradient difference map. Every probe
/// is an orthonormal pair V1,2 = qr(U +- radius d) with |||d||| = 1.
template <EnergyModel M>
double estimate_lipschitz(const M &model, const Orbitals &U, int n_samples,
                          double radius, std::uint64_t seed = 0,
                          int power_steps = kLipschitzPowerSteps) {
  if (orth_error(U) > kManifoldTolerance)
    throw PreconditionError("estimate_lipschitz: U is not orthonormal");
  if (n_samples < 1)
    throw PreconditionError("estimate_lipschitz: n_samples must be >= 1");
  if (!(radius > 0.0))
    throw PreconditionError("estimate_lipschitz: radius must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  double best = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    Mat d(U.grid_size(), U.count());
    for (Index j = 0; j < d.cols(); ++j)
      for (Index g = 0; g < d.rows(); ++g) d(g, j) = normal(rng);
    for (int k = 0; k <= power_steps; ++k) {
      const double nd = trace_norm(U.like(d));
      if (!(nd > 0.0)) break;
      d /= nd;
      const Orbitals v1 = weighted_qr(U.like(U.coeffs + radius * d));
      const Orbitals v2 = weighted_qr(U.like(U.coeffs - radius * d));
      const Orbitals g1 = grassmann_gradient(model.gradient(v1), v1);
      const Orbitals g2 = grassmann_gradient(model.gradient(v2), v2);
      const double den = trace_norm(v1.like(v1.coeffs - v2.coeffs));
      if (!(den > 0.0)) break;
      const double ratio = trace_norm(g1.like(g1.coeffs - g2.coeffs)) / den;
      best = std::max(best, ratio);
      d = g1.coeffs - g2.coeffs;
    }
  }
  return best;
}

inline double seeded_dt(double l1_hat, Index n_orbitals, SeedRule rule) {
  if (!(l1_hat > 0.0)) throw PreconditionError("seeded_dt: L1_hat must be positive");
  const double base = 2.0 / l1_hat;
  return rule == SeedRule::optimal_rate
             ? base
             : base / std::sqrt(static_cast<double>(n_orbitals));
}

template <EnergyModel M>
double grassmann_gradient_norm(const M &model, const Orbitals &U) {
  return trace_norm(grassmann_gradient(model.gradient(U), U));
}

namespace detail {

/// Outer loop shared by every scheme. `stepper(U, dt, E(U))` returns a
/// StepOutcome; rejected steps shrink dt under the adaptive policy and stop
/// the run under the fixed one.
template <EnergyModel M, class Stepper>
FlowResult run_outer(const M &model, const Orbitals &U0, const FlowConfig &cfg,
                     Stepper &&stepper) {
  cfg.validate();
  FlowResult res;
  Orbitals U = orthonormalize(U0);

  double dt = cfg.dt;
  if (cfg.lipschitz_seed) {
    const double l1 = estimate_lipschitz(model, U, cfg.lipschitz_samples,
                                         cfg.lipschitz_radius, cfg.seed);
    if (l1 > 0.0)
      dt = std::clamp(seeded_dt(l1, U.count(), cfg.seed_rule), cfg.dt_min,
                      cfg.dt_max);
  }
  res.initial_dt = dt;

  double energy = model.energy(U);
  double gnorm = grassmann_gradient_norm(model, U);
  double sim_time = 0.0;
  {
    const auto [lo, hi] = spectrum_bounds(gram(U, U));
    res.trace.push_back({0, 0.0, energy, gnorm, orth_error(U), lo, hi, dt, 0});
  }

  int accepted = 0;
  int streak = 0;
  res.status = RunStatus::converged;
  while (gnorm > cfg.epsilon) {
    if (accepted >= cfg.max_outer) {
      res.status = RunStatus::max_iterations;
      break;
    }
    StepOutcome out = stepper(U, dt, energy);
    if (!std::isfinite(out.energy_after))
      throw ModelError("run_flow: non-finite energy after step");
    if (out.accepted) {
      U = std::move(out.U_next);
      energy = out.energy_after;
      gnorm = grassmann_gradient_norm(model, U);
      sim_time += dt;
      ++accepted;
      res.trace.push_back({accepted, sim_time, energy, gnorm, orth_error(U),
                           out.half_spectrum.first, out.half_spectrum.second,
                           dt, out.inner_iters_used});
      if (cfg.dt_policy == DtPolicy::adaptive && ++streak >= cfg.grow_after) {
        dt = std::min(dt * cfg.grow_factor, cfg.dt_max);
        streak = 0;
      }
    } else {
      ++res.rejected_steps;
      streak = 0;
      if (cfg.dt_policy == DtPolicy::fixed) {
        res.status = RunStatus::stalled;
        break;
      }
      dt *= cfg.shrink_factor;
      if (dt < cfg.dt_min) {
        res.status = RunStatus::stalled;
        break;
      }
    }
  }
  res.final = std::move(U);
  if (cfg.rate_probe) {
    try {
      res.rate = estimate_rate(res.trace);
    } catch (const PreconditionError &) {
    }
  }
  return res;
}

} // namespace detail

/// Runs the midpoint-type flow until |||grad_G E(U_n)||| <= epsilon.
template <EnergyModel M>
FlowResult run_flow(const M &model, const Orbitals &U0, const FlowConfig &cfg) {
  return detail::run_outer(
      model, U0, cfg, [&](const Orbitals &U, double dt, double energy) {
        return detail::midpoint_step(model, U, dt, cfg.inner, energy);
      });
}

} // namespace opflow
