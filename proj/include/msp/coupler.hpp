#pragma once

// Picard iteration for the coupled system. One application of Phi solves the
// Schrodinger equation in the input field and the Klein-Gordon equation with the
// input trajectory's source; the iteration stops once successive trajectories
// agree in the metric
//
//   d = max( ||psi - psi'||_{L^inf L^2}, ||A - A'||_{L^inf H^1/2}, ||A - A'||_{L^4 L^4} ).

#include <msp/current.hpp>
#include <msp/fields.hpp>
#include <msp/helmholtz.hpp>
#include <msp/klein_gordon.hpp>
#include <msp/schrodinger.hpp>
#include <msp/spectral.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace msp {

struct InitialData {
  WaveFunction psi0;
  VectorField A0;
  VectorField A1;
};

struct PicardConfig {
  double T = 1.0;
  int n_t = 10;
  double tol = 1e-8;
  int max_iters = 50;
  double contraction_guard = 0.9;
  double horizon_shrink = 0.5;
  double T_min = 1e-3;
  std::optional<double> R1;
  std::optional<double> R2;
  StepperConfig stepper;

  double dt() const { return T / n_t; }

  void validate() const {
    if (!(T > 0.0)) throw std::invalid_argument("picard: T must be positive");
    if (n_t < 1) throw std::invalid_argument("picard: n_t must be at least 1");
    if (!(tol > 0.0)) throw std::invalid_argument("picard: tol must be positive");
    if (max_iters < 1) throw std::invalid_argument("picard: max_iters must be at least 1");
    if (!(contraction_guard > 0.0)) throw std::invalid_argument("picard: contraction_guard must be positive");
    if (!(horizon_shrink > 0.0 && horizon_shrink < 1.0))
      throw std::invalid_argument("picard: horizon_shrink must lie in (0, 1)");
    if (!(T_min > 0.0)) throw std::invalid_argument("picard: T_min must be positive");
    detail::validate(stepper);
  }
};

struct ZMetricReport {
  double d = 0.0;
  double d_psi = 0.0;
  double d_A_half = 0.0;
  double d_A_44 = 0.0;
};

inline ZMetricReport z_metric(const TrajectoryPair& a, const TrajectoryPair& b) {
  a.validate();
  b.validate();
  require_matching_time_grids(a, b);
  std::vector<ScalarField> dpsi;
  std::vector<VectorField> dA;
  dpsi.reserve(a.nodes());
  dA.reserve(a.nodes());
  for (std::size_t i = 0; i < a.nodes(); ++i) {
    require_same_grid(a.psi[i].grid, b.psi[i].grid, "z_metric");
    require_same_grid(a.A[i].grid, b.A[i].grid, "z_metric");
    dpsi.push_back(a.psi[i] - b.psi[i]);
    dA.push_back(a.A[i] - b.A[i]);
  }
  ZMetricReport r;
  r.d_psi = spacetime_norm(dpsi, a.dt, infinity, 0.0, 2.0);
  r.d_A_half = spacetime_norm(dA, a.dt, infinity, 0.5, 2.0);
  r.d_A_44 = spacetime_norm(dA, a.dt, 4.0, 0.0, 4.0);
  r.d = std::max({r.d_psi, r.d_A_half, r.d_A_44});
  return r;
}

/// The time-frozen initial data on `nodes` samples starting at t0.
inline TrajectoryPair frozen_trajectory(const InitialData& init, double t0, double dt, std::size_t nodes) {
  TrajectoryPair t;
  t.t0 = t0;
  t.dt = dt;
  t.psi.assign(nodes, init.psi0);
  t.A.assign(nodes, init.A0);
  t.Adot.assign(nodes, init.A1);
  return t;
}

inline void validate_initial_data(const InitialData& init, const ManyBodyModel& model) {
  require_same_grid(init.psi0.grid, model.grid, "initial data");
  require_same_grid(init.A0.grid, model.field_grid(), "initial data");
  require_same_grid(init.A1.grid, model.field_grid(), "initial data");
  require_finite(init.psi0, "initial data");
  const double scale = std::max(1.0, std::max(l2_norm(init.A0), l2_norm(init.A1)));
  if (divergence_residual(init.A0) > 1e-9 * scale || divergence_residual(init.A1) > 1e-9 * scale)
    throw std::invalid_argument("initial data: A0 and A1 must be divergence free");
}

/// Phi(psi, A) = (U_A(., t0) psi0, solution of (Box + 1) B = (4 pi / c) sum_j P J_j[psi, A] + A).
inline TrajectoryPair phi_map(const TrajectoryPair& input, const InitialData& init, const ManyBodyModel& model,
                              const StepperConfig& stepper = {}) {
  input.validate();
  TrajectoryPair out;
  out.t0 = input.t0;
  out.dt = input.dt;
  out.psi = evolve_schrodinger(init.psi0, input.A, input.dt, model, stepper);
  const auto source = kg_source(input, model.params);
  auto states = kg_propagate_all(init.A0, init.A1, source, input.dt, model.params.c);
  out.A.reserve(states.size());
  out.Adot.reserve(states.size());
  for (auto& s : states) {
    out.A.push_back(std::move(s.A));
    out.Adot.push_back(std::move(s.Adot));
  }
  return out;
}

enum class PicardStatus { converged, horizon_too_large, iteration_limit };

inline std::string to_string(PicardStatus s) {
  switch (s) {
    case PicardStatus::converged: return "converged";
    case PicardStatus::horizon_too_large: return "horizon_too_large";
    case PicardStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

struct IterationRecord {
  int iteration = 0;
  ZMetricReport distance;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  double wall_time = 0.0;
  double psi_h2 = 0.0;
  double A_h1 = 0.0;
  double A_w14 = 0.0;
};

struct PicardResult {
  PicardStatus status = PicardStatus::iteration_limit;
  TrajectoryPair solution;
  std::vector<IterationRecord> log;
  std::vector<std::string> warnings;

  bool converged() const { return status == PicardStatus::converged; }
  int iterations() const { return static_cast<int>(log.size()); }
};

namespace detail {

/// (||A||_{L^4 L^4}^4 + ||D_t A||_{L^4 L^4}^4)^{1/4} with forward differences for D_t A.
inline double time_sobolev_surrogate(const TrajectoryPair& t) {
  std::vector<VectorField> diff;
  for (std::size_t i = 0; i + 1 < t.nodes(); ++i) {
    VectorField d = t.A[i + 1] - t.A[i];
    d *= 1.0 / t.dt;
    diff.push_back(std::move(d));
  }
  const double a = spacetime_norm(t.A, t.dt, 4.0, 0.0, 4.0);
  const double b = diff.size() >= 2 ? spacetime_norm(diff, t.dt, 4.0, 0.0, 4.0) : 0.0;
  return std::pow(std::pow(a, 4) + std::pow(b, 4), 0.25);
}

inline void record_monitors(IterationRecord& r, const TrajectoryPair& t) {
  for (std::size_t i = 0; i < t.nodes(); ++i) {
    r.psi_h2 = std::max(r.psi_h2, sobolev_norm(t.psi[i], 2.0));
    r.A_h1 = std::max(r.A_h1, sobolev_norm(t.A[i], 1.0));
  }
  r.A_w14 = time_sobolev_surrogate(t);
}

}  // namespace detail

/// X_{k+1} = Phi(X_k) from `seed` (default: the time-frozen initial data) until
/// d(X_{k+1}, X_k) <= tol. Three consecutive ratios above the guard end the
/// solve with horizon_too_large.
inline PicardResult picard_solve(const InitialData& init, const ManyBodyModel& model, const PicardConfig& config,
                                 const TrajectoryPair* seed = nullptr, double t0 = 0.0) {
  config.validate();
  validate_initial_data(init, model);
  const auto nodes = static_cast<std::size_t>(config.n_t) + 1;
  TrajectoryPair current = seed ? *seed : frozen_trajectory(init, t0, config.dt(), nodes);
  if (seed) {
    current.validate();
    if (current.nodes() != nodes || std::abs(current.dt - config.dt()) > 1e-14 * config.dt())
      throw std::invalid_argument("picard: seed does not match the configured time grid");
  }

  PicardResult result;
  const auto start = std::chrono::steady_clock::now();
  double previous = std::numeric_limits<double>::quiet_NaN();
  int above_guard = 0;
  for (int k = 1; k <= config.max_iters; ++k) {
    TrajectoryPair next;
    try {
      next = phi_map(current, init, model, config.stepper);
    } catch (const NumericalError& e) {
      throw NumericalError("picard iteration " + std::to_string(k) + ": " + e.what());
    }
    IterationRecord rec;
    rec.iteration = k;
    rec.distance = z_metric(next, current);
    if (std::isfinite(previous) && previous > 0.0) rec.ratio = rec.distance.d / previous;
    detail::record_monitors(rec, next);
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (config.R1 && rec.psi_h2 > *config.R1)
      result.warnings.push_back("iteration " + std::to_string(k) + ": H^2 norm of psi exceeds R1");
    if (config.R2 && std::max(rec.A_h1, rec.A_w14) > *config.R2)
      result.warnings.push_back("iteration " + std::to_string(k) + ": field norm exceeds R2");
    result.log.push_back(rec);
    if (!std::isfinite(rec.distance.d))
      throw NumericalError("picard iteration " + std::to_string(k) + ": non-finite distance");
    previous = rec.distance.d;
    current = std::move(next);

    if (rec.distance.d <= config.tol) {
      result.status = PicardStatus::converged;
      result.solution = std::move(current);
      return result;
    }
    above_guard = rec.ratio > config.contraction_guard ? above_guard + 1 : 0;
    if (above_guard >= 3) {
      result.status = PicardStatus::horizon_too_large;
      result.solution = std::move(current);
      return result;
    }
  }
  result.status = PicardStatus::iteration_limit;
  result.solution = std::move(current);
  return result;
}

struct HorizonEvent {
  int segment = 0;
  double from = 0.0;
  double to = 0.0;
};

struct SegmentLog {
  int segment = 0;
  double horizon = 0.0;
  PicardResult result;
};

struct HorizonResult {
  PicardStatus status = PicardStatus::iteration_limit;
  double T_used = 0.0;
  double covered = 0.0;
  TrajectoryPair solution;
  std::vector<SegmentLog> attempts;
  std::vector<HorizonEvent> shrinks;
  double max_junction_jump = 0.0;

  bool converged() const { return status == PicardStatus::converged; }
};

/// Covers [0, total] (default config.T) with Picard segments on the fixed step
/// config.dt(). A segment that fails to contract is retried with its horizon
/// multiplied by horizon_shrink, down to T_min; solved segments are chained by
/// restarting from their final state.
inline HorizonResult adaptive_horizon(const InitialData& init, const ManyBodyModel& model, const PicardConfig& config,
                                      std::optional<double> total = std::nullopt) {
  config.validate();
  const double target = total.value_or(config.T);
  if (!(target > 0.0)) throw std::invalid_argument("adaptive_horizon: total time must be positive");
  const double dt = config.dt();
  const auto total_steps = static_cast<int>(std::llround(target / dt));
  if (total_steps < 1 || std::abs(total_steps * dt - target) > 1e-9 * target)
    throw std::invalid_argument("adaptive_horizon: total time must be a multiple of T / n_t");

  HorizonResult out;
  InitialData segment_init = init;
  int steps_done = 0;
  int segment_steps = config.n_t;
  int segment = 0;
  while (steps_done < total_steps) {
    const int steps = std::min(segment_steps, total_steps - steps_done);
    PicardConfig seg = config;
    seg.n_t = steps;
    seg.T = steps * dt;
    auto res = picard_solve(segment_init, model, seg, nullptr, steps_done * dt);
    out.attempts.push_back({segment, seg.T, res});
    if (res.status == PicardStatus::horizon_too_large) {
      const int shrunk = static_cast<int>(std::floor(steps * config.horizon_shrink));
      if (shrunk < 1 || shrunk * dt < config.T_min) {
        out.status = PicardStatus::horizon_too_large;
        return out;
      }
      out.shrinks.push_back({segment, seg.T, shrunk * dt});
      segment_steps = shrunk;
      continue;
    }
    if (res.status != PicardStatus::converged) {
      out.status = res.status;
      return out;
    }
    if (segment == 0) {
      out.T_used = seg.T;
      out.solution = res.solution;
    } else {
      const double jump = std::max(l2_norm(out.solution.psi.back() - res.solution.psi.front()),
                                   l2_norm(out.solution.A.back() - res.solution.A.front()));
      out.max_junction_jump = std::max(out.max_junction_jump, jump);
      for (std::size_t i = 1; i < res.solution.nodes(); ++i) {
        out.solution.psi.push_back(res.solution.psi[i]);
        out.solution.A.push_back(res.solution.A[i]);
        out.solution.Adot.push_back(res.solution.Adot[i]);
      }
    }
    segment_init = {res.solution.psi.back(), res.solution.A.back(), res.solution.Adot.back()};
    steps_done += steps;
    ++segment;
  }
  out.covered = steps_done * dt;
  out.status = PicardStatus::converged;
  return out;
}

inline constexpr const char* convergence_schema = "msp-convergence v1";
inline constexpr const char* convergence_columns =
    "segment,horizon,iteration,d,d_psi,d_A_half,d_A_44,ratio,wall_time";

/// One row per Picard iteration of every attempt; `ratio` is empty for the first iteration.
inline void write_convergence_csv(std::ostream& out, const std::vector<SegmentLog>& attempts) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "# " << convergence_schema << "\n" << convergence_columns << "\n";
  for (const auto& a : attempts)
    for (const auto& r : a.result.log)
      out << a.segment << ',' << num(a.horizon) << ',' << r.iteration << ',' << num(r.distance.d) << ','
          << num(r.distance.d_psi) << ',' << num(r.distance.d_A_half) << ',' << num(r.distance.d_A_44) << ','
          << (std::isfinite(r.ratio) ? num(r.ratio) : std::string()) << ',' << num(r.wall_time) << "\n";
}

}  // namespace msp
