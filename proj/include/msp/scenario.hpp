#pragma once

// Executes one RunConfig: builds the initial data, runs the Picard solver and
// writes the diagnostics, convergence log, summary and optional snapshots.

#include <msp/config.hpp>
#include <msp/coupler.hpp>
#include <msp/diagnostics.hpp>
#include <msp/snapshot.hpp>

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

namespace msp {

enum class ExitCode : int {
  ok = 0,
  failure = 1,
  config_error = 2,
  non_contraction = 3,
  iteration_limit = 4,
  numerical_abort = 5,
  verification_failed = 6,
};

inline int to_int(ExitCode e) { return static_cast<int>(e); }

inline ExitCode exit_code_for(PicardStatus s) {
  switch (s) {
    case PicardStatus::converged: return ExitCode::ok;
    case PicardStatus::horizon_too_large: return ExitCode::non_contraction;
    case PicardStatus::iteration_limit: return ExitCode::iteration_limit;
  }
  return ExitCode::failure;
}

namespace detail {

inline Snapshot load_snapshot_for(const std::filesystem::path& path, const Grid& expected, bool wavefunction) {
  Snapshot s;
  try {
    s = read_snapshot(path);
  } catch (const std::exception& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
  if (std::holds_alternative<ScalarField>(s.field) != wavefunction)
    throw ConfigError({path.string() + ": expected a " + std::string(wavefunction ? "wave function" : "vector field") +
                       " snapshot"});
  if (!(s.grid() == expected))
    throw ConfigError({path.string() + ": snapshot grid does not match the configured grid"});
  return s;
}

inline VectorField build_field(const VectorFieldSpec& spec, const Grid& g3, std::uint64_t seed) {
  if (spec.kind == "modes") return plane_wave_field(g3, spec.modes);
  if (spec.kind == "random") return random_transverse_field(g3, seed + spec.stream, spec.kmax, spec.amplitude);
  if (spec.kind == "snapshot") return std::get<VectorField>(load_snapshot_for(spec.path, g3, false).field);
  return VectorField(g3);
}

}  // namespace detail

/// Initial data described by the configuration. Random generators draw from
/// `seed + stream`; snapshot problems surface as ConfigError.
inline InitialData build_initial_data(const RunConfig& c) {
  const Grid g = c.grid();
  const Grid g3 = g.with_dim(3);
  InitialData init{WaveFunction(g), detail::build_field(c.A0, g3, c.seed), detail::build_field(c.A1, g3, c.seed)};
  if (c.psi.kind == "snapshot")
    init.psi0 = std::get<ScalarField>(detail::load_snapshot_for(c.psi.path, g, true).field);
  else
    init.psi0 = gaussian_packets(g, c.psi.packets, c.params.hbar);
  if (c.psi.exchange_sign) init.psi0 = normalize(exchange_symmetrize(init.psi0, *c.psi.exchange_sign));
  const double scale = std::max(1.0, std::max(l2_norm(init.A0), l2_norm(init.A1)));
  if (divergence_residual(init.A0) > 1e-9 * scale || divergence_residual(init.A1) > 1e-9 * scale)
    throw ConfigError({"initial_data: A0 and A1 must be divergence free"});
  if (!(l2_norm(init.psi0) > 0.0)) throw ConfigError({"initial_data.psi: the wave function vanishes"});
  return init;
}

struct RunOutcome {
  ExitCode code = ExitCode::ok;
  std::string message;
  std::vector<std::filesystem::path> files;
  std::optional<HorizonResult> result;
};

inline nlohmann::json run_summary(const RunConfig& c, const HorizonResult& r, ExitCode code) {
  nlohmann::json s;
  s["name"] = c.name;
  s["seed"] = c.seed;
  s["status"] = to_string(r.status);
  s["exit_code"] = to_int(code);
  s["T_requested"] = c.total_time.value_or(c.picard.T);
  s["T_used"] = r.T_used;
  s["covered"] = r.covered;
  s["dt"] = c.picard.dt();
  s["attempts"] = r.attempts.size();
  s["segments"] = std::count_if(r.attempts.begin(), r.attempts.end(),
                                [](const SegmentLog& a) { return a.result.converged(); });
  s["max_junction_jump"] = r.max_junction_jump;
  nlohmann::json shrinks = nlohmann::json::array();
  for (const auto& e : r.shrinks) shrinks.push_back({{"segment", e.segment}, {"from", e.from}, {"to", e.to}});
  s["horizon_shrinks"] = shrinks;
  nlohmann::json warnings = nlohmann::json::array();
  for (const auto& a : r.attempts)
    for (const auto& w : a.result.warnings) warnings.push_back("segment " + std::to_string(a.segment) + ": " + w);
  s["warnings"] = warnings;
  return s;
}

/// Runs the scenario and writes its artifacts into `output_dir` (default: the
/// configured directory). Every file is written to a temporary name and renamed.
inline RunOutcome run_scenario(const RunConfig& c, std::optional<std::filesystem::path> output_dir = std::nullopt) {
  RunOutcome out;
  InitialData init;
  try {
    init = build_initial_data(c);
  } catch (const ConfigError& e) {
    out.code = ExitCode::config_error;
    out.message = e.what();
    return out;
  }
  const auto model = ManyBodyModel::make(c.params, c.grid(), c.coulomb);

  HorizonResult result;
  try {
    if (c.adaptive) {
      result = adaptive_horizon(init, model, c.picard, c.total_time);
    } else {
      auto r = picard_solve(init, model, c.picard);
      result.status = r.status;
      if (r.converged()) {
        result.T_used = c.picard.T;
        result.covered = c.picard.T;
        result.solution = r.solution;
      }
      result.attempts.push_back({0, c.picard.T, std::move(r)});
    }
  } catch (const NumericalError& e) {
    out.code = ExitCode::numerical_abort;
    out.message = e.what();
    return out;
  }
  out.code = exit_code_for(result.status);
  out.message = "status " + to_string(result.status);

  const auto dir = output_dir.value_or(c.output.directory);
  std::filesystem::create_directories(dir);
  auto emit = [&](const std::string& name, const std::string& text) {
    write_file_atomically(dir / name, text);
    out.files.push_back(dir / name);
  };
  if (c.output.convergence) {
    std::ostringstream csv;
    write_convergence_csv(csv, result.attempts);
    emit("convergence.csv", csv.str());
  }
  if (result.converged()) {
    std::ostringstream csv;
    write_diagnostics_csv(csv, diagnose(result.solution, model, c.psi.exchange_sign));
    emit("diagnostics.csv", csv.str());
    if (c.output.snapshots) {
      const auto& s = result.solution;
      const double t = s.time(s.nodes() - 1);
      const std::pair<const char*, Snapshot> snaps[] = {{"psi_final.msp", {t, c.params, s.psi.back()}},
                                                        {"A_final.msp", {t, c.params, s.A.back()}},
                                                        {"Adot_final.msp", {t, c.params, s.Adot.back()}}};
      for (const auto& [name, snap] : snaps) {
        write_snapshot(dir / name, snap);
        out.files.push_back(dir / name);
      }
    }
  }
  emit("summary.json", run_summary(c, result, out.code).dump(2) + "\n");
  out.result = std::move(result);
  return out;
}

}  // namespace msp
