#pragma once

// Batch self-check: quick invariant checks of every module with pinned
// thresholds, grouped into named suites.

#include <msp/coupler.hpp>
#include <msp/current.hpp>
#include <msp/diagnostics.hpp>
#include <msp/helmholtz.hpp>
#include <msp/initial_data.hpp>
#include <msp/klein_gordon.hpp>
#include <msp/schrodinger.hpp>
#include <msp/spectral.hpp>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace msp {

struct CheckResult {
  std::string suite;
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
  int failures() const {
    return static_cast<int>(std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.passed; }));
  }
};

enum class Fault { none, divergence };

struct VerifyOptions {
  /// Suites to run; nullopt runs all of them, an empty list runs none.
  std::optional<std::vector<std::string>> subset;
  Fault fault = Fault::none;
};

inline const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names{"spectral", "helmholtz", "klein_gordon", "schrodinger", "current", "coupler"};
  return names;
}

namespace detail {

class CheckSink {
 public:
  CheckSink(std::string suite, VerifyReport& report) : suite_(std::move(suite)), report_(report) {}

  void at_most(const std::string& name, double value, double threshold) {
    report_.checks.push_back({suite_, name, value, threshold, std::isfinite(value) && value <= threshold, {}});
  }
  void at_least(const std::string& name, double value, double threshold) {
    report_.checks.push_back({suite_, name, value, threshold, value >= threshold, {}});
  }
  void fail(const std::string& name, double threshold, const std::string& why) {
    report_.checks.push_back({suite_, name, std::numeric_limits<double>::quiet_NaN(), threshold, false, why});
  }

 private:
  std::string suite_;
  VerifyReport& report_;
};

inline ScalarField seeded_scalar(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ScalarField f(g);
  for (auto& v : f.values) v = cplx(n(rng), n(rng));
  return f;
}

inline VectorField seeded_vector(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  VectorField f(g);
  for (auto& c : f.comp)
    for (auto& v : c) v = n(rng);
  return f;
}

inline double max_abs(const ScalarField& a) {
  double m = 0.0;
  for (const auto& v : a.values) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs(const VectorField& a) {
  double m = 0.0;
  for (const auto& c : a.comp)
    for (double v : c) m = std::max(m, std::abs(v));
  return m;
}

inline void verify_spectral(CheckSink& s) {
  const Grid g = Grid::make(8, 8.0, 3);
  const auto f = seeded_scalar(g, 1);
  s.at_most("identity_round_trip", max_abs(apply_multiplier(f, [](std::span<const double>) { return 1.0; }) - f), 1e-12);
  s.at_most("parseval", std::abs(sobolev_norm(f, 0.0) - l2_norm(f)) / l2_norm(f), 1e-12);
  const auto twice = apply_multiplier(apply_multiplier(f, [](std::span<const double> k) { return bracket(k); }),
                                      [](std::span<const double> k) { return bracket(k); });
  const auto once = apply_multiplier(f, [](std::span<const double> k) { return 1.0 + norm_squared(k); });
  s.at_most("multiplier_semigroup", max_abs(twice - once) / max_abs(once), 1e-10);
}

inline void verify_helmholtz(CheckSink& s) {
  const Grid g = Grid::make(16, 16.0, 3);
  const auto v = seeded_vector(g, 2);
  const auto pv = project(v);
  s.at_most("idempotence", max_abs(project(pv) - pv), 1e-10);
  s.at_most("divergence_of_projection", divergence_residual(pv), 1e-10);
  ScalarField phi(g);
  for_each_node(g, [&](std::size_t n, std::span<const double> x) {
    phi.values[n] = std::sin(2.0 * pi * x[0] / g.length) * std::cos(4.0 * pi * x[2] / g.length);
  });
  s.at_most("gradient_annihilation", max_abs(project(gradient(phi))), 1e-10);
  const auto t = random_transverse_field(g, 3, 1.6, 1.0);
  s.at_most("transverse_invariance", max_abs(project(t) - t), 1e-10);
}

inline void verify_klein_gordon(CheckSink& s) {
  const Grid g = Grid::make(8, 8.0, 3);
  const double c = 1.3, t = 0.7;
  const std::array<FieldMode, 1> mode{FieldMode{{1, 0, 0}, {0.0, 1.0, 0.0}, 0.5, 0.0}};
  const auto a0 = plane_wave_field(g, mode);
  const double k = 2.0 * pi / g.length;
  const double w = c * std::sqrt(1.0 + k * k);
  const auto state = kg_free(a0, VectorField(g), t, c);
  const double err = std::max(max_abs(state.A - std::cos(w * t) * a0), max_abs(state.Adot + w * std::sin(w * t) * a0));
  s.at_most("single_mode_closed_form", err, 1e-10);

  const auto b0 = random_transverse_field(g, 4, 1.6, 0.5);
  const auto b1 = random_transverse_field(g, 5, 1.6, 0.5);
  const auto states = kg_propagate_all(b0, b1, {}, 0.1, 21, c);
  const double e0 = kg_energy(states.front(), c);
  double drift = 0.0;
  for (const auto& st : states) drift = std::max(drift, std::abs(kg_energy(st, c) - e0) / e0);
  s.at_most("free_energy_conservation", drift, 1e-10);
}

inline void verify_schrodinger(CheckSink& s) {
  const Grid g = Grid::make(16, 16.0, 3);
  PhysicalParams p;
  p.masses = {1.0};
  p.charges = {0.0};
  const auto free = ManyBodyModel::make(p, g, CoulombSpec{CoulombMode::none});
  const std::array<GaussianPacket, 1> packet{GaussianPacket{{8.0, 8.0, 8.0}, {2.0 * pi / 16.0, 0.0, 0.0}, 1.5}};
  const auto psi0 = gaussian_packets(g, packet);
  const double T = 1.0;
  const int n_t = 10;
  const std::vector<VectorField> zero(n_t + 1, VectorField(g));
  const auto evolved = evolve_schrodinger(psi0, zero, T / n_t, free);
  const auto exact = apply_multiplier(psi0, [&](std::span<const double> k) { return std::polar(1.0, -0.5 * norm_squared(k) * T); });
  s.at_most("free_propagator_oracle", l2_norm(evolved.back() - exact), 1e-6);

  p.charges = {1.0};
  const auto coupled = ManyBodyModel::make(p, g, CoulombSpec{CoulombMode::none});
  const auto a = random_transverse_field(g, 6, 1.0, 0.3);
  std::vector<VectorField> A;
  for (int i = 0; i <= n_t; ++i) A.push_back(std::cos(0.1 * i) * a);
  const auto forward = evolve_schrodinger(psi0, A, T / n_t, coupled);
  s.at_most("unitarity", std::abs(l2_norm(forward.back()) - 1.0), 1e-10);

  const std::span<const VectorField> all(A);
  const auto first = evolve_schrodinger(psi0, all.first(n_t / 2 + 1), T / n_t, coupled);
  const auto second = evolve_schrodinger(first.back(), all.subspan(n_t / 2), T / n_t, coupled);
  s.at_most("composition", l2_norm(second.back() - forward.back()), 1e-9);
  const auto back = evolve_schrodinger_backward(forward.back(), A, T / n_t, coupled);
  s.at_most("reversal", l2_norm(back.front() - psi0), 1e-8);
}

inline void verify_current(CheckSink& s) {
  const Grid g = Grid::make(8, 8.0, 3);
  PhysicalParams p;
  p.masses = {2.0};
  p.charges = {1.5};
  ScalarField psi(g);
  for_each_node(g, [&](std::size_t n, std::span<const double> x) {
    psi.values[n] = std::polar(1.0, 2.0 * pi * (x[0] - 2.0 * x[2]) / g.length);
  });
  psi = normalize(psi);
  const auto j = current_density(psi, VectorField(g), 0, p);
  const double density = 1.0 / g.volume();
  const double k0 = 2.0 * pi / g.length;
  double err = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    err = std::max(err, std::abs(j.comp[0][n] - 1.5 * k0 / 2.0 * density));
    err = std::max(err, std::abs(j.comp[1][n]));
    err = std::max(err, std::abs(j.comp[2][n] + 1.5 * 2.0 * k0 / 2.0 * density));
  }
  s.at_most("plane_wave_current", err, 1e-12);
  s.at_most("projected_current_divergence", divergence_residual(projected_total_current(psi, seeded_vector(g, 7), p)), 1e-9);
}

inline void verify_coupler(CheckSink& s, Fault fault) {
  const Grid g = Grid::make(8, 8.0, 3);
  PhysicalParams p;
  p.masses = {1.0};
  p.charges = {0.5};
  const auto model = ManyBodyModel::make(p, g, CoulombSpec{});
  const std::array<GaussianPacket, 1> packet{GaussianPacket{{4.0, 4.0, 4.0}, {2.0 * pi / 8.0, 0.0, 0.0}, 1.0}};
  InitialData init{gaussian_packets(g, packet), random_transverse_field(g, 3, 1.6, 0.3), random_transverse_field(g, 4, 1.6, 0.3)};
  if (fault == Fault::divergence) {
    ScalarField phi(g);
    for_each_node(g, [&](std::size_t n, std::span<const double> x) { phi.values[n] = 0.2 * std::cos(2.0 * pi * x[1] / g.length); });
    init.A0 += gradient(phi);
  }
  s.at_most("initial_divergence", std::max(divergence_residual(init.A0), divergence_residual(init.A1)), 1e-9);

  PicardConfig config;
  config.T = 1.0;
  config.n_t = 10;
  PicardResult res;
  try {
    res = picard_solve(init, model, config);
  } catch (const std::exception& e) {
    for (const char* name : {"picard_converged", "contraction_streak", "l2_conservation", "gauge_divergence"})
      s.fail(name, 0.0, std::string("solver rejected the run: ") + e.what());
    return;
  }
  if (!res.converged()) {
    s.fail("picard_converged", config.tol, "status " + to_string(res.status));
    return;
  }
  s.at_most("picard_converged", res.log.back().distance.d, config.tol);
  int run = 0, best = 0;
  for (const auto& r : res.log) {
    run = r.ratio < 0.9 ? run + 1 : 0;
    best = std::max(best, run);
  }
  s.at_least("contraction_streak", best, 3);
  double drift = 0.0, div = 0.0;
  for (std::size_t i = 0; i < res.solution.nodes(); ++i) {
    drift = std::max(drift, std::abs(l2_norm(res.solution.psi[i]) - 1.0));
    div = std::max({div, divergence_residual(res.solution.A[i]), divergence_residual(res.solution.Adot[i])});
  }
  s.at_most("l2_conservation", drift, 1e-8);
  s.at_most("gauge_divergence", div, 1e-9);
  const auto residuals = residual_check(res.solution, model);
  s.at_most("schrodinger_residual", residuals.max_schrodinger(), schrodinger_residual_threshold);
  s.at_most("kg_residual", residuals.max_kg(), kg_residual_threshold);
}

}  // namespace detail

/// Runs the requested suites. Unknown suite names raise std::invalid_argument
/// before anything runs.
inline VerifyReport verify_suite(const VerifyOptions& options = {}) {
  const auto& known = verify_suite_names();
  const auto requested = options.subset.value_or(known);
  for (const auto& name : requested)
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw std::invalid_argument("verify: unknown suite '" + name + "'");
  VerifyReport report;
  for (const auto& name : known) {
    if (std::find(requested.begin(), requested.end(), name) == requested.end()) continue;
    detail::CheckSink sink(name, report);
    if (name == "spectral") detail::verify_spectral(sink);
    if (name == "helmholtz") detail::verify_helmholtz(sink);
    if (name == "klein_gordon") detail::verify_klein_gordon(sink);
    if (name == "schrodinger") detail::verify_schrodinger(sink);
    if (name == "current") detail::verify_current(sink);
    if (name == "coupler") detail::verify_coupler(sink, options.fault);
  }
  return report;
}

inline void print_report(std::ostream& out, const VerifyReport& report) {
  for (const auto& c : report.checks) {
    char line[256];
    std::snprintf(line, sizeof line, "%s %-13s %-30s value=%.3e threshold=%.1e", c.passed ? "PASS" : "FAIL",
                  c.suite.c_str(), c.name.c_str(), c.value, c.threshold);
    out << line;
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << "\n";
  }
  out << report.checks.size() << " checks, " << report.failures() << " failed\n";
}

}  // namespace msp
