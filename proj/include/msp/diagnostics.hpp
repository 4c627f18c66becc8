#pragma once

// Invariants and PDE residuals evaluated on sampled trajectories.

#include <msp/fields.hpp>
#include <msp/helmholtz.hpp>
#include <msp/klein_gordon.hpp>
#include <msp/schrodinger.hpp>
#include <msp/spectral.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace msp {

/// (1/8pi) int |curl A|^2 + |c^-1 dA/dt|^2.
inline double field_energy(const FieldState& s, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("field_energy: c must be positive");
  const double curl_part = std::pow(l2_norm(curl(s.A)), 2);
  const double time_part = std::pow(l2_norm(s.Adot) / c, 2);
  return (curl_part + time_part) / (8.0 * pi);
}

/// Which Hamiltonian the wave function is meant to solve: with or without the
/// scalar field-energy term E_EM(t).
enum class GaugeDirection { include_field_energy, exclude_field_energy };

/// Trapezoidal int_{t0}^{t_i} E_EM ds at every node.
inline std::vector<double> field_energy_integral(const TrajectoryPair& traj, double c) {
  traj.validate();
  std::vector<double> out(traj.nodes(), 0.0);
  double previous = field_energy(traj.field(0), c);
  for (std::size_t i = 1; i < traj.nodes(); ++i) {
    const double e = field_energy(traj.field(i), c);
    out[i] = out[i - 1] + 0.5 * traj.dt * (previous + e);
    previous = e;
  }
  return out;
}

/// Multiplies psi(t) by exp(-+ (i/hbar) int_0^t E_EM ds); the field is untouched.
inline TrajectoryPair gauge_phase_transform(const TrajectoryPair& traj, const PhysicalParams& params,
                                            GaugeDirection direction) {
  const auto integral = field_energy_integral(traj, params.c);
  const double sign = direction == GaugeDirection::include_field_energy ? -1.0 : 1.0;
  TrajectoryPair out = traj;
  for (std::size_t i = 0; i < out.nodes(); ++i) out.psi[i] *= std::polar(1.0, sign * integral[i] / params.hbar);
  return out;
}

enum class ResidualForm { plain, with_field_energy };

/// Acceptance levels for residual_check on converged runs at dt <= 0.1.
inline constexpr double schrodinger_residual_threshold = 5e-2;
inline constexpr double kg_residual_threshold = 5e-3;

/// Per-node normalized residuals; endpoints hold no value.
struct ResidualReport {
  std::vector<std::optional<double>> schrodinger;
  std::vector<std::optional<double>> kg;

  double max_schrodinger() const { return max_of(schrodinger); }
  double max_kg() const { return max_of(kg); }

 private:
  static double max_of(const std::vector<std::optional<double>>& v) {
    double m = 0.0;
    for (const auto& x : v)
      if (x) m = std::max(m, *x);
    return m;
  }
};

/// Schrodinger: || i hbar D_t psi - H[A] psi (- E_EM psi) ||_{L^2} / ||psi||;
/// field: || c^-2 D_t^2 A - Laplacian A + A - F ||_{H^{-1/2}} divided by the larger of
/// ||A||_{H^{3/2}} and (4 pi / c) || sum_j P J_j ||_{H^{-1/2}}. Centered differences at interior nodes.
inline ResidualReport residual_check(const TrajectoryPair& traj, const ManyBodyModel& model,
                                     ResidualForm form = ResidualForm::plain) {
  traj.validate();
  if (traj.nodes() < 3) throw std::invalid_argument("residual_check: need at least three time nodes");
  require_same_grid(traj.psi[0].grid, model.grid, "residual_check");
  require_same_grid(traj.A[0].grid, model.field_grid(), "residual_check");
  const auto& p = model.params;
  const double dt = traj.dt;
  const std::size_t n = traj.nodes();
  ResidualReport report;
  report.schrodinger.assign(n, std::nullopt);
  report.kg.assign(n, std::nullopt);

  for (std::size_t i = 1; i + 1 < n; ++i) {
    ScalarField r = hamiltonian_apply(traj.psi[i], traj.A[i], model);
    if (form == ResidualForm::with_field_energy) {
      ScalarField e = traj.psi[i];
      e *= cplx(field_energy(traj.field(i), p.c), 0.0);
      r += e;
    }
    const cplx coef(0.0, p.hbar / (2.0 * dt));
    for (std::size_t k = 0; k < r.values.size(); ++k)
      r.values[k] = coef * (traj.psi[i + 1].values[k] - traj.psi[i - 1].values[k]) - r.values[k];
    const double scale = l2_norm(traj.psi[i]);
    const double res = l2_norm(r);
    report.schrodinger[i] = scale > 0.0 ? res / scale : res;

    const VectorField current = projected_total_current(traj.psi[i], traj.A[i], p);
    VectorField second = traj.A[i + 1] - 2.0 * traj.A[i] + traj.A[i - 1];
    second *= 1.0 / (p.c * p.c * dt * dt);
    const VectorField massive = apply_multiplier(traj.A[i], [](std::span<const double> k) { return 1.0 + norm_squared(k); });
    VectorField kg = second + massive;
    kg -= (4.0 * pi / p.c) * current;
    kg -= traj.A[i];
    const double kg_scale = std::max(sobolev_norm(traj.A[i], 1.5), 4.0 * pi / p.c * sobolev_norm(current, -0.5));
    const double kg_res = sobolev_norm(kg, -0.5);
    report.kg[i] = kg_scale > 0.0 ? kg_res / kg_scale : kg_res;
  }
  return report;
}

/// Smallest rate C with ||psi(t)||_{H^2} <= ||psi(0)||_{H^2} exp(C int_0^t ||dA/dt||_{L^inf} ds).
inline double h2_growth_rate(std::span<const double> h2, std::span<const double> adot_sup, double dt) {
  if (h2.size() != adot_sup.size() || h2.empty()) throw std::invalid_argument("h2_growth_rate: sample counts");
  double integral = 0.0, rate = 0.0;
  for (std::size_t i = 1; i < h2.size(); ++i) {
    if (!std::isfinite(h2[i])) return infinity;
    integral += 0.5 * dt * (adot_sup[i - 1] + adot_sup[i]);
    const double growth = std::log(h2[i] / h2[0]);
    if (growth > 0.0) rate = integral > 0.0 ? std::max(rate, growth / integral) : infinity;
  }
  return rate;
}

struct DiagnosticsRecord {
  double time = 0.0;
  double l2_norm = 0.0;
  double l2_drift = 0.0;
  double h2_norm = 0.0;
  double field_energy = 0.0;
  double div_residual_A = 0.0;
  double div_residual_Adot = 0.0;
  std::optional<double> symmetry_residual;
  std::optional<double> schrodinger_residual;
  std::optional<double> kg_residual;
};

/// One record per node. `exchange_sign` enables the symmetry column (N = 2 only).
inline std::vector<DiagnosticsRecord> diagnose(const TrajectoryPair& traj, const ManyBodyModel& model,
                                               std::optional<int> exchange_sign = std::nullopt) {
  traj.validate();
  std::optional<ResidualReport> residuals;
  if (traj.nodes() >= 3) residuals = residual_check(traj, model);
  const double initial = l2_norm(traj.psi[0]);
  std::vector<DiagnosticsRecord> out;
  out.reserve(traj.nodes());
  for (std::size_t i = 0; i < traj.nodes(); ++i) {
    DiagnosticsRecord r;
    r.time = traj.time(i);
    r.l2_norm = l2_norm(traj.psi[i]);
    r.l2_drift = std::abs(r.l2_norm - initial);
    r.h2_norm = sobolev_norm(traj.psi[i], 2.0);
    r.field_energy = field_energy(traj.field(i), model.params.c);
    r.div_residual_A = divergence_residual(traj.A[i]);
    r.div_residual_Adot = divergence_residual(traj.Adot[i]);
    if (exchange_sign) r.symmetry_residual = symmetry_residual(traj.psi[i], *exchange_sign);
    if (residuals) {
      r.schrodinger_residual = residuals->schrodinger[i];
      r.kg_residual = residuals->kg[i];
    }
    out.push_back(r);
  }
  return out;
}

inline constexpr const char* diagnostics_schema = "msp-diagnostics v1";
inline constexpr const char* diagnostics_columns =
    "time,l2_norm,l2_drift,h2_norm,field_energy,div_residual_A,div_residual_Adot,symmetry_residual,"
    "schrodinger_residual,kg_residual";

/// Shortest round-trip decimal form of a double.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

inline void write_diagnostics_csv(std::ostream& out, const std::vector<DiagnosticsRecord>& records) {
  out << "# " << diagnostics_schema << "\n" << diagnostics_columns << "\n";
  for (const auto& r : records) {
    out << format_number(r.time) << ',' << format_number(r.l2_norm) << ',' << format_number(r.l2_drift) << ','
        << format_number(r.h2_norm) << ',' << format_number(r.field_energy) << ','
        << format_number(r.div_residual_A) << ',' << format_number(r.div_residual_Adot) << ','
        << format_optional(r.symmetry_residual) << ',' << format_optional(r.schrodinger_residual) << ','
        << format_optional(r.kg_residual) << "\n";
  }
}

/// Writes `text` to a sibling temporary file, then renames it over `path`.
inline void write_file_atomically(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace msp
