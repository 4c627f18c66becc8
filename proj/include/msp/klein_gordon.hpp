#pragma once

// Massive Klein-Gordon flow (Box + 1) B = F with Box = c^-2 d_t^2 - Laplacian,
// solved with the Fourier-multiplier propagators
//
//   cos(c <D> t)            and            sin(c <D> t) / (c <D>)
//
// and a trapezoidal Duhamel integral over the sampled source.

#include <msp/current.hpp>
#include <msp/fields.hpp>
#include <msp/helmholtz.hpp>
#include <msp/spectral.hpp>

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace msp {

/// Symbols of the two propagators at one time.
struct KGPropagatorSpec {
  double c = 1.0;
  double t = 0.0;

  double frequency(double k2) const { return c * std::sqrt(1.0 + k2); }
  double cos_symbol(double k2) const { return std::cos(frequency(k2) * t); }
  double sin_symbol(double k2) const {
    const double w = frequency(k2);
    return std::sin(w * t) / w;
  }
};

/// (B, dB/dt) at every node t_n = n*dt for n = 0..nodes-1. `source` is either
/// empty (free flow) or holds one sample per node.
inline std::vector<FieldState> kg_propagate_all(const VectorField& A0, const VectorField& A1,
                                                std::span<const VectorField> source, double dt,
                                                std::size_t nodes, double c) {
  require_same_grid(A0.grid, A1.grid, "kg_propagate");
  if (!(c > 0.0)) throw std::invalid_argument("kg_propagate: c must be positive");
  if (nodes == 0) throw std::invalid_argument("kg_propagate: need at least one node");
  if (nodes > 1 && !(dt > 0.0)) throw std::invalid_argument("kg_propagate: time step must be positive");
  if (!source.empty() && source.size() != nodes)
    throw std::invalid_argument("kg_propagate: source must have one sample per node");
  for (const auto& f : source) require_same_grid(f.grid, A0.grid, "kg_propagate");
  require_finite(A0, "kg_propagate");
  require_finite(A1, "kg_propagate");

  const Grid& g = A0.grid;
  const std::size_t size = g.size();
  const auto a0 = detail::forward_components(A0);
  const auto a1 = detail::forward_components(A1);

  std::vector<double> omega(size);
  for_each_wavevector(g, [&](std::size_t n, std::span<const double> k) {
    omega[n] = c * std::sqrt(1.0 + norm_squared(k));
  });

  // Rotating phasor sums G+-_n = sum_{i<=n} e^{+-i w (t_n - t_i)} F_i dt, from which
  // the trapezoid follows by halving the two endpoint terms.
  const bool forced = !source.empty();
  std::array<std::vector<cplx>, 3> f0, gp, gm;
  std::vector<cplx> step_p, step_m;
  if (forced) {
    f0 = detail::forward_components(source[0]);
    for (int comp = 0; comp < 3; ++comp) {
      gp[comp].assign(size, cplx{});
      gm[comp].assign(size, cplx{});
    }
    step_p.resize(size);
    step_m.resize(size);
    for (std::size_t n = 0; n < size; ++n) {
      step_p[n] = std::polar(1.0, omega[n] * dt);
      step_m[n] = std::conj(step_p[n]);
    }
  }

  const cplx I(0.0, 1.0);
  std::vector<FieldState> out;
  out.reserve(nodes);
  for (std::size_t node = 0; node < nodes; ++node) {
    const double t = dt * static_cast<double>(node);
    std::array<std::vector<cplx>, 3> fn;
    if (forced) fn = node == 0 ? f0 : detail::forward_components(source[node]);
    std::array<std::vector<cplx>, 3> b, bdot;
    for (int comp = 0; comp < 3; ++comp) {
      b[comp].resize(size);
      bdot[comp].resize(size);
      for (std::size_t n = 0; n < size; ++n) {
        const double w = omega[n];
        const double cs = std::cos(w * t);
        const double sn = std::sin(w * t);
        cplx bv = cs * a0[comp][n] + (sn / w) * a1[comp][n];
        cplx dv = -w * sn * a0[comp][n] + cs * a1[comp][n];
        if (forced) {
          gp[comp][n] = step_p[n] * gp[comp][n] + dt * fn[comp][n];
          gm[comp][n] = step_m[n] * gm[comp][n] + dt * fn[comp][n];
          if (node > 0) {
            const cplx ph = std::polar(1.0, w * t);
            const cplx tp = gp[comp][n] - 0.5 * dt * (ph * f0[comp][n] + fn[comp][n]);
            const cplx tm = gm[comp][n] - 0.5 * dt * (std::conj(ph) * f0[comp][n] + fn[comp][n]);
            const cplx sin_int = (tp - tm) / (2.0 * I);
            const cplx cos_int = 0.5 * (tp + tm);
            bv += c * c * sin_int / w;
            dv += c * c * cos_int;
          }
        }
        b[comp][n] = bv;
        bdot[comp][n] = dv;
      }
    }
    out.push_back({detail::inverse_components(b, g), detail::inverse_components(bdot, g)});
  }
  return out;
}

inline std::vector<FieldState> kg_propagate_all(const VectorField& A0, const VectorField& A1,
                                                const std::vector<VectorField>& source, double dt,
                                                double c) {
  if (source.empty()) throw std::invalid_argument("kg_propagate: empty source; pass a node count instead");
  return kg_propagate_all(A0, A1, std::span<const VectorField>(source), dt, source.size(), c);
}

/// (B, dB/dt) at node t_index of the source's time grid.
inline FieldState kg_propagate(const VectorField& A0, const VectorField& A1,
                               std::span<const VectorField> source, double dt, std::size_t t_index,
                               double c) {
  if (!source.empty() && t_index >= source.size())
    throw std::out_of_range("kg_propagate: time index outside the source grid");
  auto all = kg_propagate_all(A0, A1, source.empty() ? source : source.first(t_index + 1), dt,
                              t_index + 1, c);
  return all.back();
}

/// Free flow to an arbitrary time t (no source).
inline FieldState kg_free(const VectorField& A0, const VectorField& A1, double t, double c) {
  if (t == 0.0) return {A0, A1};
  return kg_propagate_all(A0, A1, {}, t, 2, c).back();
}

/// Exponents must satisfy 0 <= 2/q = 1 - 2/r < 1.
inline bool strichartz_admissible(double q, double r) {
  if (!(r >= 2.0) || std::isinf(r) || !(q >= 2.0)) return false;
  const double lhs = std::isinf(q) ? 0.0 : 2.0 / q;
  return std::abs(lhs - (1.0 - 2.0 / r)) < 1e-12 && lhs < 1.0;
}

/// max_{k=0,1} || d_t^k B ||_{L^q_T W^{sigma - k - 2/q, r}}; diagnostic only.
inline double strichartz_monitor(std::span<const VectorField> B, std::span<const VectorField> Bdot, double dt,
                                 double q, double r, double sigma) {
  if (!strichartz_admissible(q, r))
    throw std::invalid_argument("strichartz_monitor: exponent pair is not admissible");
  if (B.size() != Bdot.size()) throw std::invalid_argument("strichartz_monitor: sample counts differ");
  const double shift = std::isinf(q) ? 0.0 : 2.0 / q;
  const double n0 = spacetime_norm(B, dt, q, sigma - shift, r);
  const double n1 = spacetime_norm(Bdot, dt, q, sigma - 1.0 - shift, r);
  return std::max(n0, n1);
}

/// F(t_i) = (4 pi / c) sum_j P J_j[psi(t_i), A(t_i)] + A(t_i); the +A term offsets the added mass.
inline std::vector<VectorField> kg_source(const TrajectoryPair& traj, const PhysicalParams& params) {
  traj.validate();
  std::vector<VectorField> out;
  out.reserve(traj.nodes());
  const double prefactor = 4.0 * pi / params.c;
  for (std::size_t i = 0; i < traj.nodes(); ++i) {
    VectorField f = projected_total_current(traj.psi[i], traj.A[i], params);
    f *= prefactor;
    f += traj.A[i];
    out.push_back(std::move(f));
  }
  return out;
}

/// Discrete quadratic form (1/8pi) int (|curl B|^2 + |c^-1 dB/dt|^2 + |B|^2),
/// conserved by the free flow for transverse data.
inline double kg_energy(const FieldState& s, double c) {
  const double curl_part = std::pow(l2_norm(curl(s.A)), 2);
  const double time_part = std::pow(l2_norm(s.Adot) / c, 2);
  const double mass_part = std::pow(l2_norm(s.A), 2);
  return (curl_part + time_part + mass_part) / (8.0 * pi);
}

}  // namespace msp
