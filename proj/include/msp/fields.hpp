#pragma once

// Physical state types and elementary manipulations of many-body states.

#include <msp/spectral.hpp>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace msp {

/// hbar, c and per-particle masses/charges in Gaussian units.
struct PhysicalParams {
  double hbar = 1.0;
  double c = 1.0;
  std::vector<double> masses{1.0};
  std::vector<double> charges{0.0};
  int dimension_cap = 6;

  int particle_count() const { return static_cast<int>(masses.size()); }

  void validate() const {
    if (!(hbar > 0.0)) throw std::invalid_argument("params: hbar must be positive");
    if (!(c > 0.0)) throw std::invalid_argument("params: c must be positive");
    if (masses.empty()) throw std::invalid_argument("params: need at least one particle");
    if (masses.size() != charges.size())
      throw std::invalid_argument("params: masses and charges differ in length");
    for (double m : masses)
      if (!(m > 0.0)) throw std::invalid_argument("params: masses must be positive");
    for (double q : charges)
      if (!std::isfinite(q)) throw std::invalid_argument("params: charges must be finite");
    if (3 * particle_count() > dimension_cap)
      throw std::invalid_argument("params: 3N = " + std::to_string(3 * particle_count()) +
                                  " exceeds the dimension cap " + std::to_string(dimension_cap));
  }
};

/// Vector potential and its time derivative at one instant.
struct FieldState {
  VectorField A;
  VectorField Adot;
};

/// Uniformly sampled (psi, A, dA/dt) on t0 + i*dt, i = 0..n_t.
struct TrajectoryPair {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<ScalarField> psi;
  std::vector<VectorField> A;
  std::vector<VectorField> Adot;

  std::size_t nodes() const { return psi.size(); }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  double duration() const { return nodes() == 0 ? 0.0 : dt * static_cast<double>(nodes() - 1); }
  FieldState field(std::size_t i) const { return {A[i], Adot[i]}; }

  void validate() const {
    if (psi.size() < 2) throw std::invalid_argument("trajectory: need at least two time nodes");
    if (A.size() != psi.size() || Adot.size() != psi.size())
      throw std::invalid_argument("trajectory: component sample counts differ");
    if (!(dt > 0.0)) throw std::invalid_argument("trajectory: time step must be positive");
    for (std::size_t i = 0; i < psi.size(); ++i) {
      require_same_grid(psi[i].grid, psi[0].grid, "trajectory");
      require_same_grid(A[i].grid, A[0].grid, "trajectory");
      require_same_grid(Adot[i].grid, A[0].grid, "trajectory");
    }
  }
};

inline void require_matching_time_grids(const TrajectoryPair& a, const TrajectoryPair& b) {
  if (a.nodes() != b.nodes() || std::abs(a.dt - b.dt) > 1e-14 * std::abs(a.dt) ||
      std::abs(a.t0 - b.t0) > 1e-14 * (1.0 + std::abs(a.t0)))
    throw std::invalid_argument("trajectories: time grids differ");
}

/// Grid on R^{3N} for N particles.
inline Grid configuration_grid(int points, double length, int particles) {
  return Grid::make(points, length, 3 * particles);
}

inline int particles_of(const Grid& g) {
  if (g.dim % 3 != 0) throw std::invalid_argument("wave function grid dimension must be a multiple of 3");
  return g.dim / 3;
}

inline WaveFunction normalize(const WaveFunction& psi) {
  const double n = l2_norm(psi);
  if (!(n > 0.0)) throw std::invalid_argument("normalize: zero state");
  WaveFunction out = psi;
  out *= cplx(1.0 / n, 0.0);
  return out;
}

/// psi composed with the exchange of particle blocks 1 and 2.
inline WaveFunction exchanged(const WaveFunction& psi) {
  if (particles_of(psi.grid) != 2) throw std::invalid_argument("exchange: requires N = 2");
  const std::size_t block = psi.grid.with_dim(3).size();
  WaveFunction out(psi.grid);
  for (std::size_t i1 = 0; i1 < block; ++i1)
    for (std::size_t i2 = 0; i2 < block; ++i2) out.values[i1 * block + i2] = psi.values[i2 * block + i1];
  return out;
}

/// Unnormalized (psi + sign * psi o e12) / 2.
inline WaveFunction exchange_part(const WaveFunction& psi, int sign) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("exchange: sign must be +1 or -1");
  WaveFunction out = exchanged(psi);
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = 0.5 * (psi.values[i] + static_cast<double>(sign) * out.values[i]);
  return out;
}

/// Unit-norm (anti)symmetrization; sign +1 bosonic, -1 fermionic.
inline WaveFunction exchange_symmetrize(const WaveFunction& psi, int sign) {
  WaveFunction part = exchange_part(psi, sign);
  const double n = l2_norm(part);
  if (!(n > 1e-12 * l2_norm(psi)))
    throw std::invalid_argument("exchange_symmetrize: state has no component of the requested symmetry");
  part *= cplx(1.0 / n, 0.0);
  return part;
}

/// Stride of particle block j (0-based) in the flat 3N index.
inline std::size_t block_stride(const Grid& g, int j) {
  const int n = particles_of(g);
  const std::size_t block = g.with_dim(3).size();
  std::size_t stride = 1;
  for (int b = n - 1; b > j; --b) stride *= block;
  return stride;
}

/// Integrates out every particle block except j (0-based); Riemann sum times h^{3(N-1)}.
inline ScalarField marginal_integrate(const ScalarField& f, int j) {
  const int n = particles_of(f.grid);
  if (j < 0 || j >= n) throw std::out_of_range("marginal_integrate: particle index out of range");
  const Grid g3 = f.grid.with_dim(3);
  if (n == 1) return ScalarField(g3, f.values);
  const std::size_t block = g3.size();
  const std::size_t stride = block_stride(f.grid, j);
  ScalarField out(g3);
  for (std::size_t idx = 0; idx < f.values.size(); ++idx) out.values[(idx / stride) % block] += f.values[idx];
  const double weight = std::pow(g3.cell_volume(), n - 1);
  for (auto& v : out.values) v *= weight;
  return out;
}

/// ||psi - sign * psi o e12|| / ||psi||.
inline double symmetry_residual(const WaveFunction& psi, int sign) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("symmetry_residual: sign must be +1 or -1");
  const double n = l2_norm(psi);
  if (!(n > 0.0)) throw std::invalid_argument("symmetry_residual: zero state");
  WaveFunction e = exchanged(psi);
  double acc = 0.0;
  for (std::size_t i = 0; i < e.values.size(); ++i)
    acc += std::norm(psi.values[i] - static_cast<double>(sign) * e.values[i]);
  return std::sqrt(acc * psi.grid.cell_volume()) / n;
}

}  // namespace msp
