#pragma once

// Probability current J_j[psi, A] = -(Q_j/m_j) Re int conj(psi) (i hbar grad_j + Q_j A(x_j)/c) psi dx_j'

#include <msp/fields.hpp>
#include <msp/helmholtz.hpp>
#include <msp/spectral.hpp>

#include <span>
#include <stdexcept>
#include <vector>

namespace msp {

/// Current of particle j (0-based) on the 3D grid.
inline VectorField current_density(const WaveFunction& psi, const VectorField& A, int j,
                                   const PhysicalParams& params) {
  const int n = particles_of(psi.grid);
  if (n != params.particle_count()) throw std::invalid_argument("current_density: particle count mismatch");
  if (j < 0 || j >= n) throw std::out_of_range("current_density: particle index out of range");
  const Grid g3 = psi.grid.with_dim(3);
  require_same_grid(A.grid, g3, "current_density");
  require_finite(psi, "current_density");

  VectorField J(g3);
  const double q = params.charges[static_cast<std::size_t>(j)];
  if (q == 0.0) return J;
  const double m = params.masses[static_cast<std::size_t>(j)];

  ScalarField density(psi.grid);
  for (std::size_t i = 0; i < psi.values.size(); ++i) density.values[i] = std::norm(psi.values[i]);
  const ScalarField rho = marginal_integrate(density, j);

  const cplx ih(0.0, params.hbar);
  for (int a = 0; a < 3; ++a) {
    auto d = psi.values;
    differentiate_axis(d, psi.grid, 3 * j + a);
    ScalarField g(psi.grid);
    for (std::size_t i = 0; i < d.size(); ++i) g.values[i] = std::conj(psi.values[i]) * ih * d[i];
    const ScalarField mg = marginal_integrate(g, j);
    for (std::size_t i = 0; i < g3.size(); ++i)
      J.comp[a][i] = -(q / m) * (mg.values[i].real() + (q / params.c) * A.comp[a][i] * rho.values[i].real());
  }
  return J;
}

/// sum_j P J_j[psi, A] (without the 4 pi / c prefactor).
inline VectorField projected_total_current(const WaveFunction& psi, const VectorField& A,
                                           const PhysicalParams& params) {
  VectorField total(psi.grid.with_dim(3));
  for (int j = 0; j < params.particle_count(); ++j) total += current_density(psi, A, j, params);
  return project(total);
}

}  // namespace msp
