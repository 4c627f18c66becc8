#pragma once

// Spectral vector calculus on the 3-torus and the Helmholtz (transverse)
// projection P = 1 - grad div Laplacian^{-1}.

#include <msp/spectral.hpp>

#include <array>
#include <span>
#include <vector>

namespace msp {

namespace detail {

inline std::array<std::vector<cplx>, 3> forward_components(const VectorField& v) {
  std::array<std::vector<cplx>, 3> hat;
  for (int c = 0; c < 3; ++c) {
    hat[c] = to_complex(v.comp[c]);
    fft_forward(hat[c], v.grid);
  }
  return hat;
}

inline VectorField inverse_components(std::array<std::vector<cplx>, 3>& hat, const Grid& g) {
  VectorField out(g);
  for (int c = 0; c < 3; ++c) {
    fft_inverse(hat[c], g);
    for (std::size_t n = 0; n < hat[c].size(); ++n) out.comp[c][n] = hat[c][n].real();
  }
  return out;
}

}  // namespace detail

/// P^(k) = I - k k^T / |k|^2, with P^(0) = I so the mean of V survives.
inline VectorField project(const VectorField& v) {
  require_finite(v, "project");
  auto hat = detail::forward_components(v);
  for_each_derivative_wavevector(v.grid, [&](std::size_t n, std::span<const double> k) {
    const double k2 = norm_squared(k);
    if (k2 == 0.0) return;
    const cplx kv = k[0] * hat[0][n] + k[1] * hat[1][n] + k[2] * hat[2][n];
    for (int c = 0; c < 3; ++c) hat[c][n] -= k[c] * kv / k2;
  });
  return detail::inverse_components(hat, v.grid);
}

/// Spectral divergence (complex; imaginary part only from the Nyquist modes).
inline ScalarField divergence(const VectorField& v) {
  auto hat = detail::forward_components(v);
  ScalarField out(v.grid);
  for_each_derivative_wavevector(v.grid, [&](std::size_t n, std::span<const double> k) {
    out.values[n] = cplx(0.0, 1.0) * (k[0] * hat[0][n] + k[1] * hat[1][n] + k[2] * hat[2][n]);
  });
  fft_inverse(out.values, v.grid);
  return out;
}

inline VectorField gradient(const ScalarField& phi) {
  if (phi.grid.dim != 3) throw std::invalid_argument("gradient: grid must be three-dimensional");
  auto hat = phi.values;
  fft_forward(hat, phi.grid);
  std::array<std::vector<cplx>, 3> g;
  for (auto& c : g) c.assign(hat.size(), cplx{});
  for_each_derivative_wavevector(phi.grid, [&](std::size_t n, std::span<const double> k) {
    for (int c = 0; c < 3; ++c) g[c][n] = cplx(0.0, k[c]) * hat[n];
  });
  return detail::inverse_components(g, phi.grid);
}

inline VectorField curl(const VectorField& v) {
  auto hat = detail::forward_components(v);
  std::array<std::vector<cplx>, 3> out;
  for (auto& c : out) c.assign(hat[0].size(), cplx{});
  const cplx i(0.0, 1.0);
  for_each_derivative_wavevector(v.grid, [&](std::size_t n, std::span<const double> k) {
    out[0][n] = i * (k[1] * hat[2][n] - k[2] * hat[1][n]);
    out[1][n] = i * (k[2] * hat[0][n] - k[0] * hat[2][n]);
    out[2][n] = i * (k[0] * hat[1][n] - k[1] * hat[0][n]);
  });
  return detail::inverse_components(out, v.grid);
}

/// ||div V||_{H^{-1}}, evaluated directly from the Fourier coefficients.
inline double divergence_residual(const VectorField& v) {
  require_finite(v, "divergence_residual");
  auto hat = detail::forward_components(v);
  double acc = 0.0;
  for_each_derivative_wavevector(v.grid, [&](std::size_t n, std::span<const double> k) {
    const cplx d = k[0] * hat[0][n] + k[1] * hat[1][n] + k[2] * hat[2][n];
    acc += std::norm(d) / (1.0 + norm_squared(k));
  });
  const double m = static_cast<double>(v.grid.size());
  return std::sqrt(v.grid.volume() / (m * m) * acc);
}

}  // namespace msp
