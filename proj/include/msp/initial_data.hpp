#pragma once

// Named initial-data generators: Gaussian packets for the many-body state and
// transverse plane-wave or seeded random modes for the vector potential.

#include <msp/fields.hpp>
#include <msp/helmholtz.hpp>
#include <msp/spectral.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace msp {

/// Periodized Gaussian packet; momentum / hbar should be a grid wavenumber so the
/// phase is periodic on the box.
struct GaussianPacket {
  std::array<double, 3> center{};
  std::array<double, 3> momentum{};
  double width = 1.0;
};

/// Normalized product state prod_j packet_j(x_j), summed over neighbouring images.
inline WaveFunction gaussian_packets(const Grid& g, std::span<const GaussianPacket> packets, double hbar = 1.0) {
  if (static_cast<int>(packets.size()) != particles_of(g))
    throw std::invalid_argument("gaussian_packets: need one packet per particle");
  for (const auto& p : packets)
    if (!(p.width > 0.0)) throw std::invalid_argument("gaussian_packets: width must be positive");
  WaveFunction f(g);
  for_each_node(g, [&](std::size_t n, std::span<const double> x) {
    cplx v(1.0, 0.0);
    for (std::size_t j = 0; j < packets.size(); ++j) {
      const auto& p = packets[j];
      double phase = 0.0;
      for (int a = 0; a < 3; ++a) {
        double amp = 0.0;
        for (int image = -2; image <= 2; ++image) {
          const double d = x[3 * j + a] - p.center[a] + image * g.length;
          amp += std::exp(-d * d / (4.0 * p.width * p.width));
        }
        v *= amp;
        phase += p.momentum[a] * x[3 * j + a] / hbar;
      }
      v *= std::polar(1.0, phase);
    }
    f.values[n] = v;
  });
  return normalize(f);
}

/// a * e cos(k . x + phase) with integer mode numbers; projected so the result is transverse.
struct FieldMode {
  std::array<int, 3> modes{};
  std::array<double, 3> polarization{};
  double amplitude = 0.0;
  double phase = 0.0;
};

inline VectorField plane_wave_field(const Grid& g3, std::span<const FieldMode> modes) {
  VectorField f(g3);
  for (const auto& m : modes)
    for_each_node(g3, [&](std::size_t n, std::span<const double> x) {
      double arg = m.phase;
      for (int a = 0; a < 3; ++a) arg += 2.0 * pi * m.modes[a] * x[a] / g3.length;
      const double s = m.amplitude * std::cos(arg);
      for (int a = 0; a < 3; ++a) f.comp[a][n] += s * m.polarization[a];
    });
  return project(f);
}

/// Seeded random transverse field band-limited to |k| <= kmax, scaled to max-norm `amplitude`.
inline VectorField random_transverse_field(const Grid& g3, std::uint64_t seed, double kmax, double amplitude) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorField f(g3);
  for (auto& c : f.comp)
    for (auto& v : c) v = normal(rng);
  f = apply_multiplier(f, [kmax](std::span<const double> k) {
    const double k2 = norm_squared(k);
    return k2 <= kmax * kmax ? 1.0 : 0.0;
  });
  f = project(f);
  double peak = 0.0;
  for (const auto& c : f.comp)
    for (double v : c) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) f *= amplitude / peak;
  return f;
}

}  // namespace msp
