#include "catch_amalgamated.hpp"
#include "test_support.hpp"

#include <msp/current.hpp>
#include <msp/initial_data.hpp>

using namespace msp;
using msp::testing::max_abs;
using msp::testing::max_abs_diff;

namespace {

VectorField constant_vector(const Grid& g, std::array<double, 3> v) {
  VectorField f(g);
  for (int c = 0; c < 3; ++c)
    for (auto& x : f.comp[c]) x = v[c];
  return f;
}

}  // namespace

TEST_CASE("plane wave current", "[current]") {
  const Grid g = Grid::make(8, 8.0, 3);
  PhysicalParams p;
  p.hbar = 0.9;
  p.masses = {2.0};
  p.charges = {1.5};
  const std::array<int, 3> modes{1, 0, -2};
  const auto psi = normalize(msp::testing::plane_wave(g, modes));
  const double density = 1.0 / g.volume();
  std::array<double, 3> expected{};
  for (int a = 0; a < 3; ++a) expected[a] = p.charges[0] * p.hbar * 2.0 * pi * modes[a] / g.length / p.masses[0] * density;
  CHECK(max_abs_diff(current_density(psi, VectorField(g), 0, p), constant_vector(g, expected)) <= 1e-12);
}

TEST_CASE("real or vanishing states carry no convective current", "[current]") {
  const Grid g = Grid::make(8, 8.0, 3);
  PhysicalParams p;
  p.charges = {1.0};
  const auto real_psi = msp::testing::random_scalar(g, 4, true);
  CHECK(max_abs(current_density(real_psi, VectorField(g), 0, p)) <= 1e-12);
  CHECK(max_abs(current_density(ScalarField(g), msp::testing::random_vector(g, 1), 0, p)) == 0.0);
  CHECK(max_abs(projected_total_current(real_psi, VectorField(g), p)) <= 1e-12);
}

TEST_CASE("density term is linear in the field", "[current]") {
  const Grid g = Grid::make(8, 8.0, 3);
  PhysicalParams p;
  p.c = 3.0;
  p.masses = {0.7};
  p.charges = {-1.2};
  const auto psi = gaussian_packets(g, std::array<GaussianPacket, 1>{GaussianPacket{{3, 4, 5}, {0.785, 0, 0.785}, 1.0}});
  const auto a = msp::testing::smooth_transverse_field(g, 2, 2.0, 0.5);
  const auto b = msp::testing::smooth_transverse_field(g, 3, 2.0, 0.5);
  const auto j0 = current_density(psi, VectorField(g), 0, p);
  const auto ja = current_density(psi, a, 0, p);
  const auto jb = current_density(psi, b, 0, p);
  const auto jab = current_density(psi, a + b, 0, p);
  CHECK(max_abs_diff(jab - j0, (ja - j0) + (jb - j0)) <= 1e-12);

  // Shifting A by a constant changes J by -(Q^2 / m c) * shift * density.
  const std::array<double, 3> shift{0.3, -0.2, 0.1};
  const auto js = current_density(psi, a + constant_vector(g, shift), 0, p);
  ScalarField rho(g);
  for (std::size_t i = 0; i < g.size(); ++i) rho.values[i] = std::norm(psi.values[i]);
  const double w = -p.charges[0] * p.charges[0] / (p.masses[0] * p.c);
  VectorField expected = ja;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < g.size(); ++i) expected.comp[c][i] += w * shift[c] * rho.values[i].real();
  CHECK(max_abs_diff(js, expected) <= 1e-12);

  const auto pa = projected_total_current(psi, a, p);
  const auto pb = projected_total_current(psi, b, p);
  const auto pab = projected_total_current(psi, a + b, p);
  const auto p0 = projected_total_current(psi, VectorField(g), p);
  CHECK(max_abs_diff(pab - p0, (pa - p0) + (pb - p0)) <= 1e-12);
  CHECK(divergence_residual(pa) <= 1e-9);
}

TEST_CASE("identical particles contribute equal currents", "[current]") {
  const Grid g6 = Grid::make(4, 4.0, 6);
  const Grid g3 = g6.with_dim(3);
  PhysicalParams p;
  p.masses = {1.0, 1.0};
  p.charges = {1.0, 1.0};
  const auto a = msp::testing::smooth_transverse_field(g3, 5, 2.0, 0.4);
  for (int sign : {+1, -1}) {
    const auto psi = exchange_symmetrize(msp::testing::random_scalar(g6, 30 + sign), sign);
    const auto j1 = current_density(psi, a, 0, p);
    const auto j2 = current_density(psi, a, 1, p);
    CHECK(max_abs_diff(j1, j2) <= 1e-12 * std::max(1.0, max_abs(j1)));
    CHECK(max_abs(j1) > 0.0);
  }
}

TEST_CASE("current errors", "[current]") {
  const Grid g6 = Grid::make(4, 4.0, 6);
  PhysicalParams p;
  p.masses = {1.0, 1.0};
  p.charges = {1.0, 1.0};
  const auto psi = msp::testing::random_scalar(g6, 1);
  CHECK_THROWS_AS(current_density(psi, VectorField(g6.with_dim(3)), 2, p), std::out_of_range);
  CHECK_THROWS_AS(current_density(psi, VectorField(Grid::make(8, 4.0, 3)), 0, p), std::invalid_argument);
  PhysicalParams single;
  single.charges = {1.0};
  CHECK_THROWS_AS(current_density(psi, VectorField(g6.with_dim(3)), 0, single), std::invalid_argument);
}
