#include "catch_amalgamated.hpp"
#include "test_support.hpp"

#include <msp/helmholtz.hpp>

using namespace msp;
using msp::testing::max_abs;
using msp::testing::max_abs_diff;
using msp::testing::random_scalar;
using msp::testing::random_vector;

namespace {

double vector_inner(const VectorField& a, const VectorField& b) {
  double acc = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.comp[c].size(); ++i) acc += a.comp[c][i] * b.comp[c][i];
  return acc * a.grid.cell_volume();
}

ScalarField zero_mean_real(const Grid& g, std::uint64_t seed) {
  auto phi = random_scalar(g, seed, true);
  cplx mean{};
  for (const auto& v : phi.values) mean += v;
  mean /= static_cast<double>(phi.values.size());
  for (auto& v : phi.values) v -= mean;
  return phi;
}

}  // namespace

TEST_CASE("gradient fields are annihilated", "[helmholtz]") {
  const Grid g = Grid::make(16, 16.0, 3);
  ScalarField phi(g);
  for_each_node(g, [&](std::size_t n, std::span<const double> x) { phi.values[n] = std::sin(2.0 * pi * x[0] / g.length); });
  const auto v = gradient(phi);
  CHECK(max_abs(v) > 0.1);
  CHECK(max_abs(project(v)) <= 1e-10);

  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto w = gradient(zero_mean_real(Grid::make(8, 5.0, 3), seed));
    CHECK(max_abs(project(w)) <= 1e-10 * max_abs(w));
  }
}

TEST_CASE("transverse fields are unchanged", "[helmholtz]") {
  const Grid g = Grid::make(16, 8.0, 3);
  const auto v = curl(msp::testing::smooth_random_vector(g, 2, 3.0));
  CHECK(max_abs_diff(project(v), v) <= 1e-10 * std::max(1.0, max_abs(v)));

  VectorField constant(g);
  for (auto& c : constant.comp[1]) c = 2.5;
  CHECK(max_abs_diff(project(constant), constant) <= 1e-12);
}

TEST_CASE("projection is idempotent, symmetric and contractive", "[helmholtz][property]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Grid g = Grid::make(8, 4.0 + seed, 3);
    const auto v = random_vector(g, seed);
    const auto w = random_vector(g, seed + 100);
    const auto pv = project(v);
    CHECK(max_abs_diff(project(pv), pv) <= 1e-10);
    CHECK(divergence_residual(pv) <= 1e-10);
    const double lhs = vector_inner(pv, w);
    const double rhs = vector_inner(v, project(w));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    CHECK(l2_norm(pv) <= l2_norm(v) * (1.0 + 1e-12));
  }
}

TEST_CASE("divergence residual", "[helmholtz]") {
  const Grid g = Grid::make(8, 6.0, 3);
  VectorField constant(g);
  for (int c = 0; c < 3; ++c)
    for (auto& v : constant.comp[c]) v = 1.0 + c;
  CHECK(divergence_residual(constant) == 0.0);

  const auto phi = apply_multiplier(zero_mean_real(g, 9), [&](std::span<const double> k) {
    return norm_squared(k) < std::pow(pi * g.points / g.length, 2) ? 1.0 : 0.0;
  });
  const auto laplacian = apply_multiplier(phi, [](std::span<const double> k) { return -norm_squared(k); });
  const double expected = sobolev_norm(laplacian, -1.0);
  REQUIRE(expected > 0.0);
  CHECK(divergence_residual(gradient(phi)) == Catch::Approx(expected).epsilon(1e-10));

  CHECK(divergence_residual(project(random_vector(g, 1))) <= 1e-10);
}

TEST_CASE("vector calculus identities", "[helmholtz]") {
  const Grid g = Grid::make(8, 6.0, 3);
  const auto v = msp::testing::smooth_random_vector(g, 4, 2.5);
  const auto div_curl = divergence(curl(v));
  double worst = 0.0;
  for (const auto& x : div_curl.values) worst = std::max(worst, std::abs(x));
  CHECK(worst <= 1e-10);
  CHECK(max_abs(curl(gradient(zero_mean_real(g, 3)))) <= 1e-10);
  CHECK_THROWS_AS(gradient(random_scalar(Grid::make(4, 1.0, 2), 1)), std::invalid_argument);
}
