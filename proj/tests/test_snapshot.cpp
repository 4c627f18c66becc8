#include "catch_amalgamated.hpp"
#include "test_support.hpp"

#include <msp/snapshot.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace msp;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "msp_test_snapshot";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("wave function snapshots round trip bit-exactly", "[snapshot]") {
  const Grid g = Grid::make(4, 3.5, 6);
  PhysicalParams p;
  p.hbar = 0.7;
  p.c = 13.0;
  p.masses = {1.0, 2.0};
  p.charges = {-1.0, 0.5};
  Snapshot s{0.125, p, msp::testing::random_scalar(g, 3)};
  const auto path = scratch("psi.msp");
  write_snapshot(path, s);
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));

  const Snapshot back = read_snapshot(path);
  CHECK(back.time == 0.125);
  CHECK(back.grid() == g);
  REQUIRE(back.params.has_value());
  CHECK(back.params->hbar == 0.7);
  CHECK(back.params->c == 13.0);
  CHECK(back.params->masses == p.masses);
  CHECK(back.params->charges == p.charges);
  const auto& a = std::get<ScalarField>(s.field).values;
  const auto& b = std::get<ScalarField>(back.field).values;
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(cplx)) == 0);
}

TEST_CASE("vector field snapshots round trip bit-exactly", "[snapshot]") {
  const Grid g = Grid::make(8, 16.0, 3);
  Snapshot s{2.0, std::nullopt, msp::testing::random_vector(g, 4)};
  const auto path = scratch("a.msp");
  write_snapshot(path, s);
  const Snapshot back = read_snapshot(path);
  CHECK_FALSE(back.params.has_value());
  const auto& a = std::get<VectorField>(s.field);
  const auto& b = std::get<VectorField>(back.field);
  for (int c = 0; c < 3; ++c) CHECK(std::memcmp(a.comp[c].data(), b.comp[c].data(), a.comp[c].size() * sizeof(double)) == 0);

  std::ifstream in(path, std::ios::binary);
  const auto header = read_snapshot_header(in);
  CHECK(header["kind"] == "vector_field");
  CHECK(header["dtype"] == "float64");
  CHECK(header["grid"]["points"] == 8);
}

TEST_CASE("corrupt snapshots are rejected", "[snapshot]") {
  const auto bad_magic = scratch("bad_magic.msp");
  {
    std::ofstream out(bad_magic, std::ios::binary);
    out << "NOTASNAPSHOT";
  }
  CHECK_THROWS_AS(read_snapshot(bad_magic), std::runtime_error);

  const Grid g = Grid::make(4, 1.0, 3);
  const auto good = scratch("truncated.msp");
  write_snapshot(good, Snapshot{0.0, std::nullopt, msp::testing::random_scalar(g, 1)});
  std::filesystem::resize_file(good, std::filesystem::file_size(good) - 16);
  CHECK_THROWS_AS(read_snapshot(good), std::runtime_error);

  CHECK_THROWS_AS(read_snapshot(scratch("missing.msp")), std::runtime_error);
}
