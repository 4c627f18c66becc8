#pragma once

// Binary state snapshots: 8-byte magic, little-endian uint64 header length,
// JSON header, then the raw samples in axis-major (row-major) order.
//
//   wave functions: complex128, (re, im) interleaved
//   vector fields:  float64, three consecutive component blocks (x, y, z)

#include <msp/fields.hpp>

#include <json.hpp>

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace msp {

inline constexpr std::array<char, 8> snapshot_magic{'M', 'S', 'P', 'S', 'N', 'A', 'P', '1'};

struct Snapshot {
  double time = 0.0;
  std::optional<PhysicalParams> params;
  std::variant<ScalarField, VectorField> field;

  const Grid& grid() const {
    return std::visit([](const auto& f) -> const Grid& { return f.grid; }, field);
  }
};

inline nlohmann::json to_json(const Grid& g) {
  return {{"points", g.points}, {"length", g.length}, {"dim", g.dim}};
}

inline nlohmann::json to_json(const PhysicalParams& p) {
  return {{"hbar", p.hbar}, {"c", p.c}, {"masses", p.masses}, {"charges", p.charges}};
}

inline nlohmann::json snapshot_header(const Snapshot& s) {
  nlohmann::json h;
  h["format"] = "msp-snapshot";
  h["version"] = 1;
  h["grid"] = to_json(s.grid());
  h["time"] = s.time;
  if (s.params) h["params"] = to_json(*s.params);
  if (std::holds_alternative<ScalarField>(s.field)) {
    h["kind"] = "wavefunction";
    h["dtype"] = "complex128";
    h["components"] = 1;
  } else {
    h["kind"] = "vector_field";
    h["dtype"] = "float64";
    h["components"] = 3;
  }
  return h;
}

/// Writes to a sibling temporary file and renames into place.
inline void write_snapshot(const std::filesystem::path& path, const Snapshot& s) {
  const std::string header = snapshot_header(s).dump();
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("snapshot: cannot open " + tmp.string());
    out.write(snapshot_magic.data(), snapshot_magic.size());
    const std::uint64_t len = header.size();
    std::array<unsigned char, 8> len_bytes{};
    for (int b = 0; b < 8; ++b) len_bytes[b] = static_cast<unsigned char>((len >> (8 * b)) & 0xFF);
    out.write(reinterpret_cast<const char*>(len_bytes.data()), 8);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    if (const auto* psi = std::get_if<ScalarField>(&s.field)) {
      out.write(reinterpret_cast<const char*>(psi->values.data()),
                static_cast<std::streamsize>(psi->values.size() * sizeof(cplx)));
    } else {
      const auto& a = std::get<VectorField>(s.field);
      for (const auto& c : a.comp)
        out.write(reinterpret_cast<const char*>(c.data()),
                  static_cast<std::streamsize>(c.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("snapshot: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline nlohmann::json read_snapshot_header(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != snapshot_magic) throw std::runtime_error("snapshot: bad magic");
  std::array<unsigned char, 8> len_bytes{};
  in.read(reinterpret_cast<char*>(len_bytes.data()), 8);
  std::uint64_t len = 0;
  for (int b = 0; b < 8; ++b) len |= static_cast<std::uint64_t>(len_bytes[b]) << (8 * b);
  if (!in || len > (1u << 24)) throw std::runtime_error("snapshot: bad header length");
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("snapshot: truncated header");
  return nlohmann::json::parse(header);
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("snapshot: cannot open " + path.string());
  const auto h = read_snapshot_header(in);
  if (h.value("format", "") != "msp-snapshot") throw std::runtime_error("snapshot: unknown format");
  const Grid g = Grid::make(h.at("grid").at("points").get<int>(), h.at("grid").at("length").get<double>(),
                            h.at("grid").at("dim").get<int>());
  Snapshot s;
  s.time = h.at("time").get<double>();
  if (h.contains("params")) {
    const auto& p = h["params"];
    PhysicalParams params;
    params.hbar = p.at("hbar").get<double>();
    params.c = p.at("c").get<double>();
    params.masses = p.at("masses").get<std::vector<double>>();
    params.charges = p.at("charges").get<std::vector<double>>();
    s.params = params;
  }
  const std::string kind = h.at("kind").get<std::string>();
  if (kind == "wavefunction") {
    ScalarField psi(g);
    in.read(reinterpret_cast<char*>(psi.values.data()),
            static_cast<std::streamsize>(psi.values.size() * sizeof(cplx)));
    s.field = std::move(psi);
  } else if (kind == "vector_field") {
    VectorField a(g);
    for (auto& c : a.comp)
      in.read(reinterpret_cast<char*>(c.data()), static_cast<std::streamsize>(c.size() * sizeof(double)));
    s.field = std::move(a);
  } else {
    throw std::runtime_error("snapshot: unknown kind '" + kind + "'");
  }
  if (!in) throw std::runtime_error("snapshot: truncated payload in " + path.string());
  return s;
}

}  // namespace msp
