#pragma once

// Run configuration: a JSON document describing one scenario. Parsing collects
// every problem it finds and reports them together in a ConfigError.

#include <msp/coupler.hpp>
#include <msp/initial_data.hpp>
#include <msp/schrodinger.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace msp {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid configuration (" + std::to_string(p.size()) + " problem" + (p.size() == 1 ? "" : "s") + ")";
    for (const auto& line : p) s += "\n  - " + line;
    return s;
  }
  std::vector<std::string> problems_;
};

struct WaveFunctionSpec {
  std::string kind = "gaussian_packets";
  std::vector<GaussianPacket> packets;
  std::optional<int> exchange_sign;
  std::filesystem::path path;
};

struct VectorFieldSpec {
  std::string kind = "zero";
  std::vector<FieldMode> modes;
  std::uint64_t stream = 0;
  double kmax = 1.6;
  double amplitude = 0.0;
  std::filesystem::path path;
};

struct OutputSpec {
  std::filesystem::path directory = "out";
  bool snapshots = false;
  bool convergence = true;
};

struct RunConfig {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  PhysicalParams params;
  int points = 16;
  double length = 16.0;
  CoulombSpec coulomb;
  WaveFunctionSpec psi;
  VectorFieldSpec A0;
  VectorFieldSpec A1;
  PicardConfig picard;
  std::optional<double> total_time;
  bool adaptive = true;
  OutputSpec output;
  double memory_limit_gb = 4.0;

  int particles() const { return params.particle_count(); }
  Grid grid() const { return configuration_grid(points, length, particles()); }
};

namespace detail {

/// Typed field access that records problems instead of throwing.
class ConfigReader {
 public:
  std::vector<std::string> problems;

  void add(const std::string& where, const std::string& what) { problems.push_back(where + ": " + what); }

  const nlohmann::json* object(const nlohmann::json& parent, const std::string& key, const std::string& where,
                               bool required) {
    if (!parent.contains(key)) {
      if (required) add(where, "missing section '" + key + "'");
      return nullptr;
    }
    const auto& v = parent[key];
    if (!v.is_object()) {
      add(where + "." + key, "must be an object");
      return nullptr;
    }
    return &v;
  }

  void allow_keys(const nlohmann::json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!allowed.count(it.key())) add(where, "unknown key '" + it.key() + "'");
  }

  template <class T>
  void read(const nlohmann::json& obj, const std::string& key, const std::string& where, T& out, bool required = false) {
    if (!obj.contains(key)) {
      if (required) add(where, "missing key '" + key + "'");
      return;
    }
    try {
      out = obj[key].get<T>();
    } catch (const nlohmann::json::exception&) {
      add(where + "." + key, "has the wrong type");
    }
  }

  template <class T>
  void read_optional(const nlohmann::json& obj, const std::string& key, const std::string& where, std::optional<T>& out) {
    if (!obj.contains(key) || obj[key].is_null()) return;
    T v{};
    read(obj, key, where, v);
    out = v;
  }

  void check(bool ok, const std::string& where, const std::string& what) {
    if (!ok) add(where, what);
  }

  /// Runs a validator that reports through std::invalid_argument.
  template <class F>
  void capture(const std::string& where, F&& f) {
    try {
      f();
    } catch (const std::invalid_argument& e) {
      add(where, e.what());
    }
  }
};

inline void parse_wavefunction(ConfigReader& r, const nlohmann::json& j, const std::string& where, WaveFunctionSpec& out) {
  r.allow_keys(j, where, {"kind", "packets", "exchange_sign", "path"});
  r.read(j, "kind", where, out.kind, true);
  if (out.kind == "gaussian_packets") {
    if (!j.contains("packets") || !j["packets"].is_array()) {
      r.add(where, "gaussian_packets needs a 'packets' array");
    } else {
      for (std::size_t i = 0; i < j["packets"].size(); ++i) {
        const auto& p = j["packets"][i];
        const std::string w = where + ".packets[" + std::to_string(i) + "]";
        if (!p.is_object()) {
          r.add(w, "must be an object");
          continue;
        }
        r.allow_keys(p, w, {"center", "momentum", "width"});
        GaussianPacket g;
        r.read(p, "center", w, g.center, true);
        r.read(p, "momentum", w, g.momentum);
        r.read(p, "width", w, g.width);
        out.packets.push_back(g);
      }
    }
  } else if (out.kind == "snapshot") {
    std::string path;
    r.read(j, "path", where, path, true);
    out.path = path;
  } else {
    r.add(where + ".kind", "unknown wave function generator '" + out.kind + "' (expected gaussian_packets or snapshot)");
  }
  r.read_optional(j, "exchange_sign", where, out.exchange_sign);
}

inline void parse_vector_field(ConfigReader& r, const nlohmann::json& j, const std::string& where, VectorFieldSpec& out) {
  r.allow_keys(j, where, {"kind", "modes", "stream", "kmax", "amplitude", "path"});
  r.read(j, "kind", where, out.kind, true);
  if (out.kind == "modes") {
    if (!j.contains("modes") || !j["modes"].is_array()) {
      r.add(where, "modes needs a 'modes' array");
    } else {
      for (std::size_t i = 0; i < j["modes"].size(); ++i) {
        const auto& m = j["modes"][i];
        const std::string w = where + ".modes[" + std::to_string(i) + "]";
        if (!m.is_object()) {
          r.add(w, "must be an object");
          continue;
        }
        r.allow_keys(m, w, {"k", "polarization", "amplitude", "phase"});
        FieldMode f;
        r.read(m, "k", w, f.modes, true);
        r.read(m, "polarization", w, f.polarization, true);
        r.read(m, "amplitude", w, f.amplitude, true);
        r.read(m, "phase", w, f.phase);
        out.modes.push_back(f);
      }
    }
  } else if (out.kind == "random") {
    r.read(j, "stream", where, out.stream);
    r.read(j, "kmax", where, out.kmax);
    r.read(j, "amplitude", where, out.amplitude, true);
    r.check(out.kmax > 0.0, where + ".kmax", "must be positive");
    r.check(out.amplitude >= 0.0, where + ".amplitude", "must be non-negative");
  } else if (out.kind == "snapshot") {
    std::string path;
    r.read(j, "path", where, path, true);
    out.path = path;
  } else if (out.kind != "zero") {
    r.add(where + ".kind", "unknown field generator '" + out.kind + "' (expected zero, modes, random or snapshot)");
  }
}

inline bool is_grid_momentum(double p, double hbar, double length) {
  const double m = p / hbar * length / (2.0 * pi);
  return std::abs(m - std::round(m)) <= 1e-9 * std::max(1.0, std::abs(m));
}

}  // namespace detail

/// Parses and validates a configuration. Relative snapshot paths are resolved
/// against `base_dir`. Throws ConfigError listing every problem found.
inline RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  detail::ConfigReader r;
  RunConfig c;
  if (!j.is_object()) throw ConfigError({"configuration must be a JSON object"});
  r.allow_keys(j, "config", {"name", "seed", "memory_limit_gb", "physics", "grid", "coulomb", "initial_data", "picard", "stepper", "output"});
  r.read(j, "name", "config", c.name);
  r.read(j, "seed", "config", c.seed);
  r.read(j, "memory_limit_gb", "config", c.memory_limit_gb);

  if (const auto* p = r.object(j, "physics", "config", true)) {
    r.allow_keys(*p, "physics", {"hbar", "c", "masses", "charges", "dimension_cap"});
    r.read(*p, "hbar", "physics", c.params.hbar);
    r.read(*p, "c", "physics", c.params.c);
    r.read(*p, "masses", "physics", c.params.masses, true);
    r.read(*p, "charges", "physics", c.params.charges, true);
    r.read(*p, "dimension_cap", "physics", c.params.dimension_cap);
    r.capture("physics", [&] { c.params.validate(); });
  }
  if (const auto* g = r.object(j, "grid", "config", true)) {
    r.allow_keys(*g, "grid", {"points", "length"});
    r.read(*g, "points", "grid", c.points, true);
    r.read(*g, "length", "grid", c.length, true);
    r.capture("grid", [&] { Grid::make(c.points, c.length, 3); });
  }
  if (const auto* k = r.object(j, "coulomb", "config", false)) {
    r.allow_keys(*k, "coulomb", {"mode", "radius", "profile"});
    std::string mode = to_string(c.coulomb.mode);
    r.read(*k, "mode", "coulomb", mode);
    r.capture("coulomb.mode", [&] { c.coulomb.mode = coulomb_mode_from_string(mode); });
    r.read(*k, "radius", "coulomb", c.coulomb.radius);
    r.read(*k, "profile", "coulomb", c.coulomb.profile);
    r.check(c.coulomb.radius > 0.0, "coulomb.radius", "must be positive");
    r.check(c.coulomb.profile == "gaussian", "coulomb.profile", "only 'gaussian' is supported");
  }
  if (const auto* init = r.object(j, "initial_data", "config", true)) {
    r.allow_keys(*init, "initial_data", {"psi", "A0", "A1"});
    if (const auto* s = r.object(*init, "psi", "initial_data", true)) detail::parse_wavefunction(r, *s, "initial_data.psi", c.psi);
    if (const auto* s = r.object(*init, "A0", "initial_data", false)) detail::parse_vector_field(r, *s, "initial_data.A0", c.A0);
    if (const auto* s = r.object(*init, "A1", "initial_data", false)) detail::parse_vector_field(r, *s, "initial_data.A1", c.A1);
    if (c.A1.kind == "random" && !init->at("A1").contains("stream")) c.A1.stream = 1;
  }
  if (const auto* p = r.object(j, "picard", "config", false)) {
    r.allow_keys(*p, "picard", {"T", "n_t", "tol", "max_iters", "contraction_guard", "horizon_shrink", "T_min", "R1", "R2",
                                "total_time", "adaptive"});
    r.read(*p, "T", "picard", c.picard.T);
    r.read(*p, "n_t", "picard", c.picard.n_t);
    r.read(*p, "tol", "picard", c.picard.tol);
    r.read(*p, "max_iters", "picard", c.picard.max_iters);
    r.read(*p, "contraction_guard", "picard", c.picard.contraction_guard);
    r.read(*p, "horizon_shrink", "picard", c.picard.horizon_shrink);
    r.read(*p, "T_min", "picard", c.picard.T_min);
    r.read_optional(*p, "R1", "picard", c.picard.R1);
    r.read_optional(*p, "R2", "picard", c.picard.R2);
    r.read_optional(*p, "total_time", "picard", c.total_time);
    r.read(*p, "adaptive", "picard", c.adaptive);
  }
  if (const auto* s = r.object(j, "stepper", "config", false)) {
    r.allow_keys(*s, "stepper", {"krylov_dim", "substeps", "tolerance", "max_subdivisions"});
    r.read(*s, "krylov_dim", "stepper", c.picard.stepper.krylov_dim);
    r.read(*s, "substeps", "stepper", c.picard.stepper.substeps);
    r.read(*s, "tolerance", "stepper", c.picard.stepper.tolerance);
    r.read(*s, "max_subdivisions", "stepper", c.picard.stepper.max_subdivisions);
  }
  r.capture("picard", [&] { c.picard.validate(); });
  if (c.total_time) {
    const double steps = *c.total_time / c.picard.dt();
    r.check(*c.total_time > 0.0 && std::abs(steps - std::round(steps)) <= 1e-9 * std::max(1.0, steps), "picard.total_time",
            "must be a positive multiple of T / n_t");
    r.check(c.adaptive || std::abs(*c.total_time - c.picard.T) <= 1e-12 * c.picard.T, "picard.total_time",
            "requires adaptive = true unless it equals T");
  }
  if (const auto* o = r.object(j, "output", "config", false)) {
    r.allow_keys(*o, "output", {"directory", "snapshots", "convergence"});
    std::string dir = c.output.directory.string();
    r.read(*o, "directory", "output", dir);
    c.output.directory = dir;
    r.read(*o, "snapshots", "output", c.output.snapshots);
    r.read(*o, "convergence", "output", c.output.convergence);
  }

  const int n = c.particles();
  if (c.psi.kind == "gaussian_packets") {
    r.check(static_cast<int>(c.psi.packets.size()) == n, "initial_data.psi",
            "needs one packet per particle (" + std::to_string(n) + "), got " + std::to_string(c.psi.packets.size()));
    for (std::size_t i = 0; i < c.psi.packets.size(); ++i) {
      const auto& p = c.psi.packets[i];
      const std::string w = "initial_data.psi.packets[" + std::to_string(i) + "]";
      r.check(p.width > 0.0, w + ".width", "must be positive");
      for (double m : p.momentum)
        if (!detail::is_grid_momentum(m, c.params.hbar, c.length)) {
          r.add(w + ".momentum", "each component must be an integer multiple of 2 pi hbar / L");
          break;
        }
    }
  }
  if (c.psi.exchange_sign) {
    r.check(*c.psi.exchange_sign == 1 || *c.psi.exchange_sign == -1, "initial_data.psi.exchange_sign", "must be +1 or -1");
    r.check(n == 2, "initial_data.psi.exchange_sign", "requires exactly two particles");
    if (n == 2)
      r.check(c.params.masses[0] == c.params.masses[1] && c.params.charges[0] == c.params.charges[1],
              "initial_data.psi.exchange_sign", "requires identical masses and charges");
  }
  for (auto* spec : {&c.A0, &c.A1})
    for (std::size_t i = 0; i < spec->modes.size(); ++i)
      for (int k : spec->modes[i].modes)
        if (2 * std::abs(k) >= c.points) {
          r.add("initial_data.modes[" + std::to_string(i) + "].k", "mode numbers must be below points / 2");
          break;
        }
  if (r.problems.empty()) {
    const double samples = std::pow(static_cast<double>(c.points), 3.0 * n);
    const double nodes = (c.adaptive ? c.picard.n_t : std::max(c.picard.n_t, 1)) + 1.0;
    const double gib = 2.0 * nodes * samples * sizeof(cplx) / (1024.0 * 1024.0 * 1024.0);
    if (gib > c.memory_limit_gb) {
      char msg[160];
      std::snprintf(msg, sizeof msg, "two trajectories need about %.2f GiB, above memory_limit_gb = %.2f", gib,
                    c.memory_limit_gb);
      r.add("grid", msg);
    }
  }
  if (!base_dir.empty()) {
    for (auto* path : {&c.psi.path, &c.A0.path, &c.A1.path})
      if (!path->empty() && path->is_relative()) *path = base_dir / *path;
  }
  if (!r.problems.empty()) throw ConfigError(r.problems);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open configuration file " + path.string()});
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
  return parse_config(j, path.parent_path());
}

}  // namespace msp
