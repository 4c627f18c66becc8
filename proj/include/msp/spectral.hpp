#pragma once

// Periodic grids, FFT-backed Fourier multipliers and the norm family used
// throughout the solver (Sobolev, Lebesgue, mixed space-time).

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace msp {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// Raised when a numerical kernel cannot meet its accuracy contract.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform periodic grid on the torus [0, L)^d with M points per axis.
struct Grid {
  int points = 16;
  double length = 16.0;
  int dim = 3;

  static Grid make(int points, double length, int dim) {
    Grid g{points, length, dim};
    g.validate();
    return g;
  }

  void validate() const {
    if (points < 4 || points % 2 != 0 || (points & (points - 1)) != 0)
      throw std::invalid_argument("grid: points per axis must be a power of two >= 4, got " +
                                  std::to_string(points));
    if (!(length > 0.0) || !std::isfinite(length))
      throw std::invalid_argument("grid: box length must be positive");
    if (dim < 1) throw std::invalid_argument("grid: dimension must be >= 1");
  }

  std::size_t size() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(points);
    return n;
  }
  double spacing() const { return length / points; }
  double cell_volume() const { return std::pow(spacing(), dim); }
  double volume() const { return std::pow(length, dim); }

  /// Wavenumber of FFT index m in standard ordering: 2*pi/L * {0..M/2-1, -M/2..-1}.
  double wavenumber(int m) const {
    const int signed_m = m < points / 2 ? m : m - points;
    return 2.0 * pi * signed_m / length;
  }
  std::vector<double> wavenumbers() const {
    std::vector<double> k(static_cast<std::size_t>(points));
    for (int m = 0; m < points; ++m) k[static_cast<std::size_t>(m)] = wavenumber(m);
    return k;
  }
  /// Symbols of first derivatives: the unpaired Nyquist wavenumber is set to zero
  /// so odd-order operators map real fields to real fields.
  std::vector<double> derivative_wavenumbers() const {
    auto k = wavenumbers();
    k[static_cast<std::size_t>(points / 2)] = 0.0;
    return k;
  }
  double coordinate(int m) const { return m * spacing(); }

  /// Same grid restricted to `d` axes (used for the 3D field grid of a 3N grid).
  Grid with_dim(int d) const { return Grid{points, length, d}; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw std::invalid_argument(std::string(what) + ": inconsistent grids");
}

/// Complex scalar samples on a grid (row-major, last axis fastest).
struct ScalarField {
  Grid grid;
  std::vector<cplx> values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g) : grid(g), values(g.size(), cplx{0.0, 0.0}) {}
  ScalarField(const Grid& g, std::vector<cplx> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw std::invalid_argument("scalar field: size mismatch");
  }
};

/// Real three-component field on a 3D grid.
struct VectorField {
  Grid grid;
  std::array<std::vector<double>, 3> comp;

  VectorField() = default;
  explicit VectorField(const Grid& g) : grid(g) {
    if (g.dim != 3) throw std::invalid_argument("vector field: grid must be three-dimensional");
    for (auto& c : comp) c.assign(g.size(), 0.0);
  }
};

using WaveFunction = ScalarField;

// ---- elementwise arithmetic ----------------------------------------------

inline ScalarField& operator+=(ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "scalar field +=");
  for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] += b.values[i];
  return a;
}
inline ScalarField& operator-=(ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "scalar field -=");
  for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] -= b.values[i];
  return a;
}
inline ScalarField& operator*=(ScalarField& a, cplx s) {
  for (auto& v : a.values) v *= s;
  return a;
}
inline ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
inline ScalarField operator*(cplx s, ScalarField a) { return a *= s; }

inline VectorField& operator+=(VectorField& a, const VectorField& b) {
  require_same_grid(a.grid, b.grid, "vector field +=");
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.comp[c].size(); ++i) a.comp[c][i] += b.comp[c][i];
  return a;
}
inline VectorField& operator-=(VectorField& a, const VectorField& b) {
  require_same_grid(a.grid, b.grid, "vector field -=");
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.comp[c].size(); ++i) a.comp[c][i] -= b.comp[c][i];
  return a;
}
inline VectorField& operator*=(VectorField& a, double s) {
  for (auto& c : a.comp)
    for (auto& v : c) v *= s;
  return a;
}
inline VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
inline VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
inline VectorField operator*(double s, VectorField a) { return a *= s; }

// ---- validation ------------------------------------------------------------

inline void require_finite(std::span<const cplx> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag()))
      throw std::invalid_argument(std::string(what) + ": non-finite value at index " +
                                  std::to_string(i));
}
inline void require_finite(const ScalarField& f, const char* what) { require_finite(f.values, what); }
inline void require_finite(const VectorField& f, const char* what) {
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < f.comp[c].size(); ++i)
      if (!std::isfinite(f.comp[c][i]))
        throw std::invalid_argument(std::string(what) + ": non-finite value in component " +
                                    std::to_string(c) + " at index " + std::to_string(i));
}

// ---- FFT -------------------------------------------------------------------

namespace detail {

class FftPlans {
 public:
  static FftPlans& instance() {
    static FftPlans plans;
    return plans;
  }

  fftw_plan get(const Grid& g, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(g.points, g.dim, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<int> n(static_cast<std::size_t>(g.dim), g.points);
    auto* buf = fftw_alloc_complex(g.size());
    fftw_plan p = fftw_plan_dft(g.dim, n.data(), buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (p == nullptr) throw NumericalError("fftw: planning failed");
    plans_.emplace(key, p);
    return p;
  }

  /// Batched one-dimensional transforms along `axis` of a row-major grid.
  fftw_plan get_axis(const Grid& g, int axis, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(g.points, g.dim, axis, sign);
    if (auto it = axis_plans_.find(key); it != axis_plans_.end()) return it->second;
    std::ptrdiff_t inner = 1;
    for (int a = axis + 1; a < g.dim; ++a) inner *= g.points;
    const std::ptrdiff_t outer = static_cast<std::ptrdiff_t>(g.size()) / (inner * g.points);
    fftw_iodim dim{g.points, static_cast<int>(inner), static_cast<int>(inner)};
    fftw_iodim loops[2] = {{static_cast<int>(outer), static_cast<int>(inner * g.points), static_cast<int>(inner * g.points)},
                           {static_cast<int>(inner), 1, 1}};
    auto* buf = fftw_alloc_complex(g.size());
    fftw_plan p = fftw_plan_guru_dft(1, &dim, 2, loops, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (p == nullptr) throw NumericalError("fftw: planning failed");
    axis_plans_.emplace(key, p);
    return p;
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

 private:
  FftPlans() {
    // MSP_NUM_THREADS sets the FFT thread count; default single-threaded.
    if (const char* env = std::getenv("MSP_NUM_THREADS")) {
      const int n = std::atoi(env);
      if (n > 1 && fftw_init_threads() != 0) fftw_plan_with_nthreads(n);
    }
  }
  ~FftPlans() {
    for (auto& [key, p] : plans_) fftw_destroy_plan(p);
    for (auto& [key, p] : axis_plans_) fftw_destroy_plan(p);
  }

  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
  std::map<std::tuple<int, int, int, int>, fftw_plan> axis_plans_;
};

}  // namespace detail

/// In-place unnormalized forward transform.
inline void fft_forward(std::span<cplx> data, const Grid& g) {
  if (data.size() != g.size()) throw std::invalid_argument("fft: size mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(detail::FftPlans::instance().get(g, FFTW_FORWARD), p, p);
}

/// In-place inverse transform carrying the 1/M^d factor.
inline void fft_inverse(std::span<cplx> data, const Grid& g) {
  if (data.size() != g.size()) throw std::invalid_argument("fft: size mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(detail::FftPlans::instance().get(g, FFTW_BACKWARD), p, p);
  const double scale = 1.0 / static_cast<double>(g.size());
  for (auto& v : data) v *= scale;
}

/// d/dx_axis in place, by transforms along that axis only (Nyquist symbol zero).
inline void differentiate_axis(std::span<cplx> data, const Grid& g, int axis) {
  if (data.size() != g.size()) throw std::invalid_argument("fft: size mismatch");
  if (axis < 0 || axis >= g.dim) throw std::out_of_range("differentiate: axis out of range");
  auto& plans = detail::FftPlans::instance();
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans.get_axis(g, axis, FFTW_FORWARD), p, p);
  const auto m = static_cast<std::size_t>(g.points);
  auto k = g.derivative_wavenumbers();
  for (auto& v : k) v /= static_cast<double>(m);
  int bits = 0;
  while ((std::size_t{1} << bits) < m) ++bits;
  const int shift = bits * (g.dim - 1 - axis);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const double kv = k[(n >> shift) & (m - 1)];
    data[n] = cplx(-kv * data[n].imag(), kv * data[n].real());
  }
  fftw_execute_dft(plans.get_axis(g, axis, FFTW_BACKWARD), p, p);
}

inline std::vector<cplx> to_complex(const std::vector<double>& v) {
  return {v.begin(), v.end()};
}

namespace detail {

template <class Fn>
void visit_wavevectors(const Grid& g, const std::vector<double>& table, Fn&& fn) {
  const auto d = static_cast<std::size_t>(g.dim);
  std::vector<int> idx(d, 0);
  std::vector<double> k(d, table[0]);
  const std::size_t total = g.size();
  for (std::size_t n = 0; n < total; ++n) {
    fn(n, std::span<const double>(k));
    for (std::size_t a = d; a-- > 0;) {
      if (++idx[a] < g.points) {
        k[a] = table[static_cast<std::size_t>(idx[a])];
        break;
      }
      idx[a] = 0;
      k[a] = table[0];
    }
  }
}

}  // namespace detail

/// Visits every grid wavevector in storage order: fn(flat_index, k).
template <class Fn>
void for_each_wavevector(const Grid& g, Fn&& fn) {
  detail::visit_wavevectors(g, g.wavenumbers(), std::forward<Fn>(fn));
}

/// As for_each_wavevector, with the derivative wavenumbers (Nyquist zeroed).
template <class Fn>
void for_each_derivative_wavevector(const Grid& g, Fn&& fn) {
  detail::visit_wavevectors(g, g.derivative_wavenumbers(), std::forward<Fn>(fn));
}

/// Visits every grid node in storage order: fn(flat_index, x).
template <class Fn>
void for_each_node(const Grid& g, Fn&& fn) {
  const auto d = static_cast<std::size_t>(g.dim);
  std::vector<int> idx(d, 0);
  std::vector<double> x(d, 0.0);
  const std::size_t total = g.size();
  const double h = g.spacing();
  for (std::size_t n = 0; n < total; ++n) {
    fn(n, std::span<const double>(x));
    for (std::size_t a = d; a-- > 0;) {
      if (++idx[a] < g.points) {
        x[a] = idx[a] * h;
        break;
      }
      idx[a] = 0;
      x[a] = 0.0;
    }
  }
}

inline double norm_squared(std::span<const double> k) {
  double s = 0.0;
  for (double v : k) s += v * v;
  return s;
}

/// Japanese bracket <|k|> = sqrt(1 + |k|^2).
inline double bracket(std::span<const double> k) { return std::sqrt(1.0 + norm_squared(k)); }

// ---- multipliers -----------------------------------------------------------

/// inverse-transform(m(k) * forward-transform(f)); m is called as m(k) -> complex.
template <class Multiplier>
ScalarField apply_multiplier(const ScalarField& f, Multiplier&& m) {
  require_finite(f, "apply_multiplier");
  ScalarField out = f;
  fft_forward(out.values, out.grid);
  for_each_wavevector(out.grid, [&](std::size_t n, std::span<const double> k) {
    out.values[n] *= cplx(m(k));
  });
  fft_inverse(out.values, out.grid);
  return out;
}

/// Componentwise multiplier on a real vector field; the result keeps the real part.
template <class Multiplier>
VectorField apply_multiplier(const VectorField& f, Multiplier&& m) {
  require_finite(f, "apply_multiplier");
  VectorField out(f.grid);
  std::vector<cplx> symbol(f.grid.size());
  for_each_wavevector(f.grid, [&](std::size_t n, std::span<const double> k) { symbol[n] = cplx(m(k)); });
  for (int c = 0; c < 3; ++c) {
    auto buf = to_complex(f.comp[c]);
    fft_forward(buf, f.grid);
    for (std::size_t n = 0; n < buf.size(); ++n) buf[n] *= symbol[n];
    fft_inverse(buf, f.grid);
    for (std::size_t n = 0; n < buf.size(); ++n) out.comp[c][n] = buf[n].real();
  }
  return out;
}

// ---- norms -----------------------------------------------------------------

namespace detail {

inline double weighted_spectral_sum(std::span<const cplx> fhat, const Grid& g, double s) {
  double acc = 0.0;
  for_each_wavevector(g, [&](std::size_t n, std::span<const double> k) {
    const double w = s == 0.0 ? 1.0 : std::pow(1.0 + norm_squared(k), s);
    acc += w * std::norm(fhat[n]);
  });
  return acc;
}

}  // namespace detail

/// ||<k>^s f^||, scaled so that s = 0 reproduces the grid-quadrature L2 norm.
inline double sobolev_norm(const ScalarField& f, double s) {
  require_finite(f, "sobolev_norm");
  auto fhat = f.values;
  fft_forward(fhat, f.grid);
  const double n = static_cast<double>(f.grid.size());
  return std::sqrt(f.grid.volume() / (n * n) * detail::weighted_spectral_sum(fhat, f.grid, s));
}

inline double sobolev_norm(const VectorField& f, double s) {
  require_finite(f, "sobolev_norm");
  const double n = static_cast<double>(f.grid.size());
  double acc = 0.0;
  for (int c = 0; c < 3; ++c) {
    auto fhat = to_complex(f.comp[c]);
    fft_forward(fhat, f.grid);
    acc += detail::weighted_spectral_sum(fhat, f.grid, s);
  }
  return std::sqrt(f.grid.volume() / (n * n) * acc);
}

namespace detail {

inline double lebesgue_from_magnitudes(std::span<const double> mag, double cell, double r) {
  if (std::isinf(r)) {
    double m = 0.0;
    for (double v : mag) m = std::max(m, v);
    return m;
  }
  double acc = 0.0;
  for (double v : mag) acc += std::pow(v, r);
  return std::pow(acc * cell, 1.0 / r);
}

inline void require_exponent(double r) {
  if (!(r >= 1.0)) throw std::invalid_argument("lebesgue_norm: exponent must lie in [1, inf]");
}

}  // namespace detail

/// (sum |f|^r * cell volume)^(1/r); r = inf gives the max norm.
inline double lebesgue_norm(const ScalarField& f, double r) {
  detail::require_exponent(r);
  require_finite(f, "lebesgue_norm");
  std::vector<double> mag(f.values.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(f.values[i]);
  return detail::lebesgue_from_magnitudes(mag, f.grid.cell_volume(), r);
}

/// Pointwise Euclidean magnitude, then the scalar L^r norm.
inline double lebesgue_norm(const VectorField& f, double r) {
  detail::require_exponent(r);
  require_finite(f, "lebesgue_norm");
  std::vector<double> mag(f.grid.size());
  for (std::size_t i = 0; i < mag.size(); ++i)
    mag[i] = std::sqrt(f.comp[0][i] * f.comp[0][i] + f.comp[1][i] * f.comp[1][i] +
                       f.comp[2][i] * f.comp[2][i]);
  return detail::lebesgue_from_magnitudes(mag, f.grid.cell_volume(), r);
}

/// W^{s,r} norm computed multiplier-first: || <D>^s f ||_{L^r}.
template <class Field>
double sobolev_lebesgue_norm(const Field& f, double s, double r) {
  if (s == 0.0) return lebesgue_norm(f, r);
  return lebesgue_norm(apply_multiplier(f, [s](std::span<const double> k) {
                         return std::pow(1.0 + norm_squared(k), 0.5 * s);
                       }),
                       r);
}

/// Trapezoidal L^q in time (max for q = inf) of per-sample values.
inline double time_lebesgue_norm(std::span<const double> values, double dt, double q) {
  if (values.size() < 2) throw std::invalid_argument("spacetime_norm: need at least two time samples");
  if (!(dt > 0.0)) throw std::invalid_argument("spacetime_norm: time step must be positive");
  if (!(q >= 1.0)) throw std::invalid_argument("spacetime_norm: exponent q must lie in [1, inf]");
  if (std::isinf(q)) {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = (i == 0 || i + 1 == values.size()) ? 0.5 : 1.0;
    acc += w * std::pow(values[i], q);
  }
  return std::pow(acc * dt, 1.0 / q);
}

/// L^q_T W^{s,r} of uniformly sampled fields.
template <class Field>
double spacetime_norm(std::span<const Field> samples, double dt, double q, double s, double r) {
  if (samples.size() < 2) throw std::invalid_argument("spacetime_norm: need at least two time samples");
  std::vector<double> per_sample(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require_same_grid(samples[i].grid, samples[0].grid, "spacetime_norm");
    per_sample[i] = sobolev_lebesgue_norm(samples[i], s, r);
  }
  return time_lebesgue_norm(per_sample, dt, q);
}

template <class Field>
double spacetime_norm(const std::vector<Field>& samples, double dt, double q, double s, double r) {
  return spacetime_norm(std::span<const Field>(samples), dt, q, s, r);
}

// ---- inner products ----------------------------------------------------------

/// Grid-quadrature L2 inner product <a, b> = sum conj(a) b * cell volume.
inline cplx inner_product(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "inner_product");
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.values.size(); ++i) acc += std::conj(a.values[i]) * b.values[i];
  return acc * a.grid.cell_volume();
}

inline double inner_product(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid, b.grid, "inner_product");
  double acc = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.comp[c].size(); ++i) acc += a.comp[c][i] * b.comp[c][i];
  return acc * a.grid.cell_volume();
}

/// Grid L2 norm by direct quadrature (no transform).
inline double l2_norm(const ScalarField& f) {
  double acc = 0.0;
  for (const auto& v : f.values) acc += std::norm(v);
  return std::sqrt(acc * f.grid.cell_volume());
}

inline double l2_norm(const VectorField& f) {
  double acc = 0.0;
  for (const auto& c : f.comp)
    for (double v : c) acc += v * v;
  return std::sqrt(acc * f.grid.cell_volume());
}

}  // namespace msp
