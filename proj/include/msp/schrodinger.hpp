#pragma once

// Magnetic many-body Schrodinger propagation for a prescribed field trajectory.
//
// The Hamiltonian is
//
//   H[A] = sum_j (1/2m_j) (i hbar grad_j + Q_j A(x_j)/c)^2 + sum_{j<k} Q_j Q_k v(x_j - x_k)
//
// with the cross term kept in the symmetric form i hbar Q_j/c [div_j(A psi) + A . grad_j psi],
// which makes the grid operator exactly Hermitian. The evolution U_A(t, s) is the
// time-ordered product of frozen-coefficient exponentials exp(-i dt H[A_mid] / hbar),
// each evaluated by a Lanczos (Krylov) exponential with residual-driven subdivision.

#include <msp/fields.hpp>
#include <msp/spectral.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace msp {

enum class CoulombMode { none, spectral, smeared };

/// Pair-interaction kernel. `spectral` uses 4 pi / |k|^2; `smeared` additionally
/// multiplies by |chi_R^(k)|^2 for a normalized Gaussian charge profile of radius R.
/// The k = 0 mode is dropped in both.
struct CoulombSpec {
  CoulombMode mode = CoulombMode::spectral;
  double radius = 1.0;
  std::string profile = "gaussian";
};

inline std::string to_string(CoulombMode m) {
  switch (m) {
    case CoulombMode::none: return "none";
    case CoulombMode::spectral: return "spectral";
    case CoulombMode::smeared: return "smeared";
  }
  return "unknown";
}

inline CoulombMode coulomb_mode_from_string(const std::string& s) {
  if (s == "none") return CoulombMode::none;
  if (s == "spectral") return CoulombMode::spectral;
  if (s == "smeared") return CoulombMode::smeared;
  throw std::invalid_argument("unknown coulomb mode '" + s + "'");
}

/// Periodic pair kernel v(r) on a 3D grid.
inline std::vector<double> pair_kernel(const Grid& g3, const CoulombSpec& spec) {
  if (g3.dim != 3) throw std::invalid_argument("pair_kernel: grid must be three-dimensional");
  std::vector<double> out(g3.size(), 0.0);
  if (spec.mode == CoulombMode::none) return out;
  if (spec.mode == CoulombMode::smeared) {
    if (!(spec.radius > 0.0)) throw std::invalid_argument("pair_kernel: smearing radius must be positive");
    if (spec.profile != "gaussian")
      throw std::invalid_argument("pair_kernel: unknown smearing profile '" + spec.profile + "'");
  }
  std::vector<cplx> hat(g3.size());
  const double scale = static_cast<double>(g3.size()) / g3.volume();
  for_each_wavevector(g3, [&](std::size_t n, std::span<const double> k) {
    const double k2 = norm_squared(k);
    if (k2 == 0.0) return;
    double v = 4.0 * pi / k2;
    if (spec.mode == CoulombMode::smeared) v *= std::exp(-spec.radius * spec.radius * k2);
    hat[n] = v * scale;
  });
  fft_inverse(hat, g3);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = hat[n].real();
  return out;
}

namespace detail {

inline int log2_exact(std::size_t v) {
  int s = 0;
  while ((std::size_t{1} << s) < v) ++s;
  return s;
}

}  // namespace detail

/// V(x) = sum_{j<k} Q_j Q_k v(x_j - x_k) on the 3N grid; zero for N = 1.
inline std::vector<double> coulomb_pair_potential(const Grid& grid, const PhysicalParams& params,
                                                  const CoulombSpec& spec) {
  const int n = particles_of(grid);
  if (n != params.particle_count()) throw std::invalid_argument("coulomb_pair_potential: particle count mismatch");
  std::vector<double> out(grid.size(), 0.0);
  if (n == 1 || spec.mode == CoulombMode::none) return out;
  const Grid g3 = grid.with_dim(3);
  const auto v = pair_kernel(g3, spec);
  const std::size_t m = static_cast<std::size_t>(grid.points);
  const std::size_t block = g3.size();
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      const double qq = params.charges[static_cast<std::size_t>(j)] * params.charges[static_cast<std::size_t>(k)];
      if (qq == 0.0) continue;
      const std::size_t sj = block_stride(grid, j), sk = block_stride(grid, k);
      for (std::size_t idx = 0; idx < out.size(); ++idx) {
        std::size_t bj = (idx / sj) % block, bk = (idx / sk) % block;
        std::size_t diff = 0;
        for (int a = 0; a < 3; ++a) {
          const std::size_t aj = bj % m, ak = bk % m;
          bj /= m;
          bk /= m;
          diff += ((aj + m - ak) % m) * static_cast<std::size_t>(std::pow(m, a));
        }
        out[idx] += qq * v[diff];
      }
    }
  return out;
}

/// Static ingredients of the Schrodinger operator on one configuration grid.
struct ManyBodyModel {
  PhysicalParams params;
  Grid grid;
  CoulombSpec coulomb;
  std::vector<double> potential;
  std::vector<double> kinetic_symbol;

  static ManyBodyModel make(const PhysicalParams& params, const Grid& grid, const CoulombSpec& coulomb) {
    params.validate();
    grid.validate();
    if (particles_of(grid) != params.particle_count())
      throw std::invalid_argument("model: grid dimension does not match 3N");
    ManyBodyModel m{params, grid, coulomb, coulomb_pair_potential(grid, params, coulomb), {}};
    m.kinetic_symbol.resize(grid.size());
    const int n = params.particle_count();
    for_each_wavevector(grid, [&](std::size_t idx, std::span<const double> k) {
      double e = 0.0;
      for (int j = 0; j < n; ++j) {
        const double kj2 = k[3 * j] * k[3 * j] + k[3 * j + 1] * k[3 * j + 1] + k[3 * j + 2] * k[3 * j + 2];
        e += params.hbar * params.hbar * kj2 / (2.0 * params.masses[static_cast<std::size_t>(j)]);
      }
      m.kinetic_symbol[idx] = e;
    });
    return m;
  }

  Grid field_grid() const { return grid.with_dim(3); }
};

/// H[A] for one frozen vector potential.
class FrozenHamiltonian {
 public:
  FrozenHamiltonian(const ManyBodyModel& model, const VectorField& A) : model_(model), A_(A) {
    require_same_grid(A.grid, model.field_grid(), "hamiltonian");
    require_finite(A, "hamiltonian");
    const std::size_t block = model.field_grid().size();
    block_shift_ = detail::log2_exact(block);
    diagonal_ = model.potential;
    const auto& p = model.params;
    for (int j = 0; j < p.particle_count(); ++j) {
      const double q = p.charges[static_cast<std::size_t>(j)];
      if (q == 0.0) continue;
      const double w = q * q / (p.c * p.c) / (2.0 * p.masses[static_cast<std::size_t>(j)]);
      const int shift = block_shift_ * (p.particle_count() - 1 - j);
      for (std::size_t idx = 0; idx < diagonal_.size(); ++idx) {
        const std::size_t b = (idx >> shift) & (block - 1);
        diagonal_[idx] += w * (A.comp[0][b] * A.comp[0][b] + A.comp[1][b] * A.comp[1][b] +
                               A.comp[2][b] * A.comp[2][b]);
      }
    }
  }

  const Grid& grid() const { return model_.grid; }

  ScalarField apply(const ScalarField& psi) const {
    require_same_grid(psi.grid, model_.grid, "hamiltonian");
    const auto& p = model_.params;
    const Grid& g = model_.grid;
    const std::size_t size = g.size();
    const std::size_t block = model_.field_grid().size();

    std::vector<cplx> kinetic = psi.values;
    fft_forward(kinetic, g);
    for (std::size_t n = 0; n < size; ++n) kinetic[n] *= model_.kinetic_symbol[n];
    fft_inverse(kinetic, g);

    ScalarField out(g);
    for (std::size_t n = 0; n < size; ++n) out.values[n] = kinetic[n] + diagonal_[n] * psi.values[n];

    std::vector<cplx> work(size);
    for (int j = 0; j < p.particle_count(); ++j) {
      const double q = p.charges[static_cast<std::size_t>(j)];
      if (q == 0.0) continue;
      const cplx coef = cplx(0.0, p.hbar * q / p.c) / (2.0 * p.masses[static_cast<std::size_t>(j)]);
      const int shift = block_shift_ * (p.particle_count() - 1 - j);
      for (int a = 0; a < 3; ++a) {
        const auto& Aa = A_.comp[a];
        std::copy(psi.values.begin(), psi.values.end(), work.begin());
        differentiate_axis(work, g, 3 * j + a);
        for (std::size_t n = 0; n < size; ++n) out.values[n] += coef * Aa[(n >> shift) & (block - 1)] * work[n];
        for (std::size_t n = 0; n < size; ++n) work[n] = Aa[(n >> shift) & (block - 1)] * psi.values[n];
        differentiate_axis(work, g, 3 * j + a);
        for (std::size_t n = 0; n < size; ++n) out.values[n] += coef * work[n];
      }
    }
    return out;
  }

 private:
  const ManyBodyModel& model_;
  const VectorField& A_;
  std::vector<double> diagonal_;
  int block_shift_ = 0;
};

inline ScalarField hamiltonian_apply(const WaveFunction& psi, const VectorField& A, const ManyBodyModel& model) {
  return FrozenHamiltonian(model, A).apply(psi);
}

/// Cross term i hbar Q_j / c * div_j(A psi) alone and in the A . grad_j form, for
/// checking that the two agree on divergence-free A.
inline std::pair<ScalarField, ScalarField> cross_term_forms(const WaveFunction& psi, const VectorField& A, int j,
                                                            const PhysicalParams& params) {
  const Grid& g = psi.grid;
  const std::size_t block = g.with_dim(3).size();
  const std::size_t stride = block_stride(g, j);
  auto hat = psi.values;
  fft_forward(hat, g);
  ScalarField div_form(g), grad_form(g);
  const cplx coef(0.0, params.hbar * params.charges[static_cast<std::size_t>(j)] / params.c);
  for (int a = 0; a < 3; ++a) {
    const std::size_t axis = static_cast<std::size_t>(3 * j + a);
    std::vector<cplx> d = hat;
    for_each_derivative_wavevector(g, [&](std::size_t n, std::span<const double> k) { d[n] *= cplx(0.0, k[axis]); });
    fft_inverse(d, g);
    std::vector<cplx> prod(g.size());
    for (std::size_t n = 0; n < g.size(); ++n) {
      const double av = A.comp[a][(n / stride) % block];
      grad_form.values[n] += coef * av * d[n];
      prod[n] = av * psi.values[n];
    }
    fft_forward(prod, g);
    for_each_derivative_wavevector(g, [&](std::size_t n, std::span<const double> k) { prod[n] *= cplx(0.0, k[axis]); });
    fft_inverse(prod, g);
    for (std::size_t n = 0; n < g.size(); ++n) div_form.values[n] += coef * prod[n];
  }
  return {div_form, grad_form};
}

// ---- Krylov exponential -------------------------------------------------------

struct StepperConfig {
  int krylov_dim = 12;
  int substeps = 1;
  double tolerance = 1e-9;
  int max_subdivisions = 12;
};

struct KrylovResult {
  std::vector<cplx> value;
  double residual = 0.0;
  int dimension = 0;
  bool converged = false;
};

namespace detail {

inline cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

inline double norm(std::span<const cplx> a) {
  double acc = 0.0;
  for (const auto& v : a) acc += std::norm(v);
  return std::sqrt(acc);
}

/// exp(-i tau T) e_1 for a real symmetric tridiagonal T.
inline Eigen::VectorXcd tridiagonal_exp_e1(const std::vector<double>& alpha, const std::vector<double>& beta,
                                           double tau) {
  const auto m = static_cast<Eigen::Index>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    T(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T);
  const Eigen::MatrixXd& Q = eig.eigenvectors();
  Eigen::VectorXcd coeff(m);
  for (Eigen::Index i = 0; i < m; ++i) coeff(i) = std::polar(1.0, -tau * eig.eigenvalues()(i)) * Q(0, i);
  return Q.cast<cplx>() * coeff;
}

}  // namespace detail

/// exp(-i tau H) v by Lanczos with full reorthogonalization. `residual` is the
/// relative a-posteriori estimate beta_m |[exp(-i tau T_m) e_1]_m|.
template <class Apply>
KrylovResult krylov_expm(const Apply& apply, std::span<const cplx> v, double tau, int max_dim, double tol) {
  KrylovResult res;
  const double beta0 = detail::norm(v);
  if (beta0 == 0.0 || tau == 0.0) {
    res.value.assign(v.begin(), v.end());
    res.converged = true;
    return res;
  }
  const std::size_t size = v.size();
  std::vector<std::vector<cplx>> basis;
  basis.emplace_back(v.begin(), v.end());
  for (auto& x : basis[0]) x /= beta0;
  std::vector<double> alpha, beta;
  Eigen::VectorXcd y;
  for (int j = 0; j < max_dim; ++j) {
    std::vector<cplx> w = apply(basis.back());
    const double a = detail::dot(basis.back(), w).real();
    alpha.push_back(a);
    for (std::size_t i = 0; i < size; ++i) {
      w[i] -= a * basis.back()[i];
      if (j > 0) w[i] -= beta.back() * basis[basis.size() - 2][i];
    }
    for (const auto& q : basis) {
      const cplx h = detail::dot(q, w);
      for (std::size_t i = 0; i < size; ++i) w[i] -= h * q[i];
    }
    const double b = detail::norm(w);
    y = detail::tridiagonal_exp_e1(alpha, beta, tau);
    res.dimension = j + 1;
    // Invariant subspace: the projection is exact.
    if (b <= 1e-13 * (std::abs(a) + 1.0)) {
      res.residual = 0.0;
      res.converged = true;
      break;
    }
    res.residual = b * std::abs(y(j));
    if (res.residual <= tol) {
      res.converged = true;
      break;
    }
    if (j + 1 == max_dim) break;
    beta.push_back(b);
    for (auto& x : w) x /= b;
    basis.push_back(std::move(w));
  }
  res.value.assign(size, cplx{});
  for (int j = 0; j < res.dimension; ++j) {
    const cplx c = beta0 * y(j);
    const auto& q = basis[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < size; ++i) res.value[i] += c * q[i];
  }
  return res;
}

namespace detail {

/// exp(-i t H / hbar) psi for signed t, halving the step while the Krylov estimate fails.
inline std::vector<cplx> frozen_exponential(const FrozenHamiltonian& H, std::vector<cplx> psi, double t,
                                            double hbar, const StepperConfig& config, int depth) {
  const Grid& g = H.grid();
  auto apply = [&](const std::vector<cplx>& x) { return H.apply(ScalarField(g, x)).values; };
  auto res = krylov_expm(apply, psi, t / hbar, config.krylov_dim, config.tolerance);
  if (res.converged) return std::move(res.value);
  if (depth >= config.max_subdivisions) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "schrodinger_step: Krylov residual %.3e above tolerance %.1e after %d subdivisions (dt = %.3e)",
                  res.residual, config.tolerance, depth, t);
    throw NumericalError(msg);
  }
  psi = frozen_exponential(H, std::move(psi), 0.5 * t, hbar, config, depth + 1);
  return frozen_exponential(H, std::move(psi), 0.5 * t, hbar, config, depth + 1);
}

inline void validate(const StepperConfig& c) {
  if (c.krylov_dim < 2) throw std::invalid_argument("stepper: krylov dimension must be >= 2");
  if (c.substeps < 1) throw std::invalid_argument("stepper: substeps must be >= 1");
  if (!(c.tolerance > 0.0)) throw std::invalid_argument("stepper: tolerance must be positive");
}

}  // namespace detail

/// One frozen-coefficient factor exp(-i dt H[A_frozen] / hbar) psi.
inline WaveFunction schrodinger_step(const WaveFunction& psi, const VectorField& A_frozen, double dt,
                                     const ManyBodyModel& model, const StepperConfig& config = {}) {
  if (!(dt >= 0.0)) throw std::invalid_argument("schrodinger_step: dt must be non-negative");
  detail::validate(config);
  require_finite(psi, "schrodinger_step");
  if (dt == 0.0) return psi;
  const FrozenHamiltonian H(model, A_frozen);
  return WaveFunction(psi.grid, detail::frozen_exponential(H, psi.values, dt, model.params.hbar, config, 0));
}

namespace detail {

inline VectorField lerp(const VectorField& a, const VectorField& b, double s) {
  VectorField out(a.grid);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < out.comp[c].size(); ++i)
      out.comp[c][i] = (1.0 - s) * a.comp[c][i] + s * b.comp[c][i];
  return out;
}

/// Propagates across interval [t_i, t_{i+1}] (forward) or back (backward) with substeps
/// frozen at their midpoints, linearly interpolated from the endpoint samples.
inline std::vector<cplx> interval_propagate(std::vector<cplx> psi, const VectorField& a0, const VectorField& a1,
                                            double dt, bool forward, const ManyBodyModel& model,
                                            const StepperConfig& config) {
  const int s = config.substeps;
  const double h = dt / s;
  for (int step = 0; step < s; ++step) {
    const int sub = forward ? step : s - 1 - step;
    const VectorField mid = lerp(a0, a1, (sub + 0.5) / s);
    const FrozenHamiltonian H(model, mid);
    psi = frozen_exponential(H, std::move(psi), forward ? h : -h, model.params.hbar, config, 0);
  }
  return psi;
}

inline void check_field_trajectory(std::span<const VectorField> A, const ManyBodyModel& model, double dt) {
  if (A.size() < 2) throw std::invalid_argument("evolve_schrodinger: need at least two field samples");
  if (!(dt > 0.0)) throw std::invalid_argument("evolve_schrodinger: time step must be positive");
  for (const auto& a : A) require_same_grid(a.grid, model.field_grid(), "evolve_schrodinger");
}

}  // namespace detail

/// psi(t_i) for every node of the field trajectory, starting from psi0 at t_0.
inline std::vector<WaveFunction> evolve_schrodinger(const WaveFunction& psi0, std::span<const VectorField> A,
                                                    double dt, const ManyBodyModel& model,
                                                    const StepperConfig& config = {}) {
  detail::check_field_trajectory(A, model, dt);
  detail::validate(config);
  require_same_grid(psi0.grid, model.grid, "evolve_schrodinger");
  require_finite(psi0, "evolve_schrodinger");
  std::vector<WaveFunction> out;
  out.reserve(A.size());
  out.push_back(psi0);
  for (std::size_t i = 0; i + 1 < A.size(); ++i)
    out.emplace_back(model.grid, detail::interval_propagate(out.back().values, A[i], A[i + 1], dt, true, model, config));
  return out;
}

/// Backward evolution from psi(t_last): out[i] approximates psi(t_i).
inline std::vector<WaveFunction> evolve_schrodinger_backward(const WaveFunction& psi_end,
                                                             std::span<const VectorField> A, double dt,
                                                             const ManyBodyModel& model,
                                                             const StepperConfig& config = {}) {
  detail::check_field_trajectory(A, model, dt);
  detail::validate(config);
  require_same_grid(psi_end.grid, model.grid, "evolve_schrodinger_backward");
  std::vector<WaveFunction> out(A.size());
  out.back() = psi_end;
  for (std::size_t i = A.size() - 1; i-- > 0;)
    out[i] = WaveFunction(model.grid,
                          detail::interval_propagate(out[i + 1].values, A[i], A[i + 1], dt, false, model, config));
  return out;
}

/// Duhamel form xi(t) = U(t,0) xi(0) - (i/hbar) int_0^t U(t,s) f(s) ds, trapezoidal in s.
inline std::vector<WaveFunction> evolve_schrodinger_inhomogeneous(const WaveFunction& psi0,
                                                                  std::span<const VectorField> A,
                                                                  std::span<const WaveFunction> f, double dt,
                                                                  const ManyBodyModel& model,
                                                                  const StepperConfig& config = {}) {
  detail::check_field_trajectory(A, model, dt);
  detail::validate(config);
  if (f.size() != A.size()) throw std::invalid_argument("evolve_schrodinger_inhomogeneous: source sample count");
  for (const auto& s : f) require_same_grid(s.grid, model.grid, "evolve_schrodinger_inhomogeneous");
  const cplx kick(0.0, -0.5 * dt / model.params.hbar);
  std::vector<WaveFunction> out;
  out.reserve(A.size());
  out.push_back(psi0);
  for (std::size_t i = 0; i + 1 < A.size(); ++i) {
    std::vector<cplx> eta = out.back().values;
    for (std::size_t n = 0; n < eta.size(); ++n) eta[n] += kick * f[i].values[n];
    eta = detail::interval_propagate(std::move(eta), A[i], A[i + 1], dt, true, model, config);
    for (std::size_t n = 0; n < eta.size(); ++n) eta[n] += kick * f[i + 1].values[n];
    out.emplace_back(model.grid, std::move(eta));
  }
  return out;
}

}  // namespace msp
