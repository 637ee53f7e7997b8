#pragma once

// Real-time dynamics: pure states on the q grid, phase fields under the alpha
// generator, density matrices under the commutator, and the classical residual.
//
// Phase fields obey i hbar d chi/dt = H_alpha chi with
//   H_alpha = -hbar^2 (1 - 2a)/2m d_q^2 - i hbar (p/m) d_q
//             + sum_{n>=1} [(-a)^n - (1-a)^n]/n! (-i hbar)^n V^(n)(q) d_p^n.
// The first two terms are diagonal in (u, p) (u conjugate to q), the series in (q, v).

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "xphase/errors.hpp"
#include "xphase/hamiltonian.hpp"
#include "xphase/numerics.hpp"
#include "xphase/observables.hpp"
#include "xphase/states.hpp"

namespace xphase {

enum class Scheme { split_step, rk4 };

/// Plain RK4 is stable for |lambda dt| < 2.83 on the imaginary axis, but in the interaction
/// picture the stiff part is rotated by the exact kinetic flow; growth starts near 2.0.
inline constexpr double kRk4StabilityBound = 1.6;
/// Plain RK4 on a Hermitian generator (no interaction picture).
inline constexpr double kPlainRk4StabilityBound = 2.5;

struct EvolutionConfig {
  double dt = 0.01;
  std::size_t steps = 100;
  Scheme scheme = Scheme::split_step;
  std::size_t stride = 1;  // record every stride-th step

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("evolution: dt must be positive");
    if (steps == 0) throw ValidationError("evolution: steps must be positive");
    if (stride == 0) throw ValidationError("evolution: stride must be positive");
  }
};

template <class State>
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
};

namespace detail {

/// One Lawson (integrating-factor) RK4 step for u' = L u + N(u), L applied exactly:
/// half(u) = exp(L dt/2) u.
template <class U, class Half, class Nonlinear>
U lawson_rk4_step(const U& u, double dt, Half&& half, Nonlinear&& nl) {
  const U eu = half(u);
  const U k1 = nl(u);
  const U hk1 = half(k1);
  const U k2 = nl(eu + (0.5 * dt) * hk1);
  const U k3 = nl(eu + (0.5 * dt) * k2);
  const U eeu = half(eu);
  const U k4 = nl(eeu + dt * half(k3));
  return eeu + (dt / 6.0) * (half(hk1 + 2.0 * (k2 + k3)) + k4);
}

/// Amplitude vector with the arithmetic the integrators need.
struct Samples {
  std::vector<cplx> v;
  friend Samples operator+(Samples a, const Samples& b) {
    for (std::size_t k = 0; k < a.v.size(); ++k) a.v[k] += b.v[k];
    return a;
  }
  friend Samples operator*(double s, Samples a) {
    for (auto& x : a.v) x *= s;
    return a;
  }
};

inline void check_stability(double rate, double dt, const char* who, double bound = kRk4StabilityBound) {
  if (rate * dt > bound) {
    throw ValidationError(std::string(who) + ": dt = " + fmt(dt) + " exceeds the rk4 stability bound " +
                          fmt(bound / rate) + " for this grid and Hamiltonian");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pure states

/// Evolves psi0 under H on its own grid. split_step: Strang (half potential, kinetic in
/// p-space, half potential). rk4: Lawson RK4 with the kinetic factor exact.
inline Trajectory<WaveFunction> evolve_pure(const WaveFunction& psi0, const HamiltonianSpec& h, const EvolutionConfig& cfg,
                                            double hbar = 1.0) {
  cfg.validate();
  h.validate();
  const double n0 = norm_squared(psi0);
  if (std::abs(n0 - 1.0) > kNormTolerance) throw ValidationError("evolve_pure: initial state is not normalized");
  const QGrid& g = psi0.grid;
  const std::size_t n = g.n_points;
  const double dt = cfg.dt;

  std::vector<double> pot(n), kin(n);
  double vmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pot[i] = h.potential(g.point(i));
    vmax = std::max(vmax, std::abs(pot[i]));
    const double pk = hbar * wavenumber(i, n, g.spacing);
    kin[i] = pk * pk / (2.0 * h.mass);
  }
  auto kinetic = [&](std::vector<cplx> f, double tau) {
    fft::transform(f, fft::Direction::forward);
    for (std::size_t k = 0; k < n; ++k) f[k] *= std::exp(-kI * kin[k] * tau / hbar) / static_cast<double>(n);
    fft::transform(f, fft::Direction::backward);
    return f;
  };
  if (cfg.scheme == Scheme::rk4) detail::check_stability(vmax / hbar, dt, "evolve_pure");

  std::vector<cplx> expv(n);
  for (std::size_t i = 0; i < n; ++i) expv[i] = std::exp(-kI * pot[i] * (0.5 * dt) / hbar);

  Trajectory<WaveFunction> out;
  out.times.push_back(0.0);
  out.states.push_back(psi0);
  std::vector<cplx> psi = psi0.values;
  for (std::size_t s = 1; s <= cfg.steps; ++s) {
    if (cfg.scheme == Scheme::split_step) {
      for (std::size_t i = 0; i < n; ++i) psi[i] *= expv[i];
      psi = kinetic(std::move(psi), dt);
      for (std::size_t i = 0; i < n; ++i) psi[i] *= expv[i];
    } else {
      auto half = [&](const detail::Samples& u) { return detail::Samples{kinetic(u.v, 0.5 * dt)}; };
      auto nl = [&](detail::Samples u) {
        for (std::size_t i = 0; i < n; ++i) u.v[i] *= -kI * pot[i] / hbar;
        return u;
      };
      psi = detail::lawson_rk4_step(detail::Samples{psi}, dt, half, nl).v;
    }
    const double t = static_cast<double>(s) * dt;
    WaveFunction w{g, psi};
    const double drift = std::abs(norm_squared(w) - n0);
    if (!std::isfinite(drift) || drift > 1e-10 * std::max(1.0, t)) {
      throw NumericalError("evolve_pure: norm drift " + fmt(drift) + " at t = " + fmt(t) + " exceeds 1e-10 per unit time");
    }
    if (s % cfg.stride == 0 || s == cfg.steps) {
      out.times.push_back(t);
      out.states.push_back(std::move(w));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Alpha-representation generator

class AlphaGenerator {
 public:
  AlphaGenerator(const HamiltonianSpec& h, double alpha, const PhaseGrid& grid) : h_(h), alpha_(alpha), grid_(grid) {
    h.validate();
    if (!std::isfinite(alpha)) throw ValidationError("alpha_generator: alpha must be finite");
    const int deg = h.potential_degree();
    for (int k = 1; k <= deg; ++k) {
      const double d = std::pow(-alpha, k) - std::pow(1.0 - alpha, k);
      series_.push_back(d / factorial(k));
    }
    const std::size_t n = grid.n();
    kinetic_.resize(n * n);
    potential_.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = wavenumber(i, n, grid.dq());
      const double u_odd = i == n / 2 ? 0.0 : u;  // odd powers vanish at Nyquist
      for (std::size_t j = 0; j < n; ++j)
        kinetic_[i * n + j] = kinetic_symbol(u_odd, u, grid.p(j));
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double v = wavenumber(j, n, grid.dp());
        potential_[i * n + j] = potential_symbol(grid.q(i), v, j == n / 2);
        max_potential_ = std::max(max_potential_, std::abs(potential_[i * n + j]));
      }
  }

  double alpha() const { return alpha_; }
  const PhaseGrid& grid() const { return grid_; }

  /// Coefficient of V^(n)(q) d_p^n in H_alpha.
  cplx series_coefficient(int n) const {
    if (n < 1 || n > static_cast<int>(series_.size())) return 0.0;
    return series_[static_cast<std::size_t>(n - 1)] * std::pow(-kI * grid_.hbar, n);
  }

  /// Largest |potential symbol| / hbar on the grid: the rate that limits explicit steps.
  double stiff_rate() const { return max_potential_ / grid_.hbar; }

  Field apply_kinetic(const Field& f) const { return multiply(f, 0, kinetic_, [](cplx s) { return s; }); }
  Field apply_potential(const Field& f) const { return multiply(f, 1, potential_, [](cplx s) { return s; }); }
  Field apply(const Field& f) const { return apply_kinetic(f) + apply_potential(f); }

  /// Tabulated exp(-i K tau / hbar) and exp(-i P tau / hbar), reusable across steps.
  std::vector<cplx> kinetic_propagator(double tau) const { return exponentiate(kinetic_, tau); }
  std::vector<cplx> potential_propagator(double tau) const { return exponentiate(potential_, tau); }

  /// Multiplies along axis 0 (kinetic) or 1 (potential) by a tabulated propagator.
  Field propagate(const Field& f, int axis, const std::vector<cplx>& table) const {
    return multiply(f, axis, table, [](cplx s) { return s; });
  }
  Field propagate_kinetic(const Field& f, double tau) const { return propagate(f, 0, kinetic_propagator(tau)); }
  Field propagate_potential(const Field& f, double tau) const { return propagate(f, 1, potential_propagator(tau)); }

 private:
  cplx kinetic_symbol(double u_odd, double u, double p) const {
    const double hbar = grid_.hbar, m = h_.mass;
    return hbar * p * u_odd / m + hbar * hbar * (1.0 - 2.0 * alpha_) * u * u / (2.0 * m);
  }
  cplx potential_symbol(double q, double v, bool nyquist) const {
    cplx s = 0.0;
    const double hv = grid_.hbar * v;
    for (std::size_t k = 0; k < series_.size(); ++k) {
      const int order = static_cast<int>(k) + 1;
      if (nyquist && order % 2 == 1) continue;
      s += series_[k] * std::pow(hv, order) * h_.potential_derivative(order, q);
    }
    return s;
  }

  std::vector<cplx> exponentiate(const std::vector<cplx>& symbol, double tau) const {
    std::vector<cplx> out(symbol.size());
    for (std::size_t k = 0; k < symbol.size(); ++k) out[k] = std::exp(-kI * symbol[k] * tau / grid_.hbar);
    return out;
  }

  template <class Map>
  Field multiply(const Field& f, int axis, const std::vector<cplx>& symbol, Map&& map) const {
    const std::size_t n = grid_.n();
    Field out(f);
    fft::transform_axis(out.data(), n, n, axis, fft::Direction::forward);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n * n; ++k) out.raw()[k] *= map(symbol[k]) * scale;
    fft::transform_axis(out.data(), n, n, axis, fft::Direction::backward);
    return out;
  }

  HamiltonianSpec h_;
  double alpha_;
  PhaseGrid grid_;
  std::vector<double> series_;  // [(-a)^n - (1-a)^n] / n!, n = 1..deg V
  std::vector<cplx> kinetic_, potential_;
  double max_potential_ = 0.0;
};

inline AlphaGenerator alpha_generator(const HamiltonianSpec& h, double alpha, const PhaseGrid& grid) {
  return AlphaGenerator(h, alpha, grid);
}

/// Evolves chi_alpha under H_alpha. rk4: Lawson RK4 (kinetic part exact); split_step:
/// Strang splitting of the two diagonal parts.
inline Trajectory<PhaseState> evolve_alpha(const PhaseState& chi0, const HamiltonianSpec& h, double alpha,
                                           const EvolutionConfig& cfg) {
  cfg.validate();
  if (std::abs(chi0.alpha - alpha) > 1e-12) {
    throw ValidationError("evolve_alpha: state is in representation alpha = " + fmt(chi0.alpha) + ", not " + fmt(alpha));
  }
  const AlphaGenerator gen(h, alpha, chi0.grid());
  const double dt = cfg.dt;
  if (cfg.scheme == Scheme::rk4) detail::check_stability(gen.stiff_rate(), dt, "evolve_alpha");
  const cplx total0 = integrate_2d(chi0.values);
  const double hbar = chi0.grid().hbar;

  Trajectory<PhaseState> out;
  out.times.push_back(0.0);
  out.states.push_back(chi0);
  Field chi = chi0.values;
  const bool split = cfg.scheme == Scheme::split_step;
  const auto half_k = gen.kinetic_propagator(0.5 * dt);
  const auto full_k = split ? gen.kinetic_propagator(dt) : std::vector<cplx>{};
  const auto half_p = split ? gen.potential_propagator(0.5 * dt) : std::vector<cplx>{};
  for (std::size_t s = 1; s <= cfg.steps; ++s) {
    if (split) {
      chi = gen.propagate(gen.propagate(gen.propagate(chi, 1, half_p), 0, full_k), 1, half_p);
    } else {
      auto half = [&](const Field& f) { return gen.propagate(f, 0, half_k); };
      auto nl = [&](const Field& f) { return gen.apply_potential(f) * (-kI / hbar); };
      chi = detail::lawson_rk4_step(chi, dt, half, nl);
    }
    const double t = static_cast<double>(s) * dt;
    const double drift = std::abs(integrate_2d(chi) - total0);
    if (!std::isfinite(drift) || drift > 1e-8 * std::max(1.0, t) * std::max(1.0, std::abs(total0))) {
      throw NumericalError("evolve_alpha: normalization drift " + fmt(drift) + " at t = " + fmt(t));
    }
    if (s % cfg.stride == 0 || s == cfg.steps) {
      out.times.push_back(t);
      out.states.push_back(PhaseState{chi, alpha, chi0.representation});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Density matrices

struct VonNeumannTolerance {
  double per_unit_time = 1e-9;
};

/// i hbar dA/dt = [H, A], RK4. Hermiticity, trace, positivity and purity are checked
/// at every recorded step against tol * max(1, t).
inline Trajectory<DensityMatrix> von_neumann_evolve(const DensityMatrix& a0, const Eigen::MatrixXcd& hmat,
                                                    const EvolutionConfig& cfg, double hbar = 1.0,
                                                    VonNeumannTolerance tol = {}) {
  cfg.validate();
  const DensityReport r0 = validate_density(a0);
  if (!r0.valid()) throw ValidationError("von_neumann_evolve: invalid initial density matrix (" + r0.failures() + ")");
  if (hmat.rows() != a0.dim() || hmat.cols() != a0.dim()) {
    throw ValidationError("von_neumann_evolve: Hamiltonian is " + std::to_string(hmat.rows()) + "x" +
                          std::to_string(hmat.cols()) + ", density matrix is " + std::to_string(a0.dim()));
  }
  if ((hmat - hmat.adjoint()).cwiseAbs().maxCoeff() > 1e-10) throw ValidationError("von_neumann_evolve: H is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hmat, Eigen::EigenvaluesOnly);
  const double spread = es.eigenvalues().maxCoeff() - es.eigenvalues().minCoeff();
  if (spread > 0.0) detail::check_stability(spread / hbar, cfg.dt, "von_neumann_evolve", kPlainRk4StabilityBound);

  const cplx c = -kI / hbar;
  auto rhs = [&](const Eigen::MatrixXcd& a) -> Eigen::MatrixXcd { return c * (hmat * a - a * hmat); };
  const double dt = cfg.dt;
  Trajectory<DensityMatrix> out;
  out.times.push_back(0.0);
  out.states.push_back(a0);
  Eigen::MatrixXcd a = a0.entries;
  for (std::size_t s = 1; s <= cfg.steps; ++s) {
    const Eigen::MatrixXcd k1 = rhs(a);
    const Eigen::MatrixXcd k2 = rhs(a + 0.5 * dt * k1);
    const Eigen::MatrixXcd k3 = rhs(a + 0.5 * dt * k2);
    const Eigen::MatrixXcd k4 = rhs(a + dt * k3);
    a += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (s % cfg.stride != 0 && s != cfg.steps) continue;
    const double t = static_cast<double>(s) * dt;
    const double bound = tol.per_unit_time * std::max(1.0, t);
    const DensityReport r = validate_density(a, DensityTolerance{bound, -bound, bound});
    const double purity_drift = std::abs(r.purity - r0.purity);
    if (!r.valid() || purity_drift > bound) {
      std::string what = r.failures();
      if (purity_drift > bound) what += (what.empty() ? "" : ", ") + std::string("purity drift ") + fmt(purity_drift);
      throw NumericalError("von_neumann_evolve: tolerance breach at t = " + fmt(t) + " (" + what + ")");
    }
    out.times.push_back(t);
    out.states.push_back(DensityMatrix(a));
  }
  return out;
}

inline Trajectory<DensityMatrix> von_neumann_evolve(const DensityMatrix& a0, const OperatorMatrix& h,
                                                    const EvolutionConfig& cfg, VonNeumannTolerance tol = {}) {
  return von_neumann_evolve(a0, h.entries, cfg, h.basis.grid.hbar, tol);
}

// ---------------------------------------------------------------------------
// Classical limit

/// max over the grid of |d chi/dt + (p/m) d_q chi - V'(q) d_p chi| at each interior
/// trajectory point, with fourth-order centered time differences. Entry k belongs to
/// trajectory index k + 2.
inline std::vector<double> liouville_residual(const Trajectory<PhaseState>& traj, const HamiltonianSpec& h) {
  const std::size_t count = traj.states.size();
  if (count < 5) throw ValidationError("liouville_residual: need at least 5 trajectory points");
  const double dt = traj.times[1] - traj.times[0];
  for (std::size_t k = 1; k < count; ++k)
    if (std::abs(traj.times[k] - traj.times[k - 1] - dt) > 1e-9 * dt) {
      throw ValidationError("liouville_residual: trajectory times are not uniform");
    }
  const PhaseGrid& g = traj.states.front().grid();
  const std::size_t n = g.n();
  std::vector<double> out;
  for (std::size_t k = 2; k + 2 < count; ++k) {
    const Field& fm2 = traj.states[k - 2].values;
    const Field& fm1 = traj.states[k - 1].values;
    const Field& fp1 = traj.states[k + 1].values;
    const Field& fp2 = traj.states[k + 2].values;
    const Field& f = traj.states[k].values;
    const Field dq = field_derivative(f, 0, 1);
    const Field dp = field_derivative(f, 1, 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double vprime = h.potential_derivative(1, g.q(i));
      for (std::size_t j = 0; j < n; ++j) {
        const cplx dtf = (fm2(i, j) - 8.0 * fm1(i, j) + 8.0 * fp1(i, j) - fp2(i, j)) / (12.0 * dt);
        const cplx r = dtf + (g.p(j) / h.mass) * dq(i, j) - vprime * dp(i, j);
        worst = std::max(worst, std::abs(r));
      }
    }
    out.push_back(worst);
  }
  return out;
}

/// <H> in any alpha representation (H has no mixed q-p terms, so no compensation is needed).
inline double energy_expectation(const PhaseState& chi, const HamiltonianSpec& h) {
  return expect(chi, h.symbol()).real();
}

}  // namespace xphase
