#pragma once

// Thermal (Bloch) equation in phase space.
//
// Omega(q,p;beta) is the standard-ordered (alpha = 0) symbol of exp(-beta H); it obeys
//   -dOmega/dbeta = { H - (i p hbar/m) d_q - (hbar^2/2m) d_q^2 } Omega,   Omega(beta=0) = 1,
// and Z = (1/2 pi hbar) int Omega. The Weyl symbol obeys the symmetrized Wigner form.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xphase/errors.hpp"
#include "xphase/fft.hpp"
#include "xphase/hamiltonian.hpp"
#include "xphase/numerics.hpp"
#include "xphase/states.hpp"

namespace xphase {

/// Decay threshold for |Omega| on the grid boundary, relative to max |Omega|.
inline constexpr double kThermalDecayLimit = 1e-10;
/// Edge level (relative) above which an integrated Omega counts as not decayed. Looser than
/// kThermalDecayLimit: the standard-ordered generator barely damps Fourier modes with
/// u = -p/hbar, so the kink of Omega(beta=0) = 1 at the periodic seam leaves ~1e-6 noise at
/// large |p| that carries no weight in Z.
inline constexpr double kBlochGrowthLimit = 1e-4;
/// Agreement required between the integrated A, B, C and their closed forms.
inline constexpr double kBlochClosedFormTolerance = 1e-8;
/// RK4 is stable on the negative real axis for |lambda h| < 2.78.
inline constexpr double kBlochRk4Bound = 2.5;

/// Prefactor of Z in front of int Omega dq dp. The harmonic partition function carries
/// 1/(2 pi hbar); the linear-potential closed form is quoted without it.
inline double harmonic_z_prefactor(double hbar) { return 1.0 / (2.0 * pi * hbar); }
inline constexpr double kLinearZPrefactor = 1.0;

// ---------------------------------------------------------------------------
// Harmonic oscillator: Omega = exp[-A H - i B p q / hbar + C]

struct BlochCoefficients {
  double A = 0.0, B = 0.0, C = 0.0;
};

/// A = tanh(x)/(hbar omega), B = tanh(x) tanh(x/2), C = -ln cosh(x)/2 with x = beta hbar omega.
inline BlochCoefficients bloch_closed_form(double omega, double beta, double hbar = 1.0) {
  const double x = beta * hbar * omega;
  // ln cosh x without overflow for large x.
  const double lncosh = std::abs(x) + std::log1p(std::exp(-2.0 * std::abs(x))) - std::log(2.0);
  return {std::tanh(x) / (hbar * omega), std::tanh(x) * std::tanh(0.5 * x), -0.5 * lncosh};
}

/// dA/dbeta = 1 - (hbar omega A)^2, dB/dbeta = (hbar omega)^2 A (1 - B), dC/dbeta = -(hbar omega)^2 A / 2.
inline BlochCoefficients bloch_ode_rhs(const BlochCoefficients& y, double omega, double hbar) {
  const double w2 = hbar * hbar * omega * omega;
  return {1.0 - w2 * y.A * y.A, w2 * y.A * (1.0 - y.B), -0.5 * w2 * y.A};
}

struct BlochHarmonicSolution {
  double omega = 1.0;
  double beta = 0.0;
  double hbar = 1.0;
  std::size_t steps = 0;
  BlochCoefficients numeric;
  BlochCoefficients closed;

  double max_disagreement() const {
    return std::max({std::abs(numeric.A - closed.A), std::abs(numeric.B - closed.B), std::abs(numeric.C - closed.C)});
  }
};

/// Integrates the coefficient ODEs from A = B = C = 0 with RK4 and compares with the closed forms.
inline BlochHarmonicSolution solve_bloch_harmonic(double omega, double beta, double hbar = 1.0, std::size_t steps = 0) {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw ValidationError("solve_bloch_harmonic: omega must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("solve_bloch_harmonic: beta must be positive");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw ValidationError("solve_bloch_harmonic: hbar must be positive");
  // Step in units of 1/(hbar omega) small enough for a 1e-10 RK4 error.
  if (steps == 0) steps = std::max<std::size_t>(1000, static_cast<std::size_t>(std::ceil(400.0 * beta * hbar * omega)));
  const double h = beta / static_cast<double>(steps);
  auto axpy = [](const BlochCoefficients& y, double s, const BlochCoefficients& k) {
    return BlochCoefficients{y.A + s * k.A, y.B + s * k.B, y.C + s * k.C};
  };
  BlochCoefficients y;
  for (std::size_t s = 0; s < steps; ++s) {
    const auto k1 = bloch_ode_rhs(y, omega, hbar);
    const auto k2 = bloch_ode_rhs(axpy(y, 0.5 * h, k1), omega, hbar);
    const auto k3 = bloch_ode_rhs(axpy(y, 0.5 * h, k2), omega, hbar);
    const auto k4 = bloch_ode_rhs(axpy(y, h, k3), omega, hbar);
    y.A += h / 6.0 * (k1.A + 2.0 * k2.A + 2.0 * k3.A + k4.A);
    y.B += h / 6.0 * (k1.B + 2.0 * k2.B + 2.0 * k3.B + k4.B);
    y.C += h / 6.0 * (k1.C + 2.0 * k2.C + 2.0 * k3.C + k4.C);
  }
  BlochHarmonicSolution out{omega, beta, hbar, steps, y, bloch_closed_form(omega, beta, hbar)};
  if (!(out.max_disagreement() <= kBlochClosedFormTolerance)) {
    throw NumericalError("solve_bloch_harmonic: integrated coefficients differ from the closed forms by " +
                         fmt(out.max_disagreement()));
  }
  return out;
}

/// Z = 1 / (2 sinh(beta hbar omega / 2)).
inline double harmonic_partition_closed(double omega, double beta, double hbar = 1.0) {
  return 1.0 / (2.0 * std::sinh(0.5 * beta * hbar * omega));
}

/// Omega from the closed-form coefficients, sampled on a grid.
inline Field harmonic_omega_field(const HamiltonianSpec& h, double beta, const PhaseGrid& grid) {
  if (h.kind != PotentialKind::harmonic) throw ValidationError("harmonic_omega_field: hamiltonian must be harmonic");
  const auto c = bloch_closed_form(h.omega, beta, grid.hbar);
  const double hbar = grid.hbar;
  return Field::from_function(grid, [&](double q, double p) {
    return std::exp(-c.A * h.energy(q, p) - kI * c.B * p * q / hbar + c.C);
  });
}

/// Weyl symbol of exp(-beta H) for the oscillator: exp[-(2/hbar omega) tanh(x/2) H] / cosh(x/2).
inline Field harmonic_wigner_omega_field(const HamiltonianSpec& h, double beta, const PhaseGrid& grid) {
  if (h.kind != PotentialKind::harmonic) throw ValidationError("harmonic_wigner_omega_field: hamiltonian must be harmonic");
  const double x = beta * grid.hbar * h.omega;
  const double a = 2.0 * std::tanh(0.5 * x) / (grid.hbar * h.omega);
  return Field::from_function(grid, [&](double q, double p) { return cplx(std::exp(-a * h.energy(q, p)) / std::cosh(0.5 * x)); });
}

// ---------------------------------------------------------------------------
// Thermal states and partition functions

struct ThermalState {
  Field omega_field;
  double beta = 0.0;
  double Z = 0.0;

  const PhaseGrid& grid() const { return omega_field.grid(); }
  /// chi = Omega / (2 pi hbar Z).
  Field chi() const { return omega_field * cplx(1.0 / (2.0 * pi * grid().hbar * Z)); }
};

/// (1/2 pi hbar) int Omega dq dp. Rejects fields that have not decayed at the grid boundary.
inline double partition_function(const Field& omega, bool check_decay = true) {
  if (check_decay) {
    const double edge = boundary_ratio(omega);
    if (!(edge <= kThermalDecayLimit)) {
      throw ValidationError("partition_function: Omega has not decayed at the grid boundary (edge/max = " + fmt(edge) +
                            " > " + fmt(kThermalDecayLimit) + "); enlarge the grid");
    }
  }
  return (harmonic_z_prefactor(omega.grid().hbar) * integrate_2d(omega)).real();
}

inline double partition_function(const ThermalState& state, bool check_decay = true) {
  return partition_function(state.omega_field, check_decay);
}

/// Grid on which exp(-A H) decays to ~e^{-27} at the edges and exp(-i B pq/hbar) is resolved.
inline PhaseGrid harmonic_thermal_grid(const HamiltonianSpec& h, double beta, double hbar = 1.0, std::size_t max_points = 2048) {
  if (h.kind != PotentialKind::harmonic) throw ValidationError("harmonic_thermal_grid: hamiltonian must be harmonic");
  const auto c = bloch_closed_form(h.omega, beta, hbar);
  const double cut = 27.0;
  const double lq = std::sqrt(2.0 * cut / (c.A * h.mass * h.omega * h.omega));
  const double lp = std::sqrt(2.0 * cut * h.mass / c.A);
  // p_max = pi hbar n / (2 lq) must reach 2 lp.
  const double need = 4.0 * lq * lp / (pi * hbar);
  std::size_t n = 64;
  while (static_cast<double>(n) < need) n *= 2;
  if (n > max_points) {
    throw ValidationError("harmonic_thermal_grid: beta hbar omega = " + fmt(beta * hbar * h.omega) + " needs " +
                          std::to_string(n) + " points per axis (limit " + std::to_string(max_points) + ")");
  }
  return make_phase_grid(n, -lq, lq, hbar);
}

/// Closed-form Omega on a grid, with Z from quadrature.
inline ThermalState harmonic_thermal_state(const HamiltonianSpec& h, double beta, const PhaseGrid& grid) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("harmonic_thermal_state: beta must be positive");
  ThermalState s{harmonic_omega_field(h, beta, grid), beta, 0.0};
  s.Z = partition_function(s);
  return s;
}

/// Sum of exp(-beta E_n) over the lowest `count` levels of a spectral diagonalization.
inline double eigenvalue_partition_function(const HamiltonianSpec& h, double beta, const PhaseGrid& grid, std::size_t count = 50) {
  const auto basis = spectral_eigenbasis(grid, h.mass, [&](double q) { return h.potential(q); }, count);
  double z = 0.0;
  for (double e : *basis.energies) z += std::exp(-beta * e);
  return z;
}

// ---------------------------------------------------------------------------
// Temperature limits

struct ThermalLimits {
  Field chi;               // Omega / (2 pi hbar Z), closed forms
  Field quantum_limit;     // exp(-H/hbar omega - i p q / hbar) / (sqrt(2) pi hbar)
  Field classical_limit;   // (beta omega / 2 pi) exp(-beta H)
  double quantum_deviation = 0.0;    // max |chi - quantum| / |quantum| on the bulk
  double classical_deviation = 0.0;  // max |Re chi - classical| / classical on the bulk
};

/// Compares chi with both limiting forms on the bulk, where the limit being tested
/// is at least e^{-3} of its maximum. The grid covers that bulk; it need not
/// contain the full decay.
inline ThermalLimits thermal_limits(const HamiltonianSpec& h, double beta, double hbar = 1.0) {
  if (h.kind != PotentialKind::harmonic) throw ValidationError("thermal_limits: hamiltonian must be harmonic");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("thermal_limits: beta must be positive");
  const auto c = bloch_closed_form(h.omega, beta, hbar);
  const double m = h.mass, w = h.omega;
  // Bulk: A H <= 3 (a margin of 1.2 on each axis).
  const double lq = 1.2 * std::sqrt(6.0 / (c.A * m * w * w));
  const double lp = 1.2 * std::sqrt(6.0 * m / c.A);
  std::size_t n = 64;
  while (static_cast<double>(n) < 2.0 * lq * lp / (pi * hbar)) n *= 2;
  if (n > 4096) throw ValidationError("thermal_limits: bulk grid too large for beta = " + fmt(beta));
  const PhaseGrid g = make_phase_grid(n, -lq, lq, hbar);
  const double z = harmonic_partition_closed(w, beta, hbar);

  ThermalLimits out;
  out.chi = Field::from_function(g, [&](double q, double p) {
    return std::exp(-c.A * h.energy(q, p) - kI * c.B * p * q / hbar + c.C) / (2.0 * pi * hbar * z);
  });
  out.quantum_limit = Field::from_function(g, [&](double q, double p) {
    return std::exp(-h.energy(q, p) / (hbar * w) - kI * p * q / hbar) / (std::sqrt(2.0) * pi * hbar);
  });
  out.classical_limit = Field::from_function(g, [&](double q, double p) {
    return cplx(beta * w / (2.0 * pi) * std::exp(-beta * h.energy(q, p)));
  });
  const double qmax = out.quantum_limit.max_abs(), cmax = out.classical_limit.max_abs();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const cplx x = out.chi.raw()[k], ql = out.quantum_limit.raw()[k], cl = out.classical_limit.raw()[k];
    if (std::abs(ql) >= std::exp(-3.0) * qmax)
      out.quantum_deviation = std::max(out.quantum_deviation, std::abs(x - ql) / std::abs(ql));
    if (std::abs(cl) >= std::exp(-3.0) * cmax)
      out.classical_deviation = std::max(out.classical_deviation, std::abs(x.real() - cl.real()) / cl.real());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bloch generators on a periodic grid

enum class BlochRoute { standard, wigner };

enum class WignerBlochForm {
  symmetric,   // (H * Omega + Omega * H)/2: even orders only
  as_printed,  // one-sided series in V, all orders, without the -(i hbar/2)(p/m) d_q term
};

/// Tabulated Bloch generator on a periodic grid.
///  standard: -dOmega/dbeta = { H - (i p hbar/m) d_q - (hbar^2/2m) d_q^2 } Omega; both q-derivative
///            terms act in Fourier space with symbol p hbar u / m + hbar^2 u^2 / 2m.
///  wigner:   -dOmega_W/dbeta = { H - (hbar^2/8m) d_q^2 + sum_n (i hbar/2)^n/n! V^(n) d_p^n } Omega_W.
class BlochGenerator {
 public:
  BlochGenerator(const HamiltonianSpec& h, const PhaseGrid& g, BlochRoute route,
                 WignerBlochForm form = WignerBlochForm::symmetric, int series_order = -1)
      : grid_(g), route_(route) {
    h.validate();
    const std::size_t n = g.n();
    const double hbar = g.hbar, m = h.mass;
    energy_.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) energy_[i * n + j] = h.energy(g.q(i), g.p(j));
    q_symbol_.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = wavenumber(i, n, g.dq());
      const double u_odd = i == n / 2 ? 0.0 : u;
      for (std::size_t j = 0; j < n; ++j)
        q_symbol_[i * n + j] = route == BlochRoute::standard ? hbar * g.p(j) * u_odd / m + hbar * hbar * u * u / (2.0 * m)
                                                             : hbar * hbar * u * u / (8.0 * m);
    }
    double vmax = 0.0, smax = 0.0;
    for (std::size_t i = 0; i < n; ++i) vmax = std::max(vmax, std::abs(h.potential(g.q(i))));
    if (route == BlochRoute::wigner) {
      const int top = series_order < 0 ? h.potential_degree() : std::min(series_order, h.potential_degree());
      p_symbol_.resize(n * n);
      // (i hbar/2)^k (i v)^k = (-hbar v/2)^k, real.
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> c(static_cast<std::size_t>(std::max(top, 0)) + 1, 0.0);
        for (int k = 1; k <= top; ++k) {
          if (form == WignerBlochForm::symmetric && k % 2 == 1) continue;
          c[static_cast<std::size_t>(k)] = h.potential_derivative(k, g.q(i)) / factorial(k);
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double x = -0.5 * hbar * wavenumber(j, n, g.dp());
          double s = 0.0, xp = x;
          for (int k = 1; k <= top; ++k, xp *= x)
            if (!(k % 2 == 1 && j == n / 2)) s += c[static_cast<std::size_t>(k)] * xp;
          p_symbol_[i * n + j] = s;
          smax = std::max(smax, std::abs(s));
        }
      }
    }
    double qmax = 0.0, emax = 0.0;
    for (double v : q_symbol_) qmax = std::max(qmax, std::abs(v));
    for (double v : energy_) emax = std::max(emax, std::abs(v));
    // Standard route: the combined symbol is V + (p + hbar u)^2 / 2m.
    rate_ = route == BlochRoute::standard ? vmax + qmax + emax : emax + qmax + smax;
  }

  /// Upper bound on the generator's spectral radius.
  double rate() const { return rate_; }

  Field apply(const Field& f) const {
    if (!(f.grid() == grid_)) throw ValidationError("bloch generator: field grid does not match");
    const std::size_t n = grid_.n();
    const double scale = 1.0 / static_cast<double>(n);
    Field out(f);
    fft::transform_axis(out.data(), n, n, 0, fft::Direction::forward);
    for (std::size_t k = 0; k < n * n; ++k) out.raw()[k] *= q_symbol_[k] * scale;
    fft::transform_axis(out.data(), n, n, 0, fft::Direction::backward);
    if (route_ == BlochRoute::wigner) {
      Field dp(f);
      fft::transform_axis(dp.data(), n, n, 1, fft::Direction::forward);
      for (std::size_t k = 0; k < n * n; ++k) dp.raw()[k] *= p_symbol_[k] * scale;
      fft::transform_axis(dp.data(), n, n, 1, fft::Direction::backward);
      out += dp;
    }
    for (std::size_t k = 0; k < n * n; ++k) out.raw()[k] += energy_[k] * f.raw()[k];
    return out;
  }

 private:
  PhaseGrid grid_;
  BlochRoute route_;
  std::vector<double> energy_, q_symbol_, p_symbol_;
  double rate_ = 0.0;
};

/// -dOmega/dbeta for the standard-ordered symbol (exactly second order in d_q for any V).
inline Field bloch_rhs(const Field& omega, const HamiltonianSpec& h) {
  return BlochGenerator(h, omega.grid(), BlochRoute::standard).apply(omega);
}

/// -dOmega_W/dbeta for the Weyl symbol. series_order < 0 means the full series (it
/// terminates at deg V).
inline Field bloch_wigner_rhs(const Field& omega_w, const HamiltonianSpec& h, WignerBlochForm form = WignerBlochForm::symmetric,
                              int series_order = -1) {
  return BlochGenerator(h, omega_w.grid(), BlochRoute::wigner, form, series_order).apply(omega_w);
}

// ---------------------------------------------------------------------------
// Numerical beta integration

struct BlochNumericConfig {
  std::size_t steps = 1000;
  BlochRoute route = BlochRoute::standard;
  WignerBlochForm form = WignerBlochForm::symmetric;
  bool richardson = true;  // also integrate with 2*steps for an error estimate
};

struct BlochNumericResult {
  ThermalState state;         // Omega from `steps`; Z from the Richardson value when available
  double z_steps = 0.0;       // Z with `steps`
  double z_double = 0.0;      // Z with 2*steps (0 if not computed)
  double error_estimate = 0.0;
};

namespace detail {

inline Field bloch_integrate(const HamiltonianSpec& h, double beta, const PhaseGrid& g, std::size_t steps,
                             const BlochNumericConfig& cfg) {
  Field omega(g, cplx(1.0));
  if (steps == 0 || beta == 0.0) return omega;
  const double dbeta = beta / static_cast<double>(steps);
  const BlochGenerator gen(h, g, cfg.route, cfg.form);
  auto f = [&](const Field& x) { return gen.apply(x) * cplx(-1.0); };
  for (std::size_t s = 0; s < steps; ++s) {
    const Field k1 = f(omega);
    const Field k2 = f(omega + k1 * cplx(0.5 * dbeta));
    const Field k3 = f(omega + k2 * cplx(0.5 * dbeta));
    const Field k4 = f(omega + k3 * cplx(dbeta));
    omega += (k1 + (k2 + k3) * cplx(2.0) + k4) * cplx(dbeta / 6.0);
  }
  if (!std::isfinite(omega.max_abs())) throw NumericalError("solve_bloch_numeric: Omega is not finite");
  return omega;
}

}  // namespace detail

/// Fewest RK4 steps the stability bound allows for this grid.
inline std::size_t bloch_min_steps(const HamiltonianSpec& h, double beta, const PhaseGrid& grid, BlochRoute route = BlochRoute::standard,
                                   WignerBlochForm form = WignerBlochForm::symmetric) {
  return static_cast<std::size_t>(std::ceil(beta * BlochGenerator(h, grid, route, form).rate() / kBlochRk4Bound));
}

/// RK4 in beta from Omega = 1. Linear potentials are rejected: exp(-beta k q) grows without
/// bound for q < 0 on a full-line grid (use bloch_linear / solve_bloch_linear).
inline BlochNumericResult solve_bloch_numeric(const HamiltonianSpec& h, double beta, const PhaseGrid& grid,
                                              const BlochNumericConfig& cfg = {}) {
  h.validate();
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("solve_bloch_numeric: beta must be >= 0");
  if (h.kind == PotentialKind::linear) {
    throw ValidationError("solve_bloch_numeric: linear potential has no decay for q < 0 on a full-line grid; use the half-line path");
  }
  if (beta > 0.0 && cfg.steps == 0) throw ValidationError("solve_bloch_numeric: steps must be positive for beta > 0");
  if (beta > 0.0) {
    const double rate = BlochGenerator(h, grid, cfg.route, cfg.form).rate();
    const double dbeta = beta / static_cast<double>(cfg.steps);
    if (rate * dbeta > kBlochRk4Bound) {
      throw ValidationError("solve_bloch_numeric: steps = " + std::to_string(cfg.steps) + " too few; need at least " +
                            std::to_string(static_cast<std::size_t>(std::ceil(beta * rate / kBlochRk4Bound))) +
                            " for this grid");
    }
  }
  BlochNumericResult out;
  out.state.beta = beta;
  out.state.omega_field = detail::bloch_integrate(h, beta, grid, cfg.steps, cfg);
  const bool decay = beta > 0.0;
  if (decay) {
    const double edge = boundary_ratio(out.state.omega_field);
    if (!(edge <= kBlochGrowthLimit)) {
      throw NumericalError("solve_bloch_numeric: Omega has not decayed at the grid boundary (edge/max = " + fmt(edge) + ")");
    }
  }
  out.z_steps = partition_function(out.state.omega_field, false);
  out.state.Z = out.z_steps;
  if (cfg.richardson && beta > 0.0) {
    out.z_double = partition_function(detail::bloch_integrate(h, beta, grid, 2 * cfg.steps, cfg), false);
    out.error_estimate = std::abs(out.z_double - out.z_steps) / 15.0;
    out.state.Z = out.z_double + (out.z_double - out.z_steps) / 15.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear potential on the half line q >= 0

/// Samples on q in [0, q_max] (closed, Simpson in q) times a periodic p grid.
struct HalfLineField {
  std::vector<double> q;
  std::vector<double> p;
  std::vector<cplx> values;  // row-major, q outer

  cplx& operator()(std::size_t i, std::size_t j) { return values[i * p.size() + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return values[i * p.size() + j]; }
  double dq() const { return q[1] - q[0]; }
  double dp() const { return p[1] - p[0]; }

  /// Composite Simpson in q, trapezoid (periodic) in p.
  cplx integrate() const {
    const std::size_t nq = q.size(), np = p.size();
    cplx total = 0.0;
    for (std::size_t i = 0; i < nq; ++i) {
      const double w = (i == 0 || i + 1 == nq) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      cplx row = 0.0;
      for (std::size_t j = 0; j < np; ++j) row += (*this)(i, j);
      total += w * row;
    }
    return total * (dq() / 3.0) * dp();
  }
};

struct LinearBlochSpec {
  double k = 1.0, mass = 1.0, beta = 1.0, hbar = 1.0;
  std::size_t q_points = 2049;  // odd, for Simpson
  std::size_t p_points = 256;

  void validate() const {
    if (!(k > 0.0) || !std::isfinite(k)) throw ValidationError("bloch_linear: k must be positive");
    if (!(mass > 0.0) || !std::isfinite(mass)) throw ValidationError("bloch_linear: mass must be positive");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("bloch_linear: beta must be positive");
    if (!(hbar > 0.0) || !std::isfinite(hbar)) throw ValidationError("bloch_linear: hbar must be positive");
    if (q_points < 9 || q_points % 2 == 0) throw ValidationError("bloch_linear: q_points must be odd and >= 9");
    if (p_points < 8 || p_points % 2 == 1) throw ValidationError("bloch_linear: p_points must be even and >= 8");
  }
  /// exp(-beta k q_max) = 1e-12.
  double q_max() const { return 12.0 * std::log(10.0) / (beta * k); }
  /// Momentum half-width: exp(-beta p^2 / 2m) below 1e-16 at the edge.
  double p_max() const { return std::sqrt(2.0 * mass * 37.0 / beta); }
};

struct LinearBlochResult {
  HalfLineField omega;
  double z_numeric = 0.0;      // kLinearZPrefactor * int Omega over q >= 0
  double z_closed = 0.0;       // sqrt(2 pi m / beta^3 k^2) exp(beta^3 hbar^2 k^2 / 24 m)
  double chi_integral = 0.0;   // int chi with chi = sqrt(beta^3 k^2/2 pi m) exp[... + beta^3 hbar^2 k^2 / 8m]
  double residual = 0.0;       // max |bloch_rhs(Omega) + dOmega/dbeta| / max |dOmega/dbeta|, interior points
};

inline double linear_partition_closed(double k, double mass, double beta, double hbar = 1.0) {
  return std::sqrt(2.0 * pi * mass / (beta * beta * beta * k * k)) *
         std::exp(beta * beta * beta * hbar * hbar * k * k / (24.0 * mass));
}

namespace detail {

/// Weights of the 7-point, 6th-order finite-difference stencil for d^order/dq^order at
/// offset position `at` within the stencil (0..6, 3 = centered), unit spacing.
inline std::array<double, 7> fd_weights(int at, int order) {
  Eigen::Matrix<double, 7, 7> a;
  Eigen::Matrix<double, 7, 1> b = Eigen::Matrix<double, 7, 1>::Zero();
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 7; ++c) a(r, c) = std::pow(static_cast<double>(c - at), r) / factorial(r);
  b(order) = 1.0;
  const Eigen::Matrix<double, 7, 1> w = a.fullPivLu().solve(b);
  std::array<double, 7> out{};
  for (int c = 0; c < 7; ++c) out[static_cast<std::size_t>(c)] = w(c);
  return out;
}

/// d^order/dq^order along the q axis of a half-line field; one-sided stencils at the ends.
inline HalfLineField fd_q_derivative(const HalfLineField& f, int order) {
  const std::size_t nq = f.q.size(), np = f.p.size();
  HalfLineField out{f.q, f.p, std::vector<cplx>(f.values.size())};
  const double scale = std::pow(f.dq(), -order);
  std::array<std::array<double, 7>, 7> w;
  for (int at = 0; at < 7; ++at) w[static_cast<std::size_t>(at)] = fd_weights(at, order);
  for (std::size_t i = 0; i < nq; ++i) {
    const std::size_t start = i < 3 ? 0 : (i + 3 >= nq ? nq - 7 : i - 3);
    const auto& wi = w[i - start];
    for (std::size_t j = 0; j < np; ++j) {
      cplx s = 0.0;
      for (std::size_t c = 0; c < 7; ++c) s += wi[c] * f(start + c, j);
      out(i, j) = s * scale;
    }
  }
  return out;
}

inline HalfLineField half_line_grid(const LinearBlochSpec& s) {
  HalfLineField f;
  f.q.resize(s.q_points);
  f.p.resize(s.p_points);
  const double qm = s.q_max(), pm = s.p_max();
  for (std::size_t i = 0; i < s.q_points; ++i) f.q[i] = qm * static_cast<double>(i) / static_cast<double>(s.q_points - 1);
  for (std::size_t j = 0; j < s.p_points; ++j)
    f.p[j] = -pm + 2.0 * pm * static_cast<double>(j) / static_cast<double>(s.p_points);
  f.values.assign(s.q_points * s.p_points, 0.0);
  return f;
}

}  // namespace detail

/// -dOmega/dbeta on the half line with finite differences in q (V = k q).
inline HalfLineField bloch_rhs_half_line(const HalfLineField& omega, double k, double mass, double hbar) {
  const auto d1 = detail::fd_q_derivative(omega, 1);
  const auto d2 = detail::fd_q_derivative(omega, 2);
  HalfLineField out{omega.q, omega.p, std::vector<cplx>(omega.values.size())};
  for (std::size_t i = 0; i < omega.q.size(); ++i)
    for (std::size_t j = 0; j < omega.p.size(); ++j) {
      const double q = omega.q[i], p = omega.p[j];
      out(i, j) = (p * p / (2.0 * mass) + k * q) * omega(i, j) - kI * p * hbar / mass * d1(i, j) -
                  hbar * hbar / (2.0 * mass) * d2(i, j);
    }
  return out;
}

/// Closed-form Omega for V = k q:
/// exp[-beta H - i beta^2 p hbar k / 2m + beta^3 hbar^2 k^2 / 6m].
inline HalfLineField linear_omega(const LinearBlochSpec& s) {
  auto f = detail::half_line_grid(s);
  const double b = s.beta, hb = s.hbar, m = s.mass, k = s.k;
  for (std::size_t i = 0; i < f.q.size(); ++i)
    for (std::size_t j = 0; j < f.p.size(); ++j) {
      const double q = f.q[i], p = f.p[j];
      f(i, j) = std::exp(-b * (p * p / (2.0 * m) + k * q) - kI * b * b * p * hb * k / (2.0 * m) + b * b * b * hb * hb * k * k / (6.0 * m));
    }
  return f;
}

/// Evaluates the linear-potential solution on the half line, its partition function by
/// quadrature, the normalization of chi and the Bloch-equation residual.
inline LinearBlochResult bloch_linear(const LinearBlochSpec& s) {
  s.validate();
  LinearBlochResult out;
  out.omega = linear_omega(s);
  const auto& f = out.omega;
  // Decay in q is built into q_max; check p.
  double pedge = 0.0, all = 0.0;
  for (std::size_t i = 0; i < f.q.size(); ++i) {
    pedge = std::max(pedge, std::abs(f(i, 0)));
    for (std::size_t j = 0; j < f.p.size(); ++j) all = std::max(all, std::abs(f(i, j)));
  }
  if (pedge > kThermalDecayLimit * all) throw NumericalError("bloch_linear: Omega not decayed at the momentum edge");

  out.z_numeric = kLinearZPrefactor * f.integrate().real();
  out.z_closed = linear_partition_closed(s.k, s.mass, s.beta, s.hbar);
  // chi = Omega / Z_closed carries exp(beta^3 hbar^2 k^2 (1/6 - 1/24)/m) = exp(beta^3 hbar^2 k^2 / 8m).
  out.chi_integral = (f.integrate() / out.z_closed).real();

  // Residual of the Bloch equation against the analytic beta derivative.
  const auto rhs = bloch_rhs_half_line(f, s.k, s.mass, s.hbar);
  const double b = s.beta, hb = s.hbar, m = s.mass, k = s.k;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 3; i + 3 < f.q.size(); ++i)
    for (std::size_t j = 0; j < f.p.size(); ++j) {
      const double p = f.p[j], q = f.q[i];
      // -dS/dbeta = H + i beta p hbar k / m - beta^2 hbar^2 k^2 / 2m
      const cplx exact = (p * p / (2.0 * m) + k * q + kI * b * p * hb * k / m - b * b * hb * hb * k * k / (2.0 * m)) * f(i, j);
      num = std::max(num, std::abs(rhs(i, j) - exact));
      den = std::max(den, std::abs(exact));
    }
  out.residual = den > 0.0 ? num / den : 0.0;
  return out;
}

struct LinearBlochNumeric {
  HalfLineField omega;
  std::size_t steps = 0;
  double z_numeric = 0.0;
  double z_closed = 0.0;
  double bulk_deviation = 0.0;  // max |Omega - closed| / max |closed| for q >= boundary_layer
  double boundary_layer = 0.0;
};

/// RK4 in beta from Omega = 1 on the half line, finite differences in q. No boundary
/// condition is imposed at q = 0: the one-sided stencils act as one, and leave a layer of
/// width ~ hbar sqrt(beta/m) where the result departs from the closed form at the 1e-4 level.
inline LinearBlochNumeric solve_bloch_linear(const LinearBlochSpec& s, std::size_t steps = 0) {
  s.validate();
  double g1 = 0.0, g2 = 0.0;
  for (int at = 0; at < 7; ++at) {
    double r1 = 0.0, r2 = 0.0;
    const auto w1 = detail::fd_weights(at, 1), w2 = detail::fd_weights(at, 2);
    for (std::size_t c = 0; c < 7; ++c) r1 += std::abs(w1[c]), r2 += std::abs(w2[c]);
    g1 = std::max(g1, r1);
    g2 = std::max(g2, r2);
  }
  HalfLineField f = detail::half_line_grid(s);
  const double dq = f.dq(), pm = s.p_max(), hb = s.hbar, m = s.mass;
  // Gershgorin bound on the discrete generator.
  const double rate = pm * pm / (2.0 * m) + s.k * s.q_max() + pm * hb / m * g1 / dq + hb * hb / (2.0 * m) * g2 / (dq * dq);
  const std::size_t need = static_cast<std::size_t>(std::ceil(s.beta * rate / kBlochRk4Bound));
  if (steps == 0) steps = need;
  if (steps < need) {
    throw ValidationError("solve_bloch_linear: steps = " + std::to_string(steps) + " too few; need at least " + std::to_string(need));
  }
  for (auto& v : f.values) v = 1.0;
  const double db = s.beta / static_cast<double>(steps);
  auto rate_of = [&](const HalfLineField& x) {
    auto r = bloch_rhs_half_line(x, s.k, m, hb);
    for (auto& v : r.values) v = -v;
    return r;
  };
  auto axpy = [](HalfLineField a, double c, const HalfLineField& b) {
    for (std::size_t k = 0; k < a.values.size(); ++k) a.values[k] += c * b.values[k];
    return a;
  };
  for (std::size_t st = 0; st < steps; ++st) {
    const auto k1 = rate_of(f);
    const auto k2 = rate_of(axpy(f, 0.5 * db, k1));
    const auto k3 = rate_of(axpy(f, 0.5 * db, k2));
    const auto k4 = rate_of(axpy(f, db, k3));
    for (std::size_t k = 0; k < f.values.size(); ++k)
      f.values[k] += db / 6.0 * (k1.values[k] + 2.0 * k2.values[k] + 2.0 * k3.values[k] + k4.values[k]);
  }
  LinearBlochNumeric out;
  out.steps = steps;
  out.z_numeric = kLinearZPrefactor * f.integrate().real();
  out.z_closed = linear_partition_closed(s.k, m, s.beta, hb);
  if (!std::isfinite(out.z_numeric)) throw NumericalError("solve_bloch_linear: Omega is not finite");
  out.boundary_layer = std::max(1.0, 2.0 * hb * std::sqrt(s.beta / m));
  const auto exact = linear_omega(s);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f.q.size(); ++i)
    for (std::size_t j = 0; j < f.p.size(); ++j) {
      den = std::max(den, std::abs(exact(i, j)));
      if (f.q[i] >= out.boundary_layer) num = std::max(num, std::abs(f(i, j) - exact(i, j)));
    }
  out.bulk_deviation = num / den;
  out.omega = std::move(f);
  return out;
}

}  // namespace xphase
