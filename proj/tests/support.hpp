#pragma once

// Shared oracles and fixtures for the test suites. Everything here is computed
// independently of the library routines it is used to check.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "xphase/numerics.hpp"

namespace xtest {

using xphase::cplx;
using xphase::pi;

/// Grid wide enough that the first ~10 oscillator states decay to round-off.
inline xphase::PhaseGrid standard_grid(double hbar = 1.0) { return xphase::make_phase_grid(256, -16.0, 16.0, hbar); }

/// Closed-form oscillator eigenfunction (hbar = m = omega = 1) via std::hermite.
inline double sho_closed(unsigned n, double q) {
  double fact = 1.0;
  for (unsigned k = 2; k <= n; ++k) fact *= k;
  const double norm = 1.0 / std::sqrt(std::pow(2.0, n) * fact * std::sqrt(pi));
  return norm * std::hermite(n, q) * std::exp(-0.5 * q * q);
}

inline xphase::WaveFunction sho_wave(const xphase::PhaseGrid& g, unsigned n) {
  xphase::WaveFunction psi{g.qgrid, std::vector<cplx>(g.n())};
  for (std::size_t i = 0; i < g.n(); ++i) psi.values[i] = sho_closed(n, g.q(i));
  return psi;
}

/// Analytic oscillator Wigner function (-1)^n/pi e^{-r^2} L_n(2 r^2).
inline double sho_wigner(unsigned n, double q, double p) {
  const double r2 = q * q + p * p;
  return (n % 2 ? -1.0 : 1.0) / pi * std::exp(-r2) * std::laguerre(n, 2.0 * r2);
}

/// O(n^2) direct sum phi(p_j) = (2 pi hbar)^{-1/2} sum_i psi_i e^{-i p_j q_i / hbar} dq.
inline std::vector<cplx> direct_fourier(const xphase::WaveFunction& psi, double hbar) {
  const auto pg = xphase::conjugate_pgrid(psi.grid, hbar);
  std::vector<cplx> out(pg.n_points);
  for (std::size_t j = 0; j < pg.n_points; ++j) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < psi.values.size(); ++i)
      s += psi.values[i] * std::exp(-xphase::kI * pg.point(j) * psi.grid.point(i) / hbar);
    out[j] = s * psi.grid.spacing / std::sqrt(2.0 * pi * hbar);
  }
  return out;
}

/// Random normalized superposition of the first `count` oscillator states.
inline std::vector<cplx> random_coefficients(std::mt19937_64& rng, std::size_t count) {
  std::normal_distribution<double> d;
  std::vector<cplx> c(count);
  double s = 0.0;
  for (auto& v : c) {
    v = cplx(d(rng), d(rng));
    s += std::norm(v);
  }
  for (auto& v : c) v /= std::sqrt(s);
  return c;
}

inline xphase::WaveFunction superpose(const xphase::PhaseGrid& g, const std::vector<cplx>& c) {
  xphase::WaveFunction psi{g.qgrid, std::vector<cplx>(g.n(), 0.0)};
  for (std::size_t k = 0; k < c.size(); ++k)
    for (std::size_t i = 0; i < g.n(); ++i) psi.values[i] += c[k] * sho_closed(static_cast<unsigned>(k), g.q(i));
  return psi;
}

/// Random wave packet: sum of a few Gaussians with random centers, widths, momenta; normalized.
inline xphase::WaveFunction random_packet(const xphase::PhaseGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> center(-3.0, 3.0), width(0.6, 1.5), kick(-3.0, 3.0), phase(0.0, 2 * pi);
  xphase::WaveFunction psi{g.qgrid, std::vector<cplx>(g.n(), 0.0)};
  for (int k = 0; k < 3; ++k) {
    const double c = center(rng), w = width(rng), p0 = kick(rng), ph = phase(rng);
    for (std::size_t i = 0; i < g.n(); ++i) {
      const double x = (g.q(i) - c) / w;
      psi.values[i] += std::exp(-0.5 * x * x) * std::exp(xphase::kI * (p0 * g.q(i) + ph));
    }
  }
  const double nrm = std::sqrt(xphase::norm_squared(psi));
  for (auto& v : psi.values) v /= nrm;
  return psi;
}

inline double max_abs(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace xtest
