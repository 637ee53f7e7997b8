#pragma once

// Representation changes of phase-space states.
//
//   U_a = exp(i hbar a d^2/dq dp)         unitary, a = 1/2 gives the Wigner function
//   S_e = exp((e/4) d^2/dq^2 + (hbar^2/4e) d^2/dp^2 + (i hbar/2) d^2/dq dp)   Husimi
//
// Both are applied as 2D Fourier multipliers. With f = sum F(u,v) e^{i(uq+vp)},
// d/dq -> iu and d/dp -> iv, so U_a has symbol exp(-i hbar a u v).

#include <cmath>
#include <string>
#include <vector>

#include "xphase/errors.hpp"
#include "xphase/numerics.hpp"
#include "xphase/states.hpp"

namespace xphase {

/// Label of the alpha family. 0 gives chi, 1 gives chi*, 1/2 gives Wigner.
struct AlphaParameter {
  double value = 0.0;

  explicit AlphaParameter(double v) : value(v) {
    if (!std::isfinite(v)) throw ValidationError("alpha must be finite");
  }
  /// Values outside [0, 1] are allowed but unusual.
  bool in_standard_range() const { return value >= 0.0 && value <= 1.0; }
};

/// Husimi smoothing scale epsilon (length^2).
struct HusimiParameter {
  double epsilon;

  explicit HusimiParameter(double e) : epsilon(e) {
    if (!(e > 0.0) || !std::isfinite(e)) throw ValidationError("husimi: epsilon must be positive");
  }
};

namespace detail {

/// Largest 2D spectral amplitude in the outermost 1/16 band of either axis,
/// relative to the largest amplitude. Input must already be transformed.
inline double spectral_tail_2d(const Field& spectrum) {
  const std::size_t n = spectrum.n();
  const long edge = static_cast<long>(7 * n / 16);
  double all = 0.0, outer = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool outer_i = std::abs(fft::signed_index(i, n)) >= edge;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = std::abs(spectrum(i, j));
      all = std::max(all, a);
      if (outer_i || std::abs(fft::signed_index(j, n)) >= edge) outer = std::max(outer, a);
    }
  }
  return all > 0.0 ? outer / all : 0.0;
}

template <class Symbol>
Field apply_multiplier(const Field& f, Symbol&& symbol, double tail_limit, const char* who) {
  const PhaseGrid& g = f.grid();
  const std::size_t n = g.n();
  Field spec(f);
  fft::transform_2d(spec.data(), n, n, fft::Direction::forward);
  if (tail_limit > 0.0) {
    const double tail = spectral_tail_2d(spec);
    if (tail > tail_limit) {
      throw NumericalError(std::string(who) + ": field is under-resolved (spectral tail " + fmt(tail) +
                           " > " + fmt(tail_limit) + ")");
    }
  }
  const double scale = 1.0 / static_cast<double>(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = wavenumber(i, n, g.dq());
    for (std::size_t j = 0; j < n; ++j) {
      const double v = wavenumber(j, n, g.dp());
      spec(i, j) *= symbol(u, v) * scale;
    }
  }
  fft::transform_2d(spec.data(), n, n, fft::Direction::backward);
  return spec;
}

}  // namespace detail

inline constexpr double kDefaultTailLimit = 1e-10;

/// chi_{a+delta} = U_delta chi_a. Pass tail_limit <= 0 to skip the resolution check.
inline PhaseState alpha_shift(const PhaseState& chi, double delta, double tail_limit = kDefaultTailLimit) {
  if (chi.representation != Representation::alpha) throw ValidationError("alpha_shift: input must be an alpha-representation state");
  if (!std::isfinite(delta)) throw ValidationError("alpha_shift: delta must be finite");
  const double hbar = chi.grid().hbar;
  Field out = detail::apply_multiplier(
      chi.values, [&](double u, double v) { return std::exp(-kI * hbar * delta * u * v); }, tail_limit,
      "alpha_shift");
  return PhaseState{std::move(out), chi.alpha + delta};
}

/// Largest |psi(x) psi(y)| over grid pairs with |x - y| >= half the box, relative to max |psi|^2.
/// The tau integral of the alpha transform wraps around the periodic box beyond that separation.
inline double wrap_overlap(const WaveFunction& psi) {
  const std::size_t n = psi.values.size();
  double peak = 0.0;
  for (const auto& v : psi.values) peak = std::max(peak, std::norm(v));
  if (peak == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + n / 2; k < n; ++k) worst = std::max(worst, std::abs(psi.values[i]) * std::abs(psi.values[k]));
  return worst / peak;
}

/// Direct tau-quadrature of
///   chi_a(q,p) = (2 pi hbar)^{-1} int psi(q - a tau) psi*(q + (1 - a) tau) e^{i p tau / hbar} dtau
/// with spectral interpolation for the shifted arguments. Independent of alpha_shift.
inline PhaseState wigner_direct(const WaveFunction& psi, AlphaParameter alpha, double hbar = 1.0,
                                double wrap_limit = 1e-9) {
  const double nrm = norm_squared(psi);
  if (std::abs(nrm - 1.0) > kNormTolerance) throw ValidationError("wigner_direct: wave function is not normalized");
  if (const double w = wrap_overlap(psi); w > wrap_limit) {
    throw ValidationError("wigner_direct: wave function support too close to the grid edge (overlap " +
                          fmt(w) + ")");
  }
  const double a = alpha.value;
  const PhaseGrid grid{psi.grid, conjugate_pgrid(psi.grid, hbar), hbar};
  const std::size_t n = grid.n();
  const double dq = grid.dq();

  // tau_k = s_k dq with s_k in [-n/2, n/2).
  std::vector<std::vector<cplx>> products(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = static_cast<double>(static_cast<long>(k) - static_cast<long>(n / 2)) * dq;
    const auto left = spectral_shift(psi.values, dq, a * tau);             // psi(q - a tau)
    const auto right = spectral_shift(psi.values, dq, -(1.0 - a) * tau);   // psi(q + (1-a) tau)
    products[k].resize(n);
    for (std::size_t i = 0; i < n; ++i) products[k][i] = left[i] * std::conj(right[i]);
  }
  std::vector<cplx> phase(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      const double tau = static_cast<double>(static_cast<long>(k) - static_cast<long>(n / 2)) * dq;
      phase[j * n + k] = std::exp(kI * grid.p(j) * tau / hbar);
    }
  const double pref = dq / (2.0 * pi * hbar);
  Field out(grid);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      cplx s = 0.0;
      const cplx* ph = &phase[j * n];
      for (std::size_t k = 0; k < n; ++k) s += products[k][i] * ph[k];
      out(i, j) = pref * s;
    }
  return PhaseState{std::move(out), a};
}

/// Husimi function S_e chi of an alpha = 0 state; returned as a real field.
inline PhaseState husimi(const PhaseState& chi, HusimiParameter eps, double imag_tolerance = 1e-8) {
  if (chi.representation != Representation::alpha || chi.alpha != 0.0) {
    throw ValidationError("husimi: input must be an alpha = 0 state");
  }
  const PhaseGrid& g = chi.grid();
  const double hbar = g.hbar;
  const double e = eps.epsilon;
  // Smoothing kernel widths (standard deviations) along q and p.
  const double sigma_q = std::sqrt(e / 2.0);
  const double sigma_p = hbar / std::sqrt(2.0 * e);
  const double half_q = 0.5 * g.qgrid.length();
  const double half_p = 0.5 * g.n() * g.dp();
  if (6.0 * sigma_q > half_q || 6.0 * sigma_p > half_p) {
    throw NumericalError("husimi: smoothing width exceeds the grid (epsilon = " + fmt(e) + ")");
  }
  Field out = detail::apply_multiplier(
      chi.values,
      [&](double u, double v) {
        return std::exp(-0.25 * e * u * u - hbar * hbar / (4.0 * e) * v * v - 0.5 * kI * hbar * u * v);
      },
      0.0, "husimi");
  const double scale = std::max(out.max_abs(), 1e-300);
  if (out.max_abs_imag() > imag_tolerance * std::max(1.0, scale)) {
    throw NumericalError("husimi: imaginary residue " + fmt(out.max_abs_imag()) + " above tolerance");
  }
  for (auto& v : out.raw()) v = v.real();
  return PhaseState{std::move(out), 0.0, Representation::husimi, e};
}

}  // namespace xphase
