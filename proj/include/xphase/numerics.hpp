#pragma once

// Uniform periodic grids, the q <-> p Fourier pair with the (2 pi hbar)^{-1/2}
// convention, Riemann quadrature and spectral differentiation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "xphase/errors.hpp"
#include "xphase/fft.hpp"

namespace xphase {

using cplx = std::complex<double>;
using std::numbers::pi;

inline constexpr cplx kI{0.0, 1.0};

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Uniform periodic grid over [q_min, q_max) with n_points samples.
struct QGrid {
  std::size_t n_points = 0;
  double q_min = 0.0;
  double q_max = 0.0;
  double spacing = 0.0;

  double point(std::size_t i) const { return q_min + static_cast<double>(i) * spacing; }
  double length() const { return q_max - q_min; }

  std::vector<double> points() const {
    std::vector<double> out(n_points);
    for (std::size_t i = 0; i < n_points; ++i) out[i] = point(i);
    return out;
  }

  bool operator==(const QGrid&) const = default;
};

/// Momentum grid conjugate to a QGrid: p_j = (j - n/2) dp, dp = 2 pi hbar / (n dq).
struct PGrid {
  std::size_t n_points = 0;
  double spacing = 0.0;

  double p_min() const { return -0.5 * static_cast<double>(n_points) * spacing; }
  double point(std::size_t j) const { return p_min() + static_cast<double>(j) * spacing; }

  std::vector<double> points() const {
    std::vector<double> out(n_points);
    for (std::size_t j = 0; j < n_points; ++j) out[j] = point(j);
    return out;
  }

  bool operator==(const PGrid&) const = default;
};

inline QGrid make_qgrid(std::size_t n_points, double q_min, double q_max) {
  if (!is_power_of_two(n_points) || n_points < 8) {
    throw ValidationError("grid: n_points must be a power of two >= 8, got " +
                          std::to_string(n_points));
  }
  if (!(q_max > q_min) || !std::isfinite(q_min) || !std::isfinite(q_max)) {
    throw ValidationError("grid: empty or non-finite interval [q_min, q_max)");
  }
  return QGrid{n_points, q_min, q_max, (q_max - q_min) / static_cast<double>(n_points)};
}

inline PGrid conjugate_pgrid(const QGrid& q, double hbar) {
  return PGrid{q.n_points, 2.0 * pi * hbar / (static_cast<double>(q.n_points) * q.spacing)};
}

/// Square phase-space grid: q axis plus its Fourier-conjugate p axis.
struct PhaseGrid {
  QGrid qgrid;
  PGrid pgrid;
  double hbar = 1.0;

  std::size_t n() const { return qgrid.n_points; }
  std::size_t size() const { return n() * n(); }
  double dq() const { return qgrid.spacing; }
  double dp() const { return pgrid.spacing; }
  double q(std::size_t i) const { return qgrid.point(i); }
  double p(std::size_t j) const { return pgrid.point(j); }
  double cell_area() const { return dq() * dp(); }

  bool operator==(const PhaseGrid&) const = default;
};

inline PhaseGrid make_phase_grid(std::size_t n_points, double q_min, double q_max, double hbar = 1.0) {
  if (!(hbar > 0.0) || !std::isfinite(hbar)) {
    throw ValidationError("grid: hbar must be positive and finite");
  }
  QGrid q = make_qgrid(n_points, q_min, q_max);
  return PhaseGrid{q, conjugate_pgrid(q, hbar), hbar};
}

/// Samples psi(q_i) on a QGrid.
struct WaveFunction {
  QGrid grid;
  std::vector<cplx> values;
};

/// Samples phi(p_j) on the conjugate momentum grid.
struct MomentumWaveFunction {
  PGrid grid;
  std::vector<cplx> values;
};

/// Complex field on a PhaseGrid, row-major with the q index outermost:
/// value(i, j) = f(q_i, p_j).
class Field {
 public:
  Field() = default;
  explicit Field(const PhaseGrid& grid, cplx fill = 0.0) : grid_(grid), data_(grid.size(), fill) {}
  Field(const PhaseGrid& grid, std::vector<cplx> data) : grid_(grid), data_(std::move(data)) {
    if (data_.size() != grid_.size()) throw ValidationError("field: data size does not match grid");
  }

  const PhaseGrid& grid() const { return grid_; }
  std::size_t n() const { return grid_.n(); }

  cplx& operator()(std::size_t i, std::size_t j) { return data_[i * grid_.n() + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * grid_.n() + j]; }

  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }
  std::vector<cplx>& raw() { return data_; }
  const std::vector<cplx>& raw() const { return data_; }

  template <class F>
  static Field from_function(const PhaseGrid& grid, F&& f) {
    Field out(grid);
    for (std::size_t i = 0; i < grid.n(); ++i)
      for (std::size_t j = 0; j < grid.n(); ++j) out(i, j) = f(grid.q(i), grid.p(j));
    return out;
  }

  Field& operator+=(const Field& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Field& operator*=(cplx s) {
    for (auto& v : data_) v *= s;
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, cplx s) { return a *= s; }
  friend Field operator*(cplx s, Field a) { return a *= s; }

  Field conj() const {
    Field out(*this);
    for (auto& v : out.data_) v = std::conj(v);
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : data_) m = std::max(m, std::norm(v));  // norm avoids hypot per sample
    return std::sqrt(m);
  }
  double max_abs_imag() const {
    double m = 0.0;
    for (const auto& v : data_) m = std::max(m, std::abs(v.imag()));
    return m;
  }

 private:
  void check_same(const Field& o) const {
    if (!(o.grid_ == grid_)) throw ValidationError("field: grid mismatch");
  }

  PhaseGrid grid_;
  std::vector<cplx> data_;
};

inline double max_abs_diff(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) throw ValidationError("field: grid mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < a.raw().size(); ++k) m = std::max(m, std::norm(a.raw()[k] - b.raw()[k]));
  return std::sqrt(m);
}

// ---------------------------------------------------------------------------
// Quadrature

inline cplx integrate(const WaveFunction& psi) {
  cplx s = 0.0;
  for (const auto& v : psi.values) s += v;
  return s * psi.grid.spacing;
}

inline double norm_squared(const WaveFunction& psi) {
  double s = 0.0;
  for (const auto& v : psi.values) s += std::norm(v);
  return s * psi.grid.spacing;
}

inline double norm_squared(const MomentumWaveFunction& phi) {
  double s = 0.0;
  for (const auto& v : phi.values) s += std::norm(v);
  return s * phi.grid.spacing;
}

/// <a|b> = integral conj(a) b dq.
inline cplx inner(const WaveFunction& a, const WaveFunction& b) {
  if (a.values.size() != b.values.size()) throw ValidationError("inner: size mismatch");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::conj(a.values[i]) * b.values[i];
  return s * a.grid.spacing;
}

/// Riemann sum with cell weight dq*dp (spectrally accurate for decaying periodic integrands).
inline cplx integrate_2d(const Field& f) {
  cplx s = 0.0;
  for (const auto& v : f.raw()) s += v;
  return s * f.grid().cell_area();
}

/// integrate_2d for raw samples; rejects shape mismatch.
inline cplx integrate_2d(const PhaseGrid& grid, std::span<const cplx> values) {
  if (values.size() != grid.size()) {
    throw ValidationError("integrate_2d: field has " + std::to_string(values.size()) +
                          " samples, grid expects " + std::to_string(grid.size()));
  }
  cplx s = 0.0;
  for (const auto& v : values) s += v;
  return s * grid.cell_area();
}

// ---------------------------------------------------------------------------
// Fourier pair: phi(p) = (2 pi hbar)^{-1/2} int psi(q) e^{-ipq/hbar} dq and its inverse.

inline MomentumWaveFunction q_to_p(const WaveFunction& psi, double hbar) {
  const QGrid& g = psi.grid;
  const std::size_t n = g.n_points;
  if (psi.values.size() != n) throw ValidationError("q_to_p: sample count does not match grid");
  PGrid pg = conjugate_pgrid(g, hbar);
  std::vector<cplx> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = (i % 2 == 0 ? 1.0 : -1.0) * psi.values[i];
  fft::transform(buf, fft::Direction::forward);
  const double pref = g.spacing / std::sqrt(2.0 * pi * hbar);
  for (std::size_t j = 0; j < n; ++j) buf[j] *= pref * std::exp(-kI * pg.point(j) * g.q_min / hbar);
  return MomentumWaveFunction{pg, std::move(buf)};
}

inline WaveFunction p_to_q(const MomentumWaveFunction& phi, const QGrid& qgrid, double hbar) {
  const std::size_t n = qgrid.n_points;
  if (phi.values.size() != n) throw ValidationError("p_to_q: sample count does not match grid");
  std::vector<cplx> buf(n);
  for (std::size_t j = 0; j < n; ++j) buf[j] = phi.values[j] * std::exp(kI * phi.grid.point(j) * qgrid.q_min / hbar);
  fft::transform(buf, fft::Direction::backward);
  const double pref = phi.grid.spacing / std::sqrt(2.0 * pi * hbar);
  for (std::size_t i = 0; i < n; ++i) buf[i] *= pref * (i % 2 == 0 ? 1.0 : -1.0);
  return WaveFunction{qgrid, std::move(buf)};
}

// ---------------------------------------------------------------------------
// Spectral calculus on periodic grids.

/// Angular wavenumber of DFT bin k on an axis with n samples and spacing h.
inline double wavenumber(std::size_t k, std::size_t n, double h) {
  return 2.0 * pi * static_cast<double>(fft::signed_index(k, n)) / (static_cast<double>(n) * h);
}

/// (i k)^order multiplier; the Nyquist bin is zeroed for odd orders.
inline cplx derivative_symbol(std::size_t k, std::size_t n, double h, int order) {
  if (order == 0) return 1.0;
  if (order % 2 == 1 && k == n / 2) return 0.0;
  return std::pow(kI * wavenumber(k, n, h), order);
}

/// d^order/dq^order of periodic samples.
inline std::vector<cplx> spectral_derivative(std::span<const cplx> f, double h, int order) {
  const std::size_t n = f.size();
  std::vector<cplx> buf(f.begin(), f.end());
  if (order == 0) return buf;
  fft::transform(buf, fft::Direction::forward);
  for (std::size_t k = 0; k < n; ++k) buf[k] *= derivative_symbol(k, n, h, order) / static_cast<double>(n);
  fft::transform(buf, fft::Direction::backward);
  return buf;
}

/// Trigonometric interpolant evaluated at x_i - shift (a band-limited translation).
inline std::vector<cplx> spectral_shift(std::span<const cplx> f, double h, double shift) {
  const std::size_t n = f.size();
  std::vector<cplx> buf(f.begin(), f.end());
  fft::transform(buf, fft::Direction::forward);
  for (std::size_t k = 0; k < n; ++k) {
    if (k == n / 2) {
      // Nyquist mode interpolated as a cosine.
      buf[k] *= std::cos(wavenumber(k, n, h) * shift) / static_cast<double>(n);
    } else {
      buf[k] *= std::exp(-kI * wavenumber(k, n, h) * shift) / static_cast<double>(n);
    }
  }
  fft::transform(buf, fft::Direction::backward);
  return buf;
}

/// Fraction of spectral amplitude in the outer 1/8 of the band on each side,
/// max |F_outer| / max |F|. Zero for an all-zero input.
inline double spectral_tail(std::span<const cplx> f) {
  const std::size_t n = f.size();
  std::vector<cplx> buf(f.begin(), f.end());
  fft::transform(buf, fft::Direction::forward);
  double all = 0.0, outer = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = std::abs(buf[k]);
    all = std::max(all, a);
    if (std::abs(fft::signed_index(k, n)) >= static_cast<long>(3 * n / 8)) outer = std::max(outer, a);
  }
  return all > 0.0 ? outer / all : 0.0;
}

/// Partial derivative of a field along q (axis 0) or p (axis 1).
inline Field field_derivative(const Field& f, int axis, int order) {
  Field out(f);
  if (order == 0) return out;
  const std::size_t n = f.n();
  const double h = axis == 0 ? f.grid().dq() : f.grid().dp();
  fft::transform_axis(out.data(), n, n, axis, fft::Direction::forward);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) *= derivative_symbol(axis == 0 ? i : j, n, h, order) / static_cast<double>(n);
  fft::transform_axis(out.data(), n, n, axis, fft::Direction::backward);
  return out;
}

/// Largest |f| on the outermost rows and columns relative to the largest |f| overall.
inline double boundary_ratio(const Field& f) {
  const std::size_t n = f.n();
  double edge = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    edge = std::max({edge, std::abs(f(0, k)), std::abs(f(n - 1, k)), std::abs(f(k, 0)), std::abs(f(k, n - 1))});
  }
  const double all = f.max_abs();
  return all > 0.0 ? edge / all : 0.0;
}

}  // namespace xphase
