#pragma once

// Phase-space state functions chi(q,p) = sum_ab A_ab psi_a(q) phi_b*(p) e^{-ipq/hbar}
// (with the (2 pi hbar)^{-1/2} factor that makes integral chi = tr A), density
// matrices, orthonormal bases and marginals.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "xphase/errors.hpp"
#include "xphase/numerics.hpp"

namespace xphase {

enum class Representation { alpha, husimi };

/// A phase-space state function tagged with its representation.
struct PhaseState {
  Field values;
  double alpha = 0.0;
  Representation representation = Representation::alpha;
  double epsilon = 0.0;  // Husimi smoothing scale; only meaningful for husimi

  const PhaseGrid& grid() const { return values.grid(); }
  cplx total() const { return integrate_2d(values); }
};

// ---------------------------------------------------------------------------
// Density matrices

struct DensityMatrix {
  Eigen::MatrixXcd entries;

  DensityMatrix() = default;
  explicit DensityMatrix(Eigen::MatrixXcd m) : entries(std::move(m)) {}

  Eigen::Index dim() const { return entries.rows(); }

  /// Rank-1 projector |c><c| for a normalized coefficient vector c.
  static DensityMatrix projector(const Eigen::VectorXcd& c) {
    return DensityMatrix(c * c.adjoint());
  }
};

/// Tolerances for density-matrix admissibility.
struct DensityTolerance {
  double hermitian = 1e-12;
  double min_eigenvalue = -1e-10;
  double trace = 1e-12;
};

struct DensityReport {
  bool hermitian = false;
  bool psd = false;
  bool trace = false;
  double hermitian_deviation = 0.0;
  double min_eigenvalue = 0.0;
  double trace_deviation = 0.0;
  double purity = 0.0;

  bool valid() const { return hermitian && psd && trace; }

  /// Comma-separated names of the failing conditions.
  std::string failures() const {
    std::string out;
    auto add = [&out](const char* s) {
      if (!out.empty()) out += ", ";
      out += s;
    };
    if (!hermitian) add("hermitian");
    if (!psd) add("positive-semidefinite");
    if (!trace) add("trace");
    return out;
  }
};

inline DensityReport validate_density(const Eigen::MatrixXcd& a, const DensityTolerance& tol = {}) {
  if (a.rows() != a.cols() || a.rows() == 0) throw ValidationError("density matrix must be square and non-empty");
  DensityReport r;
  r.hermitian_deviation = (a - a.adjoint()).cwiseAbs().maxCoeff();
  r.hermitian = r.hermitian_deviation < tol.hermitian;
  Eigen::MatrixXcd herm = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.psd = r.min_eigenvalue >= tol.min_eigenvalue;
  r.trace_deviation = std::abs(a.trace() - cplx(1.0));
  r.trace = r.trace_deviation < tol.trace;
  r.purity = (a * a).trace().real();
  return r;
}

inline DensityReport validate_density(const DensityMatrix& a, const DensityTolerance& tol = {}) {
  return validate_density(a.entries, tol);
}

// ---------------------------------------------------------------------------
// Bases

/// Orthonormal functions on a q grid together with their momentum replicas.
struct BasisSet {
  PhaseGrid grid;
  std::vector<WaveFunction> functions;
  std::vector<MomentumWaveFunction> momentum;
  std::optional<std::vector<double>> energies;

  std::size_t size() const { return functions.size(); }

  /// n x count matrix of psi_k(q_i).
  Eigen::MatrixXcd q_matrix() const {
    Eigen::MatrixXcd m(grid.n(), functions.size());
    for (std::size_t k = 0; k < functions.size(); ++k)
      for (std::size_t i = 0; i < grid.n(); ++i) m(i, k) = functions[k].values[i];
    return m;
  }

  /// n x count matrix of phi_k(p_j).
  Eigen::MatrixXcd p_matrix() const {
    Eigen::MatrixXcd m(grid.n(), momentum.size());
    for (std::size_t k = 0; k < momentum.size(); ++k)
      for (std::size_t j = 0; j < grid.n(); ++j) m(j, k) = momentum[k].values[j];
    return m;
  }

  /// Wave function sum_k c_k psi_k.
  WaveFunction combine(const Eigen::VectorXcd& c) const {
    if (static_cast<std::size_t>(c.size()) > functions.size()) throw ValidationError("combine: too many coefficients");
    WaveFunction out{grid.qgrid, std::vector<cplx>(grid.n(), 0.0)};
    for (Eigen::Index k = 0; k < c.size(); ++k)
      for (std::size_t i = 0; i < grid.n(); ++i) out.values[i] += c(k) * functions[k].values[i];
    return out;
  }
};

/// max |<psi_m|psi_n> - delta_mn| over the basis.
inline double gram_deviation(const BasisSet& basis) {
  const Eigen::MatrixXcd q = basis.q_matrix();
  Eigen::MatrixXcd gram = q.adjoint() * q * basis.grid.dq();
  gram -= Eigen::MatrixXcd::Identity(gram.rows(), gram.cols());
  return gram.size() ? gram.cwiseAbs().maxCoeff() : 0.0;
}

/// First `count` harmonic-oscillator eigenfunctions via the normalized Hermite recurrence
/// psi_{k+1} = sqrt(2/(k+1)) x psi_k - sqrt(k/(k+1)) psi_{k-1}, x = q sqrt(m omega / hbar).
inline BasisSet harmonic_basis(const PhaseGrid& grid, double mass, double omega, std::size_t count) {
  if (!(mass > 0.0) || !(omega > 0.0)) throw ValidationError("harmonic_basis: mass and omega must be positive");
  if (count == 0) throw ValidationError("harmonic_basis: count must be positive");
  if (count > grid.n() / 4) {
    throw ValidationError("harmonic_basis: count " + std::to_string(count) + " exceeds n_points/4 = " +
                          std::to_string(grid.n() / 4) + " (aliasing)");
  }
  const double hbar = grid.hbar;
  const double scale = std::sqrt(mass * omega / hbar);
  const double norm0 = std::pow(mass * omega / (pi * hbar), 0.25);
  const std::size_t n = grid.n();

  BasisSet basis;
  basis.grid = grid;
  std::vector<double> prev(n, 0.0), cur(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = scale * grid.q(i);
    cur[i] = norm0 * std::exp(-0.5 * x * x);
  }
  std::vector<double> energies;
  for (std::size_t k = 0; k < count; ++k) {
    WaveFunction psi{grid.qgrid, std::vector<cplx>(cur.begin(), cur.end())};
    basis.momentum.push_back(q_to_p(psi, hbar));
    basis.functions.push_back(std::move(psi));
    energies.push_back(hbar * omega * (static_cast<double>(k) + 0.5));
    std::vector<double> next(n);
    const double a = std::sqrt(2.0 / static_cast<double>(k + 1));
    const double b = std::sqrt(static_cast<double>(k) / static_cast<double>(k + 1));
    for (std::size_t i = 0; i < n; ++i) next[i] = a * scale * grid.q(i) * cur[i] - b * prev[i];
    prev = std::move(cur);
    cur = std::move(next);
  }
  basis.energies = std::move(energies);
  return basis;
}

/// Lowest `count` eigenstates of p^2/2m + V(q) discretized on the grid (spectral kinetic
/// energy, dense diagonalization). count = n_points gives a complete orthonormal grid basis.
template <class Potential>
BasisSet spectral_eigenbasis(const PhaseGrid& grid, double mass, Potential&& v, std::size_t count) {
  if (!(mass > 0.0)) throw ValidationError("spectral_eigenbasis: mass must be positive");
  const std::size_t n = grid.n();
  if (count == 0 || count > n) throw ValidationError("spectral_eigenbasis: count must be in [1, n_points]");
  // Circulant kinetic matrix T_ik = t[(i - k) mod n], t = inverse DFT of hbar^2 k^2 / 2m.
  std::vector<cplx> t(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = wavenumber(k, n, grid.dq());
    t[k] = grid.hbar * grid.hbar * w * w / (2.0 * mass) / static_cast<double>(n);
  }
  fft::transform(t, fft::Direction::backward);
  Eigen::MatrixXd h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) h(i, k) = t[(i + n - k) % n].real();
  for (std::size_t i = 0; i < n; ++i) h(i, i) += v(grid.q(i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("spectral_eigenbasis: eigen-solver failed");

  BasisSet basis;
  basis.grid = grid;
  std::vector<double> energies;
  const double scale = 1.0 / std::sqrt(grid.dq());
  for (std::size_t k = 0; k < count; ++k) {
    Eigen::VectorXd col = es.eigenvectors().col(static_cast<Eigen::Index>(k));
    // Deterministic sign: largest-magnitude component positive.
    Eigen::Index imax = 0;
    col.cwiseAbs().maxCoeff(&imax);
    if (col(imax) < 0) col = -col;
    WaveFunction psi{grid.qgrid, std::vector<cplx>(n)};
    for (std::size_t i = 0; i < n; ++i) psi.values[i] = scale * col(static_cast<Eigen::Index>(i));
    basis.momentum.push_back(q_to_p(psi, grid.hbar));
    basis.functions.push_back(std::move(psi));
    energies.push_back(es.eigenvalues()(static_cast<Eigen::Index>(k)));
  }
  basis.energies = std::move(energies);
  return basis;
}

// ---------------------------------------------------------------------------
// State construction

inline constexpr double kNormTolerance = 1e-6;

/// Pure state chi = (2 pi hbar)^{-1/2} psi(q) phi*(p) e^{-ipq/hbar}, alpha = 0.
inline PhaseState pure_chi(const WaveFunction& psi, double hbar = 1.0) {
  const double nrm = norm_squared(psi);
  if (std::abs(nrm - 1.0) > kNormTolerance) {
    throw ValidationError("pure_chi: wave function norm " + fmt(nrm) + " deviates from 1");
  }
  const PhaseGrid grid{psi.grid, conjugate_pgrid(psi.grid, hbar), hbar};
  const MomentumWaveFunction phi = q_to_p(psi, hbar);
  const double pref = 1.0 / std::sqrt(2.0 * pi * hbar);
  Field chi(grid);
  for (std::size_t i = 0; i < grid.n(); ++i) {
    const double q = grid.q(i);
    for (std::size_t j = 0; j < grid.n(); ++j) {
      chi(i, j) = pref * psi.values[i] * std::conj(phi.values[j]) * std::exp(-kI * grid.p(j) * q / hbar);
    }
  }
  return PhaseState{std::move(chi), 0.0};
}

/// Mixed state chi = (2 pi hbar)^{-1/2} sum_ab A_ab psi_a(q) phi_b*(p) e^{-ipq/hbar}.
inline PhaseState mixed_chi(const DensityMatrix& a, const BasisSet& basis, const DensityTolerance& tol = {}) {
  const DensityReport report = validate_density(a, tol);
  if (!report.valid()) throw ValidationError("mixed_chi: invalid density matrix (" + report.failures() + ")");
  if (static_cast<std::size_t>(a.dim()) > basis.size()) {
    throw ValidationError("mixed_chi: density matrix dimension exceeds basis size");
  }
  const auto k = a.dim();
  const Eigen::MatrixXcd psi = basis.q_matrix().leftCols(k);
  const Eigen::MatrixXcd phi = basis.p_matrix().leftCols(k);
  const Eigen::MatrixXcd m = psi * a.entries * phi.adjoint();
  const PhaseGrid& grid = basis.grid;
  const double pref = 1.0 / std::sqrt(2.0 * pi * grid.hbar);
  Field chi(grid);
  for (std::size_t i = 0; i < grid.n(); ++i)
    for (std::size_t j = 0; j < grid.n(); ++j)
      chi(i, j) = pref * m(i, j) * std::exp(-kI * grid.p(j) * grid.q(i) / grid.hbar);
  return PhaseState{std::move(chi), 0.0};
}

// ---------------------------------------------------------------------------
// Marginals and identities

struct Marginals {
  std::vector<double> q_density;  // rho_q(q_i) = int chi dp
  std::vector<double> p_density;  // rho_p(p_j) = int chi dq
  double max_imag = 0.0;          // largest discarded imaginary part
};

inline Marginals marginals(const PhaseState& chi, double imag_tolerance = 1e-8) {
  const PhaseGrid& g = chi.grid();
  const std::size_t n = g.n();
  std::vector<cplx> rq(n, 0.0), rp(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      rq[i] += chi.values(i, j);
      rp[j] += chi.values(i, j);
    }
  Marginals out;
  out.q_density.resize(n);
  out.p_density.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    rq[k] *= g.dp();
    rp[k] *= g.dq();
    out.max_imag = std::max({out.max_imag, std::abs(rq[k].imag()), std::abs(rp[k].imag())});
    out.q_density[k] = rq[k].real();
    out.p_density[k] = rp[k].real();
  }
  if (out.max_imag > imag_tolerance) {
    throw NumericalError("marginals: imaginary residue " + fmt(out.max_imag) +
                         " (non-admissible state or under-resolved grid)");
  }
  return out;
}

struct FactorResiduals {
  double q_identity = 0.0;  // (p - i hbar d/dq) chi = -i hbar dF/dq e^{-ipq/hbar}
  double p_identity = 0.0;  // (q - i hbar d/dp) chi = -i hbar dF/dp e^{-ipq/hbar}
  Field q_residual;         // pointwise |lhs - rhs|
  Field p_residual;
};

/// Evaluates both sides of the factorization identities for chi = F e^{-ipq/hbar},
/// F = (2 pi hbar)^{-1/2} psi(q) phi*(p), with spectral derivatives; returns max-norm residuals.
inline FactorResiduals check_factor_identities(const PhaseState& chi, const WaveFunction& psi) {
  const PhaseGrid& g = chi.grid();
  const double hbar = g.hbar;
  const std::size_t n = g.n();
  const MomentumWaveFunction phi = q_to_p(psi, hbar);
  const auto dpsi = spectral_derivative(psi.values, g.dq(), 1);
  const auto dphi = spectral_derivative(phi.values, g.dp(), 1);
  const Field dchi_q = field_derivative(chi.values, 0, 1);
  const Field dchi_p = field_derivative(chi.values, 1, 1);
  const double pref = 1.0 / std::sqrt(2.0 * pi * hbar);
  FactorResiduals r{0.0, 0.0, Field(g), Field(g)};
  for (std::size_t i = 0; i < n; ++i) {
    const double q = g.q(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double p = g.p(j);
      const cplx phase = std::exp(-kI * p * q / hbar);
      const cplx lhs_q = p * chi.values(i, j) - kI * hbar * dchi_q(i, j);
      const cplx rhs_q = -kI * hbar * pref * dpsi[i] * std::conj(phi.values[j]) * phase;
      const cplx lhs_p = q * chi.values(i, j) - kI * hbar * dchi_p(i, j);
      const cplx rhs_p = -kI * hbar * pref * psi.values[i] * std::conj(dphi[j]) * phase;
      r.q_residual(i, j) = std::abs(lhs_q - rhs_q);
      r.p_residual(i, j) = std::abs(lhs_p - rhs_p);
      r.q_identity = std::max(r.q_identity, r.q_residual(i, j).real());
      r.p_identity = std::max(r.p_identity, r.p_residual(i, j).real());
    }
  }
  return r;
}

}  // namespace xphase
