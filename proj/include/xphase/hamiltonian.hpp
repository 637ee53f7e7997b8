#pragma once

// H(q,p) = p^2/2m + V(q) for the three supported potential families.
// All of them are polynomials in q, so V^(n) is exact and the generator series terminate.

#include <string>
#include <vector>

#include "xphase/errors.hpp"
#include "xphase/polynomial.hpp"

namespace xphase {

enum class PotentialKind { harmonic, linear, polynomial };

inline constexpr int kMaxPotentialDegree = 8;

struct HamiltonianSpec {
  double mass = 1.0;
  PotentialKind kind = PotentialKind::harmonic;
  double omega = 1.0;                // harmonic
  double k = 1.0;                    // linear: V = k q, physical on q >= 0
  std::vector<double> coefficients;  // polynomial: V = sum_j c_j q^j

  static HamiltonianSpec harmonic(double mass, double omega) {
    HamiltonianSpec h;
    h.mass = mass;
    h.kind = PotentialKind::harmonic;
    h.omega = omega;
    h.validate();
    return h;
  }
  static HamiltonianSpec linear(double mass, double k) {
    HamiltonianSpec h;
    h.mass = mass;
    h.kind = PotentialKind::linear;
    h.k = k;
    h.validate();
    return h;
  }
  static HamiltonianSpec polynomial(double mass, std::vector<double> c) {
    HamiltonianSpec h;
    h.mass = mass;
    h.kind = PotentialKind::polynomial;
    h.coefficients = std::move(c);
    h.validate();
    return h;
  }

  void validate() const {
    if (!(mass > 0.0) || !std::isfinite(mass)) throw ValidationError("hamiltonian: mass must be positive");
    switch (kind) {
      case PotentialKind::harmonic:
        if (!(omega > 0.0) || !std::isfinite(omega)) throw ValidationError("hamiltonian: omega must be positive");
        break;
      case PotentialKind::linear:
        if (!(k > 0.0) || !std::isfinite(k)) throw ValidationError("hamiltonian: linear slope k must be positive");
        break;
      case PotentialKind::polynomial:
        if (coefficients.empty()) throw ValidationError("hamiltonian: polynomial potential needs coefficients");
        if (static_cast<int>(coefficients.size()) - 1 > kMaxPotentialDegree) {
          throw ValidationError("hamiltonian: polynomial degree " + std::to_string(coefficients.size() - 1) +
                                " exceeds " + std::to_string(kMaxPotentialDegree));
        }
        for (double c : coefficients)
          if (!std::isfinite(c)) throw ValidationError("hamiltonian: non-finite polynomial coefficient");
        break;
    }
  }

  /// Coefficients of V in powers of q.
  std::vector<double> potential_coefficients() const {
    switch (kind) {
      case PotentialKind::harmonic: return {0.0, 0.0, 0.5 * mass * omega * omega};
      case PotentialKind::linear: return {0.0, k};
      case PotentialKind::polynomial: return coefficients;
    }
    return {};
  }

  int potential_degree() const {
    const auto c = potential_coefficients();
    for (int j = static_cast<int>(c.size()) - 1; j >= 0; --j)
      if (c[static_cast<std::size_t>(j)] != 0.0) return j;
    return 0;
  }

  /// V^(n)(q).
  double potential_derivative(int n, double q) const {
    const auto c = potential_coefficients();
    double s = 0.0, qp = 1.0;
    for (int j = n; j < static_cast<int>(c.size()); ++j) {
      s += c[static_cast<std::size_t>(j)] * falling(j, n) * qp;
      qp *= q;
    }
    return s;
  }
  double potential(double q) const { return potential_derivative(0, q); }

  double energy(double q, double p) const { return p * p / (2.0 * mass) + potential(q); }

  /// H(q,p) as a phase-space polynomial.
  PolyObservable symbol() const {
    PolyObservable h = PolyObservable::monomial(0, 2, 1.0 / (2.0 * mass));
    const auto c = potential_coefficients();
    for (std::size_t j = 0; j < c.size(); ++j) h.add(static_cast<int>(j), 0, c[j]);
    return h;
  }
};

}  // namespace xphase
