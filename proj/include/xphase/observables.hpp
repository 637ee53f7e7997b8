#pragma once

// Expectation values on phase-space states, symbolic operator orderings in
// q and pi_q, their realization as matrices, and the operator <-> phase-space
// function dictionary.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "xphase/errors.hpp"
#include "xphase/numerics.hpp"
#include "xphase/polynomial.hpp"
#include "xphase/states.hpp"
#include "xphase/transforms.hpp"

namespace xphase {

// ---------------------------------------------------------------------------
// Expectation values

inline constexpr double kMomentDecayLimit = 1e-10;

/// O(q_i, p_j) on the grid, with tabulated powers instead of pow per point.
inline Field sample(const PolyObservable& o, const PhaseGrid& g) {
  const std::size_t n = g.n();
  Field out(g);
  if (o.empty()) return out;
  const auto dq = static_cast<std::size_t>(std::max(0, o.degree_q()));
  const auto dp = static_cast<std::size_t>(std::max(0, o.degree_p()));
  std::vector<double> qp(n * (dq + 1)), pp(n * (dp + 1));
  for (std::size_t i = 0; i < n; ++i) {
    qp[i * (dq + 1)] = 1.0;
    for (std::size_t k = 1; k <= dq; ++k) qp[i * (dq + 1) + k] = qp[i * (dq + 1) + k - 1] * g.q(i);
    pp[i * (dp + 1)] = 1.0;
    for (std::size_t k = 1; k <= dp; ++k) pp[i * (dp + 1) + k] = pp[i * (dp + 1) + k - 1] * g.p(i);
  }
  for (const auto& [e, c] : o.terms()) {
    const auto a = static_cast<std::size_t>(e.first), b = static_cast<std::size_t>(e.second);
    for (std::size_t i = 0; i < n; ++i) {
      const cplx ci = c * qp[i * (dq + 1) + a];
      for (std::size_t j = 0; j < n; ++j) out(i, j) += ci * pp[j * (dp + 1) + b];
    }
  }
  return out;
}

/// Samples of O(q,p) chi(q,p). Throws if the integrand has not decayed at the grid edge:
/// edge values of |chi| above its round-off floor, weighted by |O|, must stay below
/// decay_limit times the integrand peak.
inline Field moment_integrand(const PhaseState& chi, const PolyObservable& o, double decay_limit = kMomentDecayLimit) {
  const PhaseGrid& g = chi.grid();
  const std::size_t n = g.n();
  const Field os = sample(o, g);
  Field f(g);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) f(i, j) = os(i, j) * chi.values(i, j);
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * chi.values.max_abs();
  double edge = 0.0;
  auto visit = [&](std::size_t i, std::size_t j) {
    const double excess = std::abs(chi.values(i, j)) - floor;
    if (excess > 0.0) edge = std::max(edge, excess * std::abs(os(i, j)));
  };
  for (std::size_t k = 0; k < n; ++k) {
    visit(0, k);
    visit(n - 1, k);
    visit(k, 0);
    visit(k, n - 1);
  }
  const double peak = f.max_abs();
  if (peak > 0.0 && edge > decay_limit * peak) {
    throw NumericalError("expect: integrand does not decay at the grid edge (ratio " + fmt(edge / peak) + ")");
  }
  return f;
}

/// <O>_alpha = integral O(q,p) chi_alpha(q,p) dq dp.
inline cplx expect(const PhaseState& chi, const PolyObservable& o, double decay_limit = kMomentDecayLimit) {
  return integrate_2d(moment_integrand(chi, o, decay_limit));
}

/// The initial averaging rule: integral O(q,p) Re chi(q,p) dq dp.
inline double expect_real_part(const PhaseState& chi, const PolyObservable& o, double decay_limit = kMomentDecayLimit) {
  moment_integrand(chi, o, decay_limit);
  const PhaseGrid& g = chi.grid();
  const Field os = sample(o, g);
  double s = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t j = 0; j < g.n(); ++j) s += (os(i, j) * chi.values(i, j).real()).real();
  return s * g.cell_area();
}

// ---------------------------------------------------------------------------
// Ordered operator expressions

enum class Letter { q, pi_q };

/// One word: weight * L1^k1 L2^k2 ... read left to right.
struct Word {
  cplx weight = 1.0;
  std::vector<std::pair<Letter, int>> runs;
};

class OrderedExpression {
 public:
  OrderedExpression() = default;

  static OrderedExpression word(cplx weight, std::vector<std::pair<Letter, int>> runs) {
    OrderedExpression e;
    e.add(weight, std::move(runs));
    return e;
  }
  static OrderedExpression q() { return word(1.0, {{Letter::q, 1}}); }
  static OrderedExpression pi_q() { return word(1.0, {{Letter::pi_q, 1}}); }

  /// sum c_ab q^a pi^b read from a normal-form coefficient table.
  static OrderedExpression from_normal_form(const PolyObservable& nf) {
    OrderedExpression e;
    for (const auto& [ex, c] : nf.terms()) e.add(c, {{Letter::q, ex.first}, {Letter::pi_q, ex.second}});
    return e;
  }

  void add(cplx weight, std::vector<std::pair<Letter, int>> runs) {
    if (weight == cplx(0.0)) return;
    for (const auto& r : runs)
      if (r.second < 0) throw ValidationError("ordered expression: negative power");
    words_.push_back(Word{weight, std::move(runs)});
  }

  const std::vector<Word>& words() const { return words_; }

  friend OrderedExpression operator+(OrderedExpression a, const OrderedExpression& b) {
    for (const auto& w : b.words_) a.words_.push_back(w);
    return a;
  }
  friend OrderedExpression operator*(cplx s, OrderedExpression a) {
    for (auto& w : a.words_) w.weight *= s;
    return a;
  }
  /// Operator product (concatenation of words).
  friend OrderedExpression operator*(const OrderedExpression& a, const OrderedExpression& b) {
    OrderedExpression out;
    for (const auto& wa : a.words_)
      for (const auto& wb : b.words_) {
        auto runs = wa.runs;
        runs.insert(runs.end(), wb.runs.begin(), wb.runs.end());
        out.add(wa.weight * wb.weight, std::move(runs));
      }
    return out;
  }

  /// Canonical form with every pi_q moved to the right using [q, pi_q] = i hbar.
  /// Entry (a, b) of the result is the coefficient of q^a pi_q^b.
  PolyObservable normal_form(double hbar) const {
    PolyObservable total;
    const cplx mih = -kI * hbar;
    for (const auto& w : words_) {
      PolyObservable acc = PolyObservable::constant(w.weight);
      for (const auto& [letter, count] : w.runs) {
        for (int c = 0; c < count; ++c) {
          PolyObservable next;
          for (const auto& [e, v] : acc.terms()) {
            if (letter == Letter::pi_q) {
              next.add(e.first, e.second + 1, v);
            } else {
              // q^a pi^b q = q^{a+1} pi^b - i hbar b q^a pi^{b-1}
              next.add(e.first + 1, e.second, v);
              if (e.second > 0) next.add(e.first, e.second - 1, v * mih * static_cast<double>(e.second));
            }
          }
          acc = std::move(next);
        }
      }
      total += acc;
    }
    return total;
  }

  std::string to_string() const {
    if (words_.empty()) return "0";
    std::string out;
    char buf[96];
    for (const auto& w : words_) {
      if (!out.empty()) out += " + ";
      std::snprintf(buf, sizeof buf, "(%.17g%+.17gi)", w.weight.real(), w.weight.imag());
      out += buf;
      for (const auto& [l, k] : w.runs) {
        if (k == 0) continue;
        out += l == Letter::q ? "*q" : "*pi";
        if (k > 1) out += "^" + std::to_string(k);
      }
    }
    return out;
  }

 private:
  std::vector<Word> words_;
};

/// sum_r C(m,r) ((1-alpha) pi_q)^r q^n (alpha pi_q)^(m-r).
inline OrderedExpression order_monomial(int n, int m, double alpha) {
  if (n < 0 || m < 0) throw ValidationError("order_monomial: exponents must be nonnegative");
  OrderedExpression e;
  for (int r = 0; r <= m; ++r) {
    const double w = binomial(m, r) * std::pow(1.0 - alpha, r) * std::pow(alpha, m - r);
    e.add(w, {{Letter::pi_q, r}, {Letter::q, n}, {Letter::pi_q, m - r}});
  }
  return e;
}

/// Ordering of every term of a polynomial.
inline OrderedExpression order_polynomial(const PolyObservable& poly, double alpha) {
  OrderedExpression e;
  for (const auto& [ex, c] : poly.terms()) e = e + c * order_monomial(ex.first, ex.second, alpha);
  return e;
}

// ---------------------------------------------------------------------------
// Realization on wave functions and bases

inline constexpr double kDerivativeTailLimit = 1e-8;

/// Applies the expression to psi: q multiplies, pi_q acts as -i hbar d/dq (spectrally).
inline WaveFunction apply_expression(const OrderedExpression& expr, const WaveFunction& psi, double hbar,
                                     double tail_limit = kDerivativeTailLimit) {
  const std::size_t n = psi.values.size();
  WaveFunction out{psi.grid, std::vector<cplx>(n, 0.0)};
  for (const auto& w : expr.words()) {
    std::vector<cplx> f = psi.values;
    for (auto it = w.runs.rbegin(); it != w.runs.rend(); ++it) {
      const auto [letter, count] = *it;
      if (count == 0) continue;
      if (letter == Letter::q) {
        for (std::size_t i = 0; i < n; ++i) f[i] *= std::pow(psi.grid.point(i), count);
      } else {
        if (const double t = tail_limit > 0.0 ? spectral_tail(f) : 0.0; t > tail_limit) {
          throw NumericalError("realize_operator: derivative order " + std::to_string(count) +
                               " too high for grid resolution (spectral tail " + fmt(t) + ")");
        }
        f = spectral_derivative(f, psi.grid.spacing, count);
        const cplx s = std::pow(-kI * hbar, count);
        for (auto& v : f) v *= s;
      }
    }
    for (std::size_t i = 0; i < n; ++i) out.values[i] += w.weight * f[i];
  }
  return out;
}

/// <psi| expr |psi>.
inline cplx operator_expectation(const OrderedExpression& expr, const WaveFunction& psi, double hbar) {
  return inner(psi, apply_expression(expr, psi, hbar));
}

/// Operator in an orthonormal basis: entries(m, n) = <psi_m| F |psi_n>.
struct OperatorMatrix {
  BasisSet basis;
  Eigen::MatrixXcd entries;

  double hermitian_deviation() const { return (entries - entries.adjoint()).cwiseAbs().maxCoeff(); }
};

inline OperatorMatrix realize_operator(const OrderedExpression& expr, const BasisSet& basis,
                                      double tail_limit = kDerivativeTailLimit) {
  const auto k = static_cast<Eigen::Index>(basis.size());
  const Eigen::MatrixXcd psi = basis.q_matrix();
  Eigen::MatrixXcd applied(psi.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto f = apply_expression(expr, basis.functions[static_cast<std::size_t>(c)], basis.grid.hbar, tail_limit);
    for (Eigen::Index i = 0; i < psi.rows(); ++i) applied(i, c) = f.values[static_cast<std::size_t>(i)];
  }
  return OperatorMatrix{basis, psi.adjoint() * applied * basis.grid.dq()};
}

/// Ordering check: phase-space moment of q^n p^m in the alpha representation
/// against <psi| order_monomial(n, m, alpha) |psi>.
struct OrderingCheck {
  cplx phase_space;
  cplx operator_side;
  double residual;
};

inline OrderingCheck ordering_consistency(const WaveFunction& psi, int n, int m, double alpha, double hbar = 1.0) {
  const PhaseState chi = wigner_direct(psi, AlphaParameter(alpha), hbar);
  const cplx ps = expect(chi, PolyObservable::monomial(n, m));
  const cplx op = operator_expectation(order_monomial(n, m, alpha), psi, hbar);
  return OrderingCheck{ps, op, std::abs(ps - op)};
}

/// Observable-side compensation: sum_k (-i hbar alpha)^k k! C(n,k) C(m,k) q^(n-k) p^(m-k),
/// so that <q^n p^m>_0 equals the alpha-representation average of the result.
inline PolyObservable u_alpha_monomial(int n, int m, double alpha, double hbar = 1.0) {
  if (n < 0 || m < 0) throw ValidationError("u_alpha_monomial: exponents must be nonnegative");
  PolyObservable out;
  const cplx x = -kI * hbar * alpha;
  for (int k = 0; k <= std::min(n, m); ++k)
    out.add(n - k, m - k, std::pow(x, k) * factorial(k) * binomial(n, k) * binomial(m, k));
  return out;
}

inline PolyObservable u_alpha(const PolyObservable& poly, double alpha, double hbar = 1.0) {
  PolyObservable out;
  for (const auto& [e, c] : poly.terms()) out += c * u_alpha_monomial(e.first, e.second, alpha, hbar);
  return out;
}

// ---------------------------------------------------------------------------
// Operator -> phase-space function

/// F(q,p) = <q|F|p> e^{-ipq/hbar} sqrt(2 pi hbar) = sqrt(2 pi hbar) e^{-ipq/hbar} sum_mn F_mn psi_m(q) phi_n*(p).
/// The identity maps to 1 in the complete-basis limit.
inline Field op_to_phase(const OperatorMatrix& f) {
  const BasisSet& b = f.basis;
  const PhaseGrid& g = b.grid;
  if (f.entries.rows() != static_cast<Eigen::Index>(b.size()) || f.entries.cols() != f.entries.rows()) {
    throw ValidationError("op_to_phase: matrix does not match basis size");
  }
  const Eigen::MatrixXcd m = b.q_matrix() * f.entries * b.p_matrix().adjoint();
  const double pref = std::sqrt(2.0 * pi * g.hbar);
  Field out(g);
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t j = 0; j < g.n(); ++j)
      out(i, j) = pref * m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                  std::exp(-kI * g.p(j) * g.q(i) / g.hbar);
  return out;
}

/// Generalization to the alpha representation: U_alpha applied to op_to_phase.
inline Field op_to_phase_alpha(const OperatorMatrix& f, double alpha, double tail_limit = kDefaultTailLimit) {
  PhaseState s{op_to_phase(f), 0.0};
  return alpha_shift(s, alpha, tail_limit).values;
}

/// Kernel route for the alpha symbol:
///   F_alpha(q,p) = int <q - alpha tau| F |q + (1 - alpha) tau> e^{i p tau / hbar} dtau,
/// with <x|F|y> = sum_mn F_mn psi_m(x) psi_n*(y) and spectral interpolation for the shifts.
inline Field op_to_phase_alpha_direct(const OperatorMatrix& f, double alpha) {
  const BasisSet& b = f.basis;
  const PhaseGrid& g = b.grid;
  const std::size_t n = g.n();
  const auto count = static_cast<Eigen::Index>(b.size());
  const double dq = g.dq();
  std::vector<std::vector<cplx>> kernel(n, std::vector<cplx>(n));  // [tau][q]
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = static_cast<double>(static_cast<long>(k) - static_cast<long>(n / 2)) * dq;
    Eigen::MatrixXcd left(n, count), right(n, count);
    for (Eigen::Index c = 0; c < count; ++c) {
      const auto& v = b.functions[static_cast<std::size_t>(c)].values;
      const auto l = spectral_shift(v, dq, alpha * tau);
      const auto r = spectral_shift(v, dq, -(1.0 - alpha) * tau);
      for (std::size_t i = 0; i < n; ++i) {
        left(static_cast<Eigen::Index>(i), c) = l[i];
        right(static_cast<Eigen::Index>(i), c) = std::conj(r[i]);
      }
    }
    const Eigen::MatrixXcd lf = left * f.entries;
    for (std::size_t i = 0; i < n; ++i)
      kernel[k][i] = lf.row(static_cast<Eigen::Index>(i)).cwiseProduct(right.row(static_cast<Eigen::Index>(i))).sum();
  }
  Field out(g);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<cplx> phase(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double tau = static_cast<double>(static_cast<long>(k) - static_cast<long>(n / 2)) * dq;
      phase[k] = std::exp(kI * g.p(j) * tau / g.hbar) * dq;
    }
    for (std::size_t i = 0; i < n; ++i) {
      cplx s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += kernel[k][i] * phase[k];
      out(i, j) = s;
    }
  }
  return out;
}

/// op_to_phase of a symbolic operator with a truncation estimate from doubling the basis.
struct PhaseSymbol {
  Field field;
  double truncation_estimate = 0.0;  // max |F_count - F_2count| over the bulk
  double bulk_radius = 0.0;
};

inline constexpr std::size_t kDefaultSymbolBasis = 32;

inline PhaseSymbol op_to_phase_estimated(const OrderedExpression& expr, const PhaseGrid& grid,
                                         std::size_t count = kDefaultSymbolBasis, double bulk_radius = 2.0,
                                         double mass = 1.0, double omega = 1.0) {
  const auto small = op_to_phase(realize_operator(expr, harmonic_basis(grid, mass, omega, count)));
  const auto large = op_to_phase(realize_operator(expr, harmonic_basis(grid, mass, omega, 2 * count)));
  double est = 0.0;
  for (std::size_t i = 0; i < grid.n(); ++i)
    for (std::size_t j = 0; j < grid.n(); ++j)
      if (std::abs(grid.q(i)) <= bulk_radius && std::abs(grid.p(j)) <= bulk_radius)
        est = std::max(est, std::abs(small(i, j) - large(i, j)));
  return PhaseSymbol{small, est, bulk_radius};
}

}  // namespace xphase
