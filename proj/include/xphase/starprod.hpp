#pragma once

// Composition of phase-space symbols mirroring operator products, on polynomials.
//
//   star(A, B)          = sum_n (-i hbar)^n / n! d_p^n A d_q^n B
//   star_alpha(A, B, a) = sum_n (i hbar)^n / n! [a d_qA d_pB - (1 - a) d_pA d_qB]^n A B

#include <cmath>
#include <vector>

#include "xphase/numerics.hpp"
#include "xphase/polynomial.hpp"

namespace xphase {

namespace detail {

inline PolyObservable cross_term(const PolyObservable& a, const PolyObservable& b, int qa, int pa, int qb, int pb) {
  const PolyObservable da = a.dq(qa).dp(pa);
  if (da.empty()) return {};
  const PolyObservable db = b.dq(qb).dp(pb);
  if (db.empty()) return {};
  return da * db;
}

}  // namespace detail

/// star(A, B) in the chi representation.
inline PolyObservable star(const PolyObservable& a, const PolyObservable& b, double hbar = 1.0) {
  PolyObservable out;
  const int top = std::min(a.degree_p(), b.degree_q());
  for (int n = 0; n <= top; ++n)
    out += std::pow(-kI * hbar, n) / factorial(n) * detail::cross_term(a, b, 0, n, n, 0);
  return out;
}

/// Coefficients of hbar^k in star_alpha(A, B, alpha): entry k holds i^k/k! [...]^k A B.
inline std::vector<PolyObservable> star_alpha_orders(const PolyObservable& a, const PolyObservable& b, double alpha) {
  const int top = std::max(0, std::min(a.degree(), b.degree()));
  std::vector<PolyObservable> orders(static_cast<std::size_t>(top) + 1);
  for (int k = 0; k <= top; ++k) {
    PolyObservable term;
    // Binomial expansion: j factors of alpha d_qA d_pB, k - j of -(1-alpha) d_pA d_qB.
    for (int j = 0; j <= k; ++j) {
      const double w = binomial(k, j) * std::pow(alpha, j) * std::pow(-(1.0 - alpha), k - j);
      if (w == 0.0) continue;
      term += w * detail::cross_term(a, b, j, k - j, k - j, j);
    }
    orders[static_cast<std::size_t>(k)] = std::pow(kI, k) / factorial(k) * term;
  }
  return orders;
}

inline PolyObservable star_alpha(const PolyObservable& a, const PolyObservable& b, double alpha, double hbar = 1.0) {
  PolyObservable out;
  const auto orders = star_alpha_orders(a, b, alpha);
  for (std::size_t k = 0; k < orders.size(); ++k) out += std::pow(hbar, static_cast<double>(k)) * orders[k];
  return out;
}

/// Shift form A[q + i hbar alpha d_p, p - i hbar c d_q] B, derivatives acting on B only.
/// c = 1 - alpha reproduces star_alpha; other values of c are kept for comparison.
inline PolyObservable star_shift_form(const PolyObservable& a, const PolyObservable& b, double alpha, double c,
                                      double hbar = 1.0) {
  PolyObservable out;
  const cplx x = kI * hbar * alpha;
  const cplx y = -kI * hbar * c;
  for (int j = 0; j <= std::max(0, a.degree_q()); ++j)
    for (int k = 0; k <= std::max(0, a.degree_p()); ++k)
      out += std::pow(x, j) * std::pow(y, k) / (factorial(j) * factorial(k)) * detail::cross_term(a, b, j, k, k, j);
  return out;
}

/// Poisson bracket d_qA d_pB - d_pA d_qB.
inline PolyObservable poisson(const PolyObservable& a, const PolyObservable& b) {
  return a.dq() * b.dp() - a.dp() * b.dq();
}

/// Coefficients of hbar^k in the bracket (A *_a B - B *_a A) / (i hbar).
inline std::vector<PolyObservable> bracket_orders(const PolyObservable& a, const PolyObservable& b, double alpha) {
  const auto ab = star_alpha_orders(a, b, alpha);
  const auto ba = star_alpha_orders(b, a, alpha);
  std::vector<PolyObservable> out;
  for (std::size_t k = 1; k < std::max(ab.size(), ba.size()); ++k) {
    PolyObservable t;
    if (k < ab.size()) t += ab[k];
    if (k < ba.size()) t -= ba[k];
    out.push_back(-kI * t);
  }
  if (out.empty()) out.emplace_back();
  return out;
}

inline PolyObservable bracket(const PolyObservable& a, const PolyObservable& b, double alpha, double hbar = 1.0) {
  PolyObservable out;
  const auto orders = bracket_orders(a, b, alpha);
  for (std::size_t k = 0; k < orders.size(); ++k) out += std::pow(hbar, static_cast<double>(k)) * orders[k];
  return out;
}

/// star_alpha between a polynomial and a sampled field, with spectral derivatives of the field.
/// poly_left selects A *_a F (true) or F *_a A (false). The series terminates at deg A.
inline Field star_alpha_field(const PolyObservable& a, const Field& f, double alpha, bool poly_left = true) {
  const PhaseGrid& g = f.grid();
  const double hbar = g.hbar;
  Field out(g);
  for (int k = 0; k <= std::max(0, a.degree()); ++k) {
    for (int j = 0; j <= k; ++j) {
      const double w = binomial(k, j) * std::pow(alpha, j) * std::pow(-(1.0 - alpha), k - j);
      if (w == 0.0) continue;
      // Left factor takes d_q^j d_p^(k-j), right factor d_p^j d_q^(k-j).
      const PolyObservable da = poly_left ? a.dq(j).dp(k - j) : a.dp(j).dq(k - j);
      if (da.empty()) continue;
      const int fq = poly_left ? k - j : j;
      const int fp = poly_left ? j : k - j;
      const Field df = field_derivative(field_derivative(f, 0, fq), 1, fp);
      const cplx c = w * std::pow(kI * hbar, k) / factorial(k);
      for (std::size_t i = 0; i < g.n(); ++i)
        for (std::size_t l = 0; l < g.n(); ++l) out(i, l) += c * da(g.q(i), g.p(l)) * df(i, l);
    }
  }
  return out;
}

}  // namespace xphase
