#pragma once

// Commuting bivariate polynomials sum c_nm q^n p^m with complex coefficients.

#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <string>
#include <utility>

#include "xphase/errors.hpp"

namespace xphase {

using Exponents = std::pair<int, int>;  // (power of q, power of p)

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

inline double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

/// n! / (n - k)!, zero for k > n.
inline double falling(int n, int k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= n - i;
  return r;
}

class PolyObservable {
 public:
  using cplx = std::complex<double>;
  using Terms = std::map<Exponents, cplx>;

  PolyObservable() = default;
  explicit PolyObservable(Terms t) : terms_(std::move(t)) { prune(); }

  static PolyObservable constant(cplx c) { return monomial(0, 0, c); }
  static PolyObservable monomial(int n, int m, cplx c = 1.0) {
    if (n < 0 || m < 0) throw ValidationError("polynomial: exponents must be nonnegative");
    PolyObservable out;
    if (c != cplx(0.0)) out.terms_[{n, m}] = c;
    return out;
  }
  static PolyObservable q() { return monomial(1, 0); }
  static PolyObservable p() { return monomial(0, 1); }

  const Terms& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  cplx coefficient(int n, int m) const {
    auto it = terms_.find({n, m});
    return it == terms_.end() ? cplx(0.0) : it->second;
  }

  void add(int n, int m, cplx c) {
    if (c == cplx(0.0)) return;
    auto& v = terms_[{n, m}];
    v += c;
    if (v == cplx(0.0)) terms_.erase({n, m});
  }

  int degree() const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, e.first + e.second);
    return d;
  }
  int degree_q() const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, e.first);
    return d;
  }
  int degree_p() const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, e.second);
    return d;
  }

  bool is_real() const {
    for (const auto& [e, c] : terms_)
      if (c.imag() != 0.0) return false;
    return true;
  }

  cplx operator()(double qv, double pv) const {
    cplx s = 0.0;
    for (const auto& [e, c] : terms_) s += c * std::pow(qv, e.first) * std::pow(pv, e.second);
    return s;
  }

  /// k-th partial derivative along q (axis 0) or p (axis 1).
  PolyObservable derivative(int axis, int k) const {
    PolyObservable out;
    for (const auto& [e, c] : terms_) {
      const int pw = axis == 0 ? e.first : e.second;
      if (pw < k) continue;
      const double f = falling(pw, k);
      if (axis == 0) out.add(e.first - k, e.second, c * f);
      else out.add(e.first, e.second - k, c * f);
    }
    return out;
  }
  PolyObservable dq(int k = 1) const { return derivative(0, k); }
  PolyObservable dp(int k = 1) const { return derivative(1, k); }

  PolyObservable& operator+=(const PolyObservable& o) {
    for (const auto& [e, c] : o.terms_) add(e.first, e.second, c);
    return *this;
  }
  PolyObservable& operator-=(const PolyObservable& o) {
    for (const auto& [e, c] : o.terms_) add(e.first, e.second, -c);
    return *this;
  }
  PolyObservable& operator*=(cplx s) {
    if (s == cplx(0.0)) terms_.clear();
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }
  friend PolyObservable operator+(PolyObservable a, const PolyObservable& b) { return a += b; }
  friend PolyObservable operator-(PolyObservable a, const PolyObservable& b) { return a -= b; }
  friend PolyObservable operator*(PolyObservable a, cplx s) { return a *= s; }
  friend PolyObservable operator*(cplx s, PolyObservable a) { return a *= s; }

  /// Ordinary (commutative) product.
  friend PolyObservable operator*(const PolyObservable& a, const PolyObservable& b) {
    PolyObservable out;
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) out.add(ea.first + eb.first, ea.second + eb.second, ca * cb);
    return out;
  }

  friend bool operator==(const PolyObservable& a, const PolyObservable& b) { return a.terms_ == b.terms_; }

  /// Largest coefficient difference.
  friend double max_coefficient_diff(const PolyObservable& a, const PolyObservable& b) {
    double m = 0.0;
    for (const auto& [e, c] : (a - b).terms_) m = std::max(m, std::abs(c));
    return m;
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    char buf[96];
    for (const auto& [e, c] : terms_) {
      if (!out.empty()) out += " + ";
      std::snprintf(buf, sizeof buf, "(%.17g%+.17gi)", c.real(), c.imag());
      out += buf;
      if (e.first) out += "*q^" + std::to_string(e.first);
      if (e.second) out += "*p^" + std::to_string(e.second);
    }
    return out;
  }

 private:
  void prune() {
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (it->first.first < 0 || it->first.second < 0) throw ValidationError("polynomial: exponents must be nonnegative");
      it = it->second == cplx(0.0) ? terms_.erase(it) : std::next(it);
    }
  }

  Terms terms_;
};

}  // namespace xphase
