#include <catch_amalgamated.hpp>

#include <map>
#include <random>

#include "support.hpp"
#include "xphase/observables.hpp"
#include "xphase/starprod.hpp"

using namespace xphase;

namespace {

using P = PolyObservable;

P random_poly(std::mt19937_64& rng, int max_degree) {
  std::uniform_int_distribution<int> coef(-3, 3);
  P out;
  for (int n = 0; n <= max_degree; ++n)
    for (int m = 0; n + m <= max_degree; ++m) out.add(n, m, static_cast<double>(coef(rng)));
  return out;
}

double scale_of(const P& p) {
  double s = 1.0;
  for (const auto& [e, c] : p.terms()) s = std::max(s, std::abs(c));
  return s;
}

/// Realized monomials under one ordering, cached so polynomials combine linearly.
struct MonomialMatrices {
  const BasisSet* basis;
  double order;
  std::map<Exponents, Eigen::MatrixXcd> cache;

  const Eigen::MatrixXcd& get(int n, int m) {
    auto it = cache.find({n, m});
    if (it == cache.end()) it = cache.emplace(Exponents{n, m}, realize_operator(order_monomial(n, m, order), *basis).entries).first;
    return it->second;
  }
  Eigen::MatrixXcd of(const P& p) {
    const auto k = static_cast<Eigen::Index>(basis->size());
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(k, k);
    for (const auto& [e, c] : p.terms()) out += c * get(e.first, e.second);
    return out;
  }
};

}  // namespace

TEST_CASE("star examples", "[starprod]") {
  const double hbar = 0.6;
  CHECK(star(P::q(), P::p(), hbar) == P::monomial(1, 1));
  CHECK(star(P::p(), P::q(), hbar) == P::monomial(1, 1) + P::constant(-kI * hbar));
  CHECK(star(P::q(), P::q(), hbar) == P::monomial(2, 0));
  CHECK(max_coefficient_diff(star(P::monomial(0, 2), P::q(), hbar),
                             P::monomial(1, 2) + P::monomial(0, 1, -2.0 * kI * hbar)) < 1e-15);
  // p^2 * q^2 = q^2 p^2 - 4 i hbar q p - 2 hbar^2
  const auto e = star(P::monomial(0, 2), P::monomial(2, 0), hbar);
  CHECK(max_coefficient_diff(e, P::monomial(2, 2) + P::monomial(1, 1, -4.0 * kI * hbar) +
                                    P::constant(-2.0 * hbar * hbar)) < 1e-15);
}

TEST_CASE("star_alpha examples", "[starprod]") {
  const double hbar = 1.3;
  for (double a : {0.0, 0.25, 0.5, 1.0}) {
    CHECK(max_coefficient_diff(star_alpha(P::q(), P::p(), a, hbar), P::monomial(1, 1) + P::constant(kI * hbar * a)) < 1e-15);
    CHECK(max_coefficient_diff(star_alpha(P::p(), P::q(), a, hbar),
                               P::monomial(1, 1) + P::constant(-kI * hbar * (1.0 - a))) < 1e-15);
    // Functions of q alone compose pointwise.
    CHECK(star_alpha(P::q(), P::monomial(2, 0), a, hbar) == P::monomial(3, 0));
    CHECK(star_alpha(P::monomial(0, 3), P::monomial(0, 2), a, hbar) == P::monomial(0, 5));
  }
  // Weyl case is symmetric in the sign of hbar: the hbar^1 part is antisymmetric.
  const auto orders = star_alpha_orders(P::monomial(2, 1), P::monomial(1, 2), 0.5);
  const auto swapped = star_alpha_orders(P::monomial(1, 2), P::monomial(2, 1), 0.5);
  CHECK(max_coefficient_diff(orders[1], -1.0 * swapped[1]) < 1e-15);
  CHECK(max_coefficient_diff(orders[2], swapped[2]) < 1e-15);
}

TEST_CASE("star_alpha at alpha = 0 reduces to star", "[starprod][property]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_poly(rng, 4), b = random_poly(rng, 4);
    const double hbar = 0.5 + 0.1 * trial;
    CHECK(max_coefficient_diff(star_alpha(a, b, 0.0, hbar), star(a, b, hbar)) < 1e-12 * scale_of(star(a, b, hbar)));
  }
}

TEST_CASE("star_alpha is associative", "[starprod][property]") {
  std::mt19937_64 rng(9);
  for (double a : {0.0, 0.3, 0.5, 1.0})
    for (int trial = 0; trial < 10; ++trial) {
      const auto x = random_poly(rng, 3), y = random_poly(rng, 3), z = random_poly(rng, 3);
      const auto l = star_alpha(star_alpha(x, y, a), z, a);
      const auto r = star_alpha(x, star_alpha(y, z, a), a);
      CHECK(max_coefficient_diff(l, r) < 1e-11 * scale_of(l));
    }
}

TEST_CASE("star_alpha mirrors operator products", "[starprod][property]") {
  const auto g = xtest::standard_grid();
  const auto basis = harmonic_basis(g, 1, 1, 32);
  const Eigen::Index block = 26;
  double worst = 0.0;
  for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    // star_alpha corresponds to realizing symbols with ordering parameter 1 - alpha.
    MonomialMatrices mats{&basis, 1.0 - a, {}};
    for (int da = 0; da <= 6; ++da)
      for (int n1 = 0; n1 <= da; ++n1)
        for (int db = 0; da + db <= 6; ++db)
          for (int n2 = 0; n2 <= db; ++n2) {
            const auto A = P::monomial(n1, da - n1), B = P::monomial(n2, db - n2);
            const Eigen::MatrixXcd lhs = mats.of(star_alpha(A, B, a)).topLeftCorner(block, block);
            const Eigen::MatrixXcd rhs = (mats.of(A) * mats.of(B)).topLeftCorner(block, block);
            const double err = (lhs - rhs).cwiseAbs().maxCoeff() / std::max(1.0, rhs.cwiseAbs().maxCoeff());
            worst = std::max(worst, err);
          }
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("bracket examples", "[starprod]") {
  for (double a : {0.0, 0.5, 1.0}) CHECK(bracket(P::q(), P::p(), a, 0.8) == P::constant(1.0));
  CHECK(max_coefficient_diff(bracket(P::monomial(2, 0), P::monomial(0, 2), 0.5, 0.8), P::monomial(1, 1, 4.0)) < 1e-14);
  // Weyl bracket of q^3 and p^3: 9 q^2 p^2 - (3/2) hbar^2.
  for (double hbar : {1.0, 0.5, 0.25}) {
    const auto b = bracket(P::monomial(3, 0), P::monomial(0, 3), 0.5, hbar);
    CHECK(max_coefficient_diff(b, P::monomial(2, 2, 9.0) + P::constant(-1.5 * hbar * hbar)) < 1e-13);
  }
  // The deviation from the Poisson bracket shrinks by 4 when hbar halves.
  const auto dev = [](double hbar) {
    return std::abs((bracket(P::monomial(3, 0), P::monomial(0, 3), 0.5, hbar) -
                     poisson(P::monomial(3, 0), P::monomial(0, 3)))
                        .coefficient(0, 0));
  };
  CHECK(std::abs(dev(1.0) / dev(0.5) - 4.0) < 1e-12);
  CHECK(std::abs(dev(0.5) / dev(0.25) - 4.0) < 1e-12);
}

TEST_CASE("bracket reduces to the Poisson bracket at leading order", "[starprod][property]") {
  std::mt19937_64 rng(13);
  for (double a : {0.0, 0.2, 0.5, 0.9, 1.0})
    for (int trial = 0; trial < 10; ++trial) {
      const auto x = random_poly(rng, 4), y = random_poly(rng, 4);
      const auto orders = bracket_orders(x, y, a);
      const auto pb = poisson(x, y);
      CHECK(max_coefficient_diff(orders[0], pb) < 1e-12 * scale_of(pb));
      // Antisymmetry at every order.
      const auto rev = bracket_orders(y, x, a);
      for (std::size_t k = 0; k < orders.size(); ++k) CHECK(max_coefficient_diff(orders[k], -1.0 * rev[k]) < 1e-12);
    }
}

TEST_CASE("shift form with coefficient 1 - alpha reproduces star_alpha", "[starprod]") {
  std::mt19937_64 rng(21);
  for (double a : {0.0, 0.3, 0.5, 1.0})
    for (int trial = 0; trial < 5; ++trial) {
      const auto x = random_poly(rng, 3), y = random_poly(rng, 3);
      const auto s = star_alpha(x, y, a, 0.9);
      CHECK(max_coefficient_diff(star_shift_form(x, y, a, 1.0 - a, 0.9), s) < 1e-12 * scale_of(s));
    }
  // A coefficient alpha(1 - alpha) instead collapses to the pointwise product at alpha = 0,
  // which contradicts p *_0 q = qp - i hbar.
  const auto wrong = star_shift_form(P::p(), P::q(), 0.0, 0.0, 1.0);
  CHECK(wrong == P::monomial(1, 1));
  CHECK(!(wrong == star_alpha(P::p(), P::q(), 0.0, 1.0)));
}

TEST_CASE("star products with a state are cyclic under the integral", "[starprod][property]") {
  // Integrating by parts, int A *_a W = int [exp(i hbar (1 - 2a) d_q d_p) A] W, for either order.
  const auto g = xtest::standard_grid();
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 4; ++trial) {
    const auto chi0 = pure_chi(xtest::superpose(g, xtest::random_coefficients(rng, 4)));
    const auto A = random_poly(rng, 3);
    for (double a : {0.0, 0.5, 0.8}) {
      const auto w = alpha_shift(chi0, a);
      P shifted;
      for (int k = 0; k <= A.degree(); ++k)
        shifted += std::pow(kI * (1.0 - 2.0 * a), k) / factorial(k) * A.dq(k).dp(k);
      const cplx oracle = expect(w, shifted);
      const cplx left = integrate_2d(star_alpha_field(A, w.values, a, true));
      const cplx right = integrate_2d(star_alpha_field(A, w.values, a, false));
      const double tol = 1e-9 * std::max(1.0, std::abs(oracle));
      CHECK(std::abs(left - right) < tol);
      CHECK(std::abs(left - oracle) < tol);
      // Only the symmetric ordering drops the star entirely.
      if (a == 0.5) CHECK(std::abs(left - expect(w, A)) < tol);
    }
  }
}

TEST_CASE("ordering inside a state average matters", "[starprod]") {
  // <q * p> - <p * q> = i hbar for every state, so the two orders never integrate alike.
  const auto g = xtest::standard_grid();
  const auto w = alpha_shift(pure_chi(xtest::sho_wave(g, 0)), 0.5);
  const cplx qp = expect(w, star_alpha(P::q(), P::p(), 0.5));
  const cplx pq = expect(w, star_alpha(P::p(), P::q(), 0.5));
  CHECK(std::abs(qp - pq - kI) < 1e-10);
}
