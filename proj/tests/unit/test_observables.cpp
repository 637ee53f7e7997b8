#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "support.hpp"
#include "xphase/observables.hpp"
#include "xphase/starprod.hpp"

using namespace xphase;
using Catch::Matchers::WithinAbs;

namespace {

/// Weyl ordering as the average over all distinct arrangements of n q's and m pi's.
OrderedExpression symmetrized(int n, int m) {
  std::vector<int> letters(static_cast<std::size_t>(n), 0);
  letters.insert(letters.end(), static_cast<std::size_t>(m), 1);
  std::vector<std::vector<std::pair<Letter, int>>> words;
  do {
    std::vector<std::pair<Letter, int>> w;
    for (int l : letters) w.emplace_back(l == 0 ? Letter::q : Letter::pi_q, 1);
    words.push_back(std::move(w));
  } while (std::next_permutation(letters.begin(), letters.end()));
  OrderedExpression e;
  for (auto& w : words) e.add(1.0 / static_cast<double>(words.size()), std::move(w));
  return e;
}

double max_on_bulk(const Field& f, const PolyObservable& target, double radius) {
  const auto& g = f.grid();
  double e = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t j = 0; j < g.n(); ++j)
      if (std::abs(g.q(i)) <= radius && std::abs(g.p(j)) <= radius)
        e = std::max(e, std::abs(f(i, j) - target(g.q(i), g.p(j))));
  return e;
}

/// Grid used for the ordering sweeps: the direct alpha quadrature stays at round-off out to the p edge.
PhaseGrid sweep_grid() { return xtest::standard_grid(); }

}  // namespace

TEST_CASE("expect examples on the ground state", "[observables]") {
  const auto g = xtest::standard_grid();
  const auto chi = pure_chi(xtest::sho_wave(g, 0));
  CHECK_THAT(expect(chi, PolyObservable::monomial(2, 0)).real(), WithinAbs(0.5, 1e-12));
  CHECK_THAT(expect(chi, PolyObservable::monomial(0, 2)).real(), WithinAbs(0.5, 1e-12));
  CHECK(std::abs(expect(chi, PolyObservable::constant(1.0)) - 1.0) < 1e-8);
  const auto w = alpha_shift(chi, 0.5);
  CHECK(std::abs(expect(w, PolyObservable::monomial(1, 1))) < 1e-12);
  // At alpha = 0 the qp moment is <pi q> = -i hbar / 2 for the ground state.
  const cplx qp0 = expect(chi, PolyObservable::monomial(1, 1));
  CHECK_THAT(qp0.real(), WithinAbs(0.0, 1e-12));
  CHECK_THAT(qp0.imag(), WithinAbs(-0.5, 1e-12));
}

TEST_CASE("averaging with Re chi equals the symmetric combination", "[observables]") {
  const auto g = xtest::standard_grid();
  std::mt19937_64 rng(12);
  const auto chi = pure_chi(xtest::superpose(g, xtest::random_coefficients(rng, 4)));
  const auto chi1 = alpha_shift(chi, 1.0);
  for (auto [n, m] : {std::pair{1, 1}, {2, 1}, {1, 3}, {2, 2}}) {
    const auto o = PolyObservable::monomial(n, m);
    const cplx sym = 0.5 * (expect(chi, o) + expect(chi1, o));
    CHECK(std::abs(sym.imag()) < 1e-8);
    CHECK_THAT(expect_real_part(chi, o), WithinAbs(sym.real(), 1e-10));
  }
}

TEST_CASE("expect rejects integrands that do not decay", "[observables]") {
  const auto g = make_phase_grid(64, -10, 10);
  const auto chi = pure_chi(xtest::sho_wave(g, 0));
  CHECK_NOTHROW(expect(chi, PolyObservable::monomial(2, 0)));
  const auto small = make_phase_grid(64, -6, 6);
  CHECK_THROWS_AS(expect(pure_chi(xtest::sho_wave(small, 0)), PolyObservable::monomial(40, 0)), NumericalError);
}

TEST_CASE("order_monomial examples", "[observables]") {
  const double hbar = 0.7;
  for (double a : {0.0, 0.3, 0.5, 1.0}) {
    // (1 - a) pi q + a q pi = q pi - i hbar (1 - a)
    const auto nf = order_monomial(1, 1, a).normal_form(hbar);
    CHECK(std::abs(nf.coefficient(1, 1) - 1.0) < 1e-15);
    CHECK(std::abs(nf.coefficient(0, 0) - (-kI * hbar * (1.0 - a))) < 1e-15);
  }
  // Average of alpha = 0 and alpha = 1 is the symmetric ordering.
  const auto avg = 0.5 * order_monomial(1, 1, 0.0) + 0.5 * order_monomial(1, 1, 1.0);
  const auto sym = 0.5 * OrderedExpression::word(1.0, {{Letter::q, 1}, {Letter::pi_q, 1}}) +
                   0.5 * OrderedExpression::word(1.0, {{Letter::pi_q, 1}, {Letter::q, 1}});
  CHECK(max_coefficient_diff(avg.normal_form(1.0), sym.normal_form(1.0)) < 1e-15);
}

TEST_CASE("alpha = 1/2 ordering is the fully symmetrized (Weyl) ordering", "[observables]") {
  for (int n = 0; n <= 4; ++n)
    for (int m = 0; m <= 4; ++m) {
      const auto lhs = order_monomial(n, m, 0.5).normal_form(1.3);
      const auto rhs = symmetrized(n, m).normal_form(1.3);
      CHECK(max_coefficient_diff(lhs, rhs) < 1e-12);
      // The printed 2^{-m} binomial form.
      OrderedExpression printed;
      for (int r = 0; r <= m; ++r)
        printed.add(std::pow(2.0, -m) * binomial(m, r), {{Letter::pi_q, r}, {Letter::q, n}, {Letter::pi_q, m - r}});
      CHECK(max_coefficient_diff(lhs, printed.normal_form(1.3)) < 1e-12);
    }
}

TEST_CASE("normal form is canonical", "[observables]") {
  const double hbar = 1.0;
  // pi q^2 = q^2 pi - 2 i hbar q
  const auto a = OrderedExpression::word(1.0, {{Letter::pi_q, 1}, {Letter::q, 2}});
  const auto b = OrderedExpression::word(1.0, {{Letter::q, 2}, {Letter::pi_q, 1}}) +
                 OrderedExpression::word(-2.0 * kI * hbar, {{Letter::q, 1}});
  CHECK(max_coefficient_diff(a.normal_form(hbar), b.normal_form(hbar)) == 0.0);
  // Round trip through from_normal_form.
  const auto e = order_monomial(3, 2, 0.25);
  CHECK(max_coefficient_diff(OrderedExpression::from_normal_form(e.normal_form(hbar)).normal_form(hbar),
                             e.normal_form(hbar)) < 1e-15);
}

TEST_CASE("realize_operator matches ladder-operator matrix elements", "[observables]") {
  const auto g = xtest::standard_grid();
  const auto basis = harmonic_basis(g, 1, 1, 8);
  const auto q = realize_operator(OrderedExpression::q(), basis);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      const double expected = (j == i + 1) ? std::sqrt(j / 2.0) : (i == j + 1) ? std::sqrt(i / 2.0) : 0.0;
      REQUIRE(std::abs(q.entries(i, j) - expected) < 1e-12);
    }
  CHECK_THAT(q.entries(0, 1).real(), WithinAbs(1.0 / std::sqrt(2.0), 1e-13));
  const auto sym = realize_operator(order_monomial(1, 1, 0.5), basis);
  CHECK(std::abs(sym.entries(0, 0)) < 1e-12);
  const auto p2 = realize_operator(OrderedExpression::word(1.0, {{Letter::pi_q, 2}}), basis);
  CHECK(std::abs(p2.entries(0, 0) - 0.5) < 1e-12);
  CHECK(std::abs(p2.entries(0, 2) - (-1.0 / std::sqrt(2.0))) < 1e-12);
}

TEST_CASE("realize_operator rejects under-resolved differentiation", "[observables]") {
  const auto g = make_phase_grid(32, -3, 3);
  const auto basis = harmonic_basis(g, 1, 1, 8);
  CHECK_THROWS_AS(realize_operator(OrderedExpression::word(1.0, {{Letter::pi_q, 4}}), basis), NumericalError);
}

TEST_CASE("Weyl and symmetric orderings realize Hermitian matrices", "[observables][property]") {
  const auto g = xtest::standard_grid();
  const auto basis = harmonic_basis(g, 1, 1, 12);
  for (int n = 0; n <= 4; ++n)
    for (int m = 0; n + m <= 4; ++m) {
      CHECK(realize_operator(order_monomial(n, m, 0.5), basis).hermitian_deviation() < 1e-10);
      const auto sym = 0.5 * order_monomial(n, m, 0.0) + 0.5 * order_monomial(n, m, 1.0);
      CHECK(realize_operator(sym, basis).hermitian_deviation() < 1e-10);
    }
}

TEST_CASE("ordering_consistency examples", "[observables]") {
  const auto g = sweep_grid();
  const auto psi0 = xtest::sho_wave(g, 0);
  CHECK(ordering_consistency(psi0, 1, 1, 0.5).residual < 1e-8);
  for (double a : {0.0, 0.3, 0.5, 1.0}) CHECK(ordering_consistency(psi0, 2, 0, a).residual < 1e-8);
  const auto sup = xtest::superpose(g, {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)});
  const auto r0 = ordering_consistency(sup, 1, 1, 0.0);
  const auto r1 = ordering_consistency(sup, 1, 1, 1.0);
  CHECK(r0.residual < 1e-8);
  CHECK(r1.residual < 1e-8);
  CHECK(std::abs(r0.phase_space - std::conj(r1.phase_space)) < 1e-8);
}

TEST_CASE("ordering theorem and observable compensation sweep", "[observables][property]") {
  const auto g = sweep_grid();
  std::mt19937_64 rng(41);
  double worst_order = 0.0, worst_comp = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto psi = xtest::superpose(g, xtest::random_coefficients(rng, 5));
    const auto chi0 = pure_chi(psi);
    for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const auto chia = wigner_direct(psi, AlphaParameter(a));
      for (int n = 0; n <= 4; ++n)
        for (int m = 0; n + m <= 4; ++m) {
          const cplx ps = expect(chia, PolyObservable::monomial(n, m));
          const cplx op = operator_expectation(order_monomial(n, m, a), psi, 1.0);
          worst_order = std::max(worst_order, std::abs(ps - op));
          const cplx comp = expect(chia, u_alpha_monomial(n, m, a));
          worst_comp = std::max(worst_comp, std::abs(comp - expect(chi0, PolyObservable::monomial(n, m))));
        }
    }
  }
  CHECK(worst_order < 1e-7);
  CHECK(worst_comp < 1e-7);
}

TEST_CASE("u_alpha_monomial examples", "[observables]") {
  const double a = 0.3, hbar = 1.1;
  const auto u11 = u_alpha_monomial(1, 1, a, hbar);
  CHECK(u11 == PolyObservable::monomial(1, 1) + PolyObservable::constant(-kI * hbar * a));
  const auto u21 = u_alpha_monomial(2, 1, a, hbar);
  CHECK(max_coefficient_diff(u21, PolyObservable::monomial(2, 1) + PolyObservable::monomial(1, 0, -2.0 * kI * hbar * a)) <
        1e-15);
  CHECK(u_alpha_monomial(5, 0, a, hbar) == PolyObservable::monomial(5, 0));
}

TEST_CASE("alpha = 0 ordering corresponds to the alpha = 1 compensated symbol", "[observables]") {
  // Normal-form coefficients of pi^m q^n, read as a symbol, equal u_alpha_monomial(n, m, 1).
  for (int n = 0; n <= 4; ++n)
    for (int m = 0; m <= 4; ++m)
      CHECK(max_coefficient_diff(order_monomial(n, m, 0.0).normal_form(0.8), u_alpha_monomial(n, m, 1.0, 0.8)) < 1e-12);
}

TEST_CASE("op_to_phase in a complete grid basis is exact", "[observables]") {
  const auto g = make_phase_grid(128, -12, 12);
  const auto full = spectral_eigenbasis(g, 1.0, [](double q) { return 0.5 * q * q; }, g.n());
  CHECK(gram_deviation(full) < 1e-12);
  const auto id = op_to_phase(OperatorMatrix{full, Eigen::MatrixXcd::Identity(128, 128)});
  CHECK(max_on_bulk(id, PolyObservable::constant(1.0), 1e9) < 1e-10);

  const auto h = realize_operator(0.5 * OrderedExpression::word(1.0, {{Letter::pi_q, 2}}) +
                                      0.5 * OrderedExpression::word(1.0, {{Letter::q, 2}}),
                                  full, 0.0);
  // Symbol of H from star composition of its factors.
  const auto hs = 0.5 * star(PolyObservable::p(), PolyObservable::p()) + 0.5 * star(PolyObservable::q(), PolyObservable::q());
  CHECK(hs == 0.5 * PolyObservable::monomial(0, 2) + 0.5 * PolyObservable::monomial(2, 0));
  // The Nyquist momentum row is excluded from the comparison (odd derivatives vanish there).
  double err = 0.0;
  const auto hf = op_to_phase(h);
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t j = 1; j < g.n(); ++j) err = std::max(err, std::abs(hf(i, j) - hs(g.q(i), g.p(j))));
  CHECK(err < 1e-9);

  // Round trip q^n pi^m -> q^n p^m.
  for (int n = 0; n <= 3; ++n)
    for (int m = 0; n + m <= 4; ++m) {
      const auto f = op_to_phase(realize_operator(order_monomial(n, m, 1.0), full, 0.0));
      double e = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < g.n(); ++i)
        for (std::size_t j = 1; j < g.n(); ++j) {
          const double v = std::pow(g.q(i), n) * std::pow(g.p(j), m);
          e = std::max(e, std::abs(f(i, j) - v));
          scale = std::max(scale, std::abs(v));
        }
      CHECK(e / scale < 1e-10);
    }
}

TEST_CASE("op_to_phase in a truncated basis reports its truncation error", "[observables]") {
  const auto g = xtest::standard_grid();
  const auto est = op_to_phase_estimated(OrderedExpression::q(), g, 10, 2.0);
  const double err = max_on_bulk(est.field, PolyObservable::q(), 2.0);
  CHECK(est.truncation_estimate > 0.0);
  CHECK(err <= est.truncation_estimate);
  for (int n = 0; n <= 2; ++n)
    for (int m = 0; n + m <= 2; ++m) {
      const auto s = op_to_phase_estimated(order_monomial(n, m, 1.0), g);
      CHECK(max_on_bulk(s.field, PolyObservable::monomial(n, m), s.bulk_radius) <= s.truncation_estimate);
    }
}

TEST_CASE("op_to_phase pairs with chi* to give expectation values", "[observables][property]") {
  const auto g = xtest::standard_grid();
  const auto basis = harmonic_basis(g, 1, 1, 32);
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    const auto c = xtest::random_coefficients(rng, 8);
    Eigen::VectorXcd cv(8);
    for (int k = 0; k < 8; ++k) cv(k) = c[static_cast<std::size_t>(k)];
    const auto psi = basis.combine(cv);
    const auto chi = pure_chi(psi);
    for (auto [n, m, a] : {std::tuple{1, 1, 0.5}, {2, 2, 0.0}, {3, 1, 0.25}}) {
      const auto expr = order_monomial(n, m, a);
      const auto f = op_to_phase(realize_operator(expr, basis));
      Field prod = f;
      for (std::size_t k = 0; k < prod.raw().size(); ++k) prod.raw()[k] *= std::conj(chi.values.raw()[k]);
      CHECK(std::abs(integrate_2d(prod) - operator_expectation(expr, psi, 1.0)) < 1e-9);
    }
  }
}

TEST_CASE("op_to_phase_alpha routes", "[observables]") {
  const auto g = make_phase_grid(128, -12, 12);
  const auto basis = harmonic_basis(g, 1, 1, 10);
  Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(10, 10);
  proj(0, 0) = 1.0;
  const OperatorMatrix p0{basis, proj};
  CHECK(max_abs_diff(op_to_phase_alpha(p0, 0.0), op_to_phase(p0)) < 1e-15);
  const auto w = wigner_direct(basis.functions[0], AlphaParameter(0.5));
  CHECK(max_abs_diff(op_to_phase_alpha(p0, 0.5), w.values * (2.0 * pi)) < 1e-7);

  const auto q = realize_operator(OrderedExpression::q(), basis);
  for (double a : {0.25, 0.5, 0.75}) {
    // The truncated-basis q symbol is not band-limited; the tail check is bypassed on purpose.
    const auto fft = op_to_phase_alpha(q, a, 0.0);
    const auto direct = op_to_phase_alpha_direct(q, a);
    CHECK(max_abs_diff(fft, direct) < 1e-7);
  }
  // The projector route agrees with the kernel route too.
  CHECK(max_abs_diff(op_to_phase_alpha_direct(p0, 0.5), w.values * (2.0 * pi)) < 1e-7);
}

TEST_CASE("op_to_phase_alpha of q is q against smooth test functions", "[observables]") {
  // Pointwise convergence in a truncated basis is slow (oscillating kernel sums);
  // smeared against a Gaussian the symbol is q to near round-off.
  const auto g = xtest::standard_grid();
  const auto qm = realize_operator(OrderedExpression::q(), harmonic_basis(g, 1, 1, 32));
  for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto f = op_to_phase_alpha(qm, a, 0.0);
    cplx s = 0.0, t = 0.0;
    for (std::size_t i = 0; i < g.n(); ++i)
      for (std::size_t j = 0; j < g.n(); ++j) {
        const double w = std::exp(-std::pow(g.q(i) - 0.5, 2) - std::pow(g.p(j) - 0.3, 2));
        s += f(i, j) * w;
        t += g.q(i) * w;
      }
    CHECK(std::abs(s - t) < 1e-8 * std::abs(t));
  }
}
