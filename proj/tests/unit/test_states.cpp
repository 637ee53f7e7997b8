#include <catch_amalgamated.hpp>

#include <random>

#include "support.hpp"
#include "xphase/states.hpp"
#include "xphase/transforms.hpp"

using namespace xphase;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Eigen::VectorXcd to_vector(const std::vector<cplx>& c) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(c.size()));
  for (std::size_t k = 0; k < c.size(); ++k) v(static_cast<Eigen::Index>(k)) = c[k];
  return v;
}

}  // namespace

TEST_CASE("harmonic basis matches closed-form eigenfunctions", "[states]") {
  const auto g = xtest::standard_grid();
  const auto basis = harmonic_basis(g, 1.0, 1.0, 10);
  REQUIRE(basis.size() == 10);
  for (unsigned k = 0; k < 10; ++k) {
    double err = 0.0;
    for (std::size_t i = 0; i < g.n(); ++i)
      err = std::max(err, std::abs(basis.functions[k].values[i] - xtest::sho_closed(k, g.q(i))));
    CHECK(err < 1e-12);
  }
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double q = g.q(i);
    REQUIRE_THAT(basis.functions[0].values[i].real(), WithinAbs(std::pow(pi, -0.25) * std::exp(-0.5 * q * q), 1e-15));
  }
  CHECK(gram_deviation(basis) < 1e-8);
  CHECK((*basis.energies)[3] == 3.5);
}

TEST_CASE("harmonic basis scales with mass, omega and hbar", "[states]") {
  const auto g = make_phase_grid(256, -16, 16, 0.5);
  const auto basis = harmonic_basis(g, 2.0, 1.5, 6);
  CHECK(gram_deviation(basis) < 1e-10);
  // <0|q^2|0> = hbar / (2 m omega)
  cplx q2 = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i) q2 += g.q(i) * g.q(i) * std::norm(basis.functions[0].values[i]) * g.dq();
  CHECK_THAT(q2.real(), WithinRel(0.5 / (2.0 * 2.0 * 1.5), 1e-12));
  CHECK((*basis.energies)[1] == 0.5 * 1.5 * 1.5);
}

TEST_CASE("harmonic basis rejects unresolvable counts", "[states]") {
  const auto g = make_phase_grid(64, -8, 8);
  CHECK_THROWS_AS(harmonic_basis(g, 1, 1, 64), ValidationError);
  CHECK_THROWS_AS(harmonic_basis(g, 1, 1, 17), ValidationError);
  CHECK_NOTHROW(harmonic_basis(g, 1, 1, 16));
  CHECK_THROWS_AS(harmonic_basis(g, 1, 1, 0), ValidationError);
  CHECK_THROWS_AS(harmonic_basis(g, -1, 1, 2), ValidationError);
}

TEST_CASE("pure_chi of the ground state", "[states]") {
  const auto g = xtest::standard_grid();
  const auto chi = pure_chi(xtest::sho_wave(g, 0));
  CHECK(chi.alpha == 0.0);
  double err = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t j = 0; j < g.n(); ++j) {
      const double q = g.q(i), p = g.p(j);
      const cplx expected = 1.0 / std::sqrt(2.0 * pi) / std::sqrt(pi) * std::exp(-(q * q + p * p) / 2.0 - kI * p * q);
      err = std::max(err, std::abs(chi.values(i, j) - expected));
    }
  CHECK(err < 1e-13);
  CHECK(std::abs(chi.total() - 1.0) < 1e-8);
}

TEST_CASE("pure_chi rejects unnormalized input", "[states]") {
  const auto g = make_phase_grid(64, -8, 8);
  auto psi = xtest::sho_wave(g, 0);
  for (auto& v : psi.values) v *= std::sqrt(2.0);
  CHECK_THROWS_AS(pure_chi(psi), ValidationError);
}

TEST_CASE("normalization property sweep", "[states][property]") {
  std::mt19937_64 rng(7);
  for (double hbar : {1.0, 0.5}) {
    const auto g = xtest::standard_grid(hbar);
    const auto basis = harmonic_basis(g, 1.0, 1.0, 8);
    for (int trial = 0; trial < 25; ++trial) {
      const auto c = to_vector(xtest::random_coefficients(rng, 8));
      const auto chi = pure_chi(basis.combine(c), hbar);
      CHECK(std::abs(chi.total() - 1.0) < 1e-8);
      const auto m = marginals(chi);
      double sq = 0.0, sp = 0.0;
      for (std::size_t k = 0; k < g.n(); ++k) {
        sq += m.q_density[k] * g.dq();
        sp += m.p_density[k] * g.dp();
      }
      CHECK_THAT(sq, WithinAbs(1.0, 1e-8));
      CHECK_THAT(sp, WithinAbs(1.0, 1e-8));
    }
  }
}

TEST_CASE("validate_density examples", "[states]") {
  const auto half = validate_density(Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(2, 2) * 0.5));
  CHECK(half.valid());
  CHECK_THAT(half.purity, WithinAbs(0.5, 1e-15));

  std::mt19937_64 rng(3);
  const auto c = to_vector(xtest::random_coefficients(rng, 5));
  const auto proj = validate_density(DensityMatrix::projector(c));
  CHECK(proj.valid());
  CHECK_THAT(proj.purity, WithinAbs(1.0, 1e-12));

  Eigen::MatrixXcd nh = Eigen::MatrixXcd::Identity(2, 2) * 0.5;
  nh(0, 1) = 0.1;
  const auto r = validate_density(nh);
  CHECK_FALSE(r.hermitian);
  CHECK(r.trace);
  CHECK(r.failures() == "hermitian");

  Eigen::MatrixXcd neg(2, 2);
  neg << 1.2, 0.0, 0.0, -0.2;
  const auto rn = validate_density(neg);
  CHECK_FALSE(rn.psd);
  CHECK_THAT(rn.min_eigenvalue, WithinAbs(-0.2, 1e-14));

  // Within the -1e-10 eigenvalue allowance.
  Eigen::MatrixXcd tiny(2, 2);
  tiny << 1.0 + 5e-11, 0.0, 0.0, -5e-11;
  CHECK(validate_density(tiny).psd);

  CHECK_THROWS_AS(validate_density(Eigen::MatrixXcd(2, 3)), ValidationError);
}

TEST_CASE("mixed_chi reduces to pure_chi for a projector", "[states]") {
  const auto g = xtest::standard_grid();
  const auto basis = harmonic_basis(g, 1, 1, 4);
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(4, 4);
  a(0, 0) = 1.0;
  const auto mixed = mixed_chi(DensityMatrix(a), basis);
  const auto pure = pure_chi(basis.functions[0]);
  CHECK(max_abs_diff(mixed.values, pure.values) < 1e-14);

  std::mt19937_64 rng(5);
  const auto c = to_vector(xtest::random_coefficients(rng, 4));
  const auto m2 = mixed_chi(DensityMatrix::projector(c), basis);
  CHECK(max_abs_diff(m2.values, pure_chi(basis.combine(c)).values) < 1e-13);
}

TEST_CASE("mixed_chi marginals follow the mixture", "[states]") {
  const auto g = xtest::standard_grid();
  const auto basis = harmonic_basis(g, 1, 1, 2);
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(2, 2) * 0.5;
  const auto chi = mixed_chi(DensityMatrix(a), basis);
  const auto m = marginals(chi);
  double eq = 0.0, ep = 0.0;
  for (std::size_t k = 0; k < g.n(); ++k) {
    const double q = g.q(k), p = g.p(k);
    // Term-by-term: each pure state's |psi|^2 and |phi|^2 (closed forms).
    const double rho_q = 0.5 * (std::pow(xtest::sho_closed(0, q), 2) + std::pow(xtest::sho_closed(1, q), 2));
    const double rho_p = 0.5 * (std::pow(xtest::sho_closed(0, p), 2) + std::pow(xtest::sho_closed(1, p), 2));
    eq = std::max(eq, std::abs(m.q_density[k] - rho_q));
    ep = std::max(ep, std::abs(m.p_density[k] - rho_p));
  }
  CHECK(eq < 1e-12);
  CHECK(ep < 1e-12);
}

TEST_CASE("mixed_chi reports which admissibility condition fails", "[states]") {
  const auto g = make_phase_grid(64, -8, 8);
  const auto basis = harmonic_basis(g, 1, 1, 3);
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(3, 3) * 0.3;
  CHECK_THROWS_WITH(mixed_chi(DensityMatrix(a), basis), ContainsSubstring("trace"));
  a(0, 0) = 0.5;
  a(1, 1) = 0.5;
  a(2, 2) = 0.0;
  a(0, 2) = 0.3;
  CHECK_THROWS_WITH(mixed_chi(DensityMatrix(a), basis), ContainsSubstring("hermitian"));
  a(2, 0) = 0.3;
  CHECK_THROWS_WITH(mixed_chi(DensityMatrix(a), basis), ContainsSubstring("positive-semidefinite"));
  Eigen::MatrixXcd big = Eigen::MatrixXcd::Identity(4, 4) * 0.25;
  CHECK_THROWS_AS(mixed_chi(DensityMatrix(big), basis), ValidationError);
}

TEST_CASE("mixed_chi is linear in the density matrix", "[states][property]") {
  const auto g = make_phase_grid(128, -12, 12);
  const auto basis = harmonic_basis(g, 1, 1, 5);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = DensityMatrix::projector(to_vector(xtest::random_coefficients(rng, 5)));
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(5, 5);
    double tr = 0.0;
    for (int k = 0; k < 5; ++k) tr += (b(k, k) = u(rng)).real();
    b /= tr;
    const double lam = u(rng);
    const auto combo = mixed_chi(DensityMatrix(lam * a.entries + (1 - lam) * b), basis);
    const Field sum = mixed_chi(a, basis).values * lam + mixed_chi(DensityMatrix(b), basis).values * (1 - lam);
    CHECK(max_abs_diff(combo.values, sum) < 1e-14);
  }
}

TEST_CASE("marginals of the ground state", "[states]") {
  const auto g = xtest::standard_grid();
  const auto chi = pure_chi(xtest::sho_wave(g, 0));
  const auto m = marginals(chi);
  double err = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i)
    err = std::max(err, std::abs(m.q_density[i] - std::exp(-g.q(i) * g.q(i)) / std::sqrt(pi)));
  CHECK(err < 1e-12);

  const auto w = alpha_shift(chi, 0.5);
  const auto mw = marginals(w);
  double diff = 0.0;
  for (std::size_t k = 0; k < g.n(); ++k)
    diff = std::max({diff, std::abs(mw.q_density[k] - m.q_density[k]), std::abs(mw.p_density[k] - m.p_density[k])});
  CHECK(diff < 1e-8);
}

TEST_CASE("marginals reject a non-admissible field", "[states]") {
  const auto g = make_phase_grid(64, -8, 8);
  const auto f = Field::from_function(g, [](double q, double p) { return kI * std::exp(-q * q - p * p); });
  CHECK_THROWS_AS(marginals(PhaseState{f, 0.0}), NumericalError);
}

TEST_CASE("factorization identities", "[states]") {
  const auto g = xtest::standard_grid();
  const auto psi = xtest::sho_wave(g, 0);
  const auto r = check_factor_identities(pure_chi(psi), psi);
  CHECK(r.q_identity < 1e-8);
  CHECK(r.p_identity < 1e-8);
  // Both sides vanish where chi does: far corner of the plane.
  CHECK(r.q_residual(0, 0).real() < 1e-15);
  CHECK(r.p_residual(0, g.n() - 1).real() < 1e-15);

  // Wrong sign in the plane-wave factor breaks the identity at O(1).
  auto bad = pure_chi(psi);
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t j = 0; j < g.n(); ++j) bad.values(i, j) *= std::exp(2.0 * kI * g.p(j) * g.q(i));
  const auto rb = check_factor_identities(bad, psi);
  CHECK(rb.q_identity > 0.1);
  CHECK(rb.p_identity > 0.1);
}

TEST_CASE("factorization identities on random pure states", "[states][property]") {
  const auto g = xtest::standard_grid();
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const auto psi = xtest::superpose(g, xtest::random_coefficients(rng, 6));
    const auto r = check_factor_identities(pure_chi(psi), psi);
    CHECK(r.q_identity < 1e-8);
    CHECK(r.p_identity < 1e-8);
  }
}
