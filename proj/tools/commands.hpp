#pragma once

// The subcommands as plain functions: config in, tables and reports out. Writing to disk
// is left to emit() so the same results can be checked in-process.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "table.hpp"

namespace xcli {

struct CommandOutput {
  std::vector<Table> tables;
  std::optional<std::pair<std::string, json>> sidecar;  // file name, content (always JSON)
  json report;                                           // printed on stdout
  bool failed = false;                                   // a numerical check did not hold
};

inline json terms_json(const xphase::PolyObservable& p) {
  json out = json::array();
  for (const auto& [e, c] : p.terms()) out.push_back({{"q", e.first}, {"p", e.second}, {"re", c.real()}, {"im", c.imag()}});
  return out;
}

inline Table terms_table(const std::string& name, const xphase::PolyObservable& p) {
  Table t{name, {"q", "p", "re", "im"}, {}};
  for (const auto& [e, c] : p.terms()) t.add_row({double(e.first), double(e.second), c.real(), c.imag()});
  return t;
}

inline json grid_json(const xphase::PhaseGrid& g) {
  return {{"n", g.n()}, {"q_min", g.qgrid.q_min}, {"q_max", g.qgrid.q_max}, {"hbar", g.hbar}, {"dq", g.dq()}, {"dp", g.dp()}};
}

/// Wave function named by the state block, on the q axis of `grid`.
inline xphase::WaveFunction make_state(const RunConfig& cfg, const xphase::PhaseGrid& grid) {
  using namespace xphase;
  const StateConfig& st = cfg.require_state();
  const double omega = st.omega.value_or(cfg.potential && cfg.potential->kind == PotentialKind::harmonic ? cfg.potential->omega : 1.0);
  if (st.type == "eigenstate") {
    if (st.index + 1 > grid.n() / 4) {
      throw ValidationError("config: state.index: " + std::to_string(st.index) + " is not resolved by grid.n = " +
                            std::to_string(grid.n()) + " (needs index < n/4)");
    }
    return harmonic_basis(grid, cfg.mass, omega, st.index + 1).functions.back();
  }
  WaveFunction psi{grid.qgrid, std::vector<cplx>(grid.n())};
  if (st.type == "coherent") {
    const double a = cfg.mass * omega / grid.hbar;
    const double norm = std::pow(a / pi, 0.25);
    for (std::size_t i = 0; i < grid.n(); ++i) {
      const double x = grid.q(i) - st.q0;
      psi.values[i] = norm * std::exp(-0.5 * a * x * x + kI * st.p0 * grid.q(i) / grid.hbar);
    }
    return psi;
  }
  // samples: CSV with columns q, re, im on the configured grid
  Table t;
  try {
    t = from_csv(read_file(st.samples.string()));
  } catch (const ValidationError& e) {
    throw ValidationError("config: state.path: " + std::string(e.what()));
  }
  if (t.columns != std::vector<std::string>{"q", "re", "im"})
    throw ValidationError("config: state.path: samples file needs the header q,re,im");
  if (t.rows.size() != grid.n())
    throw ValidationError("config: state.path: " + std::to_string(t.rows.size()) + " samples for grid.n = " + std::to_string(grid.n()));
  for (std::size_t i = 0; i < grid.n(); ++i) {
    const auto& r = t.rows[i];
    if (!r[0] || !r[1] || !r[2]) throw ValidationError("config: state.path: empty cell in row " + std::to_string(i + 1));
    if (std::abs(*r[0] - grid.q(i)) > 1e-9 * (1.0 + std::abs(grid.q(i))))
      throw ValidationError("config: state.path: q in row " + std::to_string(i + 1) + " is not grid point " + fmt(grid.q(i)));
    psi.values[i] = cplx(*r[1], *r[2]);
  }
  return psi;
}

inline json state_json(const RunConfig& cfg) {
  const StateConfig& st = cfg.require_state();
  json j{{"type", st.type}};
  if (st.type == "eigenstate") j["index"] = st.index;
  if (st.type == "coherent") j.update({{"q0", st.q0}, {"p0", st.p0}});
  if (st.type == "samples") j["path"] = st.samples.filename().string();
  if (st.omega) j["omega"] = *st.omega;
  return j;
}

// ---------------------------------------------------------------------------

inline CommandOutput run_transform(const RunConfig& cfg) {
  using namespace xphase;
  const PhaseGrid grid = cfg.require_grid();
  const PhaseState chi0 = pure_chi(make_state(cfg, grid), grid.hbar);
  const PhaseState out = cfg.husimi_epsilon ? husimi(chi0, HusimiParameter(*cfg.husimi_epsilon))
                                            : alpha_shift(chi0, cfg.require_alpha());

  Table t{"transform", {"q", "p", "re", "im"}, {}};
  t.rows.reserve(grid.size());
  double l2 = 0.0;
  for (std::size_t i = 0; i < grid.n(); ++i)
    for (std::size_t j = 0; j < grid.n(); ++j) {
      const cplx v = out.values(i, j);
      l2 += std::norm(v);
      t.add_row({grid.q(i), grid.p(j), v.real(), v.imag()});
    }
  const cplx total = out.total();
  json meta{{"command", "transform"},
            {"representation", cfg.husimi_epsilon ? "husimi" : "alpha"},
            {"grid", grid_json(grid)},
            {"state", state_json(cfg)},
            {"norm", {{"re", total.real()}, {"im", total.imag()}}},
            {"l2_norm", l2 * grid.cell_area()},
            {"reality_residual", out.values.max_abs_imag()},
            {"max_abs", out.values.max_abs()}};
  if (cfg.husimi_epsilon) meta["epsilon"] = *cfg.husimi_epsilon;
  else meta["alpha"] = out.alpha;
  CommandOutput r;
  r.tables.push_back(std::move(t));
  r.sidecar = {"transform.meta.json", meta};
  r.report = {{"command", "transform"}};
  return r;
}

inline CommandOutput run_bloch(const RunConfig& cfg) {
  using namespace xphase;
  const HamiltonianSpec& h = cfg.require_potential();
  const auto& betas = cfg.require_betas();
  const BlochOptions& opt = cfg.bloch;
  const std::string method = opt.method == "auto" ? (h.kind == PotentialKind::polynomial ? "integrate" : "quadrature") : opt.method;
  if (method == "quadrature" && h.kind == PotentialKind::polynomial)
    throw ValidationError("config: bloch.method: quadrature needs a closed form (harmonic or linear potential)");
  std::optional<PhaseGrid> grid;
  if (cfg.grid) grid = cfg.require_grid();
  if (method == "integrate" && h.kind != PotentialKind::linear && !grid) RunConfig::missing("grid");

  std::vector<std::vector<Cell>> rows(betas.size());
  parallel_for(betas.size(), [&](std::size_t k) {
    const double beta = betas[k];
    Cell z, zc, a, b, c, err;
    if (h.kind == PotentialKind::linear) {
      LinearBlochSpec spec{h.k, h.mass, beta, cfg.hbar, opt.q_points, opt.p_points};
      zc = linear_partition_closed(h.k, h.mass, beta, cfg.hbar);
      z = method == "quadrature" ? bloch_linear(spec).z_numeric : solve_bloch_linear(spec, opt.steps).z_numeric;
    } else {
      if (method == "quadrature") {
        const PhaseGrid g = grid ? *grid : harmonic_thermal_grid(h, beta, cfg.hbar);
        z = harmonic_thermal_state(h, beta, g).Z;
      } else {
        const std::size_t steps = opt.steps ? opt.steps : bloch_min_steps(h, beta, *grid, opt.route);
        const auto res = solve_bloch_numeric(h, beta, *grid, BlochNumericConfig{steps, opt.route, WignerBlochForm::symmetric, opt.richardson});
        z = res.state.Z;
        if (opt.richardson) err = res.error_estimate;
      }
      if (h.kind == PotentialKind::harmonic) {
        zc = harmonic_partition_closed(h.omega, beta, cfg.hbar);
        const auto sol = solve_bloch_harmonic(h.omega, beta, cfg.hbar);
        a = sol.numeric.A;
        b = sol.numeric.B;
        c = sol.numeric.C;
      }
    }
    rows[k] = {beta, z, zc, a, b, c, err};
  });
  Table t{"bloch", {"beta", "Z_numeric", "Z_closed", "A", "B", "C", "error_estimate"}, std::move(rows)};
  CommandOutput r;
  r.tables.push_back(std::move(t));
  r.report = {{"command", "bloch"}, {"method", method}, {"route", opt.route == BlochRoute::standard ? "standard" : "wigner"}};
  return r;
}

inline CommandOutput run_evolve(const RunConfig& cfg) {
  using namespace xphase;
  const PhaseGrid grid = cfg.require_grid();
  const HamiltonianSpec& h = cfg.require_potential();
  const TimeConfig& tc = cfg.require_time();
  const double alpha = cfg.require_alpha();
  const PhaseState chi0 = alpha_shift(pure_chi(make_state(cfg, grid), grid.hbar), alpha);
  const auto traj = evolve_alpha(chi0, h, alpha, EvolutionConfig{tc.dt, tc.steps, tc.scheme, tc.stride});

  Table series{"evolve", {"t", "norm_re", "norm_im", "l2_norm", "energy"}, {}};
  Table marg{"marginals", {"t", "index", "q", "rho_q", "p", "rho_p"}, {}};
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const double t = traj.times[k];
    const auto& s = traj.states[k];
    double l2 = 0.0;
    for (const auto& v : s.values.raw()) l2 += std::norm(v);
    const cplx total = s.total();
    series.add_row({t, total.real(), total.imag(), l2 * grid.cell_area(), energy_expectation(s, h)});
    const auto m = marginals(s);
    for (std::size_t i = 0; i < grid.n(); ++i) marg.add_row({t, double(i), grid.q(i), m.q_density[i], grid.p(i), m.p_density[i]});
  }
  CommandOutput r;
  r.tables.push_back(std::move(series));
  r.tables.push_back(std::move(marg));
  r.report = {{"command", "evolve"}, {"alpha", alpha}, {"scheme", tc.scheme == Scheme::rk4 ? "rk4" : "split_step"}};
  return r;
}

inline CommandOutput run_star(const RunConfig& cfg) {
  using namespace xphase;
  if (!cfg.star_a) RunConfig::missing("star");
  const double alpha = cfg.require_alpha();
  const bool product = cfg.star_operation == "product";
  const PolyObservable res = product ? star_alpha(*cfg.star_a, *cfg.star_b, alpha, cfg.hbar)
                                     : bracket(*cfg.star_a, *cfg.star_b, alpha, cfg.hbar);
  CommandOutput r;
  r.tables.push_back(terms_table("star", res));
  r.report = {{"command", "star"},
              {"operation", cfg.star_operation},
              {"alpha", alpha},
              {"hbar", cfg.hbar},
              {"route", product ? "alpha star product, finite derivative series (exact on polynomials)"
                                : "(a * b - b * a) / (i hbar) with the alpha star product"},
              {"a", terms_json(*cfg.star_a)},
              {"b", terms_json(*cfg.star_b)},
              {"result", terms_json(res)},
              {"result_text", res.to_string()}};
  return r;
}

inline CommandOutput run_expect(const RunConfig& cfg) {
  using namespace xphase;
  if (!cfg.observable) RunConfig::missing("observable");
  const PhaseGrid grid = cfg.require_grid();
  const double alpha = cfg.require_alpha();
  const WaveFunction psi = make_state(cfg, grid);
  const bool phase = cfg.expect_route != "operator", op = cfg.expect_route != "phase_space";
  json results = json::array();
  Cell ps_re, ps_im, op_re, op_im;
  cplx ps, ov;
  if (phase) {
    ps = expect(alpha_shift(pure_chi(psi, grid.hbar), alpha), *cfg.observable);
    ps_re = ps.real();
    ps_im = ps.imag();
    results.push_back({{"route", "phase_space"},
                       {"re", ps.real()},
                       {"im", ps.imag()},
                       {"provenance", "integral of O(q,p) chi_alpha(q,p), chi_alpha = U_alpha chi by FFT multiplier"}});
  }
  if (op) {
    ov = operator_expectation(order_polynomial(*cfg.observable, alpha), psi, grid.hbar);
    op_re = ov.real();
    op_im = ov.imag();
    results.push_back({{"route", "operator"},
                       {"re", ov.real()},
                       {"im", ov.imag()},
                       {"provenance", "<psi| O ordered with parameter alpha |psi>, spectral derivatives in q"}});
  }
  CommandOutput r;
  r.tables.push_back(Table{"expect", {"alpha", "phase_space_re", "phase_space_im", "operator_re", "operator_im"},
                           {{alpha, ps_re, ps_im, op_re, op_im}}});
  r.report = {{"command", "expect"}, {"alpha", alpha}, {"hbar", grid.hbar}, {"observable", terms_json(*cfg.observable)},
              {"results", results}};
  if (phase && op) r.report["residual"] = std::abs(ps - ov);
  return r;
}

/// Quick end-to-end checks against closed forms.
inline CommandOutput run_selftest() {
  using namespace xphase;
  json checks = json::array();
  bool ok = true;
  auto check = [&](const char* name, double value, double tol) {
    const bool pass = std::isfinite(value) && value <= tol;
    ok = ok && pass;
    checks.push_back({{"name", name}, {"deviation", value}, {"tolerance", tol}, {"pass", pass}});
  };
  const auto g = make_phase_grid(128, -12.0, 12.0);
  const auto basis = harmonic_basis(g, 1.0, 1.0, 2);
  const auto w = alpha_shift(pure_chi(basis.functions[0]), 0.5);
  check("ground-state Wigner function", max_abs_diff(w.values, Field::from_function(g, [](double q, double p) {
                                                       return std::exp(-q * q - p * p) / pi;
                                                     })),
        1e-10);
  const auto osc = HamiltonianSpec::harmonic(1.0, 1.0);
  check("harmonic partition function",
        std::abs(harmonic_thermal_state(osc, 1.0, harmonic_thermal_grid(osc, 1.0)).Z / harmonic_partition_closed(1.0, 1.0) - 1.0),
        1e-8);
  check("Bloch coefficients", solve_bloch_harmonic(1.0, 2.0).max_disagreement(), 1e-8);
  const auto lin = bloch_linear(LinearBlochSpec{});
  check("linear partition function", std::abs(lin.z_numeric / lin.z_closed - 1.0), 1e-5);
  check("[q, p] bracket", max_coefficient_diff(bracket(PolyObservable::q(), PolyObservable::p(), 0.5), PolyObservable::constant(1.0)),
        1e-14);
  const auto psi = basis.combine((Eigen::VectorXcd(2) << 0.6, cplx(0.0, 0.8)).finished());
  const cplx ps = expect(pure_chi(psi), PolyObservable::monomial(1, 1));
  check("standard-ordered <q p>", std::abs(ps - operator_expectation(order_monomial(1, 1, 0.0), psi, 1.0)), 1e-8);
  CommandOutput r;
  r.report = {{"command", "selftest"}, {"checks", checks}, {"pass", ok}};
  r.failed = !ok;
  return r;
}

// ---------------------------------------------------------------------------

/// Writes tables as <name>.<ext> and the sidecar into `dir`; returns the written paths.
inline std::vector<std::string> emit(const CommandOutput& r, const std::filesystem::path& dir, Format f) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  for (const auto& t : r.tables) {
    const auto path = (dir / (t.name + "." + extension(f))).string();
    write_file(path, serialize(t, f));
    written.push_back(path);
  }
  if (r.sidecar) {
    const auto path = (dir / r.sidecar->first).string();
    write_file(path, r.sidecar->second.dump(2) + "\n");
    written.push_back(path);
  }
  return written;
}

}  // namespace xcli
