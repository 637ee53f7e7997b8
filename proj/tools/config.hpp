#pragma once

// Run configuration: one JSON document. Every rejection names the offending field by its
// dotted path, e.g. "config: grid.n: must be a power of two >= 8 (got 100)".

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "table.hpp"
#include "xphase/xphase.hpp"

namespace xcli {

/// A JSON object plus its dotted path, with typed accessors that report the path on failure.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw xphase::ValidationError("config: " + where() + "must be an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw xphase::ValidationError("config: " + field(key) + ": " + msg);
  }

  bool has(const std::string& key) const { return j_->contains(key) && !(*j_)[key].is_null(); }
  const json& at(const std::string& key) const {
    if (!has(key)) throw xphase::ValidationError("config: missing field '" + field(key) + "'");
    return (*j_)[key];
  }

  /// Rejects keys outside `known` so typos do not pass silently.
  void allow(std::initializer_list<const char*> known) const {
    const std::set<std::string> ok(known.begin(), known.end());
    for (const auto& [k, v] : j_->items())
      if (!ok.count(k)) throw xphase::ValidationError("config: unknown field '" + field(k) + "'");
  }

  Node child(const std::string& key) const {
    if (!at(key).is_object()) fail(key, "must be an object");
    return Node(at(key), field(key));
  }
  std::optional<Node> optional_child(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return child(key);
  }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) fail(key, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }
  double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }
  double positive(const std::string& key) const {
    const double x = number(key);
    if (!(x > 0.0)) fail(key, "must be positive (got " + xphase::fmt(x) + ")");
    return x;
  }
  double positive_or(const std::string& key, double fallback) const { return has(key) ? positive(key) : fallback; }

  std::size_t count(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(key, "must be a nonnegative integer");
    return static_cast<std::size_t>(v.get<long long>());
  }
  std::size_t count_or(const std::string& key, std::size_t fallback) const { return has(key) ? count(key) : fallback; }

  std::string text(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }
  std::string choice(const std::string& key, std::initializer_list<const char*> options, const char* fallback = nullptr) const {
    if (!has(key)) {
      if (fallback) return fallback;
      throw xphase::ValidationError("config: missing field '" + field(key) + "'");
    }
    const std::string s = text(key);
    std::string all;
    for (const char* o : options) {
      if (s == o) return s;
      all += std::string(all.empty() ? "" : ", ") + o;
    }
    fail(key, "must be one of {" + all + "} (got '" + s + "')");
  }
  bool flag_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!at(key).is_boolean()) fail(key, "must be true or false");
    return at(key).get<bool>();
  }
  std::vector<double> numbers(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array() || v.empty()) fail(key, "must be a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!v[k].is_number() || !std::isfinite(v[k].get<double>()))
        fail(key + "[" + std::to_string(k) + "]", "must be a finite number");
      out.push_back(v[k].get<double>());
    }
    return out;
  }

 private:
  std::string where() const { return path_.empty() ? "" : path_ + ": "; }
  const json* j_;
  std::string path_;
};

struct GridConfig {
  std::size_t n = 0;
  double q_min = 0.0, q_max = 0.0;
};

struct StateConfig {
  std::string type;  // eigenstate | coherent | samples
  std::size_t index = 0;
  double q0 = 0.0, p0 = 0.0;
  std::optional<double> omega;
  std::filesystem::path samples;
};

struct TimeConfig {
  double dt = 0.0;
  std::size_t steps = 0;
  std::size_t stride = 1;
  xphase::Scheme scheme = xphase::Scheme::rk4;
};

struct BlochOptions {
  std::string method = "auto";  // auto | quadrature | integrate
  xphase::BlochRoute route = xphase::BlochRoute::standard;
  std::size_t steps = 0;  // 0: smallest stable count
  bool richardson = true;
  std::size_t q_points = 2049, p_points = 256;  // linear potential half-line grid
};

struct RunConfig {
  double hbar = 1.0;
  double mass = 1.0;
  std::optional<xphase::HamiltonianSpec> potential;
  std::optional<GridConfig> grid;
  std::optional<double> alpha;
  std::optional<double> husimi_epsilon;
  std::vector<double> betas;
  std::optional<TimeConfig> time;
  std::optional<StateConfig> state;
  BlochOptions bloch;
  std::optional<xphase::PolyObservable> star_a, star_b;
  std::string star_operation = "product";
  std::optional<xphase::PolyObservable> observable;
  std::string expect_route = "both";
  std::optional<std::string> out_dir;
  std::optional<Format> format;

  // Accessors for blocks a command cannot run without.
  [[noreturn]] static void missing(const char* key) {
    throw xphase::ValidationError(std::string("config: missing field '") + key + "'");
  }
  const xphase::HamiltonianSpec& require_potential() const {
    if (!potential) missing("potential");
    return *potential;
  }
  xphase::PhaseGrid require_grid() const {
    if (!grid) missing("grid");
    return xphase::make_phase_grid(grid->n, grid->q_min, grid->q_max, hbar);
  }
  double require_alpha() const {
    if (!alpha) missing("alpha");
    return *alpha;
  }
  const StateConfig& require_state() const {
    if (!state) missing("state");
    return *state;
  }
  const TimeConfig& require_time() const {
    if (!time) missing("time");
    return *time;
  }
  const std::vector<double>& require_betas() const {
    if (betas.empty()) missing("beta_list");
    return betas;
  }
};

/// Polynomial symbol as a list of terms {"q": n, "p": m, "c": x} or {"q", "p", "re", "im"}.
inline xphase::PolyObservable parse_polynomial(const Node& parent, const std::string& key) {
  const json& v = parent.at(key);
  if (!v.is_array() || v.empty()) parent.fail(key, "must be a non-empty array of terms {\"q\", \"p\", \"c\"}");
  xphase::PolyObservable out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::string name = key + "[" + std::to_string(k) + "]";
    if (!v[k].is_object()) parent.fail(name, "must be an object {\"q\", \"p\", \"c\"}");
    const Node term(v[k], parent.field(name));
    term.allow({"q", "p", "c", "re", "im"});
    const std::size_t n = term.count("q"), m = term.count("p");
    if (n > 16 || m > 16) term.fail(n > 16 ? "q" : "p", "exponent above 16");
    xphase::cplx c;
    if (term.has("c")) {
      if (term.has("re") || term.has("im")) term.fail("c", "give either c or re/im, not both");
      c = term.number("c");
    } else {
      c = xphase::cplx(term.number("re"), term.number_or("im", 0.0));
    }
    out.add(static_cast<int>(n), static_cast<int>(m), c);
  }
  return out;
}

inline xphase::HamiltonianSpec parse_potential(const Node& root, double mass) {
  const Node pot = root.child("potential");
  const std::string type = pot.choice("type", {"harmonic", "linear", "polynomial"});
  if (type == "harmonic") {
    pot.allow({"type", "omega"});
    return xphase::HamiltonianSpec::harmonic(mass, pot.positive_or("omega", 1.0));
  }
  if (type == "linear") {
    pot.allow({"type", "k"});
    return xphase::HamiltonianSpec::linear(mass, pot.positive("k"));
  }
  pot.allow({"type", "coefficients"});
  const auto c = pot.numbers("coefficients");
  if (static_cast<int>(c.size()) - 1 > xphase::kMaxPotentialDegree)
    pot.fail("coefficients", "degree above " + std::to_string(xphase::kMaxPotentialDegree));
  return xphase::HamiltonianSpec::polynomial(mass, c);
}

inline RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir = ".") {
  const Node root(doc, "");
  root.allow({"hbar", "mass", "potential", "grid", "alpha", "husimi", "state", "beta", "beta_list", "time", "bloch", "star",
              "observable", "route", "output"});
  RunConfig cfg;
  cfg.hbar = root.positive_or("hbar", 1.0);
  cfg.mass = root.positive_or("mass", 1.0);
  if (root.has("potential")) cfg.potential = parse_potential(root, cfg.mass);

  if (const auto g = root.optional_child("grid")) {
    g->allow({"n", "q_min", "q_max"});
    cfg.grid = GridConfig{g->count("n"), g->number("q_min"), g->number("q_max")};
    if (!xphase::is_power_of_two(cfg.grid->n) || cfg.grid->n < 8)
      g->fail("n", "must be a power of two >= 8 (got " + std::to_string(cfg.grid->n) + ")");
    if (!(cfg.grid->q_max > cfg.grid->q_min)) g->fail("q_max", "must exceed q_min");
  }

  if (root.has("alpha")) cfg.alpha = root.number("alpha");
  if (const auto h = root.optional_child("husimi")) {
    h->allow({"epsilon"});
    cfg.husimi_epsilon = h->positive("epsilon");
  }

  if (const auto s = root.optional_child("state")) {
    StateConfig st;
    st.type = s->choice("type", {"eigenstate", "coherent", "samples"});
    if (st.type == "eigenstate") {
      s->allow({"type", "index", "omega"});
      st.index = s->count("index");
    } else if (st.type == "coherent") {
      s->allow({"type", "q0", "p0", "omega"});
      st.q0 = s->number_or("q0", 0.0);
      st.p0 = s->number_or("p0", 0.0);
    } else {
      s->allow({"type", "path"});
      st.samples = base_dir / s->text("path");
    }
    if (s->has("omega")) st.omega = s->positive("omega");
    cfg.state = st;
  }

  if (root.has("beta") && root.has("beta_list")) root.fail("beta", "give either beta or beta_list, not both");
  if (root.has("beta")) cfg.betas = {root.positive("beta")};
  if (root.has("beta_list")) {
    cfg.betas = root.numbers("beta_list");
    for (std::size_t k = 0; k < cfg.betas.size(); ++k)
      if (!(cfg.betas[k] > 0.0)) root.fail("beta_list[" + std::to_string(k) + "]", "must be positive");
  }

  if (const auto t = root.optional_child("time")) {
    t->allow({"dt", "steps", "stride", "scheme"});
    TimeConfig tc;
    tc.dt = t->positive("dt");
    tc.steps = t->count("steps");
    if (tc.steps == 0) t->fail("steps", "must be positive");
    tc.stride = t->count_or("stride", 1);
    if (tc.stride == 0) t->fail("stride", "must be positive");
    tc.scheme = t->choice("scheme", {"rk4", "split_step"}, "rk4") == "rk4" ? xphase::Scheme::rk4 : xphase::Scheme::split_step;
    cfg.time = tc;
  }

  if (const auto b = root.optional_child("bloch")) {
    b->allow({"method", "route", "steps", "richardson", "q_points", "p_points"});
    cfg.bloch.method = b->choice("method", {"auto", "quadrature", "integrate"}, "auto");
    cfg.bloch.route = b->choice("route", {"standard", "wigner"}, "standard") == "standard" ? xphase::BlochRoute::standard
                                                                                          : xphase::BlochRoute::wigner;
    cfg.bloch.steps = b->count_or("steps", 0);
    cfg.bloch.richardson = b->flag_or("richardson", true);
    cfg.bloch.q_points = b->count_or("q_points", cfg.bloch.q_points);
    cfg.bloch.p_points = b->count_or("p_points", cfg.bloch.p_points);
    if (cfg.bloch.q_points < 9 || cfg.bloch.q_points % 2 == 0) b->fail("q_points", "must be odd and >= 9");
    if (cfg.bloch.p_points < 8 || cfg.bloch.p_points % 2 == 1) b->fail("p_points", "must be even and >= 8");
  }

  if (const auto s = root.optional_child("star")) {
    s->allow({"a", "b", "operation"});
    cfg.star_a = parse_polynomial(*s, "a");
    cfg.star_b = parse_polynomial(*s, "b");
    cfg.star_operation = s->choice("operation", {"product", "bracket"}, "product");
  }
  if (root.has("observable")) cfg.observable = parse_polynomial(root, "observable");
  cfg.expect_route = root.choice("route", {"both", "phase_space", "operator"}, "both");

  if (const auto o = root.optional_child("output")) {
    o->allow({"path", "format"});
    if (o->has("path")) cfg.out_dir = o->text("path");
    if (o->has("format")) cfg.format = o->choice("format", {"csv", "json"}) == "csv" ? Format::csv : Format::json;
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path.string());
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw xphase::ValidationError("config: not valid JSON (" + std::string(e.what()) + ")");
  }
  return parse_config(doc, path.parent_path());
}

}  // namespace xcli
