// xphase: command-line front end.
// Exit codes: 0 success, 1 invalid input or configuration, 2 numerical tolerance failure.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string format;
};

int run(const std::string& command, const Options& o) {
  using namespace xcli;
  if (command == "selftest") {
    const auto r = run_selftest();
    std::cout << r.report.dump(2) << "\n";
    return r.failed ? 2 : 0;
  }
  if (o.config.empty()) throw xphase::ValidationError("--config is required for " + command);
  const RunConfig cfg = load_config(o.config);
  const Format format = o.format.empty() ? cfg.format.value_or(Format::csv) : (o.format == "csv" ? Format::csv : Format::json);

  CommandOutput r;
  if (command == "transform") r = run_transform(cfg);
  else if (command == "bloch") r = run_bloch(cfg);
  else if (command == "evolve") r = run_evolve(cfg);
  else if (command == "star") r = run_star(cfg);
  else r = run_expect(cfg);

  // star and expect answer on stdout; their table is written only when a directory is named.
  const bool files = !(command == "star" || command == "expect") || !o.out.empty() || cfg.out_dir;
  if (files) {
    const std::string dir = !o.out.empty() ? o.out : cfg.out_dir.value_or(".");
    r.report["files"] = emit(r, dir, format);
  }
  std::cout << r.report.dump(2) << "\n";
  return r.failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-space quantum mechanics toolkit"};
  app.require_subcommand(1);
  Options o;
  for (const char* name : {"transform", "bloch", "evolve", "star", "expect"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", o.config, "JSON run configuration")->required();
    sub->add_option("--out", o.out, "output directory (overrides output.path)");
    sub->add_option("--format", o.format, "csv or json (overrides output.format)")->check(CLI::IsMember({"csv", "json"}));
  }
  app.add_subcommand("selftest", "quick checks against closed forms");
  app.get_subcommand("transform")->description("U_alpha or Husimi transform of a state; field CSV/JSON plus metadata sidecar");
  app.get_subcommand("bloch")->description("partition functions and Bloch coefficients over beta or beta_list");
  app.get_subcommand("evolve")->description("time evolution in the alpha representation: norms, energies, marginals");
  app.get_subcommand("star")->description("star product or bracket of two polynomial symbols (stdout JSON)");
  app.get_subcommand("expect")->description("expectation value by phase-space and operator routes (stdout JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    // Fail early on a malformed XPHASE_THREADS.
    (void)xphase::thread_count();
    return run(app.get_subcommands().front()->get_name(), o);
  } catch (const xphase::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const xphase::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
