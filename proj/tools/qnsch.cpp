// qnsch command line: run a scenario, run a convergence study, or self-test the operators.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qnsch/driver.hpp"

namespace {

// Exit codes: 0 success, 2 configuration error, 3 solver divergence or
// non-convergence, 4 invariant breach, 1 anything else (I/O, metric extraction).
template <class Fn>
int guarded(Fn fn) {
  try {
    return fn();
  } catch (const qnsch::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const qnsch::DivergenceError& e) {
    std::cerr << "solver diverged at cycle " << e.cycle << ": " << e.what() << '\n';
    return 3;
  } catch (const qnsch::ConvergenceError& e) {
    std::cerr << "solver did not converge: " << e.what() << '\n';
    return 3;
  } catch (const qnsch::InvariantError& e) {
    std::cerr << "invariant breach: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"q-NSCH staggered-grid solver"};
  app.require_subcommand(1);

  std::string config, scheme, out;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "run a scenario from a JSON config");
  run->add_option("--config", config, "config file")->required();
  run->add_option("--scheme", scheme, "override the scheme (primitive|projection)");
  run->add_option("--out", out, "override the output directory");
  run->add_flag("--quiet", quiet, "no per-step log");

  std::string conv_config;
  int levels = 4;
  auto* conv = app.add_subcommand("converge", "Cauchy convergence study (m doubles, dt quarters)");
  conv->add_option("--config", conv_config, "config file of the coarsest level")->required();
  conv->add_option("--levels", levels, "number of levels")->check(CLI::Range(2, 8));
  conv->add_option("--scheme", scheme, "override the scheme (primitive|projection)");

  auto* self = app.add_subcommand("selftest", "operator identity suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*run) {
    return guarded([&] {
      qnsch::RunConfig cfg = qnsch::load_config(config);
      if (!scheme.empty()) cfg.scheme = qnsch::detail::parse_scheme(scheme);
      if (!out.empty()) cfg.out_dir = out;
      qnsch::RunOptions opt;
      if (!quiet) opt.log = &std::cerr;
      qnsch::RunResult r = qnsch::run(cfg, opt);
      std::cout << "steps " << r.steps << ", cycles " << r.total_cycles << ", worst step " << r.max_cycles
                << " cycles\n";
      return 0;
    });
  }
  if (*conv) {
    return guarded([&] {
      qnsch::RunConfig cfg = qnsch::load_config(conv_config);
      if (!scheme.empty()) cfg.scheme = qnsch::detail::parse_scheme(scheme);
      qnsch::ConvergenceTable t = qnsch::converge(cfg, levels, &std::cerr);
      qnsch::print_table(t, std::cout);
      return 0;
    });
  }
  if (*self) {
    return guarded([&] {
      bool ok = qnsch::print_selftest(qnsch::selftest(), std::cout);
      std::cout << (ok ? "selftest passed\n" : "selftest FAILED\n");
      return ok ? 0 : 1;
    });
  }
  return 2;
}
