// pnn: width profiles, estimates, adaptive estimates, risk certificates and
// benchmark scenarios. Reports are JSON on stdout or --out.
//
// Exit codes: 0 success, 2 usage/config error, 3 solver nonconvergence,
// 4 I/O or parse error.

#include "pnn/app.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

void add_common(CLI::App* sub, pnn::app::RunConfig& cfg, std::string& obs, std::string& out,
                bool needs_design) {
  if (needs_design) sub->add_option("--design", cfg.design_path, "design matrix CSV (n rows, p columns)")->required();
  sub->add_option("--sigma", cfg.sigma, "noise standard deviation");
  sub->add_option("--q", cfg.q, "sparsity exponent in (0, 1]");
  sub->add_option("--radius", cfg.radius, "l_q radius C");
  sub->add_option("--seed", cfg.seed, "64-bit seed");
  sub->add_option("--trials", cfg.trials, "Monte Carlo trials");
  sub->add_option("--tol", cfg.tol, "relative tolerance of the nearest-point solver");
  sub->add_option("--max-iter", cfg.max_iter, "iteration cap of the nearest-point solver");
  sub->add_option("--obs", obs, "observation vector CSV");
  sub->add_option("--out", out, "write the JSON report here instead of stdout");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace pnn::app;
  CLI::App app{"Projected nearest neighbor estimation for sparse linear regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  RunConfig cfg;
  std::string obs, out, bench_name = "lemma7";

  struct Entry {
    const char* name;
    const char* help;
    Command command;
    bool needs_design;
  };
  const Entry entries[] = {
      {"width", "Kolmogorov width profile of C X", Command::width, true},
      {"estimate", "projected nearest neighbor estimate (q = 1)", Command::estimate, true},
      {"adapt", "adaptive estimate for unknown radius (q = 1)", Command::adapt, true},
      {"risk", "minimax risk certificate", Command::risk, true},
      {"bench", "benchmark scenarios", Command::bench, false},
  };
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common(sub, cfg, obs, out, e.needs_design);
    if (e.command == Command::bench)
      sub->add_option("--bench", bench_name, "lemma7, example1 or identity")
          ->check(CLI::IsMember({"lemma7", "example1", "identity"}));
    const Command command = e.command;
    sub->callback([&cfg, command] { cfg.command = command; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (!obs.empty()) cfg.obs_path = obs;
  if (!out.empty()) cfg.output_path = out;

  try {
    cfg.bench_name = parse_bench_name(bench_name);
    const Report rep = run(cfg);
    const std::string text = dump(rep);
    if (cfg.output_path) {
      std::ofstream f(*cfg.output_path, std::ios::binary);
      if (!f) throw ParseError("cannot write '" + *cfg.output_path + "'");
      f << text;
    } else {
      std::cout << text;
    }
    if (!rep.converged) {
      std::cerr << "pnn: nearest-point solver did not reach its tolerance\n";
      return kExitSolver;
    }
  } catch (const ParseError& e) {
    std::cerr << "pnn: " << e.what() << "\n";
    return kExitIo;
  } catch (const pnn::InvalidArgument& e) {
    std::cerr << "pnn: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
