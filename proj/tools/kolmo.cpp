#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kolmo/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config, "experiment config (JSON)")
      ->required();
  sub->add_option("--seed", args.seed, "override the config seed");
  sub->add_option("--workers", args.workers, "worker thread count")
      ->check(CLI::Range(1, 1024));
  sub->add_option("--out", args.out, "output directory");
}

int run_kind(const CommonArgs& args, const std::string& kind) {
  kolmo::experiment::RunOptions opt;
  opt.expected_kind = kind;
  opt.seed_override = args.seed;
  opt.workers_override = args.workers;
  opt.out_override = args.out;
  // The environment seed sits between the flag and the config value.
  if (!opt.seed_override) {
    if (const char* env = std::getenv("KOLMO_SEED")) opt.env_seed = env;
  }
  const auto result = kolmo::experiment::run_file(args.config, opt);
  for (const auto& o : result.outputs) std::cout << o << '\n';
  return result.exit_status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulation and inequality checks for degenerate diffusions"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"simulate", "sample paths or endpoint moments"},
      {"kernel", "tabulate the transition density on a grid"},
      {"verify-wang", "dimension-free Harnack comparisons"},
      {"verify-rlsi", "reverse log-Sobolev checks"},
      {"verify-rn", "shift density integrability bounds"},
      {"convergence", "finite-rank approximation error study"},
  };
  std::vector<CommonArgs> args(kinds.size());
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    CLI::App* sub = app.add_subcommand(kinds[i].first, kinds[i].second);
    add_common(sub, args[i]);
  }

  std::string plot_source;
  std::optional<std::string> plot_out;
  CLI::App* plot = app.add_subcommand(
      "plotdata", "extract plain-text plot files from a finished run");
  plot->add_option("manifest", plot_source, "manifest.json or run directory")
      ->required();
  plot->add_option("--out", plot_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (plot->parsed()) {
      const auto files =
          kolmo::experiment::emit_plotdata(plot_source, plot_out);
      for (const auto& f : files) std::cout << f << '\n';
      return 0;
    }
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      if (app.get_subcommand(kinds[i].first)->parsed()) {
        return run_kind(args[i], kinds[i].first);
      }
    }
  } catch (const kolmo::experiment::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
