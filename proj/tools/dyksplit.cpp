#include "dyksplit/cli.hpp"
#include "dyksplit/config.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"Parallel Dykstra splitting solver"};
  app.require_subcommand(1);
  app.footer(std::string("Trace CSV columns: ") + dyksplit::kTraceHeader +
             "\n  one row per cycle, or one per sweep with output.per_sweep; F is nan when not evaluated"
             "\n  and approx_flag is 1 when a nested coordinate solve was used."
             "\nExit codes: 0 success, 1 config or schedule error, 2 iteration cap, 3 infeasible.");

  dyksplit::CliOptions opts;
  std::int64_t seed = 0;
  int workers = 1;
  std::string config, config_b;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Seed for the built-in random problem generator")
        ->each([&](const std::string&) { opts.seed = static_cast<std::uint64_t>(seed); });
    cmd->add_option("--workers", workers, "Worker threads per sweep (overrides the config)")
        ->check(CLI::PositiveNumber)
        ->each([&](const std::string&) { opts.workers = workers; });
  };

  CLI::App* solve = app.add_subcommand("solve", "Run the solver and write the trace");
  solve->add_option("config", config, "JSON run configuration")->required();
  solve->add_flag("--auto-defer", opts.auto_defer, "Defer inner blocks that break condition B to the next cycle");
  add_common(solve);

  CLI::App* validate = app.add_subcommand("validate", "Check a schedule against the validity conditions");
  validate->add_option("config", config, "JSON run configuration")->required();
  validate->add_flag("--auto-defer", opts.auto_defer, "Also show and check the deferred rewrite");
  add_common(validate);

  CLI::App* compare = app.add_subcommand("compare", "Compare the dual trajectories of two runs");
  compare->add_option("config_a", config, "First configuration")->required();
  compare->add_option("config_b", config_b, "Second configuration")->required();
  compare->add_flag("--report", opts.report, "Report differences and always exit 0");
  compare->add_flag("--auto-defer", opts.auto_defer, "Defer inner blocks that break condition B");
  add_common(compare);

  CLI::App* oracle = app.add_subcommand("oracle", "Exact projection of x0 onto the intersection");
  oracle->add_option("config", config, "JSON run configuration")->required();
  add_common(oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : dyksplit::kExitConfig;
  }

  if (solve->parsed()) return dyksplit::cmd_solve(config, opts);
  if (validate->parsed()) return dyksplit::cmd_validate(config, opts);
  if (compare->parsed()) return dyksplit::cmd_compare(config, config_b, opts);
  return dyksplit::cmd_oracle(config, opts);
}
