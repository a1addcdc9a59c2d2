#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cvqkd/commands.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::string input;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  unsigned jobs = 1;
  bool trace = false;
  std::size_t bins = 0;
};

cvqkd::CommandOptions to_options(const Flags& f, const CLI::App& sub) {
  cvqkd::CommandOptions o;
  if (!f.config.empty()) o.config = f.config;
  if (!f.out.empty()) o.out = f.out;
  if (!f.input.empty()) o.input = f.input;
  const auto given = [&](const char* name) {
    const CLI::Option* opt = sub.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--seed")) o.seed = f.seed;
  if (given("--n")) o.n = f.n;
  o.jobs = f.jobs;
  o.trace = f.trace;
  o.bins = f.bins;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Key rates of Gaussian CV QKD protocols over fading free-space channels"};
  app.require_subcommand(1);
  Flags flags;

  auto common = [&](CLI::App* sub, bool config, bool mc) {
    if (config) sub->add_option("--config", flags.config, "Scenario file (JSON)")->required();
    sub->add_option("--out", flags.out, "Output file (default: output.path or stdout)");
    sub->add_option("--jobs", flags.jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
    if (mc) {
      sub->add_option("--seed", flags.seed, "Override the scenario seed");
      sub->add_option("--n", flags.n, "Override the Monte Carlo sample count")->check(CLI::PositiveNumber);
    }
  };

  auto* simulate = app.add_subcommand("simulate", "Sample beam transmittances to an eta CSV and JSON sidecar");
  common(simulate, true, true);
  auto* stats = app.add_subcommand("stats", "Fading statistics of an eta sample file");
  stats->add_option("samples", flags.input, "Sample CSV with an 'eta' column")->required();
  stats->add_option("--out", flags.out, "Output JSON file (default: stdout)");
  stats->add_option("--bins", flags.bins, "Add a histogram with this many bins");
  auto* keyrate = app.add_subcommand("keyrate", "Key rates at fixed protocol parameters");
  common(keyrate, true, true);
  auto* optimize = app.add_subcommand("optimize", "Key rates maximized over V_s and V_m");
  common(optimize, true, true);
  optimize->add_flag("--trace", flags.trace, "Write the optimizer trace next to the output");
  auto* sweep = app.add_subcommand("sweep", "Key rates over the scenario's sweep axes");
  common(sweep, true, true);
  sweep->add_flag("--trace", flags.trace, "Write the optimizer trace next to the output");
  auto* daily = app.add_subcommand("daily", "Hourly key rates from a C_n^2 series");
  common(daily, true, true);
  daily->add_option("series", flags.input, "C_n^2 series CSV (default: daily.series)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cvqkd::kExitConfig;
  }

  for (CLI::App* sub : app.get_subcommands()) {
    return cvqkd::run_command(sub->get_name(), to_options(flags, *sub), std::cout, std::cerr);
  }
  return cvqkd::kExitConfig;
}
