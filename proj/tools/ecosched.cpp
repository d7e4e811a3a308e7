// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point: ecosched {optimize,compare,emulate,verify}.

#include <cstdint>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ecosched/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ecosched: time-energy schedule optimization for overlapped GPU training"};
  app.require_subcommand(1);

  ecosched::CommandOptions opts;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* cfg = sub->add_option("--config", opts.config_path, "Workload configuration (JSON)");
    if (config_required) cfg->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out_dir, "Output directory")->required();
    sub->add_option("--seed", seed, "Seed overriding the configuration");
    sub->add_option("--jobs", opts.jobs, "Partitions optimized concurrently")->check(CLI::PositiveNumber);
  };

  auto* optimize = app.add_subcommand("optimize", "Search partition schedules and compose frontiers");
  auto* compare = app.add_subcommand("compare", "Score MBO against the exhaustive oracle and compare frontier files");
  auto* emulate = app.add_subcommand("emulate", "Compose iteration frontiers across pipeline scales");
  auto* verify = app.add_subcommand("verify", "Check the energy inequality and profiling-protocol properties");
  add_common(optimize, true);
  add_common(compare, true);
  add_common(emulate, true);
  add_common(verify, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : ecosched::kExitConfigError;
  }

  for (auto* sub : {optimize, compare, emulate, verify})
    if (sub->parsed() && sub->count("--seed") > 0) opts.seed = seed;

  if (optimize->parsed()) return ecosched::cmd_optimize(opts);
  if (compare->parsed()) return ecosched::cmd_compare(opts);
  if (emulate->parsed()) return ecosched::cmd_emulate(opts);
  return ecosched::cmd_verify(opts);
}
