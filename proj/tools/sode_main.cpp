#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sode/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Social dilemma evaluation harness for language-model agents"};
  app.set_version_flag("--version", std::string(sode::kVersion));
  app.require_subcommand(1);

  std::string config, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> concurrency;

  auto* run = app.add_subcommand("run", "Run the experiments selected by a config file");
  run->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--concurrency", concurrency, "Override the concurrency budget");

  std::string report_kind = "all";
  std::optional<std::string> lexicon;
  auto* report = app.add_subcommand("report", "Emit reports from a finished run");
  report->add_option("--out", out, "Run output directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--report", report_kind,
                     "all, metrics, payoff-plane, trajectories, tau, lexical or contrasts");
  report->add_option("--lexicon", lexicon, "Keyword lexicon file ([coop]/[defect] sections)");

  std::uint64_t trial_seed = 0;
  auto* gen = app.add_subcommand("gen-trials", "Write the reputation trial set as JSONL");
  gen->add_option("--seed", trial_seed, "Trial-set seed")->required();
  gen->add_option("--out", out, "Output file")->required();

  auto* check = app.add_subcommand("validate-config", "Check a config file without running it");
  check->add_option("--config", config, "Experiment config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run) return sode::cmd_run(config, out, {seed, concurrency}, std::cerr);
  if (*report) {
    std::optional<std::filesystem::path> lex;
    if (lexicon) lex = *lexicon;
    return sode::cmd_report(out, report_kind, std::cerr, lex);
  }
  if (*gen) return sode::cmd_gen_trials(trial_seed, out, std::cerr);
  if (*check) return sode::cmd_validate_config(config, std::cerr);
  return 1;
}
