#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace sode {

inline constexpr std::string_view kVersion = "0.1.0";

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfigInvalid = 2;
inline constexpr int kExitMissingData = 3;

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> concurrency;
};

// Output files written by cmd_run, relative to the output directory.
namespace outputs {
inline constexpr std::string_view kManifest = "manifest.json";
inline constexpr std::string_view kConfig = "config.json";
inline constexpr std::string_view kDirect = "direct_episodes.jsonl";
inline constexpr std::string_view kTrials = "reputation_trials.jsonl";
inline constexpr std::string_view kOutcomes = "reputation_outcomes.jsonl";
inline constexpr std::string_view kSociety = "society.jsonl";
inline constexpr std::string_view kTranscripts = "transcripts.jsonl";
inline constexpr std::string_view kReports = "reports";
}  // namespace outputs

inline const std::vector<std::string>& report_kinds() {
  static const std::vector<std::string> kinds = {"metrics", "payoff-plane", "trajectories",
                                                 "tau",     "lexical",      "contrasts"};
  return kinds;
}

int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
            const RunOverrides& overrides, std::ostream& log);

// kind is one of report_kinds() or "all". Writes under out_dir/reports only.
int cmd_report(const std::filesystem::path& out_dir, const std::string& kind, std::ostream& log,
               const std::optional<std::filesystem::path>& lexicon_path = std::nullopt);

int cmd_gen_trials(std::uint64_t seed, const std::filesystem::path& out_path, std::ostream& log);

int cmd_validate_config(const std::filesystem::path& config_path, std::ostream& log);

std::string sha256_hex(std::string_view data);

}  // namespace sode
