#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sode/agent.hpp"
#include "sode/experiments.hpp"
#include "sode/gateway.hpp"

namespace sode {

inline constexpr int kConfigSchemaVersion = 1;

// Collects every problem found, not just the first.
class ConfigInvalid : public std::runtime_error {
 public:
  explicit ConfigInvalid(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct DirectSection {
  std::vector<ZDCondition> conditions{std::begin(kAllZDConditions), std::end(kAllZDConditions)};
  int horizon = 30;
  int episodes = 50;
};

struct ReputationSection {
  std::optional<std::uint64_t> trial_seed;  // defaults to the run seed
};

struct SocietySection {
  int agents = 5;
  int horizon = kSocietyHorizon;
  int episodes = 10;
  std::vector<double> rc_fractions{0.0, 0.4, 1.0};
  CrossEpisodeFormat cross_episode = CrossEpisodeFormat::FullHistories;
  // Optional scripted line-up replacing the subject model, one per agent.
  std::vector<ScriptedStrategy> members;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int concurrency = 1;
  AgentSpec agent;
  SamplingConfig sampling;
  GatewayOptions gateway;
  PromptOptions prompt;
  int parse_retries = 2;
  PayoffMatrix payoffs;
  std::optional<std::string> zd_params_path;
  std::optional<DirectSection> direct;
  std::optional<ReputationSection> reputation;
  std::optional<SocietySection> society;

  // Filled by load_config from zd_params_path, or the built-in table.
  ZdTable zd;
};

// Throws ConfigInvalid.
ExperimentConfig parse_config(const nlohmann::json& j,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& c);

// Seeds handed to each experiment, all derived from the run seed.
std::uint64_t direct_seed(const ExperimentConfig& c);
std::uint64_t trial_seed(const ExperimentConfig& c);
std::uint64_t society_seed(const ExperimentConfig& c, double rc_fraction);

nlohmann::json scripted_to_json(const ScriptedStrategy& s);

}  // namespace sode
