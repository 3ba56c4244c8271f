#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sode/agent.hpp"
#include "sode/episode.hpp"
#include "sode/strategies.hpp"
#include "sode/trials.hpp"

namespace sode {

// ---- direct reciprocity ----------------------------------------------------

struct DirectReciprocityConfig {
  std::vector<ZDCondition> conditions{std::begin(kAllZDConditions), std::end(kAllZDConditions)};
  int horizon = 30;
  int episodes_per_condition = 50;
  std::uint64_t seed = 0;
  ZdTable zd;
  PayoffMatrix matrix;
  int concurrency = 1;
};

void validate(const DirectReciprocityConfig& c);

// The agent sits on side A, the ZD opponent on side B. Episodes come back
// ordered by condition (config order), then episode index 1..M, each tagged
// with the condition name.
std::vector<EpisodeRecord> run_direct_reciprocity(const AgentFactory& make_agent,
                                                  const AgentSpec& agent,
                                                  const DirectReciprocityConfig& config);
std::vector<EpisodeRecord> run_direct_reciprocity(const AgentSpec& agent,
                                                  const DirectReciprocityConfig& config,
                                                  const AgentContext& context = {});

std::uint64_t direct_episode_seed(std::uint64_t seed, ZDCondition c, int episode_index);

// ---- indirect reciprocity --------------------------------------------------

struct ReputationOutcome {
  ReputationTrial trial;
  bool valid = true;
  Action choice = Action::C;  // meaningless when invalid
  std::optional<DecisionTrace> trace;
  int retries = 0;
  std::string failure;

  friend bool operator==(const ReputationOutcome&, const ReputationOutcome&) = default;
};

void to_json(nlohmann::json& j, const ReputationOutcome& o);
void from_json(const nlohmann::json& j, ReputationOutcome& o);

// One independent single-round decision per trial, in trial-set order.
std::vector<ReputationOutcome> run_reputation(const AgentFactory& make_agent,
                                              const AgentSpec& agent, const TrialSet& trials,
                                              int concurrency = 1);
std::vector<ReputationOutcome> run_reputation(const AgentSpec& agent, const TrialSet& trials,
                                              const AgentContext& context = {},
                                              int concurrency = 1);

// ---- group dynamics --------------------------------------------------------

struct SocietyConfig {
  int agents = 5;
  int horizon = kSocietyHorizon;
  int episodes = 10;
  double rc_fraction = 0.0;
  std::uint64_t seed = 0;
  CrossEpisodeFormat cross_episode = CrossEpisodeFormat::FullHistories;
  PayoffMatrix matrix;
  int concurrency = 1;
};

void validate(const SocietyConfig& c);

// round(alpha * N), halves rounded away from zero.
int rc_count(const SocietyConfig& c);

struct SocietyDyad {
  int agent_i = 0;  // side A
  int agent_j = 0;  // side B, agent_i < agent_j
  EpisodeRecord record;

  friend bool operator==(const SocietyDyad&, const SocietyDyad&) = default;
};

struct SocietyEpisode {
  int episode_index = 1;
  std::vector<SocietyDyad> dyads;  // (0,1), (0,2), ..., (N-2,N-1)
  // What this episode contributes to each agent's later prompts: one inner
  // list per co-player, own action first, inner lists shuffled.
  std::vector<PriorEpisode> contexts;  // indexed by agent

  friend bool operator==(const SocietyEpisode&, const SocietyEpisode&) = default;
};

struct SocietyLog {
  SocietyConfig config;
  std::vector<Persona> personas;
  std::vector<std::string> members;  // agent descriptions
  std::vector<SocietyEpisode> episodes;

  // Everything agent `agent` has seen of episodes before `episode_index`.
  std::vector<PriorEpisode> prior_context(int agent, int episode_index) const;
};

// Every member is `model` with the assigned persona.
SocietyLog run_society(const AgentFactory& make_agent, const AgentSpec& model,
                       const SocietyConfig& config);
// Heterogeneous members (e.g. scripted mixes). Personas are overwritten by
// the seeded assignment.
SocietyLog run_society(const AgentFactory& make_agent, std::vector<AgentSpec> members,
                       const SocietyConfig& config);
SocietyLog run_society(const AgentSpec& model, const SocietyConfig& config,
                       const AgentContext& context = {});

std::vector<Persona> assign_personas(const SocietyConfig& c);

void to_json(nlohmann::json& j, const PriorEpisode& p);
void from_json(const nlohmann::json& j, PriorEpisode& p);

// Typed JSONL: one "members" line, then per episode its "dyad" lines and
// "context" lines. Several logs may share one stream.
std::string society_to_jsonl(const SocietyLog& log);
std::vector<SocietyLog> society_from_jsonl(std::string_view text);

}  // namespace sode
