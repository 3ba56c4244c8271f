#pragma once

#include <atomic>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sode/game.hpp"
#include "sode/trials.hpp"

namespace sode {

enum class Persona { RationalPlayer, ResilientCooperator };
enum class Framing { Baseline, LongHorizon };
enum class ModelClass { InstructionTuned, Reasoning };

std::string_view to_string(Persona p);
std::string_view to_string(Framing f);
std::string_view to_string(ModelClass m);
Persona persona_from_string(std::string_view s);
Framing framing_from_string(std::string_view s);
ModelClass model_class_from_string(std::string_view s);

struct PromptBundle {
  std::string system_text;
  std::string user_text;

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

struct DecisionOutput {
  Action choice = Action::C;
  std::string reasoning;
  std::optional<std::string> think_trace;
  std::string raw;

  friend bool operator==(const DecisionOutput&, const DecisionOutput&) = default;
};

// No JSON object, bad choice token, or JSON not terminal.
class MalformedOutput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reasoning class only: missing, empty, or repeated think block, or the JSON
// answer does not follow it.
class FormatViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ActionPair = std::pair<Action, Action>;  // (own, co-player)

// One completed episode as seen by a single society member: one inner list
// per co-player, identities removed.
struct PriorEpisode {
  int episode_index = 0;
  std::vector<std::vector<ActionPair>> histories;

  friend bool operator==(const PriorEpisode&, const PriorEpisode&) = default;
};

enum class CrossEpisodeFormat { FullHistories, Counts };
enum class ReminderPlacement { User, System };

struct PromptOptions {
  ReminderPlacement reminder_placement = ReminderPlacement::User;
  CrossEpisodeFormat cross_episode = CrossEpisodeFormat::FullHistories;
};

// Raw template text by resource name (the file stem under resources/templates).
const std::string& prompt_template(std::string_view name);
// Replaces {name} placeholders found in vars; other braces are left intact.
std::string fill_template(std::string_view text,
                          const std::map<std::string, std::string, std::less<>>& vars);

const std::string& output_format_block(ModelClass m);

PromptBundle build_dyadic_prompt(int horizon, const std::vector<Action>& own_history,
                                 const std::vector<Action>& opp_history, Persona persona,
                                 Framing framing, ModelClass model_class,
                                 const PromptOptions& options = {});

PromptBundle build_reputation_prompt(const ReputationTrial& trial, ModelClass model_class);

inline constexpr int kSocietyHorizon = 10;

// Lines of the form "(Episode g): [[(X1,Y1),(X2,Y2)], [...]]".
std::string render_episode_blocks(const std::vector<PriorEpisode>& prior,
                                  CrossEpisodeFormat format = CrossEpisodeFormat::FullHistories);

PromptBundle build_society_prompt(int horizon, const std::vector<ActionPair>& dyad_history,
                                  const std::vector<PriorEpisode>& prior_episodes,
                                  Persona persona, Framing framing, ModelClass model_class,
                                  const PromptOptions& options = {});

DecisionOutput parse_decision(std::string_view raw, ModelClass model_class);

// Canonical text that parse_decision maps back to the same decision.
std::string render_decision(const DecisionOutput& d, ModelClass model_class);

// Instrumentation for tests: how often prompts were built and outputs parsed.
struct ProtocolCounters {
  std::atomic<long> prompts_built{0};
  std::atomic<long> outputs_parsed{0};
};
ProtocolCounters& protocol_counters();

}  // namespace sode
