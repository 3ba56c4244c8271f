#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sode/game.hpp"

namespace sode {

enum class Visibility { Public, Private };
enum class ReputationLevel { Low, Mid, High };

std::string_view to_string(Visibility v);
Visibility visibility_from_string(std::string_view s);
std::string_view to_string(ReputationLevel l);

// Low: [-5,-3], Mid: [-2,+2], High: [+3,+5]. Throws outside [-5,+5].
ReputationLevel level_for_score(int score);

// Signed sum with C = +1, D = -1.
int signed_sum(const std::vector<Action>& history);

// Cue window length: 5 for odd |score|, 6 for even |score|.
int window_length(int score);

struct ReputationTrial {
  int trial_id = 0;
  bool is_control = false;
  std::optional<int> score;                    // absent for controls
  std::optional<std::vector<Action>> history;  // absent for controls
  Visibility visibility = Visibility::Private;

  std::optional<ReputationLevel> level() const {
    if (!score) return std::nullopt;
    return level_for_score(*score);
  }

  friend bool operator==(const ReputationTrial&, const ReputationTrial&) = default;
};

struct TrialSet {
  std::vector<ReputationTrial> trials;
  std::uint64_t seed = 0;
};

inline constexpr int kControlTrials = 10;
inline constexpr int kTestTrials = 1000;
inline constexpr int kMinScore = -5;
inline constexpr int kMaxScore = 5;
// Score level that receives one trial fewer than the others (90 vs 91).
inline constexpr int kShortScoreLevel = 0;

TrialSet generate_reputation_trials(std::uint64_t seed);

// Throws std::invalid_argument describing the first violated invariant.
void check_trial(const ReputationTrial& t);
void check_trial_set(const TrialSet& set);

void to_json(nlohmann::json& j, const ReputationTrial& t);
void from_json(const nlohmann::json& j, ReputationTrial& t);

std::string trials_to_jsonl(const TrialSet& set);
TrialSet trials_from_jsonl(std::string_view text, std::uint64_t seed);

}  // namespace sode
