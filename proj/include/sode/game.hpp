#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sode {

enum class Action : std::uint8_t { C, D };

char to_char(Action a);
Action action_from_char(char c);
// Accepts exactly "C" or "D".
Action action_from_string(std::string_view s);

// Bracketed, space separated rendering, e.g. "[C D C]" and "[]".
std::string render_actions(const std::vector<Action>& actions);

enum class Side : std::uint8_t { A, B };

constexpr Side other(Side s) { return s == Side::A ? Side::B : Side::A; }
std::string_view to_string(Side s);

// Per-player points for the four outcomes. Construction enforces the
// dilemma ordering T > R > P > S and 2R > T + S.
class PayoffMatrix {
 public:
  PayoffMatrix() = default;
  PayoffMatrix(int reward, int punishment, int temptation, int sucker);

  int reward() const { return reward_; }
  int punishment() const { return punishment_; }
  int temptation() const { return temptation_; }
  int sucker() const { return sucker_; }

  friend bool operator==(const PayoffMatrix&, const PayoffMatrix&) = default;

 private:
  int reward_ = 3;
  int punishment_ = 1;
  int temptation_ = 5;
  int sucker_ = 0;
};

int payoff(const PayoffMatrix& matrix, Action self, Action other);

// Previous-round joint action seen from one player: own action first.
enum class JointState : std::uint8_t { CC = 0, CD = 1, DC = 2, DD = 3 };

constexpr JointState make_joint_state(Action own, Action other) {
  return static_cast<JointState>((own == Action::D ? 2 : 0) + (other == Action::D ? 1 : 0));
}
constexpr Action own_action(JointState s) {
  return (static_cast<int>(s) & 2) ? Action::D : Action::C;
}
constexpr Action other_action(JointState s) {
  return (static_cast<int>(s) & 1) ? Action::D : Action::C;
}
// The same state labeled from the other player's seat (CD <-> DC).
constexpr JointState swap_perspective(JointState s) {
  return make_joint_state(other_action(s), own_action(s));
}
std::string_view to_string(JointState s);
JointState joint_state_from_string(std::string_view s);

inline constexpr JointState kAllJointStates[] = {JointState::CC, JointState::CD, JointState::DC,
                                                 JointState::DD};

// Optional per-round annotation of how a remote agent arrived at its move.
struct DecisionTrace {
  std::string reasoning;
  std::optional<std::string> think_trace;
  std::string request_id;
  int attempts = 1;

  friend bool operator==(const DecisionTrace&, const DecisionTrace&) = default;
};

struct RoundRecord {
  int round_index = 0;  // 1-based
  Action action_a = Action::C;
  Action action_b = Action::C;
  int payoff_a = 0;
  int payoff_b = 0;
  // Present only for agents that produce traces (remote models).
  std::optional<DecisionTrace> trace_a;
  std::optional<DecisionTrace> trace_b;

  Action action(Side s) const { return s == Side::A ? action_a : action_b; }
  int payoff_of(Side s) const { return s == Side::A ? payoff_a : payoff_b; }

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

JointState joint_state(const RoundRecord& prev_round, Side perspective);

struct EpisodeRecord {
  int episode_index = 1;  // 1-based
  int horizon = 0;
  std::vector<RoundRecord> rounds;
  std::string condition_tag;
  std::uint64_t seed = 0;
  bool valid = true;
  std::string failure;  // empty when valid
  int retries = 0;      // decision re-queries spent in this episode

  std::vector<Action> actions(Side s) const;

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

void to_json(nlohmann::json& j, const RoundRecord& r);
void from_json(const nlohmann::json& j, RoundRecord& r);
void to_json(nlohmann::json& j, const DecisionTrace& t);
void from_json(const nlohmann::json& j, DecisionTrace& t);
void to_json(nlohmann::json& j, const EpisodeRecord& e);
void from_json(const nlohmann::json& j, EpisodeRecord& e);

// Throws std::invalid_argument when the record breaks its invariants
// (valid episode with rounds != H, gaps in round indices, payoff mismatch).
void check_episode(const EpisodeRecord& e, const PayoffMatrix& matrix = {});

}  // namespace sode
