#include "sode/game.hpp"

#include <fmt/format.h>

namespace sode {

char to_char(Action a) { return a == Action::C ? 'C' : 'D'; }

Action action_from_char(char c) {
  if (c == 'C') return Action::C;
  if (c == 'D') return Action::D;
  throw std::invalid_argument(fmt::format("invalid action character '{}'", c));
}

Action action_from_string(std::string_view s) {
  if (s.size() != 1) throw std::invalid_argument(fmt::format("invalid action \"{}\"", s));
  return action_from_char(s.front());
}

std::string render_actions(const std::vector<Action>& actions) {
  std::string out = "[";
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out += ' ';
    out += to_char(actions[i]);
  }
  out += ']';
  return out;
}

std::string_view to_string(Side s) { return s == Side::A ? "a" : "b"; }

PayoffMatrix::PayoffMatrix(int reward, int punishment, int temptation, int sucker)
    : reward_(reward), punishment_(punishment), temptation_(temptation), sucker_(sucker) {
  if (!(temptation > reward && reward > punishment && punishment > sucker)) {
    throw std::invalid_argument(fmt::format(
        "payoff matrix violates T > R > P > S (T={}, R={}, P={}, S={})", temptation, reward,
        punishment, sucker));
  }
  if (!(2 * reward > temptation + sucker)) {
    throw std::invalid_argument(
        fmt::format("payoff matrix violates 2R > T + S (R={}, T={}, S={})", reward, temptation,
                    sucker));
  }
}

int payoff(const PayoffMatrix& m, Action self, Action other) {
  if (self == Action::C) return other == Action::C ? m.reward() : m.sucker();
  return other == Action::C ? m.temptation() : m.punishment();
}

std::string_view to_string(JointState s) {
  switch (s) {
    case JointState::CC: return "CC";
    case JointState::CD: return "CD";
    case JointState::DC: return "DC";
    case JointState::DD: return "DD";
  }
  return "??";
}

JointState joint_state_from_string(std::string_view s) {
  if (s.size() != 2) throw std::invalid_argument(fmt::format("invalid joint state \"{}\"", s));
  return make_joint_state(action_from_char(s[0]), action_from_char(s[1]));
}

JointState joint_state(const RoundRecord& prev, Side perspective) {
  return make_joint_state(prev.action(perspective), prev.action(other(perspective)));
}

std::vector<Action> EpisodeRecord::actions(Side s) const {
  std::vector<Action> out;
  out.reserve(rounds.size());
  for (const auto& r : rounds) out.push_back(r.action(s));
  return out;
}

void to_json(nlohmann::json& j, const DecisionTrace& t) {
  j = {{"reasoning", t.reasoning}, {"request_id", t.request_id}, {"attempts", t.attempts}};
  if (t.think_trace) j["think_trace"] = *t.think_trace;
}

void from_json(const nlohmann::json& j, DecisionTrace& t) {
  j.at("reasoning").get_to(t.reasoning);
  j.at("request_id").get_to(t.request_id);
  t.attempts = j.value("attempts", 1);
  if (j.contains("think_trace")) t.think_trace = j.at("think_trace").get<std::string>();
}

void to_json(nlohmann::json& j, const RoundRecord& r) {
  j = {{"round_index", r.round_index},
       {"action_a", std::string(1, to_char(r.action_a))},
       {"action_b", std::string(1, to_char(r.action_b))},
       {"payoff_a", r.payoff_a},
       {"payoff_b", r.payoff_b}};
  if (r.trace_a) j["trace_a"] = *r.trace_a;
  if (r.trace_b) j["trace_b"] = *r.trace_b;
}

void from_json(const nlohmann::json& j, RoundRecord& r) {
  j.at("round_index").get_to(r.round_index);
  r.action_a = action_from_string(j.at("action_a").get<std::string>());
  r.action_b = action_from_string(j.at("action_b").get<std::string>());
  j.at("payoff_a").get_to(r.payoff_a);
  j.at("payoff_b").get_to(r.payoff_b);
  if (j.contains("trace_a")) r.trace_a = j.at("trace_a").get<DecisionTrace>();
  if (j.contains("trace_b")) r.trace_b = j.at("trace_b").get<DecisionTrace>();
}

void to_json(nlohmann::json& j, const EpisodeRecord& e) {
  j = {{"episode_index", e.episode_index},
       {"horizon", e.horizon},
       {"rounds", e.rounds},
       {"condition_tag", e.condition_tag},
       {"seed", e.seed},
       {"valid", e.valid},
       {"retries", e.retries}};
  if (!e.valid) j["failure"] = e.failure;
}

void from_json(const nlohmann::json& j, EpisodeRecord& e) {
  j.at("episode_index").get_to(e.episode_index);
  j.at("horizon").get_to(e.horizon);
  j.at("rounds").get_to(e.rounds);
  j.at("condition_tag").get_to(e.condition_tag);
  j.at("seed").get_to(e.seed);
  e.valid = j.value("valid", true);
  e.retries = j.value("retries", 0);
  e.failure = j.value("failure", std::string{});
}

void check_episode(const EpisodeRecord& e, const PayoffMatrix& matrix) {
  if (e.horizon < 1) throw std::invalid_argument("episode horizon must be >= 1");
  if (e.valid && static_cast<int>(e.rounds.size()) != e.horizon) {
    throw std::invalid_argument(fmt::format("episode {} has {} rounds, horizon {}",
                                            e.episode_index, e.rounds.size(), e.horizon));
  }
  for (std::size_t i = 0; i < e.rounds.size(); ++i) {
    const auto& r = e.rounds[i];
    if (r.round_index != static_cast<int>(i) + 1) {
      throw std::invalid_argument(
          fmt::format("episode {}: round index {} at position {}", e.episode_index,
                      r.round_index, i + 1));
    }
    if (r.payoff_a != payoff(matrix, r.action_a, r.action_b) ||
        r.payoff_b != payoff(matrix, r.action_b, r.action_a)) {
      throw std::invalid_argument(
          fmt::format("episode {}: payoff mismatch in round {}", e.episode_index, r.round_index));
    }
  }
}

}  // namespace sode
