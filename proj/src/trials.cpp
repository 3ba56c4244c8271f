#include "sode/trials.hpp"

#include <array>
#include <cstdlib>
#include <sstream>

#include <fmt/format.h>

#include "sode/rng.hpp"

namespace sode {

std::string_view to_string(Visibility v) { return v == Visibility::Public ? "Public" : "Private"; }

Visibility visibility_from_string(std::string_view s) {
  if (s == "Public") return Visibility::Public;
  if (s == "Private") return Visibility::Private;
  throw std::invalid_argument(fmt::format("unknown visibility \"{}\"", s));
}

std::string_view to_string(ReputationLevel l) {
  switch (l) {
    case ReputationLevel::Low: return "Low";
    case ReputationLevel::Mid: return "Mid";
    case ReputationLevel::High: return "High";
  }
  return "??";
}

ReputationLevel level_for_score(int score) {
  if (score < kMinScore || score > kMaxScore) {
    throw std::invalid_argument(fmt::format("reputation score {} outside [-5,+5]", score));
  }
  if (score <= -3) return ReputationLevel::Low;
  if (score >= 3) return ReputationLevel::High;
  return ReputationLevel::Mid;
}

int signed_sum(const std::vector<Action>& history) {
  int s = 0;
  for (auto a : history) s += a == Action::C ? 1 : -1;
  return s;
}

int window_length(int score) { return std::abs(score) % 2 == 1 ? 5 : 6; }

namespace {

// Levels with 91 trials split 46/45; the larger half alternates between
// Public and Private so that the full set is 500/500 and symmetric in score.
bool public_gets_extra(int score) {
  const bool odd = std::abs(score) % 2 == 1;
  return odd ? score > 0 : score < 0;
}

std::vector<Action> make_history(int score, std::uint64_t seed, int trial_id) {
  const int k = window_length(score);
  const int n_coop = (k + score) / 2;
  std::vector<Action> h(static_cast<std::size_t>(k), Action::D);
  for (int i = 0; i < n_coop; ++i) h[static_cast<std::size_t>(i)] = Action::C;
  Rng rng(derive_seed(seed, {0x68697374ULL, static_cast<std::uint64_t>(trial_id)}));
  rng.shuffle(std::span<Action>(h));
  return h;
}

}  // namespace

TrialSet generate_reputation_trials(std::uint64_t seed) {
  struct Slot {
    bool control;
    int score;
    Visibility visibility;
  };
  std::vector<Slot> slots;
  slots.reserve(kControlTrials + kTestTrials);
  for (int i = 0; i < kControlTrials; ++i) slots.push_back({true, 0, Visibility::Private});

  const int levels = kMaxScore - kMinScore + 1;
  const int base = kTestTrials / levels + 1;  // 91
  for (int s = kMinScore; s <= kMaxScore; ++s) {
    const int n = s == kShortScoreLevel ? base - 1 : base;
    int n_public = n / 2;
    if (n % 2 == 1 && public_gets_extra(s)) ++n_public;
    for (int i = 0; i < n; ++i) {
      slots.push_back({false, s, i < n_public ? Visibility::Public : Visibility::Private});
    }
  }

  Rng order(derive_seed(seed, {0x6f726465ULL}));
  order.shuffle(std::span<Slot>(slots));

  TrialSet set;
  set.seed = seed;
  set.trials.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    ReputationTrial t;
    t.trial_id = static_cast<int>(i) + 1;
    t.is_control = slots[i].control;
    t.visibility = slots[i].visibility;
    if (!t.is_control) {
      t.score = slots[i].score;
      t.history = make_history(slots[i].score, seed, t.trial_id);
    }
    set.trials.push_back(std::move(t));
  }
  return set;
}

void check_trial(const ReputationTrial& t) {
  if (t.is_control) {
    if (t.score || t.history) {
      throw std::invalid_argument(fmt::format("control trial {} carries a cue", t.trial_id));
    }
    if (t.visibility != Visibility::Private) {
      throw std::invalid_argument(fmt::format("control trial {} is not private", t.trial_id));
    }
    return;
  }
  if (!t.score || !t.history) {
    throw std::invalid_argument(fmt::format("test trial {} lacks a cue", t.trial_id));
  }
  level_for_score(*t.score);
  if (signed_sum(*t.history) != *t.score) {
    throw std::invalid_argument(fmt::format("trial {}: history sums to {}, score {}", t.trial_id,
                                            signed_sum(*t.history), *t.score));
  }
}

void check_trial_set(const TrialSet& set) {
  if (set.trials.size() != static_cast<std::size_t>(kControlTrials + kTestTrials)) {
    throw std::invalid_argument(fmt::format("trial set has {} trials", set.trials.size()));
  }
  int controls = 0;
  std::array<int, 11> pub{}, priv{};
  for (const auto& t : set.trials) {
    check_trial(t);
    if (t.is_control) {
      ++controls;
      continue;
    }
    auto& bucket = t.visibility == Visibility::Public ? pub : priv;
    ++bucket[static_cast<std::size_t>(*t.score - kMinScore)];
  }
  if (controls != kControlTrials) {
    throw std::invalid_argument(fmt::format("trial set has {} controls", controls));
  }
  for (std::size_t i = 0; i < pub.size(); ++i) {
    if (std::abs(pub[i] - priv[i]) > 1) {
      throw std::invalid_argument(fmt::format("score {:+d}: {} public vs {} private",
                                              static_cast<int>(i) + kMinScore, pub[i], priv[i]));
    }
  }
}

void to_json(nlohmann::json& j, const ReputationTrial& t) {
  j = {{"trial_id", t.trial_id},
       {"is_control", t.is_control},
       {"visibility", std::string(to_string(t.visibility))}};
  if (t.score) {
    j["score"] = *t.score;
    j["level"] = std::string(to_string(level_for_score(*t.score)));
  }
  if (t.history) {
    std::string h;
    for (auto a : *t.history) h += to_char(a);
    j["history"] = h;
  }
}

void from_json(const nlohmann::json& j, ReputationTrial& t) {
  j.at("trial_id").get_to(t.trial_id);
  j.at("is_control").get_to(t.is_control);
  t.visibility = visibility_from_string(j.at("visibility").get<std::string>());
  t.score.reset();
  t.history.reset();
  if (j.contains("score")) t.score = j.at("score").get<int>();
  if (j.contains("history")) {
    std::vector<Action> h;
    for (char c : j.at("history").get<std::string>()) h.push_back(action_from_char(c));
    t.history = std::move(h);
  }
}

std::string trials_to_jsonl(const TrialSet& set) {
  std::string out;
  for (const auto& t : set.trials) {
    out += nlohmann::json(t).dump();
    out += '\n';
  }
  return out;
}

TrialSet trials_from_jsonl(std::string_view text, std::uint64_t seed) {
  TrialSet set;
  set.seed = seed;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    set.trials.push_back(nlohmann::json::parse(line).get<ReputationTrial>());
  }
  return set;
}

}  // namespace sode
