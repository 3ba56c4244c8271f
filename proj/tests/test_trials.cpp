#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>
#include <tuple>

#include "sode/trials.hpp"

using namespace sode;

namespace {

std::multiset<std::pair<int, int>> score_visibility(const TrialSet& s) {
  std::multiset<std::pair<int, int>> out;
  for (const auto& t : s.trials) {
    out.insert({t.is_control ? 99 : *t.score, t.visibility == Visibility::Public});
  }
  return out;
}

}  // namespace

TEST_CASE("score levels have exact bin boundaries") {
  CHECK(level_for_score(-5) == ReputationLevel::Low);
  CHECK(level_for_score(-3) == ReputationLevel::Low);
  CHECK(level_for_score(-2) == ReputationLevel::Mid);
  CHECK(level_for_score(0) == ReputationLevel::Mid);
  CHECK(level_for_score(2) == ReputationLevel::Mid);
  CHECK(level_for_score(3) == ReputationLevel::High);
  CHECK(level_for_score(5) == ReputationLevel::High);
  CHECK_THROWS(level_for_score(6));
  CHECK_THROWS(level_for_score(-6));
}

TEST_CASE("window length follows score parity") {
  for (int s = -5; s <= 5; ++s) {
    const int k = window_length(s);
    CHECK(k == (std::abs(s) % 2 ? 5 : 6));
    CHECK((k + s) % 2 == 0);
    CHECK(k >= std::abs(s));
  }
}

TEST_CASE("trial-set invariants over 100 seeds") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CAPTURE(seed);
    const auto set = generate_reputation_trials(seed);
    CHECK_NOTHROW(check_trial_set(set));
    REQUIRE(set.trials.size() == 1010u);
    int controls = 0;
    std::map<int, std::pair<int, int>> by_score;  // public, private
    std::set<int> ids;
    for (const auto& t : set.trials) {
      ids.insert(t.trial_id);
      if (t.is_control) {
        ++controls;
        CHECK_FALSE(t.score.has_value());
        CHECK_FALSE(t.history.has_value());
        CHECK(t.visibility == Visibility::Private);
        continue;
      }
      REQUIRE(t.score.has_value());
      REQUIRE(t.history.has_value());
      int sum = 0;
      for (auto a : *t.history) sum += a == Action::C ? 1 : -1;
      CHECK(sum == *t.score);
      CHECK(static_cast<int>(t.history->size()) == window_length(*t.score));
      auto& [pub, priv] = by_score[*t.score];
      (t.visibility == Visibility::Public ? pub : priv)++;
    }
    CHECK(controls == 10);
    CHECK(ids.size() == 1010u);
    CHECK(*ids.begin() == 1);
    CHECK(*ids.rbegin() == 1010);
    REQUIRE(by_score.size() == 11u);
    int total = 0, publics = 0;
    for (const auto& [s, pp] : by_score) {
      CHECK(std::abs(pp.first - pp.second) <= 1);
      const int n = pp.first + pp.second;
      CHECK((n == 90 || n == 91));
      total += n;
      publics += pp.first;
    }
    CHECK(total == 1000);
    CHECK(publics == 500);
  }
}

TEST_CASE("regeneration is deterministic; seeds only move histories and order") {
  const auto a = generate_reputation_trials(42);
  const auto b = generate_reputation_trials(42);
  CHECK(a.trials == b.trials);
  CHECK(trials_to_jsonl(a) == trials_to_jsonl(b));
  const auto c = generate_reputation_trials(43);
  CHECK(a.trials != c.trials);
  CHECK(score_visibility(a) == score_visibility(c));
}

TEST_CASE("score +3 cue has four C and one D") {
  const auto set = generate_reputation_trials(42);
  bool seen = false;
  for (const auto& t : set.trials) {
    if (t.is_control || *t.score != 3) continue;
    seen = true;
    CHECK(t.history->size() == 5u);
    CHECK(std::count(t.history->begin(), t.history->end(), Action::C) == 4);
  }
  CHECK(seen);
  for (const auto& t : set.trials) {
    if (t.is_control || *t.score != -5) continue;
    CHECK(*t.history == std::vector<Action>(5, Action::D));
  }
  for (const auto& t : set.trials) {
    if (t.is_control || *t.score != 0) continue;
    CHECK(t.history->size() == 6u);
    CHECK(std::count(t.history->begin(), t.history->end(), Action::C) == 3);
  }
}

TEST_CASE("order is shuffled") {
  const auto set = generate_reputation_trials(1);
  int controls_first = 0;
  for (int i = 0; i < 10; ++i) controls_first += set.trials[static_cast<std::size_t>(i)].is_control;
  CHECK(controls_first < 10);
  int ascending = 0;
  for (std::size_t i = 1; i < set.trials.size(); ++i) {
    const auto& p = set.trials[i - 1];
    const auto& q = set.trials[i];
    if (!p.is_control && !q.is_control && *p.score <= *q.score) ++ascending;
  }
  CHECK(ascending < 800);
}

TEST_CASE("JSONL round trip") {
  const auto set = generate_reputation_trials(5);
  const auto text = trials_to_jsonl(set);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1010);
  const auto back = trials_from_jsonl(text, 5);
  CHECK(back.trials == set.trials);
  CHECK(back.seed == 5u);
}

TEST_CASE("check_trial rejects malformed trials") {
  ReputationTrial t;
  t.trial_id = 1;
  t.score = 3;
  t.history = std::vector<Action>{Action::C, Action::C, Action::C, Action::C, Action::D};
  CHECK_NOTHROW(check_trial(t));
  auto bad = t;
  bad.score = 1;
  CHECK_THROWS(check_trial(bad));
  ReputationTrial ctrl;
  ctrl.is_control = true;
  CHECK_NOTHROW(check_trial(ctrl));
  ctrl.visibility = Visibility::Public;
  CHECK_THROWS(check_trial(ctrl));
  ReputationTrial cue_control;
  cue_control.is_control = true;
  cue_control.score = 0;
  CHECK_THROWS(check_trial(cue_control));
}
