#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sode/agent.hpp"
#include "sode/episode.hpp"
#include "sode/strategies.hpp"

using namespace sode;

namespace {

struct Named {
  const char* name;
  MemoryOneStrategy s;
};

std::vector<Named> oracle_pool() {
  return {{"ES", zd_params(ZDCondition::ES)},   {"EM", zd_params(ZDCondition::EM)},
          {"GM", zd_params(ZDCondition::GM)},   {"GS", zd_params(ZDCondition::GS)},
          {"ALLC", memory_one::kAllC},          {"ALLD", memory_one::kAllD},
          {"TFT", memory_one::kTitForTat},      {"RND", memory_one::random_p(0.5)}};
}

double payoff_1(const std::array<double, 4>& d) { return 3 * d[0] + 0 * d[1] + 5 * d[2] + 1 * d[3]; }
double payoff_2(const std::array<double, 4>& d) { return 3 * d[0] + 5 * d[1] + 0 * d[2] + 1 * d[3]; }

}  // namespace

TEST_CASE("default ZD parameters") {
  const auto es = zd_params(ZDCondition::ES);
  CHECK(es == MemoryOneStrategy{0.0, 0.692, 0.0, 0.538, 0.0});
  CHECK(zd_params(ZDCondition::EM) == MemoryOneStrategy{0.0, 0.857, 0.0, 0.786, 0.0});
  CHECK(zd_params(ZDCondition::GM) == MemoryOneStrategy{1.0, 1.0, 0.077, 1.0, 0.154});
  CHECK(zd_params(ZDCondition::GS) == MemoryOneStrategy{1.0, 1.0, 0.182, 1.0, 0.364});
  CHECK(regime_of(ZDCondition::ES) == Regime::Extortion);
  CHECK(regime_of(ZDCondition::EM) == Regime::Extortion);
  CHECK(regime_of(ZDCondition::GM) == Regime::Generosity);
  CHECK(regime_of(ZDCondition::GS) == Regime::Generosity);
  for (auto c : kAllZDConditions) CHECK(zd_condition_from_string(to_string(c)) == c);
}

TEST_CASE("ZD table loads alternative parameters") {
  ZdTable def;
  for (auto c : kAllZDConditions) CHECK(def[c] == zd_params(c));
  auto j = def.to_json();
  CHECK(j["GM"]["pCD"].get<double>() == doctest::Approx(0.077));
  j["ES"]["pCC"] = 0.5;
  auto alt = ZdTable::from_json(j);
  CHECK(alt[ZDCondition::ES].p_cc == 0.5);
  CHECK(alt[ZDCondition::GS] == zd_params(ZDCondition::GS));
  j["ES"]["pCC"] = 1.5;
  CHECK_THROWS(ZdTable::from_json(j));
  auto missing = def.to_json();
  missing.erase("EM");
  CHECK_THROWS(ZdTable::from_json(missing));
}

TEST_CASE("validate rejects probabilities outside [0,1]") {
  CHECK_NOTHROW(validate(memory_one::kTitForTat));
  CHECK_THROWS_AS(validate({1.0, 1.1, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(validate({-0.1, 1, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(validate({0.5, 0.5, 0.5, 0.5, std::nan("")}), std::invalid_argument);
}

TEST_CASE("first-round actions follow p0") {
  constexpr int kSamples = 100'000;
  for (auto c : kAllZDConditions) {
    const auto s = zd_params(c);
    Rng rng(derive_seed(7, {static_cast<std::uint64_t>(c)}));
    int coop = 0;
    for (int i = 0; i < kSamples; ++i) coop += next_action(s, std::nullopt, rng) == Action::C;
    CHECK(coop == (s.p0 == 1.0 ? kSamples : 0));
  }
  const auto r = memory_one::random_p(0.3);
  Rng rng(11);
  int coop = 0;
  for (int i = 0; i < kSamples; ++i) coop += next_action(r, std::nullopt, rng) == Action::C;
  const double se = std::sqrt(0.3 * 0.7 / kSamples);
  CHECK(std::abs(coop / double(kSamples) - 0.3) < 3 * se);
}

TEST_CASE("degenerate probabilities are deterministic") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    CHECK(next_action(zd_params(ZDCondition::GS), JointState::CC, rng) == Action::C);
    CHECK(next_action(zd_params(ZDCondition::ES), JointState::CD, rng) == Action::D);
  }
}

TEST_CASE("states are read from the strategy's own seat") {
  // GM, having cooperated against a defector, forgives with p = 0.077; under
  // the swapped convention it would see DC and cooperate with p = 1.
  const auto gm = zd_params(ZDCondition::GM);
  CHECK(gm.p(JointState::CD) == 0.077);
  constexpr int kSamples = 100'000;
  Rng rng(17);
  int coop = 0;
  for (int i = 0; i < kSamples; ++i) coop += next_action(gm, JointState::CD, rng) == Action::C;
  const double rate = coop / double(kSamples);
  CHECK(std::abs(rate - 0.077) < 3 * std::sqrt(0.077 * 0.923 / kSamples));
  CHECK(rate < 0.5);

  // Same thing through a full episode: agent defects on round 1 against GM.
  auto gm_agent = make_agent(AgentSpec{ScriptedStrategy::memory(gm)});
  auto probe = make_agent(AgentSpec{ScriptedStrategy::memory({0.0, 1, 1, 1, 1})});
  int coop2 = 0;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    EpisodeOptions o;
    o.horizon = 2;
    auto e = run_episode(*probe, *gm_agent, o, seed);
    coop2 += e.rounds[1].action_b == Action::C;
  }
  CHECK(coop2 / 4000.0 < 0.13);
}

TEST_CASE("scripted strategies as memory-one vectors") {
  CHECK(as_memory_one(ScriptedStrategy::all_c()) == memory_one::kAllC);
  CHECK(as_memory_one(ScriptedStrategy::all_d()) == memory_one::kAllD);
  CHECK(*as_memory_one(ScriptedStrategy::tit_for_tat()) == MemoryOneStrategy{1, 1, 0, 1, 0});
  CHECK(as_memory_one(ScriptedStrategy::random_p(0.25)) == memory_one::random_p(0.25));
  CHECK_FALSE(as_memory_one(ScriptedStrategy::grim()).has_value());
  CHECK_FALSE(as_memory_one({ScriptedKind::ScoreThreshold}).has_value());
  for (auto k : {ScriptedKind::AllC, ScriptedKind::AllD, ScriptedKind::TitForTat,
                 ScriptedKind::Grim, ScriptedKind::RandomP, ScriptedKind::MemoryOne,
                 ScriptedKind::ScoreThreshold, ScriptedKind::ScoreAntiThreshold,
                 ScriptedKind::PublicCooperator}) {
    CHECK(scripted_kind_from_string(to_string(k)) == k);
  }
}

TEST_CASE("transition matrix matches the reference construction") {
  const auto pool = oracle_pool();
  for (const auto& a : pool) {
    for (const auto& b : pool) {
      const auto m = transition_matrix(a.s, b.s);
      const auto ref = oracle::transition(a.s, b.s);
      for (int i = 0; i < 4; ++i) {
        double row = 0;
        for (int k = 0; k < 4; ++k) {
          CHECK(m[i][k] == doctest::Approx(ref(i, k)).epsilon(1e-12));
          row += m[i][k];
        }
        CHECK(row == doctest::Approx(1.0));
      }
    }
  }
}

TEST_CASE("stationary distribution examples") {
  auto cc = stationary_distribution(memory_one::kAllC, memory_one::kAllC);
  CHECK(cc == StateDistribution{1, 0, 0, 0});
  auto dd = stationary_distribution(memory_one::kAllD, memory_one::kAllD);
  CHECK(dd == StateDistribution{0, 0, 0, 1});
  auto v = expected_payoffs(memory_one::kAllC, memory_one::kAllC);
  CHECK(v.v1 == 3.0);
  CHECK(v.v2 == 3.0);
  auto w = expected_payoffs(memory_one::kAllD, memory_one::kAllC);
  CHECK(w.v1 == 5.0);
  CHECK(w.v2 == 0.0);
}

TEST_CASE("stationary distribution agrees with the Cesaro reference on every pair") {
  const auto pool = oracle_pool();
  for (const auto& a : pool) {
    for (const auto& b : pool) {
      const std::string pair = std::string(a.name) + " vs " + b.name;
      CAPTURE(pair);
      const auto d = stationary_distribution(a.s, b.s);
      const auto ref = oracle::cesaro(a.s, b.s);
      double sum = 0;
      for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(d[i] - ref(i)) < 1e-6);
        CHECK(d[i] >= 0.0);
        sum += d[i];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("ergodic chains match the linear-solve reference") {
  Rng rng(2024);
  auto interior = [&] {
    auto u = [&] { return 0.05 + 0.9 * rng.uniform01(); };
    return MemoryOneStrategy{u(), u(), u(), u(), u()};
  };
  for (int i = 0; i < 50; ++i) {
    const auto a = interior(), b = interior();
    const auto d = stationary_distribution(a, b);
    const auto ref = oracle::stationary_solve(a, b);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(d[k] - ref(k)) < 1e-8);
  }
}

TEST_CASE("periodic chain: alternation averages out") {
  // Player 1 copies, player 2 anti-copies: cycles through all four states.
  const MemoryOneStrategy copy{1, 1, 0, 1, 0};
  const MemoryOneStrategy anti{1, 0, 1, 0, 1};
  const auto d = stationary_distribution(copy, anti);
  for (int k = 0; k < 4; ++k) CHECK(d[k] == doctest::Approx(0.25).epsilon(1e-8));
}

TEST_CASE("iteration budget exhaustion raises NonConvergence") {
  StationaryOptions tight;
  tight.max_iterations = 2;
  tight.tolerance = 1e-15;
  CHECK_THROWS_AS(stationary_distribution(memory_one::random_p(0.5), zd_params(ZDCondition::GM),
                                          tight),
                  NonConvergence);
}

TEST_CASE("finite-horizon distribution matches brute-force path enumeration") {
  const auto pool = oracle_pool();
  for (const auto& a : pool) {
    for (const auto& b : pool) {
      for (int h = 1; h <= 6; ++h) {
        const auto d = horizon_average_distribution(a.s, b.s, h);
        const auto ref = oracle::enumerate_paths(a.s, b.s, h);
        for (int k = 0; k < 4; ++k) CHECK(d[k] == doctest::Approx(ref[k]).epsilon(1e-12));
      }
      const auto d30 = horizon_average_distribution(a.s, b.s, 30);
      const auto ref30 = oracle::horizon_average(a.s, b.s, 30);
      for (int k = 0; k < 4; ++k) CHECK(d30[k] == doctest::Approx(ref30(k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("GM vs ALLD: long simulation matches the analytic cooperation rate") {
  const auto gm = zd_params(ZDCondition::GM);
  const auto d = stationary_distribution(gm, memory_one::kAllD);
  const auto f = oracle::simulate(gm, memory_one::kAllD, 1'000'000, 31);
  CHECK(std::abs(coop_probability_1(d) - (f[0] + f[1])) < 0.01);
}

TEST_CASE("ES vs TFT: Monte Carlo payoffs over 50 x 30 match the oracle") {
  const auto es = zd_params(ZDCondition::ES);
  auto a = make_agent(AgentSpec{ScriptedStrategy::memory(es)});
  auto b = make_agent(AgentSpec{ScriptedStrategy::tit_for_tat()});
  double v1 = 0, v2 = 0;
  long n = 0;
  for (int g = 0; g < 50; ++g) {
    EpisodeOptions o;
    o.horizon = 30;
    auto e = run_episode(*a, *b, o, derive_seed(77, {static_cast<std::uint64_t>(g)}));
    for (const auto& r : e.rounds) {
      v1 += r.payoff_a;
      v2 += r.payoff_b;
      ++n;
    }
  }
  const auto finite = expected_payoffs(es, memory_one::kTitForTat, {}, 30);
  CHECK(std::abs(v1 / n - finite.v1) < 0.1);
  CHECK(std::abs(v2 / n - finite.v2) < 0.1);
  const auto longrun = expected_payoffs(es, memory_one::kTitForTat);
  CHECK(longrun.v1 == doctest::Approx(1.0));
  CHECK(longrun.v2 == doctest::Approx(1.0));
}

TEST_CASE("oracle consistency over the memory-one pool at 10^6 rounds") {
  const auto pool = oracle_pool();
  std::uint64_t seed = 1;
  for (const auto& a : pool) {
    for (const auto& b : pool) {
      const std::string pair = std::string(a.name) + " vs " + b.name;
      CAPTURE(pair);
      const auto d = stationary_distribution(a.s, b.s);
      const auto v = expected_payoffs(a.s, b.s);
      const auto f = oracle::simulate(a.s, b.s, 1'000'000, seed++);
      CHECK(std::abs(coop_probability_1(d) - (f[0] + f[1])) < 0.02);
      CHECK(std::abs(coop_probability_2(d) - (f[0] + f[2])) < 0.02);
      CHECK(std::abs(v.v1 - payoff_1(f)) < 0.1);
      CHECK(std::abs(v.v2 - payoff_2(f)) < 0.1);
    }
  }
}

TEST_CASE("GRIM by direct simulation") {
  auto grim = make_agent(AgentSpec{ScriptedStrategy::grim()});
  auto run = [&](ScriptedStrategy other, int h, std::uint64_t seed) {
    auto o = make_agent(AgentSpec{other});
    EpisodeOptions opts;
    opts.horizon = h;
    return run_episode(*grim, *o, opts, seed);
  };
  auto vs_allc = run(ScriptedStrategy::all_c(), 200, 1);
  for (const auto& r : vs_allc.rounds) CHECK(r.action_a == Action::C);
  auto vs_es = run(ScriptedStrategy::memory(zd_params(ZDCondition::ES)), 200, 2);
  CHECK(vs_es.rounds[0].action_a == Action::C);
  for (std::size_t t = 1; t < vs_es.rounds.size(); ++t) CHECK(vs_es.rounds[t].action_a == Action::D);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto e = run(ScriptedStrategy::random_p(0.5), 100, seed);
    bool seen_d = false;
    for (const auto& r : e.rounds) {
      CHECK(r.action_a == (seen_d ? Action::D : Action::C));
      if (r.action_b == Action::D) seen_d = true;
    }
  }
}
