#include <doctest.h>

#include <regex>
#include <set>

#include "stub_server.hpp"
#include "sode/experiments.hpp"

using namespace sode;
using namespace std::chrono_literals;

namespace {

AgentSpec scripted(ScriptedStrategy s) { return AgentSpec{s}; }

AgentContext stub_context(int limit = 4) {
  GatewayOptions o;
  o.initial_backoff = 1ms;
  AgentContext ctx;
  ctx.gateway = Gateway::with_concurrency_budget(limit, o);
  return ctx;
}

}  // namespace

TEST_CASE("direct reciprocity defaults: 4 x 50 x 30") {
  DirectReciprocityConfig cfg;
  CHECK(cfg.conditions.size() == 4u);
  CHECK(cfg.horizon == 30);
  CHECK(cfg.episodes_per_condition == 50);
  cfg.seed = 11;
  const auto eps = run_direct_reciprocity(scripted(ScriptedStrategy::tit_for_tat()), cfg);
  REQUIRE(eps.size() == 200u);
  for (std::size_t k = 0; k < eps.size(); ++k) {
    const auto& e = eps[k];
    CHECK(e.valid);
    CHECK(e.rounds.size() == 30u);
    CHECK(e.condition_tag == to_string(kAllZDConditions[k / 50]));
    CHECK(e.episode_index == static_cast<int>(k % 50) + 1);
    CHECK(e.seed == direct_episode_seed(11, kAllZDConditions[k / 50], e.episode_index));
    CHECK_NOTHROW(check_episode(e));
  }
}

TEST_CASE("single-round episodes expose p0") {
  DirectReciprocityConfig cfg;
  cfg.episodes_per_condition = 1;
  cfg.horizon = 1;
  const auto eps = run_direct_reciprocity(scripted(ScriptedStrategy::all_c()), cfg);
  REQUIRE(eps.size() == 4u);
  CHECK(eps[0].rounds[0].action_b == Action::D);  // ES
  CHECK(eps[1].rounds[0].action_b == Action::D);  // EM
  CHECK(eps[2].rounds[0].action_b == Action::C);  // GM
  CHECK(eps[3].rounds[0].action_b == Action::C);  // GS
}

TEST_CASE("direct reciprocity is reproducible at any concurrency") {
  DirectReciprocityConfig cfg;
  cfg.seed = 5;
  cfg.episodes_per_condition = 20;
  const auto spec = scripted(ScriptedStrategy::random_p(0.5));
  const auto serial = run_direct_reciprocity(spec, cfg);
  cfg.concurrency = 4;
  CHECK(run_direct_reciprocity(spec, cfg) == serial);
  cfg.seed = 6;
  CHECK(run_direct_reciprocity(spec, cfg) != serial);
}

TEST_CASE("ZD opponents start fresh each episode") {
  // With p0 = 0.5 the opponent's opening move must not depend on how the
  // previous episode ended.
  ZdTable table = ZdTable::from_json(nlohmann::json{
      {"ES", {{"p0", 0.5}, {"pCC", 0.692}, {"pCD", 0.0}, {"pDC", 0.538}, {"pDD", 0.0}}},
      {"EM", {{"p0", 0.0}, {"pCC", 0.857}, {"pCD", 0.0}, {"pDC", 0.786}, {"pDD", 0.0}}},
      {"GM", {{"p0", 1.0}, {"pCC", 1.0}, {"pCD", 0.077}, {"pDC", 1.0}, {"pDD", 0.154}}},
      {"GS", {{"p0", 1.0}, {"pCC", 1.0}, {"pCD", 0.182}, {"pDC", 1.0}, {"pDD", 0.364}}}});
  DirectReciprocityConfig cfg;
  cfg.zd = table;
  cfg.conditions = {ZDCondition::ES};
  cfg.episodes_per_condition = 4000;
  cfg.horizon = 3;
  const auto eps = run_direct_reciprocity(scripted(ScriptedStrategy::all_c()), cfg);
  int after_c = 0, after_c_open_c = 0, after_d = 0, after_d_open_c = 0, open_c = 0;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    const bool opens_c = eps[k].rounds[0].action_b == Action::C;
    open_c += opens_c;
    if (k == 0) continue;
    if (eps[k - 1].rounds.back().action_b == Action::C) {
      ++after_c;
      after_c_open_c += opens_c;
    } else {
      ++after_d;
      after_d_open_c += opens_c;
    }
  }
  CHECK(std::abs(open_c / 4000.0 - 0.5) < 3 * std::sqrt(0.25 / 4000));
  REQUIRE(after_c > 100);
  REQUIRE(after_d > 100);
  const double diff = after_c_open_c / double(after_c) - after_d_open_c / double(after_d);
  const double se = std::sqrt(0.25 / after_c + 0.25 / after_d);
  CHECK(std::abs(diff) < 4 * se);
}

TEST_CASE("direct config validation") {
  DirectReciprocityConfig cfg;
  cfg.horizon = 0;
  CHECK_THROWS(validate(cfg));
  cfg = {};
  cfg.conditions.clear();
  CHECK_THROWS(validate(cfg));
  cfg = {};
  cfg.episodes_per_condition = 0;
  CHECK_THROWS(validate(cfg));
}

TEST_CASE("reputation runner: one decision per trial, in order") {
  const auto trials = generate_reputation_trials(42);
  const auto allc = run_reputation(scripted(ScriptedStrategy::all_c()), trials);
  REQUIRE(allc.size() == 1010u);
  for (std::size_t i = 0; i < allc.size(); ++i) {
    CHECK(allc[i].valid);
    CHECK(allc[i].choice == Action::C);
    CHECK(allc[i].trial == trials.trials[i]);
  }
  const auto thr = run_reputation(scripted({ScriptedKind::ScoreThreshold}), trials, {}, 3);
  for (const auto& o : thr) {
    const bool expect_c = !o.trial.is_control && *o.trial.score >= 0;
    CHECK(o.choice == (expect_c ? Action::C : Action::D));
  }
  const auto rnd = run_reputation(scripted(ScriptedStrategy::random_p(0.5)), trials, {}, 1);
  CHECK(run_reputation(scripted(ScriptedStrategy::random_p(0.5)), trials, {}, 4) == rnd);
}

TEST_CASE("reputation outcome JSON round trip") {
  ReputationOutcome o;
  o.trial = generate_reputation_trials(1).trials[3];
  o.choice = Action::D;
  o.trace = DecisionTrace{"why", std::nullopt, "req-9", 1};
  nlohmann::json j = o;
  CHECK(j["choice"] == "D");
  CHECK(j.get<ReputationOutcome>() == o);
  ReputationOutcome bad = o;
  bad.valid = false;
  bad.failure = "malformed output";
  bad.trace.reset();
  bad.retries = 2;
  nlohmann::json jb = bad;
  CHECK_FALSE(jb.contains("choice"));
  auto back = jb.get<ReputationOutcome>();
  CHECK_FALSE(back.valid);
  CHECK(back.failure == "malformed output");
  CHECK(back.retries == 2);
}

TEST_CASE("remote reputation trials: prompts match trials, failures are isolated") {
  stub::Server server([](const stub::Request& r, int) {
    const auto text = r.body["messages"][1]["content"].get<std::string>();
    if (text.find("Opponent Public Score: -") != std::string::npos)
      return stub::Reply{200, "garbage", {}};
    return stub::Reply{200, R"({"reasoning":"ok","choice":"C"})", {}};
  });
  auto ctx = stub_context(4);
  ctx.parse_retries = 0;
  TrialSet small = generate_reputation_trials(3);
  small.trials.resize(60);
  AgentSpec spec{RemoteModel{{server.base_url(), "m", ""}, ModelClass::InstructionTuned}};
  const auto out = run_reputation(spec, small, ctx, 4);
  REQUIRE(out.size() == 60u);
  for (const auto& o : out) {
    const bool negative = !o.trial.is_control && *o.trial.score < 0;
    CHECK(o.valid == !negative);
    if (o.valid) CHECK(o.trace.has_value());
  }
  CHECK(server.requests().size() == 60u);
  CHECK(server.max_in_flight() <= 4);
}

TEST_CASE("society structure") {
  SocietyConfig cfg;
  CHECK(cfg.agents == 5);
  CHECK(cfg.horizon == 10);
  for (auto [alpha, k] : {std::pair{0.0, 0}, {0.4, 2}, {1.0, 5}}) {
    cfg.rc_fraction = alpha;
    CHECK(rc_count(cfg) == k);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      cfg.seed = seed;
      const auto p = assign_personas(cfg);
      CHECK(std::count(p.begin(), p.end(), Persona::ResilientCooperator) == k);
    }
  }
  cfg.rc_fraction = 0.4;
  cfg.seed = 8;
  const auto log = run_society(scripted(ScriptedStrategy::random_p(0.7)), cfg);
  CHECK(std::count(log.personas.begin(), log.personas.end(), Persona::ResilientCooperator) == 2);
  REQUIRE(log.episodes.size() == 10u);
  for (const auto& ep : log.episodes) {
    REQUIRE(ep.dyads.size() == 10u);
    std::array<int, 5> appearances{};
    std::set<std::pair<int, int>> pairs;
    for (const auto& d : ep.dyads) {
      CHECK(d.agent_i < d.agent_j);
      pairs.insert({d.agent_i, d.agent_j});
      ++appearances[static_cast<std::size_t>(d.agent_i)];
      ++appearances[static_cast<std::size_t>(d.agent_j)];
      CHECK(d.record.rounds.size() == 10u);
      CHECK(d.record.episode_index == ep.episode_index);
    }
    CHECK(pairs.size() == 10u);
    for (int a : appearances) CHECK(a == 4);
    REQUIRE(ep.contexts.size() == 5u);
    for (int agent = 0; agent < 5; ++agent) {
      const auto& block = ep.contexts[static_cast<std::size_t>(agent)];
      CHECK(block.episode_index == ep.episode_index);
      CHECK(block.histories.size() == 4u);
      // The block is this agent's own view: their actions first.
      std::multiset<std::vector<ActionPair>> expected, got(block.histories.begin(),
                                                           block.histories.end());
      for (const auto& d : ep.dyads) {
        if (d.agent_i != agent && d.agent_j != agent) continue;
        const Side own = d.agent_i == agent ? Side::A : Side::B;
        std::vector<ActionPair> h;
        for (const auto& r : d.record.rounds) h.emplace_back(r.action(own), r.action(other(own)));
        expected.insert(h);
      }
      CHECK(got == expected);
    }
  }
  CHECK(log.prior_context(2, 1).empty());
  CHECK(log.prior_context(2, 4).size() == 3u);
  CHECK(run_society(scripted(ScriptedStrategy::random_p(0.7)), cfg).episodes == log.episodes);
  cfg.concurrency = 3;
  CHECK(run_society(scripted(ScriptedStrategy::random_p(0.7)), cfg).episodes == log.episodes);
}

TEST_CASE("society validation") {
  SocietyConfig cfg;
  cfg.agents = 1;
  CHECK_THROWS(validate(cfg));
  cfg = {};
  cfg.rc_fraction = 1.5;
  CHECK_THROWS(validate(cfg));
  cfg = {};
  CHECK_THROWS(run_society(agent_factory({}), std::vector<AgentSpec>(3), cfg));
}

TEST_CASE("remote society prompts: anonymized prior blocks, N-1 lists per episode") {
  stub::Server server(stub::always(R"({"reasoning":"x","choice":"C"})"));
  auto ctx = stub_context(3);
  SocietyConfig cfg;
  cfg.episodes = 3;
  cfg.horizon = 2;
  cfg.seed = 4;
  cfg.rc_fraction = 0.4;
  cfg.concurrency = 3;
  AgentSpec spec{RemoteModel{{server.base_url(), "m", ""}, ModelClass::InstructionTuned}};
  run_society(spec, cfg, ctx);
  const auto reqs = server.requests();
  CHECK(reqs.size() == 3u * 10u * 2u * 2u);
  static const std::regex block(R"(\(Episode (\d+)\): (\[.*\]))");
  int rc_prompts = 0;
  for (const auto& r : reqs) {
    const auto sys = r.body["messages"][0]["content"].get<std::string>();
    const auto user = r.body["messages"][1]["content"].get<std::string>();
    rc_prompts += sys.find("Resilient Cooperator") != std::string::npos;
    CHECK(user.find("This game will last exactly 2 rounds.") != std::string::npos);
    for (const char* id : {"Agent 0", "agent_0", "Agent 1", "agent 1", "0-1", "Player 2"}) {
      CHECK(user.find(id) == std::string::npos);
    }
    for (auto it = std::sregex_iterator(user.begin(), user.end(), block);
         it != std::sregex_iterator(); ++it) {
      const std::string lists = (*it)[2];
      // Inner lists open with "[(" once each.
      int inner = 0;
      for (std::size_t p = lists.find("[("); p != std::string::npos; p = lists.find("[(", p + 1))
        ++inner;
      CHECK(inner == 4);
    }
  }
  // 2 RC agents x 4 dyads x 2 rounds x 3 episodes.
  CHECK(rc_prompts == 2 * 4 * 2 * 3);
  int with_two_blocks = 0;
  for (const auto& r : reqs) {
    const auto user = r.body["messages"][1]["content"].get<std::string>();
    with_two_blocks += user.find("(Episode 2):") != std::string::npos;
    CHECK(user.find("(Episode 3):") == std::string::npos);
  }
  CHECK(with_two_blocks == 10 * 2 * 2);
}

TEST_CASE("society JSONL round trip, several logs in one stream") {
  SocietyConfig cfg;
  cfg.episodes = 3;
  std::string stream;
  std::vector<SocietyLog> logs;
  for (double alpha : {0.0, 0.4, 1.0}) {
    cfg.rc_fraction = alpha;
    cfg.seed = static_cast<std::uint64_t>(alpha * 10) + 1;
    logs.push_back(run_society(scripted(ScriptedStrategy::random_p(0.5)), cfg));
    stream += society_to_jsonl(logs.back());
  }
  const auto back = society_from_jsonl(stream);
  REQUIRE(back.size() == 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].episodes == logs[i].episodes);
    CHECK(back[i].personas == logs[i].personas);
    CHECK(back[i].members == logs[i].members);
    CHECK(back[i].config.rc_fraction == logs[i].config.rc_fraction);
    CHECK(back[i].config.seed == logs[i].config.seed);
  }
  CHECK(society_to_jsonl(back[1]) == society_to_jsonl(logs[1]));
}
