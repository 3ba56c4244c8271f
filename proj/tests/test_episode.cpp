#include <doctest.h>

#include <regex>

#include "stub_server.hpp"
#include "sode/agent.hpp"
#include "sode/episode.hpp"

using namespace sode;
using namespace std::chrono_literals;

namespace {

std::string user_text(const stub::Request& r) {
  return r.body["messages"][1]["content"].get<std::string>();
}

// Plays tit-for-tat by reading the co-player history out of the prompt.
stub::Reply tft_model(const stub::Request& r, int) {
  static const std::regex opp(R"(Co-player's actions: \[([CD ]*)\])");
  std::smatch m;
  const auto text = user_text(r);
  char move = 'C';
  if (std::regex_search(text, m, opp) && m[1].length() > 0) move = m[1].str().back();
  return {200, std::string("{\"reasoning\": \"copy\", \"choice\": \"") + move + "\"}", {}};
}

AgentContext context_for(int limit = 1, int parse_retries = 2) {
  GatewayOptions o;
  o.initial_backoff = 1ms;
  o.max_backoff = 2ms;
  AgentContext ctx;
  ctx.gateway = Gateway::with_concurrency_budget(limit, o);
  ctx.parse_retries = parse_retries;
  return ctx;
}

AgentSpec remote(const stub::Server& s, ModelClass m = ModelClass::InstructionTuned) {
  return AgentSpec{RemoteModel{{s.base_url(), "stub-model", ""}, m}};
}

std::string moves(const std::vector<Action>& v) {
  std::string s;
  for (auto a : v) s += to_char(a);
  return s;
}

}  // namespace

TEST_CASE("remote agent plays through the gateway and sees only past rounds") {
  stub::Server server(tft_model);
  auto ctx = context_for();
  auto agent = make_agent(remote(server), ctx);
  auto alld = make_agent(AgentSpec{ScriptedStrategy::memory({1, 0, 0, 0, 0})});
  EpisodeOptions o;
  o.horizon = 5;
  const auto e = run_episode(*agent, *alld, o, 9);
  CHECK(e.valid);
  CHECK(moves(e.actions(Side::B)) == "CDDDD");
  CHECK(moves(e.actions(Side::A)) == "CCDDD");
  const auto reqs = server.requests();
  REQUIRE(reqs.size() == 5u);
  for (std::size_t t = 0; t < reqs.size(); ++t) {
    const auto text = user_text(reqs[t]);
    CHECK(text.find("This game will last exactly 5 rounds.") != std::string::npos);
    std::string own = "[", opp = "[";
    for (std::size_t k = 0; k < t; ++k) {
      if (k) own += ' ', opp += ' ';
      own += to_char(e.rounds[k].action_a);
      opp += to_char(e.rounds[k].action_b);
    }
    CHECK(text.find("Your actions: " + own + "]") != std::string::npos);
    CHECK(text.find("Co-player's actions: " + opp + "]") != std::string::npos);
  }
  for (const auto& r : e.rounds) {
    REQUIRE(r.trace_a.has_value());
    CHECK(r.trace_a->reasoning == "copy");
    CHECK(r.trace_a->attempts == 1);
    CHECK_FALSE(r.trace_b.has_value());
  }
}

TEST_CASE("unparseable output is re-queried, then counted as a retry") {
  stub::Server server([](const stub::Request&, int i) {
    return i % 3 == 0 ? stub::Reply{200, "I choose cooperate", {}}
                      : stub::Reply{200, R"({"reasoning":"ok","choice":"C"})", {}};
  });
  auto ctx = context_for();
  auto agent = make_agent(remote(server), ctx);
  auto allc = make_agent(AgentSpec{ScriptedStrategy::all_c()});
  EpisodeOptions o;
  o.horizon = 2;
  const auto e = run_episode(*agent, *allc, o, 1);
  CHECK(e.valid);
  CHECK(e.retries == 1);
  CHECK(e.rounds[0].trace_a->attempts == 2);
  CHECK(e.rounds[1].trace_a->attempts == 1);
  CHECK(server.requests().size() == 3u);
  // Each decision's request id ties back to its gateway attempts.
  const auto log = ctx.gateway->transcripts().entries();
  CHECK(log[0].request_id != log[1].request_id);
  CHECK(log[1].request_id == e.rounds[0].trace_a->request_id);
  CHECK(log[2].request_id == e.rounds[1].trace_a->request_id);
}

TEST_CASE("exhausted parse retries abort the episode as invalid") {
  stub::Server server([](const stub::Request&, int i) {
    return i == 0 ? stub::Reply{200, R"({"reasoning":"ok","choice":"D"})", {}}
                  : stub::Reply{200, "no json at all", {}};
  });
  auto ctx = context_for(1, 2);
  auto agent = make_agent(remote(server), ctx);
  auto allc = make_agent(AgentSpec{ScriptedStrategy::all_c()});
  EpisodeOptions o;
  o.horizon = 4;
  try {
    run_episode(*agent, *allc, o, 1);
    FAIL("expected AgentDecisionFailure");
  } catch (const AgentDecisionFailure& f) {
    CHECK(f.side() == Side::A);
    CHECK(f.round() == 2);
    CHECK_FALSE(f.partial().valid);
    CHECK(f.partial().rounds.size() == 1u);
    CHECK(f.partial().retries == 2);
  }
  CHECK(server.requests().size() == 4u);  // 1 good + 3 bad attempts

  auto agent2 = make_agent(remote(server), ctx);
  const auto partial = play_episode(*allc, *agent2, o, 2);
  CHECK_FALSE(partial.valid);
  CHECK(partial.rounds.empty());
  CHECK(partial.failure.rfind("side b round 1:", 0) == 0);
}

TEST_CASE("gateway errors fail the decision") {
  stub::Server server([](const stub::Request&, int) { return stub::Reply{500, "", "x"}; });
  auto ctx = context_for();
  auto agent = make_agent(remote(server), ctx);
  auto allc = make_agent(AgentSpec{ScriptedStrategy::all_c()});
  EpisodeOptions o;
  o.horizon = 3;
  const auto e = play_episode(*agent, *allc, o, 1);
  CHECK_FALSE(e.valid);
  CHECK(e.failure.find("gateway") != std::string::npos);
  CHECK(server.requests().size() == 1u);
}

TEST_CASE("reasoning-class agent records its think trace") {
  stub::Server server(stub::always("THINKING:\n<think>they copied me</think>\n"
                                   "{\"reasoning\": \"stay nice\", \"choice\": \"C\"}"));
  auto ctx = context_for();
  auto agent = make_agent(remote(server, ModelClass::Reasoning), ctx);
  auto allc = make_agent(AgentSpec{ScriptedStrategy::all_c()});
  EpisodeOptions o;
  o.horizon = 2;
  const auto e = run_episode(*agent, *allc, o, 1);
  REQUIRE(e.rounds[0].trace_a->think_trace.has_value());
  CHECK(*e.rounds[0].trace_a->think_trace == "they copied me");
  CHECK(user_text(server.requests()[0]).find("<think>") != std::string::npos);
}

TEST_CASE("persona and framing reach the remote prompt") {
  stub::Server server(stub::always(R"({"reasoning":"","choice":"C"})"));
  auto ctx = context_for();
  auto spec = remote(server);
  spec.persona = Persona::ResilientCooperator;
  spec.framing = Framing::LongHorizon;
  auto agent = make_agent(spec, ctx);
  auto allc = make_agent(AgentSpec{ScriptedStrategy::all_c()});
  EpisodeOptions o;
  o.horizon = 1;
  run_episode(*agent, *allc, o, 1);
  const auto body = server.requests().at(0).body;
  CHECK(body["messages"][0]["content"].get<std::string>().find("Resilient Cooperator") !=
        std::string::npos);
  CHECK(user_text(server.requests()[0]).rfind("Keep in mind", 0) == 0);
}

TEST_CASE("remote agents need a gateway and a valid endpoint") {
  AgentSpec spec{RemoteModel{{"http://127.0.0.1:1/v1", "m", ""}, ModelClass::InstructionTuned}};
  CHECK_THROWS(make_agent(spec, AgentContext{}));
  AgentSpec bad{RemoteModel{{"not a url", "m", ""}, ModelClass::InstructionTuned}};
  CHECK_THROWS(make_agent(bad, context_for()));
}

TEST_CASE("probe strategies refuse repeated games") {
  auto probe = make_agent(AgentSpec{ScriptedStrategy{ScriptedKind::ScoreThreshold}});
  auto allc = make_agent(AgentSpec{ScriptedStrategy::all_c()});
  EpisodeOptions o;
  o.horizon = 3;
  CHECK_THROWS_AS(run_episode(*probe, *allc, o, 1), AgentDecisionFailure);
}

TEST_CASE("horizon must be positive") {
  auto a = make_agent(AgentSpec{});
  auto b = make_agent(AgentSpec{});
  EpisodeOptions o;
  o.horizon = 0;
  CHECK_THROWS_AS(run_episode(*a, *b, o, 1), std::invalid_argument);
}
