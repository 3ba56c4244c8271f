#include "sode/experiments.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "sode/parallel.hpp"

namespace sode {

namespace {
constexpr std::uint64_t kTrialStream = 0x747269616cULL;  // "trial"
constexpr std::uint64_t kPersonaStream = 0x70657273ULL;  // "pers"
constexpr std::uint64_t kContextStream = 0x637478ULL;    // "ctx"
constexpr std::uint64_t kDyadStream = 0x64796164ULL;     // "dyad"
}  // namespace

// ---- direct reciprocity ----------------------------------------------------

void validate(const DirectReciprocityConfig& c) {
  if (c.conditions.empty()) throw std::invalid_argument("direct: no conditions");
  if (c.horizon < 1) throw std::invalid_argument("direct: horizon must be >= 1");
  if (c.episodes_per_condition < 1) throw std::invalid_argument("direct: episodes must be >= 1");
  if (c.concurrency < 1) throw std::invalid_argument("direct: concurrency must be >= 1");
}

std::uint64_t direct_episode_seed(std::uint64_t seed, ZDCondition c, int episode_index) {
  return derive_seed(seed, {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(episode_index)});
}

std::vector<EpisodeRecord> run_direct_reciprocity(const AgentFactory& make,
                                                  const AgentSpec& agent,
                                                  const DirectReciprocityConfig& config) {
  validate(config);
  const std::size_t m = static_cast<std::size_t>(config.episodes_per_condition);
  std::vector<EpisodeRecord> out(config.conditions.size() * m);
  EpisodeOptions options;
  options.horizon = config.horizon;
  options.matrix = config.matrix;
  parallel_for(out.size(), config.concurrency, [&](std::size_t k) {
    const ZDCondition cond = config.conditions[k / m];
    const int g = static_cast<int>(k % m) + 1;
    // Fresh instances every episode: nothing carries over.
    auto player = make(agent);
    auto zd = make(AgentSpec{ScriptedStrategy::memory(config.zd[cond])});
    out[k] = play_episode(*player, *zd, options, direct_episode_seed(config.seed, cond, g), g,
                          std::string(to_string(cond)));
  });
  return out;
}

std::vector<EpisodeRecord> run_direct_reciprocity(const AgentSpec& agent,
                                                  const DirectReciprocityConfig& config,
                                                  const AgentContext& context) {
  return run_direct_reciprocity(agent_factory(context), agent, config);
}

// ---- indirect reciprocity --------------------------------------------------

void to_json(nlohmann::json& j, const ReputationOutcome& o) {
  j = {{"trial", o.trial}, {"valid", o.valid}, {"retries", o.retries}};
  if (o.valid) j["choice"] = std::string(1, to_char(o.choice));
  if (o.trace) j["trace"] = *o.trace;
  if (!o.valid) j["failure"] = o.failure;
}

void from_json(const nlohmann::json& j, ReputationOutcome& o) {
  o.trial = j.at("trial").get<ReputationTrial>();
  o.valid = j.at("valid").get<bool>();
  o.retries = j.value("retries", 0);
  o.choice = o.valid ? action_from_string(j.at("choice").get<std::string>()) : Action::C;
  o.trace.reset();
  if (j.contains("trace")) o.trace = j["trace"].get<DecisionTrace>();
  o.failure = j.value("failure", std::string{});
}

std::vector<ReputationOutcome> run_reputation(const AgentFactory& make, const AgentSpec& agent,
                                              const TrialSet& trials, int concurrency) {
  if (concurrency < 1) throw std::invalid_argument("reputation: concurrency must be >= 1");
  std::vector<ReputationOutcome> out(trials.trials.size());
  parallel_for(out.size(), concurrency, [&](std::size_t k) {
    const auto& trial = trials.trials[k];
    ReputationOutcome& o = out[k];
    o.trial = trial;
    auto player = make(agent);
    Rng rng(derive_seed(trials.seed, {kTrialStream, static_cast<std::uint64_t>(trial.trial_id)}));
    const std::vector<Action> empty;
    DecisionRequest req;
    req.protocol = Protocol::Reputation;
    req.horizon = 1;
    req.round = 1;
    req.own_history = &empty;
    req.opp_history = &empty;
    req.trial = &trial;
    try {
      Decision d = player->decide(req, rng);
      o.choice = d.action;
      o.trace = std::move(d.trace);
      o.retries = d.retries;
    } catch (const DecisionError& e) {
      o.valid = false;
      o.retries = e.retries();
      o.failure = fmt::format("trial {}: {}", trial.trial_id, e.what());
    }
  });
  return out;
}

std::vector<ReputationOutcome> run_reputation(const AgentSpec& agent, const TrialSet& trials,
                                              const AgentContext& context, int concurrency) {
  return run_reputation(agent_factory(context), agent, trials, concurrency);
}

// ---- group dynamics --------------------------------------------------------

void validate(const SocietyConfig& c) {
  if (c.agents < 2) throw std::invalid_argument("society: need at least 2 agents");
  if (c.horizon < 1) throw std::invalid_argument("society: horizon must be >= 1");
  if (c.episodes < 1) throw std::invalid_argument("society: episodes must be >= 1");
  if (!(c.rc_fraction >= 0.0 && c.rc_fraction <= 1.0)) {
    throw std::invalid_argument("society: rc_fraction must lie in [0, 1]");
  }
  if (c.concurrency < 1) throw std::invalid_argument("society: concurrency must be >= 1");
}

int rc_count(const SocietyConfig& c) {
  return static_cast<int>(std::lround(c.rc_fraction * c.agents));
}

std::vector<Persona> assign_personas(const SocietyConfig& c) {
  std::vector<int> order(static_cast<std::size_t>(c.agents));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(c.seed, {kPersonaStream}));
  rng.shuffle(std::span<int>(order));
  std::vector<Persona> personas(order.size(), Persona::RationalPlayer);
  for (int k = 0; k < rc_count(c); ++k) {
    personas[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] =
        Persona::ResilientCooperator;
  }
  return personas;
}

std::vector<PriorEpisode> SocietyLog::prior_context(int agent, int episode_index) const {
  std::vector<PriorEpisode> out;
  for (const auto& ep : episodes) {
    if (ep.episode_index >= episode_index) break;
    out.push_back(ep.contexts.at(static_cast<std::size_t>(agent)));
  }
  return out;
}

SocietyLog run_society(const AgentFactory& make, std::vector<AgentSpec> members,
                       const SocietyConfig& config) {
  validate(config);
  if (static_cast<int>(members.size()) != config.agents) {
    throw std::invalid_argument(fmt::format("society: {} members for N = {}", members.size(),
                                            config.agents));
  }
  SocietyLog log;
  log.config = config;
  log.personas = assign_personas(config);
  for (std::size_t i = 0; i < members.size(); ++i) {
    members[i].persona = log.personas[i];
    log.members.push_back(describe(members[i]));
  }

  const int n = config.agents;
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }

  EpisodeOptions base;
  base.horizon = config.horizon;
  base.matrix = config.matrix;
  base.protocol = Protocol::Society;

  // Prompt context per agent, grown after each episode completes.
  std::vector<std::vector<PriorEpisode>> seen(static_cast<std::size_t>(n));

  for (int g = 1; g <= config.episodes; ++g) {
    SocietyEpisode ep;
    ep.episode_index = g;
    ep.dyads.resize(pairs.size());
    parallel_for(pairs.size(), config.concurrency, [&](std::size_t k) {
      const auto [i, j] = pairs[k];
      auto a = make(members[static_cast<std::size_t>(i)]);
      auto b = make(members[static_cast<std::size_t>(j)]);
      EpisodeOptions options = base;
      options.context_a = &seen[static_cast<std::size_t>(i)];
      options.context_b = &seen[static_cast<std::size_t>(j)];
      const auto seed = derive_seed(config.seed, {kDyadStream, static_cast<std::uint64_t>(g),
                                                  static_cast<std::uint64_t>(i),
                                                  static_cast<std::uint64_t>(j)});
      ep.dyads[k] = {i, j, play_episode(*a, *b, options, seed, g, fmt::format("{}-{}", i, j))};
    });

    // Episode g is complete: anonymize it for each participant.
    ep.contexts.resize(static_cast<std::size_t>(n));
    for (int agent = 0; agent < n; ++agent) {
      PriorEpisode& block = ep.contexts[static_cast<std::size_t>(agent)];
      block.episode_index = g;
      for (const auto& d : ep.dyads) {
        if (d.agent_i != agent && d.agent_j != agent) continue;
        const Side own = d.agent_i == agent ? Side::A : Side::B;
        std::vector<ActionPair> h;
        for (const auto& r : d.record.rounds) h.emplace_back(r.action(own), r.action(other(own)));
        block.histories.push_back(std::move(h));
      }
      Rng rng(derive_seed(config.seed, {kContextStream, static_cast<std::uint64_t>(agent),
                                        static_cast<std::uint64_t>(g)}));
      rng.shuffle(std::span<std::vector<ActionPair>>(block.histories));
      seen[static_cast<std::size_t>(agent)].push_back(block);
    }
    log.episodes.push_back(std::move(ep));
  }
  return log;
}

SocietyLog run_society(const AgentFactory& make, const AgentSpec& model,
                       const SocietyConfig& config) {
  validate(config);
  return run_society(make, std::vector<AgentSpec>(static_cast<std::size_t>(config.agents), model),
                     config);
}

SocietyLog run_society(const AgentSpec& model, const SocietyConfig& config,
                       const AgentContext& context) {
  return run_society(agent_factory(context), model, config);
}

}  // namespace sode

namespace sode {

void to_json(nlohmann::json& j, const PriorEpisode& p) {
  auto lists = nlohmann::json::array();
  for (const auto& h : p.histories) {
    auto pairs = nlohmann::json::array();
    for (const auto& [x, y] : h) pairs.push_back(std::string{to_char(x), to_char(y)});
    lists.push_back(std::move(pairs));
  }
  j = {{"episode_index", p.episode_index}, {"histories", std::move(lists)}};
}

void from_json(const nlohmann::json& j, PriorEpisode& p) {
  p.episode_index = j.at("episode_index").get<int>();
  p.histories.clear();
  for (const auto& list : j.at("histories")) {
    std::vector<ActionPair> h;
    for (const auto& pair : list) {
      const auto s = pair.get<std::string>();
      if (s.size() != 2) throw std::invalid_argument("history pair must be two letters");
      h.emplace_back(action_from_char(s[0]), action_from_char(s[1]));
    }
    p.histories.push_back(std::move(h));
  }
}

std::string society_to_jsonl(const SocietyLog& log) {
  std::string out;
  const auto& c = log.config;
  nlohmann::json personas = nlohmann::json::array();
  for (auto p : log.personas) personas.push_back(std::string(to_string(p)));
  const nlohmann::json head = {
      {"type", "members"},
      {"rc_fraction", c.rc_fraction},
      {"agents", c.agents},
      {"horizon", c.horizon},
      {"episodes", c.episodes},
      {"seed", c.seed},
      {"cross_episode", c.cross_episode == CrossEpisodeFormat::FullHistories ? "full" : "counts"},
      {"personas", personas},
      {"members", log.members}};
  out += head.dump() + '\n';
  for (const auto& ep : log.episodes) {
    for (const auto& d : ep.dyads) {
      const nlohmann::json line = {{"type", "dyad"},
                                   {"rc_fraction", c.rc_fraction},
                                   {"episode", ep.episode_index},
                                   {"agent_i", d.agent_i},
                                   {"agent_j", d.agent_j},
                                   {"record", d.record}};
      out += line.dump() + '\n';
    }
    for (std::size_t a = 0; a < ep.contexts.size(); ++a) {
      const nlohmann::json line = {{"type", "context"},
                                   {"rc_fraction", c.rc_fraction},
                                   {"episode", ep.episode_index},
                                   {"agent", a},
                                   {"block", ep.contexts[a]}};
      out += line.dump() + '\n';
    }
  }
  return out;
}

std::vector<SocietyLog> society_from_jsonl(std::string_view text) {
  std::vector<SocietyLog> logs;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const auto j = nlohmann::json::parse(line);
    const auto type = j.at("type").get<std::string>();
    if (type == "members") {
      SocietyLog log;
      auto& c = log.config;
      c.rc_fraction = j.at("rc_fraction").get<double>();
      c.agents = j.at("agents").get<int>();
      c.horizon = j.at("horizon").get<int>();
      c.episodes = j.at("episodes").get<int>();
      c.seed = j.at("seed").get<std::uint64_t>();
      c.cross_episode = j.at("cross_episode").get<std::string>() == "counts"
                            ? CrossEpisodeFormat::Counts
                            : CrossEpisodeFormat::FullHistories;
      for (const auto& p : j.at("personas")) {
        log.personas.push_back(persona_from_string(p.get<std::string>()));
      }
      log.members = j.at("members").get<std::vector<std::string>>();
      logs.push_back(std::move(log));
      continue;
    }
    if (logs.empty()) {
      throw std::invalid_argument(fmt::format("society line {}: data before members line", lineno));
    }
    auto& log = logs.back();
    const int g = j.at("episode").get<int>();
    if (log.episodes.empty() || log.episodes.back().episode_index != g) {
      SocietyEpisode ep;
      ep.episode_index = g;
      ep.contexts.resize(static_cast<std::size_t>(log.config.agents));
      log.episodes.push_back(std::move(ep));
    }
    auto& ep = log.episodes.back();
    if (type == "dyad") {
      ep.dyads.push_back({j.at("agent_i").get<int>(), j.at("agent_j").get<int>(),
                          j.at("record").get<EpisodeRecord>()});
    } else if (type == "context") {
      ep.contexts.at(j.at("agent").get<std::size_t>()) = j.at("block").get<PriorEpisode>();
    } else {
      throw std::invalid_argument(fmt::format("society line {}: unknown type \"{}\"", lineno, type));
    }
  }
  return logs;
}

}  // namespace sode
