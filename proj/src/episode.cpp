#include "sode/episode.hpp"

#include <fmt/format.h>

namespace sode {

EpisodeRecord run_episode(Agent& a, Agent& b, const EpisodeOptions& options, std::uint64_t seed,
                          int episode_index, std::string condition_tag) {
  if (options.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  EpisodeRecord rec;
  rec.episode_index = episode_index;
  rec.horizon = options.horizon;
  rec.condition_tag = std::move(condition_tag);
  rec.seed = seed;

  Rng rng_a(derive_seed(seed, {0}));
  Rng rng_b(derive_seed(seed, {1}));
  std::vector<Action> hist_a, hist_b;

  const auto ask = [&](Side side, int t) {
    const bool is_a = side == Side::A;
    DecisionRequest req;
    req.protocol = options.protocol;
    req.horizon = options.horizon;
    req.round = t;
    req.own_history = is_a ? &hist_a : &hist_b;
    req.opp_history = is_a ? &hist_b : &hist_a;
    req.prior_episodes = is_a ? options.context_a : options.context_b;
    try {
      Decision d = (is_a ? a : b).decide(req, is_a ? rng_a : rng_b);
      rec.retries += d.retries;
      return d;
    } catch (const DecisionError& e) {
      rec.retries += e.retries();
      rec.valid = false;
      rec.failure = fmt::format("side {} round {}: {}", to_string(side), t, e.what());
      throw AgentDecisionFailure(rec.failure, side, t, rec);
    }
  };

  for (int t = 1; t <= options.horizon; ++t) {
    Decision da, db;
    if (options.b_first) {
      db = ask(Side::B, t);
      da = ask(Side::A, t);
    } else {
      da = ask(Side::A, t);
      db = ask(Side::B, t);
    }
    RoundRecord r;
    r.round_index = t;
    r.action_a = da.action;
    r.action_b = db.action;
    r.payoff_a = payoff(options.matrix, da.action, db.action);
    r.payoff_b = payoff(options.matrix, db.action, da.action);
    r.trace_a = std::move(da.trace);
    r.trace_b = std::move(db.trace);
    rec.rounds.push_back(std::move(r));
    hist_a.push_back(da.action);
    hist_b.push_back(db.action);
  }
  return rec;
}

EpisodeRecord play_episode(Agent& a, Agent& b, const EpisodeOptions& options, std::uint64_t seed,
                           int episode_index, std::string condition_tag) {
  try {
    return run_episode(a, b, options, seed, episode_index, std::move(condition_tag));
  } catch (const AgentDecisionFailure& f) {
    return f.partial();
  }
}

}  // namespace sode
