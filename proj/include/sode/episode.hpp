#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sode/agent.hpp"
#include "sode/game.hpp"

namespace sode {

struct EpisodeOptions {
  int horizon = 30;
  PayoffMatrix matrix;
  Protocol protocol = Protocol::Dyadic;
  // Prior-episode context shown to each side (society protocol only).
  const std::vector<PriorEpisode>* context_a = nullptr;
  const std::vector<PriorEpisode>* context_b = nullptr;
  // Ask B before A each round. Moves are simultaneous, so this must not
  // change the outcome.
  bool b_first = false;
};

// Raised when either side fails to decide. `partial` holds the rounds
// played so far, already marked invalid.
class AgentDecisionFailure : public std::runtime_error {
 public:
  AgentDecisionFailure(const std::string& what, Side side, int round, EpisodeRecord partial)
      : std::runtime_error(what), side_(side), round_(round), partial_(std::move(partial)) {}
  Side side() const { return side_; }
  int round() const { return round_; }
  const EpisodeRecord& partial() const { return partial_; }

 private:
  Side side_;
  int round_;
  EpisodeRecord partial_;
};

// Plays one episode from an empty history. Each side draws from its own
// stream derived from (seed, side).
EpisodeRecord run_episode(Agent& a, Agent& b, const EpisodeOptions& options, std::uint64_t seed,
                          int episode_index = 1, std::string condition_tag = {});

// Same, but failures come back as an invalid record instead of an exception.
EpisodeRecord play_episode(Agent& a, Agent& b, const EpisodeOptions& options, std::uint64_t seed,
                           int episode_index = 1, std::string condition_tag = {});

}  // namespace sode
