#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sode/game.hpp"
#include "sode/gateway.hpp"
#include "sode/protocol.hpp"
#include "sode/rng.hpp"
#include "sode/strategies.hpp"
#include "sode/trials.hpp"

namespace sode {

enum class Protocol { Dyadic, Reputation, Society };

// Everything an agent may look at when choosing one move. Pointers are
// non-owning and only set for the protocol that uses them.
struct DecisionRequest {
  Protocol protocol = Protocol::Dyadic;
  int horizon = 1;
  int round = 1;  // 1-based
  const std::vector<Action>* own_history = nullptr;
  const std::vector<Action>* opp_history = nullptr;
  const ReputationTrial* trial = nullptr;
  const std::vector<PriorEpisode>* prior_episodes = nullptr;
};

struct Decision {
  Action action = Action::C;
  std::optional<DecisionTrace> trace;
  int retries = 0;  // re-queries after unparseable output
};

// The agent could not produce a move. `retries` counts re-queries spent.
class DecisionError : public std::runtime_error {
 public:
  DecisionError(const std::string& what, int retries)
      : std::runtime_error(what), retries_(retries) {}
  int retries() const { return retries_; }

 private:
  int retries_;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual Decision decide(const DecisionRequest& request, Rng& rng) = 0;
  virtual std::string describe() const = 0;
};

struct RemoteModel {
  ModelEndpoint endpoint;
  ModelClass model_class = ModelClass::InstructionTuned;

  friend bool operator==(const RemoteModel&, const RemoteModel&) = default;
};

struct AgentSpec {
  std::variant<ScriptedStrategy, RemoteModel> kind = ScriptedStrategy::all_c();
  Persona persona = Persona::RationalPlayer;
  Framing framing = Framing::Baseline;

  bool is_scripted() const { return std::holds_alternative<ScriptedStrategy>(kind); }
  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

std::string describe(const AgentSpec& spec);

// Shared resources for remote agents. Scripted agents ignore all of it.
struct AgentContext {
  std::shared_ptr<Gateway> gateway;
  SamplingConfig sampling;
  PromptOptions prompt;
  int parse_retries = 2;
};

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, const AgentContext& context = {});

using AgentFactory = std::function<std::unique_ptr<Agent>(const AgentSpec&)>;

inline AgentFactory agent_factory(AgentContext context) {
  return [context = std::move(context)](const AgentSpec& spec) { return make_agent(spec, context); };
}

}  // namespace sode
