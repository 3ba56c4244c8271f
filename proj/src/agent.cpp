#include "sode/agent.hpp"

#include <fmt/format.h>

namespace sode {

std::string describe(const AgentSpec& spec) {
  if (const auto* s = std::get_if<ScriptedStrategy>(&spec.kind)) return describe(*s);
  const auto& r = std::get<RemoteModel>(spec.kind);
  return fmt::format("{} ({}, {}, {})", r.endpoint.model_id, to_string(r.model_class),
                     to_string(spec.persona), to_string(spec.framing));
}

namespace {

Decision decided(Action a) {
  Decision d;
  d.action = a;
  return d;
}

class ScriptedAgent final : public Agent {
 public:
  explicit ScriptedAgent(ScriptedStrategy s) : s_(s), m1_(as_memory_one(s)) {
    if (m1_) validate(*m1_);
  }

  Decision decide(const DecisionRequest& req, Rng& rng) override {
    if (req.protocol == Protocol::Reputation) return decided(reputation_move(req, rng));
    const auto& own = *req.own_history;
    const auto& opp = *req.opp_history;
    if (s_.kind == ScriptedKind::Grim) {
      for (auto a : opp) {
        if (a == Action::D) return decided(Action::D);
      }
      return decided(Action::C);
    }
    if (!m1_) {
      throw DecisionError(fmt::format("{} only plays reputation trials", sode::describe(s_)), 0);
    }
    std::optional<JointState> prev;
    if (!own.empty()) prev = make_joint_state(own.back(), opp.back());
    return decided(next_action(*m1_, prev, rng));
  }

  std::string describe() const override { return sode::describe(s_); }

 private:
  Action reputation_move(const DecisionRequest& req, Rng& rng) const {
    const auto& t = *req.trial;
    switch (s_.kind) {
      case ScriptedKind::ScoreThreshold:
        return !t.is_control && *t.score >= 0 ? Action::C : Action::D;
      case ScriptedKind::ScoreAntiThreshold:
        return !t.is_control && *t.score < 0 ? Action::C : Action::D;
      case ScriptedKind::PublicCooperator:
        return t.visibility == Visibility::Public ? Action::C : Action::D;
      case ScriptedKind::Grim:
        return Action::C;
      default:
        // A single round: only the opening move matters.
        return next_action(*m1_, std::nullopt, rng);
    }
  }

  ScriptedStrategy s_;
  std::optional<MemoryOneStrategy> m1_;
};

class RemoteAgent final : public Agent {
 public:
  RemoteAgent(RemoteModel model, Persona persona, Framing framing, AgentContext ctx)
      : model_(std::move(model)), persona_(persona), framing_(framing), ctx_(std::move(ctx)) {
    if (!ctx_.gateway) throw std::invalid_argument("remote agent needs a gateway");
    if (ctx_.parse_retries < 0) throw std::invalid_argument("parse_retries must be >= 0");
  }

  Decision decide(const DecisionRequest& req, Rng&) override {
    const PromptBundle bundle = build(req);
    std::string last_error;
    for (int attempt = 0; attempt <= ctx_.parse_retries; ++attempt) {
      ChatResult reply;
      try {
        reply = ctx_.gateway->complete(model_.endpoint, bundle, ctx_.sampling);
      } catch (const GatewayError& e) {
        throw DecisionError(fmt::format("gateway: {}", e.what()), attempt);
      }
      try {
        auto out = parse_decision(reply.content, model_.model_class);
        DecisionTrace trace{out.reasoning, out.think_trace, reply.request_id, attempt + 1};
        return {out.choice, std::move(trace), attempt};
      } catch (const MalformedOutput& e) {
        last_error = fmt::format("malformed output: {}", e.what());
      } catch (const FormatViolation& e) {
        last_error = fmt::format("format violation: {}", e.what());
      }
    }
    throw DecisionError(
        fmt::format("{} after {} attempts", last_error, ctx_.parse_retries + 1),
        ctx_.parse_retries);
  }

  std::string describe() const override {
    return fmt::format("{} ({})", model_.endpoint.model_id, to_string(model_.model_class));
  }

 private:
  PromptBundle build(const DecisionRequest& req) const {
    switch (req.protocol) {
      case Protocol::Reputation:
        return build_reputation_prompt(*req.trial, model_.model_class);
      case Protocol::Society: {
        std::vector<ActionPair> dyad;
        for (std::size_t i = 0; i < req.own_history->size(); ++i) {
          dyad.emplace_back((*req.own_history)[i], (*req.opp_history)[i]);
        }
        static const std::vector<PriorEpisode> kNone;
        return build_society_prompt(req.horizon, dyad,
                                    req.prior_episodes ? *req.prior_episodes : kNone, persona_,
                                    framing_, model_.model_class, ctx_.prompt);
      }
      case Protocol::Dyadic:
        break;
    }
    return build_dyadic_prompt(req.horizon, *req.own_history, *req.opp_history, persona_,
                               framing_, model_.model_class, ctx_.prompt);
  }

  RemoteModel model_;
  Persona persona_;
  Framing framing_;
  AgentContext ctx_;
};

}  // namespace

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, const AgentContext& context) {
  if (const auto* s = std::get_if<ScriptedStrategy>(&spec.kind)) {
    return std::make_unique<ScriptedAgent>(*s);
  }
  const auto& r = std::get<RemoteModel>(spec.kind);
  validate(r.endpoint);
  return std::make_unique<RemoteAgent>(r, spec.persona, spec.framing, context);
}

}  // namespace sode
