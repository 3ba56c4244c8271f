#include "sode/protocol.hpp"

#include <fmt/format.h>

namespace sode {

std::string_view to_string(Persona p) {
  return p == Persona::RationalPlayer ? "RP" : "RC";
}
std::string_view to_string(Framing f) {
  return f == Framing::Baseline ? "baseline" : "long_horizon";
}
std::string_view to_string(ModelClass m) {
  return m == ModelClass::InstructionTuned ? "instruction_tuned" : "reasoning";
}

Persona persona_from_string(std::string_view s) {
  if (s == "RP" || s == "rational") return Persona::RationalPlayer;
  if (s == "RC" || s == "resilient") return Persona::ResilientCooperator;
  throw std::invalid_argument(fmt::format("unknown persona \"{}\"", s));
}
Framing framing_from_string(std::string_view s) {
  if (s == "baseline") return Framing::Baseline;
  if (s == "long_horizon") return Framing::LongHorizon;
  throw std::invalid_argument(fmt::format("unknown framing \"{}\"", s));
}
ModelClass model_class_from_string(std::string_view s) {
  if (s == "instruction_tuned") return ModelClass::InstructionTuned;
  if (s == "reasoning") return ModelClass::Reasoning;
  throw std::invalid_argument(fmt::format("unknown model class \"{}\"", s));
}

ProtocolCounters& protocol_counters() {
  static ProtocolCounters counters;
  return counters;
}

const std::string& output_format_block(ModelClass m) {
  return prompt_template(m == ModelClass::Reasoning ? "output_reasoning"
                                                    : "output_instruction_tuned");
}

namespace {

PromptBundle compose(std::string body, Persona persona, Framing framing, ModelClass model_class,
                     const PromptOptions& options) {
  PromptBundle b;
  b.system_text = prompt_template("system_base");
  if (persona == Persona::ResilientCooperator) {
    b.system_text = prompt_template("persona_rc") + "\n\n" + b.system_text;
  }
  if (framing == Framing::LongHorizon) {
    const auto& reminder = prompt_template("long_horizon_reminder");
    if (options.reminder_placement == ReminderPlacement::User) {
      body = reminder + "\n\n" + body;
    } else {
      b.system_text = reminder + "\n\n" + b.system_text;
    }
  }
  b.user_text = std::move(body) + "\n\n" + output_format_block(model_class);
  ++protocol_counters().prompts_built;
  return b;
}

std::string dyadic_body(int horizon, const std::vector<Action>& own,
                        const std::vector<Action>& opp) {
  if (own.size() != opp.size()) throw std::invalid_argument("histories differ in length");
  if (static_cast<int>(own.size()) >= horizon) {
    throw std::invalid_argument("history already covers the whole horizon");
  }
  return fill_template(prompt_template("dyadic_user"), {{"H", std::to_string(horizon)},
                                                        {"own_history", render_actions(own)},
                                                        {"opp_history", render_actions(opp)}});
}

}  // namespace

PromptBundle build_dyadic_prompt(int horizon, const std::vector<Action>& own_history,
                                 const std::vector<Action>& opp_history, Persona persona,
                                 Framing framing, ModelClass model_class,
                                 const PromptOptions& options) {
  return compose(dyadic_body(horizon, own_history, opp_history), persona, framing, model_class,
                 options);
}

PromptBundle build_reputation_prompt(const ReputationTrial& trial, ModelClass model_class) {
  check_trial(trial);
  std::string situation;
  if (trial.is_control) {
    situation = prompt_template("reputation_no_cue");
  } else {
    situation = fill_template(prompt_template("reputation_cue"),
                              {{"score", fmt::format("{:+d}", *trial.score)},
                               {"history", render_actions(*trial.history)}});
  }
  const auto& notice = prompt_template(trial.visibility == Visibility::Public ? "notice_public"
                                                                              : "notice_private");
  PromptBundle b;
  b.system_text = prompt_template("system_base");
  b.user_text = fill_template(prompt_template("reputation_user"),
                              {{"situation", situation}, {"notice", notice}}) +
                "\n" + output_format_block(model_class);
  ++protocol_counters().prompts_built;
  return b;
}

std::string render_episode_blocks(const std::vector<PriorEpisode>& prior,
                                  CrossEpisodeFormat format) {
  std::string out;
  for (const auto& ep : prior) {
    if (!out.empty()) out += '\n';
    out += fmt::format("(Episode {}): ", ep.episode_index);
    if (format == CrossEpisodeFormat::FullHistories) {
      out += '[';
      for (std::size_t i = 0; i < ep.histories.size(); ++i) {
        if (i) out += ", ";
        out += '[';
        for (std::size_t k = 0; k < ep.histories[i].size(); ++k) {
          if (k) out += ',';
          const auto& [x, y] = ep.histories[i][k];
          out += fmt::format("({},{})", to_char(x), to_char(y));
        }
        out += ']';
      }
      out += ']';
    } else {
      int own_c = 0, own_d = 0, other_c = 0, other_d = 0;
      for (const auto& h : ep.histories) {
        for (const auto& [x, y] : h) {
          (x == Action::C ? own_c : own_d)++;
          (y == Action::C ? other_c : other_d)++;
        }
      }
      out += fmt::format("your actions C={}, D={}; co-players' actions C={}, D={}", own_c, own_d,
                         other_c, other_d);
    }
  }
  return out;
}

PromptBundle build_society_prompt(int horizon, const std::vector<ActionPair>& dyad_history,
                                  const std::vector<PriorEpisode>& prior_episodes,
                                  Persona persona, Framing framing, ModelClass model_class,
                                  const PromptOptions& options) {
  std::vector<Action> own, opp;
  for (const auto& [x, y] : dyad_history) {
    own.push_back(x);
    opp.push_back(y);
  }
  std::string body = dyadic_body(horizon, own, opp);
  if (!prior_episodes.empty()) {
    const bool full = options.cross_episode == CrossEpisodeFormat::FullHistories;
    body += "\n\n" + fill_template(
                         prompt_template(full ? "society_history_full" : "society_history_counts"),
                         {{"episode_blocks", render_episode_blocks(prior_episodes,
                                                                   options.cross_episode)}});
  }
  return compose(std::move(body), persona, framing, model_class, options);
}

namespace {

struct Span {
  std::size_t begin;
  std::size_t end;  // one past the closing brace
};

// Balanced top-level {...} spans. Quotes only matter inside an object.
std::vector<Span> json_object_spans(std::string_view text, std::size_t from, std::size_t to) {
  std::vector<Span> spans;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  std::size_t start = 0;
  for (std::size_t i = from; i < to; ++i) {
    const char c = text[i];
    if (depth > 0 && in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"' && depth > 0) {
      in_string = true;
    } else if (c == '{') {
      if (depth++ == 0) start = i;
    } else if (c == '}' && depth > 0) {
      if (--depth == 0) spans.push_back({start, i + 1});
    }
  }
  return spans;
}

std::size_t trimmed_end(std::string_view s) {
  std::size_t end = s.size();
  while (end > 0 && (s[end - 1] == ' ' || s[end - 1] == '\n' || s[end - 1] == '\r' ||
                     s[end - 1] == '\t')) {
    --end;
  }
  return end;
}

std::size_t count_of(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

// The answer is the outermost JSON object that ends exactly where the
// trimmed output ends; the scan runs right to left over candidate '{'.
void read_answer(std::string_view raw, std::size_t from, DecisionOutput& out) {
  const std::size_t end = trimmed_end(raw);
  nlohmann::json j;
  bool found = false;
  for (std::size_t pos = end; pos > from;) {
    --pos;
    if (raw[pos] != '{') continue;
    auto candidate = nlohmann::json::parse(raw.substr(pos, end - pos), nullptr,
                                           /*allow_exceptions=*/false);
    if (!candidate.is_discarded() && candidate.is_object()) {
      j = std::move(candidate);
      found = true;
      break;
    }
  }
  if (!found) {
    if (json_object_spans(raw, from, raw.size()).empty()) {
      throw MalformedOutput("no JSON object in output");
    }
    throw MalformedOutput("JSON object is not the last thing in the output");
  }
  if (!j.contains("choice") || !j["choice"].is_string()) {
    throw MalformedOutput("JSON answer lacks a string \"choice\"");
  }
  const auto choice = j["choice"].get<std::string>();
  if (choice != "C" && choice != "D") {
    throw MalformedOutput(fmt::format("choice must be \"C\" or \"D\", got \"{}\"", choice));
  }
  if (!j.contains("reasoning") || !j["reasoning"].is_string()) {
    throw MalformedOutput("JSON answer lacks a string \"reasoning\"");
  }
  out.choice = choice == "C" ? Action::C : Action::D;
  out.reasoning = j["reasoning"].get<std::string>();
}

}  // namespace

DecisionOutput parse_decision(std::string_view raw, ModelClass model_class) {
  ++protocol_counters().outputs_parsed;
  DecisionOutput out;
  out.raw = std::string(raw);
  if (model_class == ModelClass::InstructionTuned) {
    read_answer(raw, 0, out);
    return out;
  }

  constexpr std::string_view kOpen = "<think>";
  constexpr std::string_view kClose = "</think>";
  const auto opens = count_of(raw, kOpen);
  const auto closes = count_of(raw, kClose);
  if (opens == 0 && closes == 0) {
    if (json_object_spans(raw, 0, raw.size()).empty()) {
      throw MalformedOutput("no JSON object in output");
    }
    throw FormatViolation("missing think block");
  }
  if (opens != 1 || closes != 1) {
    throw FormatViolation(fmt::format("expected exactly one think block, found {} open / {} close",
                                      opens, closes));
  }
  const auto open_pos = raw.find(kOpen);
  const auto close_pos = raw.find(kClose);
  if (close_pos < open_pos) throw FormatViolation("think block closes before it opens");
  const auto body = raw.substr(open_pos + kOpen.size(), close_pos - open_pos - kOpen.size());
  if (blank(body)) throw FormatViolation("think block is empty");

  const std::size_t after = close_pos + kClose.size();
  if (json_object_spans(raw, after, raw.size()).empty()) {
    if (!json_object_spans(raw, 0, open_pos).empty()) {
      throw FormatViolation("JSON answer does not follow the think block");
    }
    throw MalformedOutput("no JSON object after the think block");
  }
  read_answer(raw, after, out);
  out.think_trace = std::string(body);
  return out;
}

std::string render_decision(const DecisionOutput& d, ModelClass model_class) {
  nlohmann::ordered_json j;
  j["reasoning"] = d.reasoning;
  j["choice"] = std::string(1, to_char(d.choice));
  if (model_class == ModelClass::Reasoning && d.think_trace) {
    return "THINKING:\n<think>" + *d.think_trace + "</think>\n" + j.dump();
  }
  return j.dump();
}

}  // namespace sode
