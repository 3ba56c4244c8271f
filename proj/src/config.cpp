#include "sode/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace sode {

namespace {

std::string join_problems(const std::vector<std::string>& p) {
  std::string out = "invalid config:";
  for (const auto& s : p) out += "\n  - " + s;
  return out;
}

// Reads fields off one JSON object, recording problems instead of throwing.
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string path, std::vector<std::string>& problems)
      : j_(j), path_(std::move(path)), problems_(problems) {
    if (!j_.is_object()) fail("", "must be an object");
  }

  bool ok() const { return j_.is_object(); }
  bool has(const std::string& key) {
    seen_.insert(key);
    return ok() && j_.contains(key);
  }
  const nlohmann::json& at(const std::string& key) const { return j_.at(key); }
  std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void fail(const std::string& key, const std::string& msg) {
    problems_.push_back(fmt::format("{}: {}", key.empty() ? path_ : where(key), msg));
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(key, fmt::format("wrong type ({})", j_.at(key).type_name()));
    }
  }

  void get_int(const std::string& key, int& out, int min) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) {
      fail(key, "must be an integer");
      return;
    }
    const auto x = v.get<long long>();
    if (x < min || x > 1'000'000'000) {
      fail(key, fmt::format("must be >= {}", min));
      return;
    }
    out = static_cast<int>(x);
  }

  void get_seed(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail(key, "must be a non-negative integer");
      return;
    }
    out = v.get<std::uint64_t>();
  }

  template <typename Fn>
  void get_enum(const std::string& key, Fn&& parse) {
    if (!has(key)) return;
    if (!j_.at(key).is_string()) {
      fail(key, "must be a string");
      return;
    }
    try {
      parse(j_.at(key).get<std::string>());
    } catch (const std::invalid_argument& e) {
      fail(key, e.what());
    }
  }

  // Call last: flags keys nobody asked for.
  void reject_unknown() {
    if (!ok()) return;
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.count(k)) fail(k, "unknown key");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

std::optional<ScriptedStrategy> parse_scripted(const nlohmann::json& j, const std::string& where,
                                               std::vector<std::string>& problems) {
  try {
    if (j.is_string()) {
      const auto kind = scripted_kind_from_string(j.get<std::string>());
      if (kind == ScriptedKind::MemoryOne || kind == ScriptedKind::RandomP) {
        problems.push_back(fmt::format("{}: {} needs an object with parameters", where,
                                       j.get<std::string>()));
        return std::nullopt;
      }
      return ScriptedStrategy{kind};
    }
    Reader r(j, where, problems);
    if (!r.ok()) return std::nullopt;
    ScriptedStrategy s;
    bool have_kind = false;
    r.get_enum("kind", [&](const std::string& v) {
      s.kind = scripted_kind_from_string(v);
      have_kind = true;
    });
    if (r.has("p")) {
      r.get("p", s.p);
      if (!(s.p >= 0.0 && s.p <= 1.0)) r.fail("p", "must lie in [0, 1]");
    }
    if (r.has("params")) {
      try {
        s.memory_one = r.at("params").get<MemoryOneStrategy>();
        validate(s.memory_one);
      } catch (const std::exception& e) {
        r.fail("params", e.what());
      }
    }
    r.reject_unknown();
    if (!have_kind) {
      problems.push_back(fmt::format("{}.kind: required", where));
      return std::nullopt;
    }
    return s;
  } catch (const std::invalid_argument& e) {
    problems.push_back(fmt::format("{}: {}", where, e.what()));
    return std::nullopt;
  }
}

}  // namespace

ConfigInvalid::ConfigInvalid(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

nlohmann::json scripted_to_json(const ScriptedStrategy& s) {
  nlohmann::json j = {{"kind", std::string(to_string(s.kind))}};
  if (s.kind == ScriptedKind::RandomP) j["p"] = s.p;
  if (s.kind == ScriptedKind::MemoryOne) j["params"] = s.memory_one;
  return j;
}

ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  std::vector<std::string> problems;
  ExperimentConfig c;
  Reader top(j, "", problems);
  if (!top.ok()) throw ConfigInvalid(problems);

  if (!top.has("schema_version")) {
    problems.push_back("schema_version: required");
  } else if (!j["schema_version"].is_number_integer() ||
             j["schema_version"].get<int>() != kConfigSchemaVersion) {
    problems.push_back(fmt::format("schema_version: only version {} is supported",
                                   kConfigSchemaVersion));
  }
  top.get_seed("seed", c.seed);
  top.get_int("concurrency", c.concurrency, 1);
  top.get_int("parse_retries", c.parse_retries, 0);

  if (!top.has("agent")) {
    problems.push_back("agent: required");
  } else {
    Reader a(j["agent"], "agent", problems);
    const bool scripted = a.has("scripted");
    const bool remote = a.has("remote");
    if (a.ok() && scripted == remote) {
      a.fail("", "needs exactly one of \"scripted\" or \"remote\"");
    } else if (scripted) {
      if (auto s = parse_scripted(a.at("scripted"), "agent.scripted", problems)) c.agent.kind = *s;
    } else if (remote) {
      Reader r(a.at("remote"), "agent.remote", problems);
      RemoteModel m;
      r.get("base_url", m.endpoint.base_url);
      r.get("model_id", m.endpoint.model_id);
      r.get("credential_env", m.endpoint.credential_env);
      r.get_enum("model_class", [&](const std::string& v) { m.model_class = model_class_from_string(v); });
      r.reject_unknown();
      if (r.ok()) {
        try {
          validate(m.endpoint);
        } catch (const std::invalid_argument& e) {
          r.fail("", e.what());
        }
      }
      c.agent.kind = m;
    }
    a.reject_unknown();
  }
  top.get_enum("persona", [&](const std::string& v) { c.agent.persona = persona_from_string(v); });
  top.get_enum("framing", [&](const std::string& v) { c.agent.framing = framing_from_string(v); });

  if (top.has("sampling")) {
    Reader s(j["sampling"], "sampling", problems);
    s.get("temperature", c.sampling.temperature);
    s.get("top_p", c.sampling.top_p);
    s.get_int("top_k", c.sampling.top_k, 0);
    s.get_int("max_tokens", c.sampling.max_tokens, 1);
    s.get_int("context_limit", c.sampling.context_limit, 1);
    s.reject_unknown();
    if (c.sampling.temperature < 0) problems.push_back("sampling.temperature: must be >= 0");
    if (!(c.sampling.top_p > 0 && c.sampling.top_p <= 1)) {
      problems.push_back("sampling.top_p: must lie in (0, 1]");
    }
  }
  if (top.has("gateway")) {
    Reader g(j["gateway"], "gateway", problems);
    int attempts = c.gateway.max_attempts;
    int initial = static_cast<int>(c.gateway.initial_backoff.count());
    int maxb = static_cast<int>(c.gateway.max_backoff.count());
    int conn = static_cast<int>(c.gateway.connect_timeout.count());
    int read = static_cast<int>(c.gateway.read_timeout.count());
    g.get_int("max_attempts", attempts, 1);
    g.get_int("initial_backoff_ms", initial, 0);
    g.get_int("max_backoff_ms", maxb, 0);
    g.get_int("connect_timeout_ms", conn, 1);
    g.get_int("read_timeout_ms", read, 1);
    g.reject_unknown();
    c.gateway.max_attempts = attempts;
    c.gateway.initial_backoff = std::chrono::milliseconds(initial);
    c.gateway.max_backoff = std::chrono::milliseconds(maxb);
    c.gateway.connect_timeout = std::chrono::milliseconds(conn);
    c.gateway.read_timeout = std::chrono::milliseconds(read);
  }
  if (top.has("prompt")) {
    Reader p(j["prompt"], "prompt", problems);
    p.get_enum("reminder_placement", [&](const std::string& v) {
      if (v == "user") {
        c.prompt.reminder_placement = ReminderPlacement::User;
      } else if (v == "system") {
        c.prompt.reminder_placement = ReminderPlacement::System;
      } else {
        throw std::invalid_argument("must be \"user\" or \"system\"");
      }
    });
    p.reject_unknown();
  }
  if (top.has("payoffs")) {
    Reader p(j["payoffs"], "payoffs", problems);
    int t = 5, r = 3, pu = 1, s = 0;
    p.get_int("T", t, -1'000'000);
    p.get_int("R", r, -1'000'000);
    p.get_int("P", pu, -1'000'000);
    p.get_int("S", s, -1'000'000);
    p.reject_unknown();
    try {
      c.payoffs = PayoffMatrix(r, pu, t, s);
    } catch (const std::invalid_argument& e) {
      p.fail("", e.what());
    }
  }
  if (top.has("zd_params_path")) {
    std::string path;
    top.get("zd_params_path", path);
    std::filesystem::path full = path;
    if (full.is_relative() && !base_dir.empty()) full = base_dir / full;
    c.zd_params_path = full.string();
    try {
      c.zd = ZdTable::load(full.string());
    } catch (const std::exception& e) {
      problems.push_back(fmt::format("zd_params_path: {}", e.what()));
    }
  }
  if (top.has("zd_params")) {
    if (top.has("zd_params_path")) {
      top.fail("zd_params", "give either zd_params or zd_params_path, not both");
    } else {
      try {
        c.zd = ZdTable::from_json(top.at("zd_params"));
      } catch (const std::exception& e) {
        top.fail("zd_params", e.what());
      }
    }
  }

  if (top.has("direct")) {
    Reader d(j["direct"], "direct", problems);
    DirectSection s;
    if (d.has("conditions")) {
      const auto& arr = d.at("conditions");
      if (!arr.is_array() || arr.empty()) {
        d.fail("conditions", "must be a non-empty list");
      } else {
        s.conditions.clear();
        for (const auto& v : arr) {
          try {
            s.conditions.push_back(zd_condition_from_string(v.get<std::string>()));
          } catch (const std::exception& e) {
            d.fail("conditions", e.what());
          }
        }
      }
    }
    d.get_int("horizon", s.horizon, 1);
    d.get_int("episodes", s.episodes, 1);
    d.reject_unknown();
    c.direct = s;
  }
  if (top.has("reputation")) {
    Reader r(j["reputation"], "reputation", problems);
    ReputationSection s;
    if (r.has("trial_seed")) {
      std::uint64_t v = 0;
      r.get_seed("trial_seed", v);
      s.trial_seed = v;
    }
    r.reject_unknown();
    c.reputation = s;
  }
  if (top.has("society")) {
    Reader r(j["society"], "society", problems);
    SocietySection s;
    r.get_int("agents", s.agents, 2);
    r.get_int("horizon", s.horizon, 1);
    r.get_int("episodes", s.episodes, 1);
    if (r.has("rc_fractions")) {
      const auto& arr = r.at("rc_fractions");
      if (!arr.is_array() || arr.empty()) {
        r.fail("rc_fractions", "must be a non-empty list");
      } else {
        s.rc_fractions.clear();
        for (const auto& v : arr) {
          if (!v.is_number() || v.get<double>() < 0.0 || v.get<double>() > 1.0) {
            r.fail("rc_fractions", "entries must be numbers in [0, 1]");
          } else {
            s.rc_fractions.push_back(v.get<double>());
          }
        }
      }
    }
    r.get_enum("cross_episode", [&](const std::string& v) {
      if (v == "full") {
        s.cross_episode = CrossEpisodeFormat::FullHistories;
      } else if (v == "counts") {
        s.cross_episode = CrossEpisodeFormat::Counts;
      } else {
        throw std::invalid_argument("must be \"full\" or \"counts\"");
      }
    });
    if (r.has("members")) {
      const auto& arr = r.at("members");
      if (!arr.is_array()) {
        r.fail("members", "must be a list");
      } else {
        for (std::size_t i = 0; i < arr.size(); ++i) {
          if (auto m = parse_scripted(arr[i], fmt::format("society.members[{}]", i), problems)) {
            s.members.push_back(*m);
          }
        }
        if (s.members.size() != static_cast<std::size_t>(s.agents)) {
          r.fail("members", fmt::format("needs exactly {} entries", s.agents));
        }
      }
    }
    r.reject_unknown();
    c.society = s;
  }
  if (!c.direct && !c.reputation && !c.society) {
    problems.push_back("config selects no experiment (direct, reputation or society)");
  }
  top.reject_unknown();
  if (!problems.empty()) throw ConfigInvalid(problems);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid({fmt::format("cannot read {}", path.string())});
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigInvalid({fmt::format("{}: not valid JSON ({})", path.string(), e.what())});
  }
  return parse_config(j, path.parent_path());
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["seed"] = c.seed;
  j["concurrency"] = c.concurrency;
  j["parse_retries"] = c.parse_retries;
  if (const auto* s = std::get_if<ScriptedStrategy>(&c.agent.kind)) {
    j["agent"] = {{"scripted", scripted_to_json(*s)}};
  } else {
    const auto& m = std::get<RemoteModel>(c.agent.kind);
    j["agent"] = {{"remote",
                   {{"base_url", m.endpoint.base_url},
                    {"model_id", m.endpoint.model_id},
                    {"credential_env", m.endpoint.credential_env},
                    {"model_class", std::string(to_string(m.model_class))}}}};
  }
  j["persona"] = std::string(to_string(c.agent.persona));
  j["framing"] = std::string(to_string(c.agent.framing));
  j["sampling"] = c.sampling;
  nlohmann::json g = c.gateway;
  g.erase("seed");
  j["gateway"] = g;
  j["prompt"] = {{"reminder_placement",
                  c.prompt.reminder_placement == ReminderPlacement::User ? "user" : "system"}};
  j["payoffs"] = {{"T", c.payoffs.temptation()},
                  {"R", c.payoffs.reward()},
                  {"P", c.payoffs.punishment()},
                  {"S", c.payoffs.sucker()}};
  j["zd_params"] = c.zd.to_json();
  if (c.direct) {
    nlohmann::json conds = nlohmann::json::array();
    for (auto k : c.direct->conditions) conds.push_back(std::string(to_string(k)));
    j["direct"] = {{"conditions", conds},
                   {"horizon", c.direct->horizon},
                   {"episodes", c.direct->episodes}};
  }
  if (c.reputation) {
    j["reputation"] = nlohmann::json::object();
    if (c.reputation->trial_seed) j["reputation"]["trial_seed"] = *c.reputation->trial_seed;
  }
  if (c.society) {
    nlohmann::json s = {
        {"agents", c.society->agents},
        {"horizon", c.society->horizon},
        {"episodes", c.society->episodes},
        {"rc_fractions", c.society->rc_fractions},
        {"cross_episode",
         c.society->cross_episode == CrossEpisodeFormat::FullHistories ? "full" : "counts"}};
    if (!c.society->members.empty()) {
      s["members"] = nlohmann::json::array();
      for (const auto& m : c.society->members) s["members"].push_back(scripted_to_json(m));
    }
    j["society"] = s;
  }
  return j;
}

std::uint64_t direct_seed(const ExperimentConfig& c) { return derive_seed(c.seed, {1}); }

std::uint64_t trial_seed(const ExperimentConfig& c) {
  return c.reputation && c.reputation->trial_seed ? *c.reputation->trial_seed : c.seed;
}

std::uint64_t society_seed(const ExperimentConfig& c, double rc_fraction) {
  return derive_seed(c.seed, {3, static_cast<std::uint64_t>(std::lround(rc_fraction * 1000.0))});
}

}  // namespace sode
