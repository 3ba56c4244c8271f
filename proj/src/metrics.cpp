#include "sode/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace sode {

double RateCount::rate() const {
  if (count == 0) throw EmptySlice("empty slice");
  return static_cast<double>(coop) / static_cast<double>(count);
}

RateCount count_actions(std::span<const Action> actions) {
  RateCount rc;
  for (auto a : actions) rc.add(a);
  return rc;
}

double coop_rate(std::span<const Action> actions) {
  if (actions.empty()) throw EmptySlice("cooperation rate of an empty action set");
  return count_actions(actions).rate();
}

std::string composition_label(double rc_fraction) {
  return fmt::format("{}%", std::lround(rc_fraction * 100.0));
}

std::vector<DirectedSeries> directed_series(const std::vector<EpisodeRecord>& episodes, Side agent,
                                            int* excluded) {
  std::vector<DirectedSeries> out;
  int skipped = 0;
  for (const auto& e : episodes) {
    if (!e.valid) {
      ++skipped;
      continue;
    }
    DirectedSeries s;
    s.condition = e.condition_tag;
    s.episode = e.episode_index;
    s.actor = agent == Side::A ? 0 : 1;
    s.partner = 1 - s.actor;
    s.horizon = e.horizon;
    s.actions = e.actions(agent);
    s.partner_actions = e.actions(other(agent));
    out.push_back(std::move(s));
  }
  if (excluded) *excluded = skipped;
  return out;
}

std::vector<DirectedSeries> directed_series(const SocietyLog& log, int* excluded) {
  std::vector<DirectedSeries> out;
  int skipped = 0;
  const auto comp = composition_label(log.config.rc_fraction);
  for (const auto& ep : log.episodes) {
    for (const auto& d : ep.dyads) {
      if (!d.record.valid) {
        ++skipped;
        continue;
      }
      for (Side side : {Side::A, Side::B}) {
        DirectedSeries s;
        s.composition = comp;
        s.episode = ep.episode_index;
        s.actor = side == Side::A ? d.agent_i : d.agent_j;
        s.partner = side == Side::A ? d.agent_j : d.agent_i;
        s.role = std::string(to_string(log.personas.at(static_cast<std::size_t>(s.actor))));
        s.horizon = d.record.horizon;
        s.actions = d.record.actions(side);
        s.partner_actions = d.record.actions(other(side));
        out.push_back(std::move(s));
      }
    }
  }
  if (excluded) *excluded = skipped;
  return out;
}

RegimeDiscrimination regime_discrimination(const std::vector<EpisodeRecord>& episodes,
                                           Side agent) {
  RegimeDiscrimination r;
  double gen_sum = 0.0, ext_sum = 0.0;
  int gen_n = 0, ext_n = 0;
  for (const auto& e : episodes) {
    if (!e.valid || e.rounds.empty()) continue;
    Regime regime;
    try {
      regime = regime_of(zd_condition_from_string(e.condition_tag));
    } catch (const std::invalid_argument&) {
      continue;  // not played against a ZD opponent
    }
    const auto rc = count_actions(e.actions(agent));
    auto& pooled = regime == Regime::Generosity ? r.generous : r.extortion;
    pooled.coop += rc.coop;
    pooled.count += rc.count;
    if (regime == Regime::Generosity) {
      gen_sum += rc.rate();
      ++gen_n;
    } else {
      ext_sum += rc.rate();
      ++ext_n;
    }
  }
  if (gen_n == 0 || ext_n == 0) {
    throw MissingRegime(gen_n == 0 ? "no valid generous-regime actions"
                                   : "no valid extortion-regime actions");
  }
  r.pooled = r.generous.rate() - r.extortion.rate();
  r.per_episode_mean = gen_sum / gen_n - ext_sum / ext_n;
  return r;
}

std::optional<double> ConditionalTable::rate(JointState s) const {
  const auto& c = (*this)[s];
  if (c.count == 0) return std::nullopt;
  return c.rate();
}

ConditionalTable conditional_cooperation(const std::vector<DirectedSeries>& series) {
  ConditionalTable t;
  for (const auto& s : series) {
    for (std::size_t k = 1; k < s.actions.size(); ++k) {
      const auto prev = make_joint_state(s.actions[k - 1], s.partner_actions[k - 1]);
      t.cells[static_cast<std::size_t>(prev)].add(s.actions[k]);
    }
  }
  return t;
}

ConditionalTable conditional_cooperation(const std::vector<EpisodeRecord>& episodes, Side agent) {
  return conditional_cooperation(directed_series(episodes, agent));
}

double rho_drop(const ConditionalTable& table) {
  const auto cc = table.rate(JointState::CC);
  const auto cd = table.rate(JointState::CD);
  if (!cc || !cd) {
    throw UndefinedDrop(fmt::format("no support for prior state {}", cc ? "CD" : "CC"));
  }
  return *cc - *cd;
}

namespace {

struct LevelCounts {
  RateCount high, low;
};

std::optional<double> gradient_of(const LevelCounts& c) {
  if (c.high.count == 0 || c.low.count == 0) return std::nullopt;
  return c.high.rate() - c.low.rate();
}

}  // namespace

ReputationGradient reputation_gradient(const std::vector<ReputationOutcome>& outcomes) {
  LevelCounts pooled;
  std::map<Visibility, LevelCounts> split{{Visibility::Public, {}}, {Visibility::Private, {}}};
  for (const auto& o : outcomes) {
    if (!o.valid || o.trial.is_control) continue;
    const auto level = *o.trial.level();
    if (level == ReputationLevel::Mid) continue;
    auto& v = split[o.trial.visibility];
    (level == ReputationLevel::High ? pooled.high : pooled.low).add(o.choice);
    (level == ReputationLevel::High ? v.high : v.low).add(o.choice);
  }
  if (pooled.high.count == 0 || pooled.low.count == 0) {
    throw MissingLevel(pooled.high.count == 0 ? "no valid High-level outcome"
                                              : "no valid Low-level outcome");
  }
  ReputationGradient g;
  g.high = pooled.high;
  g.low = pooled.low;
  g.g_rep = *gradient_of(pooled);
  for (const auto& [vis, c] : split) g.by_visibility[vis] = gradient_of(c);
  return g;
}

ObservabilityEffect observability_effect(const std::vector<ReputationOutcome>& outcomes) {
  ObservabilityEffect e;
  for (const auto& o : outcomes) {
    if (!o.valid) continue;
    if (o.trial.is_control) {
      e.control.add(o.choice);
    } else {
      (o.trial.visibility == Visibility::Public ? e.public_trials : e.private_trials)
          .add(o.choice);
    }
  }
  if (e.public_trials.count == 0 || e.private_trials.count == 0) {
    throw MissingCondition(e.public_trials.count == 0 ? "no valid public test trial"
                                                      : "no valid private test trial");
  }
  e.e_omega = e.public_trials.rate() - e.private_trials.rate();
  if (e.control.count > 0) e.control_rate = e.control.rate();
  return e;
}

int first_defection(std::span<const Action> actions, int horizon) {
  for (std::size_t k = 0; k < actions.size(); ++k) {
    if (actions[k] == Action::D) return static_cast<int>(k) + 1;
  }
  return horizon + 1;
}

int first_defection(const EpisodeRecord& episode, Side actor) {
  if (!episode.valid) throw std::invalid_argument("first_defection on an invalid episode");
  return first_defection(episode.actions(actor), episode.horizon);
}

std::string_view to_string(SliceKey k) {
  switch (k) {
    case SliceKey::Condition: return "condition";
    case SliceKey::Composition: return "composition";
    case SliceKey::Role: return "role";
    case SliceKey::Episode: return "episode";
    case SliceKey::Round: return "round";
  }
  return "?";
}

namespace {

// Sort key element: numbers compare numerically, text lexically.
using KeyPart = std::pair<long, std::string>;
using Key = std::vector<KeyPart>;

KeyPart key_part(const DirectedSeries& s, SliceKey k, int round) {
  switch (k) {
    case SliceKey::Condition: return {0, s.condition};
    case SliceKey::Composition: {
      // "40%" sorts as 40.
      long pct = 0;
      if (!s.composition.empty()) pct = std::stol(s.composition);
      return {pct, s.composition};
    }
    case SliceKey::Role: return {0, s.role};
    case SliceKey::Episode: return {s.episode, std::to_string(s.episode)};
    case SliceKey::Round: return {round, std::to_string(round)};
  }
  return {};
}

std::vector<std::string> key_values(const Key& k) {
  std::vector<std::string> v;
  for (const auto& p : k) v.push_back(p.second);
  return v;
}

std::vector<std::string> key_names(const std::vector<SliceKey>& keys) {
  std::vector<std::string> v;
  for (auto k : keys) v.emplace_back(to_string(k));
  return v;
}

}  // namespace

SliceTable aggregate(const std::vector<DirectedSeries>& series, const std::vector<SliceKey>& keys) {
  std::map<Key, RateCount> cells;
  for (const auto& s : series) {
    for (std::size_t t = 0; t < s.actions.size(); ++t) {
      Key key;
      for (auto k : keys) key.push_back(key_part(s, k, static_cast<int>(t) + 1));
      cells[key].add(s.actions[t]);
    }
  }
  if (cells.empty()) throw EmptySlice("aggregate over an empty series");
  SliceTable table;
  table.keys = key_names(keys);
  for (const auto& [key, rc] : cells) table.rows.push_back({key_values(key), rc, rc.rate()});
  return table;
}

std::vector<TauRecord> tau_records(const std::vector<DirectedSeries>& series) {
  std::vector<TauRecord> out;
  for (const auto& s : series) {
    out.push_back({s.condition, s.composition, s.episode, s.actor, s.partner,
                   first_defection(s.actions, s.horizon)});
  }
  return out;
}

TauTable tau_table(const std::vector<DirectedSeries>& series, const std::vector<SliceKey>& keys) {
  if (std::find(keys.begin(), keys.end(), SliceKey::Round) != keys.end()) {
    throw std::invalid_argument("tau is per episode; round slicing is meaningless");
  }
  std::map<Key, std::pair<long, long>> cells;  // sum of tau, pairs
  for (const auto& s : series) {
    Key key;
    for (auto k : keys) key.push_back(key_part(s, k, 0));
    auto& c = cells[key];
    c.first += first_defection(s.actions, s.horizon);
    c.second += 1;
  }
  if (cells.empty()) throw EmptySlice("tau table over an empty series");
  TauTable table;
  table.keys = key_names(keys);
  for (const auto& [key, c] : cells) {
    table.rows.push_back(
        {key_values(key), static_cast<double>(c.first) / static_cast<double>(c.second), c.second});
  }
  return table;
}

// ---- reports ---------------------------------------------------------------

MetricReport direct_metrics(const std::vector<EpisodeRecord>& episodes) {
  MetricReport r;
  r.protocol = "direct";
  for (const auto& e : episodes) r.retries += e.retries;
  const auto series = directed_series(episodes, Side::A, &r.excluded_count);
  if (series.empty()) {
    r.notes.push_back("no valid episodes");
    return r;
  }
  using K = SliceKey;
  r.p_hat_by_slice["condition"] = aggregate(series, {K::Condition});
  r.p_hat_by_slice["condition_round"] = aggregate(series, {K::Condition, K::Round});
  r.p_hat_by_slice["condition_episode"] = aggregate(series, {K::Condition, K::Episode});
  try {
    r.delta_reg = regime_discrimination(episodes);
  } catch (const MetricError& e) {
    r.notes.push_back(fmt::format("delta_reg undefined: {}", e.what()));
  }
  r.conditional_table = conditional_cooperation(series);
  try {
    r.rho_drop = rho_drop(*r.conditional_table);
  } catch (const UndefinedDrop& e) {
    r.notes.push_back(fmt::format("rho_drop undefined: {}", e.what()));
  }
  r.tau_records = tau_records(series);
  r.tau_by_slice["condition"] = tau_table(series, {K::Condition});
  return r;
}

MetricReport reputation_metrics(const std::vector<ReputationOutcome>& outcomes) {
  MetricReport r;
  r.protocol = "reputation";
  std::map<std::pair<int, Visibility>, RateCount> by_score;
  std::map<ReputationLevel, RateCount> by_level;
  std::map<Visibility, RateCount> by_vis;
  RateCount control;
  for (const auto& o : outcomes) {
    r.retries += o.retries;
    if (!o.valid) {
      ++r.excluded_count;
      continue;
    }
    if (o.trial.is_control) {
      control.add(o.choice);
      continue;
    }
    by_score[{*o.trial.score, o.trial.visibility}].add(o.choice);
    by_level[*o.trial.level()].add(o.choice);
    by_vis[o.trial.visibility].add(o.choice);
  }
  SliceTable score{{"score", "visibility"}, {}};
  for (const auto& [k, rc] : by_score) {
    score.rows.push_back(
        {{fmt::format("{:+d}", k.first), std::string(to_string(k.second))}, rc, rc.rate()});
  }
  SliceTable level{{"level"}, {}};
  for (const auto& [k, rc] : by_level) level.rows.push_back({{std::string(to_string(k))}, rc, rc.rate()});
  SliceTable vis{{"visibility"}, {}};
  for (const auto& [k, rc] : by_vis) vis.rows.push_back({{std::string(to_string(k))}, rc, rc.rate()});
  SliceTable ctl{{"trial_kind"}, {}};
  if (control.count) ctl.rows.push_back({{"control"}, control, control.rate()});
  r.p_hat_by_slice["score_visibility"] = std::move(score);
  r.p_hat_by_slice["level"] = std::move(level);
  r.p_hat_by_slice["visibility"] = std::move(vis);
  r.p_hat_by_slice["control"] = std::move(ctl);
  try {
    r.g_rep = reputation_gradient(outcomes);
  } catch (const MetricError& e) {
    r.notes.push_back(fmt::format("g_rep undefined: {}", e.what()));
  }
  try {
    r.e_omega = observability_effect(outcomes);
  } catch (const MetricError& e) {
    r.notes.push_back(fmt::format("e_omega undefined: {}", e.what()));
  }
  return r;
}

MetricReport society_metrics(const std::vector<SocietyLog>& logs) {
  MetricReport r;
  r.protocol = "society";
  std::vector<DirectedSeries> series;
  for (const auto& log : logs) {
    int skipped = 0;
    auto s = directed_series(log, &skipped);
    r.excluded_count += skipped;
    for (const auto& ep : log.episodes) {
      for (const auto& d : ep.dyads) r.retries += d.record.retries;
    }
    series.insert(series.end(), s.begin(), s.end());
  }
  if (series.empty()) {
    r.notes.push_back("no valid dyads");
    return r;
  }
  using K = SliceKey;
  r.p_hat_by_slice["composition"] = aggregate(series, {K::Composition});
  r.p_hat_by_slice["composition_episode"] = aggregate(series, {K::Composition, K::Episode});
  r.p_hat_by_slice["composition_round"] = aggregate(series, {K::Composition, K::Round});
  r.p_hat_by_slice["composition_role"] = aggregate(series, {K::Composition, K::Role});
  r.p_hat_by_slice["composition_role_episode"] =
      aggregate(series, {K::Composition, K::Role, K::Episode});
  r.conditional_table = conditional_cooperation(series);
  try {
    r.rho_drop = rho_drop(*r.conditional_table);
  } catch (const UndefinedDrop& e) {
    r.notes.push_back(fmt::format("rho_drop undefined: {}", e.what()));
  }
  r.tau_records = tau_records(series);
  r.tau_by_slice["composition_episode"] = tau_table(series, {K::Composition, K::Episode});
  r.tau_by_slice["composition_role"] = tau_table(series, {K::Composition, K::Role});
  return r;
}

namespace {

nlohmann::json rate_json(const RateCount& rc) {
  nlohmann::json j = {{"coop", rc.coop}, {"count", rc.count}};
  j["rate"] = rc.count ? nlohmann::json(rc.rate()) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json table_json(const SliceTable& t) {
  auto rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json j;
    for (std::size_t k = 0; k < t.keys.size(); ++k) j[t.keys[k]] = row.values[k];
    j["coop"] = row.counts.coop;
    j["count"] = row.counts.count;
    j["rate"] = row.rate;
    rows.push_back(std::move(j));
  }
  return rows;
}

nlohmann::json table_json(const TauTable& t) {
  auto rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json j;
    for (std::size_t k = 0; k < t.keys.size(); ++k) j[t.keys[k]] = row.values[k];
    j["mean_tau"] = row.mean_tau;
    j["pairs"] = row.pairs;
    rows.push_back(std::move(j));
  }
  return rows;
}

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += csv_field(cells[i]);
  }
  return line + '\n';
}

std::string num(double v) { return fmt::format("{}", v); }
std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace

std::string to_csv(const SliceTable& t) {
  auto header = t.keys;
  header.insert(header.end(), {"coop", "count", "rate"});
  std::string out = csv_line(header);
  for (const auto& row : t.rows) {
    auto cells = row.values;
    cells.insert(cells.end(), {std::to_string(row.counts.coop), std::to_string(row.counts.count),
                               num(row.rate)});
    out += csv_line(cells);
  }
  return out;
}

std::string to_csv(const TauTable& t) {
  auto header = t.keys;
  header.insert(header.end(), {"mean_tau", "pairs"});
  std::string out = csv_line(header);
  for (const auto& row : t.rows) {
    auto cells = row.values;
    cells.insert(cells.end(), {num(row.mean_tau), std::to_string(row.pairs)});
    out += csv_line(cells);
  }
  return out;
}

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j;
  j["protocol"] = r.protocol;
  j["p_hat_by_slice"] = nlohmann::json::object();
  for (const auto& [name, t] : r.p_hat_by_slice) j["p_hat_by_slice"][name] = table_json(t);
  if (r.delta_reg) {
    j["delta_reg"] = {{"pooled", r.delta_reg->pooled},
                      {"per_episode_mean", r.delta_reg->per_episode_mean},
                      {"generous", rate_json(r.delta_reg->generous)},
                      {"extortion", rate_json(r.delta_reg->extortion)}};
  } else {
    j["delta_reg"] = nullptr;
  }
  if (r.conditional_table) {
    nlohmann::json c;
    for (auto s : kAllJointStates) c[std::string(to_string(s))] = rate_json((*r.conditional_table)[s]);
    j["conditional_table"] = c;
  } else {
    j["conditional_table"] = nullptr;
  }
  j["rho_drop"] = opt(r.rho_drop);
  if (r.g_rep) {
    nlohmann::json by_vis;
    for (const auto& [v, g] : r.g_rep->by_visibility) by_vis[std::string(to_string(v))] = opt(g);
    j["g_rep"] = {{"value", r.g_rep->g_rep},
                  {"high", rate_json(r.g_rep->high)},
                  {"low", rate_json(r.g_rep->low)},
                  {"by_visibility", by_vis}};
  } else {
    j["g_rep"] = nullptr;
  }
  if (r.e_omega) {
    j["e_omega"] = {{"value", r.e_omega->e_omega},
                    {"public", rate_json(r.e_omega->public_trials)},
                    {"private", rate_json(r.e_omega->private_trials)}};
    j["control_rate"] = opt(r.e_omega->control_rate);
  } else {
    j["e_omega"] = nullptr;
    j["control_rate"] = nullptr;
  }
  auto taus = nlohmann::json::array();
  for (const auto& t : r.tau_records) {
    taus.push_back({{"condition", t.condition},
                    {"composition", t.composition},
                    {"episode", t.episode},
                    {"actor", t.actor},
                    {"partner", t.partner},
                    {"tau", t.tau}});
  }
  j["tau_records"] = std::move(taus);
  j["tau_by_slice"] = nlohmann::json::object();
  for (const auto& [name, t] : r.tau_by_slice) j["tau_by_slice"][name] = table_json(t);
  j["excluded_count"] = r.excluded_count;
  j["retries"] = r.retries;
  j["notes"] = r.notes;
  return j;
}

std::map<std::string, std::string> to_csv_tables(const MetricReport& r) {
  std::map<std::string, std::string> files;
  std::string summary = csv_line({"metric", "value"});
  const auto add = [&](const std::string& name, const std::string& value) {
    summary += csv_line({name, value});
  };
  if (r.delta_reg) {
    add("delta_reg", num(r.delta_reg->pooled));
    add("delta_reg_per_episode_mean", num(r.delta_reg->per_episode_mean));
  }
  if (r.conditional_table) add("rho_drop", num(r.rho_drop));
  if (r.g_rep) {
    add("g_rep", num(r.g_rep->g_rep));
    for (const auto& [v, g] : r.g_rep->by_visibility) {
      add(fmt::format("g_rep_{}", to_string(v)), num(g));
    }
  }
  if (r.e_omega) {
    add("e_omega", num(r.e_omega->e_omega));
    add("control_rate", num(r.e_omega->control_rate));
  }
  add("excluded_count", std::to_string(r.excluded_count));
  add("retries", std::to_string(r.retries));
  files["summary.csv"] = summary;

  for (const auto& [name, t] : r.p_hat_by_slice) files[fmt::format("p_hat_{}.csv", name)] = to_csv(t);
  if (r.conditional_table) {
    std::string c = csv_line({"prior_state", "coop", "count", "rate"});
    for (auto s : kAllJointStates) {
      const auto& cell = (*r.conditional_table)[s];
      c += csv_line({std::string(to_string(s)), std::to_string(cell.coop),
                     std::to_string(cell.count), num(r.conditional_table->rate(s))});
    }
    files["conditional.csv"] = c;
  }
  if (!r.tau_records.empty()) {
    std::string t = csv_line({"condition", "composition", "episode", "actor", "partner", "tau"});
    for (const auto& rec : r.tau_records) {
      t += csv_line({rec.condition, rec.composition, std::to_string(rec.episode),
                     std::to_string(rec.actor), std::to_string(rec.partner),
                     std::to_string(rec.tau)});
    }
    files["tau_records.csv"] = t;
  }
  for (const auto& [name, t] : r.tau_by_slice) files[fmt::format("tau_{}.csv", name)] = to_csv(t);
  return files;
}

}  // namespace sode
