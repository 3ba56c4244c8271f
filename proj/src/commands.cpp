#include "sode/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <openssl/evp.h>

#include "sode/analysis.hpp"
#include "sode/config.hpp"
#include "sode/experiments.hpp"
#include "sode/metrics.hpp"
#include "sode/trials.hpp"

namespace fs = std::filesystem;

namespace sode {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

namespace {

class MissingData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string utc_timestamp() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", tm.tm_year + 1900, tm.tm_mon + 1,
                     tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << content;
  if (!out) throw std::runtime_error(fmt::format("write failed: {}", path.string()));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingData(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::vector<nlohmann::json> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

fs::path at(const fs::path& dir, std::string_view name) { return dir / std::string(name); }

}  // namespace

// ---- run -------------------------------------------------------------------

int cmd_run(const fs::path& config_path, const fs::path& out_dir, const RunOverrides& overrides,
            std::ostream& log) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.concurrency) {
      if (*overrides.concurrency < 1) throw ConfigInvalid({"--concurrency: must be >= 1"});
      cfg.concurrency = *overrides.concurrency;
    }
    if (const auto* m = std::get_if<RemoteModel>(&cfg.agent.kind)) {
      const auto& env = m->endpoint.credential_env;
      if (!env.empty()) {
        const char* v = std::getenv(env.c_str());
        if (v == nullptr || *v == '\0') {
          throw ConfigInvalid({fmt::format("agent.remote.credential_env: {} is not set", env)});
        }
      }
    }
  } catch (const ConfigInvalid& e) {
    log << e.what() << '\n';
    return kExitConfigInvalid;
  }

  try {
    const auto started = utc_timestamp();
    fs::create_directories(out_dir);
    for (auto name : {outputs::kManifest, outputs::kDirect, outputs::kTrials, outputs::kOutcomes,
                      outputs::kSociety, outputs::kTranscripts}) {
      fs::remove(at(out_dir, name));
    }
    const nlohmann::json resolved = to_json(cfg);
    const std::string resolved_text = resolved.dump(2) + '\n';
    write_file(at(out_dir, outputs::kConfig), resolved_text);

    AgentContext ctx;
    ctx.sampling = cfg.sampling;
    ctx.prompt = cfg.prompt;
    ctx.parse_retries = cfg.parse_retries;
    const bool remote = !cfg.agent.is_scripted();
    if (remote) {
      auto transcripts = std::make_shared<TranscriptLog>(at(out_dir, outputs::kTranscripts));
      GatewayOptions gopts = cfg.gateway;
      gopts.seed = cfg.seed;
      ctx.gateway = Gateway::with_concurrency_budget(cfg.concurrency, gopts, transcripts);
    }

    nlohmann::json counts = nlohmann::json::object();
    nlohmann::json seeds = {{"run", cfg.seed}};
    long retries = 0;
    long excluded = 0;
    std::vector<std::string> written;

    if (cfg.direct) {
      DirectReciprocityConfig d;
      d.conditions = cfg.direct->conditions;
      d.horizon = cfg.direct->horizon;
      d.episodes_per_condition = cfg.direct->episodes;
      d.seed = direct_seed(cfg);
      d.zd = cfg.zd;
      d.matrix = cfg.payoffs;
      d.concurrency = cfg.concurrency;
      const auto episodes = run_direct_reciprocity(cfg.agent, d, ctx);
      std::string text;
      int invalid = 0;
      for (const auto& e : episodes) {
        text += nlohmann::json(e).dump() + '\n';
        retries += e.retries;
        if (!e.valid) ++invalid;
      }
      write_file(at(out_dir, outputs::kDirect), text);
      written.emplace_back(outputs::kDirect);
      counts["direct_episodes"] = episodes.size();
      counts["direct_invalid"] = invalid;
      excluded += invalid;
      seeds["direct"] = d.seed;
    }

    if (cfg.reputation) {
      const auto trials = generate_reputation_trials(trial_seed(cfg));
      write_file(at(out_dir, outputs::kTrials), trials_to_jsonl(trials));
      const auto results = run_reputation(cfg.agent, trials, ctx, cfg.concurrency);
      std::string text;
      int invalid = 0;
      for (const auto& o : results) {
        text += nlohmann::json(o).dump() + '\n';
        retries += o.retries;
        if (!o.valid) ++invalid;
      }
      write_file(at(out_dir, outputs::kOutcomes), text);
      written.emplace_back(outputs::kTrials);
      written.emplace_back(outputs::kOutcomes);
      counts["reputation_trials"] = results.size();
      counts["reputation_invalid"] = invalid;
      excluded += invalid;
      seeds["reputation_trials"] = trials.seed;
    }

    if (cfg.society) {
      AgentContext sctx = ctx;
      sctx.prompt.cross_episode = cfg.society->cross_episode;
      const auto factory = agent_factory(sctx);
      std::string text;
      long dyads = 0;
      int invalid = 0;
      nlohmann::json sseeds = nlohmann::json::object();
      for (double alpha : cfg.society->rc_fractions) {
        SocietyConfig s;
        s.agents = cfg.society->agents;
        s.horizon = cfg.society->horizon;
        s.episodes = cfg.society->episodes;
        s.rc_fraction = alpha;
        s.seed = society_seed(cfg, alpha);
        s.cross_episode = cfg.society->cross_episode;
        s.matrix = cfg.payoffs;
        s.concurrency = cfg.concurrency;
        SocietyLog slog;
        if (cfg.society->members.empty()) {
          slog = run_society(factory, cfg.agent, s);
        } else {
          std::vector<AgentSpec> members;
          for (const auto& m : cfg.society->members) {
            AgentSpec spec = cfg.agent;
            spec.kind = m;
            members.push_back(spec);
          }
          slog = run_society(factory, members, s);
        }
        for (const auto& ep : slog.episodes) {
          for (const auto& d : ep.dyads) {
            ++dyads;
            retries += d.record.retries;
            if (!d.record.valid) ++invalid;
          }
        }
        text += society_to_jsonl(slog);
        sseeds[composition_label(alpha)] = s.seed;
      }
      write_file(at(out_dir, outputs::kSociety), text);
      written.emplace_back(outputs::kSociety);
      counts["society_dyads"] = dyads;
      counts["society_invalid"] = invalid;
      excluded += invalid;
      seeds["society"] = sseeds;
    }

    counts["retries"] = retries;
    counts["excluded"] = excluded;
    nlohmann::json endpoints = nlohmann::json::array();
    if (remote) {
      endpoints.push_back(std::get<RemoteModel>(cfg.agent.kind).endpoint.model_id);
      counts["transcripts"] = ctx.gateway->transcripts().size();
      written.emplace_back(outputs::kTranscripts);
    }

    nlohmann::json manifest = {{"artifact", "sode"},
                               {"version", std::string(kVersion)},
                               {"schema_version", kConfigSchemaVersion},
                               {"config_path", config_path.string()},
                               {"config_sha256", sha256_hex(resolved_text)},
                               {"seed", cfg.seed},
                               {"seeds", seeds},
                               {"agent", describe(cfg.agent)},
                               {"endpoints", endpoints},
                               {"started_at", started},
                               {"finished_at", utc_timestamp()},
                               {"counts", counts},
                               {"outputs", written}};
    write_file(at(out_dir, outputs::kManifest), manifest.dump(2) + '\n');

    log << fmt::format("wrote {} to {}\n", fmt::join(written, ", "), out_dir.string());
    if (excluded > 0) {
      log << fmt::format("partial failure: {} episode(s)/trial(s) excluded, {} retries; "
                         "see failure fields in the JSONL outputs\n",
                         excluded, retries);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    log << "run failed: " << e.what() << '\n';
    return kExitFailure;
  }
}

// ---- report ----------------------------------------------------------------

namespace {

struct RunData {
  nlohmann::json manifest;
  std::optional<std::vector<EpisodeRecord>> direct;
  std::optional<std::vector<ReputationOutcome>> reputation;
  std::optional<std::vector<SocietyLog>> society;
};

RunData load_run(const fs::path& dir) {
  RunData d;
  const auto manifest = at(dir, outputs::kManifest);
  if (!fs::exists(manifest)) throw MissingData(fmt::format("no {} in {}", outputs::kManifest, dir.string()));
  d.manifest = nlohmann::json::parse(read_file(manifest));
  if (fs::exists(at(dir, outputs::kDirect))) {
    std::vector<EpisodeRecord> eps;
    for (const auto& j : read_jsonl(at(dir, outputs::kDirect))) eps.push_back(j.get<EpisodeRecord>());
    d.direct = std::move(eps);
  }
  if (fs::exists(at(dir, outputs::kOutcomes))) {
    std::vector<ReputationOutcome> outs;
    for (const auto& j : read_jsonl(at(dir, outputs::kOutcomes))) {
      outs.push_back(j.get<ReputationOutcome>());
    }
    d.reputation = std::move(outs);
  }
  if (fs::exists(at(dir, outputs::kSociety))) {
    d.society = society_from_jsonl(read_file(at(dir, outputs::kSociety)));
  }
  return d;
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out + '\n';
}

std::string num(double v) { return fmt::format("{}", v); }

void report_metrics(const RunData& d, const fs::path& dir, std::vector<std::string>& files) {
  std::vector<MetricReport> reports;
  if (d.direct) reports.push_back(direct_metrics(*d.direct));
  if (d.reputation) reports.push_back(reputation_metrics(*d.reputation));
  if (d.society) reports.push_back(society_metrics(*d.society));
  if (reports.empty()) throw MissingData("metrics: no experiment data");
  for (const auto& r : reports) {
    const auto name = fmt::format("metrics_{}.json", r.protocol);
    write_file(dir / name, to_json(r).dump(2) + '\n');
    files.push_back(name);
    for (const auto& [file, text] : to_csv_tables(r)) {
      const auto csv = fmt::format("metrics_{}_{}", r.protocol, file);
      write_file(dir / csv, text);
      files.push_back(csv);
    }
  }
}

void report_payoff_plane(const RunData& d, const fs::path& dir, std::vector<std::string>& files) {
  if (!d.direct) throw MissingData("payoff-plane: no direct-reciprocity episodes");
  std::string csv = csv_row({"condition", "episode", "opponent_mean_payoff", "agent_mean_payoff"});
  for (const auto& e : *d.direct) {
    if (!e.valid || e.rounds.empty()) continue;
    double a = 0, b = 0;
    for (const auto& r : e.rounds) {
      a += r.payoff_a;
      b += r.payoff_b;
    }
    const auto n = static_cast<double>(e.rounds.size());
    csv += csv_row({e.condition_tag, std::to_string(e.episode_index), num(b / n), num(a / n)});
  }
  write_file(dir / "payoff_plane.csv", csv);
  files.emplace_back("payoff_plane.csv");
}

void report_trajectories(const RunData& d, const fs::path& dir, std::vector<std::string>& files) {
  if (!d.direct && !d.society) throw MissingData("trajectories: no episode data");
  using K = SliceKey;
  if (d.direct) {
    const auto series = directed_series(*d.direct);
    if (!series.empty()) {
      write_file(dir / "trajectories_direct_round.csv",
                 to_csv(aggregate(series, {K::Condition, K::Round})));
      files.emplace_back("trajectories_direct_round.csv");
    }
  }
  if (d.society) {
    std::vector<DirectedSeries> series;
    for (const auto& log : *d.society) {
      auto s = directed_series(log);
      series.insert(series.end(), s.begin(), s.end());
    }
    if (!series.empty()) {
      write_file(dir / "trajectories_society_round.csv",
                 to_csv(aggregate(series, {K::Composition, K::Round})));
      write_file(dir / "trajectories_society_episode.csv",
                 to_csv(aggregate(series, {K::Composition, K::Episode})));
      write_file(dir / "trajectories_society_role_episode.csv",
                 to_csv(aggregate(series, {K::Composition, K::Role, K::Episode})));
      files.insert(files.end(), {"trajectories_society_round.csv",
                                 "trajectories_society_episode.csv",
                                 "trajectories_society_role_episode.csv"});
    }
  }
}

void report_tau(const RunData& d, const fs::path& dir, std::vector<std::string>& files) {
  if (!d.direct && !d.society) throw MissingData("tau: no episode data");
  using K = SliceKey;
  if (d.society) {
    std::vector<DirectedSeries> series;
    for (const auto& log : *d.society) {
      auto s = directed_series(log);
      series.insert(series.end(), s.begin(), s.end());
    }
    if (!series.empty()) {
      write_file(dir / "tau_society_episode.csv",
                 to_csv(tau_table(series, {K::Composition, K::Episode})));
      write_file(dir / "tau_society_role_episode.csv",
                 to_csv(tau_table(series, {K::Composition, K::Role, K::Episode})));
      files.insert(files.end(), {"tau_society_episode.csv", "tau_society_role_episode.csv"});
    }
  }
  if (d.direct) {
    const auto series = directed_series(*d.direct);
    if (!series.empty()) {
      write_file(dir / "tau_direct_episode.csv",
                 to_csv(tau_table(series, {K::Condition, K::Episode})));
      files.emplace_back("tau_direct_episode.csv");
    }
  }
}

struct TraceTexts {
  std::vector<std::string> reasoning;
  std::vector<std::string> think;
};

void collect(const std::optional<DecisionTrace>& t, TraceTexts& out) {
  if (!t) return;
  out.reasoning.push_back(t->reasoning);
  if (t->think_trace) out.think.push_back(*t->think_trace);
}

void report_lexical(const RunData& d, const fs::path& dir, const KeywordLexicon& lexicon,
                    std::vector<std::string>& files) {
  std::map<std::string, TraceTexts> by_protocol;
  if (d.direct) {
    for (const auto& e : *d.direct) {
      for (const auto& r : e.rounds) collect(r.trace_a, by_protocol["direct"]);
    }
  }
  if (d.reputation) {
    for (const auto& o : *d.reputation) collect(o.trace, by_protocol["reputation"]);
  }
  if (d.society) {
    for (const auto& log : *d.society) {
      for (const auto& ep : log.episodes) {
        for (const auto& dy : ep.dyads) {
          for (const auto& r : dy.record.rounds) {
            collect(r.trace_a, by_protocol["society"]);
            collect(r.trace_b, by_protocol["society"]);
          }
        }
      }
    }
  }
  std::string csv = csv_row({"protocol", "source", "texts", "total_words", "coop_count",
                             "defect_count", "coop_per_100", "defect_per_100", "ratio"});
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [protocol, texts] : by_protocol) {
    std::vector<std::string> both = texts.reasoning;
    both.insert(both.end(), texts.think.begin(), texts.think.end());
    const std::vector<std::pair<std::string, const std::vector<std::string>*>> sources = {
        {"reasoning", &texts.reasoning}, {"think", &texts.think}, {"both", &both}};
    for (const auto& [source, list] : sources) {
      if (list->empty()) continue;
      const auto sig = lexical_signature(*list, lexicon);
      nlohmann::json j = sig;
      j["protocol"] = protocol;
      j["source"] = source;
      j["texts"] = list->size();
      out.push_back(j);
      csv += csv_row({protocol, source, std::to_string(list->size()),
                      std::to_string(sig.total_words), std::to_string(sig.coop_count),
                      std::to_string(sig.defect_count), num(sig.coop_per_100),
                      num(sig.defect_per_100), sig.ratio ? num(*sig.ratio) : std::string()});
    }
  }
  if (out.empty()) throw MissingData("lexical: no reasoning traces (scripted agents leave none)");
  write_file(dir / "lexical.json", out.dump(2) + '\n');
  write_file(dir / "lexical.csv", csv);
  files.insert(files.end(), {"lexical.json", "lexical.csv"});
}

struct ContrastRow {
  std::string family;
  std::string statistic;
  std::size_t n_a = 0, n_b = 0;
  ContrastResult result;
};

void report_contrasts(const RunData& d, const fs::path& dir, std::vector<std::string>& files) {
  const std::uint64_t base = d.manifest.value("seed", std::uint64_t{0});
  std::vector<ContrastRow> rows;
  std::uint64_t next = 0;
  const auto contrast = [&](std::string family, std::string statistic, const std::vector<double>& a,
                            const std::vector<double>& b, std::string la, std::string lb) {
    const auto seed = derive_seed(base, {0x636f6eULL, next++});
    if (a.empty() || b.empty()) return;
    rows.push_back({std::move(family), std::move(statistic), a.size(), b.size(),
                    bayesian_bootstrap_contrast(a, b, kDefaultBootstrapDraws, seed, std::move(la),
                                                std::move(lb))});
  };

  if (d.direct) {
    std::vector<double> gen, ext;
    for (const auto& e : *d.direct) {
      if (!e.valid || e.rounds.empty()) continue;
      const double rate = coop_rate(e.actions(Side::A));
      (regime_of(zd_condition_from_string(e.condition_tag)) == Regime::Generosity ? gen : ext)
          .push_back(rate);
    }
    contrast("direct", "episode_coop_rate", gen, ext, "Gen", "Ext");
  }

  if (d.reputation) {
    std::vector<double> high, low, pub, priv;
    std::map<std::pair<int, Visibility>, std::vector<double>> profile;
    for (const auto& o : *d.reputation) {
      if (!o.valid || o.trial.is_control) continue;
      const double c = o.choice == Action::C ? 1.0 : 0.0;
      const auto level = *o.trial.level();
      if (level == ReputationLevel::High) high.push_back(c);
      if (level == ReputationLevel::Low) low.push_back(c);
      (o.trial.visibility == Visibility::Public ? pub : priv).push_back(c);
      profile[{*o.trial.score, o.trial.visibility}].push_back(c);
    }
    contrast("reputation", "trial_cooperation", high, low, "High", "Low");
    contrast("reputation", "trial_cooperation", pub, priv, "Public", "Private");
    std::string csv = csv_row({"score", "visibility", "trials", "rate", "ci_lo", "ci_hi"});
    std::uint64_t k = 0;
    for (const auto& [key, values] : profile) {
      const auto ci = bootstrap_ci(values, 0.95, kDefaultBootstrapDraws,
                                   derive_seed(base, {0x70726f66ULL, k++}));
      double mean = 0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      csv += csv_row({fmt::format("{:+d}", key.first), std::string(to_string(key.second)),
                      std::to_string(values.size()), num(mean), num(ci.lo), num(ci.hi)});
    }
    write_file(dir / "reputation_profile.csv", csv);
    files.emplace_back("reputation_profile.csv");
  }

  if (d.society) {
    // Per-episode statistics per composition.
    struct Stats {
      std::vector<double> coop, tau;
    };
    std::map<std::string, Stats> by_comp;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_role;
    std::vector<std::string> order;
    for (const auto& log : *d.society) {
      const auto comp = composition_label(log.config.rc_fraction);
      order.push_back(comp);
      const auto series = directed_series(log);
      std::map<int, std::pair<RateCount, std::pair<long, long>>> per_ep;
      std::map<int, std::pair<RateCount, RateCount>> per_ep_role;  // RC, RP
      for (const auto& s : series) {
        auto& [rc, tau] = per_ep[s.episode];
        for (auto a : s.actions) rc.add(a);
        tau.first += first_defection(s.actions, s.horizon);
        tau.second += 1;
        auto& roles = per_ep_role[s.episode];
        for (auto a : s.actions) (s.role == "RC" ? roles.first : roles.second).add(a);
      }
      for (const auto& [g, v] : per_ep) {
        by_comp[comp].coop.push_back(v.first.rate());
        by_comp[comp].tau.push_back(static_cast<double>(v.second.first) / v.second.second);
      }
      for (const auto& [g, v] : per_ep_role) {
        if (v.first.count && v.second.count) {
          by_role[comp].first.push_back(v.first.rate());
          by_role[comp].second.push_back(v.second.rate());
        }
      }
    }
    for (const auto& comp : order) {
      if (by_role.count(comp)) {
        contrast(fmt::format("society {}", comp), "episode_coop_rate", by_role[comp].first,
                 by_role[comp].second, "RC", "RP");
      }
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
      for (std::size_t j = i + 1; j < order.size(); ++j) {
        const auto& a = by_comp[order[j]];
        const auto& b = by_comp[order[i]];
        contrast("society", "episode_coop_rate", a.coop, b.coop, order[j], order[i]);
        contrast("society", "episode_mean_tau", a.tau, b.tau, order[j], order[i]);
      }
    }
  }

  if (rows.empty()) throw MissingData("contrasts: no experiment data with two groups to contrast");
  std::string csv = csv_row({"family", "statistic", "label_a", "label_b", "n_a", "n_b",
                             "median_delta", "p_plus", "p_minus", "draws", "seed"});
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = r.result;
    j["family"] = r.family;
    j["statistic"] = r.statistic;
    j["n_a"] = r.n_a;
    j["n_b"] = r.n_b;
    out.push_back(j);
    csv += csv_row({r.family, r.statistic, r.result.label_a, r.result.label_b,
                    std::to_string(r.n_a), std::to_string(r.n_b), num(r.result.median_delta),
                    num(r.result.p_plus), num(r.result.p_minus), std::to_string(r.result.draws),
                    std::to_string(r.result.seed)});
  }
  write_file(dir / "contrasts.json", out.dump(2) + '\n');
  write_file(dir / "contrasts.csv", csv);
  files.insert(files.end(), {"contrasts.json", "contrasts.csv"});
}

}  // namespace

int cmd_report(const fs::path& out_dir, const std::string& kind, std::ostream& log,
               const std::optional<fs::path>& lexicon_path) {
  const auto& kinds = report_kinds();
  if (kind != "all" && std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
    log << fmt::format("unknown report kind \"{}\" (expected all, {})\n", kind,
                       fmt::join(kinds, ", "));
    return kExitConfigInvalid;
  }
  try {
    const auto data = load_run(out_dir);
    const KeywordLexicon lexicon =
        lexicon_path ? KeywordLexicon::load(*lexicon_path) : KeywordLexicon::defaults();
    const auto dir = out_dir / std::string(outputs::kReports);
    fs::create_directories(dir);
    std::vector<std::string> files;
    std::vector<std::string> missing;
    const auto run_one = [&](const std::string& k) {
      try {
        if (k == "metrics") report_metrics(data, dir, files);
        if (k == "payoff-plane") report_payoff_plane(data, dir, files);
        if (k == "trajectories") report_trajectories(data, dir, files);
        if (k == "tau") report_tau(data, dir, files);
        if (k == "lexical") report_lexical(data, dir, lexicon, files);
        if (k == "contrasts") report_contrasts(data, dir, files);
      } catch (const MissingData& e) {
        missing.push_back(e.what());
      }
    };
    if (kind == "all") {
      for (const auto& k : kinds) run_one(k);
    } else {
      run_one(kind);
    }
    for (const auto& m : missing) log << "missing data: " << m << '\n';
    if (!files.empty()) log << fmt::format("wrote {} report file(s) to {}\n", files.size(), dir.string());
    // "all" only fails when nothing at all could be produced.
    if (files.empty() || (kind != "all" && !missing.empty())) return kExitMissingData;
    return kExitOk;
  } catch (const MissingData& e) {
    log << "missing data: " << e.what() << '\n';
    return kExitMissingData;
  } catch (const std::exception& e) {
    log << "report failed: " << e.what() << '\n';
    return kExitFailure;
  }
}

// ---- gen-trials / validate -------------------------------------------------

int cmd_gen_trials(std::uint64_t seed, const fs::path& out_path, std::ostream& log) {
  try {
    const auto set = generate_reputation_trials(seed);
    check_trial_set(set);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_file(out_path, trials_to_jsonl(set));
    log << fmt::format("wrote {} trials (seed {}) to {}\n", set.trials.size(), seed,
                       out_path.string());
    return kExitOk;
  } catch (const std::exception& e) {
    log << "gen-trials failed: " << e.what() << '\n';
    return kExitFailure;
  }
}

int cmd_validate_config(const fs::path& config_path, std::ostream& log) {
  try {
    const auto cfg = load_config(config_path);
    std::vector<std::string> parts;
    if (cfg.direct) parts.emplace_back("direct");
    if (cfg.reputation) parts.emplace_back("reputation");
    if (cfg.society) parts.emplace_back("society");
    log << fmt::format("{}: ok ({}; agent {})\n", config_path.string(), fmt::join(parts, ", "),
                       describe(cfg.agent));
    return kExitOk;
  } catch (const ConfigInvalid& e) {
    log << e.what() << '\n';
    return kExitConfigInvalid;
  }
}

}  // namespace sode
