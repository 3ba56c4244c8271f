#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sode/experiments.hpp"
#include "sode/game.hpp"

namespace sode {

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class EmptySlice : public MetricError {
 public:
  using MetricError::MetricError;
};
class MissingRegime : public MetricError {
 public:
  using MetricError::MetricError;
};
class UndefinedDrop : public MetricError {
 public:
  using MetricError::MetricError;
};
class MissingLevel : public MetricError {
 public:
  using MetricError::MetricError;
};
class MissingCondition : public MetricError {
 public:
  using MetricError::MetricError;
};

struct RateCount {
  long coop = 0;
  long count = 0;
  double rate() const;  // throws EmptySlice when count == 0
  void add(Action a) {
    ++count;
    if (a == Action::C) ++coop;
  }
  friend bool operator==(const RateCount&, const RateCount&) = default;
};

double coop_rate(std::span<const Action> actions);
RateCount count_actions(std::span<const Action> actions);

// One player's moves toward one partner over one episode.
struct DirectedSeries {
  std::string condition;    // ZD tag for the direct protocol, empty otherwise
  std::string composition;  // RC share label for societies, e.g. "40%"
  std::string role;         // RP / RC for societies
  int episode = 1;
  int actor = 0;
  int partner = 1;
  int horizon = 0;
  std::vector<Action> actions;
  std::vector<Action> partner_actions;
};

// Valid episodes only, seen from `agent`. `excluded` receives the number of
// invalid episodes skipped.
std::vector<DirectedSeries> directed_series(const std::vector<EpisodeRecord>& episodes,
                                            Side agent = Side::A, int* excluded = nullptr);
// Both directions of every valid dyad.
std::vector<DirectedSeries> directed_series(const SocietyLog& log, int* excluded = nullptr);

std::string composition_label(double rc_fraction);

struct RegimeDiscrimination {
  double pooled = 0.0;             // pooled generous rate minus pooled extortion rate
  double per_episode_mean = 0.0;   // same with unweighted per-episode means
  RateCount generous;
  RateCount extortion;
};

RegimeDiscrimination regime_discrimination(const std::vector<EpisodeRecord>& episodes,
                                           Side agent = Side::A);

struct ConditionalTable {
  std::array<RateCount, 4> cells{};  // indexed by the agent-first prior state
  const RateCount& operator[](JointState s) const { return cells[static_cast<std::size_t>(s)]; }
  std::optional<double> rate(JointState s) const;
};

ConditionalTable conditional_cooperation(const std::vector<DirectedSeries>& series);
ConditionalTable conditional_cooperation(const std::vector<EpisodeRecord>& episodes,
                                         Side agent = Side::A);
// p(C | CC) - p(C | CD). Throws UndefinedDrop when either cell is empty.
double rho_drop(const ConditionalTable& table);

struct ReputationGradient {
  double g_rep = 0.0;
  RateCount high;
  RateCount low;
  // Same contrast within one visibility; empty when a level is missing there.
  std::map<Visibility, std::optional<double>> by_visibility;
};

ReputationGradient reputation_gradient(const std::vector<ReputationOutcome>& outcomes);

struct ObservabilityEffect {
  double e_omega = 0.0;
  RateCount public_trials;
  RateCount private_trials;
  std::optional<double> control_rate;
  RateCount control;
};

ObservabilityEffect observability_effect(const std::vector<ReputationOutcome>& outcomes);

// First round in which `actor` defects, H + 1 when it never does.
int first_defection(const EpisodeRecord& episode, Side actor);
int first_defection(std::span<const Action> actions, int horizon);

enum class SliceKey { Condition, Composition, Role, Episode, Round };
std::string_view to_string(SliceKey k);

struct SliceRow {
  std::vector<std::string> values;  // one per key
  RateCount counts;
  double rate = 0.0;
};
struct SliceTable {
  std::vector<std::string> keys;
  std::vector<SliceRow> rows;
};

// Cooperation by slice. Rows are sorted by key (numeric keys numerically).
SliceTable aggregate(const std::vector<DirectedSeries>& series, const std::vector<SliceKey>& keys);

struct TauRecord {
  std::string condition;
  std::string composition;
  int episode = 1;
  int actor = 0;
  int partner = 1;
  int tau = 1;
};
std::vector<TauRecord> tau_records(const std::vector<DirectedSeries>& series);

struct TauRow {
  std::vector<std::string> values;
  double mean_tau = 0.0;
  long pairs = 0;
};
struct TauTable {
  std::vector<std::string> keys;
  std::vector<TauRow> rows;
};
// Mean tau over directed pairs per slice. SliceKey::Round is not allowed.
TauTable tau_table(const std::vector<DirectedSeries>& series, const std::vector<SliceKey>& keys);

struct MetricReport {
  std::string protocol;  // direct | reputation | society
  std::map<std::string, SliceTable> p_hat_by_slice;
  std::optional<RegimeDiscrimination> delta_reg;
  std::optional<ConditionalTable> conditional_table;
  std::optional<double> rho_drop;
  std::optional<ReputationGradient> g_rep;
  std::optional<ObservabilityEffect> e_omega;
  std::vector<TauRecord> tau_records;
  std::map<std::string, TauTable> tau_by_slice;
  int excluded_count = 0;
  int retries = 0;
  std::vector<std::string> notes;  // metrics left undefined, and why
};

MetricReport direct_metrics(const std::vector<EpisodeRecord>& episodes);
MetricReport reputation_metrics(const std::vector<ReputationOutcome>& outcomes);
MetricReport society_metrics(const std::vector<SocietyLog>& logs);

nlohmann::json to_json(const MetricReport& r);
// File name -> CSV text, one row per slice.
std::map<std::string, std::string> to_csv_tables(const MetricReport& r);

std::string to_csv(const SliceTable& t);
std::string to_csv(const TauTable& t);

}  // namespace sode
