#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sode/game.hpp"
#include "sode/rng.hpp"

namespace sode {

// Cooperation probabilities of a memory-one player. State labels are from
// the player's own seat: p_cd is P(C | own last move C, other's last move D).
struct MemoryOneStrategy {
  double p0 = 1.0;
  double p_cc = 1.0;
  double p_cd = 1.0;
  double p_dc = 1.0;
  double p_dd = 1.0;

  double p(JointState s) const;

  friend bool operator==(const MemoryOneStrategy&, const MemoryOneStrategy&) = default;
};

// Throws std::invalid_argument when any probability is outside [0, 1].
void validate(const MemoryOneStrategy& s);

void to_json(nlohmann::json& j, const MemoryOneStrategy& s);
void from_json(const nlohmann::json& j, MemoryOneStrategy& s);

enum class ZDCondition { ES, EM, GM, GS };
enum class Regime { Extortion, Generosity };

inline constexpr ZDCondition kAllZDConditions[] = {ZDCondition::ES, ZDCondition::EM,
                                                   ZDCondition::GM, ZDCondition::GS};

Regime regime_of(ZDCondition c);
std::string_view to_string(ZDCondition c);
std::string_view to_string(Regime r);
ZDCondition zd_condition_from_string(std::string_view s);
Regime regime_from_string(std::string_view s);

// Parameter table for the four ZD opponents. The default instance holds the
// reference values; alternative tables can be loaded from JSON of the form
//   {"ES": {"p0": 0, "pCC": 0.692, "pCD": 0, "pDC": 0.538, "pDD": 0}, ...}
// with all four conditions present.
class ZdTable {
 public:
  ZdTable();
  static ZdTable from_json(const nlohmann::json& j);
  static ZdTable load(const std::string& path);

  const MemoryOneStrategy& operator[](ZDCondition c) const {
    return params_[static_cast<std::size_t>(c)];
  }

  nlohmann::json to_json() const;

 private:
  std::array<MemoryOneStrategy, 4> params_;
};

MemoryOneStrategy zd_params(ZDCondition c);

// prev_state is the previous round labeled from this strategy's own seat;
// empty on round 1.
Action next_action(const MemoryOneStrategy& s, std::optional<JointState> prev_state, Rng& rng);

enum class ScriptedKind {
  AllC,
  AllD,
  TitForTat,
  Grim,
  RandomP,
  MemoryOne,
  // Reputation probes; they act only on single-round reputation trials.
  ScoreThreshold,      // C iff opponent score >= 0, D on control
  ScoreAntiThreshold,  // C iff opponent score < 0, D on control
  PublicCooperator,    // C iff the trial is public
};

struct ScriptedStrategy {
  ScriptedKind kind = ScriptedKind::AllC;
  double p = 0.5;                 // RandomP
  MemoryOneStrategy memory_one{};  // MemoryOne

  static ScriptedStrategy all_c() { return {ScriptedKind::AllC}; }
  static ScriptedStrategy all_d() { return {ScriptedKind::AllD}; }
  static ScriptedStrategy tit_for_tat() { return {ScriptedKind::TitForTat}; }
  static ScriptedStrategy grim() { return {ScriptedKind::Grim}; }
  static ScriptedStrategy random_p(double p) { return {ScriptedKind::RandomP, p}; }
  static ScriptedStrategy memory(const MemoryOneStrategy& m) {
    return {ScriptedKind::MemoryOne, 0.5, m};
  }

  friend bool operator==(const ScriptedStrategy&, const ScriptedStrategy&) = default;
};

std::string_view to_string(ScriptedKind k);
ScriptedKind scripted_kind_from_string(std::string_view s);
std::string describe(const ScriptedStrategy& s);

// Memory-one form of a scripted strategy, when one exists (GRIM and the
// reputation probes have none).
std::optional<MemoryOneStrategy> as_memory_one(const ScriptedStrategy& s);

namespace memory_one {
inline constexpr MemoryOneStrategy kAllC{1, 1, 1, 1, 1};
inline constexpr MemoryOneStrategy kAllD{0, 0, 0, 0, 0};
inline constexpr MemoryOneStrategy kTitForTat{1, 1, 0, 1, 0};
constexpr MemoryOneStrategy random_p(double p) { return {p, p, p, p, p}; }
}  // namespace memory_one

class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Distribution over the joint action played in a round, from player 1's
// seat, indexed by JointState (CC, CD, DC, DD).
using StateDistribution = std::array<double, 4>;

// Exact 4x4 transition matrix of the joint-action chain induced by two
// memory-one players, rows/columns indexed from player 1's seat.
std::array<std::array<double, 4>, 4> transition_matrix(const MemoryOneStrategy& s1,
                                                       const MemoryOneStrategy& s2);
StateDistribution initial_distribution(const MemoryOneStrategy& s1, const MemoryOneStrategy& s2);

struct StationaryOptions {
  double tolerance = 1e-12;
  long max_iterations = 200;  // matrix squarings
};

// Long-run (Cesaro) average distribution of the joint action, started from the
// round-1 action distribution. Handles absorbing, reducible and periodic
// chains alike. Throws NonConvergence when the iteration budget runs out.
StateDistribution stationary_distribution(const MemoryOneStrategy& s1,
                                          const MemoryOneStrategy& s2,
                                          const StationaryOptions& options = {});

// Exact expected distribution of the joint action averaged over rounds 1..H.
StateDistribution horizon_average_distribution(const MemoryOneStrategy& s1,
                                               const MemoryOneStrategy& s2, int horizon);

struct ExpectedPayoffs {
  double v1 = 0.0;
  double v2 = 0.0;
};

ExpectedPayoffs payoffs_under(const StateDistribution& d, const PayoffMatrix& matrix);

// Long-run per-round payoffs. Propagates NonConvergence.
ExpectedPayoffs expected_payoffs(const MemoryOneStrategy& s1, const MemoryOneStrategy& s2,
                                 const PayoffMatrix& matrix = {});

// Expected per-round payoffs averaged over a finite episode of H rounds.
ExpectedPayoffs expected_payoffs(const MemoryOneStrategy& s1, const MemoryOneStrategy& s2,
                                 const PayoffMatrix& matrix, int horizon);

// Probability that player 1 (resp. 2) cooperates under d.
inline double coop_probability_1(const StateDistribution& d) { return d[0] + d[1]; }
inline double coop_probability_2(const StateDistribution& d) { return d[0] + d[2]; }

}  // namespace sode
