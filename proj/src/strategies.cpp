#include "sode/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

namespace sode {

double MemoryOneStrategy::p(JointState s) const {
  switch (s) {
    case JointState::CC: return p_cc;
    case JointState::CD: return p_cd;
    case JointState::DC: return p_dc;
    case JointState::DD: return p_dd;
  }
  return 0.0;
}

void validate(const MemoryOneStrategy& s) {
  for (double v : {s.p0, s.p_cc, s.p_cd, s.p_dc, s.p_dd}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument(fmt::format("memory-one probability {} outside [0,1]", v));
    }
  }
}

void to_json(nlohmann::json& j, const MemoryOneStrategy& s) {
  j = {{"p0", s.p0}, {"pCC", s.p_cc}, {"pCD", s.p_cd}, {"pDC", s.p_dc}, {"pDD", s.p_dd}};
}

void from_json(const nlohmann::json& j, MemoryOneStrategy& s) {
  if (j.is_array()) {
    if (j.size() != 5) throw std::invalid_argument("memory-one vector needs 5 entries");
    s = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>(),
         j[4].get<double>()};
  } else {
    s = {j.at("p0").get<double>(), j.at("pCC").get<double>(), j.at("pCD").get<double>(),
         j.at("pDC").get<double>(), j.at("pDD").get<double>()};
  }
  validate(s);
}

Regime regime_of(ZDCondition c) {
  return (c == ZDCondition::ES || c == ZDCondition::EM) ? Regime::Extortion : Regime::Generosity;
}

std::string_view to_string(ZDCondition c) {
  switch (c) {
    case ZDCondition::ES: return "ES";
    case ZDCondition::EM: return "EM";
    case ZDCondition::GM: return "GM";
    case ZDCondition::GS: return "GS";
  }
  return "??";
}

std::string_view to_string(Regime r) {
  return r == Regime::Extortion ? "Extortion" : "Generosity";
}

ZDCondition zd_condition_from_string(std::string_view s) {
  for (auto c : kAllZDConditions) {
    if (to_string(c) == s) return c;
  }
  throw std::invalid_argument(fmt::format("unknown ZD condition \"{}\"", s));
}

Regime regime_from_string(std::string_view s) {
  if (s == "Extortion") return Regime::Extortion;
  if (s == "Generosity") return Regime::Generosity;
  throw std::invalid_argument(fmt::format("unknown regime \"{}\"", s));
}

ZdTable::ZdTable()
    : params_{{
          {0.000, 0.692, 0.000, 0.538, 0.000},  // ES
          {0.000, 0.857, 0.000, 0.786, 0.000},  // EM
          {1.000, 1.000, 0.077, 1.000, 0.154},  // GM
          {1.000, 1.000, 0.182, 1.000, 0.364},  // GS
      }} {}

ZdTable ZdTable::from_json(const nlohmann::json& j) {
  ZdTable table;
  for (auto c : kAllZDConditions) {
    const std::string key(to_string(c));
    if (!j.contains(key)) throw std::invalid_argument(fmt::format("ZD table is missing {}", key));
    table.params_[static_cast<std::size_t>(c)] = j.at(key).get<MemoryOneStrategy>();
  }
  for (const auto& [key, _] : j.items()) zd_condition_from_string(key);
  return table;
}

ZdTable ZdTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open ZD parameter file {}", path));
  return from_json(nlohmann::json::parse(in));
}

nlohmann::json ZdTable::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (auto c : kAllZDConditions) j[std::string(to_string(c))] = (*this)[c];
  return j;
}

MemoryOneStrategy zd_params(ZDCondition c) {
  static const ZdTable table;
  return table[c];
}

Action next_action(const MemoryOneStrategy& s, std::optional<JointState> prev, Rng& rng) {
  const double p = prev ? s.p(*prev) : s.p0;
  return rng.bernoulli(p) ? Action::C : Action::D;
}

std::string_view to_string(ScriptedKind k) {
  switch (k) {
    case ScriptedKind::AllC: return "ALLC";
    case ScriptedKind::AllD: return "ALLD";
    case ScriptedKind::TitForTat: return "TFT";
    case ScriptedKind::Grim: return "GRIM";
    case ScriptedKind::RandomP: return "RandomP";
    case ScriptedKind::MemoryOne: return "MemoryOne";
    case ScriptedKind::ScoreThreshold: return "ScoreThreshold";
    case ScriptedKind::ScoreAntiThreshold: return "ScoreAntiThreshold";
    case ScriptedKind::PublicCooperator: return "PublicCooperator";
  }
  return "??";
}

ScriptedKind scripted_kind_from_string(std::string_view s) {
  for (auto k : {ScriptedKind::AllC, ScriptedKind::AllD, ScriptedKind::TitForTat,
                 ScriptedKind::Grim, ScriptedKind::RandomP, ScriptedKind::MemoryOne,
                 ScriptedKind::ScoreThreshold, ScriptedKind::ScoreAntiThreshold,
                 ScriptedKind::PublicCooperator}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument(fmt::format("unknown scripted strategy \"{}\"", s));
}

std::string describe(const ScriptedStrategy& s) {
  switch (s.kind) {
    case ScriptedKind::RandomP: return fmt::format("RandomP({})", s.p);
    case ScriptedKind::MemoryOne: {
      const auto& m = s.memory_one;
      return fmt::format("MemoryOne({},{},{},{},{})", m.p0, m.p_cc, m.p_cd, m.p_dc, m.p_dd);
    }
    default: return std::string(to_string(s.kind));
  }
}

std::optional<MemoryOneStrategy> as_memory_one(const ScriptedStrategy& s) {
  switch (s.kind) {
    case ScriptedKind::AllC: return memory_one::kAllC;
    case ScriptedKind::AllD: return memory_one::kAllD;
    case ScriptedKind::TitForTat: return memory_one::kTitForTat;
    case ScriptedKind::RandomP: return memory_one::random_p(s.p);
    case ScriptedKind::MemoryOne: return s.memory_one;
    default: return std::nullopt;
  }
}

std::array<std::array<double, 4>, 4> transition_matrix(const MemoryOneStrategy& s1,
                                                       const MemoryOneStrategy& s2) {
  std::array<std::array<double, 4>, 4> m{};
  for (auto from : kAllJointStates) {
    const double c1 = s1.p(from);
    const double c2 = s2.p(swap_perspective(from));
    for (auto to : kAllJointStates) {
      const double q1 = own_action(to) == Action::C ? c1 : 1.0 - c1;
      const double q2 = other_action(to) == Action::C ? c2 : 1.0 - c2;
      m[static_cast<int>(from)][static_cast<int>(to)] = q1 * q2;
    }
  }
  return m;
}

StateDistribution initial_distribution(const MemoryOneStrategy& s1, const MemoryOneStrategy& s2) {
  StateDistribution d{};
  for (auto s : kAllJointStates) {
    const double q1 = own_action(s) == Action::C ? s1.p0 : 1.0 - s1.p0;
    const double q2 = other_action(s) == Action::C ? s2.p0 : 1.0 - s2.p0;
    d[static_cast<int>(s)] = q1 * q2;
  }
  return d;
}

namespace {

StateDistribution step(const StateDistribution& v, const std::array<std::array<double, 4>, 4>& m) {
  StateDistribution out{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) out[j] += v[i] * m[i][j];
  }
  return out;
}

}  // namespace

StateDistribution stationary_distribution(const MemoryOneStrategy& s1,
                                          const MemoryOneStrategy& s2,
                                          const StationaryOptions& options) {
  validate(s1);
  validate(s2);
  // The lazy chain (I + M) / 2 has the same Cesaro limit as M from any start,
  // and its powers converge because the other unit-circle eigenvalues are
  // pulled strictly inside. Repeated squaring reaches M^(2^k) in k steps.
  using Mat = std::array<std::array<double, 4>, 4>;
  Mat m = transition_matrix(s1, s2);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) m[i][j] = 0.5 * m[i][j] + (i == j ? 0.5 : 0.0);
  }
  const auto square = [](const Mat& a) {
    Mat out{};
    for (int i = 0; i < 4; ++i) {
      for (int k = 0; k < 4; ++k) {
        for (int j = 0; j < 4; ++j) out[i][j] += a[i][k] * a[k][j];
      }
      // Renormalize so rounding in the row sums does not compound.
      const double total = out[i][0] + out[i][1] + out[i][2] + out[i][3];
      for (auto& x : out[i]) x /= total;
    }
    return out;
  };
  const StateDistribution v0 = initial_distribution(s1, s2);
  for (long it = 0; it < options.max_iterations; ++it) {
    const Mat next = square(m);
    double diff = 0.0;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) diff = std::max(diff, std::abs(next[i][j] - m[i][j]));
    }
    m = next;
    if (diff < options.tolerance) {
      StateDistribution v = step(v0, m);
      double total = v[0] + v[1] + v[2] + v[3];
      for (auto& x : v) x /= total;
      return v;
    }
  }
  throw NonConvergence(fmt::format("stationary distribution did not converge in {} squarings",
                                   options.max_iterations));
}

StateDistribution horizon_average_distribution(const MemoryOneStrategy& s1,
                                               const MemoryOneStrategy& s2, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  validate(s1);
  validate(s2);
  const auto m = transition_matrix(s1, s2);
  StateDistribution v = initial_distribution(s1, s2);
  StateDistribution acc{};
  for (int t = 1; t <= horizon; ++t) {
    for (int k = 0; k < 4; ++k) acc[k] += v[k];
    if (t < horizon) v = step(v, m);
  }
  for (auto& x : acc) x /= horizon;
  return acc;
}

ExpectedPayoffs payoffs_under(const StateDistribution& d, const PayoffMatrix& matrix) {
  ExpectedPayoffs out;
  for (auto s : kAllJointStates) {
    const double w = d[static_cast<int>(s)];
    out.v1 += w * payoff(matrix, own_action(s), other_action(s));
    out.v2 += w * payoff(matrix, other_action(s), own_action(s));
  }
  return out;
}

ExpectedPayoffs expected_payoffs(const MemoryOneStrategy& s1, const MemoryOneStrategy& s2,
                                 const PayoffMatrix& matrix) {
  return payoffs_under(stationary_distribution(s1, s2), matrix);
}

ExpectedPayoffs expected_payoffs(const MemoryOneStrategy& s1, const MemoryOneStrategy& s2,
                                 const PayoffMatrix& matrix, int horizon) {
  return payoffs_under(horizon_average_distribution(s1, s2, horizon), matrix);
}

}  // namespace sode
