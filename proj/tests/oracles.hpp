// Reference computations used by the tests. Nothing here calls into the
// library's own Markov code, so agreement is evidence, not tautology.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sode/rng.hpp"
#include "sode/strategies.hpp"

namespace oracle {

using sode::MemoryOneStrategy;

// Index 0..3 = (x1, x2) with 0 meaning C: CC, CD, DC, DD from player 1.
inline double coop_given(const MemoryOneStrategy& s, int own_d, int other_d) {
  if (!own_d && !other_d) return s.p_cc;
  if (!own_d && other_d) return s.p_cd;
  if (own_d && !other_d) return s.p_dc;
  return s.p_dd;
}

inline Eigen::Matrix4d transition(const MemoryOneStrategy& s1, const MemoryOneStrategy& s2) {
  Eigen::Matrix4d m;
  for (int from = 0; from < 4; ++from) {
    const int d1 = from >> 1, d2 = from & 1;
    const double c1 = coop_given(s1, d1, d2);
    const double c2 = coop_given(s2, d2, d1);
    for (int to = 0; to < 4; ++to) {
      const double q1 = (to >> 1) ? 1 - c1 : c1;
      const double q2 = (to & 1) ? 1 - c2 : c2;
      m(from, to) = q1 * q2;
    }
  }
  return m;
}

inline Eigen::RowVector4d initial(const MemoryOneStrategy& s1, const MemoryOneStrategy& s2) {
  Eigen::RowVector4d v;
  for (int to = 0; to < 4; ++to) {
    v(to) = ((to >> 1) ? 1 - s1.p0 : s1.p0) * ((to & 1) ? 1 - s2.p0 : s2.p0);
  }
  return v;
}

// Cesaro average (1/n) sum_{k<n} P^k by repeated doubling, n = 2^levels.
inline Eigen::RowVector4d cesaro(const MemoryOneStrategy& s1, const MemoryOneStrategy& s2,
                                 int levels = 40) {
  const Eigen::Matrix4d p = transition(s1, s2);
  Eigen::Matrix4d sum = Eigen::Matrix4d::Identity();  // sum of P^k, k < n
  Eigen::Matrix4d pow = p;                            // P^n
  for (int i = 0; i < levels; ++i) {
    sum = sum + pow * sum;
    pow = pow * pow;
    sum /= 2.0;  // keep it an average
    // Rounding in the row sums roughly doubles per squaring; pin them to 1.
    for (int r = 0; r < 4; ++r) {
      pow.row(r) /= pow.row(r).sum();
      sum.row(r) /= sum.row(r).sum();
    }
  }
  return initial(s1, s2) * sum;
}

// Unique stationary vector of an ergodic chain by linear solve.
inline Eigen::RowVector4d stationary_solve(const MemoryOneStrategy& s1,
                                           const MemoryOneStrategy& s2) {
  Eigen::Matrix<double, 5, 4> a;
  a.topRows<4>() = (transition(s1, s2) - Eigen::Matrix4d::Identity()).transpose();
  a.row(4).setOnes();
  Eigen::Matrix<double, 5, 1> b = Eigen::Matrix<double, 5, 1>::Zero();
  b(4) = 1.0;
  Eigen::Vector4d x = a.colPivHouseholderQr().solve(b);
  return x.transpose();
}

// Exact round-averaged distribution over rounds 1..H by enumerating every
// joint path. Only for small H (4^H paths).
inline std::array<double, 4> enumerate_paths(const MemoryOneStrategy& s1,
                                             const MemoryOneStrategy& s2, int horizon) {
  std::array<double, 4> acc{};
  std::function<void(int, int, double)> walk = [&](int round, int prev, double prob) {
    if (round > horizon || prob == 0.0) return;
    for (int to = 0; to < 4; ++to) {
      double c1, c2;
      if (prev < 0) {
        c1 = s1.p0;
        c2 = s2.p0;
      } else {
        c1 = coop_given(s1, prev >> 1, prev & 1);
        c2 = coop_given(s2, prev & 1, prev >> 1);
      }
      const double q = ((to >> 1) ? 1 - c1 : c1) * ((to & 1) ? 1 - c2 : c2);
      if (q == 0.0) continue;
      acc[to] += prob * q;
      walk(round + 1, to, prob * q);
    }
  };
  walk(1, -1, 1.0);
  for (auto& x : acc) x /= horizon;
  return acc;
}

// Forward propagation for larger H.
inline Eigen::RowVector4d horizon_average(const MemoryOneStrategy& s1, const MemoryOneStrategy& s2,
                                          int horizon) {
  const Eigen::Matrix4d p = transition(s1, s2);
  Eigen::RowVector4d v = initial(s1, s2);
  Eigen::RowVector4d acc = Eigen::RowVector4d::Zero();
  for (int t = 0; t < horizon; ++t) {
    acc += v;
    v = v * p;
  }
  return acc / horizon;
}

// Long simulation of two memory-one players. Returns visit frequencies of
// the joint action, player 1 first.
inline std::array<double, 4> simulate(const MemoryOneStrategy& s1, const MemoryOneStrategy& s2,
                                      long rounds, std::uint64_t seed) {
  sode::Rng r1(sode::derive_seed(seed, {0})), r2(sode::derive_seed(seed, {1}));
  std::array<long, 4> counts{};
  std::optional<sode::JointState> prev1, prev2;
  for (long t = 0; t < rounds; ++t) {
    const auto a1 = sode::next_action(s1, prev1, r1);
    const auto a2 = sode::next_action(s2, prev2, r2);
    const auto st = sode::make_joint_state(a1, a2);
    ++counts[static_cast<int>(st)];
    prev1 = st;
    prev2 = sode::make_joint_state(a2, a1);
  }
  std::array<double, 4> f{};
  for (int i = 0; i < 4; ++i) f[i] = static_cast<double>(counts[i]) / rounds;
  return f;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Golden files are stored with a trailing newline the renderer does not emit.
inline std::string golden(const std::string& name) {
  std::string text = read_file(std::string(SODE_GOLDEN_DIR) + "/" + name);
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

}  // namespace oracle
