#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sode {

class EmptyGroup : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kDefaultBootstrapDraws = 10'000;
inline constexpr int kMinBootstrapDraws = 1000;

struct ContrastResult {
  double median_delta = 0.0;
  double p_plus = 0.0;   // share of draws with delta > 0 (ties excluded)
  double p_minus = 0.0;  // share of draws with delta < 0
  int draws = 0;
  std::uint64_t seed = 0;
  std::string label_a = "A";
  std::string label_b = "B";
};

void to_json(nlohmann::json& j, const ContrastResult& r);

// Bayesian bootstrap of mean(A) - mean(B) with flat Dirichlet weights on each
// group's units. Swapping the groups negates every draw exactly.
ContrastResult bayesian_bootstrap_contrast(std::span<const double> a, std::span<const double> b,
                                           int draws = kDefaultBootstrapDraws,
                                           std::uint64_t seed = 0, std::string label_a = "A",
                                           std::string label_b = "B");

// The raw posterior draws behind the contrast, in draw order.
std::vector<double> bayesian_bootstrap_draws(std::span<const double> a, std::span<const double> b,
                                             int draws, std::uint64_t seed);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

// Percentile interval of resampled means.
Interval bootstrap_ci(std::span<const double> values, double level = 0.95,
                      int draws = kDefaultBootstrapDraws, std::uint64_t seed = 0);

// Linear interpolation between order statistics (sorted input, q in [0,1]).
double quantile_sorted(std::span<const double> sorted, double q);
double median(std::vector<double> values);

struct KeywordLexicon {
  std::vector<std::string> coop_terms;
  std::vector<std::string> defect_terms;

  static KeywordLexicon defaults();
  // Plain text: a "[coop]" and a "[defect]" header, one phrase per line
  // below each; blank lines and lines starting with '#' are skipped.
  static KeywordLexicon parse(std::string_view text);
  static KeywordLexicon load(const std::filesystem::path& path);

  friend bool operator==(const KeywordLexicon&, const KeywordLexicon&) = default;
};

struct LexicalSignature {
  long coop_count = 0;
  long defect_count = 0;
  long total_words = 0;
  double coop_per_100 = 0.0;
  double defect_per_100 = 0.0;
  std::optional<double> ratio;  // empty when defect_per_100 == 0
};

void to_json(nlohmann::json& j, const LexicalSignature& s);

// Lower-cased tokens. Splits on whitespace and punctuation; a hyphen between
// two word characters stays inside the token ("win-win").
std::vector<std::string> tokenize(std::string_view text);

LexicalSignature lexical_signature(const std::vector<std::string>& texts,
                                   const KeywordLexicon& lexicon = KeywordLexicon::defaults());

}  // namespace sode
