#include "sode/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "sode/rng.hpp"

namespace sode {

void to_json(nlohmann::json& j, const ContrastResult& r) {
  j = {{"label_a", r.label_a}, {"label_b", r.label_b}, {"median_delta", r.median_delta},
       {"p_plus", r.p_plus},   {"p_minus", r.p_minus}, {"draws", r.draws},
       {"seed", r.seed}};
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw EmptyGroup("quantile of an empty list");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double median(std::vector<double> values) {
  if (values.empty()) throw EmptyGroup("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

namespace {

// Weighted mean written relative to the first element, so a constant group
// returns its constant exactly.
double weighted_mean(std::span<const double> x, Rng& rng) {
  double wsum = 0.0, acc = 0.0;
  for (double v : x) {
    // Normalized unit exponentials are flat Dirichlet weights.
    const double w = -std::log1p(-rng.uniform01());
    wsum += w;
    acc += w * (v - x[0]);
  }
  return x[0] + acc / wsum;
}

// Groups draw their weights in a canonical order so that (A, B) and (B, A)
// see identical weights per group.
bool canonical_first(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return !std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

std::vector<double> bayesian_bootstrap_draws(std::span<const double> a, std::span<const double> b,
                                             int draws, std::uint64_t seed) {
  if (a.empty() || b.empty()) throw EmptyGroup("bootstrap contrast needs two non-empty groups");
  if (draws < 1) throw std::invalid_argument("draws must be >= 1");
  const bool a_first = canonical_first(a, b);
  std::vector<double> out(static_cast<std::size_t>(draws));
  for (int d = 0; d < draws; ++d) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(d)}));
    double ma, mb;
    if (a_first) {
      ma = weighted_mean(a, rng);
      mb = weighted_mean(b, rng);
    } else {
      mb = weighted_mean(b, rng);
      ma = weighted_mean(a, rng);
    }
    out[static_cast<std::size_t>(d)] = ma - mb;
  }
  return out;
}

ContrastResult bayesian_bootstrap_contrast(std::span<const double> a, std::span<const double> b,
                                           int draws, std::uint64_t seed, std::string label_a,
                                           std::string label_b) {
  if (draws < kMinBootstrapDraws) {
    throw std::invalid_argument(fmt::format("draws must be >= {}", kMinBootstrapDraws));
  }
  auto deltas = bayesian_bootstrap_draws(a, b, draws, seed);
  ContrastResult r;
  r.draws = draws;
  r.seed = seed;
  r.label_a = std::move(label_a);
  r.label_b = std::move(label_b);
  long plus = 0, minus = 0;
  for (double d : deltas) {
    if (d > 0) ++plus;
    if (d < 0) ++minus;
  }
  r.p_plus = static_cast<double>(plus) / draws;
  r.p_minus = static_cast<double>(minus) / draws;
  r.median_delta = median(std::move(deltas));
  return r;
}

Interval bootstrap_ci(std::span<const double> values, double level, int draws,
                      std::uint64_t seed) {
  if (values.empty()) throw EmptyGroup("bootstrap interval of an empty list");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
  if (draws < 1) throw std::invalid_argument("draws must be >= 1");
  const std::size_t n = values.size();
  std::vector<double> means(static_cast<std::size_t>(draws));
  for (int d = 0; d < draws; ++d) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(d)}));
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += values[rng.below(n)] - values[0];
    means[static_cast<std::size_t>(d)] = values[0] + acc / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(means, tail), quantile_sorted(means, 1.0 - tail)};
}

// ---- lexical signatures ----------------------------------------------------

void to_json(nlohmann::json& j, const LexicalSignature& s) {
  j = {{"coop_count", s.coop_count},
       {"defect_count", s.defect_count},
       {"total_words", s.total_words},
       {"coop_per_100", s.coop_per_100},
       {"defect_per_100", s.defect_per_100},
       {"ratio", s.ratio ? nlohmann::json(*s.ratio) : nlohmann::json(nullptr)}};
}

KeywordLexicon KeywordLexicon::defaults() {
  return {{"cooperation", "cooperate", "mutual", "trust", "help", "reciprocity", "together",
           "align", "fair", "win-win", "support"},
          {"defect", "defection", "exploit", "take advantage", "betray", "betrayal", "trick",
           "selfish", "manipulate", "cheat"}};
}

KeywordLexicon KeywordLexicon::parse(std::string_view text) {
  KeywordLexicon lex;
  std::vector<std::string>* target = nullptr;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    if (line[0] == '#') continue;
    if (line == "[coop]") {
      target = &lex.coop_terms;
    } else if (line == "[defect]") {
      target = &lex.defect_terms;
    } else if (!target) {
      throw std::invalid_argument(
          fmt::format("lexicon line {}: phrase before any [coop]/[defect] header", lineno));
    } else {
      std::transform(line.begin(), line.end(), line.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      target->push_back(line);
    }
  }
  if (lex.coop_terms.empty() || lex.defect_terms.empty()) {
    throw std::invalid_argument("lexicon needs at least one coop and one defect phrase");
  }
  return lex;
}

KeywordLexicon KeywordLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot read lexicon {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

namespace {

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '\'' ||
         static_cast<unsigned char>(c) >= 0x80;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (word_char(c) && c != '\'') {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if ((c == '-' || c == '\'') && !cur.empty() && i + 1 < text.size() &&
               word_char(text[i + 1]) && text[i + 1] != '\'') {
      cur += c;
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

namespace {

long count_phrases(const std::vector<std::string>& tokens,
                   const std::vector<std::vector<std::string>>& phrases) {
  long n = 0;
  for (const auto& p : phrases) {
    if (p.empty() || p.size() > tokens.size()) continue;
    for (std::size_t i = 0; i + p.size() <= tokens.size(); ++i) {
      if (std::equal(p.begin(), p.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) ++n;
    }
  }
  return n;
}

std::vector<std::vector<std::string>> tokenized(const std::vector<std::string>& terms) {
  std::vector<std::vector<std::string>> out;
  for (const auto& t : terms) out.push_back(tokenize(t));
  return out;
}

}  // namespace

LexicalSignature lexical_signature(const std::vector<std::string>& texts,
                                   const KeywordLexicon& lexicon) {
  if (texts.empty()) throw EmptyGroup("lexical signature of no texts");
  const auto coop = tokenized(lexicon.coop_terms);
  const auto defect = tokenized(lexicon.defect_terms);
  LexicalSignature s;
  // Texts are matched one at a time so phrases never straddle two texts.
  for (const auto& t : texts) {
    const auto tokens = tokenize(t);
    s.total_words += static_cast<long>(tokens.size());
    s.coop_count += count_phrases(tokens, coop);
    s.defect_count += count_phrases(tokens, defect);
  }
  if (s.total_words > 0) {
    s.coop_per_100 = 100.0 * static_cast<double>(s.coop_count) / static_cast<double>(s.total_words);
    s.defect_per_100 =
        100.0 * static_cast<double>(s.defect_count) / static_cast<double>(s.total_words);
  }
  if (s.defect_per_100 > 0) s.ratio = s.coop_per_100 / s.defect_per_100;
  return s;
}

}  // namespace sode
