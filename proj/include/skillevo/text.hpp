#pragma once

// Text utilities shared by the sanitizer, the oracle and the estimators:
// normalization, tokenization, directive matching and stable hashing.

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace skillevo {

// Lower-cases and replaces every character that is not alphanumeric, '_', '/',
// '.' or '-' with a space, then collapses whitespace.
std::string normalize_text(std::string_view text);

// Case-folded word tokens of the normalized text.
std::vector<std::string> word_tokens(std::string_view text);
std::set<std::string> token_set(std::string_view text);

// Tokens of length >= 3 that are not stopwords.
std::set<std::string> keyword_set(std::string_view text);

// Token-set Jaccard similarity; 1.0 when both sides are empty.
double jaccard_similarity(std::string_view a, std::string_view b);

// True when the text carries a negation ("do not", "never", "avoid", ...).
bool is_negated(std::string_view text);

std::vector<std::string> split_lines(std::string_view text);
std::string join_lines(const std::vector<std::string>& lines);
std::string trim(std::string_view text);
bool contains_icase(std::string_view haystack, std::string_view needle);
// Removes every case-insensitive occurrence of each needle until none remain.
std::string scrub(std::string text, const std::vector<std::string>& needles);

// Heuristic path-like tokens: contain '/' or end in a known source/doc extension.
std::vector<std::string> path_tokens(std::string_view text);

// Directive-level semantic match. The default implementation is normalized
// substring matching with a keyword-overlap fallback on single lines.
class Matcher {
 public:
  virtual ~Matcher() = default;
  // Does `body` contain `directive`?
  virtual bool contains(std::string_view body, std::string_view directive) const = 0;
  // Does this single line express `directive` (ignoring polarity)?
  virtual bool line_matches(std::string_view line, std::string_view directive) const = 0;
};

class KeywordMatcher final : public Matcher {
 public:
  explicit KeywordMatcher(double min_overlap = 0.8) : min_overlap_(min_overlap) {}

  bool contains(std::string_view body, std::string_view directive) const override;
  bool line_matches(std::string_view line, std::string_view directive) const override;

 private:
  double min_overlap_;
};

const Matcher& default_matcher();

// Hex SHA-256 of the input.
std::string sha256_hex(std::string_view data);
// First 8 bytes of SHA-256 over the parts joined with a separator.
std::uint64_t stable_seed(std::initializer_list<std::string_view> parts);

// Counter-based deterministic generator (splitmix64); portable across standard
// libraries, unlike the <random> distributions.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  // Uniform in [0, 1).
  double uniform();
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

}  // namespace skillevo
