#include "skillevo/text.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace skillevo {
namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> kWords = {
      "the",  "and",  "for",  "with", "that", "this", "are",  "was",  "from", "into",
      "only", "then", "than", "when", "each", "every", "all", "any", "its",  "use",
      "using", "not", "don", "never", "avoid", "before", "after", "over", "onto", "via",
      "you",  "your", "but",  "also", "per",  "such", "their", "there", "these", "those",
      "does", "doesn", "should", "must", "will", "can", "may", "have", "has", "been"};
  return kWords;
}

bool is_token_char(unsigned char c) {
  return std::isalnum(c) != 0 || c == '_' || c == '/' || c == '.' || c == '-';
}

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (is_token_char(c)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending_space = true;
    }
  }
  // Sentence punctuation glued to a word ("edits.") is not part of the token.
  std::string cleaned;
  cleaned.reserve(out.size());
  std::istringstream in(out);
  std::string word;
  while (in >> word) {
    while (!word.empty() && (word.back() == '.' || word.back() == '-')) word.pop_back();
    while (!word.empty() && (word.front() == '.' || word.front() == '-')) word.erase(0, 1);
    if (word.empty()) continue;
    if (!cleaned.empty()) cleaned.push_back(' ');
    cleaned += word;
  }
  return cleaned;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::istringstream in(normalize_text(text));
  std::string word;
  while (in >> word) tokens.push_back(word);
  return tokens;
}

std::set<std::string> token_set(std::string_view text) {
  auto tokens = word_tokens(text);
  return {tokens.begin(), tokens.end()};
}

std::set<std::string> keyword_set(std::string_view text) {
  std::set<std::string> out;
  for (auto& token : word_tokens(text)) {
    if (token.size() >= 3 && !stopwords().contains(token)) out.insert(token);
  }
  return out;
}

double jaccard_similarity(std::string_view a, std::string_view b) {
  const auto sa = token_set(a);
  const auto sb = token_set(b);
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t shared = 0;
  for (const auto& t : sa) shared += sb.contains(t) ? 1 : 0;
  const std::size_t uni = sa.size() + sb.size() - shared;
  return static_cast<double>(shared) / static_cast<double>(uni);
}

bool is_negated(std::string_view text) {
  const std::string padded = " " + normalize_text(text) + " ";
  static const std::array<std::string_view, 8> kMarkers = {
      " do not ", " don t ", " never ", " avoid ", " not ", " no longer ", " dont ", " must not "};
  for (auto marker : kMarkers) {
    if (padded.find(marker) != std::string::npos) return true;
  }
  return false;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < text.size()) lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& line : lines) {
    out += line;
    out.push_back('\n');
  }
  return out;
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

bool contains_icase(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return false;
  return lower(haystack).find(lower(needle)) != std::string::npos;
}

std::string scrub(std::string text, const std::vector<std::string>& needles) {
  bool changed = true;
  while (changed) {
    changed = false;
    const std::string folded = lower(text);
    for (const auto& needle : needles) {
      if (needle.empty()) continue;
      const auto pos = folded.find(lower(needle));
      if (pos != std::string::npos) {
        text.erase(pos, needle.size());
        changed = true;
        break;
      }
    }
  }
  return text;
}

std::vector<std::string> path_tokens(std::string_view text) {
  static const std::array<std::string_view, 14> kExtensions = {
      ".v", ".sv", ".vh", ".svh", ".py", ".json", ".yml", ".yaml", ".md", ".txt", ".c", ".h", ".cpp", ".sh"};
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    while (!current.empty() && (current.back() == '.' || current.back() == ',' || current.back() == ':')) {
      current.pop_back();
    }
    if (current.size() > 1) {
      bool looks_like_path = current.find('/') != std::string::npos;
      for (auto ext : kExtensions) {
        if (current.size() > ext.size() && current.ends_with(ext)) looks_like_path = true;
      }
      // Prose separators such as "and/or" or "compile/simulate" are not paths.
      if (looks_like_path && current.find('.') == std::string::npos && current.front() != '/' &&
          std::count(current.begin(), current.end(), '/') == 1 && current.back() != '/') {
        looks_like_path = false;
      }
      if (looks_like_path) out.push_back(current);
    }
    current.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) != 0 || c == '_' || c == '/' || c == '.' || c == '-') {
      current.push_back(static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

bool KeywordMatcher::line_matches(std::string_view line, std::string_view directive) const {
  const std::string norm_line = normalize_text(line);
  const std::string norm_dir = normalize_text(directive);
  if (norm_dir.empty()) return false;
  if (norm_line.find(norm_dir) != std::string::npos) return true;
  const auto wanted = keyword_set(directive);
  if (wanted.empty()) return false;
  const auto have = keyword_set(line);
  std::size_t hit = 0;
  for (const auto& k : wanted) hit += have.contains(k) ? 1 : 0;
  return static_cast<double>(hit) >= min_overlap_ * static_cast<double>(wanted.size());
}

bool KeywordMatcher::contains(std::string_view body, std::string_view directive) const {
  const std::string norm_dir = normalize_text(directive);
  if (norm_dir.empty()) return false;
  if (normalize_text(body).find(norm_dir) != std::string::npos) return true;
  for (const auto& line : split_lines(body)) {
    if (line_matches(line, directive)) return true;
  }
  return false;
}

const Matcher& default_matcher() {
  static const KeywordMatcher kMatcher;
  return kMatcher;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::uint64_t stable_seed(std::initializer_list<std::string_view> parts) {
  std::string joined;
  for (auto part : parts) {
    joined += std::to_string(part.size());
    joined.push_back(':');
    joined += part;
  }
  const std::string hex = sha256_hex(joined);
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

std::uint64_t SplitMix::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SplitMix::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t SplitMix::below(std::uint64_t bound) {
  if (bound == 0) return 0;
  return next() % bound;
}

}  // namespace skillevo
