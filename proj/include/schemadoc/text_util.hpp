#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace schemadoc {

inline std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline bool equals_ci(const std::string &a, const std::string &b) {
  return to_lower(a) == to_lower(b);
}

// Lowercased, whitespace stripped. Used wherever identifiers are matched.
inline std::string normalize_identifier(const std::string &s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (!std::isspace(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

inline bool contains_ci(const std::string &haystack, const std::string &needle) {
  if (needle.empty()) return false;
  const std::string h = to_lower(haystack), n = to_lower(needle);
  return h.find(n) != std::string::npos;
}

// Splits an identifier into lowercase word tokens on '_', '-', spaces, digits
// and camelCase boundaries: "CustomerID" -> {customer, id}, "inv_ln" -> {inv, ln}.
inline std::vector<std::string> split_identifier(const std::string &name) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      tokens.push_back(to_lower(cur));
      cur.clear();
    }
  };
  for (size_t i = 0; i < name.size(); ++i) {
    const unsigned char c = name[i];
    if (c == '_' || c == '-' || c == ' ' || c == '.' || std::isdigit(c)) {
      flush();
      continue;
    }
    if (std::isupper(c) && !cur.empty()) {
      const unsigned char prev = name[i - 1];
      const bool next_lower = i + 1 < name.size() && std::islower(static_cast<unsigned char>(name[i + 1]));
      if (std::islower(prev) || (std::isupper(prev) && next_lower)) flush();
    }
    cur.push_back(static_cast<char>(c));
  }
  flush();
  return tokens;
}

inline size_t levenshtein_distance(const std::string &a, const std::string &b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  std::vector<size_t> row(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    size_t diag = row[0];
    row[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      const size_t up = row[j];
      const size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + cost});
      diag = up;
    }
  }
  return row[b.size()];
}

// 1 - lev/max(len), case-insensitive, floored at 0.
inline double name_similarity(const std::string &a, const std::string &b) {
  const std::string la = to_lower(a), lb = to_lower(b);
  if (la == lb) return 1.0;
  const size_t ml = std::max(la.size(), lb.size());
  if (ml == 0) return 1.0;
  const double sim = 1.0 - static_cast<double>(levenshtein_distance(la, lb)) / static_cast<double>(ml);
  return sim < 0.0 ? 0.0 : sim;
}

// Singular/plural tolerant table-name match: exact, +s, +es, y->ies, both ways.
inline bool plural_match(const std::string &a, const std::string &b) {
  const std::string x = to_lower(a), y = to_lower(b);
  auto forms = [](const std::string &base) {
    std::vector<std::string> out{base, base + "s", base + "es"};
    if (!base.empty() && base.back() == 'y') out.push_back(base.substr(0, base.size() - 1) + "ies");
    return out;
  };
  for (const auto &f : forms(x))
    if (f == y) return true;
  for (const auto &f : forms(y))
    if (f == x) return true;
  return false;
}

inline std::set<std::string> token_set(const std::string &text) {
  std::set<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.insert(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.insert(cur);
  return out;
}

inline double jaccard_similarity(const std::set<std::string> &a, const std::set<std::string> &b) {
  if (a.empty() && b.empty()) return 1.0;
  size_t inter = 0;
  for (const auto &t : a)
    if (b.count(t)) ++inter;
  const size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline bool looks_like_uuid(const std::string &s) {
  if (s.size() != 36) return false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (i == 8 || i == 13 || i == 18 || i == 23) {
      if (s[i] != '-') return false;
    } else if (!std::isxdigit(static_cast<unsigned char>(s[i]))) {
      return false;
    }
  }
  return true;
}

inline bool looks_like_email(const std::string &s) {
  const auto at = s.find('@');
  if (at == std::string::npos || at == 0 || at + 1 >= s.size()) return false;
  return s.find('.', at + 1) != std::string::npos;
}

inline bool looks_like_url(const std::string &s) {
  const std::string l = to_lower(s);
  return l.rfind("http://", 0) == 0 || l.rfind("https://", 0) == 0 || l.rfind("www.", 0) == 0;
}

inline bool looks_like_numeric_code(const std::string &s) {
  if (s.empty() || s.size() > 12) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

inline uint64_t fnv1a64(const std::string &s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Deterministic cross-platform generator for sampling and fixtures.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound). Modulo bias is irrelevant at these scales.
  uint64_t next_below(uint64_t bound) { return bound == 0 ? 0 : next() % bound; }

 private:
  uint64_t state_;
};

template <typename T>
inline void deterministic_shuffle(std::vector<T> &items, SplitMix64 &rng) {
  for (size_t i = items.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.next_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace schemadoc
