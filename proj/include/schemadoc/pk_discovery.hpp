#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "schemadoc/profile.hpp"
#include "schemadoc/schema_model.hpp"
#include "schemadoc/snapshot.hpp"
#include "schemadoc/text_util.hpp"

namespace schemadoc {

struct PkOptions {
  double acceptance_threshold = 70.0;
  std::vector<std::string> naming_patterns{".*[Ii][Dd]$"};
  bool position_heuristics = true;  // H9..H12 toggle, used by ablation tests
};

// Inputs to the deterministic score combination. Everything the formula needs
// is captured here so tests can replay arbitrary factor grids.
struct PkScoreFactors {
  double uniqueness = 0.0;
  bool name_match = false;          // n
  double type_factor = 0.0;         // d
  double pattern_factor = 0.0;      // p
  bool nulls_penalty = false;       // x0.7
  bool atypical_name_penalty = false;  // x0.5
  double fk_likelihood = 0.0;       // x(1 - 0.6*l)
  bool surrogate_boost = false;     // +20
  int position = 0;                 // first column ordinal, drives phi
  bool contiguous_composite_boost = false;  // H10 x1.1 capped at 100
  double rank_multiplier = 1.0;     // H11 discount for 2nd/3rd/4th unique column
};

// Piecewise uniqueness contribution: u itself at or above 0.95, linear ramp
// from 0.5, zero below.
inline double pk_uniqueness_factor(double u) {
  if (u >= 0.95) return u;
  if (u >= 0.5) return 0.95 * (u - 0.5) / 0.45;
  return 0.0;
}

inline double pk_type_factor(CanonicalType t) {
  switch (t) {
    case CanonicalType::INT:
    case CanonicalType::BIGINT:
    case CanonicalType::SMALLINT:
    case CanonicalType::UUID:
      return 1.0;
    case CanonicalType::VARCHAR:
      return 0.6;
    case CanonicalType::TEXT:
    case CanonicalType::BINARY:
      return 0.2;
    default:
      return 0.3;
  }
}

// Ordinal-position multiplier (H9).
inline double pk_position_multiplier(int position) {
  switch (position) {
    case 0: return 1.0;
    case 1: return 0.85;
    case 2: return 0.70;
    default: return 0.55;
  }
}

// Fixed combination order: base, nulls penalty, atypical-name penalty,
// FK-likelihood damping, surrogate boost, position multiplier, composite
// prefix boost (capped), uniqueness-rank discount, final clamp.
inline double score_pk_from_factors(const PkScoreFactors &f, bool position_heuristics = true) {
  double score = 50.0 * pk_uniqueness_factor(f.uniqueness) + 20.0 * (f.name_match ? 1.0 : 0.0) +
                 15.0 * f.type_factor + 15.0 * f.pattern_factor;
  if (f.nulls_penalty) score *= 0.7;
  if (f.atypical_name_penalty) score *= 0.5;
  score *= 1.0 - 0.6 * f.fk_likelihood;
  if (f.surrogate_boost) score += 20.0;
  if (position_heuristics) {
    score *= pk_position_multiplier(f.position);
    if (f.contiguous_composite_boost) score = std::min(score * 1.1, 100.0);
    score *= f.rank_multiplier;
  }
  return std::clamp(score, 0.0, 100.0);
}

struct PkCandidate {
  std::string table_key;
  std::vector<std::string> columns;  // one or two
  std::vector<int> ordinals;
  double uniqueness = 0.0;
  bool uniqueness_exact = false;
  bool hard_rejected = false;
  std::string reject_reason;
  PkScoreFactors factors;
  double score = 0.0;
  bool accepted = false;
  bool suppressed_by_composite = false;

  bool composite() const { return columns.size() > 1; }
  int first_position() const {
    int m = ordinals.empty() ? 0 : ordinals[0];
    for (int o : ordinals) m = std::min(m, o);
    return m;
  }
  std::string column_list() const {
    std::string s;
    for (size_t i = 0; i < columns.size(); ++i) {
      if (i) s += "+";
      s += columns[i];
    }
    return s;
  }
};

struct TablePkResult {
  std::string table_key;
  std::vector<PkCandidate> candidates;
  // Highest-scoring accepted candidate, if any.
  std::optional<size_t> chosen;

  const PkCandidate *chosen_candidate() const {
    return chosen ? &candidates[*chosen] : nullptr;
  }
};

using PkResultMap = std::map<std::string, TablePkResult>;

inline bool matches_pk_name_pattern(const std::string &name,
                                    const std::vector<std::string> &patterns) {
  for (const auto &p : patterns) {
    if (std::regex_match(name, std::regex(p))) return true;
  }
  return false;
}

inline const std::vector<std::string> &pk_semantic_blacklist() {
  static const std::vector<std::string> kBlacklist = {
      "date", "time", "qty", "quantity", "amount",  "amt",  "price",
      "cost", "total", "desc", "note",    "comment", "name",
  };
  return kBlacklist;
}

inline bool pk_name_blacklisted(const std::string &name) {
  const std::string l = to_lower(name);
  for (const auto &bad : pk_semantic_blacklist())
    if (l.find(bad) != std::string::npos) return true;
  return false;
}

inline bool surrogate_named(const std::string &column, const std::string &table_name) {
  return equals_ci(column, "id") || equals_ci(column, table_name + "_id");
}

namespace detail {

inline double composite_uniqueness(const std::vector<Value> &a, const std::vector<Value> &b) {
  if (a.empty()) return 0.0;
  std::unordered_set<std::string> distinct;
  for (size_t i = 0; i < a.size(); ++i) {
    distinct.insert(value_key(a[i]) + "\x1f" + value_key(b[i]));
  }
  return static_cast<double>(distinct.size()) / static_cast<double>(a.size());
}

inline bool composite_has_nulls(const std::vector<Value> &a, const std::vector<Value> &b) {
  for (const auto &v : a)
    if (is_null(v)) return true;
  for (const auto &v : b)
    if (is_null(v)) return true;
  return false;
}

// Sequential integer run: non-null integer column whose distinct values form
// a dense consecutive range.
inline bool sequential_integers(const std::vector<Value> &column) {
  int64_t lo = 0, hi = 0;
  bool any = false;
  std::unordered_set<int64_t> distinct;
  for (const auto &v : column) {
    if (is_null(v)) continue;
    if (!std::holds_alternative<int64_t>(v)) return false;
    const int64_t x = std::get<int64_t>(v);
    if (!any) {
      lo = hi = x;
      any = true;
    } else {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    distinct.insert(x);
  }
  if (!any) return false;
  return hi - lo + 1 == static_cast<int64_t>(distinct.size());
}

inline bool all_uuid_shaped(const ColumnProfile &profile) {
  if (profile.sample_values.empty()) return false;
  for (const auto &s : profile.sample_values)
    if (!looks_like_uuid(s)) return false;
  return true;
}

// Natural-key codes: short uniform alphanumeric strings without spaces.
inline bool natural_key_codes(const ColumnProfile &profile, CanonicalType type) {
  if (type != CanonicalType::VARCHAR) return false;
  if (profile.sample_values.empty()) return false;
  for (const auto &s : profile.sample_values) {
    if (s.empty() || s.size() > 16) return false;
    for (unsigned char c : s)
      if (!std::isalnum(c) && c != '-' && c != '_') return false;
  }
  return true;
}

inline double pk_pattern_factor(const std::vector<Value> &column, const ColumnProfile &profile,
                                CanonicalType type, bool composite) {
  if (composite) return 0.33;
  if (sequential_integers(column)) return 1.0;
  if (all_uuid_shaped(profile)) return 1.0;
  if (natural_key_codes(profile, type)) return 0.67;
  return 0.0;
}

}  // namespace detail

// Candidate generation: naming-pattern columns plus u >= 0.95 columns; all
// two-column combinations join in only when no single column reaches u = 1.0.
// OTHER-typed columns never participate.
inline TablePkResult generate_pk_candidates(const TableMeta &table, const SchemaSnapshot &snapshot,
                                            const ProfileMap &profiles, const PkOptions &options) {
  TablePkResult result;
  result.table_key = table.key();

  std::vector<const ColumnMeta *> eligible;
  for (const auto &c : table.columns)
    if (c.type != CanonicalType::OTHER) eligible.push_back(&c);

  bool any_fully_unique = false;
  std::vector<const ColumnMeta *> singles;
  for (const auto *c : eligible) {
    const auto it = profiles.find(profile_key(table.key(), c->name));
    if (it == profiles.end()) continue;
    const auto &prof = it->second;
    const bool by_name = matches_pk_name_pattern(c->name, options.naming_patterns);
    const bool by_uniqueness = prof.uniqueness >= 0.95;
    if (by_name || by_uniqueness) singles.push_back(c);
    // The "no single column reaches u = 1.0" trigger uses verified uniqueness.
    if (prof.uniqueness >= 0.95 &&
        exactly_unique_non_null(snapshot.column_values(table.key(), c->ordinal)))
      any_fully_unique = true;
  }

  for (const auto *c : singles) {
    PkCandidate cand;
    cand.table_key = table.key();
    cand.columns = {c->name};
    cand.ordinals = {c->ordinal};
    const auto &prof = profiles.at(profile_key(table.key(), c->name));
    if (prof.uniqueness >= 0.95 && prof.uniqueness_is_estimate) {
      // Full-column verification pass, candidates only.
      cand.uniqueness = exact_uniqueness(snapshot.column_values(table.key(), c->ordinal));
      cand.uniqueness_exact = true;
    } else {
      cand.uniqueness = prof.uniqueness;
      cand.uniqueness_exact = !prof.uniqueness_is_estimate;
    }
    result.candidates.push_back(std::move(cand));
  }

  if (!any_fully_unique && eligible.size() >= 2) {
    for (size_t i = 0; i < eligible.size(); ++i) {
      for (size_t j = i + 1; j < eligible.size(); ++j) {
        PkCandidate cand;
        cand.table_key = table.key();
        cand.columns = {eligible[i]->name, eligible[j]->name};
        cand.ordinals = {eligible[i]->ordinal, eligible[j]->ordinal};
        cand.uniqueness = detail::composite_uniqueness(
            snapshot.column_values(table.key(), eligible[i]->ordinal),
            snapshot.column_values(table.key(), eligible[j]->ordinal));
        cand.uniqueness_exact = true;
        result.candidates.push_back(std::move(cand));
      }
    }
  }
  return result;
}

// Hard rejection. Single columns: any nulls, mostly blank/zero, or a
// blacklisted name. Composite parts skip the null check (that stays a scoring
// penalty) but keep the other two.
inline void apply_pk_hard_rejection(TablePkResult &result, const TableMeta &table,
                                    const SchemaSnapshot &snapshot, const ProfileMap &profiles) {
  for (auto &cand : result.candidates) {
    for (const auto &col : cand.columns) {
      const auto &prof = profiles.at(profile_key(table.key(), col));
      if (!cand.composite() && prof.null_fraction > 0.0) {
        cand.hard_rejected = true;
        cand.reject_reason = "null values present";
        break;
      }
      if (prof.mostly_blank_or_zero()) {
        cand.hard_rejected = true;
        cand.reject_reason = "mostly blank or zero";
        break;
      }
      if (pk_name_blacklisted(col)) {
        cand.hard_rejected = true;
        cand.reject_reason = "semantic blacklist";
        break;
      }
    }
  }
}

// Scores surviving candidates and applies H9..H12. fk_likelihood maps
// "schema.table.column" to the damping input; missing entries mean zero.
inline void score_pk_candidates(TablePkResult &result, const TableMeta &table,
                                const SchemaSnapshot &snapshot, const ProfileMap &profiles,
                                const std::map<std::string, double> &fk_likelihood,
                                const PkOptions &options) {
  for (auto &cand : result.candidates) {
    if (cand.hard_rejected) {
      cand.score = 0.0;
      cand.accepted = false;
      continue;
    }
    PkScoreFactors f;
    f.uniqueness = cand.uniqueness;
    f.position = cand.first_position();

    if (cand.composite()) {
      bool all_named = true;
      double min_type = 1.0;
      for (size_t i = 0; i < cand.columns.size(); ++i) {
        if (!matches_pk_name_pattern(cand.columns[i], options.naming_patterns)) all_named = false;
        const auto *col = table.find_column(cand.columns[i]);
        min_type = std::min(min_type, pk_type_factor(col->type));
      }
      f.name_match = all_named;
      f.type_factor = min_type;
      f.pattern_factor = 0.33;
      f.nulls_penalty = detail::composite_has_nulls(
          snapshot.column_values(table.key(), cand.ordinals[0]),
          snapshot.column_values(table.key(), cand.ordinals[1]));
      // The atypical-name penalty is a single-column rule; composites express
      // naming through the n factor alone.
      f.atypical_name_penalty = false;
      // H10: parts occupy the contiguous ordinal prefix 0..k-1.
      std::vector<int> ords = cand.ordinals;
      std::sort(ords.begin(), ords.end());
      f.contiguous_composite_boost = true;
      for (size_t i = 0; i < ords.size(); ++i)
        if (ords[i] != static_cast<int>(i)) f.contiguous_composite_boost = false;
    } else {
      const auto *col = table.find_column(cand.columns[0]);
      const auto &prof = profiles.at(profile_key(table.key(), col->name));
      f.name_match = matches_pk_name_pattern(col->name, options.naming_patterns);
      f.type_factor = pk_type_factor(col->type);
      f.pattern_factor = detail::pk_pattern_factor(
          snapshot.column_values(table.key(), col->ordinal), prof, col->type, false);
      f.nulls_penalty = prof.null_fraction > 0.0;
      const bool is_surrogate = surrogate_named(col->name, table.table_name);
      f.atypical_name_penalty = cand.uniqueness >= 0.95 && !f.name_match && !is_surrogate;
      f.surrogate_boost = is_surrogate && cand.uniqueness >= 0.95 && f.type_factor >= 0.9;
      const auto it = fk_likelihood.find(profile_key(table.key(), col->name));
      f.fk_likelihood = it == fk_likelihood.end() ? 0.0 : std::min(it->second, 1.0);
    }
    cand.factors = f;
  }

  // H11: rank discount for the 2nd, 3rd, 4th+ hard-surviving high-uniqueness
  // single column, ordered by ordinal position.
  if (options.position_heuristics) {
    std::vector<PkCandidate *> unique_singles;
    for (auto &cand : result.candidates)
      if (!cand.composite() && !cand.hard_rejected && cand.uniqueness >= 0.95)
        unique_singles.push_back(&cand);
    std::sort(unique_singles.begin(), unique_singles.end(),
              [](const PkCandidate *a, const PkCandidate *b) {
                return a->first_position() < b->first_position();
              });
    for (size_t i = 0; i < unique_singles.size(); ++i) {
      double m = 1.0;
      if (i == 1) m = 0.85;
      else if (i == 2) m = 0.70;
      else if (i >= 3) m = 0.55;
      unique_singles[i]->factors.rank_multiplier = m;
    }
  }

  for (auto &cand : result.candidates) {
    if (cand.hard_rejected) continue;
    cand.score = score_pk_from_factors(cand.factors, options.position_heuristics);
    cand.accepted = cand.score >= options.acceptance_threshold;
  }

  // H12: an accepted composite suppresses its individually accepted parts.
  if (options.position_heuristics) {
    std::set<std::string> composite_parts;
    for (const auto &cand : result.candidates)
      if (cand.composite() && cand.accepted)
        for (const auto &c : cand.columns) composite_parts.insert(c);
    for (auto &cand : result.candidates) {
      if (!cand.composite() && cand.accepted && composite_parts.count(cand.columns[0])) {
        cand.accepted = false;
        cand.suppressed_by_composite = true;
      }
    }
  }

  result.chosen.reset();
  for (size_t i = 0; i < result.candidates.size(); ++i) {
    const auto &cand = result.candidates[i];
    if (!cand.accepted) continue;
    if (!result.chosen) {
      result.chosen = i;
      continue;
    }
    const auto &best = result.candidates[*result.chosen];
    if (cand.score > best.score ||
        (cand.score == best.score &&
         (cand.first_position() < best.first_position() ||
          (cand.first_position() == best.first_position() &&
           cand.column_list() < best.column_list())))) {
      result.chosen = i;
    }
  }
}

// Accepted PK columns per table, used by FK gates and the evaluation harness.
inline std::map<std::string, std::vector<std::string>> chosen_pk_map(const PkResultMap &results) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto &[table, res] : results) {
    if (const auto *c = res.chosen_candidate()) out[table] = c->columns;
  }
  return out;
}

}  // namespace schemadoc
