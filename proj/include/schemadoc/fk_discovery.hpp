#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "schemadoc/pk_discovery.hpp"
#include "schemadoc/profile.hpp"
#include "schemadoc/schema_model.hpp"
#include "schemadoc/snapshot.hpp"
#include "schemadoc/text_util.hpp"

namespace schemadoc {

struct FkOptions {
  double acceptance_threshold = 60.0;
  size_t containment_sample = 500;
  uint64_t seed = 0;
};

struct FkWeights {
  double containment = 40.0;
  double naming = 20.0;
  double ratio = 15.0;
  double target_pk = 15.0;
  double null_health = 10.0;
};

// Weight redistribution: when the target-is-PK factor is uninformative for
// most of the schema, its mass moves onto containment.
inline FkWeights adaptive_fk_weights(bool redistribute) {
  FkWeights w;
  if (redistribute) {
    w.containment = 55.0;
    w.target_pk = 0.0;
  }
  return w;
}

struct FkScoreFactors {
  double containment = 0.0;   // v
  double naming = 0.0;        // s
  double ratio = 0.0;         // r
  bool target_is_pk = false;  // k
  double null_health = 0.0;   // nu
  bool orphan_penalty = false;     // x0.7
  bool coercible_penalty = false;  // x0.5
  double row_ratio_multiplier = 1.0;  // G4 confidence damping
  int fanout = 1;                  // psi input
};

// Fan-out multiplier (surviving target tables per source column, pre-G5).
inline double fk_fanout_multiplier(int n) {
  if (n <= 1) return 1.0;
  if (n == 2) return 0.85;
  if (n == 3) return 0.75;
  return 0.65;
}

// Fixed combination order: weighted base, orphan penalty, coercible-type
// penalty, row-ratio damping, fan-out multiplier, clamp.
inline double score_fk_from_factors(const FkScoreFactors &f, const FkWeights &w) {
  double score = w.containment * f.containment + w.naming * f.naming + w.ratio * f.ratio +
                 w.target_pk * (f.target_is_pk ? 1.0 : 0.0) + w.null_health * f.null_health;
  if (f.orphan_penalty) score *= 0.7;
  if (f.coercible_penalty) score *= 0.5;
  score *= f.row_ratio_multiplier;
  score *= fk_fanout_multiplier(f.fanout);
  return std::clamp(score, 0.0, 100.0);
}

// Naming similarity: exact 1.0, one-contains-the-other 0.8, else normalized
// Levenshtein floored at zero.
inline double fk_naming_similarity(const std::string &source, const std::string &target) {
  if (equals_ci(source, target)) return 1.0;
  if (contains_ci(source, target) || contains_ci(target, source)) return 0.8;
  return name_similarity(source, target);
}

inline double fk_null_health(double null_fraction) {
  if (null_fraction < 0.30) return 1.0;
  if (null_fraction <= 0.70) return 0.5;
  return 0.0;
}

struct GateCheck {
  std::string gate;
  bool passed = true;
  std::string note;
};

struct FkCandidate {
  std::string source_table;
  std::string source_column;
  std::string target_table;
  std::string target_column;
  std::string strategy;  // name-derived | pk-similarity | homonym | proposal
  RelationshipOrigin origin = RelationshipOrigin::STATISTICAL;
  bool coercible_pair = false;
  bool tier_dropped = false;
  std::string drop_reason;
  double containment = 0.0;  // sampled v; -1 until computed
  std::optional<double> containment_full;
  std::string orphan_basis = "sample";
  std::vector<GateCheck> gates;
  FkScoreFactors factors;
  FkWeights weights;
  double score = 0.0;
  bool g5_truncated = false;
  bool accepted = false;

  std::string source_key() const { return source_table + "." + source_column; }
  std::string edge_key() const {
    return source_table + "(" + source_column + ")->" + target_table + "(" + target_column + ")";
  }
  bool gates_passed() const {
    for (const auto &g : gates)
      if (!g.passed) return false;
    return true;
  }
  bool failed_gate(const std::string &id) const {
    for (const auto &g : gates)
      if (g.gate == id && !g.passed) return true;
    return false;
  }
};

namespace detail {

inline std::string strip_id_suffix(const std::string &name) {
  const std::string l = to_lower(name);
  if (l.size() > 3 && l.rfind("_id") == l.size() - 3) return l.substr(0, l.size() - 3);
  if (l.size() > 2 && l.rfind("id") == l.size() - 2) return l.substr(0, l.size() - 2);
  return "";
}

inline bool int_family(CanonicalType t) {
  return t == CanonicalType::INT || t == CanonicalType::BIGINT || t == CanonicalType::SMALLINT;
}

inline bool string_family(CanonicalType t) {
  return t == CanonicalType::VARCHAR || t == CanonicalType::TEXT;
}

inline bool types_same_family(CanonicalType a, CanonicalType b) {
  if (a == b) return true;
  if (int_family(a) && int_family(b)) return true;
  if (string_family(a) && string_family(b)) return true;
  return false;
}

// Cross-family pairs that can still line up through text/number coercion.
inline bool types_coercible(CanonicalType a, CanonicalType b) {
  auto pairs = [](CanonicalType x, CanonicalType y) {
    if (string_family(x) && (int_family(y) || y == CanonicalType::DECIMAL || y == CanonicalType::UUID))
      return true;
    return false;
  };
  return pairs(a, b) || pairs(b, a);
}

}  // namespace detail

// Target lookup, three strategies in fixed order: table name derived from an
// id-suffixed column name (pluralization tolerant), similarly named PKs, and
// identically named PKs anywhere in the schema. The source cell itself is
// never its own target.
inline std::vector<FkCandidate> find_fk_targets(
    const TableMeta &source_table, const ColumnMeta &source_column,
    const std::vector<TableMeta> &tables,
    const std::map<std::string, std::vector<std::string>> &pk_map) {
  std::vector<FkCandidate> found;
  std::set<std::pair<std::string, std::string>> seen;
  auto add = [&](const std::string &t_table, const std::string &t_column,
                 const std::string &strategy) {
    if (t_table == source_table.key() && equals_ci(t_column, source_column.name)) return;
    if (!seen.insert({t_table, to_lower(t_column)}).second) return;
    FkCandidate c;
    c.source_table = source_table.key();
    c.source_column = source_column.name;
    c.target_table = t_table;
    c.target_column = t_column;
    c.strategy = strategy;
    found.push_back(std::move(c));
  };

  const std::string base = detail::strip_id_suffix(source_column.name);
  if (!base.empty()) {
    for (const auto &t : tables) {
      if (!plural_match(base, t.table_name)) continue;
      const auto pk = pk_map.find(t.key());
      if (pk != pk_map.end() && pk->second.size() == 1) {
        add(t.key(), pk->second[0], "name-derived");
      } else if (const auto *same = t.find_column(source_column.name)) {
        add(t.key(), same->name, "name-derived");
      }
    }
  }

  for (const auto &t : tables) {
    const auto pk = pk_map.find(t.key());
    if (pk == pk_map.end() || pk->second.size() != 1) continue;
    if (name_similarity(source_column.name, pk->second[0]) >= 0.8)
      add(t.key(), pk->second[0], "pk-similarity");
  }

  for (const auto &t : tables) {
    const auto pk = pk_map.find(t.key());
    if (pk == pk_map.end()) continue;
    for (const auto &col : pk->second)
      if (equals_ci(col, source_column.name)) add(t.key(), col, "homonym");
  }
  return found;
}

// Tier 1 (type shape) and tier 2 (value shape) pre-filters. Tier 2 inspects
// the profile's sample values; UUID-shaped and short numeric-code values are
// promoted past the pattern checks, and coercible cross-family pairs survive
// only through that promotion.
inline void apply_tier_filters(FkCandidate &cand, CanonicalType source_type,
                               CanonicalType target_type, const ColumnProfile &source_profile) {
  switch (source_type) {
    case CanonicalType::DATE:
    case CanonicalType::TIME:
    case CanonicalType::TIMESTAMP:
    case CanonicalType::BOOLEAN:
    case CanonicalType::FLOAT:
    case CanonicalType::BINARY:
    case CanonicalType::TEXT:
      cand.tier_dropped = true;
      cand.drop_reason = "tier1: source type " + std::string(to_string(source_type));
      return;
    default:
      break;
  }
  if (source_type == CanonicalType::OTHER || target_type == CanonicalType::OTHER) {
    cand.tier_dropped = true;
    cand.drop_reason = "tier1: unmapped type";
    return;
  }
  if (!detail::types_same_family(source_type, target_type)) {
    if (detail::types_coercible(source_type, target_type)) {
      cand.coercible_pair = true;
    } else {
      cand.tier_dropped = true;
      cand.drop_reason = "tier1: incompatible types";
      return;
    }
  }

  bool promoted = false;
  if (!source_profile.sample_values.empty()) {
    bool all_uuid = true, all_codes = true;
    for (const auto &s : source_profile.sample_values) {
      if (!looks_like_uuid(s)) all_uuid = false;
      if (!looks_like_numeric_code(s)) all_codes = false;
      if (looks_like_email(s) || looks_like_url(s) || s.size() > 64) {
        cand.tier_dropped = true;
        cand.drop_reason = "tier2: free-text value shape";
        return;
      }
    }
    promoted = all_uuid || all_codes;
  }
  if (cand.coercible_pair && !promoted) {
    cand.tier_dropped = true;
    cand.drop_reason = "tier2: cross-family pair without code-like values";
  }
}

// Containment v: distinct non-null values from up to sample_size seeded
// source rows, membership-tested against the full target column.
inline std::optional<double> compute_containment(const std::vector<Value> &source_column,
                                                 const std::vector<Value> &target_column,
                                                 size_t sample_size, uint64_t seed,
                                                 const std::string &source_key) {
  const auto indices =
      sample_row_indices(source_column.size(), sample_size, seed ^ fnv1a64("containment"),
                         source_key);
  std::unordered_set<std::string> source_values;
  for (size_t i : indices) {
    const auto &v = source_column[i];
    if (!is_null(v)) source_values.insert(value_key(v));
  }
  if (source_values.empty()) return std::nullopt;
  std::unordered_set<std::string> target_values;
  for (const auto &v : target_column)
    if (!is_null(v)) target_values.insert(value_key(v));
  size_t hits = 0;
  for (const auto &key : source_values)
    if (target_values.count(key)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(source_values.size());
}

namespace detail {

inline bool target_passes_pk_hard_filters(const std::vector<Value> &target_column) {
  if (!exactly_unique_non_null(target_column)) return false;
  int64_t blanks = 0;
  for (const auto &v : target_column)
    if (is_blank_or_zero(v)) ++blanks;
  return static_cast<double>(blanks) <= 0.5 * static_cast<double>(target_column.size());
}

inline int64_t distinct_non_null(const std::vector<Value> &column) {
  std::unordered_set<std::string> d;
  for (const auto &v : column)
    if (!is_null(v)) d.insert(value_key(v));
  return static_cast<int64_t>(d.size());
}

}  // namespace detail

// Evaluates G1/G3/G4/G6/G8 on one candidate with containment already known.
// All gates are recorded, pass or fail, so rejections stay explainable.
inline void apply_fk_gates(FkCandidate &cand, const SchemaSnapshot &snapshot,
                           const std::map<std::string, std::vector<std::string>> &pk_map) {
  cand.gates.clear();
  const auto *src_table = snapshot.find_table(cand.source_table);
  const auto *tgt_table = snapshot.find_table(cand.target_table);
  const auto *tgt_col = tgt_table->find_column(cand.target_column);
  const auto &target_values = snapshot.column_values(cand.target_table, tgt_col->ordinal);

  {
    GateCheck g{"G1", detail::target_passes_pk_hard_filters(target_values),
                "target must be unique, non-null, non-blank"};
    cand.gates.push_back(g);
  }
  {
    GateCheck g{"G3", !equals_ci(cand.target_column, "rowguid"), "replication artifact target"};
    cand.gates.push_back(g);
  }
  {
    // G4 is a confidence damper, not a filter: kicks in when the source table
    // is under 1% of the target's size.
    GateCheck g{"G4", true, ""};
    const double rows_src = static_cast<double>(src_table->row_count);
    const double rows_tgt = static_cast<double>(tgt_table->row_count);
    if (rows_tgt > 0.0 && rows_src < 0.01 * rows_tgt) {
      cand.factors.row_ratio_multiplier = std::clamp(rows_src / rows_tgt, 0.5, 1.0);
      g.note = "row-ratio damping applied";
    } else {
      cand.factors.row_ratio_multiplier = 1.0;
    }
    cand.gates.push_back(g);
  }
  {
    GateCheck g{"G6", cand.containment >= 0.75, "containment below 0.75"};
    cand.gates.push_back(g);
  }
  {
    bool source_is_pk = false;
    const auto pk = pk_map.find(cand.source_table);
    if (pk != pk_map.end() && pk->second.size() == 1 &&
        equals_ci(pk->second[0], cand.source_column))
      source_is_pk = true;
    const bool self_ref = cand.source_table == cand.target_table;
    GateCheck g{"G8", !source_is_pk || self_ref, "accepted PK as source"};
    cand.gates.push_back(g);
  }
}

// Scores one gate-passing candidate. Orphan-rate precision rule: when the
// provisional score lands within 5 points of the threshold, the orphan rate
// is re-measured on the full source column before the penalty is settled.
inline void score_fk_candidate(FkCandidate &cand, const SchemaSnapshot &snapshot,
                               const ProfileMap &profiles,
                               const std::map<std::string, std::vector<std::string>> &pk_map,
                               const FkWeights &weights, int fanout, const FkOptions &options) {
  const auto *src_table = snapshot.find_table(cand.source_table);
  const auto *src_col = src_table->find_column(cand.source_column);
  const auto &src_values = snapshot.column_values(cand.source_table, src_col->ordinal);
  const auto &src_profile = profiles.at(profile_key(cand.source_table, src_col->name));

  cand.weights = weights;
  cand.factors.containment = cand.containment;
  cand.factors.naming = fk_naming_similarity(cand.source_column, cand.target_column);
  const int64_t distinct = detail::distinct_non_null(src_values);
  if (distinct > 0) {
    const double rho =
        static_cast<double>(src_table->row_count) / static_cast<double>(distinct);
    cand.factors.ratio = std::min(rho, 2.0) / 2.0;
  } else {
    cand.factors.ratio = 0.0;
  }
  const auto pk = pk_map.find(cand.target_table);
  cand.factors.target_is_pk = pk != pk_map.end() && pk->second.size() == 1 &&
                              equals_ci(pk->second[0], cand.target_column);
  cand.factors.null_health = fk_null_health(src_profile.null_fraction);
  cand.factors.fanout = fanout;

  cand.orphan_basis = "sample";
  cand.factors.orphan_penalty = 1.0 - cand.containment > 0.20;
  double score = score_fk_from_factors(cand.factors, weights);
  if (std::abs(score - options.acceptance_threshold) <= 5.0) {
    const auto *tgt_table = snapshot.find_table(cand.target_table);
    const auto *tgt_col = tgt_table->find_column(cand.target_column);
    const auto full = compute_containment(
        src_values, snapshot.column_values(cand.target_table, tgt_col->ordinal),
        src_values.size(), options.seed, cand.source_key());
    if (full) {
      cand.containment_full = *full;
      cand.orphan_basis = "full";
      cand.factors.orphan_penalty = 1.0 - *full > 0.20;
      score = score_fk_from_factors(cand.factors, weights);
    }
  }
  cand.score = score;
}

struct FkDiscoveryResult {
  std::vector<FkCandidate> candidates;  // every generated candidate, any fate
  bool adaptive_redistribution = false;
  FkWeights weights;

  std::vector<const FkCandidate *> accepted() const {
    std::vector<const FkCandidate *> out;
    for (const auto &c : candidates)
      if (c.accepted) out.push_back(&c);
    return out;
  }
};

// Candidate generation plus both tier filters, no data contact beyond the
// profile samples. This is the input to the FK-likelihood computation.
inline std::vector<FkCandidate> generate_fk_candidates(
    const SchemaSnapshot &snapshot, const ProfileMap &profiles,
    const std::map<std::string, std::vector<std::string>> &pk_map) {
  std::vector<FkCandidate> candidates;
  for (const auto &table : snapshot.tables) {
    for (const auto &col : table.columns) {
      if (col.type == CanonicalType::OTHER) continue;
      auto found = find_fk_targets(table, col, snapshot.tables, pk_map);
      for (auto &cand : found) {
        const auto *tgt_table = snapshot.find_table(cand.target_table);
        const auto *tgt_col = tgt_table->find_column(cand.target_column);
        apply_tier_filters(cand, col.type, tgt_col->type,
                           profiles.at(profile_key(table.key(), col.name)));
        candidates.push_back(std::move(cand));
      }
    }
  }
  return candidates;
}

// Full statistical FK pass over the schema. pk_map carries the accepted PK
// per table; candidates pointing at or out of tables without data are never
// generated because generation walks the snapshot itself.
inline FkDiscoveryResult discover_fks(const SchemaSnapshot &snapshot, const ProfileMap &profiles,
                                      const std::map<std::string, std::vector<std::string>> &pk_map,
                                      const FkOptions &options) {
  FkDiscoveryResult result;
  result.candidates = generate_fk_candidates(snapshot, profiles, pk_map);

  // Containment for tier survivors; empty source samples drop here.
  for (auto &cand : result.candidates) {
    if (cand.tier_dropped) continue;
    const auto *src_table = snapshot.find_table(cand.source_table);
    const auto *src_col = src_table->find_column(cand.source_column);
    const auto *tgt_table = snapshot.find_table(cand.target_table);
    const auto *tgt_col = tgt_table->find_column(cand.target_column);
    const auto v = compute_containment(
        snapshot.column_values(cand.source_table, src_col->ordinal),
        snapshot.column_values(cand.target_table, tgt_col->ordinal),
        options.containment_sample, options.seed, cand.source_key());
    if (!v) {
      cand.tier_dropped = true;
      cand.drop_reason = "no non-null source values";
      continue;
    }
    cand.containment = *v;
    apply_fk_gates(cand, snapshot, pk_map);
  }

  // Fan-out counts distinct surviving target tables per source column, before
  // G5 truncation.
  std::map<std::string, std::set<std::string>> fanout_tables;
  for (const auto &cand : result.candidates)
    if (!cand.tier_dropped && cand.gates_passed())
      fanout_tables[cand.source_key()].insert(cand.target_table);

  // Adaptive weight decision over candidates that reach scoring.
  size_t scoring_total = 0, k_zero = 0;
  for (auto &cand : result.candidates) {
    if (cand.tier_dropped || !cand.gates_passed()) continue;
    ++scoring_total;
    const auto pk = pk_map.find(cand.target_table);
    const bool k = pk != pk_map.end() && pk->second.size() == 1 &&
                   equals_ci(pk->second[0], cand.target_column);
    if (!k) ++k_zero;
  }
  result.adaptive_redistribution =
      scoring_total > 0 &&
      static_cast<double>(k_zero) > 0.40 * static_cast<double>(scoring_total);
  result.weights = adaptive_fk_weights(result.adaptive_redistribution);

  for (auto &cand : result.candidates) {
    if (cand.tier_dropped || !cand.gates_passed()) continue;
    const int fanout = static_cast<int>(fanout_tables[cand.source_key()].size());
    score_fk_candidate(cand, snapshot, profiles, pk_map, result.weights, fanout, options);
  }

  // G5: top three targets per source column by confidence.
  std::map<std::string, std::vector<FkCandidate *>> per_source;
  for (auto &cand : result.candidates)
    if (!cand.tier_dropped && cand.gates_passed()) per_source[cand.source_key()].push_back(&cand);
  for (auto &[key, list] : per_source) {
    std::sort(list.begin(), list.end(), [](const FkCandidate *a, const FkCandidate *b) {
      if (a->score != b->score) return a->score > b->score;
      return a->edge_key() < b->edge_key();
    });
    for (size_t i = 0; i < list.size(); ++i) {
      GateCheck g{"G5", i < 3, "beyond top-3 targets for source column"};
      list[i]->gates.push_back(g);
      if (i >= 3) list[i]->g5_truncated = true;
    }
  }

  for (auto &cand : result.candidates) {
    cand.accepted = !cand.tier_dropped && cand.gates_passed() && !cand.g5_truncated &&
                    cand.score >= options.acceptance_threshold;
  }
  return result;
}

// FK likelihood per source column: the share of generated targets that made
// it through both tier filters. Feeds back into PK scoring as a damper.
inline std::map<std::string, double> fk_likelihood_by_column(
    const std::vector<FkCandidate> &candidates) {
  std::map<std::string, std::pair<int, int>> counts;  // key -> {survivors, generated}
  for (const auto &c : candidates) {
    auto &entry = counts[c.source_key()];
    ++entry.second;
    if (!c.tier_dropped) ++entry.first;
  }
  std::map<std::string, double> out;
  for (const auto &[key, entry] : counts) {
    out[key] = entry.second == 0
                   ? 0.0
                   : std::min(1.0, static_cast<double>(entry.first) /
                                       static_cast<double>(entry.second));
  }
  return out;
}

struct FkProposal {
  std::string source_table;
  std::string source_column;
  std::string target_table;
  std::string target_column;
  std::string rationale;
};

// Statistical validation of an analyzer-proposed FK: same containment, same
// gates, same threshold. Unknown object references come back as a structured
// rejection rather than an error.
inline FkCandidate validate_proposed_fk(const FkProposal &proposal, const SchemaSnapshot &snapshot,
                                        const ProfileMap &profiles,
                                        const std::map<std::string, std::vector<std::string>> &pk_map,
                                        const FkWeights &weights,
                                        const std::vector<Relationship> &known,
                                        const FkOptions &options) {
  FkCandidate cand;
  cand.source_table = proposal.source_table;
  cand.source_column = proposal.source_column;
  cand.target_table = proposal.target_table;
  cand.target_column = proposal.target_column;
  cand.strategy = "proposal";
  cand.origin = RelationshipOrigin::ANALYZER_PROPOSED;

  const auto *src_table = snapshot.find_table(proposal.source_table);
  const auto *tgt_table = snapshot.find_table(proposal.target_table);
  if (!src_table || !tgt_table) {
    cand.tier_dropped = true;
    cand.drop_reason = "unknown table in proposal";
    return cand;
  }
  const auto *src_col = src_table->find_column(proposal.source_column);
  const auto *tgt_col = tgt_table->find_column(proposal.target_column);
  if (!src_col || !tgt_col) {
    cand.tier_dropped = true;
    cand.drop_reason = "unknown column in proposal";
    return cand;
  }
  if (src_table->key() == tgt_table->key() && equals_ci(src_col->name, tgt_col->name)) {
    cand.tier_dropped = true;
    cand.drop_reason = "proposal maps column onto itself";
    return cand;
  }
  for (const auto &r : known) {
    if (r.source_table == src_table->key() && r.target_table == tgt_table->key() &&
        r.source_columns.size() == 1 && equals_ci(r.source_columns[0], src_col->name) &&
        equals_ci(r.target_columns[0], tgt_col->name)) {
      cand.tier_dropped = true;
      cand.drop_reason = "proposal duplicates known relationship";
      return cand;
    }
  }

  const auto v = compute_containment(
      snapshot.column_values(cand.source_table, src_col->ordinal),
      snapshot.column_values(cand.target_table, tgt_col->ordinal),
      options.containment_sample, options.seed, cand.source_key());
  if (!v) {
    cand.tier_dropped = true;
    cand.drop_reason = "no non-null source values";
    return cand;
  }
  cand.containment = *v;
  apply_fk_gates(cand, snapshot, pk_map);

  std::set<std::string> targets{cand.target_table};
  for (const auto &r : known)
    if (r.source_table == cand.source_table && r.source_columns.size() == 1 &&
        equals_ci(r.source_columns[0], cand.source_column))
      targets.insert(r.target_table);
  const int fanout = static_cast<int>(targets.size());

  if (cand.gates_passed())
    score_fk_candidate(cand, snapshot, profiles, pk_map, weights, fanout, options);
  cand.accepted = cand.gates_passed() && cand.score >= options.acceptance_threshold;
  return cand;
}

}  // namespace schemadoc
