#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "schemadoc/errors.hpp"
#include "schemadoc/refinement.hpp"
#include "schemadoc/schema_model.hpp"
#include "schemadoc/text_util.hpp"

namespace schemadoc {

// ---------------------------------------------------------------------------
// Reference answer file. A table entry with an empty pk list means the table
// genuinely has no key; a missing table entry reads the same way. Entries
// marked "warning" are known-hard cases: they stay in the denominator and a
// miss still counts against recall.

struct TruthTable {
  std::vector<std::string> pk;
  bool pk_warning = false;
  std::string description;
};

struct TruthRelationship {
  Relationship rel;
  bool warning = false;
};

struct TruthFile {
  std::map<std::string, TruthTable> tables;
  std::vector<TruthRelationship> relationships;

  static TruthFile from_json(const ordered_json &j) {
    TruthFile t;
    if (j.value("formatVersion", std::string("1")) != "1")
      throw IngestionError("unsupported truth formatVersion");
    if (j.contains("tables")) {
      for (const auto &[key, entry] : j.at("tables").items()) {
        TruthTable tt;
        if (entry.contains("pk"))
          for (const auto &c : entry.at("pk")) tt.pk.push_back(c.get<std::string>());
        tt.pk_warning = entry.value("warning", false);
        tt.description = entry.value("description", std::string());
        t.tables[key] = std::move(tt);
      }
    }
    if (j.contains("relationships")) {
      for (const auto &entry : j.at("relationships")) {
        TruthRelationship tr;
        tr.rel.source_table = entry.at("sourceTable").get<std::string>();
        for (const auto &c : entry.at("sourceColumns"))
          tr.rel.source_columns.push_back(c.get<std::string>());
        tr.rel.target_table = entry.at("targetTable").get<std::string>();
        for (const auto &c : entry.at("targetColumns"))
          tr.rel.target_columns.push_back(c.get<std::string>());
        tr.warning = entry.value("warning", false);
        t.relationships.push_back(std::move(tr));
      }
    }
    return t;
  }

  ordered_json to_json() const {
    ordered_json j;
    j["formatVersion"] = "1";
    j["tables"] = ordered_json::object();
    for (const auto &[key, tt] : tables) {
      ordered_json entry;
      entry["pk"] = tt.pk;
      if (tt.pk_warning) entry["warning"] = true;
      if (!tt.description.empty()) entry["description"] = tt.description;
      j["tables"][key] = std::move(entry);
    }
    j["relationships"] = ordered_json::array();
    for (const auto &tr : relationships) {
      ordered_json entry;
      entry["sourceTable"] = tr.rel.source_table;
      entry["sourceColumns"] = tr.rel.source_columns;
      entry["targetTable"] = tr.rel.target_table;
      entry["targetColumns"] = tr.rel.target_columns;
      if (tr.warning) entry["warning"] = true;
      j["relationships"].push_back(std::move(entry));
    }
    return j;
  }
};

// ---------------------------------------------------------------------------

struct MatchCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;

  // Vacuously perfect when there is nothing to find and nothing was claimed;
  // otherwise a zero denominator scores zero.
  double precision() const {
    if (tp + fp == 0) return fn == 0 ? 1.0 : 0.0;
    return static_cast<double>(tp) / (tp + fp);
  }
  double recall() const {
    if (tp + fn == 0) return fp == 0 ? 1.0 : 0.0;
    return static_cast<double>(tp) / (tp + fn);
  }
  double f1() const {
    const double p = precision();
    const double r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
};

inline double composite_score(double f1_fk, double f1_pk, double table_coverage,
                              double column_coverage) {
  return 0.35 * f1_fk + 0.30 * f1_pk + 0.20 * table_coverage +
         0.15 * column_coverage;
}

inline std::string grade_for(double score) {
  if (score >= 0.95) return "A+";
  if (score >= 0.90) return "A";
  if (score >= 0.85) return "B+";
  if (score >= 0.80) return "B";
  return "C";
}

struct EvalItem {
  std::string detail;
  bool warning = false;
};

struct EvalReport {
  MatchCounts pk;
  MatchCounts fk;
  std::vector<std::string> pk_matches;
  std::vector<std::string> pk_mismatches;  // "table: predicted [..] expected [..]"
  std::vector<std::string> pk_spurious;
  std::vector<EvalItem> pk_missing;
  std::vector<std::string> fk_matched;
  std::vector<std::string> fk_spurious;
  std::vector<EvalItem> fk_missing;
  int tables_total = 0;
  int tables_covered = 0;
  int columns_total = 0;
  int columns_covered = 0;
  double table_coverage = 0.0;
  double column_coverage = 0.0;
  double composite = 0.0;
  std::string grade;

  ordered_json to_json() const {
    ordered_json j;
    const auto counts = [](const MatchCounts &c) {
      return ordered_json{{"tp", c.tp},
                          {"fp", c.fp},
                          {"fn", c.fn},
                          {"precision", c.precision()},
                          {"recall", c.recall()},
                          {"f1", c.f1()}};
    };
    j["pk"] = counts(pk);
    j["pk"]["matches"] = pk_matches;
    j["pk"]["mismatches"] = pk_mismatches;
    j["pk"]["spurious"] = pk_spurious;
    j["pk"]["missing"] = ordered_json::array();
    for (const auto &m : pk_missing)
      j["pk"]["missing"].push_back({{"detail", m.detail}, {"warning", m.warning}});
    j["fk"] = counts(fk);
    j["fk"]["matched"] = fk_matched;
    j["fk"]["spurious"] = fk_spurious;
    j["fk"]["missing"] = ordered_json::array();
    for (const auto &m : fk_missing)
      j["fk"]["missing"].push_back({{"detail", m.detail}, {"warning", m.warning}});
    j["coverage"] = {{"tables_total", tables_total},
                     {"tables_covered", tables_covered},
                     {"table_coverage", table_coverage},
                     {"columns_total", columns_total},
                     {"columns_covered", columns_covered},
                     {"column_coverage", column_coverage}};
    j["composite"] = composite;
    j["grade"] = grade;
    return j;
  }
};

struct EvalInputs {
  std::vector<std::string> tables;
  std::map<std::string, std::vector<std::string>> columns;  // per table key
  std::map<std::string, std::vector<std::string>> pks;      // chosen key columns
  std::vector<Relationship> relationships;
  std::map<std::string, DescriptionRecord> records;
};

namespace evaldetail {

inline std::string normalize_column(const std::string &name) {
  size_t begin = 0, end = name.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(name[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(name[end - 1]))) --end;
  return to_lower(name.substr(begin, end - begin));
}

inline std::string pk_signature(const std::vector<std::string> &columns) {
  std::vector<std::string> normalized;
  for (const auto &c : columns) normalized.push_back(normalize_column(c));
  std::sort(normalized.begin(), normalized.end());
  std::string out;
  for (const auto &c : normalized) out += c + ",";
  return out;
}

// Column pairs travel together, so reordering them does not change the edge.
inline std::string fk_signature(const Relationship &r) {
  std::vector<std::string> pairs;
  const size_t n = std::min(r.source_columns.size(), r.target_columns.size());
  for (size_t i = 0; i < n; ++i)
    pairs.push_back(normalize_column(r.source_columns[i]) + ">" +
                    normalize_column(r.target_columns[i]));
  std::sort(pairs.begin(), pairs.end());
  std::string out = r.source_table + "|" + r.target_table + "|";
  for (const auto &p : pairs) out += p + ",";
  return out;
}

inline std::string column_list(const std::vector<std::string> &cols) {
  std::string out = "[";
  for (size_t i = 0; i < cols.size(); ++i) {
    if (i) out += " ";
    out += cols[i];
  }
  return out + "]";
}

}  // namespace evaldetail

inline EvalReport compare_to_truth(const EvalInputs &inputs, const TruthFile &truth) {
  EvalReport report;

  std::set<std::string> table_set(inputs.tables.begin(), inputs.tables.end());
  std::set<std::string> all_tables = table_set;
  for (const auto &[key, tt] : truth.tables) all_tables.insert(key);

  for (const auto &key : all_tables) {
    const auto pred_it = inputs.pks.find(key);
    const bool predicted = pred_it != inputs.pks.end() && !pred_it->second.empty();
    const auto truth_it = truth.tables.find(key);
    const bool expected = truth_it != truth.tables.end() && !truth_it->second.pk.empty();

    if (predicted && expected) {
      if (evaldetail::pk_signature(pred_it->second) ==
          evaldetail::pk_signature(truth_it->second.pk)) {
        report.pk.tp++;
        report.pk_matches.push_back(key + ": " +
                                    evaldetail::column_list(pred_it->second));
      } else {
        report.pk.fp++;
        report.pk.fn++;
        report.pk_mismatches.push_back(
            key + ": predicted " + evaldetail::column_list(pred_it->second) +
            " expected " + evaldetail::column_list(truth_it->second.pk));
      }
    } else if (predicted) {
      report.pk.fp++;
      report.pk_spurious.push_back(key + ": " +
                                   evaldetail::column_list(pred_it->second));
    } else if (expected) {
      report.pk.fn++;
      report.pk_missing.push_back(
          {key + ": expected " + evaldetail::column_list(truth_it->second.pk),
           truth_it->second.pk_warning});
    }
  }

  std::map<std::string, const Relationship *> predicted_edges;
  for (const auto &r : inputs.relationships)
    predicted_edges.emplace(evaldetail::fk_signature(r), &r);
  std::map<std::string, const TruthRelationship *> truth_edges;
  for (const auto &tr : truth.relationships)
    truth_edges.emplace(evaldetail::fk_signature(tr.rel), &tr);

  for (const auto &[sig, r] : predicted_edges) {
    if (truth_edges.count(sig)) {
      report.fk.tp++;
      report.fk_matched.push_back(r->edge_key());
    } else {
      report.fk.fp++;
      report.fk_spurious.push_back(r->edge_key());
    }
  }
  for (const auto &[sig, tr] : truth_edges) {
    if (!predicted_edges.count(sig)) {
      report.fk.fn++;
      report.fk_missing.push_back({tr->rel.edge_key(), tr->warning});
    }
  }

  const auto covered = [&](const std::string &object_id) {
    const auto it = inputs.records.find(object_id);
    return it != inputs.records.end() && !it->second.text.empty() &&
           it->second.confidence >= 0.5;
  };
  report.tables_total = static_cast<int>(inputs.tables.size());
  for (const auto &key : inputs.tables)
    if (covered(key)) report.tables_covered++;
  for (const auto &key : inputs.tables) {
    const auto cit = inputs.columns.find(key);
    if (cit == inputs.columns.end()) continue;
    for (const auto &col : cit->second) {
      report.columns_total++;
      if (covered(profile_key(key, col))) report.columns_covered++;
    }
  }
  report.table_coverage =
      report.tables_total == 0
          ? 0.0
          : static_cast<double>(report.tables_covered) / report.tables_total;
  report.column_coverage =
      report.columns_total == 0
          ? 0.0
          : static_cast<double>(report.columns_covered) / report.columns_total;

  report.composite = composite_score(report.fk.f1(), report.pk.f1(),
                                     report.table_coverage, report.column_coverage);
  report.grade = grade_for(report.composite);
  return report;
}

}  // namespace schemadoc
