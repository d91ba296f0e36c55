#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "schemadoc/csv.hpp"
#include "schemadoc/guardrails.hpp"
#include "schemadoc/refinement.hpp"
#include "schemadoc/schema_model.hpp"
#include "schemadoc/snapshot.hpp"
#include "schemadoc/text_util.hpp"

// Documentation renderers. Each one is a pure function of the run state, so
// regenerating an output directory reproduces identical bytes. Nothing here
// embeds timestamps, hostnames, or counters that vary between runs.

namespace schemadoc {

// Everything the static renderers need. Reference members: build one on the
// stack right before rendering.
struct DocModel {
  const SchemaSnapshot &snapshot;
  const std::map<std::string, std::vector<std::string>> &pks;
  const std::map<std::string, DescriptionRecord> &records;
  const std::vector<Relationship> &relationships;
  std::set<std::string> removed_edge_keys;  // drawn dashed in the diagram
};

namespace docdetail {

inline std::string fixed2(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::vector<std::string> sorted_table_keys(const SchemaSnapshot &snapshot) {
  std::vector<std::string> keys;
  for (const auto &t : snapshot.tables) keys.push_back(t.key());
  std::sort(keys.begin(), keys.end());
  return keys;
}

inline const DescriptionRecord *record_for(const DocModel &m, const std::string &object_id) {
  auto it = m.records.find(object_id);
  return it == m.records.end() ? nullptr : &it->second;
}

inline std::string description_text(const DocModel &m, const std::string &object_id) {
  const auto *rec = record_for(m, object_id);
  return rec ? rec->text : std::string();
}

inline bool is_pk_member(const DocModel &m, const std::string &table_key,
                         const std::string &column) {
  auto it = m.pks.find(table_key);
  if (it == m.pks.end()) return false;
  for (const auto &c : it->second)
    if (equals_ci(c, column)) return true;
  return false;
}

inline bool is_fk_source(const DocModel &m, const std::string &table_key,
                         const std::string &column) {
  for (const auto &r : m.relationships) {
    if (r.source_table != table_key) continue;
    for (const auto &c : r.source_columns)
      if (equals_ci(c, column)) return true;
  }
  return false;
}

inline std::string join(const std::vector<std::string> &parts, const std::string &sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// 'x' -> 'x''y' style literal body (quotes doubled, delimiters not included).
inline std::string sql_escape(const std::string &text) {
  std::string out;
  for (char c : text) {
    if (c == '\'') out += "''";
    else out.push_back(c);
  }
  return out;
}

inline std::string sql_string(const std::string &text) {
  return "'" + sql_escape(text) + "'";
}

inline std::string sql_nstring(const std::string &text) {
  return "N'" + sql_escape(text) + "'";
}

// Always-quoted identifier, inner double quotes doubled.
inline std::string sql_ident(const std::string &name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline std::string mermaid_id(const std::string &key) {
  std::string out;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9');
    out.push_back(ok ? c : '_');
  }
  return out;
}

// Markdown heading -> anchor, matching the usual lowercase-and-strip rule.
inline std::string md_anchor(const std::string &heading) {
  std::string out;
  for (char c : heading) {
    if (c >= 'A' && c <= 'Z') out.push_back(static_cast<char>(c - 'A' + 'a'));
    else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-')
      out.push_back(c);
    else if (c == ' ') out.push_back('-');
  }
  return out;
}

// Single-line table cell: pipes escaped, newlines collapsed.
inline std::string md_cell(const std::string &text) {
  std::string out;
  for (char c : text) {
    if (c == '|') out += "\\|";
    else if (c == '\n' || c == '\r') out.push_back(' ');
    else out.push_back(c);
  }
  return out;
}

}  // namespace docdetail

// COMMENT ON statements for engines that support the standard syntax. Objects
// without a description are skipped rather than cleared.
inline std::string render_ansi_comment_sql(const DocModel &m) {
  using namespace docdetail;
  std::string out;
  out += "-- Generated table and column annotations (COMMENT ON dialect).\n";
  out += "-- Regenerated on every documentation pass; manual edits are overwritten.\n";
  for (const auto &key : sorted_table_keys(m.snapshot)) {
    const TableMeta *t = m.snapshot.find_table(key);
    std::string block;
    const std::string table_desc = description_text(m, key);
    const std::string qualified = sql_ident(t->schema_name) + "." + sql_ident(t->table_name);
    if (!table_desc.empty())
      block += "COMMENT ON TABLE " + qualified + " IS " + sql_string(table_desc) + ";\n";
    for (const auto &c : t->columns) {
      const std::string col_desc = description_text(m, key + "." + c.name);
      if (col_desc.empty()) continue;
      block += "COMMENT ON COLUMN " + qualified + "." + sql_ident(c.name) + " IS " +
               sql_string(col_desc) + ";\n";
    }
    if (!block.empty()) out += "\n" + block;
  }
  return out;
}

namespace docdetail {

inline std::string extended_property_upsert(const std::string &schema,
                                            const std::string &table,
                                            const std::string &column,
                                            const std::string &value) {
  const bool is_column = !column.empty();
  std::string levels = "@level0type = N'SCHEMA', @level0name = " + sql_nstring(schema) +
                       ", @level1type = N'TABLE', @level1name = " + sql_nstring(table);
  if (is_column)
    levels += ", @level2type = N'COLUMN', @level2name = " + sql_nstring(column);
  std::string probe = "fn_listextendedproperty(N'MS_Description', N'SCHEMA', " +
                      sql_nstring(schema) + ", N'TABLE', " + sql_nstring(table) + ", " +
                      (is_column ? "N'COLUMN', " + sql_nstring(column) : "NULL, NULL") + ")";
  std::string args = "@name = N'MS_Description', @value = " + sql_nstring(value) + ", " + levels;
  std::string out;
  out += "IF EXISTS (SELECT 1 FROM " + probe + ")\n";
  out += "  EXEC sp_updateextendedproperty " + args + ";\n";
  out += "ELSE\n";
  out += "  EXEC sp_addextendedproperty " + args + ";\n";
  return out;
}

}  // namespace docdetail

// Extended-property upserts for engines without COMMENT ON. Each object gets a
// guarded add-or-update pair so the script is idempotent.
inline std::string render_extended_property_sql(const DocModel &m) {
  using namespace docdetail;
  std::string out;
  out += "-- Generated table and column annotations (extended-property dialect).\n";
  out += "-- Regenerated on every documentation pass; manual edits are overwritten.\n";
  for (const auto &key : sorted_table_keys(m.snapshot)) {
    const TableMeta *t = m.snapshot.find_table(key);
    std::string block;
    const std::string table_desc = description_text(m, key);
    if (!table_desc.empty())
      block += extended_property_upsert(t->schema_name, t->table_name, "", table_desc) + "\n";
    for (const auto &c : t->columns) {
      const std::string col_desc = description_text(m, key + "." + c.name);
      if (col_desc.empty()) continue;
      block += extended_property_upsert(t->schema_name, t->table_name, c.name, col_desc) + "\n";
    }
    if (!block.empty()) out += "\n" + block;
  }
  return out;
}

// Entity-relationship diagram. The crow's-foot end sits on the referencing
// table. Relationships whose edge key is in removed_edge_keys were dropped
// from the dependency leveling to break a cycle; they are still drawn, dashed,
// so the diagram shows the full detected structure.
inline std::string render_mermaid(const DocModel &m) {
  using namespace docdetail;
  std::string out = "erDiagram\n";
  for (const auto &key : sorted_table_keys(m.snapshot)) {
    const TableMeta *t = m.snapshot.find_table(key);
    out += "  " + mermaid_id(key) + " {\n";
    for (const auto &c : t->columns) {
      std::string line = "    " + std::string(to_string(c.type)) + " " + mermaid_id(c.name);
      const bool pk = is_pk_member(m, key, c.name);
      const bool fk = is_fk_source(m, key, c.name);
      if (pk && fk) line += " PK, FK";
      else if (pk) line += " PK";
      else if (fk) line += " FK";
      out += line + "\n";
    }
    out += "  }\n";
  }
  std::vector<const Relationship *> rels;
  for (const auto &r : m.relationships) rels.push_back(&r);
  std::sort(rels.begin(), rels.end(), [](const Relationship *a, const Relationship *b) {
    return a->edge_key() < b->edge_key();
  });
  if (!rels.empty()) out += "\n";
  for (const auto *r : rels) {
    const bool dashed = m.removed_edge_keys.count(r->edge_key()) > 0;
    std::string label = join(r->source_columns, "+");
    if (dashed) label += " (cycle break)";
    out += "  " + mermaid_id(r->target_table) + (dashed ? " ||..o{ " : " ||--o{ ") +
           mermaid_id(r->source_table) + " : \"" + label + "\"\n";
  }
  return out;
}

// Human-readable reference document: contents listing, one section per schema,
// one subsection per table. Objects without a description are marked
// undocumented instead of being dropped.
inline std::string render_markdown(const DocModel &m) {
  using namespace docdetail;
  const auto keys = sorted_table_keys(m.snapshot);
  std::map<std::string, std::vector<std::string>> by_schema;
  size_t column_count = 0;
  for (const auto &key : keys) {
    const TableMeta *t = m.snapshot.find_table(key);
    by_schema[t->schema_name].push_back(key);
    column_count += t->columns.size();
  }

  std::string out = "# Schema documentation\n\n";
  out += std::to_string(by_schema.size()) + " schema(s), " + std::to_string(keys.size()) +
         " table(s), " + std::to_string(column_count) + " column(s), " +
         std::to_string(m.relationships.size()) + " relationship(s).\n\n";

  out += "## Contents\n\n";
  for (const auto &[schema, tables] : by_schema) {
    const std::string heading = "Schema " + schema;
    out += "- [" + heading + "](#" + md_anchor(heading) + ")\n";
    for (const auto &key : tables)
      out += "  - [" + key + "](#" + md_anchor(key) + ")\n";
  }

  for (const auto &[schema, tables] : by_schema) {
    out += "\n## Schema " + schema + "\n";
    for (const auto &key : tables) {
      const TableMeta *t = m.snapshot.find_table(key);
      out += "\n### " + key + "\n\n";
      const auto *table_rec = record_for(m, key);
      if (table_rec && !table_rec->text.empty()) {
        out += table_rec->text + "\n\n";
      } else {
        out += "_Undocumented._\n\n";
      }
      out += "- Rows: " + std::to_string(t->row_count) + "\n";
      auto pk_it = m.pks.find(key);
      if (pk_it != m.pks.end() && !pk_it->second.empty()) {
        out += "- Primary key: `" + join(pk_it->second, "`, `") + "`\n";
      } else {
        out += "- Primary key: none detected\n";
      }
      if (table_rec && !table_rec->text.empty())
        out += "- Confidence: " + fixed2(table_rec->confidence) + "\n";
      out += "\n| Column | Type | Nullable | Description |\n";
      out += "| --- | --- | --- | --- |\n";
      for (const auto &c : t->columns) {
        const auto *rec = record_for(m, key + "." + c.name);
        const std::string desc =
            (rec && !rec->text.empty()) ? md_cell(rec->text) : "_Undocumented._";
        out += "| " + md_cell(c.name) + " | " + to_string(c.type) + " | " +
               (c.nullable ? "yes" : "no") + " | " + desc + " |\n";
      }
      std::string refs, refd;
      for (const auto &r : m.relationships) {
        const std::string line = "- `" + r.source_table + "(" + join(r.source_columns, "+") +
                                 ")` -> `" + r.target_table + "(" +
                                 join(r.target_columns, "+") + ")` (" +
                                 to_string(r.origin) + ", confidence " +
                                 fixed2(r.confidence) + ")\n";
        if (r.source_table == key) refs += line;
        if (r.target_table == key) refd += line;
      }
      if (!refs.empty()) out += "\nReferences:\n\n" + refs;
      if (!refd.empty()) out += "\nReferenced by:\n\n" + refd;
    }
  }
  return out;
}

inline std::string render_tables_csv(const DocModel &m) {
  using namespace docdetail;
  std::string out = csv_join({"schema", "table", "row_count", "column_count", "primary_key",
                              "description", "confidence"});
  for (const auto &key : sorted_table_keys(m.snapshot)) {
    const TableMeta *t = m.snapshot.find_table(key);
    const auto *rec = record_for(m, key);
    auto pk_it = m.pks.find(key);
    const std::string pk = pk_it == m.pks.end() ? "" : join(pk_it->second, "+");
    out += csv_join({csv_escape(t->schema_name, false), csv_escape(t->table_name, false),
                     std::to_string(t->row_count), std::to_string(t->columns.size()),
                     csv_escape(pk, false), csv_escape(rec ? rec->text : "", false),
                     fixed2(rec ? rec->confidence : 0.0)});
  }
  return out;
}

inline std::string render_columns_csv(const DocModel &m) {
  using namespace docdetail;
  std::string out = csv_join({"schema", "table", "column", "ordinal", "type", "nullable",
                              "primary_key", "description", "confidence"});
  for (const auto &key : sorted_table_keys(m.snapshot)) {
    const TableMeta *t = m.snapshot.find_table(key);
    for (const auto &c : t->columns) {
      const auto *rec = record_for(m, key + "." + c.name);
      out += csv_join({csv_escape(t->schema_name, false), csv_escape(t->table_name, false),
                       csv_escape(c.name, false), std::to_string(c.ordinal),
                       to_string(c.type), c.nullable ? "true" : "false",
                       is_pk_member(m, key, c.name) ? "true" : "false",
                       csv_escape(rec ? rec->text : "", false),
                       fixed2(rec ? rec->confidence : 0.0)});
    }
  }
  return out;
}

inline std::string render_relationships_csv(const DocModel &m) {
  using namespace docdetail;
  std::string out = csv_join({"source_table", "source_columns", "target_table",
                              "target_columns", "confidence", "origin", "cycle_removed"});
  std::vector<const Relationship *> rels;
  for (const auto &r : m.relationships) rels.push_back(&r);
  std::sort(rels.begin(), rels.end(), [](const Relationship *a, const Relationship *b) {
    return a->edge_key() < b->edge_key();
  });
  for (const auto *r : rels) {
    out += csv_join({csv_escape(r->source_table, false),
                     csv_escape(join(r->source_columns, "+"), false),
                     csv_escape(r->target_table, false),
                     csv_escape(join(r->target_columns, "+"), false), fixed2(r->confidence),
                     to_string(r->origin),
                     m.removed_edge_keys.count(r->edge_key()) ? "true" : "false"});
  }
  return out;
}

// Token spend per phase plus the per-iteration refinement trace.
inline std::string render_metrics(const BudgetLedger &ledger,
                                  const std::vector<IterationRecord> &iterations,
                                  const std::vector<SanityFinding> &final_findings) {
  using namespace docdetail;
  std::string out = "# Run metrics\n\n## Token usage\n\n";
  out += "| Phase | Calls | Input tokens | Output tokens | Total |\n";
  out += "| --- | ---: | ---: | ---: | ---: |\n";
  auto row = [&](const std::string &name, const PhaseSpend &s) {
    out += "| " + name + " | " + std::to_string(s.calls) + " | " + std::to_string(s.input) +
           " | " + std::to_string(s.output) + " | " + std::to_string(s.total()) + " |\n";
  };
  row("discovery", ledger.discovery);
  row("analysis", ledger.analysis);
  row("sanity", ledger.sanity);
  PhaseSpend total;
  total.input = ledger.discovery.input + ledger.analysis.input + ledger.sanity.input;
  total.output = ledger.discovery.output + ledger.analysis.output + ledger.sanity.output;
  total.calls = ledger.run_calls();
  row("total", total);

  out += "\n## Iterations\n\n";
  if (iterations.empty()) {
    out += "No refinement iterations were run.\n";
  } else {
    out += "| Iteration | Analyses | Material | Text changes | Cosmetic | Queued | "
           "Violations | Degraded |\n";
    out += "| ---: | ---: | ---: | ---: | ---: | ---: | ---: | --- |\n";
    for (const auto &it : iterations) {
      out += "| " + std::to_string(it.iteration) + " | " +
             std::to_string(it.table_analysis_calls) + " | " +
             std::to_string(it.material_changes) + " | " + std::to_string(it.text_material) +
             " | " + std::to_string(it.text_cosmetic) + " | " +
             std::to_string(it.queued_events) + " | " + std::to_string(it.violations.size()) +
             " | " + (it.degraded ? "yes" : "no") + " |\n";
    }
    const auto &last = iterations.back().convergence;
    auto flag = [](bool b) { return b ? "yes" : "no"; };
    out += "\nConverged after " + std::to_string(iterations.size()) + " iteration(s): " +
           flag(last.converged) + " (stable " + flag(last.stable) + ", confident " +
           flag(last.confident) + ", semantic " + flag(last.semantic) + ").\n";
  }

  out += "\n## Final sanity findings\n\n";
  if (final_findings.empty()) {
    out += "None.\n";
  } else {
    for (const auto &f : final_findings)
      out += "- " + f.table + " [" + f.rule + "]: " + f.message + "\n";
  }
  return out;
}

namespace docdetail {

inline void write_file(const std::filesystem::path &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write output file: " + path.string());
  out << content;
}

}  // namespace docdetail

// Writes the full bundle under outputs_dir:
//   sql/annotations_ansi.sql   sql/annotations_extended.sql
//   mermaid/schema.mmd         md/schema.md
//   csv/{tables,columns,relationships}.csv
//   metrics/metrics.md
inline void write_documentation_bundle(const std::filesystem::path &outputs_dir,
                                       const DocModel &m,
                                       const std::vector<IterationRecord> &iterations,
                                       const std::vector<SanityFinding> &final_findings,
                                       const BudgetLedger &ledger) {
  namespace fs = std::filesystem;
  for (const char *sub : {"sql", "md", "mermaid", "csv", "metrics"})
    fs::create_directories(outputs_dir / sub);
  docdetail::write_file(outputs_dir / "sql" / "annotations_ansi.sql",
                        render_ansi_comment_sql(m));
  docdetail::write_file(outputs_dir / "sql" / "annotations_extended.sql",
                        render_extended_property_sql(m));
  docdetail::write_file(outputs_dir / "mermaid" / "schema.mmd", render_mermaid(m));
  docdetail::write_file(outputs_dir / "md" / "schema.md", render_markdown(m));
  docdetail::write_file(outputs_dir / "csv" / "tables.csv", render_tables_csv(m));
  docdetail::write_file(outputs_dir / "csv" / "columns.csv", render_columns_csv(m));
  docdetail::write_file(outputs_dir / "csv" / "relationships.csv",
                        render_relationships_csv(m));
  docdetail::write_file(outputs_dir / "metrics" / "metrics.md",
                        render_metrics(ledger, iterations, final_findings));
}

}  // namespace schemadoc
