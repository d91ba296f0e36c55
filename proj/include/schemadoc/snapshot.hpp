#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "schemadoc/csv.hpp"
#include "schemadoc/errors.hpp"
#include "schemadoc/schema_model.hpp"
#include "schemadoc/values.hpp"

namespace schemadoc {

using ordered_json = nlohmann::ordered_json;

// Physical type names accepted by the snapshot format. Unknown names map to
// OTHER and are reported as warnings; OTHER columns are excluded from key
// discovery but still profiled and documented.
inline CanonicalType map_physical_type(const std::string &physical, bool *known = nullptr) {
  std::string t = to_lower(physical);
  const auto paren = t.find('(');
  if (paren != std::string::npos) t = t.substr(0, paren);
  while (!t.empty() && t.back() == ' ') t.pop_back();
  if (known) *known = true;
  if (t == "int" || t == "integer" || t == "int4" || t == "mediumint") return CanonicalType::INT;
  if (t == "bigint" || t == "int8" || t == "serial8" || t == "bigserial") return CanonicalType::BIGINT;
  if (t == "smallint" || t == "tinyint" || t == "int2") return CanonicalType::SMALLINT;
  if (t == "decimal" || t == "numeric" || t == "money" || t == "smallmoney")
    return CanonicalType::DECIMAL;
  if (t == "float" || t == "real" || t == "double" || t == "double precision")
    return CanonicalType::FLOAT;
  if (t == "varchar" || t == "nvarchar" || t == "char" || t == "nchar" ||
      t == "character varying" || t == "character" || t == "string")
    return CanonicalType::VARCHAR;
  if (t == "text" || t == "ntext" || t == "clob" || t == "longtext" || t == "mediumtext")
    return CanonicalType::TEXT;
  if (t == "date") return CanonicalType::DATE;
  if (t == "time") return CanonicalType::TIME;
  if (t == "timestamp" || t == "datetime" || t == "datetime2" || t == "smalldatetime" ||
      t == "timestamptz" || t == "timestamp with time zone")
    return CanonicalType::TIMESTAMP;
  if (t == "bit" || t == "bool" || t == "boolean") return CanonicalType::BOOLEAN;
  if (t == "uuid" || t == "uniqueidentifier" || t == "guid") return CanonicalType::UUID;
  if (t == "binary" || t == "varbinary" || t == "blob" || t == "bytea" || t == "image")
    return CanonicalType::BINARY;
  if (known) *known = false;
  return CanonicalType::OTHER;
}

// Declared or ground-truth key sets. These are quarantined from discovery and
// only meet pipeline output inside the evaluation harness.
struct KeySet {
  std::map<std::string, std::vector<std::string>> primary_keys;  // table key -> columns
  std::vector<Relationship> foreign_keys;

  static KeySet from_json(const ordered_json &j) {
    KeySet ks;
    if (j.contains("primary_keys")) {
      for (const auto &pk : j.at("primary_keys")) {
        std::vector<std::string> cols;
        for (const auto &c : pk.at("columns")) cols.push_back(c.get<std::string>());
        ks.primary_keys[pk.at("table").get<std::string>()] = cols;
      }
    }
    if (j.contains("foreign_keys")) {
      for (const auto &fk : j.at("foreign_keys")) {
        Relationship r;
        r.source_table = fk.at("source_table").get<std::string>();
        r.target_table = fk.at("target_table").get<std::string>();
        for (const auto &c : fk.at("source_columns")) r.source_columns.push_back(c.get<std::string>());
        for (const auto &c : fk.at("target_columns")) r.target_columns.push_back(c.get<std::string>());
        r.origin = RelationshipOrigin::DECLARED;
        r.confidence = 100.0;
        ks.foreign_keys.push_back(std::move(r));
      }
    }
    return ks;
  }

  ordered_json to_json() const {
    ordered_json j;
    j["primary_keys"] = ordered_json::array();
    for (const auto &[table, cols] : primary_keys) {
      ordered_json pk;
      pk["table"] = table;
      pk["columns"] = cols;
      j["primary_keys"].push_back(pk);
    }
    j["foreign_keys"] = ordered_json::array();
    for (const auto &fk : foreign_keys) {
      ordered_json f;
      f["source_table"] = fk.source_table;
      f["source_columns"] = fk.source_columns;
      f["target_table"] = fk.target_table;
      f["target_columns"] = fk.target_columns;
      j["foreign_keys"].push_back(f);
    }
    return j;
  }
};

struct TableData {
  // Column-major cells: columns[c][r]. Sized columns x row_count.
  std::vector<std::vector<Value>> columns;
};

// In-memory result of loading a snapshot directory. Discovery and analysis
// receive tables and data only; declared_constraints never feed discovery.
struct SchemaSnapshot {
  std::vector<TableMeta> tables;
  std::map<std::string, TableData> data;  // by table key
  KeySet declared_constraints;
  std::vector<std::string> warnings;
  std::string root_dir;

  const TableMeta *find_table(const std::string &key) const {
    for (const auto &t : tables)
      if (t.key() == key) return &t;
    return nullptr;
  }

  const std::vector<Value> &column_values(const std::string &table_key, int ordinal) const {
    const auto it = data.find(table_key);
    if (it == data.end()) throw IngestionError("no data for table: " + table_key);
    return it->second.columns.at(static_cast<size_t>(ordinal));
  }
};

namespace detail {

inline Value parse_cell(const CsvField &field, CanonicalType type, const std::string &where) {
  if (!field.quoted && field.text.empty()) return null_value();
  const std::string &s = field.text;
  switch (type) {
    case CanonicalType::INT:
    case CanonicalType::BIGINT:
    case CanonicalType::SMALLINT: {
      try {
        size_t pos = 0;
        const int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return Value{v};
      } catch (const std::exception &) {
        throw IngestionError("invalid integer '" + s + "' at " + where);
      }
    }
    case CanonicalType::DECIMAL:
    case CanonicalType::FLOAT: {
      try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return Value{v};
      } catch (const std::exception &) {
        throw IngestionError("invalid number '" + s + "' at " + where);
      }
    }
    case CanonicalType::BOOLEAN: {
      const std::string l = to_lower(s);
      if (l == "1" || l == "true" || l == "t" || l == "yes") return Value{true};
      if (l == "0" || l == "false" || l == "f" || l == "no") return Value{false};
      throw IngestionError("invalid boolean '" + s + "' at " + where);
    }
    default:
      return Value{s};
  }
}

}  // namespace detail

// Loads a snapshot manifest plus its per-table data files. The manifest is a
// versioned JSON document; data files are delimited text where an empty
// unquoted field is NULL and a quoted empty field is the empty string.
inline SchemaSnapshot load_snapshot(const std::string &manifest_path) {
  namespace fs = std::filesystem;
  std::ifstream in(manifest_path);
  if (!in) throw IngestionError("cannot open manifest: " + manifest_path);
  ordered_json manifest;
  try {
    in >> manifest;
  } catch (const std::exception &e) {
    throw IngestionError(std::string("manifest parse failure: ") + e.what());
  }

  if (!manifest.contains("format_version") || manifest.at("format_version") != "1")
    throw IngestionError("unsupported snapshot format_version (expected \"1\")");

  SchemaSnapshot snap;
  snap.root_dir = fs::path(manifest_path).parent_path().string();

  for (const auto &schema : manifest.at("schemas")) {
    const std::string schema_name = schema.at("name").get<std::string>();
    for (const auto &tj : schema.at("tables")) {
      TableMeta t;
      t.schema_name = schema_name;
      t.table_name = tj.at("name").get<std::string>();
      t.row_count = tj.at("row_count").get<int64_t>();
      if (tj.contains("description")) t.description = tj.at("description").get<std::string>();
      int ordinal = 0;
      for (const auto &cj : tj.at("columns")) {
        ColumnMeta c;
        c.name = cj.at("name").get<std::string>();
        c.ordinal = ordinal++;
        c.physical_type = cj.at("type").get<std::string>();
        bool known = true;
        c.type = map_physical_type(c.physical_type, &known);
        if (!known)
          snap.warnings.push_back("unknown type '" + c.physical_type + "' for " + t.key() +
                                  "." + c.name + " mapped to OTHER");
        c.nullable = cj.value("nullable", true);
        if (cj.contains("description")) c.description = cj.at("description").get<std::string>();
        t.columns.push_back(std::move(c));
      }

      const std::string data_file = tj.at("data_file").get<std::string>();
      const fs::path data_path = fs::path(snap.root_dir) / data_file;
      std::vector<CsvRecord> records;
      try {
        records = parse_csv_file(data_path.string());
      } catch (const CsvParseError &e) {
        throw IngestionError(std::string(e.what()) + " in " + data_file);
      }
      if (records.empty()) throw IngestionError("data file missing header row: " + data_file);
      const auto &header = records.front();
      if (header.size() != t.columns.size())
        throw IngestionError("header width mismatch in " + data_file);
      for (size_t i = 0; i < header.size(); ++i) {
        if (!equals_ci(header[i].text, t.columns[i].name))
          throw IngestionError("header column '" + header[i].text + "' does not match manifest '" +
                               t.columns[i].name + "' in " + data_file);
      }

      TableData td;
      td.columns.assign(t.columns.size(), {});
      for (auto &col : td.columns) col.reserve(records.size() - 1);
      for (size_t r = 1; r < records.size(); ++r) {
        const auto &rec = records[r];
        if (rec.size() != t.columns.size())
          throw IngestionError("row width mismatch at line " + std::to_string(r + 1) + " in " +
                               data_file);
        for (size_t c = 0; c < rec.size(); ++c) {
          const std::string where =
              t.key() + "." + t.columns[c].name + ":" + std::to_string(r + 1);
          td.columns[c].push_back(detail::parse_cell(rec[c], t.columns[c].type, where));
        }
      }
      const int64_t data_rows = static_cast<int64_t>(records.size()) - 1;
      if (data_rows != t.row_count)
        throw IngestionError("row_count mismatch for " + t.key() + ": manifest says " +
                             std::to_string(t.row_count) + ", data file has " +
                             std::to_string(data_rows));

      const std::string key = t.key();
      if (snap.data.count(key)) throw IngestionError("duplicate table in manifest: " + key);
      snap.tables.push_back(std::move(t));
      snap.data[key] = std::move(td);
    }
  }

  if (manifest.contains("declared_constraints"))
    snap.declared_constraints = KeySet::from_json(manifest.at("declared_constraints"));
  return snap;
}

// Applies schema/table include-exclude filters to an already-loaded snapshot.
inline void filter_snapshot(SchemaSnapshot &snap, const std::vector<std::string> &include_schemas,
                            const std::vector<std::string> &exclude_schemas,
                            const std::vector<std::string> &exclude_tables) {
  auto listed = [](const std::vector<std::string> &list, const std::string &name) {
    for (const auto &x : list)
      if (equals_ci(x, name)) return true;
    return false;
  };
  std::vector<TableMeta> kept;
  for (auto &t : snap.tables) {
    if (!include_schemas.empty() && !listed(include_schemas, t.schema_name)) {
      snap.data.erase(t.key());
      continue;
    }
    if (listed(exclude_schemas, t.schema_name) || listed(exclude_tables, t.key())) {
      snap.data.erase(t.key());
      continue;
    }
    kept.push_back(std::move(t));
  }
  snap.tables = std::move(kept);
}

// Deterministic row sample: a seeded pseudo-random permutation of row indices,
// first sample_size entries, returned in ascending row order. sample_size 0
// means "no sampled values" (privacy mode); a sample covering the whole table
// is the identity selection.
inline std::vector<size_t> sample_row_indices(size_t row_count, size_t sample_size, uint64_t seed,
                                              const std::string &table_key) {
  std::vector<size_t> indices(row_count);
  for (size_t i = 0; i < row_count; ++i) indices[i] = i;
  if (sample_size == 0) return {};
  if (row_count <= sample_size) return indices;
  SplitMix64 rng(seed ^ fnv1a64(table_key));
  deterministic_shuffle(indices, rng);
  indices.resize(sample_size);
  std::sort(indices.begin(), indices.end());
  return indices;
}

inline std::vector<Value> gather_rows(const std::vector<Value> &column,
                                      const std::vector<size_t> &indices) {
  std::vector<Value> out;
  out.reserve(indices.size());
  for (size_t i : indices) out.push_back(column.at(i));
  return out;
}

}  // namespace schemadoc
