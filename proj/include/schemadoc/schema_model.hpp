#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "schemadoc/errors.hpp"
#include "schemadoc/text_util.hpp"

namespace schemadoc {

enum class CanonicalType {
  INT,
  BIGINT,
  SMALLINT,
  DECIMAL,
  FLOAT,
  VARCHAR,
  TEXT,
  DATE,
  TIME,
  TIMESTAMP,
  BOOLEAN,
  UUID,
  BINARY,
  OTHER,
};

inline const char *to_string(CanonicalType t) {
  switch (t) {
    case CanonicalType::INT: return "INT";
    case CanonicalType::BIGINT: return "BIGINT";
    case CanonicalType::SMALLINT: return "SMALLINT";
    case CanonicalType::DECIMAL: return "DECIMAL";
    case CanonicalType::FLOAT: return "FLOAT";
    case CanonicalType::VARCHAR: return "VARCHAR";
    case CanonicalType::TEXT: return "TEXT";
    case CanonicalType::DATE: return "DATE";
    case CanonicalType::TIME: return "TIME";
    case CanonicalType::TIMESTAMP: return "TIMESTAMP";
    case CanonicalType::BOOLEAN: return "BOOLEAN";
    case CanonicalType::UUID: return "UUID";
    case CanonicalType::BINARY: return "BINARY";
    case CanonicalType::OTHER: return "OTHER";
  }
  return "OTHER";
}

inline CanonicalType canonical_type_from_string(const std::string &s) {
  const std::string u = to_lower(s);
  if (u == "int") return CanonicalType::INT;
  if (u == "bigint") return CanonicalType::BIGINT;
  if (u == "smallint") return CanonicalType::SMALLINT;
  if (u == "decimal") return CanonicalType::DECIMAL;
  if (u == "float") return CanonicalType::FLOAT;
  if (u == "varchar") return CanonicalType::VARCHAR;
  if (u == "text") return CanonicalType::TEXT;
  if (u == "date") return CanonicalType::DATE;
  if (u == "time") return CanonicalType::TIME;
  if (u == "timestamp") return CanonicalType::TIMESTAMP;
  if (u == "boolean") return CanonicalType::BOOLEAN;
  if (u == "uuid") return CanonicalType::UUID;
  if (u == "binary") return CanonicalType::BINARY;
  return CanonicalType::OTHER;
}

struct ColumnMeta {
  std::string name;
  int ordinal = 0;
  CanonicalType type = CanonicalType::OTHER;
  std::string physical_type;
  bool nullable = true;
  std::string description;  // pre-existing catalog comment, surfaced as seed context
};

struct TableMeta {
  std::string schema_name;
  std::string table_name;
  int64_t row_count = 0;
  std::vector<ColumnMeta> columns;
  std::string description;  // pre-existing catalog comment, surfaced as seed context

  std::string key() const { return schema_name + "." + table_name; }

  const ColumnMeta *find_column(const std::string &name) const {
    for (const auto &c : columns)
      if (equals_ci(c.name, name)) return &c;
    return nullptr;
  }
};

enum class RelationshipOrigin { DECLARED, STATISTICAL, ANALYZER_PROPOSED, GROUND_TRUTH };

inline const char *to_string(RelationshipOrigin o) {
  switch (o) {
    case RelationshipOrigin::DECLARED: return "DECLARED";
    case RelationshipOrigin::STATISTICAL: return "STATISTICAL";
    case RelationshipOrigin::ANALYZER_PROPOSED: return "ANALYZER_PROPOSED";
    case RelationshipOrigin::GROUND_TRUTH: return "GROUND_TRUTH";
  }
  return "DECLARED";
}

inline RelationshipOrigin relationship_origin_from_string(const std::string &s) {
  if (s == "STATISTICAL") return RelationshipOrigin::STATISTICAL;
  if (s == "ANALYZER_PROPOSED") return RelationshipOrigin::ANALYZER_PROPOSED;
  if (s == "GROUND_TRUTH") return RelationshipOrigin::GROUND_TRUTH;
  return RelationshipOrigin::DECLARED;
}

// Directed reference: source (child) columns point at target (parent) columns.
struct Relationship {
  std::string source_table;  // "schema.table"
  std::vector<std::string> source_columns;
  std::string target_table;
  std::vector<std::string> target_columns;
  double confidence = 0.0;  // 0..100
  RelationshipOrigin origin = RelationshipOrigin::STATISTICAL;

  bool self_referencing() const { return source_table == target_table; }

  std::string edge_key() const {
    auto join = [](const std::vector<std::string> &v) {
      std::string s;
      for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += "+";
        s += v[i];
      }
      return s;
    };
    return source_table + "(" + join(source_columns) + ")->" + target_table + "(" +
           join(target_columns) + ")";
  }
};

inline void validate_relationship(const Relationship &r) {
  if (r.source_columns.empty() || r.source_columns.size() != r.target_columns.size())
    throw Error("relationship arity mismatch: " + r.edge_key());
  if (r.source_table == r.target_table && r.source_columns == r.target_columns)
    throw Error("relationship maps columns onto themselves: " + r.edge_key());
}

// Level-stratified reference graph. Level 0 holds tables that reference no
// other table; every retained cross-table edge goes from a higher level to a
// strictly lower one, and self-edges sit outside the stratification. Cycle
// removals stay listed so context assembly can still see them.
struct DependencyGraph {
  std::vector<std::vector<std::string>> levels;
  std::map<std::string, int> level_of;
  std::vector<Relationship> retained_edges;
  std::vector<Relationship> removed_cycle_edges;

  int depth() const { return levels.empty() ? 0 : static_cast<int>(levels.size()) - 1; }
};

namespace detail {

struct SccResult {
  std::vector<std::vector<std::string>> components;
};

// Iterative Tarjan over the child->parent adjacency, deterministic order.
inline SccResult strongly_connected_components(
    const std::vector<std::string> &nodes,
    const std::map<std::string, std::set<std::string>> &adj) {
  SccResult result;
  std::map<std::string, int> index, lowlink;
  std::set<std::string> on_stack;
  std::vector<std::string> stack;
  int counter = 0;

  struct Frame {
    std::string node;
    std::vector<std::string> succ;
    size_t next = 0;
  };

  for (const auto &start : nodes) {
    if (index.count(start)) continue;
    std::vector<Frame> call_stack;
    auto push_node = [&](const std::string &n) {
      index[n] = lowlink[n] = counter++;
      stack.push_back(n);
      on_stack.insert(n);
      Frame f;
      f.node = n;
      auto it = adj.find(n);
      if (it != adj.end()) f.succ.assign(it->second.begin(), it->second.end());
      call_stack.push_back(std::move(f));
    };
    push_node(start);
    while (!call_stack.empty()) {
      Frame &f = call_stack.back();
      if (f.next < f.succ.size()) {
        const std::string &w = f.succ[f.next++];
        if (!index.count(w)) {
          push_node(w);
        } else if (on_stack.count(w)) {
          lowlink[f.node] = std::min(lowlink[f.node], index[w]);
        }
      } else {
        if (lowlink[f.node] == index[f.node]) {
          std::vector<std::string> comp;
          while (true) {
            const std::string w = stack.back();
            stack.pop_back();
            on_stack.erase(w);
            comp.push_back(w);
            if (w == f.node) break;
          }
          std::sort(comp.begin(), comp.end());
          result.components.push_back(std::move(comp));
        }
        const std::string done = f.node;
        call_stack.pop_back();
        if (!call_stack.empty())
          lowlink[call_stack.back().node] =
              std::min(lowlink[call_stack.back().node], lowlink[done]);
      }
    }
  }
  return result;
}

}  // namespace detail

// Builds the stratified graph from accepted relationships. Cycles are broken
// one edge at a time: take the lexicographically first cyclic component,
// drop its lowest-confidence edge (ties by edge key), recompute.
inline DependencyGraph build_dependency_graph(const std::vector<TableMeta> &tables,
                                              const std::vector<Relationship> &relationships) {
  DependencyGraph graph;
  std::set<std::string> known;
  std::vector<std::string> nodes;
  for (const auto &t : tables) known.insert(t.key());
  {
    std::vector<const TableMeta *> sorted;
    for (const auto &t : tables) sorted.push_back(&t);
    std::sort(sorted.begin(), sorted.end(), [](const TableMeta *a, const TableMeta *b) {
      if (a->schema_name != b->schema_name) return a->schema_name < b->schema_name;
      return a->table_name < b->table_name;
    });
    for (const auto *t : sorted) nodes.push_back(t->key());
  }

  for (const auto &r : relationships) {
    validate_relationship(r);
    if (!known.count(r.source_table))
      throw IngestionError("relationship references unknown table: " + r.source_table);
    if (!known.count(r.target_table))
      throw IngestionError("relationship references unknown table: " + r.target_table);
  }

  std::vector<Relationship> retained = relationships;
  std::sort(retained.begin(), retained.end(), [](const Relationship &a, const Relationship &b) {
    return a.edge_key() < b.edge_key();
  });

  while (true) {
    std::map<std::string, std::set<std::string>> adj;
    for (const auto &r : retained) adj[r.source_table].insert(r.target_table);
    auto sccs = detail::strongly_connected_components(nodes, adj);
    std::sort(sccs.components.begin(), sccs.components.end());

    // Self-edges are legitimate hierarchy references, not ordering cycles;
    // only multi-table components get broken.
    const std::vector<std::string> *cyclic = nullptr;
    for (const auto &comp : sccs.components) {
      if (comp.size() > 1) {
        cyclic = &comp;
        break;
      }
    }
    if (!cyclic) break;

    std::set<std::string> members(cyclic->begin(), cyclic->end());
    size_t victim = retained.size();
    for (size_t i = 0; i < retained.size(); ++i) {
      const auto &r = retained[i];
      if (r.source_table == r.target_table) continue;
      if (!members.count(r.source_table) || !members.count(r.target_table)) continue;
      if (victim == retained.size() || r.confidence < retained[victim].confidence ||
          (r.confidence == retained[victim].confidence &&
           r.edge_key() < retained[victim].edge_key())) {
        victim = i;
      }
    }
    graph.removed_cycle_edges.push_back(retained[victim]);
    retained.erase(retained.begin() + static_cast<long>(victim));
  }

  graph.retained_edges = retained;

  std::map<std::string, std::set<std::string>> parents;
  for (const auto &r : graph.retained_edges)
    if (r.source_table != r.target_table) parents[r.source_table].insert(r.target_table);

  // Longest path from the leaves; acyclic by construction.
  std::map<std::string, int> level;
  std::vector<std::string> order = nodes;
  bool progress = true;
  while (progress) {
    progress = false;
    for (const auto &n : order) {
      int lv = 0;
      const auto it = parents.find(n);
      if (it != parents.end()) {
        for (const auto &p : it->second) {
          const auto pl = level.find(p);
          if (pl == level.end()) {
            lv = -1;
            break;
          }
          lv = std::max(lv, pl->second + 1);
        }
      }
      if (lv >= 0) {
        const auto cur = level.find(n);
        if (cur == level.end() || cur->second != lv) {
          level[n] = lv;
          progress = true;
        }
      }
    }
  }

  int max_level = 0;
  for (const auto &[n, lv] : level) max_level = std::max(max_level, lv);
  graph.levels.assign(static_cast<size_t>(max_level) + 1, {});
  for (const auto &n : nodes) graph.levels[static_cast<size_t>(level[n])].push_back(n);
  for (auto &lv : graph.levels) std::sort(lv.begin(), lv.end());
  graph.level_of = std::move(level);
  if (tables.empty()) graph.levels.clear();
  return graph;
}

inline std::vector<std::string> direct_parents(const DependencyGraph &graph,
                                               const std::string &table_key) {
  std::set<std::string> out;
  for (const auto &r : graph.retained_edges)
    if (r.source_table == table_key && r.target_table != table_key) out.insert(r.target_table);
  return {out.begin(), out.end()};
}

inline std::vector<std::string> direct_children(const DependencyGraph &graph,
                                                const std::string &table_key) {
  std::set<std::string> out;
  for (const auto &r : graph.retained_edges)
    if (r.target_table == table_key && r.source_table != table_key) out.insert(r.source_table);
  return {out.begin(), out.end()};
}

}  // namespace schemadoc
