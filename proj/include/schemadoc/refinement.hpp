#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "schemadoc/analyzer.hpp"
#include "schemadoc/discovery.hpp"
#include "schemadoc/errors.hpp"
#include "schemadoc/profile.hpp"
#include "schemadoc/schema_model.hpp"
#include "schemadoc/snapshot.hpp"

namespace schemadoc {

// ---------------------------------------------------------------------------
// Description store.

struct DescriptionHistoryEntry {
  int iteration = 0;
  std::string text;
  std::string result;  // "changed" | "unchanged"
  std::string reasoning;

  ordered_json to_json() const {
    return {{"iteration", iteration}, {"text", text}, {"result", result},
            {"reasoning", reasoning}};
  }
  static DescriptionHistoryEntry from_json(const ordered_json &j) {
    DescriptionHistoryEntry e;
    e.iteration = j.at("iteration").get<int>();
    e.text = j.at("text").get<std::string>();
    e.result = j.at("result").get<std::string>();
    e.reasoning = j.at("reasoning").get<std::string>();
    return e;
  }
};

struct DescriptionRecord {
  std::string object_id;       // "schema.table" or "schema.table.column"
  std::string kind = "table";  // "table" | "column"
  std::string text;
  double confidence = 0.0;
  bool immutable = false;
  std::string last_reasoning;
  std::vector<DescriptionHistoryEntry> history;

  ordered_json to_json() const {
    ordered_json j;
    j["object_id"] = object_id;
    j["kind"] = kind;
    j["text"] = text;
    j["confidence"] = confidence;
    j["immutable"] = immutable;
    j["last_reasoning"] = last_reasoning;
    j["history"] = ordered_json::array();
    for (const auto &h : history) j["history"].push_back(h.to_json());
    return j;
  }
  static DescriptionRecord from_json(const ordered_json &j) {
    DescriptionRecord r;
    r.object_id = j.at("object_id").get<std::string>();
    r.kind = j.at("kind").get<std::string>();
    r.text = j.at("text").get<std::string>();
    r.confidence = j.at("confidence").get<double>();
    r.immutable = j.at("immutable").get<bool>();
    r.last_reasoning = j.at("last_reasoning").get<std::string>();
    for (const auto &h : j.at("history"))
      r.history.push_back(DescriptionHistoryEntry::from_json(h));
    return r;
  }
};

struct Insight {
  std::string from_table;
  std::string text;
  double confidence = 0.0;
  int iteration = 0;

  ordered_json to_json() const {
    return {{"from_table", from_table}, {"text", text}, {"confidence", confidence},
            {"iteration", iteration}};
  }
  static Insight from_json(const ordered_json &j) {
    Insight i;
    i.from_table = j.at("from_table").get<std::string>();
    i.text = j.at("text").get<std::string>();
    i.confidence = j.at("confidence").get<double>();
    i.iteration = j.at("iteration").get<int>();
    return i;
  }
};

inline ordered_json relationship_to_json(const Relationship &r) {
  ordered_json j;
  j["source_table"] = r.source_table;
  j["source_columns"] = r.source_columns;
  j["target_table"] = r.target_table;
  j["target_columns"] = r.target_columns;
  j["confidence"] = r.confidence;
  j["origin"] = to_string(r.origin);
  return j;
}

inline Relationship relationship_from_json(const ordered_json &j) {
  Relationship r;
  r.source_table = j.at("source_table").get<std::string>();
  for (const auto &c : j.at("source_columns")) r.source_columns.push_back(c.get<std::string>());
  r.target_table = j.at("target_table").get<std::string>();
  for (const auto &c : j.at("target_columns")) r.target_columns.push_back(c.get<std::string>());
  r.confidence = j.at("confidence").get<double>();
  r.origin = relationship_origin_from_string(j.at("origin").get<std::string>());
  return r;
}

// ---------------------------------------------------------------------------
// Convergence.

struct ConvergenceConfig {
  int window = 2;                    // stability window in iterations
  double confidence_threshold = 0.6;
  int max_iterations = 3;
};

inline constexpr int kIterationHardCap = 5;

struct ConvergenceStatus {
  bool stable = false;
  bool confident = false;
  bool semantic = false;
  bool converged = false;

  ordered_json to_json() const {
    return {{"stable", stable}, {"confident", confident}, {"semantic", semantic},
            {"converged", converged}};
  }
  static ConvergenceStatus from_json(const ordered_json &j) {
    return {j.at("stable").get<bool>(), j.at("confident").get<bool>(),
            j.at("semantic").get<bool>(), j.at("converged").get<bool>()};
  }
};

struct IterationRecord {
  int iteration = 0;
  int table_analysis_calls = 0;
  int material_changes = 0;  // text_material + queued_events, drives stability
  int text_material = 0;
  int text_cosmetic = 0;
  int queued_events = 0;
  bool degraded = false;  // semantic comparison fell back to exact match
  std::vector<SanityFinding> violations;
  ConvergenceStatus convergence;

  ordered_json to_json() const {
    ordered_json j;
    j["iteration"] = iteration;
    j["table_analysis_calls"] = table_analysis_calls;
    j["material_changes"] = material_changes;
    j["text_material"] = text_material;
    j["text_cosmetic"] = text_cosmetic;
    j["queued_events"] = queued_events;
    j["degraded"] = degraded;
    j["violations"] = ordered_json::array();
    for (const auto &v : violations)
      j["violations"].push_back(
          {{"table", v.table}, {"rule", v.rule}, {"message", v.message}});
    j["convergence"] = convergence.to_json();
    return j;
  }
  static IterationRecord from_json(const ordered_json &j) {
    IterationRecord r;
    r.iteration = j.at("iteration").get<int>();
    r.table_analysis_calls = j.at("table_analysis_calls").get<int>();
    r.material_changes = j.at("material_changes").get<int>();
    r.text_material = j.at("text_material").get<int>();
    r.text_cosmetic = j.at("text_cosmetic").get<int>();
    r.queued_events = j.at("queued_events").get<int>();
    r.degraded = j.at("degraded").get<bool>();
    for (const auto &v : j.at("violations"))
      r.violations.push_back({v.at("table").get<std::string>(),
                              v.at("rule").get<std::string>(),
                              v.at("message").get<std::string>()});
    r.convergence = ConvergenceStatus::from_json(j.at("convergence"));
    return r;
  }
};

// Three signals, two suffice, never before the second iteration.
inline ConvergenceStatus check_convergence(
    const std::vector<IterationRecord> &iterations,
    const std::map<std::string, DescriptionRecord> &records,
    const ConvergenceConfig &config) {
  ConvergenceStatus status;

  const int n = static_cast<int>(iterations.size());
  if (n >= config.window) {
    status.stable = true;
    for (int i = n - config.window; i < n; ++i)
      if (iterations[static_cast<size_t>(i)].material_changes != 0) status.stable = false;
  }

  status.confident = true;
  for (const auto &[id, rec] : records) {
    if (rec.kind != "table") continue;
    if (rec.confidence < config.confidence_threshold) status.confident = false;
  }

  status.semantic = n > 0 && iterations.back().text_material == 0;

  const int met = (status.stable ? 1 : 0) + (status.confident ? 1 : 0) +
                  (status.semantic ? 1 : 0);
  status.converged = met >= 2 && n >= 2;
  return status;
}

// ---------------------------------------------------------------------------
// Structural sanity rules. R5 is analyzer-side; everything here is computed
// from the snapshot, the profiles, and the accepted keys.

struct SanityOptions {
  bool r1 = true;  // FK targets must be unique and non-null
  bool r2 = true;  // PK columns must not admit nulls
  bool r3 = true;  // self-referencing FK columns must be nullable
  bool r4 = true;  // junction-table shape, informational only
  bool r5 = true;  // analyzer-checked description contradictions
  bool r6 = true;  // at most one accepted PK per table

  bool enabled(const std::string &rule) const {
    if (rule == "R1") return r1;
    if (rule == "R2") return r2;
    if (rule == "R3") return r3;
    if (rule == "R4") return r4;
    if (rule == "R5") return r5;
    if (rule == "R6") return r6;
    return true;
  }
};

inline std::vector<SanityFinding> structural_sanity(
    const SanityOptions &options, const std::vector<std::string> &scope_tables,
    const SchemaSnapshot &snapshot, const ProfileMap &profiles,
    const PkResultMap &pk_results,
    const std::map<std::string, std::vector<std::string>> &chosen_pks,
    const std::vector<Relationship> &relationships) {
  std::vector<SanityFinding> findings;
  std::set<std::string> scope(scope_tables.begin(), scope_tables.end());

  const auto profile_of = [&](const std::string &table, const std::string &column)
      -> const ColumnProfile * {
    const auto it = profiles.find(profile_key(table, column));
    return it == profiles.end() ? nullptr : &it->second;
  };

  std::vector<std::string> tables(scope.begin(), scope.end());
  for (const auto &key : tables) {
    const TableMeta *meta = snapshot.find_table(key);
    if (!meta) continue;

    const auto pk_it = chosen_pks.find(key);
    if (pk_it != chosen_pks.end()) {
      if (options.r2) {
        for (const auto &col : pk_it->second) {
          const ColumnMeta *cm = meta->find_column(col);
          const ColumnProfile *p = profile_of(key, col);
          const bool admits_nulls =
              (cm && cm->nullable) || (p && p->null_fraction > 0.0);
          if (admits_nulls)
            findings.push_back(
                {key, "R2", "primary key column " + col + " admits nulls"});
        }
      }
      if (options.r4 && pk_it->second.size() > 1) {
        bool all_referencing = true;
        for (const auto &col : pk_it->second) {
          bool references = false;
          for (const auto &r : relationships) {
            if (r.source_table != key) continue;
            for (const auto &sc : r.source_columns)
              if (equals_ci(sc, col)) references = true;
          }
          if (!references) all_referencing = false;
        }
        if (all_referencing)
          findings.push_back(
              {key, "R4",
               "composite key columns all reference other tables (junction shape)"});
      }
    }

    if (options.r6) {
      const auto res_it = pk_results.find(key);
      if (res_it != pk_results.end()) {
        int accepted = 0;
        for (const auto &cand : res_it->second.candidates)
          if (cand.accepted) ++accepted;
        if (accepted > 1)
          findings.push_back({key, "R6",
                              std::to_string(accepted) +
                                  " primary key candidates accepted"});
      }
    }
  }

  std::vector<Relationship> sorted_rels = relationships;
  std::sort(sorted_rels.begin(), sorted_rels.end(),
            [](const Relationship &a, const Relationship &b) {
              return a.edge_key() < b.edge_key();
            });
  for (const auto &r : sorted_rels) {
    if (!scope.count(r.source_table)) continue;
    if (options.r1) {
      for (const auto &col : r.target_columns) {
        const ColumnProfile *p = profile_of(r.target_table, col);
        const bool unique_non_null =
            p && !p->empty() && p->uniqueness == 1.0 && !p->uniqueness_is_estimate &&
            p->null_fraction == 0.0;
        if (!unique_non_null) {
          findings.push_back({r.source_table, "R1",
                              "relationship " + r.edge_key() +
                                  " targets a non-unique or nullable column"});
          break;
        }
      }
    }
    if (options.r3 && r.self_referencing()) {
      const TableMeta *meta = snapshot.find_table(r.source_table);
      for (const auto &col : r.source_columns) {
        const ColumnMeta *cm = meta ? meta->find_column(col) : nullptr;
        if (cm && !cm->nullable)
          findings.push_back({r.source_table, "R3",
                              "self-referencing column " + col +
                                  " is declared non-nullable"});
      }
    }
  }
  return findings;
}

// ---------------------------------------------------------------------------
// Budget metering hook. The engine routes every analyzer call through the
// gate; a precheck that refuses throws GuardrailStop and the caller resumes
// from the last persisted boundary.

class BudgetGate {
 public:
  virtual ~BudgetGate() = default;
  virtual void precheck(const AnalysisRequest &request) = 0;
  virtual void charge(const TokenUsage &usage) = 0;
  virtual bool degraded() const = 0;
};

// ---------------------------------------------------------------------------
// Engine state, serializable at level boundaries.

struct InProgressIteration {
  int number = 0;
  std::vector<std::vector<std::string>> levels;
  int next_level = -1;  // -1: queued re-analysis batch still pending
  std::vector<std::string> queued;
  std::set<std::string> analyzed;
  std::map<std::string, std::string> start_texts;
  int table_calls = 0;
  int queued_events = 0;
  std::map<std::string, std::vector<Insight>> insights;  // parent -> accumulated
  std::set<std::string> pending_revision;
  std::vector<SanityFinding> violations;

  ordered_json to_json() const {
    ordered_json j;
    j["number"] = number;
    j["levels"] = levels;
    j["next_level"] = next_level;
    j["queued"] = queued;
    j["analyzed"] = std::vector<std::string>(analyzed.begin(), analyzed.end());
    j["start_texts"] = ordered_json::object();
    for (const auto &[k, v] : start_texts) j["start_texts"][k] = v;
    j["table_calls"] = table_calls;
    j["queued_events"] = queued_events;
    j["insights"] = ordered_json::object();
    for (const auto &[parent, list] : insights) {
      ordered_json arr = ordered_json::array();
      for (const auto &i : list) arr.push_back(i.to_json());
      j["insights"][parent] = std::move(arr);
    }
    j["pending_revision"] =
        std::vector<std::string>(pending_revision.begin(), pending_revision.end());
    j["violations"] = ordered_json::array();
    for (const auto &v : violations)
      j["violations"].push_back(
          {{"table", v.table}, {"rule", v.rule}, {"message", v.message}});
    return j;
  }
  static InProgressIteration from_json(const ordered_json &j) {
    InProgressIteration p;
    p.number = j.at("number").get<int>();
    for (const auto &lvl : j.at("levels")) {
      std::vector<std::string> names;
      for (const auto &n : lvl) names.push_back(n.get<std::string>());
      p.levels.push_back(std::move(names));
    }
    p.next_level = j.at("next_level").get<int>();
    for (const auto &q : j.at("queued")) p.queued.push_back(q.get<std::string>());
    for (const auto &a : j.at("analyzed")) p.analyzed.insert(a.get<std::string>());
    for (const auto &[k, v] : j.at("start_texts").items())
      p.start_texts[k] = v.get<std::string>();
    p.table_calls = j.at("table_calls").get<int>();
    p.queued_events = j.at("queued_events").get<int>();
    for (const auto &[parent, list] : j.at("insights").items())
      for (const auto &i : list) p.insights[parent].push_back(Insight::from_json(i));
    for (const auto &t : j.at("pending_revision"))
      p.pending_revision.insert(t.get<std::string>());
    for (const auto &v : j.at("violations"))
      p.violations.push_back({v.at("table").get<std::string>(),
                              v.at("rule").get<std::string>(),
                              v.at("message").get<std::string>()});
    return p;
  }
};

struct RefinementState {
  std::map<std::string, DescriptionRecord> records;  // by object id
  std::vector<Relationship> relationships;           // sorted by edge key
  std::vector<IterationRecord> iterations;
  std::vector<std::string> queue;  // tables to re-analyze next iteration
  std::set<std::string> violations_seen;
  std::map<std::string, ordered_json> proposal_log;  // edge key -> decision
  std::vector<SanityFinding> final_findings;         // schema + cross scope
  std::optional<InProgressIteration> in_progress;
  bool converged = false;

  ordered_json to_json() const {
    ordered_json j;
    j["records"] = ordered_json::array();
    for (const auto &[id, rec] : records) j["records"].push_back(rec.to_json());
    j["relationships"] = ordered_json::array();
    for (const auto &r : relationships)
      j["relationships"].push_back(relationship_to_json(r));
    j["iterations"] = ordered_json::array();
    for (const auto &it : iterations) j["iterations"].push_back(it.to_json());
    j["queue"] = queue;
    j["violations_seen"] =
        std::vector<std::string>(violations_seen.begin(), violations_seen.end());
    j["proposal_log"] = ordered_json::object();
    for (const auto &[k, v] : proposal_log) j["proposal_log"][k] = v;
    j["final_findings"] = ordered_json::array();
    for (const auto &v : final_findings)
      j["final_findings"].push_back(
          {{"table", v.table}, {"rule", v.rule}, {"message", v.message}});
    j["in_progress"] = in_progress ? in_progress->to_json() : ordered_json();
    j["converged"] = converged;
    return j;
  }
  static RefinementState from_json(const ordered_json &j) {
    RefinementState s;
    for (const auto &r : j.at("records")) {
      DescriptionRecord rec = DescriptionRecord::from_json(r);
      s.records[rec.object_id] = std::move(rec);
    }
    for (const auto &r : j.at("relationships"))
      s.relationships.push_back(relationship_from_json(r));
    for (const auto &it : j.at("iterations"))
      s.iterations.push_back(IterationRecord::from_json(it));
    for (const auto &q : j.at("queue")) s.queue.push_back(q.get<std::string>());
    for (const auto &v : j.at("violations_seen"))
      s.violations_seen.insert(v.get<std::string>());
    for (const auto &[k, v] : j.at("proposal_log").items()) s.proposal_log[k] = v;
    for (const auto &v : j.at("final_findings"))
      s.final_findings.push_back({v.at("table").get<std::string>(),
                                  v.at("rule").get<std::string>(),
                                  v.at("message").get<std::string>()});
    if (!j.at("in_progress").is_null())
      s.in_progress = InProgressIteration::from_json(j.at("in_progress"));
    s.converged = j.at("converged").get<bool>();
    return s;
  }
};

// ---------------------------------------------------------------------------

struct RefinementOptions {
  ConvergenceConfig convergence;
  SanityOptions sanity;
  std::string seed_context;
  std::map<std::string, std::string> ground_truth;  // object id -> description
  FkOptions fk;
  FkWeights fk_weights;

  int iteration_cap() const {
    return std::min(convergence.max_iterations, kIterationHardCap);
  }
};

// Fresh state: ground-truth descriptions become immutable records, the
// discovery edges become the working relationship set.
inline RefinementState make_initial_state(const SchemaSnapshot &snapshot,
                                          const DiscoveryResult &discovery,
                                          const RefinementOptions &options) {
  RefinementState state;
  state.relationships = discovery.accepted_relationships();
  for (const auto &[object_id, text] : options.ground_truth) {
    DescriptionRecord rec;
    rec.object_id = object_id;
    const TableMeta *table = snapshot.find_table(object_id);
    rec.kind = table ? "table" : "column";
    rec.text = text;
    rec.confidence = 1.0;
    rec.immutable = true;
    state.records[object_id] = std::move(rec);
  }
  return state;
}

// Iterative description refinement over the stratified reference graph.
// Parents first, insights flow back up, sanity flags queue re-analysis, and
// the loop stops on convergence or the iteration cap. All analyzer traffic
// goes through run_validated and the optional budget gate; persist fires at
// every point where the state is safe to serialize and resume from.
class RefinementEngine {
 public:
  RefinementEngine(const SchemaSnapshot &snapshot, const ProfileMap &profiles,
                   const PkResultMap &pk_results,
                   const std::map<std::string, std::vector<std::string>> &chosen_pks,
                   Analyzer &analyzer, const RefinementOptions &options,
                   RefinementState &state, BudgetGate *gate = nullptr,
                   std::function<void(const RefinementState &)> persist = {})
      : snapshot_(snapshot),
        profiles_(profiles),
        pk_results_(pk_results),
        chosen_pks_(chosen_pks),
        analyzer_(analyzer),
        options_(options),
        state_(state),
        gate_(gate),
        persist_(std::move(persist)) {}

  RefinementState &state() { return state_; }

  void run() {
    while (!state_.converged) {
      const int completed = static_cast<int>(state_.iterations.size());
      if (!state_.in_progress && completed >= options_.iteration_cap()) break;
      if (!state_.in_progress) begin_iteration();

      InProgressIteration &ip = *state_.in_progress;
      if (ip.next_level < 0) {
        analyze_batch(ip.queued);
        ip.next_level = 0;
        persist();
      }
      while (ip.next_level < static_cast<int>(ip.levels.size())) {
        process_level(ip.next_level);
        ip.next_level++;
        persist();
      }
      finish_iteration();
      persist();
    }
  }

  // Phase 4: per-schema and cross-schema passes over the final store.
  void final_sanity() {
    std::vector<std::string> all_tables;
    std::set<std::string> schemas;
    for (const auto &t : snapshot_.tables) {
      all_tables.push_back(t.key());
      schemas.insert(t.schema_name);
    }
    std::sort(all_tables.begin(), all_tables.end());

    std::vector<SanityFinding> findings = structural_sanity(
        options_.sanity, all_tables, snapshot_, profiles_, pk_results_, chosen_pks_,
        state_.relationships);

    for (const auto &schema : schemas) {
      AnalysisRequest req;
      req.kind = RequestKind::SANITY_SCHEMA;
      req.subject = "schema-" + schema;
      req.effort = "high";
      req.context["schema"] = schema;
      req.context["seedContext"] = options_.seed_context;
      req.context["tables"] = described_tables([&](const TableMeta &t) {
        return t.schema_name == schema;
      });
      for (const auto &f : parse_sanity(invoke(req).payload))
        if (options_.sanity.enabled(f.rule)) findings.push_back(f);
    }

    {
      AnalysisRequest req;
      req.kind = RequestKind::SANITY_CROSS;
      req.subject = "cross-schema";
      req.effort = "high";
      req.context["schemas"] = std::vector<std::string>(schemas.begin(), schemas.end());
      req.context["seedContext"] = options_.seed_context;
      req.context["tables"] = described_tables([](const TableMeta &) { return true; });
      for (const auto &f : parse_sanity(invoke(req).payload))
        if (options_.sanity.enabled(f.rule)) findings.push_back(f);
    }

    state_.final_findings = std::move(findings);
    persist();
  }

 private:
  void persist() {
    if (persist_) persist_(state_);
  }

  AnalysisResponse invoke(const AnalysisRequest &request) {
    if (gate_) gate_->precheck(request);
    AnalysisResponse response = run_validated(analyzer_, request);
    if (gate_) gate_->charge(response.usage);
    return response;
  }

  DescriptionRecord &record_for(const std::string &object_id, const std::string &kind) {
    auto it = state_.records.find(object_id);
    if (it == state_.records.end()) {
      DescriptionRecord rec;
      rec.object_id = object_id;
      rec.kind = kind;
      it = state_.records.emplace(object_id, std::move(rec)).first;
    }
    return it->second;
  }

  bool is_immutable(const std::string &table_key) const {
    const auto it = state_.records.find(table_key);
    return it != state_.records.end() && it->second.immutable;
  }

  std::string record_text(const std::string &object_id) const {
    const auto it = state_.records.find(object_id);
    return it == state_.records.end() ? std::string() : it->second.text;
  }

  void begin_iteration() {
    InProgressIteration ip;
    ip.number = static_cast<int>(state_.iterations.size()) + 1;

    const DependencyGraph graph =
        build_dependency_graph(snapshot_.tables, state_.relationships);
    ip.levels = graph.levels;
    for (auto &level : ip.levels) std::sort(level.begin(), level.end());

    for (const auto &key : state_.queue) {
      if (!snapshot_.find_table(key) || is_immutable(key)) continue;
      ip.queued.push_back(key);
    }
    std::sort(ip.queued.begin(), ip.queued.end());
    ip.queued.erase(std::unique(ip.queued.begin(), ip.queued.end()), ip.queued.end());
    state_.queue.clear();

    for (const auto &[id, rec] : state_.records)
      if (rec.kind == "table" && !rec.immutable) ip.start_texts[id] = rec.text;

    state_.in_progress = std::move(ip);
    persist();
  }

  void process_level(int level_index) {
    InProgressIteration &ip = *state_.in_progress;
    const std::vector<std::string> &level = ip.levels[static_cast<size_t>(level_index)];

    std::vector<std::string> to_analyze;
    for (const auto &key : level)
      if (!is_immutable(key) && !ip.analyzed.count(key)) to_analyze.push_back(key);
    analyze_batch(to_analyze);
    level_sanity(level_index, level);
  }

  // One barrier: every table in the batch is analyzed against the store as it
  // stood at batch start, then results are applied, proposals validated, and
  // parents revised with whatever insights have piled up.
  void analyze_batch(const std::vector<std::string> &tables) {
    InProgressIteration &ip = *state_.in_progress;

    std::vector<std::pair<std::string, TableAnalysis>> results;
    for (const auto &key : tables) {
      AnalysisRequest req = build_analysis_request(key, ip.number);
      AnalysisResponse resp = invoke(req);
      results.emplace_back(key, parse_table_analysis(resp.payload));
      ip.table_calls++;
      ip.analyzed.insert(key);
    }

    for (const auto &[key, analysis] : results) apply_analysis(key, analysis);

    for (const auto &[key, analysis] : results)
      for (const auto &proposal : analysis.fk_suggestions) feed_proposal(proposal);

    for (const auto &[key, analysis] : results) {
      for (const auto &insight : analysis.insights) {
        const std::string &parent = insight.about_parent;
        if (!snapshot_.find_table(parent) || is_immutable(parent)) continue;
        ip.insights[parent].push_back(
            {key, insight.text, insight.confidence, ip.number});
        ip.pending_revision.insert(parent);
      }
    }

    revise_pending_parents();
  }

  void apply_analysis(const std::string &table_key, const TableAnalysis &analysis) {
    DescriptionRecord &rec = record_for(table_key, "table");
    rec.text = analysis.table_description;
    rec.confidence = analysis.confidence;
    rec.last_reasoning.clear();

    const TableMeta *meta = snapshot_.find_table(table_key);
    for (const auto &col : analysis.columns) {
      if (meta && !meta->find_column(col.column)) continue;
      DescriptionRecord &crec =
          record_for(profile_key(table_key, col.column), "column");
      if (crec.immutable) continue;
      if (crec.text != col.description) {
        crec.history.push_back(
            {state_.in_progress->number, col.description, "changed", ""});
      }
      crec.text = col.description;
      crec.confidence = col.confidence;
    }
  }

  void feed_proposal(const FkProposal &proposal) {
    const std::string key = proposal.source_table + "(" + proposal.source_column +
                            ")->" + proposal.target_table + "(" +
                            proposal.target_column + ")";
    if (state_.proposal_log.count(key)) return;

    const FkCandidate cand =
        validate_proposed_fk(proposal, snapshot_, profiles_, chosen_pks_,
                             options_.fk_weights, state_.relationships, options_.fk);

    ordered_json entry;
    entry["source_table"] = cand.source_table;
    entry["source_column"] = cand.source_column;
    entry["target_table"] = cand.target_table;
    entry["target_column"] = cand.target_column;
    entry["accepted"] = cand.accepted;
    entry["score"] = cand.score;
    entry["containment"] = cand.containment;
    entry["note"] = cand.tier_dropped ? cand.drop_reason : "";
    entry["gates"] = ordered_json::array();
    for (const auto &g : cand.gates)
      entry["gates"].push_back({{"gate", g.gate}, {"passed", g.passed}});
    entry["iteration"] = state_.in_progress->number;
    state_.proposal_log[key] = std::move(entry);

    if (cand.accepted) {
      Relationship r;
      r.source_table = cand.source_table;
      r.source_columns = {cand.source_column};
      r.target_table = cand.target_table;
      r.target_columns = {cand.target_column};
      r.confidence = cand.score;
      r.origin = RelationshipOrigin::ANALYZER_PROPOSED;
      state_.relationships.push_back(std::move(r));
      std::sort(state_.relationships.begin(), state_.relationships.end(),
                [](const Relationship &a, const Relationship &b) {
                  return a.edge_key() < b.edge_key();
                });
    }
  }

  void revise_pending_parents() {
    InProgressIteration &ip = *state_.in_progress;
    const std::vector<std::string> pending(ip.pending_revision.begin(),
                                           ip.pending_revision.end());
    for (const auto &parent : pending) {
      DescriptionRecord &rec = record_for(parent, "table");
      if (rec.immutable) {
        ip.pending_revision.erase(parent);
        continue;
      }
      // A parent that has not been analyzed yet (cycle-removed edge pointing
      // upward) keeps its insights until it has a description to revise.
      if (rec.text.empty()) continue;

      AnalysisRequest req;
      req.kind = RequestKind::REVISION;
      req.subject = parent;
      req.context["table"] = parent;
      req.context["tableName"] = bare_table_name(parent);
      req.context["iteration"] = ip.number;
      req.context["currentDescription"] = rec.text;
      std::vector<Insight> sorted = ip.insights[parent];
      std::sort(sorted.begin(), sorted.end(), [](const Insight &a, const Insight &b) {
        if (a.from_table != b.from_table) return a.from_table < b.from_table;
        return a.text < b.text;
      });
      req.context["insights"] = ordered_json::array();
      for (const auto &i : sorted)
        req.context["insights"].push_back({{"fromTable", i.from_table},
                                           {"text", i.text},
                                           {"confidence", i.confidence}});
      req.context["violations"] = violations_for(parent);
      req.context["seedContext"] = options_.seed_context;

      const RevisionOutcome outcome = parse_revision(invoke(req).payload);
      if (outcome.needs_revision) {
        rec.text = outcome.revised_description;
        rec.confidence = outcome.confidence;
        rec.last_reasoning = outcome.reasoning;
      }
      ip.pending_revision.erase(parent);
    }
  }

  ordered_json violations_for(const std::string &table_key) const {
    ordered_json arr = ordered_json::array();
    if (state_.in_progress) {
      for (const auto &v : state_.in_progress->violations)
        if (v.table == table_key)
          arr.push_back({{"rule", v.rule}, {"message", v.message}});
    }
    return arr;
  }

  void level_sanity(int level_index, const std::vector<std::string> &level) {
    InProgressIteration &ip = *state_.in_progress;

    std::vector<SanityFinding> findings =
        structural_sanity(options_.sanity, level, snapshot_, profiles_, pk_results_,
                          chosen_pks_, state_.relationships);

    AnalysisRequest req;
    req.kind = RequestKind::SANITY_LEVEL;
    req.subject = "level-" + std::to_string(level_index);
    req.effort = "high";
    req.context["level"] = level_index;
    req.context["iteration"] = ip.number;
    req.context["seedContext"] = options_.seed_context;
    req.context["tables"] = ordered_json::array();
    for (const auto &key : level)
      req.context["tables"].push_back(
          {{"table", key}, {"description", record_text(key)}});
    for (const auto &f : parse_sanity(invoke(req).payload))
      if (options_.sanity.enabled(f.rule)) findings.push_back(f);

    for (const auto &f : findings) {
      ip.violations.push_back(f);
      const std::string seen_key = f.table + "|" + f.rule + "|" + f.message;
      if (state_.violations_seen.count(seen_key)) continue;
      state_.violations_seen.insert(seen_key);
      if (f.rule == "R4") continue;  // informational, never queues
      if (!snapshot_.find_table(f.table) || is_immutable(f.table)) continue;
      if (std::find(state_.queue.begin(), state_.queue.end(), f.table) ==
          state_.queue.end()) {
        state_.queue.push_back(f.table);
        std::sort(state_.queue.begin(), state_.queue.end());
        ip.queued_events++;
      }
    }
  }

  void finish_iteration() {
    InProgressIteration &ip = *state_.in_progress;
    IterationRecord rec;
    rec.iteration = ip.number;
    rec.table_analysis_calls = ip.table_calls;
    rec.queued_events = ip.queued_events;
    rec.violations = ip.violations;

    const bool degraded = gate_ && gate_->degraded();
    for (auto &[id, record] : state_.records) {
      if (record.kind != "table" || record.immutable) continue;
      const auto start_it = ip.start_texts.find(id);
      const std::string start = start_it == ip.start_texts.end() ? "" : start_it->second;
      if (record.text == start) {
        record.history.push_back({ip.number, record.text, "unchanged", ""});
        continue;
      }
      bool material = true;
      if (!start.empty() && !record.text.empty()) {
        if (degraded) {
          rec.degraded = true;  // exact-match fallback: any change is material
        } else {
          AnalysisRequest req;
          req.kind = RequestKind::SEMANTIC_COMPARISON;
          req.subject = id;
          req.context["oldDescription"] = start;
          req.context["newDescription"] = record.text;
          material = parse_is_material(invoke(req).payload);
        }
      }
      record.history.push_back(
          {ip.number, record.text, "changed", record.last_reasoning});
      if (material)
        rec.text_material++;
      else
        rec.text_cosmetic++;
    }

    rec.material_changes = rec.text_material + rec.queued_events;
    state_.iterations.push_back(rec);
    state_.in_progress.reset();

    const ConvergenceStatus status =
        check_convergence(state_.iterations, state_.records, options_.convergence);
    state_.iterations.back().convergence = status;
    state_.converged = status.converged;
  }

  static std::string bare_table_name(const std::string &key) {
    const auto pos = key.rfind('.');
    return pos == std::string::npos ? key : key.substr(pos + 1);
  }

  template <typename Pred>
  ordered_json described_tables(Pred pred) const {
    ordered_json arr = ordered_json::array();
    std::vector<const TableMeta *> sorted;
    for (const auto &t : snapshot_.tables)
      if (pred(t)) sorted.push_back(&t);
    std::sort(sorted.begin(), sorted.end(), [](const TableMeta *a, const TableMeta *b) {
      return a->key() < b->key();
    });
    for (const auto *t : sorted)
      arr.push_back({{"table", t->key()}, {"description", record_text(t->key())}});
    return arr;
  }

  AnalysisRequest build_analysis_request(const std::string &table_key, int iteration) {
    const TableMeta *meta = snapshot_.find_table(table_key);
    if (!meta) throw StateError("analysis requested for unknown table: " + table_key);

    AnalysisRequest req;
    req.kind = RequestKind::TABLE_ANALYSIS;
    req.subject = table_key;
    ordered_json &ctx = req.context;
    ctx["table"] = table_key;
    ctx["tableName"] = meta->table_name;
    ctx["iteration"] = iteration;
    ctx["seedContext"] = options_.seed_context;
    if (!meta->description.empty()) ctx["catalogComment"] = meta->description;

    ctx["columns"] = ordered_json::array();
    for (const auto &col : meta->columns) {
      ordered_json c;
      c["name"] = col.name;
      c["type"] = to_string(col.type);
      c["nullable"] = col.nullable;
      if (!col.description.empty()) c["comment"] = col.description;
      const auto pit = profiles_.find(profile_key(table_key, col.name));
      if (pit != profiles_.end()) {
        c["profile"] = pit->second.to_json();
        c["samples"] = pit->second.sample_values;
      } else {
        c["profile"] = ordered_json();
        c["samples"] = ordered_json::array();
      }
      ctx["columns"].push_back(std::move(c));
    }

    // Direct parents only; the scoping rule keeps every other description out.
    struct ParentEntry {
      std::string table, via;
    };
    std::vector<ParentEntry> parents;
    for (const auto &r : state_.relationships) {
      if (r.source_table != table_key || r.target_table == table_key) continue;
      parents.push_back({r.target_table, join_columns(r.source_columns)});
    }
    std::sort(parents.begin(), parents.end(),
              [](const ParentEntry &a, const ParentEntry &b) {
                if (a.table != b.table) return a.table < b.table;
                return a.via < b.via;
              });
    ctx["parents"] = ordered_json::array();
    for (const auto &p : parents)
      ctx["parents"].push_back({{"table", p.table},
                                {"name", bare_table_name(p.table)},
                                {"via", p.via},
                                {"description", record_text(p.table)}});

    ordered_json gt_neighbors = ordered_json::array();
    struct NeighborEntry {
      std::string table, direction, via;
    };
    std::vector<NeighborEntry> neighbors;
    for (const auto &r : state_.relationships) {
      if (r.source_table == table_key && r.target_table != table_key &&
          is_immutable(r.target_table))
        neighbors.push_back({r.target_table, "parent", join_columns(r.source_columns)});
      if (r.target_table == table_key && r.source_table != table_key &&
          is_immutable(r.source_table))
        neighbors.push_back({r.source_table, "child", join_columns(r.source_columns)});
    }
    std::sort(neighbors.begin(), neighbors.end(),
              [](const NeighborEntry &a, const NeighborEntry &b) {
                if (a.table != b.table) return a.table < b.table;
                if (a.direction != b.direction) return a.direction < b.direction;
                return a.via < b.via;
              });
    for (const auto &n : neighbors)
      gt_neighbors.push_back({{"table", n.table},
                              {"name", bare_table_name(n.table)},
                              {"direction", n.direction},
                              {"via", n.via},
                              {"description", record_text(n.table)}});
    if (!gt_neighbors.empty()) ctx["groundTruthNeighbors"] = std::move(gt_neighbors);

    ctx["tables"] = ordered_json::array();
    std::vector<const TableMeta *> roster;
    for (const auto &t : snapshot_.tables) roster.push_back(&t);
    std::sort(roster.begin(), roster.end(), [](const TableMeta *a, const TableMeta *b) {
      return a->key() < b->key();
    });
    for (const auto *t : roster) {
      ordered_json entry;
      entry["key"] = t->key();
      entry["name"] = t->table_name;
      const auto pk_it = chosen_pks_.find(t->key());
      entry["pk"] = pk_it == chosen_pks_.end() ? std::vector<std::string>{}
                                               : pk_it->second;
      std::vector<std::string> names;
      for (const auto &c : t->columns) names.push_back(c.name);
      entry["columns"] = names;
      ctx["tables"].push_back(std::move(entry));
    }

    ctx["relationships"] = ordered_json::array();
    for (const auto &r : state_.relationships)
      ctx["relationships"].push_back({{"sourceTable", r.source_table},
                                      {"sourceColumn", join_columns(r.source_columns)},
                                      {"targetTable", r.target_table},
                                      {"targetColumn", join_columns(r.target_columns)}});

    const DescriptionRecord *rec = nullptr;
    const auto rit = state_.records.find(table_key);
    if (rit != state_.records.end()) rec = &rit->second;
    if (rec && !rec->text.empty()) {
      ctx["priorDescription"] = rec->text;
      ctx["priorReasoning"] = rec->last_reasoning;
    }
    return req;
  }

  static std::string join_columns(const std::vector<std::string> &cols) {
    std::string out;
    for (size_t i = 0; i < cols.size(); ++i) {
      if (i) out += "+";
      out += cols[i];
    }
    return out;
  }

  const SchemaSnapshot &snapshot_;
  const ProfileMap &profiles_;
  const PkResultMap &pk_results_;
  const std::map<std::string, std::vector<std::string>> &chosen_pks_;
  Analyzer &analyzer_;
  RefinementOptions options_;
  RefinementState &state_;
  BudgetGate *gate_;
  std::function<void(const RefinementState &)> persist_;
};

}  // namespace schemadoc
