#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "schemadoc/errors.hpp"
#include "schemadoc/fk_discovery.hpp"
#include "schemadoc/json_schema.hpp"

namespace schemadoc {

// Semantic analysis requests. The first six kinds drive the refinement loop;
// the pruning kinds are addressable through the same gateway for candidate
// arbitration but are not issued by the standard iteration schedule.
enum class RequestKind {
  TABLE_ANALYSIS,
  REVISION,
  SANITY_LEVEL,
  SANITY_SCHEMA,
  SANITY_CROSS,
  SEMANTIC_COMPARISON,
  FK_PRUNING,
  PK_PRUNING,
};

inline std::string to_string(RequestKind k) {
  switch (k) {
    case RequestKind::TABLE_ANALYSIS: return "TABLE_ANALYSIS";
    case RequestKind::REVISION: return "REVISION";
    case RequestKind::SANITY_LEVEL: return "SANITY_LEVEL";
    case RequestKind::SANITY_SCHEMA: return "SANITY_SCHEMA";
    case RequestKind::SANITY_CROSS: return "SANITY_CROSS";
    case RequestKind::SEMANTIC_COMPARISON: return "SEMANTIC_COMPARISON";
    case RequestKind::FK_PRUNING: return "FK_PRUNING";
    case RequestKind::PK_PRUNING: return "PK_PRUNING";
  }
  return "UNKNOWN";
}

// Template role (file stem under the template directory) serving each kind.
inline std::string template_role_for(RequestKind k) {
  switch (k) {
    case RequestKind::TABLE_ANALYSIS: return "table-analysis";
    case RequestKind::REVISION: return "backpropagation";
    case RequestKind::SANITY_LEVEL: return "dep-level-sanity";
    case RequestKind::SANITY_SCHEMA: return "schema-sanity";
    case RequestKind::SANITY_CROSS: return "cross-schema-sanity";
    case RequestKind::SEMANTIC_COMPARISON: return "semantic-comparison";
    case RequestKind::FK_PRUNING: return "fk-pruning";
    case RequestKind::PK_PRUNING: return "pk-pruning";
  }
  return "unknown";
}

inline const std::vector<std::string> &all_template_roles() {
  static const std::vector<std::string> roles = {
      "table-analysis",     "backpropagation", "fk-pruning",
      "pk-pruning",         "dep-level-sanity", "schema-sanity",
      "cross-schema-sanity", "semantic-comparison"};
  return roles;
}

struct AnalysisRequest {
  RequestKind kind = RequestKind::TABLE_ANALYSIS;
  // Table key for table-scoped kinds, level/schema label for sanity scopes.
  std::string subject;
  // Assembled context bundle; exact contents documented per kind in the
  // config reference. Serialized verbatim into the rendered prompt.
  ordered_json context = ordered_json::object();
  double temperature = 0.1;
  // Optional effort pass-through ("high" during sanity checks).
  std::string effort;

  size_t character_count() const {
    return to_string(kind).size() + subject.size() + context.dump().size();
  }
};

struct TokenUsage {
  int64_t input = 0;
  int64_t output = 0;
};

struct AnalysisResponse {
  RequestKind kind = RequestKind::TABLE_ANALYSIS;
  ordered_json payload = ordered_json::object();
  TokenUsage usage;
};

inline int64_t synthetic_token_count(size_t chars) {
  return static_cast<int64_t>(chars / 4);
}

// ---------------------------------------------------------------------------
// Response schemas, one per request kind.

inline const ordered_json &response_schema_for(RequestKind k) {
  static const ordered_json table_analysis = ordered_json::parse(R"({
    "type": "object",
    "required": ["tableDescription", "confidence", "columns", "fkSuggestions", "insights"],
    "additionalProperties": false,
    "properties": {
      "tableDescription": {"type": "string", "minLength": 1},
      "confidence": {"type": "number", "minimum": 0, "maximum": 1},
      "columns": {
        "type": "array",
        "items": {
          "type": "object",
          "required": ["column", "description", "confidence"],
          "additionalProperties": false,
          "properties": {
            "column": {"type": "string", "minLength": 1},
            "description": {"type": "string"},
            "confidence": {"type": "number", "minimum": 0, "maximum": 1}
          }
        }
      },
      "fkSuggestions": {
        "type": "array",
        "items": {
          "type": "object",
          "required": ["sourceTable", "sourceColumn", "targetTable", "targetColumn"],
          "additionalProperties": false,
          "properties": {
            "sourceTable": {"type": "string"},
            "sourceColumn": {"type": "string"},
            "targetTable": {"type": "string"},
            "targetColumn": {"type": "string"},
            "rationale": {"type": "string"}
          }
        }
      },
      "insights": {
        "type": "array",
        "items": {
          "type": "object",
          "required": ["aboutParent", "text", "confidence"],
          "additionalProperties": false,
          "properties": {
            "aboutParent": {"type": "string"},
            "text": {"type": "string"},
            "confidence": {"type": "number", "minimum": 0, "maximum": 1}
          }
        }
      }
    }
  })");
  static const ordered_json revision = ordered_json::parse(R"({
    "type": "object",
    "required": ["needsRevision", "revisedDescription", "reasoning", "confidence"],
    "additionalProperties": false,
    "properties": {
      "needsRevision": {"type": "boolean"},
      "revisedDescription": {"type": "string"},
      "reasoning": {"type": "string"},
      "confidence": {"type": "number", "minimum": 0, "maximum": 1}
    }
  })");
  static const ordered_json sanity = ordered_json::parse(R"({
    "type": "object",
    "required": ["violations"],
    "additionalProperties": false,
    "properties": {
      "violations": {
        "type": "array",
        "items": {
          "type": "object",
          "required": ["table", "rule", "message"],
          "additionalProperties": false,
          "properties": {
            "table": {"type": "string"},
            "rule": {"type": "string"},
            "message": {"type": "string"}
          }
        }
      }
    }
  })");
  static const ordered_json comparison = ordered_json::parse(R"({
    "type": "object",
    "required": ["classification"],
    "additionalProperties": false,
    "properties": {
      "classification": {"type": "string", "enum": ["material", "cosmetic"]}
    }
  })");
  static const ordered_json fk_pruning = ordered_json::parse(R"({
    "type": "object",
    "required": ["verdicts"],
    "additionalProperties": false,
    "properties": {
      "verdicts": {
        "type": "array",
        "items": {
          "type": "object",
          "required": ["edge", "keep"],
          "additionalProperties": false,
          "properties": {
            "edge": {"type": "string"},
            "keep": {"type": "boolean"},
            "reason": {"type": "string"}
          }
        }
      }
    }
  })");
  static const ordered_json pk_pruning = ordered_json::parse(R"({
    "type": "object",
    "required": ["plausible"],
    "additionalProperties": false,
    "properties": {
      "plausible": {"type": "boolean"},
      "reason": {"type": "string"}
    }
  })");

  switch (k) {
    case RequestKind::TABLE_ANALYSIS: return table_analysis;
    case RequestKind::REVISION: return revision;
    case RequestKind::SANITY_LEVEL:
    case RequestKind::SANITY_SCHEMA:
    case RequestKind::SANITY_CROSS: return sanity;
    case RequestKind::SEMANTIC_COMPARISON: return comparison;
    case RequestKind::FK_PRUNING: return fk_pruning;
    case RequestKind::PK_PRUNING: return pk_pruning;
  }
  return sanity;
}

// ---------------------------------------------------------------------------
// Typed views over validated payloads.

struct ColumnAnnotation {
  std::string column;
  std::string description;
  double confidence = 0.0;
};

struct ParentInsight {
  std::string about_parent;
  std::string text;
  double confidence = 0.0;
};

struct TableAnalysis {
  std::string table_description;
  double confidence = 0.0;
  std::vector<ColumnAnnotation> columns;
  std::vector<FkProposal> fk_suggestions;
  std::vector<ParentInsight> insights;
};

struct RevisionOutcome {
  bool needs_revision = false;
  std::string revised_description;
  std::string reasoning;
  double confidence = 0.0;
};

struct SanityFinding {
  std::string table;
  std::string rule;
  std::string message;
};

inline TableAnalysis parse_table_analysis(const ordered_json &payload) {
  TableAnalysis out;
  out.table_description = payload.at("tableDescription").get<std::string>();
  out.confidence = payload.at("confidence").get<double>();
  for (const auto &c : payload.at("columns"))
    out.columns.push_back({c.at("column").get<std::string>(),
                           c.at("description").get<std::string>(),
                           c.at("confidence").get<double>()});
  for (const auto &f : payload.at("fkSuggestions")) {
    FkProposal p;
    p.source_table = f.at("sourceTable").get<std::string>();
    p.source_column = f.at("sourceColumn").get<std::string>();
    p.target_table = f.at("targetTable").get<std::string>();
    p.target_column = f.at("targetColumn").get<std::string>();
    if (f.contains("rationale")) p.rationale = f.at("rationale").get<std::string>();
    out.fk_suggestions.push_back(std::move(p));
  }
  for (const auto &i : payload.at("insights"))
    out.insights.push_back({i.at("aboutParent").get<std::string>(),
                            i.at("text").get<std::string>(),
                            i.at("confidence").get<double>()});
  return out;
}

inline RevisionOutcome parse_revision(const ordered_json &payload) {
  return {payload.at("needsRevision").get<bool>(),
          payload.at("revisedDescription").get<std::string>(),
          payload.at("reasoning").get<std::string>(),
          payload.at("confidence").get<double>()};
}

inline std::vector<SanityFinding> parse_sanity(const ordered_json &payload) {
  std::vector<SanityFinding> out;
  for (const auto &v : payload.at("violations"))
    out.push_back({v.at("table").get<std::string>(), v.at("rule").get<std::string>(),
                   v.at("message").get<std::string>()});
  return out;
}

inline bool parse_is_material(const ordered_json &payload) {
  return payload.at("classification").get<std::string>() == "material";
}

// ---------------------------------------------------------------------------

class Analyzer {
 public:
  virtual ~Analyzer() = default;
  virtual AnalysisResponse analyze(const AnalysisRequest &request) = 0;
  virtual std::string name() const = 0;
};

// Runs a request and refuses to hand back a payload that fails its response
// schema; invalid responses never reach pipeline state.
inline AnalysisResponse run_validated(Analyzer &analyzer, const AnalysisRequest &request) {
  AnalysisResponse response = analyzer.analyze(request);
  const auto errors = validate_json(response_schema_for(request.kind), response.payload);
  if (!errors.empty()) {
    std::string joined;
    for (const auto &e : errors) joined += (joined.empty() ? "" : "; ") + e;
    throw AnalyzerError("response failed schema validation: " + joined);
  }
  return response;
}

inline bool material_change(Analyzer &analyzer, const std::string &old_desc,
                            const std::string &new_desc) {
  AnalysisRequest req;
  req.kind = RequestKind::SEMANTIC_COMPARISON;
  req.subject = "comparison";
  req.context["oldDescription"] = old_desc;
  req.context["newDescription"] = new_desc;
  return parse_is_material(run_validated(analyzer, req).payload);
}

// ---------------------------------------------------------------------------
// Prompt templates: plain text files with {{placeholder}} substitution.

inline std::string render_template(const std::string &text,
                                   const std::map<std::string, std::string> &vars) {
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find("{{", pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    const auto close = text.find("}}", open + 2);
    if (close == std::string::npos)
      throw AnalyzerError("unterminated placeholder in template");
    out.append(text, pos, open - pos);
    std::string key = text.substr(open + 2, close - open - 2);
    const auto from = key.find_first_not_of(" \t");
    const auto to = key.find_last_not_of(" \t");
    key = (from == std::string::npos) ? "" : key.substr(from, to - from + 1);
    const auto it = vars.find(key);
    if (it == vars.end()) throw AnalyzerError("unbound template placeholder '" + key + "'");
    out += it->second;
    pos = close + 2;
  }
  return out;
}

inline std::string load_template_file(const std::filesystem::path &dir,
                                      const std::string &role) {
  const auto path = dir / (role + ".tmpl");
  std::ifstream in(path);
  if (!in) throw AnalyzerError("missing template file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Startup check for an HTTP-backed run: every role must have a template.
inline void verify_template_directory(const std::filesystem::path &dir) {
  for (const auto &role : all_template_roles()) load_template_file(dir, role);
}

}  // namespace schemadoc
