#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "schemadoc/analyzer.hpp"
#include "schemadoc/text_util.hpp"

namespace schemadoc {
namespace mockdetail {

inline const std::map<std::string, std::string> &abbreviation_dictionary() {
  static const std::map<std::string, std::string> dict = {
      {"acct", "account"},   {"addr", "address"},   {"adj", "adjustment"},
      {"amt", "amount"},     {"aud", "audit"},      {"bal", "balance"},
      {"cat", "category"},   {"chk", "check"},      {"crt", "created"},
      {"cst", "customer"},   {"dept", "department"}, {"dt", "date"},
      {"emp", "employee"},   {"flg", "flag"},       {"grp", "group"},
      {"id", "identifier"},  {"inv", "invoice"},    {"ln", "line"},
      {"lvl", "level"},      {"nm", "name"},        {"no", "number"},
      {"ord", "order"},      {"prc", "price"},      {"prd", "product"},
      {"qty", "quantity"},   {"rgn", "region"},     {"seq", "sequence"},
      {"src", "source"},     {"sts", "status"},     {"tot", "total"},
      {"txn", "transaction"}, {"usr", "user"}};
  return dict;
}

inline std::string expand_identifier(const std::string &name) {
  const auto &dict = abbreviation_dictionary();
  std::string out;
  for (const auto &token : split_identifier(name)) {
    const auto it = dict.find(token);
    if (!out.empty()) out += ' ';
    out += (it != dict.end()) ? it->second : token;
  }
  return out;
}

// Words are runs of [A-Za-z0-9_], so planted marker values like
// relay_amber_quartz survive tokenization intact.
inline std::vector<std::string> words_of(const std::string &text) {
  std::vector<std::string> words;
  std::string current;
  for (const char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      current += c;
    } else if (!current.empty()) {
      words.push_back(current);
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(current);
  return words;
}

inline bool is_relay_word(const std::string &word) {
  return word.size() > 6 && word.rfind("relay_", 0) == 0;
}

inline std::set<std::string> relay_words(const std::string &text) {
  std::set<std::string> out;
  for (const auto &w : words_of(text))
    if (is_relay_word(w)) out.insert(w);
  return out;
}

// Descriptions carry propagated tokens in one trailing " [a b c]" block.
inline std::set<std::string> token_block(const std::string &description) {
  std::set<std::string> out;
  if (description.empty() || description.back() != ']') return out;
  const auto open = description.rfind(" [");
  if (open == std::string::npos) return out;
  const std::string inner = description.substr(open + 2, description.size() - open - 3);
  for (const auto &w : words_of(inner)) out.insert(w);
  return out;
}

inline std::string strip_token_block(const std::string &description) {
  if (description.empty() || description.back() != ']') return description;
  const auto open = description.rfind(" [");
  if (open == std::string::npos) return description;
  return description.substr(0, open);
}

inline std::string with_token_block(const std::string &base,
                                    const std::set<std::string> &tokens) {
  if (tokens.empty()) return base;
  std::string out = base + " [";
  bool first = true;
  for (const auto &t : tokens) {
    if (!first) out += ' ';
    out += t;
    first = false;
  }
  return out + ']';
}

inline std::string bare_name(const std::string &table_key) {
  const auto dot = table_key.rfind('.');
  return dot == std::string::npos ? table_key : table_key.substr(dot + 1);
}

inline bool id_suffixed(const std::string &column) {
  const auto tokens = split_identifier(column);
  if (tokens.empty()) return false;
  const auto &last = tokens.back();
  return last == "id" || last == "guid" || last == "uuid";
}

}  // namespace mockdetail

// Offline analyzer: a pure function of the request bundle, so identical
// requests yield byte-identical responses.
class MockAnalyzer : public Analyzer {
 public:
  std::string name() const override { return "mock"; }

  AnalysisResponse analyze(const AnalysisRequest &request) override {
    AnalysisResponse response;
    response.kind = request.kind;
    switch (request.kind) {
      case RequestKind::TABLE_ANALYSIS:
        response.payload = table_analysis(request.context);
        break;
      case RequestKind::REVISION:
        response.payload = revision(request.context);
        break;
      case RequestKind::SANITY_LEVEL:
      case RequestKind::SANITY_SCHEMA:
      case RequestKind::SANITY_CROSS:
        response.payload = sanity(request.context);
        break;
      case RequestKind::SEMANTIC_COMPARISON:
        response.payload = comparison(request.context);
        break;
      case RequestKind::FK_PRUNING:
        response.payload = fk_pruning(request.context);
        break;
      case RequestKind::PK_PRUNING:
        response.payload = pk_pruning(request.context);
        break;
    }
    response.usage.input = synthetic_token_count(request.character_count());
    response.usage.output = synthetic_token_count(response.payload.dump().size());
    return response;
  }

 private:
  static ordered_json table_analysis(const ordered_json &ctx) {
    using namespace mockdetail;
    const std::string table_key = ctx.at("table").get<std::string>();
    const std::string table_name = ctx.at("tableName").get<std::string>();

    bool all_profiled = true;
    bool any_sample = false;
    ordered_json columns = ordered_json::array();
    std::vector<std::string> themes;
    std::string dominant;
    std::set<std::string> tokens;

    for (const auto &col : ctx.at("columns")) {
      const std::string col_name = col.at("name").get<std::string>();
      const bool has_profile = col.contains("profile") && !col.at("profile").is_null();
      const bool has_samples = col.contains("samples") && !col.at("samples").empty();
      if (!has_profile) all_profiled = false;
      if (has_samples) any_sample = true;

      const std::string expanded = expand_identifier(col_name);
      themes.push_back(expanded);
      if (dominant.empty() && !id_suffixed(col_name)) dominant = expanded;

      std::string desc = expanded;
      if (has_profile && col.at("profile").contains("distinct_count"))
        desc += " (" + std::to_string(col.at("profile").at("distinct_count").get<int64_t>()) +
                " distinct values)";
      ordered_json entry;
      entry["column"] = col_name;
      entry["description"] = desc;
      entry["confidence"] = (has_profile && has_samples) ? 0.9 : 0.5;
      columns.push_back(entry);

      if (has_samples)
        for (const auto &s : col.at("samples"))
          if (s.is_string() && is_relay_word(s.get<std::string>()))
            tokens.insert(s.get<std::string>());
    }
    if (dominant.empty()) dominant = expand_identifier(table_name);

    const double confidence =
        (all_profiled && any_sample && !ctx.at("columns").empty()) ? 0.9 : 0.5;

    std::string base = table_name + " stores ";
    for (size_t i = 0; i < themes.size(); ++i)
      base += (i ? ", " : "") + themes[i];
    if (themes.empty()) base += "no recorded attributes";
    std::vector<std::string> parent_names;
    for (const auto &p : ctx.at("parents"))
      parent_names.push_back(p.at("name").get<std::string>());
    if (!parent_names.empty()) {
      base += "; references ";
      for (size_t i = 0; i < parent_names.size(); ++i)
        base += (i ? ", " : "") + parent_names[i];
    }

    if (ctx.contains("priorDescription"))
      for (const auto &w : token_block(ctx.at("priorDescription").get<std::string>()))
        tokens.insert(w);
    const std::string description = with_token_block(base, tokens);

    ordered_json insights = ordered_json::array();
    for (const auto &p : ctx.at("parents")) {
      std::set<std::string> carried;
      carried.insert(table_name);
      for (const auto &w : relay_words(description)) carried.insert(w);
      ordered_json insight;
      insight["aboutParent"] = p.at("table").get<std::string>();
      insight["text"] = with_token_block(
          table_name + " rows reference " + p.at("name").get<std::string>() + " (" +
              dominant + ")",
          carried);
      insight["confidence"] = confidence;
      insights.push_back(insight);
    }

    ordered_json payload;
    payload["tableDescription"] = description;
    payload["confidence"] = confidence;
    payload["columns"] = columns;
    payload["fkSuggestions"] = fk_suggestions(ctx, table_key, table_name);
    payload["insights"] = insights;
    return payload;
  }

  // Naming-driven FK proposals: <OtherTable>ID columns, embedded table
  // names (self-hierarchies included), and shared column names.
  static ordered_json fk_suggestions(const ordered_json &ctx, const std::string &table_key,
                                     const std::string &table_name) {
    using namespace mockdetail;
    ordered_json out = ordered_json::array();
    if (!ctx.contains("tables")) return out;

    const auto known = [&](const std::string &src_col, const std::string &tgt_table) {
      if (!ctx.contains("relationships")) return false;
      for (const auto &r : ctx.at("relationships"))
        if (r.at("sourceTable").get<std::string>() == table_key &&
            equals_ci(r.at("sourceColumn").get<std::string>(), src_col) &&
            r.at("targetTable").get<std::string>() == tgt_table)
          return true;
      return false;
    };

    std::set<std::string> seen;
    const auto propose = [&](const std::string &src_col, const std::string &tgt_table,
                             const std::string &tgt_col, const std::string &why) {
      if (tgt_table == table_key && equals_ci(src_col, tgt_col)) return;
      if (known(src_col, tgt_table)) return;
      const std::string key = src_col + "|" + tgt_table + "|" + tgt_col;
      if (!seen.insert(to_lower(key)).second) return;
      ordered_json p;
      p["sourceTable"] = table_key;
      p["sourceColumn"] = src_col;
      p["targetTable"] = tgt_table;
      p["targetColumn"] = tgt_col;
      p["rationale"] = why;
      out.push_back(p);
    };

    for (const auto &col : ctx.at("columns")) {
      const std::string col_name = col.at("name").get<std::string>();
      const std::string col_lower = to_lower(col_name);
      for (const auto &other : ctx.at("tables")) {
        const std::string other_key = other.at("key").get<std::string>();
        const std::string other_name = other.at("name").get<std::string>();
        const std::string other_lower = to_lower(other_name);
        std::vector<std::string> pk;
        if (other.contains("pk"))
          for (const auto &c : other.at("pk")) pk.push_back(c.get<std::string>());

        if (other_key != table_key &&
            (col_lower == other_lower + "id" || col_lower == other_lower + "_id")) {
          if (pk.size() == 1)
            propose(col_name, other_key, pk[0], "column named after " + other_name + " key");
        }
        if (col_lower.find(other_lower) != std::string::npos &&
            col_lower != other_lower + "id" && col_lower != other_lower + "_id") {
          if (pk.size() == 1)
            propose(col_name, other_key, pk[0], "column name embeds " + other_name);
        }
        if (other_key != table_key && other.contains("columns")) {
          for (const auto &oc : other.at("columns"))
            if (equals_ci(oc.get<std::string>(), col_name))
              propose(col_name, other_key, oc.get<std::string>(),
                      "column name shared with " + other_name);
        }
      }
    }
    return out;
  }

  static ordered_json revision(const ordered_json &ctx) {
    using namespace mockdetail;
    const std::string current = ctx.at("currentDescription").get<std::string>();
    std::set<std::string> needed;
    for (const auto &insight : ctx.at("insights")) {
      needed.insert(bare_name(insight.at("fromTable").get<std::string>()));
      for (const auto &w : relay_words(insight.at("text").get<std::string>()))
        needed.insert(w);
    }
    std::set<std::string> present;
    for (const auto &w : words_of(current)) present.insert(w);
    std::set<std::string> missing;
    for (const auto &t : needed)
      if (!present.count(t)) missing.insert(t);

    ordered_json payload;
    if (missing.empty()) {
      payload["needsRevision"] = false;
      payload["revisedDescription"] = current;
      payload["reasoning"] = "all insight tokens already present";
    } else {
      auto merged = token_block(current);
      for (const auto &t : missing) merged.insert(t);
      payload["needsRevision"] = true;
      payload["revisedDescription"] = with_token_block(strip_token_block(current), merged);
      std::string added;
      for (const auto &t : missing) added += (added.empty() ? "" : " ") + t;
      payload["reasoning"] = "appended insight tokens: " + added;
    }
    payload["confidence"] = 0.9;
    return payload;
  }

  static ordered_json sanity(const ordered_json &ctx) {
    ordered_json violations = ordered_json::array();
    if (ctx.contains("tables")) {
      for (const auto &t : ctx.at("tables")) {
        if (!t.contains("description")) continue;
        if (contains_ci(t.at("description").get<std::string>(), "contradiction")) {
          ordered_json v;
          v["table"] = t.at("table").get<std::string>();
          v["rule"] = "R5";
          v["message"] = "description flags a naming contradiction";
          violations.push_back(v);
        }
      }
    }
    ordered_json payload;
    payload["violations"] = violations;
    return payload;
  }

  static ordered_json comparison(const ordered_json &ctx) {
    const auto old_tokens = token_set(ctx.at("oldDescription").get<std::string>());
    const auto new_tokens = token_set(ctx.at("newDescription").get<std::string>());
    const bool material = jaccard_similarity(old_tokens, new_tokens) < 0.8;
    ordered_json payload;
    payload["classification"] = material ? "material" : "cosmetic";
    return payload;
  }

  static ordered_json fk_pruning(const ordered_json &ctx) {
    ordered_json verdicts = ordered_json::array();
    for (const auto &cand : ctx.at("candidates")) {
      ordered_json v;
      v["edge"] = cand.at("edge").get<std::string>();
      v["keep"] = cand.at("containment").get<double>() >= 0.75;
      v["reason"] = "containment arbitration";
      verdicts.push_back(v);
    }
    ordered_json payload;
    payload["verdicts"] = verdicts;
    return payload;
  }

  static ordered_json pk_pruning(const ordered_json &ctx) {
    ordered_json payload;
    payload["plausible"] = ctx.at("uniqueness").get<double>() >= 0.95;
    payload["reason"] = "uniqueness check";
    return payload;
  }
};

}  // namespace schemadoc
