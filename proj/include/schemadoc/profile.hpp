#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "schemadoc/schema_model.hpp"
#include "schemadoc/values.hpp"

namespace schemadoc {

struct ValueCount {
  std::string value;
  int64_t count = 0;
};

// Statistical portrait of one column, computed over the sampled rows.
// uniqueness is exact when the sample covers the whole table, otherwise the
// sample distinct ratio flagged as an estimate.
struct ColumnProfile {
  int64_t table_rows = 0;     // manifest row count
  int64_t profiled_rows = 0;  // rows the profile was computed over
  int64_t distinct_count = 0;
  double uniqueness = 0.0;
  bool uniqueness_is_estimate = false;
  double null_fraction = 0.0;
  double blank_or_zero_fraction = 0.0;
  std::string min_text;
  std::string max_text;
  std::vector<ValueCount> top_values;       // up to 10, by descending count
  std::vector<std::string> sample_values;   // up to 10 distinct non-null values
  // Type-specific distribution facts.
  std::optional<double> p25, p50, p75;                     // numeric columns
  std::optional<int64_t> len_min, len_max;                 // string columns
  std::optional<double> len_avg;                           // string columns
  std::optional<std::string> date_min, date_max;           // date/time columns

  bool empty() const { return profiled_rows == 0; }
  bool mostly_blank_or_zero() const { return blank_or_zero_fraction > 0.5; }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["table_rows"] = table_rows;
    j["profiled_rows"] = profiled_rows;
    j["distinct_count"] = distinct_count;
    j["uniqueness"] = uniqueness;
    j["uniqueness_is_estimate"] = uniqueness_is_estimate;
    j["null_fraction"] = null_fraction;
    j["blank_or_zero_fraction"] = blank_or_zero_fraction;
    j["min"] = min_text;
    j["max"] = max_text;
    j["top_values"] = nlohmann::ordered_json::array();
    for (const auto &tv : top_values)
      j["top_values"].push_back({{"value", tv.value}, {"count", tv.count}});
    j["sample_values"] = sample_values;
    if (p25) j["p25"] = *p25;
    if (p50) j["p50"] = *p50;
    if (p75) j["p75"] = *p75;
    if (len_min) j["len_min"] = *len_min;
    if (len_avg) j["len_avg"] = *len_avg;
    if (len_max) j["len_max"] = *len_max;
    if (date_min) j["date_min"] = *date_min;
    if (date_max) j["date_max"] = *date_max;
    return j;
  }

  static ColumnProfile from_json(const nlohmann::ordered_json &j) {
    ColumnProfile p;
    p.table_rows = j.at("table_rows").get<int64_t>();
    p.profiled_rows = j.at("profiled_rows").get<int64_t>();
    p.distinct_count = j.at("distinct_count").get<int64_t>();
    p.uniqueness = j.at("uniqueness").get<double>();
    p.uniqueness_is_estimate = j.at("uniqueness_is_estimate").get<bool>();
    p.null_fraction = j.at("null_fraction").get<double>();
    p.blank_or_zero_fraction = j.at("blank_or_zero_fraction").get<double>();
    p.min_text = j.at("min").get<std::string>();
    p.max_text = j.at("max").get<std::string>();
    for (const auto &tv : j.at("top_values"))
      p.top_values.push_back({tv.at("value").get<std::string>(), tv.at("count").get<int64_t>()});
    for (const auto &sv : j.at("sample_values")) p.sample_values.push_back(sv.get<std::string>());
    if (j.contains("p25")) p.p25 = j.at("p25").get<double>();
    if (j.contains("p50")) p.p50 = j.at("p50").get<double>();
    if (j.contains("p75")) p.p75 = j.at("p75").get<double>();
    if (j.contains("len_min")) p.len_min = j.at("len_min").get<int64_t>();
    if (j.contains("len_avg")) p.len_avg = j.at("len_avg").get<double>();
    if (j.contains("len_max")) p.len_max = j.at("len_max").get<int64_t>();
    if (j.contains("date_min")) p.date_min = j.at("date_min").get<std::string>();
    if (j.contains("date_max")) p.date_max = j.at("date_max").get<std::string>();
    return p;
  }
};

namespace detail {

// Nearest-rank percentile over an ascending vector (rank = ceil(p * n)).
inline double nearest_rank(const std::vector<double> &sorted, double p) {
  const size_t n = sorted.size();
  size_t rank = static_cast<size_t>(std::ceil(p * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return sorted[rank - 1];
}

}  // namespace detail

// Profiles one column from its (sampled) rows. Pure: same input, same output.
// cardinality_threshold > 0 suppresses the frequency table for columns whose
// distinct count exceeds it.
inline ColumnProfile profile_column(const std::vector<Value> &rows, CanonicalType type,
                                    int64_t table_rows, int64_t cardinality_threshold = 0) {
  ColumnProfile p;
  p.table_rows = table_rows;
  p.profiled_rows = static_cast<int64_t>(rows.size());
  if (rows.empty()) return p;

  int64_t nulls = 0, blanks = 0;
  std::map<std::string, int64_t> counts;
  std::vector<double> numerics;
  int64_t len_sum = 0, len_n = 0;
  const Value *min_v = nullptr, *max_v = nullptr;

  for (const auto &v : rows) {
    if (is_null(v)) {
      ++nulls;
      continue;
    }
    if (is_blank_or_zero(v)) ++blanks;
    ++counts[value_key(v)];
    if (!min_v || value_less(v, *min_v)) min_v = &v;
    if (!max_v || value_less(*max_v, v)) max_v = &v;
    if (const auto num = value_numeric(v)) numerics.push_back(*num);
    if (std::holds_alternative<std::string>(v)) {
      const auto len = static_cast<int64_t>(std::get<std::string>(v).size());
      p.len_min = p.len_min ? std::min(*p.len_min, len) : len;
      p.len_max = p.len_max ? std::max(*p.len_max, len) : len;
      len_sum += len;
      ++len_n;
    }
  }

  p.distinct_count = static_cast<int64_t>(counts.size());
  p.null_fraction = static_cast<double>(nulls) / static_cast<double>(rows.size());
  p.blank_or_zero_fraction = static_cast<double>(blanks) / static_cast<double>(rows.size());

  const bool full_scan = p.profiled_rows == table_rows;
  if (full_scan) {
    p.uniqueness = table_rows > 0
                       ? static_cast<double>(p.distinct_count) / static_cast<double>(table_rows)
                       : 0.0;
    p.uniqueness_is_estimate = false;
  } else {
    p.uniqueness = static_cast<double>(p.distinct_count) / static_cast<double>(rows.size());
    p.uniqueness_is_estimate = true;
  }

  if (min_v) p.min_text = value_text(*min_v);
  if (max_v) p.max_text = value_text(*max_v);

  if (cardinality_threshold <= 0 || p.distinct_count <= cardinality_threshold) {
    std::vector<ValueCount> all;
    all.reserve(counts.size());
    for (const auto &[k, c] : counts) all.push_back({k, c});
    std::stable_sort(all.begin(), all.end(), [](const ValueCount &a, const ValueCount &b) {
      if (a.count != b.count) return a.count > b.count;
      return a.value < b.value;
    });
    if (all.size() > 10) all.resize(10);
    p.top_values = std::move(all);
  }

  std::unordered_set<std::string> seen;
  for (const auto &v : rows) {
    if (is_null(v)) continue;
    const std::string key = value_key(v);
    if (seen.insert(key).second) {
      p.sample_values.push_back(key);
      if (p.sample_values.size() >= 10) break;
    }
  }

  if (!numerics.empty() &&
      (type == CanonicalType::INT || type == CanonicalType::BIGINT ||
       type == CanonicalType::SMALLINT || type == CanonicalType::DECIMAL ||
       type == CanonicalType::FLOAT)) {
    std::sort(numerics.begin(), numerics.end());
    p.p25 = detail::nearest_rank(numerics, 0.25);
    p.p50 = detail::nearest_rank(numerics, 0.50);
    p.p75 = detail::nearest_rank(numerics, 0.75);
  }
  if (len_n > 0) p.len_avg = static_cast<double>(len_sum) / static_cast<double>(len_n);
  if (type == CanonicalType::DATE || type == CanonicalType::TIME ||
      type == CanonicalType::TIMESTAMP) {
    if (min_v) p.date_min = value_text(*min_v);
    if (max_v) p.date_max = value_text(*max_v);
  }
  return p;
}

// Exact distinct ratio over the full column; used to verify u = 1.0 claims on
// key candidates rather than trusting a sampled estimate.
inline double exact_uniqueness(const std::vector<Value> &full_column) {
  if (full_column.empty()) return 0.0;
  std::unordered_set<std::string> distinct;
  for (const auto &v : full_column) {
    if (is_null(v)) continue;
    distinct.insert(value_key(v));
  }
  return static_cast<double>(distinct.size()) / static_cast<double>(full_column.size());
}

inline bool exactly_unique_non_null(const std::vector<Value> &full_column) {
  if (full_column.empty()) return false;
  std::unordered_set<std::string> distinct;
  for (const auto &v : full_column) {
    if (is_null(v)) return false;
    if (!distinct.insert(value_key(v)).second) return false;
  }
  return true;
}

// Profile store keyed by "schema.table.column".
using ProfileMap = std::map<std::string, ColumnProfile>;

inline std::string profile_key(const std::string &table_key, const std::string &column) {
  return table_key + "." + column;
}

}  // namespace schemadoc
