#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "schemadoc/profile.hpp"
#include "schemadoc/snapshot.hpp"

using namespace schemadoc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("schemadoc_test_" + std::to_string(fnv1a64(std::to_string(::getpid()))) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int &counter() {
    static int c = 0;
    return c;
  }
  void write(const std::string &name, const std::string &content) const {
    std::ofstream out(path / name, std::ios::binary);
    out << content;
  }
};

const char *kManifest = R"json({
  "format_version": "1",
  "schemas": [
    {
      "name": "sales",
      "tables": [
        {
          "name": "region",
          "row_count": 3,
          "data_file": "region.csv",
          "description": "regions catalog comment",
          "columns": [
            {"name": "region_id", "type": "INT", "nullable": false},
            {"name": "region_name", "type": "VARCHAR(40)", "nullable": true},
            {"name": "geo_blob", "type": "HIERARCHYID", "nullable": true}
          ]
        },
        {
          "name": "customer",
          "row_count": 4,
          "data_file": "customer.csv",
          "columns": [
            {"name": "customer_id", "type": "int", "nullable": false},
            {"name": "region_id", "type": "INT", "nullable": true},
            {"name": "note", "type": "varchar(10)", "nullable": true, "description": "free note"},
            {"name": "active", "type": "BIT", "nullable": false},
            {"name": "balance", "type": "DECIMAL(10,2)", "nullable": true}
          ]
        }
      ]
    }
  ],
  "declared_constraints": {
    "primary_keys": [{"table": "sales.region", "columns": ["region_id"]}],
    "foreign_keys": [
      {"source_table": "sales.customer", "source_columns": ["region_id"],
       "target_table": "sales.region", "target_columns": ["region_id"]}
    ]
  }
})json";

const char *kRegionCsv =
    "region_id,region_name,geo_blob\n"
    "1,North,\n"
    "2,\"\",\n"
    "3,,\n";

const char *kCustomerCsv =
    "customer_id,region_id,note,active,balance\n"
    "10,1,\"a,b\",1,5.25\n"
    "11,2,,true,\n"
    "12,,plain,0,-3.5\n"
    "13,3,\"line\nbreak\",false,0\n";

TempDir make_snapshot() {
  TempDir dir;
  dir.write("manifest.json", kManifest);
  dir.write("region.csv", kRegionCsv);
  dir.write("customer.csv", kCustomerCsv);
  return dir;
}

}  // namespace

TEST_CASE("snapshot loads metadata, data and constraints") {
  const auto dir = make_snapshot();
  const auto snap = load_snapshot((dir.path / "manifest.json").string());

  REQUIRE(snap.tables.size() == 2);
  const auto *region = snap.find_table("sales.region");
  REQUIRE(region != nullptr);
  CHECK(region->row_count == 3);
  CHECK(region->description == "regions catalog comment");
  CHECK(region->columns[0].type == CanonicalType::INT);
  CHECK(region->columns[0].nullable == false);
  CHECK(region->columns[1].type == CanonicalType::VARCHAR);
  CHECK(region->columns[2].type == CanonicalType::OTHER);
  REQUIRE(snap.warnings.size() == 1);
  CHECK(snap.warnings[0].find("HIERARCHYID") != std::string::npos);

  // NULL versus empty string versus text.
  const auto &names = snap.column_values("sales.region", 1);
  CHECK(value_text(names[0]) == "North");
  CHECK_FALSE(is_null(names[1]));
  CHECK(std::get<std::string>(names[1]).empty());
  CHECK(is_null(names[2]));

  const auto *customer = snap.find_table("sales.customer");
  REQUIRE(customer != nullptr);
  CHECK(customer->columns[2].description == "free note");
  const auto &notes = snap.column_values("sales.customer", 2);
  CHECK(std::get<std::string>(notes[0]) == "a,b");
  CHECK(is_null(notes[1]));
  CHECK(std::get<std::string>(notes[3]) == "line\nbreak");
  const auto &active = snap.column_values("sales.customer", 3);
  CHECK(std::get<bool>(active[0]) == true);
  CHECK(std::get<bool>(active[1]) == true);
  CHECK(std::get<bool>(active[2]) == false);
  const auto &balance = snap.column_values("sales.customer", 4);
  CHECK(std::get<double>(balance[0]) == 5.25);
  CHECK(is_null(balance[1]));
  CHECK(std::get<double>(balance[3]) == 0.0);

  CHECK(snap.declared_constraints.primary_keys.at("sales.region") ==
        std::vector<std::string>{"region_id"});
  REQUIRE(snap.declared_constraints.foreign_keys.size() == 1);
  CHECK(snap.declared_constraints.foreign_keys[0].origin == RelationshipOrigin::DECLARED);
}

TEST_CASE("snapshot rejects malformed inputs") {
  SECTION("bad format version") {
    TempDir dir;
    dir.write("manifest.json", R"({"format_version": "2", "schemas": []})");
    CHECK_THROWS_AS(load_snapshot((dir.path / "manifest.json").string()), IngestionError);
  }
  SECTION("header name mismatch") {
    auto dir = make_snapshot();
    dir.write("region.csv", "region_id,wrong,geo_blob\n1,a,\n2,b,\n3,c,\n");
    CHECK_THROWS_AS(load_snapshot((dir.path / "manifest.json").string()), IngestionError);
  }
  SECTION("row width mismatch") {
    auto dir = make_snapshot();
    dir.write("region.csv", "region_id,region_name,geo_blob\n1,a\n2,b,\n3,c,\n");
    CHECK_THROWS_AS(load_snapshot((dir.path / "manifest.json").string()), IngestionError);
  }
  SECTION("row count mismatch") {
    auto dir = make_snapshot();
    dir.write("region.csv", "region_id,region_name,geo_blob\n1,a,\n2,b,\n");
    CHECK_THROWS_AS(load_snapshot((dir.path / "manifest.json").string()), IngestionError);
  }
  SECTION("invalid integer cell") {
    auto dir = make_snapshot();
    dir.write("region.csv", "region_id,region_name,geo_blob\n1,a,\nx2,b,\n3,c,\n");
    CHECK_THROWS_AS(load_snapshot((dir.path / "manifest.json").string()), IngestionError);
  }
  SECTION("missing data file") {
    auto dir = make_snapshot();
    fs::remove(dir.path / "customer.csv");
    CHECK_THROWS_AS(load_snapshot((dir.path / "manifest.json").string()), IngestionError);
  }
}

TEST_CASE("cell parsing is strict per type") {
  using detail::parse_cell;
  CHECK(std::get<int64_t>(parse_cell({"42", false}, CanonicalType::INT, "t")) == 42);
  CHECK(std::get<int64_t>(parse_cell({"-7", false}, CanonicalType::BIGINT, "t")) == -7);
  CHECK_THROWS_AS(parse_cell({"4.2", false}, CanonicalType::INT, "t"), IngestionError);
  CHECK_THROWS_AS(parse_cell({"12x", false}, CanonicalType::INT, "t"), IngestionError);
  CHECK(std::get<double>(parse_cell({"4.25", false}, CanonicalType::DECIMAL, "t")) == 4.25);
  CHECK_THROWS_AS(parse_cell({"4.2.5", false}, CanonicalType::FLOAT, "t"), IngestionError);
  CHECK_THROWS_AS(parse_cell({"maybe", false}, CanonicalType::BOOLEAN, "t"), IngestionError);
  CHECK(std::get<std::string>(parse_cell({"2024-01-05", false}, CanonicalType::DATE, "t")) ==
        "2024-01-05");
  CHECK(is_null(parse_cell({"", false}, CanonicalType::INT, "t")));
  CHECK(std::get<std::string>(parse_cell({"", true}, CanonicalType::VARCHAR, "t")).empty());
}

TEST_CASE("snapshot filtering") {
  const auto dir = make_snapshot();
  SECTION("exclude table") {
    auto snap = load_snapshot((dir.path / "manifest.json").string());
    filter_snapshot(snap, {}, {}, {"sales.customer"});
    REQUIRE(snap.tables.size() == 1);
    CHECK(snap.tables[0].key() == "sales.region");
    CHECK(snap.data.count("sales.customer") == 0);
  }
  SECTION("include schema whitelist") {
    auto snap = load_snapshot((dir.path / "manifest.json").string());
    filter_snapshot(snap, {"other"}, {}, {});
    CHECK(snap.tables.empty());
  }
  SECTION("exclude schema") {
    auto snap = load_snapshot((dir.path / "manifest.json").string());
    filter_snapshot(snap, {}, {"SALES"}, {});
    CHECK(snap.tables.empty());
  }
}

TEST_CASE("row sampling is deterministic and well formed") {
  const auto a = sample_row_indices(1000, 100, 7, "s.t");
  const auto b = sample_row_indices(1000, 100, 7, "s.t");
  CHECK(a == b);
  CHECK(a.size() == 100);
  CHECK(std::is_sorted(a.begin(), a.end()));
  std::set<size_t> uniq(a.begin(), a.end());
  CHECK(uniq.size() == 100);
  CHECK(*uniq.rbegin() < 1000);

  CHECK(sample_row_indices(1000, 100, 7, "s.other") != a);
  CHECK(sample_row_indices(1000, 100, 8, "s.t") != a);
  CHECK(sample_row_indices(5, 10, 7, "s.t") == std::vector<size_t>{0, 1, 2, 3, 4});
  CHECK(sample_row_indices(1000, 0, 7, "s.t").empty());
}

TEST_CASE("profile captures counts, top values and samples") {
  std::vector<Value> rows = {
      Value{std::string{"b"}}, Value{std::string{"a"}}, null_value(),
      Value{std::string{"b"}}, Value{std::string{""}},  Value{std::string{"c"}},
      Value{std::string{"a"}}, null_value(),            Value{std::string{"b"}},
      Value{std::string{"c"}},
  };
  const auto p = profile_column(rows, CanonicalType::VARCHAR, 10);
  CHECK(p.profiled_rows == 10);
  CHECK(p.distinct_count == 4);
  CHECK(p.uniqueness == 0.4);
  CHECK_FALSE(p.uniqueness_is_estimate);
  CHECK(p.null_fraction == 0.2);
  CHECK(p.blank_or_zero_fraction == 0.1);
  CHECK(p.min_text == "");
  CHECK(p.max_text == "c");
  REQUIRE(p.top_values.size() == 4);
  CHECK(p.top_values[0].value == "b");
  CHECK(p.top_values[0].count == 3);
  // Tie between "a" and "c" resolved by value.
  CHECK(p.top_values[1].value == "a");
  CHECK(p.top_values[2].value == "c");
  CHECK(p.top_values[3].value == "");
  CHECK(p.sample_values == std::vector<std::string>{"b", "a", "", "c"});
  REQUIRE(p.len_min);
  CHECK(*p.len_min == 0);
  CHECK(*p.len_max == 1);
  CHECK_FALSE(p.p50);
}

TEST_CASE("profile of a sampled subset is flagged as estimate") {
  std::vector<Value> rows;
  for (int i = 0; i < 50; ++i) rows.push_back(Value{int64_t{i}});
  const auto p = profile_column(rows, CanonicalType::INT, 200);
  CHECK(p.uniqueness_is_estimate);
  CHECK(p.uniqueness == 1.0);
  const auto full = profile_column(rows, CanonicalType::INT, 50);
  CHECK_FALSE(full.uniqueness_is_estimate);
}

TEST_CASE("percentiles match a reference scan") {
  SplitMix64 rng(99);
  for (int iter = 0; iter < 30; ++iter) {
    std::vector<Value> rows;
    std::vector<double> raw;
    const size_t n = 1 + rng.next_below(40);
    for (size_t i = 0; i < n; ++i) {
      const double v = static_cast<double>(rng.next_below(100)) / 4.0;
      rows.push_back(Value{v});
      raw.push_back(v);
    }
    const auto p = profile_column(rows, CanonicalType::DECIMAL, static_cast<int64_t>(n));
    std::sort(raw.begin(), raw.end());
    // Reference: smallest value with at least ceil(p*n) values at or below it.
    auto ref = [&](double q) {
      const size_t need = static_cast<size_t>(std::ceil(q * static_cast<double>(raw.size())));
      size_t at_or_below = 0;
      for (size_t i = 0; i < raw.size(); ++i) {
        at_or_below = i + 1;
        if (at_or_below >= need) return raw[i];
      }
      return raw.back();
    };
    REQUIRE(p.p25);
    CHECK(*p.p25 == ref(0.25));
    CHECK(*p.p50 == ref(0.50));
    CHECK(*p.p75 == ref(0.75));
  }
}

TEST_CASE("high-cardinality frequency table suppression") {
  std::vector<Value> rows;
  for (int i = 0; i < 30; ++i) rows.push_back(Value{int64_t{i}});
  const auto kept = profile_column(rows, CanonicalType::INT, 30, 50);
  CHECK(kept.top_values.size() == 10);
  const auto dropped = profile_column(rows, CanonicalType::INT, 30, 20);
  CHECK(dropped.top_values.empty());
}

TEST_CASE("temporal min max text") {
  std::vector<Value> rows = {Value{std::string{"2024-03-01"}}, Value{std::string{"2023-12-31"}},
                             Value{std::string{"2024-01-15"}}};
  const auto p = profile_column(rows, CanonicalType::DATE, 3);
  REQUIRE(p.date_min);
  CHECK(*p.date_min == "2023-12-31");
  CHECK(*p.date_max == "2024-03-01");
}

TEST_CASE("exact uniqueness helpers") {
  std::vector<Value> unique_col = {Value{int64_t{1}}, Value{int64_t{2}}, Value{int64_t{3}}};
  CHECK(exact_uniqueness(unique_col) == 1.0);
  CHECK(exactly_unique_non_null(unique_col));

  std::vector<Value> with_null = {Value{int64_t{1}}, null_value()};
  CHECK(exact_uniqueness(with_null) == 0.5);
  CHECK_FALSE(exactly_unique_non_null(with_null));

  std::vector<Value> with_dup = {Value{int64_t{1}}, Value{int64_t{1}}, Value{int64_t{2}}};
  CHECK_FALSE(exactly_unique_non_null(with_dup));
  CHECK(exact_uniqueness(with_dup) == Catch::Approx(2.0 / 3.0));

  CHECK_FALSE(exactly_unique_non_null({}));
  // Int and coercible string representations collapse to one key.
  std::vector<Value> mixed = {Value{int64_t{7}}, Value{std::string{"7"}}};
  CHECK(exact_uniqueness(mixed) == 0.5);
}

TEST_CASE("profile json round trip") {
  std::vector<Value> rows = {Value{int64_t{5}}, Value{int64_t{6}}, null_value(),
                             Value{int64_t{6}}};
  const auto p = profile_column(rows, CanonicalType::INT, 4);
  const auto j = p.to_json();
  const auto q = ColumnProfile::from_json(j);
  CHECK(q.to_json() == j);
  CHECK(q.distinct_count == p.distinct_count);
  CHECK(q.uniqueness == p.uniqueness);
  CHECK(q.null_fraction == p.null_fraction);
  CHECK(q.top_values.size() == p.top_values.size());
  CHECK(q.p25 == p.p25);
  CHECK(q.len_min == p.len_min);
}
