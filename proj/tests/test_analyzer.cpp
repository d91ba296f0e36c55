#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "schemadoc/http_analyzer.hpp"
#include "schemadoc/json_schema.hpp"
#include "schemadoc/mock_analyzer.hpp"

using namespace schemadoc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("schemadoc_an_" + std::to_string(::getpid()) + "_" +
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

ordered_json col(const std::string &name, int64_t distinct,
                 std::vector<std::string> samples) {
  ordered_json c;
  c["name"] = name;
  c["type"] = "INT";
  c["profile"] = ordered_json::object();
  c["profile"]["distinct_count"] = distinct;
  c["samples"] = ordered_json::array();
  for (const auto &s : samples) c["samples"].push_back(s);
  return c;
}

ordered_json roster_entry(const std::string &key, const std::string &name,
                          std::vector<std::string> pk, std::vector<std::string> columns) {
  ordered_json t;
  t["key"] = key;
  t["name"] = name;
  t["pk"] = pk;
  t["columns"] = columns;
  return t;
}

AnalysisRequest basic_table_request() {
  AnalysisRequest req;
  req.kind = RequestKind::TABLE_ANALYSIS;
  req.subject = "s.cst";
  req.context["table"] = "s.cst";
  req.context["tableName"] = "cst";
  req.context["iteration"] = 1;
  req.context["seedContext"] = "";
  req.context["columns"] = ordered_json::array(
      {col("cst_id", 12, {"1"}), col("rgn_id", 4, {"2"}), col("crt_dt", 9, {"2021-01-04"})});
  req.context["parents"] = ordered_json::array();
  {
    ordered_json p;
    p["table"] = "s.rgn";
    p["name"] = "rgn";
    p["via"] = "rgn_id";
    p["description"] = "rgn stores region identifier, region name";
    req.context["parents"].push_back(p);
  }
  req.context["tables"] = ordered_json::array(
      {roster_entry("s.rgn", "rgn", {"rgn_id"}, {"rgn_id", "rgn_nm"}),
       roster_entry("s.cst", "cst", {"cst_id"}, {"cst_id", "rgn_id", "crt_dt"})});
  req.context["relationships"] = ordered_json::array();
  {
    ordered_json r;
    r["sourceTable"] = "s.cst";
    r["sourceColumn"] = "rgn_id";
    r["targetTable"] = "s.rgn";
    r["targetColumn"] = "rgn_id";
    req.context["relationships"].push_back(r);
  }
  return req;
}

}  // namespace

// ---------------------------------------------------------------------------
// Schema validator

TEST_CASE("json schema validator basics") {
  const auto schema = ordered_json::parse(R"({
    "type": "object",
    "required": ["name", "score"],
    "additionalProperties": false,
    "properties": {
      "name": {"type": "string", "minLength": 1},
      "score": {"type": "number", "minimum": 0, "maximum": 1},
      "tags": {"type": "array", "minItems": 1,
               "items": {"type": "string"}},
      "grade": {"type": "string", "enum": ["a", "b"]}
    }
  })");

  SECTION("valid instance") {
    const auto v = ordered_json::parse(R"({"name":"x","score":0.5,"tags":["t"],"grade":"a"})");
    CHECK(validate_json(schema, v).empty());
  }
  SECTION("missing required") {
    const auto errs = validate_json(schema, ordered_json::parse(R"({"name":"x"})"));
    REQUIRE(errs.size() == 1);
    CHECK(errs[0] == "$: missing required property 'score'");
  }
  SECTION("wrong type reported with path") {
    const auto errs =
        validate_json(schema, ordered_json::parse(R"({"name":"x","score":"high"})"));
    REQUIRE(errs.size() == 1);
    CHECK(errs[0] == "$.score: expected number, got string");
  }
  SECTION("range and length") {
    auto errs = validate_json(schema, ordered_json::parse(R"({"name":"","score":1.5})"));
    REQUIRE(errs.size() == 2);
    CHECK(errs[0] == "$.name: shorter than minLength");
    CHECK(errs[1] == "$.score: above maximum");
  }
  SECTION("unexpected property") {
    const auto errs =
        validate_json(schema, ordered_json::parse(R"({"name":"x","score":0,"zz":1})"));
    REQUIRE(errs.size() == 1);
    CHECK(errs[0] == "$: unexpected property 'zz'");
  }
  SECTION("array item path") {
    const auto errs = validate_json(
        schema, ordered_json::parse(R"({"name":"x","score":0,"tags":["ok",7]})"));
    REQUIRE(errs.size() == 1);
    CHECK(errs[0] == "$.tags[1]: expected string, got number");
  }
  SECTION("minItems") {
    const auto errs =
        validate_json(schema, ordered_json::parse(R"({"name":"x","score":0,"tags":[]})"));
    REQUIRE(errs.size() == 1);
    CHECK(errs[0] == "$.tags: fewer than minItems elements");
  }
  SECTION("enum") {
    const auto errs = validate_json(
        schema, ordered_json::parse(R"({"name":"x","score":0,"grade":"c"})"));
    REQUIRE(errs.size() == 1);
    CHECK(errs[0] == "$.grade: value not in enum");
  }
}

TEST_CASE("json schema integer vs number") {
  const auto schema = ordered_json::parse(R"({"type":"integer"})");
  CHECK(validate_json(schema, ordered_json(3)).empty());
  CHECK(validate_json(schema, ordered_json(3.5)).size() == 1);
  const auto number = ordered_json::parse(R"({"type":"number"})");
  CHECK(validate_json(number, ordered_json(3)).empty());
  CHECK(validate_json(number, ordered_json(3.5)).empty());
}

TEST_CASE("json schema type alternatives") {
  const auto schema = ordered_json::parse(R"({"type":["string","null"]})");
  CHECK(validate_json(schema, ordered_json("x")).empty());
  CHECK(validate_json(schema, ordered_json(nullptr)).empty());
  CHECK(validate_json(schema, ordered_json(4)).size() == 1);
}

// ---------------------------------------------------------------------------
// Templates

TEST_CASE("template rendering") {
  CHECK(render_template("a {{x}} b {{ y }} c", {{"x", "1"}, {"y", "2"}}) == "a 1 b 2 c");
  CHECK(render_template("no placeholders", {}) == "no placeholders");
  CHECK_THROWS_AS(render_template("bad {{missing}}", {}), AnalyzerError);
  CHECK_THROWS_AS(render_template("bad {{open", {}), AnalyzerError);
}

TEST_CASE("shipped templates cover all roles and render") {
  const fs::path dir = fs::path(SCHEMADOC_SOURCE_DIR) / "templates";
  REQUIRE(fs::exists(dir));
  verify_template_directory(dir);
  const std::map<std::string, std::string> vars = {
      {"subject", "s.t"}, {"kind", "TABLE_ANALYSIS"}, {"context", "{}"}};
  for (const auto &role : all_template_roles()) {
    const auto rendered = render_template(load_template_file(dir, role), vars);
    CHECK(rendered.find("s.t") != std::string::npos);
    CHECK(rendered.find("{{") == std::string::npos);
  }
}

// ---------------------------------------------------------------------------
// Mock analyzer

TEST_CASE("mock analyzer is a pure function of the request") {
  MockAnalyzer mock;
  const auto req = basic_table_request();
  const auto a = mock.analyze(req);
  const auto b = mock.analyze(req);
  CHECK(a.payload.dump() == b.payload.dump());
  CHECK(a.usage.input == b.usage.input);
  CHECK(a.usage.output == b.usage.output);
  CHECK(a.usage.input == synthetic_token_count(req.character_count()));
  CHECK(a.usage.output == synthetic_token_count(a.payload.dump().size()));
}

TEST_CASE("mock table analysis") {
  MockAnalyzer mock;

  SECTION("described table with parent linkage") {
    const auto resp = run_validated(mock, basic_table_request());
    const auto parsed = parse_table_analysis(resp.payload);
    CHECK(parsed.table_description ==
          "cst stores customer identifier, region identifier, created date; references rgn");
    CHECK(parsed.confidence == 0.9);
    REQUIRE(parsed.columns.size() == 3);
    CHECK(parsed.columns[0].column == "cst_id");
    CHECK(parsed.columns[0].description == "customer identifier (12 distinct values)");
    CHECK(parsed.columns[0].confidence == 0.9);
    REQUIRE(parsed.insights.size() == 1);
    CHECK(parsed.insights[0].about_parent == "s.rgn");
    CHECK(parsed.insights[0].text ==
          "cst rows reference rgn (created date) [cst]");
  }

  SECTION("empty profile drops confidence to 0.5") {
    auto req = basic_table_request();
    auto &c = req.context["columns"][1];
    c["profile"] = nullptr;
    c["samples"] = ordered_json::array();
    const auto parsed = parse_table_analysis(run_validated(mock, req).payload);
    CHECK(parsed.confidence == 0.5);
    CHECK(parsed.columns[1].confidence == 0.5);
    CHECK(parsed.columns[0].confidence == 0.9);
  }

  SECTION("zero-column table") {
    auto req = basic_table_request();
    req.context["columns"] = ordered_json::array();
    req.context["parents"] = ordered_json::array();
    const auto parsed = parse_table_analysis(run_validated(mock, req).payload);
    CHECK(parsed.confidence == 0.5);
    CHECK(parsed.table_description == "cst stores no recorded attributes");
  }

  SECTION("relay sample lands in the token block and in insights") {
    auto req = basic_table_request();
    req.context["columns"][2]["samples"] = ordered_json::array({"relay_amber_quartz"});
    const auto parsed = parse_table_analysis(run_validated(mock, req).payload);
    CHECK(parsed.table_description ==
          "cst stores customer identifier, region identifier, created date; references rgn"
          " [relay_amber_quartz]");
    REQUIRE(parsed.insights.size() == 1);
    CHECK(parsed.insights[0].text ==
          "cst rows reference rgn (created date) [cst relay_amber_quartz]");
  }

  SECTION("prior token block carries forward") {
    auto req = basic_table_request();
    req.context["priorDescription"] =
        "cst stores customer identifier, region identifier, created date; references rgn"
        " [ord relay_topaz_owl]";
    const auto parsed = parse_table_analysis(run_validated(mock, req).payload);
    CHECK(parsed.table_description ==
          "cst stores customer identifier, region identifier, created date; references rgn"
          " [ord relay_topaz_owl]");
    // The relay word gets forwarded in insights; the child name token does not.
    CHECK(parsed.insights[0].text ==
          "cst rows reference rgn (created date) [cst relay_topaz_owl]");
  }
}

TEST_CASE("mock fk suggestions") {
  MockAnalyzer mock;

  SECTION("existing relationships are not re-proposed") {
    const auto parsed = parse_table_analysis(run_validated(mock, basic_table_request()).payload);
    for (const auto &p : parsed.fk_suggestions)
      CHECK_FALSE((p.source_column == "rgn_id" && p.target_table == "s.rgn"));
  }

  SECTION("embedded own table name proposes a self hierarchy") {
    auto req = basic_table_request();
    req.context["columns"].push_back(col("parent_cst", 6, {"3"}));
    const auto parsed = parse_table_analysis(run_validated(mock, req).payload);
    bool found = false;
    for (const auto &p : parsed.fk_suggestions)
      if (p.source_column == "parent_cst" && p.target_table == "s.cst" &&
          p.target_column == "cst_id")
        found = true;
    CHECK(found);
    // The pk column itself is never proposed against itself.
    for (const auto &p : parsed.fk_suggestions)
      CHECK_FALSE((p.source_column == "cst_id" && p.target_table == "s.cst" &&
                   p.target_column == "cst_id"));
  }

  SECTION("other-table id naming proposes that table's key") {
    auto req = basic_table_request();
    req.context["columns"].push_back(col("rgnid", 4, {"1"}));
    const auto parsed = parse_table_analysis(run_validated(mock, req).payload);
    bool found = false;
    for (const auto &p : parsed.fk_suggestions)
      if (p.source_column == "rgnid" && p.target_table == "s.rgn" &&
          p.target_column == "rgn_id")
        found = true;
    CHECK(found);
  }

  SECTION("shared column name proposes column to column") {
    auto req = basic_table_request();
    req.context["columns"].push_back(col("rowguid", 12, {"a"}));
    req.context["tables"].push_back(
        roster_entry("s.prd", "prd", {"prd_id"}, {"prd_id", "rowguid"}));
    const auto parsed = parse_table_analysis(run_validated(mock, req).payload);
    bool found = false;
    for (const auto &p : parsed.fk_suggestions)
      if (p.source_column == "rowguid" && p.target_table == "s.prd" &&
          p.target_column == "rowguid")
        found = true;
    CHECK(found);
  }
}

TEST_CASE("mock revision") {
  MockAnalyzer mock;
  AnalysisRequest req;
  req.kind = RequestKind::REVISION;
  req.subject = "s.rgn";
  req.context["table"] = "s.rgn";
  req.context["currentDescription"] = "rgn stores region identifier, region name";
  req.context["insights"] = ordered_json::array();

  SECTION("missing tokens appended") {
    ordered_json i;
    i["fromTable"] = "s.cst";
    i["text"] = "cst rows reference rgn (created date) [cst relay_topaz_owl]";
    req.context["insights"].push_back(i);
    const auto out = parse_revision(run_validated(mock, req).payload);
    CHECK(out.needs_revision);
    CHECK(out.revised_description ==
          "rgn stores region identifier, region name [cst relay_topaz_owl]");
    CHECK(out.confidence == 0.9);
  }

  SECTION("tokens already present leave the text alone") {
    req.context["currentDescription"] =
        "rgn stores region identifier, region name [cst relay_topaz_owl]";
    ordered_json i;
    i["fromTable"] = "s.cst";
    i["text"] = "cst rows reference rgn (created date) [cst relay_topaz_owl]";
    req.context["insights"].push_back(i);
    const auto out = parse_revision(run_validated(mock, req).payload);
    CHECK_FALSE(out.needs_revision);
    CHECK(out.revised_description ==
          "rgn stores region identifier, region name [cst relay_topaz_owl]");
  }

  SECTION("existing block merges rather than duplicates") {
    req.context["currentDescription"] = "rgn stores region identifier [ord]";
    ordered_json i;
    i["fromTable"] = "s.cst";
    i["text"] = "cst rows reference rgn (x) [cst]";
    req.context["insights"].push_back(i);
    const auto out = parse_revision(run_validated(mock, req).payload);
    CHECK(out.revised_description == "rgn stores region identifier [cst ord]");
  }
}

TEST_CASE("mock semantic comparison") {
  MockAnalyzer mock;
  CHECK_FALSE(material_change(mock, "stores customers", "stores customers"));
  CHECK(material_change(mock, "stores customers",
                        "stores customer accounts and their lifecycle status"));
  // Punctuation-only difference keeps the token set identical.
  CHECK_FALSE(material_change(mock, "stores customers, and orders",
                              "stores customers and orders."));
  // Oracle: jaccard on token sets decides the boundary.
  const auto oracle = [](const std::string &a, const std::string &b) {
    return jaccard_similarity(token_set(a), token_set(b)) < 0.8;
  };
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"alpha beta gamma delta", "alpha beta gamma delta epsilon"},
      {"alpha beta", "alpha beta gamma"},
      {"a b c d e f g h", "a b c d e f g h i j"},
  };
  for (const auto &[a, b] : cases) CHECK(material_change(mock, a, b) == oracle(a, b));
}

TEST_CASE("mock sanity scopes") {
  MockAnalyzer mock;
  AnalysisRequest req;
  req.kind = RequestKind::SANITY_LEVEL;
  req.subject = "level-0";
  req.context["tables"] = ordered_json::array();
  ordered_json t;
  t["table"] = "s.a";
  t["description"] = "a stores things";
  req.context["tables"].push_back(t);

  SECTION("clean level") {
    const auto v = parse_sanity(run_validated(mock, req).payload);
    CHECK(v.empty());
  }
  SECTION("flagged description") {
    req.context["tables"][0]["description"] = "a stores a naming CONTRADICTION";
    const auto v = parse_sanity(run_validated(mock, req).payload);
    REQUIRE(v.size() == 1);
    CHECK(v[0].table == "s.a");
    CHECK(v[0].rule == "R5");
  }
}

TEST_CASE("mock pruning kinds") {
  MockAnalyzer mock;
  SECTION("fk pruning keeps by containment") {
    AnalysisRequest req;
    req.kind = RequestKind::FK_PRUNING;
    req.subject = "s.t.c";
    req.context["candidates"] = ordered_json::array();
    ordered_json a;
    a["edge"] = "e1";
    a["containment"] = 0.9;
    ordered_json b;
    b["edge"] = "e2";
    b["containment"] = 0.5;
    req.context["candidates"].push_back(a);
    req.context["candidates"].push_back(b);
    const auto resp = run_validated(mock, req);
    REQUIRE(resp.payload.at("verdicts").size() == 2);
    CHECK(resp.payload.at("verdicts")[0].at("keep") == true);
    CHECK(resp.payload.at("verdicts")[1].at("keep") == false);
  }
  SECTION("pk pruning checks uniqueness") {
    AnalysisRequest req;
    req.kind = RequestKind::PK_PRUNING;
    req.subject = "s.t";
    req.context["uniqueness"] = 0.99;
    CHECK(run_validated(mock, req).payload.at("plausible") == true);
    req.context["uniqueness"] = 0.80;
    CHECK(run_validated(mock, req).payload.at("plausible") == false);
  }
}

TEST_CASE("schema validation guards pipeline state") {
  struct Broken : Analyzer {
    AnalysisResponse analyze(const AnalysisRequest &r) override {
      AnalysisResponse resp;
      resp.kind = r.kind;
      resp.payload = ordered_json::parse(R"({"tableDescription":"x"})");
      return resp;
    }
    std::string name() const override { return "broken"; }
  } broken;
  AnalysisRequest req;
  req.kind = RequestKind::TABLE_ANALYSIS;
  CHECK_THROWS_AS(run_validated(broken, req), AnalyzerError);
}

// ---------------------------------------------------------------------------
// HTTP analyzer

namespace {

struct TestServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;
  std::atomic<int> hits{0};

  explicit TestServer(std::function<void(const httplib::Request &, httplib::Response &)> h) {
    server.Post("/v1/chat", [this, h](const httplib::Request &req, httplib::Response &res) {
      hits++;
      h(req, res);
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~TestServer() {
    server.stop();
    thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat"; }
};

std::string chat_reply(const std::string &content, int in_tokens, int out_tokens) {
  ordered_json r;
  r["choices"] = ordered_json::array();
  r["choices"].push_back({{"message", {{"role", "assistant"}, {"content", content}}}});
  r["usage"] = {{"prompt_tokens", in_tokens}, {"completion_tokens", out_tokens}};
  return r.dump();
}

HttpAnalyzerOptions http_options(const std::string &url, const fs::path &templates) {
  HttpAnalyzerOptions o;
  o.endpoint_url = url;
  o.model = "test-model";
  o.template_dir = templates;
  o.backoff_base_ms = 0;
  o.credential_env = "SCHEMADOC_TEST_KEY";
  return o;
}

TempDir minimal_templates() {
  TempDir dir;
  for (const auto &role : all_template_roles())
    dir.write(role + ".tmpl", "{{kind}} {{subject}}\n{{context}}\n");
  return dir;
}

const char *kComparisonContent = R"({"classification":"cosmetic"})";

AnalysisRequest comparison_request() {
  AnalysisRequest req;
  req.kind = RequestKind::SEMANTIC_COMPARISON;
  req.subject = "cmp";
  req.context["oldDescription"] = "a";
  req.context["newDescription"] = "a";
  return req;
}

}  // namespace

TEST_CASE("http analyzer happy path") {
  const auto templates = minimal_templates();
  ordered_json seen_body;
  std::string seen_auth;
  TestServer server([&](const httplib::Request &req, httplib::Response &res) {
    seen_body = ordered_json::parse(req.body);
    if (req.has_header("Authorization")) seen_auth = req.get_header_value("Authorization");
    res.set_content(chat_reply(kComparisonContent, 100, 8), "application/json");
  });

  ::setenv("SCHEMADOC_TEST_KEY", "sekrit", 1);
  HttpAnalyzer analyzer(http_options(server.url(), templates.path));
  const auto resp = analyzer.analyze(comparison_request());

  CHECK(resp.payload.at("classification") == "cosmetic");
  CHECK(resp.usage.input == 100);
  CHECK(resp.usage.output == 8);
  CHECK(seen_auth == "Bearer sekrit");
  CHECK(seen_body.at("model") == "test-model");
  CHECK(seen_body.at("temperature") == Catch::Approx(0.1));
  REQUIRE(seen_body.at("messages").size() == 2);
  CHECK(seen_body.at("messages")[0].at("role") == "system");
  CHECK(seen_body.at("messages")[1].at("role") == "user");
  CHECK(seen_body.at("response_format").at("type") == "json_schema");
  CHECK(seen_body.at("response_format").at("json_schema").at("schema") ==
        response_schema_for(RequestKind::SEMANTIC_COMPARISON));
  ::unsetenv("SCHEMADOC_TEST_KEY");
}

TEST_CASE("http analyzer retries transient failures") {
  const auto templates = minimal_templates();
  TestServer server([&](const httplib::Request &, httplib::Response &res) {
    static std::atomic<int> calls{0};
    if (calls++ < 2) {
      res.status = 500;
      res.set_content("busy", "text/plain");
    } else {
      res.set_content(chat_reply(kComparisonContent, 10, 2), "application/json");
    }
  });
  HttpAnalyzer analyzer(http_options(server.url(), templates.path));
  const auto resp = analyzer.analyze(comparison_request());
  CHECK(resp.payload.at("classification") == "cosmetic");
  CHECK(server.hits == 3);
}

TEST_CASE("http analyzer repairs invalid payloads once") {
  const auto templates = minimal_templates();
  TestServer server([&](const httplib::Request &req, httplib::Response &res) {
    const auto body = ordered_json::parse(req.body);
    if (body.at("messages").size() == 2) {
      res.set_content(chat_reply(R"({"classification":"blue"})", 10, 3), "application/json");
    } else {
      // Repair round: the conversation carries the failure note.
      REQUIRE(body.at("messages").size() == 4);
      const std::string note = body.at("messages")[3].at("content").get<std::string>();
      CHECK(note.find("failed schema validation") != std::string::npos);
      res.set_content(chat_reply(kComparisonContent, 12, 4), "application/json");
    }
  });
  HttpAnalyzer analyzer(http_options(server.url(), templates.path));
  const auto resp = analyzer.analyze(comparison_request());
  CHECK(resp.payload.at("classification") == "cosmetic");
  CHECK(server.hits == 2);
  CHECK(resp.usage.input == 22);
  CHECK(resp.usage.output == 7);
}

TEST_CASE("http analyzer gives up after bounded attempts") {
  const auto templates = minimal_templates();
  auto options = http_options("http://127.0.0.1:9/unreachable", templates.path);
  options.max_attempts = 2;
  options.timeout_seconds = 1;
  HttpAnalyzer analyzer(options);
  CHECK_THROWS_AS(analyzer.analyze(comparison_request()), AnalyzerError);
}

TEST_CASE("http analyzer requires a complete template directory") {
  TempDir dir;
  dir.write("table-analysis.tmpl", "{{context}}");
  CHECK_THROWS_AS(HttpAnalyzer(http_options("http://x/y", dir.path)), AnalyzerError);
}
