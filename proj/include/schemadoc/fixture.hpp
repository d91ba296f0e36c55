#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "schemadoc/csv.hpp"
#include "schemadoc/errors.hpp"
#include "schemadoc/snapshot.hpp"
#include "schemadoc/text_util.hpp"

namespace schemadoc {

// Built-in synthetic corpora. Each generator produces a complete snapshot
// (manifest + delimited data) plus the matching truth file, deterministically:
// the same name and options always yield the same bytes.
//
//   lousy8    eight tables of messy naming, planted key defects, orphan rows,
//             a replication-artifact column and a keyless audit table
//   chain4    four tables in a straight reference chain with a marker value
//             at the deepest level, for propagation-latency checks
//   adaptive  three tables whose real keys are buried at a configurable
//             ordinal so no PK clears the threshold and the FK weight
//             redistribution kicks in

struct FixtureOptions {
  uint64_t seed = 7;
  // adaptive only: ordinal at which the surrogate key column is inserted.
  int key_position = 3;
};

struct GeneratedFixture {
  std::string name;
  ordered_json manifest;
  // Relative path (as referenced from the manifest) -> file body.
  std::map<std::string, std::string> data_files;
  ordered_json truth;
};

namespace fixture_detail {

struct Col {
  std::string name;
  std::string type;
  bool nullable = false;
  std::vector<std::optional<std::string>> cells;
};

struct Tbl {
  std::string name;
  std::string description;
  std::vector<Col> cols;

  size_t rows() const { return cols.empty() ? 0 : cols[0].cells.size(); }
};

inline std::optional<std::string> cell(int64_t v) { return std::to_string(v); }
inline std::optional<std::string> cell(const std::string &v) { return v; }

inline std::string fixture_uuid(SplitMix64 &rng) {
  const uint64_t hi = rng.next();
  const uint64_t lo = rng.next();
  char buf[37];
  std::snprintf(buf, sizeof(buf), "%08llx-%04llx-%04llx-%04llx-%012llx",
                static_cast<unsigned long long>(hi >> 32),
                static_cast<unsigned long long>((hi >> 16) & 0xffff),
                static_cast<unsigned long long>(hi & 0xffff),
                static_cast<unsigned long long>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xffffffffffffull));
  return buf;
}

inline std::string csv_body(const Tbl &t) {
  std::vector<std::string> header;
  for (const auto &c : t.cols) header.push_back(csv_escape(c.name, false));
  std::string out = csv_join(header);
  for (size_t r = 0; r < t.rows(); ++r) {
    std::vector<std::string> cells;
    for (const auto &c : t.cols)
      cells.push_back(c.cells[r] ? csv_cell(*c.cells[r], false) : csv_cell("", true));
    out += csv_join(cells);
  }
  return out;
}

inline void emit_schema(GeneratedFixture &fx, const std::string &schema_name,
                        const std::vector<Tbl> &tables) {
  fx.manifest["format_version"] = "1";
  ordered_json schema;
  schema["name"] = schema_name;
  schema["tables"] = ordered_json::array();
  for (const auto &t : tables) {
    ordered_json tj;
    tj["name"] = t.name;
    tj["row_count"] = static_cast<int64_t>(t.rows());
    if (!t.description.empty()) tj["description"] = t.description;
    tj["columns"] = ordered_json::array();
    for (const auto &c : t.cols) {
      ordered_json cj;
      cj["name"] = c.name;
      cj["type"] = c.type;
      cj["nullable"] = c.nullable;
      tj["columns"].push_back(cj);
    }
    const std::string rel = "data/" + t.name + ".csv";
    tj["data_file"] = rel;
    schema["tables"].push_back(tj);
    fx.data_files[rel] = csv_body(t);
  }
  fx.manifest["schemas"] = ordered_json::array({schema});
}

inline ordered_json truth_table(const std::vector<std::string> &pk, const std::string &description,
                                bool warning = false) {
  ordered_json t;
  t["pk"] = pk;
  if (warning) t["warning"] = true;
  if (!description.empty()) t["description"] = description;
  return t;
}

inline ordered_json truth_rel(const std::string &src_table, const std::string &src_col,
                              const std::string &tgt_table, const std::string &tgt_col,
                              bool warning = false) {
  ordered_json r;
  r["sourceTable"] = src_table;
  r["sourceColumns"] = ordered_json::array({src_col});
  r["targetTable"] = tgt_table;
  r["targetColumns"] = ordered_json::array({tgt_col});
  if (warning) r["warning"] = true;
  return r;
}

// ---------------------------------------------------------------------------

inline GeneratedFixture build_lousy8(const FixtureOptions &options) {
  GeneratedFixture fx;
  fx.name = "lousy8";
  SplitMix64 rng(options.seed ^ fnv1a64("lousy8"));

  std::vector<std::string> prd_guids, inv_guids;
  for (int i = 0; i < 12; ++i) prd_guids.push_back(fixture_uuid(rng));
  for (int i = 0; i < 13; ++i) inv_guids.push_back(fixture_uuid(rng));

  const std::vector<std::string> dates8 = {"2021-02-11", "2021-03-14", "2021-05-09",
                                           "2021-06-21", "2021-08-02", "2021-09-17",
                                           "2021-11-05", "2021-12-28"};

  Tbl rgn{"rgn", "Legacy region lookup.", {}};
  {
    Col id{"rgn_id", "int"}, nm{"rgn_nm", "varchar(20)"};
    const std::vector<std::string> names = {"NORTH", "SOUTH", "EAST", "WEST"};
    for (int i = 0; i < 4; ++i) {
      id.cells.push_back(cell(i + 1));
      nm.cells.push_back(cell(names[i]));
    }
    rgn.cols = {id, nm};
  }

  Tbl sts{"sts", "", {}};
  {
    Col grp{"grp_cd", "varchar(8)"}, srt{"sort_no", "int"}, id{"stat_id", "int"};
    const std::vector<std::string> groups = {"OPEN", "WIP", "HOLD", "DONE"};
    for (int i = 0; i < 8; ++i) {
      grp.cells.push_back(cell(groups[i / 2]));
      srt.cells.push_back(cell((i % 4 + 1) * 10));
      id.cells.push_back(cell(i + 1));
    }
    sts.cols = {grp, srt, id};
  }

  Tbl prd{"prd", "", {}};
  {
    Col id{"prdid", "int"}, nm{"prd_nm", "varchar(40)"}, sku{"sku_id", "varchar(12)"},
        guid{"rowguid", "uniqueidentifier"}, prc{"lst_prc", "decimal(9,2)"};
    const std::vector<std::string> names = {
        "STEEL BRACKET", "COPPER COIL",  "NYLON WASHER",   "TORSION SPRING",
        "HEX BOLT",      "PIVOT ARM",    "CAM ROLLER",     "SHIM PLATE",
        "LOCK COLLAR",   "IDLER GEAR",   "THRUST BEARING", "STEEL BRACKET"};
    const std::vector<std::string> prices = {"4.50", "9.99", "12.75", "7.25", "19.99", "4.50"};
    for (int i = 0; i < 12; ++i) {
      id.cells.push_back(cell(101 + i));
      nm.cells.push_back(cell(names[i]));
      sku.cells.push_back(cell("SKU-0" + std::to_string(101 + i)));
      guid.cells.push_back(cell(prd_guids[i]));
      prc.cells.push_back(cell(prices[i % 6]));
    }
    prd.cols = {id, nm, sku, guid, prc};
  }

  Tbl aud{"aud", "Append-only audit trail.", {}};
  {
    Col id{"aud_id", "int", true}, ts{"aud_ts", "datetime"}, act{"act_cd", "varchar(3)"},
        note{"act_note", "text"};
    const std::vector<std::string> actions = {"INS", "UPD", "DEL"};
    const std::vector<std::string> notes = {"batch import", "manual correction", "nightly sync",
                                            "api update", "migration backfill"};
    for (int i = 0; i < 50; ++i) {
      if (i == 16)
        id.cells.push_back(std::nullopt);
      else
        id.cells.push_back(cell(i + 1));
      char day[32];
      std::snprintf(day, sizeof(day), "2024-01-%02d 08:30:00", i % 10 + 1);
      ts.cells.push_back(cell(std::string(day)));
      act.cells.push_back(cell(actions[i % 3]));
      note.cells.push_back(cell(notes[i % 5]));
    }
    aud.cols = {id, ts, act, note};
  }

  Tbl cst{"cst", "", {}};
  {
    Col id{"cst_id", "int"}, nm{"cst_nm", "varchar(40)"}, region{"rgn_id", "int"},
        parent{"parent_cst", "int", true}, dt{"crt_dt", "date"};
    const std::vector<std::string> first = {"ACME",     "GLOBEX",   "INITECH", "UMBRA",
                                            "VANDELAY", "STERLING", "PIEDMONT", "CASCADE"};
    const std::vector<std::string> second = {"HOLDINGS", "LOGISTICS", "FOUNDRY", "MERCANTILE",
                                             "SUPPLY"};
    std::vector<std::string> names;
    for (int i = 0; i < 40; ++i) names.push_back(first[i % 8] + " " + second[(i / 8) % 5]);
    names[37] = names[0];
    names[38] = names[1];
    names[39] = names[2];
    for (int i = 0; i < 40; ++i) {
      id.cells.push_back(cell(i + 1));
      nm.cells.push_back(cell(names[i]));
      region.cells.push_back(cell(i % 4 + 1));
      if (i < 10)
        parent.cells.push_back(std::nullopt);
      else
        parent.cells.push_back(cell((i - 10) % 10 + 1));
      dt.cells.push_back(cell(dates8[i % 8]));
    }
    cst.cols = {id, nm, region, parent, dt};
  }

  Tbl ord{"ord", "", {}};
  {
    Col id{"ord_id", "int"}, customer{"cst_id", "int"}, dt{"crt_dt", "date"},
        amt{"tot_amt", "decimal(10,2)"};
    const std::vector<std::string> amounts = {"49.99",  "120.00", "75.50", "210.25",
                                              "99.00", "150.75", "64.10"};
    for (int i = 0; i < 30; ++i) {
      id.cells.push_back(cell(i + 1));
      customer.cells.push_back(cell(i % 15 + 1));
      dt.cells.push_back(cell(dates8[(i + 3) % 8]));
      amt.cells.push_back(cell(amounts[i % 7]));
    }
    ord.cols = {id, customer, dt, amt};
  }

  Tbl ord_ln{"ord_ln", "", {}};
  {
    Col order_ref{"ordid", "int"}, line{"ln_no", "int"}, product{"prd_ref", "int"},
        status{"stsid", "int"}, qty{"qty_ct", "int"}, prc{"unit_prc", "decimal(8,2)"};
    const std::vector<int64_t> status_pool = {1, 2, 3, 4, 5, 6, 7, 91, 92, 93};
    const std::vector<std::string> prices = {"3.20", "5.75", "8.40", "11.05", "2.60", "7.99"};
    for (int o = 1; o <= 25; ++o) {
      const int lines = o <= 15 ? 2 : 3;
      for (int ln = 1; ln <= lines; ++ln) {
        order_ref.cells.push_back(cell(o));
        line.cells.push_back(cell(ln));
        product.cells.push_back(cell(101 + (3 * o + 5 * ln) % 12));
        status.cells.push_back(cell(status_pool[(o - 1) % 10]));
        qty.cells.push_back(cell((o + ln) % 5 + 1));
        prc.cells.push_back(cell(prices[(o + 2 * ln) % 6]));
      }
    }
    ord_ln.cols = {order_ref, line, product, status, qty, prc};
  }

  Tbl inv_ln{"inv_ln", "", {}};
  {
    Col id{"inv_ln_id", "int"}, order_ref{"ord_id", "int"}, product{"prd_id", "int"},
        qty{"qty_ct", "int"}, guid{"rowguid", "uniqueidentifier"}, chk{"chk_id", "int"};
    const std::vector<int64_t> orders = {2,  2,  2,  4,  4,  5,  5,  7,  7,  9,  9,  11, 11,
                                         14, 14, 17, 17, 21, 21, 31, 31, 32, 32, 33, 33};
    for (int i = 0; i < 25; ++i) {
      id.cells.push_back(cell(i + 1));
      order_ref.cells.push_back(cell(orders[i]));
      product.cells.push_back(cell(101 + (5 * i) % 12));
      qty.cells.push_back(cell(i % 4 + 1));
      guid.cells.push_back(cell(i < 12 ? prd_guids[i] : inv_guids[i - 12]));
      chk.cells.push_back(cell(9001 + i));
    }
    inv_ln.cols = {id, order_ref, product, qty, guid, chk};
  }

  emit_schema(fx, "dw", {rgn, sts, prd, aud, cst, ord, ord_ln, inv_ln});

  fx.truth["formatVersion"] = "1";
  fx.truth["tables"] = ordered_json::object();
  fx.truth["tables"]["dw.aud"] =
      truth_table({}, "Append-only audit trail; the id column is unreliable.", true);
  fx.truth["tables"]["dw.cst"] = truth_table({"cst_id"}, "Customer accounts by region.");
  fx.truth["tables"]["dw.inv_ln"] = truth_table({"inv_ln_id"}, "Invoice lines per order.");
  fx.truth["tables"]["dw.ord"] = truth_table({"ord_id"}, "Customer orders.");
  fx.truth["tables"]["dw.ord_ln"] = truth_table({"ordid", "ln_no"}, "Order line items.");
  fx.truth["tables"]["dw.prd"] = truth_table({"prdid"}, "Product master.");
  fx.truth["tables"]["dw.rgn"] = truth_table({"rgn_id"}, "Region lookup.");
  fx.truth["tables"]["dw.sts"] = truth_table({"stat_id"}, "Order status lookup.");
  fx.truth["relationships"] = ordered_json::array({
      truth_rel("dw.cst", "parent_cst", "dw.cst", "cst_id"),
      truth_rel("dw.cst", "rgn_id", "dw.rgn", "rgn_id"),
      truth_rel("dw.inv_ln", "ord_id", "dw.ord", "ord_id", true),
      truth_rel("dw.inv_ln", "prd_id", "dw.prd", "prdid"),
      truth_rel("dw.ord", "cst_id", "dw.cst", "cst_id"),
      truth_rel("dw.ord_ln", "ordid", "dw.ord", "ord_id"),
      truth_rel("dw.ord_ln", "prd_ref", "dw.prd", "prdid"),
  });
  return fx;
}

inline GeneratedFixture build_chain4(const FixtureOptions &) {
  GeneratedFixture fx;
  fx.name = "chain4";

  Tbl acct{"acct", "", {}};
  {
    Col id{"acct_id", "int"}, nm{"acct_nm", "varchar(30)"};
    const std::vector<std::string> stems = {"NORTH",  "EAST",  "CREST", "RIDGE",
                                            "HARBOR", "SUMMIT", "VALLEY", "DELTA",
                                            "MESA",   "PLAINS", "GROVE"};
    for (int i = 0; i < 12; ++i) {
      id.cells.push_back(cell(i + 1));
      nm.cells.push_back(cell(stems[i < 11 ? i : 0] + " ENERGY"));
    }
    acct.cols = {id, nm};
  }

  Tbl site{"site", "", {}};
  {
    Col id{"site_id", "int"}, account{"acct_id", "int"};
    for (int i = 0; i < 18; ++i) {
      id.cells.push_back(cell(i + 1));
      account.cells.push_back(cell(i % 12 + 1));
    }
    site.cols = {id, account};
  }

  Tbl meter{"meter", "", {}};
  {
    Col id{"meter_id", "int"}, location{"site_id", "int"};
    for (int i = 0; i < 30; ++i) {
      id.cells.push_back(cell(i + 1));
      location.cells.push_back(cell(i % 15 + 1));
    }
    meter.cols = {id, location};
  }

  Tbl read{"read", "", {}};
  {
    Col id{"read_id", "int"}, device{"meter_id", "int"}, note{"note_txt", "text"};
    for (int i = 0; i < 60; ++i) {
      id.cells.push_back(cell(i + 1));
      device.cells.push_back(cell(i % 20 + 1));
      note.cells.push_back(cell(std::string("relay_crimson_velvet_chronograph")));
    }
    read.cols = {id, device, note};
  }

  emit_schema(fx, "ops", {acct, site, meter, read});

  fx.truth["formatVersion"] = "1";
  fx.truth["tables"] = ordered_json::object();
  fx.truth["tables"]["ops.acct"] = truth_table({"acct_id"}, "Billing accounts.");
  fx.truth["tables"]["ops.meter"] = truth_table({"meter_id"}, "Meters installed at sites.");
  fx.truth["tables"]["ops.read"] = truth_table({"read_id"}, "Meter readings.");
  fx.truth["tables"]["ops.site"] = truth_table({"site_id"}, "Service sites per account.");
  fx.truth["relationships"] = ordered_json::array({
      truth_rel("ops.meter", "site_id", "ops.site", "site_id"),
      truth_rel("ops.read", "meter_id", "ops.meter", "meter_id"),
      truth_rel("ops.site", "acct_id", "ops.acct", "acct_id"),
  });
  return fx;
}

inline GeneratedFixture build_adaptive(const FixtureOptions &options) {
  GeneratedFixture fx;
  fx.name = "adaptive";

  auto with_key = [&](std::vector<Col> base, Col key) {
    int pos = options.key_position;
    if (pos < 0) pos = 0;
    if (pos > static_cast<int>(base.size())) pos = static_cast<int>(base.size());
    base.insert(base.begin() + pos, std::move(key));
    return base;
  };

  Tbl zone{"zone", "", {}};
  {
    Col nm{"zone_nm", "varchar(12)"}, grp{"zone_grp", "varchar(2)"}, flg{"open_flg", "boolean"},
        id{"zone_id", "int"};
    const std::vector<std::string> names = {"ZONE NORTH", "ZONE SOUTH", "ZONE EAST",
                                            "ZONE WEST",  "ZONE HILL",  "ZONE LAKE",
                                            "ZONE PORT",  "ZONE NORTH"};
    const std::vector<std::string> groups = {"A", "A", "B", "B", "A", "B", "A", "B"};
    for (int i = 0; i < 8; ++i) {
      nm.cells.push_back(cell(names[i]));
      grp.cells.push_back(cell(groups[i]));
      flg.cells.push_back(cell(i % 2 == 0 ? std::string("1") : std::string("0")));
      id.cells.push_back(cell(i + 1));
    }
    zone.cols = with_key({nm, grp, flg}, id);
  }

  Tbl depot{"depot", "", {}};
  {
    Col nm{"depot_nm", "varchar(12)"}, cap{"cap_ct", "int"}, flg{"open_flg", "boolean"},
        id{"depot_id", "int"};
    const std::vector<std::string> names = {"DEPOT MAIN", "DEPOT RAIL", "DEPOT DOCK",
                                            "DEPOT AIR",  "DEPOT YARD", "DEPOT MAIN"};
    const std::vector<int64_t> caps = {40, 55, 40, 70, 55, 40};
    for (int i = 0; i < 6; ++i) {
      nm.cells.push_back(cell(names[i]));
      cap.cells.push_back(cell(caps[i]));
      flg.cells.push_back(cell(i % 2 == 0 ? std::string("1") : std::string("0")));
      id.cells.push_back(cell(i + 1));
    }
    depot.cols = with_key({nm, cap, flg}, id);
  }

  Tbl trip{"trip", "", {}};
  {
    Col route{"rte_cd", "varchar(6)"}, zone_ref{"zone_id", "int"}, depot_ref{"depot_id", "int"},
        id{"trip_id", "int"};
    for (int i = 0; i < 30; ++i) {
      route.cells.push_back(cell("RT-0" + std::to_string(i % 5 + 1)));
      zone_ref.cells.push_back(cell(i % 6 + 1));
      depot_ref.cells.push_back(cell(i % 3 + 1));
      id.cells.push_back(cell(i + 1));
    }
    trip.cols = with_key({route, zone_ref, depot_ref}, id);
  }

  emit_schema(fx, "mx", {zone, depot, trip});

  fx.truth["formatVersion"] = "1";
  fx.truth["tables"] = ordered_json::object();
  fx.truth["tables"]["mx.depot"] = truth_table({"depot_id"}, "Dispatch depots.", true);
  fx.truth["tables"]["mx.trip"] = truth_table({"trip_id"}, "Scheduled trips.", true);
  fx.truth["tables"]["mx.zone"] = truth_table({"zone_id"}, "Delivery zones.", true);
  fx.truth["relationships"] = ordered_json::array({
      truth_rel("mx.trip", "depot_id", "mx.depot", "depot_id"),
      truth_rel("mx.trip", "zone_id", "mx.zone", "zone_id"),
  });
  return fx;
}

}  // namespace fixture_detail

inline std::vector<std::string> fixture_names() { return {"adaptive", "chain4", "lousy8"}; }

inline GeneratedFixture build_fixture(const std::string &name,
                                      const FixtureOptions &options = {}) {
  if (name == "lousy8") return fixture_detail::build_lousy8(options);
  if (name == "chain4") return fixture_detail::build_chain4(options);
  if (name == "adaptive") return fixture_detail::build_adaptive(options);
  throw ConfigError("unknown fixture '" + name + "'");
}

// Writes manifest.json, truth.json and the data files under dir, creating
// directories as needed.
inline void write_fixture(const GeneratedFixture &fixture, const std::string &dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "data");
  auto write = [](const fs::path &path, const std::string &body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError("cannot write " + path.string());
    out << body;
  };
  write(fs::path(dir) / "manifest.json", fixture.manifest.dump(2) + "\n");
  write(fs::path(dir) / "truth.json", fixture.truth.dump(2) + "\n");
  for (const auto &[rel, body] : fixture.data_files) write(fs::path(dir) / rel, body);
}

}  // namespace schemadoc
