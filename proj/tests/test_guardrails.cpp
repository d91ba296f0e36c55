#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "schemadoc/guardrails.hpp"
#include "schemadoc/mock_analyzer.hpp"
#include "test_support.hpp"

using namespace schemadoc;
using namespace schemadoc::testing;

namespace {

// A request whose estimated input size is exactly `tokens`.
AnalysisRequest request_of(int64_t tokens) {
  AnalysisRequest req;
  req.kind = RequestKind::TABLE_ANALYSIS;  // "TABLE_ANALYSIS" is 14 chars
  req.subject = std::string(static_cast<size_t>(tokens * 4) - 14 - 2, 'x');
  req.context = ordered_json::object();  // dumps as "{}", 2 chars
  return req;
}

}  // namespace

TEST_CASE("token budget splits across phases") {
  GuardrailLimits limits;
  limits.max_tokens_per_run = 1000;  // discovery 250, analysis 700, sanity 50

  SECTION("estimate checks against the phase slice") {
    BudgetLedger ledger;
    ledger.analysis = {600, 80, 7};  // total 680
    TokenBudgetGate gate(limits, ledger);
    gate.set_phase(BudgetPhase::ANALYSIS);

    CHECK_NOTHROW(gate.precheck(request_of(20)));  // lands exactly on 700
    try {
      gate.precheck(request_of(21));
      FAIL("expected a stop");
    } catch (const GuardrailStop &stop) {
      CHECK(stop.phase == "analysis");
      CHECK(stop.kind == "tokens");
    }
  }

  SECTION("a phase with a zero slice refuses everything") {
    GuardrailLimits zero_sanity = limits;
    zero_sanity.sanity_fraction = 0.0;
    TokenBudgetGate gate(zero_sanity);
    gate.set_phase(BudgetPhase::SANITY);
    CHECK_THROWS_AS(gate.precheck(request_of(5)), GuardrailStop);
  }

  SECTION("the run total binds even when the phase slice does not") {
    GuardrailLimits wide = limits;
    wide.analysis_fraction = 1.0;
    BudgetLedger ledger;
    ledger.discovery = {400, 100, 3};
    ledger.analysis = {300, 150, 4};  // run total 950
    TokenBudgetGate gate(wide, ledger);
    gate.set_phase(BudgetPhase::ANALYSIS);
    CHECK_NOTHROW(gate.precheck(request_of(50)));
    try {
      gate.precheck(request_of(51));
      FAIL("expected a stop");
    } catch (const GuardrailStop &stop) {
      CHECK(stop.kind == "tokens");
    }
  }

  SECTION("unlimited when the limit is zero") {
    TokenBudgetGate gate(GuardrailLimits{});
    gate.set_phase(BudgetPhase::ANALYSIS);
    CHECK_NOTHROW(gate.precheck(request_of(1 << 20)));
    CHECK_FALSE(gate.degraded());
  }
}

TEST_CASE("cost and duration budgets") {
  SECTION("projected cost includes the estimated input") {
    GuardrailLimits limits;
    limits.price_per_input_token = 0.001;
    limits.price_per_output_token = 0.002;
    limits.max_cost_dollars = 2.1;
    BudgetLedger ledger;
    ledger.analysis = {1000, 500, 9};  // cost 1.0 + 1.0 = 2.0
    TokenBudgetGate gate(limits, ledger);
    gate.set_phase(BudgetPhase::ANALYSIS);
    CHECK_NOTHROW(gate.precheck(request_of(100)));  // 2.0 + 0.1 = 2.1 exactly

    GuardrailLimits tight = limits;
    tight.max_cost_dollars = 2.05;
    TokenBudgetGate tight_gate(tight, ledger);
    tight_gate.set_phase(BudgetPhase::ANALYSIS);
    try {
      tight_gate.precheck(request_of(100));
      FAIL("expected a stop");
    } catch (const GuardrailStop &stop) {
      CHECK(stop.kind == "cost");
    }
  }

  SECTION("duration uses the injected clock") {
    GuardrailLimits limits;
    limits.max_duration_seconds = 5.0;
    double now = 0.0;
    TokenBudgetGate gate(limits, {}, [&now] { return now; });
    gate.set_phase(BudgetPhase::ANALYSIS);
    CHECK_NOTHROW(gate.precheck(request_of(10)));
    now = 5.5;
    try {
      gate.precheck(request_of(10));
      FAIL("expected a stop");
    } catch (const GuardrailStop &stop) {
      CHECK(stop.kind == "duration");
    }
    CHECK(gate.degraded());  // past the warn line too
  }
}

TEST_CASE("warn threshold flips the gate into degraded mode") {
  GuardrailLimits limits;
  limits.max_tokens_per_run = 1000;

  BudgetLedger below;
  below.analysis = {500, 59, 3};  // 559 < 560 = 0.8 * 700
  TokenBudgetGate fresh(limits, below);
  fresh.set_phase(BudgetPhase::ANALYSIS);
  CHECK_FALSE(fresh.degraded());

  BudgetLedger at;
  at.analysis = {500, 60, 3};  // exactly 560
  TokenBudgetGate warm(limits, at);
  warm.set_phase(BudgetPhase::ANALYSIS);
  CHECK(warm.degraded());

  // The run-level line triggers regardless of the phase slice.
  GuardrailLimits wide = limits;
  wide.analysis_fraction = 1.0;
  BudgetLedger spread;
  spread.discovery = {200, 50, 2};
  spread.analysis = {400, 150, 4};  // run 800 = 0.8 * 1000
  TokenBudgetGate run_warm(wide, spread);
  run_warm.set_phase(BudgetPhase::ANALYSIS);
  CHECK(run_warm.degraded());
}

TEST_CASE("charges accumulate per phase and the ledger round-trips") {
  TokenBudgetGate gate(GuardrailLimits{});
  gate.set_phase(BudgetPhase::DISCOVERY);
  gate.charge({100, 20});
  gate.set_phase(BudgetPhase::ANALYSIS);
  gate.charge({300, 70});
  gate.charge({50, 10});
  gate.set_phase(BudgetPhase::SANITY);
  gate.charge({7, 3});

  const BudgetLedger &ledger = gate.ledger();
  CHECK(ledger.discovery.input == 100);
  CHECK(ledger.discovery.calls == 1);
  CHECK(ledger.analysis.input == 350);
  CHECK(ledger.analysis.output == 80);
  CHECK(ledger.analysis.calls == 2);
  CHECK(ledger.sanity.total() == 10);
  CHECK(ledger.run_total() == 560);
  CHECK(ledger.run_calls() == 4);

  const auto j = ledger.to_json();
  const BudgetLedger back = BudgetLedger::from_json(j);
  CHECK(back.to_json().dump() == j.dump());
}

TEST_CASE("a metered refinement run stops before the over-budget call") {
  SchemaBuilder b;
  b.add_table("p", {{"p_id", CanonicalType::INT, int_column(1, 8), false}});
  b.add_table("k", {{"k_id", CanonicalType::INT, int_column(1, 8), false},
                    {"p_ref", CanonicalType::INT, int_column(1, 8)}});
  const std::map<std::string, std::vector<std::string>> pks = {{"s.p", {"p_id"}},
                                                               {"s.k", {"k_id"}}};
  PkResultMap pk_results;
  RefinementOptions options;
  RefinementState state = make_initial_state(b.snapshot, {}, options);
  Relationship edge;
  edge.source_table = "s.k";
  edge.source_columns = {"p_ref"};
  edge.target_table = "s.p";
  edge.target_columns = {"p_id"};
  edge.confidence = 90.0;
  state.relationships = {edge};

  GuardrailLimits limits;
  limits.max_tokens_per_run = 900;  // enough for a few calls, not the run
  TokenBudgetGate gate(limits);
  gate.set_phase(BudgetPhase::ANALYSIS);

  MockAnalyzer analyzer;
  RefinementEngine engine(b.snapshot, b.profiles, pk_results, pks, analyzer, options,
                          state, &gate);
  try {
    engine.run();
    FAIL("expected the budget to stop the run");
  } catch (const GuardrailStop &stop) {
    CHECK(stop.phase == "analysis");
  }
  // Whatever was charged stayed at or under the analysis slice.
  CHECK(gate.ledger().analysis.total() <= 630 + 256);
  CHECK(gate.ledger().run_calls() >= 1);
}
