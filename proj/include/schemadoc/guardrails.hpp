#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <utility>

#include "schemadoc/analyzer.hpp"
#include "schemadoc/errors.hpp"
#include "schemadoc/refinement.hpp"

namespace schemadoc {

enum class BudgetPhase { DISCOVERY, ANALYSIS, SANITY };

inline const char *to_string(BudgetPhase p) {
  switch (p) {
    case BudgetPhase::DISCOVERY: return "discovery";
    case BudgetPhase::ANALYSIS: return "analysis";
    case BudgetPhase::SANITY: return "sanity";
  }
  return "analysis";
}

inline BudgetPhase budget_phase_from_string(const std::string &s) {
  if (s == "discovery") return BudgetPhase::DISCOVERY;
  if (s == "sanity") return BudgetPhase::SANITY;
  return BudgetPhase::ANALYSIS;
}

// Zero disables a limit. Prices are per token.
struct GuardrailLimits {
  int64_t max_tokens_per_run = 0;
  double max_duration_seconds = 0.0;
  double max_cost_dollars = 0.0;
  double price_per_input_token = 0.0;
  double price_per_output_token = 0.0;
  double warn_threshold = 0.8;
  double discovery_fraction = 0.25;
  double analysis_fraction = 0.70;
  double sanity_fraction = 0.05;

  double fraction(BudgetPhase p) const {
    switch (p) {
      case BudgetPhase::DISCOVERY: return discovery_fraction;
      case BudgetPhase::ANALYSIS: return analysis_fraction;
      case BudgetPhase::SANITY: return sanity_fraction;
    }
    return analysis_fraction;
  }
};

struct PhaseSpend {
  int64_t input = 0;
  int64_t output = 0;
  int64_t calls = 0;

  int64_t total() const { return input + output; }

  ordered_json to_json() const {
    return {{"input", input}, {"output", output}, {"calls", calls}};
  }
  static PhaseSpend from_json(const ordered_json &j) {
    return {j.at("input").get<int64_t>(), j.at("output").get<int64_t>(),
            j.at("calls").get<int64_t>()};
  }
};

struct BudgetLedger {
  PhaseSpend discovery;
  PhaseSpend analysis;
  PhaseSpend sanity;

  PhaseSpend &for_phase(BudgetPhase p) {
    switch (p) {
      case BudgetPhase::DISCOVERY: return discovery;
      case BudgetPhase::ANALYSIS: return analysis;
      case BudgetPhase::SANITY: return sanity;
    }
    return analysis;
  }
  const PhaseSpend &for_phase(BudgetPhase p) const {
    return const_cast<BudgetLedger *>(this)->for_phase(p);
  }

  int64_t run_total() const {
    return discovery.total() + analysis.total() + sanity.total();
  }
  int64_t run_calls() const { return discovery.calls + analysis.calls + sanity.calls; }

  double run_cost(const GuardrailLimits &limits) const {
    const int64_t in = discovery.input + analysis.input + sanity.input;
    const int64_t out = discovery.output + analysis.output + sanity.output;
    return static_cast<double>(in) * limits.price_per_input_token +
           static_cast<double>(out) * limits.price_per_output_token;
  }

  ordered_json to_json() const {
    return {{"discovery", discovery.to_json()},
            {"analysis", analysis.to_json()},
            {"sanity", sanity.to_json()}};
  }
  static BudgetLedger from_json(const ordered_json &j) {
    BudgetLedger l;
    l.discovery = PhaseSpend::from_json(j.at("discovery"));
    l.analysis = PhaseSpend::from_json(j.at("analysis"));
    l.sanity = PhaseSpend::from_json(j.at("sanity"));
    return l;
  }
};

// Meters analyzer traffic against the per-run limits, split across the three
// budget phases. The precheck uses the request's estimated input tokens, so a
// call that would cross a cap is refused before it is issued; the reply that
// follows an allowed call may land slightly past the line, which is the
// documented approximation.
class TokenBudgetGate : public BudgetGate {
 public:
  explicit TokenBudgetGate(GuardrailLimits limits, BudgetLedger ledger = {},
                           std::function<double()> elapsed_seconds = {})
      : limits_(limits), ledger_(ledger), elapsed_(std::move(elapsed_seconds)) {
    if (!elapsed_) {
      const auto start = std::chrono::steady_clock::now();
      elapsed_ = [start] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
      };
    }
  }

  void set_phase(BudgetPhase phase) { phase_ = phase; }
  BudgetPhase phase() const { return phase_; }
  const GuardrailLimits &limits() const { return limits_; }
  const BudgetLedger &ledger() const { return ledger_; }

  void precheck(const AnalysisRequest &request) override {
    const int64_t estimate = synthetic_token_count(request.character_count());
    if (limits_.max_tokens_per_run > 0) {
      const double cap =
          limits_.fraction(phase_) * static_cast<double>(limits_.max_tokens_per_run);
      const auto &spent = ledger_.for_phase(phase_);
      if (static_cast<double>(spent.total() + estimate) > cap)
        throw GuardrailStop("phase token budget would be exceeded",
                            to_string(phase_), "tokens");
      if (ledger_.run_total() + estimate > limits_.max_tokens_per_run)
        throw GuardrailStop("run token budget would be exceeded", to_string(phase_),
                            "tokens");
    }
    if (limits_.max_cost_dollars > 0.0) {
      const double projected =
          ledger_.run_cost(limits_) +
          static_cast<double>(estimate) * limits_.price_per_input_token;
      if (projected > limits_.max_cost_dollars)
        throw GuardrailStop("run cost budget would be exceeded", to_string(phase_),
                            "cost");
    }
    if (limits_.max_duration_seconds > 0.0 &&
        elapsed_() > limits_.max_duration_seconds)
      throw GuardrailStop("run duration budget exceeded", to_string(phase_),
                          "duration");
  }

  void charge(const TokenUsage &usage) override {
    PhaseSpend &spend = ledger_.for_phase(phase_);
    spend.input += usage.input;
    spend.output += usage.output;
    spend.calls += 1;
  }

  bool degraded() const override {
    if (limits_.max_tokens_per_run > 0) {
      const double cap =
          limits_.fraction(phase_) * static_cast<double>(limits_.max_tokens_per_run);
      if (cap > 0.0 &&
          static_cast<double>(ledger_.for_phase(phase_).total()) >=
              limits_.warn_threshold * cap)
        return true;
      if (static_cast<double>(ledger_.run_total()) >=
          limits_.warn_threshold * static_cast<double>(limits_.max_tokens_per_run))
        return true;
    }
    if (limits_.max_cost_dollars > 0.0 &&
        ledger_.run_cost(limits_) >= limits_.warn_threshold * limits_.max_cost_dollars)
      return true;
    if (limits_.max_duration_seconds > 0.0 &&
        elapsed_() >= limits_.warn_threshold * limits_.max_duration_seconds)
      return true;
    return false;
  }

 private:
  GuardrailLimits limits_;
  BudgetLedger ledger_;
  std::function<double()> elapsed_;
  BudgetPhase phase_ = BudgetPhase::ANALYSIS;
};

}  // namespace schemadoc
