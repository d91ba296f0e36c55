#pragma once

#include <map>
#include <string>
#include <vector>

#include "schemadoc/fk_discovery.hpp"
#include "schemadoc/pk_discovery.hpp"
#include "schemadoc/profile.hpp"
#include "schemadoc/schema_model.hpp"
#include "schemadoc/snapshot.hpp"

namespace schemadoc {

struct DiscoveryResult {
  PkResultMap pk_results;                      // final (second) PK pass
  FkDiscoveryResult fk;                        // final FK pass
  std::map<std::string, double> fk_likelihood; // per source column
  std::map<std::string, std::vector<std::string>> accepted_pks;

  std::vector<Relationship> accepted_relationships() const {
    std::vector<Relationship> out;
    for (const auto &c : fk.candidates) {
      if (!c.accepted) continue;
      Relationship r;
      r.source_table = c.source_table;
      r.source_columns = {c.source_column};
      r.target_table = c.target_table;
      r.target_columns = {c.target_column};
      r.confidence = c.score;
      r.origin = c.origin;
      out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), [](const Relationship &a, const Relationship &b) {
      return a.edge_key() < b.edge_key();
    });
    return out;
  }
};

inline PkResultMap run_pk_pass(const SchemaSnapshot &snapshot, const ProfileMap &profiles,
                               const std::map<std::string, double> &fk_likelihood,
                               const PkOptions &options) {
  PkResultMap results;
  for (const auto &table : snapshot.tables) {
    auto result = generate_pk_candidates(table, snapshot, profiles, options);
    apply_pk_hard_rejection(result, table, snapshot, profiles);
    score_pk_candidates(result, table, snapshot, profiles, fk_likelihood, options);
    results[table.key()] = std::move(result);
  }
  return results;
}

// Key discovery runs in two passes to break the mutual dependency between
// PK scoring (which wants FK likelihood) and FK target generation (which
// wants accepted PKs). Pass one scores PKs with zero likelihood, generates
// FK candidates against those provisional keys, and measures likelihood from
// the tier survivors. Pass two rescoring is final; the full FK pipeline then
// runs against the final keys.
inline DiscoveryResult run_discovery(const SchemaSnapshot &snapshot, const ProfileMap &profiles,
                                     const PkOptions &pk_options, const FkOptions &fk_options) {
  DiscoveryResult result;

  const auto provisional = run_pk_pass(snapshot, profiles, {}, pk_options);
  const auto provisional_pks = chosen_pk_map(provisional);
  const auto first_candidates = generate_fk_candidates(snapshot, profiles, provisional_pks);
  result.fk_likelihood = fk_likelihood_by_column(first_candidates);

  result.pk_results = run_pk_pass(snapshot, profiles, result.fk_likelihood, pk_options);
  result.accepted_pks = chosen_pk_map(result.pk_results);
  result.fk = discover_fks(snapshot, profiles, result.accepted_pks, fk_options);
  return result;
}

}  // namespace schemadoc
