#ifndef MEDLANG_CROSSFIT_HPP
#define MEDLANG_CROSSFIT_HPP

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "medlang/records.hpp"

namespace medlang {

/// Partition of unit ids into test folds; the training set of fold f is the
/// complement of its test set.
struct CrossFitPlan {
  int n_folds = 0;
  std::vector<std::set<std::string>> test;
  std::vector<std::set<std::string>> train;

  /// Test fold of a unit id; DataError if the id is not in the plan.
  int fold_of(const std::string& unit_id) const;
  bool operator==(const CrossFitPlan&) const = default;
};

/// Seeded balanced partition. Ids are sorted before shuffling, so the plan
/// depends only on the id set and the seed, never on input order. Fold sizes
/// differ by at most one. ConfigError unless 2 <= n_folds <= |ids|.
CrossFitPlan make_plan(std::vector<std::string> unit_ids, int n_folds, std::uint64_t seed);

/// Plan implied by the records' fold ids.
CrossFitPlan plan_from_records(const std::vector<CausalRecord>& records, int n_folds);

/// Throws DataError unless the test sets partition `unit_ids`.
void validate_plan(const CrossFitPlan& plan, const std::vector<std::string>& unit_ids);

}  // namespace medlang

#endif  // MEDLANG_CROSSFIT_HPP
