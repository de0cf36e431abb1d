#include "medlang/crossfit.hpp"

#include <algorithm>

#include "medlang/error.hpp"
#include "medlang/random.hpp"

namespace medlang {
namespace {

void fill_train(CrossFitPlan& plan) {
  plan.train.assign(plan.n_folds, {});
  for (int f = 0; f < plan.n_folds; ++f) {
    for (int g = 0; g < plan.n_folds; ++g) {
      if (g != f) plan.train[f].insert(plan.test[g].begin(), plan.test[g].end());
    }
  }
}

}  // namespace

int CrossFitPlan::fold_of(const std::string& unit_id) const {
  for (int f = 0; f < n_folds; ++f) {
    if (test[f].contains(unit_id)) return f;
  }
  throw DataError("unit " + unit_id + " is not in the cross-fit plan");
}

CrossFitPlan make_plan(std::vector<std::string> unit_ids, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("cross-fitting needs at least 2 folds");
  if (static_cast<std::size_t>(n_folds) > unit_ids.size()) {
    throw ConfigError("too few units (" + std::to_string(unit_ids.size()) + ") for " +
                      std::to_string(n_folds) + " folds");
  }
  std::sort(unit_ids.begin(), unit_ids.end());
  if (std::adjacent_find(unit_ids.begin(), unit_ids.end()) != unit_ids.end()) {
    throw DataError("duplicate unit id in cross-fit plan");
  }
  Rng rng(seed);
  rng.shuffle(unit_ids);
  CrossFitPlan plan;
  plan.n_folds = n_folds;
  plan.test.assign(n_folds, {});
  for (std::size_t i = 0; i < unit_ids.size(); ++i) plan.test[i % n_folds].insert(unit_ids[i]);
  fill_train(plan);
  return plan;
}

CrossFitPlan plan_from_records(const std::vector<CausalRecord>& records, int n_folds) {
  CrossFitPlan plan;
  plan.n_folds = n_folds;
  plan.test.assign(n_folds, {});
  for (const auto& r : records) {
    if (r.fold < 0 || r.fold >= n_folds) throw DataError("record " + r.unit_id + " has an invalid fold");
    if (!plan.test[r.fold].insert(r.unit_id).second) {
      throw DataError("duplicate unit id " + r.unit_id);
    }
  }
  fill_train(plan);
  return plan;
}

void validate_plan(const CrossFitPlan& plan, const std::vector<std::string>& unit_ids) {
  if (plan.n_folds < 2 || static_cast<int>(plan.test.size()) != plan.n_folds) {
    throw DataError("cross-fit plan needs at least 2 folds");
  }
  std::size_t covered = 0;
  for (const auto& fold : plan.test) covered += fold.size();
  if (covered != unit_ids.size()) throw DataError("cross-fit plan does not partition the units");
  for (const auto& id : unit_ids) plan.fold_of(id);
}

}  // namespace medlang
