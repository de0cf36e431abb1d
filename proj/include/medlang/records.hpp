#ifndef MEDLANG_RECORDS_HPP
#define MEDLANG_RECORDS_HPP

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace medlang {

/// Categorical confounder with its declared finite level set.
struct Confounder {
  std::string name;
  std::vector<std::string> levels;

  bool operator==(const Confounder&) const = default;
};

/// Finite mediator domain {0, ..., n_levels - 1}. A fold-specific mediator
/// was measured by a model fitted per cross-fit fold, so each record carries
/// one level per fold.
struct MediatorDomain {
  std::string name;
  int n_levels = 2;
  bool fold_specific = false;

  bool operator==(const MediatorDomain&) const = default;
};

/// Declared domains for a record set. Confounder cells enumerate the
/// Cartesian product of confounder levels in mixed radix, first confounder
/// most significant.
struct RecordSchema {
  std::vector<Confounder> confounders;
  std::vector<MediatorDomain> mediators;
  int n_folds = 2;

  int n_cells() const;
  /// Cell index of a confounder assignment; DataError if a level is undeclared.
  int cell_index(const std::map<std::string, std::string>& x) const;
  std::vector<std::string> cell_levels(int cell) const;
  const MediatorDomain& mediator(const std::string& name) const;
  bool has_mediator(const std::string& name) const;

  bool operator==(const RecordSchema&) const = default;
};

/// One unit's measured (T, X, M, Y) tuple.
struct CausalRecord {
  std::string unit_id;
  int t = 0;
  std::map<std::string, std::string> x;
  std::map<std::string, int> m;
  /// Per-fold levels of fold-specific mediators: entry f is the level
  /// assigned by the measurement model fitted for evaluation fold f.
  std::map<std::string, std::vector<int>> m_folds;
  int y = 0;
  int fold = 0;
  /// Reserved for an interruption-valence outcome; never populated.
  std::optional<int> valence;

  /// Level used when this record trains the nuisance models of fold `fold`.
  int training_level(const MediatorDomain& mediator, int fold) const;

  bool operator==(const CausalRecord&) const = default;
};

struct RecordSet {
  RecordSchema schema;
  std::vector<CausalRecord> records;
};

/// Throws DataError on the first record outside the declared domains or on a
/// duplicate unit id.
void validate_records(const std::vector<CausalRecord>& records, const RecordSchema& schema);

/// Records file: a schema header line followed by one record per line.
void write_records(std::ostream& out, const RecordSet& set);
RecordSet read_records(std::istream& in);

}  // namespace medlang

#endif  // MEDLANG_RECORDS_HPP
