#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stratlca/types.hpp"

namespace stratlca {

/// Ordered list of condition short names. The order defines the column
/// semantics of every matrix downstream; nothing else carries that mapping.
struct ConditionCatalog {
  std::vector<std::string> names;

  Index size() const { return static_cast<Index>(names.size()); }
  /// Throws ValidationError if empty or names repeat / are blank.
  void validate() const;
};

struct IndividualRecord {
  std::string id;
  int age = 0;
  std::vector<std::uint8_t> conditions;  // 0/1, length D
};

/// Five-year age bands 40-44 ... 95-99 by default.
struct StrataSpec {
  int age_min = 40;
  int age_max = 99;
  int width = 5;

  /// Throws ConfigError unless width >= 1 and the range divides evenly.
  void validate() const;
  int group_count() const;
  /// 1-based group for an age inside [age_min, age_max].
  int group_of(int age) const;
  /// Inclusive [lo, hi] covered by the 1-based group g.
  std::pair<int, int> age_range(int g) const;
};

/// Immutable set of individuals sharing one condition catalog. Conditions are
/// held as an N x D 0/1 matrix so fitting can consume them directly.
class Cohort {
 public:
  Cohort() = default;
  Cohort(std::shared_ptr<const ConditionCatalog> catalog,
         std::vector<std::string> ids, IntVector ages, Matrix conditions);

  static Cohort from_records(const ConditionCatalog& catalog,
                             const std::vector<IndividualRecord>& records);

  Index size() const { return static_cast<Index>(ids_.size()); }
  Index dimension() const { return catalog_ ? catalog_->size() : 0; }
  const ConditionCatalog& catalog() const { return *catalog_; }
  std::shared_ptr<const ConditionCatalog> catalog_ptr() const { return catalog_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const IntVector& ages() const { return ages_; }
  const Matrix& conditions() const { return conditions_; }
  IndividualRecord record(Index i) const;

 private:
  std::shared_ptr<const ConditionCatalog> catalog_;
  std::vector<std::string> ids_;
  IntVector ages_;
  Matrix conditions_;  // N x D, entries 0 or 1
};

struct Stratum {
  int group_index = 0;  // 1-based; 0 is reserved for the whole population
  int age_lo = 0;
  int age_hi = 0;
  Cohort data;

  Index size() const { return data.size(); }
};

struct FilterCounts {
  Index kept = 0;
  Index dropped_age = 0;
  Index dropped_no_condition = 0;

  Index dropped() const { return dropped_age + dropped_no_condition; }
};

/// Parses the cohort CSV (header `id,age,<cond_1>,...,<cond_D>`). When a
/// catalog is given the header must match it exactly; otherwise the catalog is
/// inferred from the header. `source_name` appears in error messages.
Cohort load_cohort(std::istream& in,
                   const std::optional<ConditionCatalog>& catalog = {},
                   const std::string& source_name = "<stream>");
Cohort load_cohort_file(const std::filesystem::path& path,
                        const std::optional<ConditionCatalog>& catalog = {});

void write_cohort_csv(std::ostream& out, const Cohort& cohort);

/// Keeps records with age in [spec.age_min, spec.age_max] and at least one
/// condition present. Never fails; an empty result is legal.
Cohort filter_eligible(const Cohort& cohort, const StrataSpec& spec,
                       FilterCounts* counts = nullptr);

/// Splits an eligibility-filtered cohort into the spec's G age bands. The
/// strata partition the cohort; records keep their relative order.
std::vector<Stratum> stratify(const Cohort& cohort, const StrataSpec& spec);

/// Fraction of records with each condition present. Throws ValidationError
/// ("empty stratum") when there are no records.
Vector condition_prevalence(const Cohort& cohort);
Vector condition_prevalence(const Stratum& stratum);

/// CSV with one row per condition, one column per group plus `total`,
/// fractions at 6 decimal places.
void write_prevalence_csv(std::ostream& out, const ConditionCatalog& catalog,
                          const std::vector<Stratum>& strata,
                          const Cohort& eligible_cohort);

}  // namespace stratlca
