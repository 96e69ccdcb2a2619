#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "stratlca/alignment.hpp"
#include "stratlca/cohort.hpp"
#include "stratlca/lca.hpp"
#include "stratlca/types.hpp"

namespace stratlca {

/// Prevalence bands within a cluster: high > hi, moderate in [lo, hi],
/// low < lo. The closed moderate interval makes the partition total.
struct BandThresholds {
  double lo = 0.3;
  double hi = 0.7;

  void validate() const {
    if (!(lo < hi)) throw ConfigError("band thresholds require lo < hi");
  }
};

struct BandProfile {
  std::vector<Index> high;      // catalog indices, catalog order
  std::vector<Index> moderate;
  std::vector<Index> low;
};

BandProfile classify_bands(const Eigen::Ref<const Vector>& theta_column,
                           const BandThresholds& bands = {});

/// Condition indices sorted by descending theta, ties to the lower index.
std::vector<Index> order_by_theta(const Eigen::Ref<const Vector>& theta_column,
                                  const std::vector<Index>& indices);

/// Set name from the index cluster: high-band conditions joined in descending
/// theta order, parenthesized; with no high-band condition the single
/// largest-theta condition prefixed "~".
std::string name_cluster_set(const ClusterSet& set,
                             const std::vector<LcaModel>& models,
                             const ConditionCatalog& catalog,
                             const BandThresholds& bands = {});

struct ClusterSetReport {
  int id = 0;
  std::string name;
  int first_group = 0;
  int last_group = 0;
  bool singleton = false;
  std::vector<std::string> high;      // index-cluster band lists, theta-descending
  std::vector<std::string> moderate;
  std::vector<double> group_fraction;  // per group 1..G; NaN outside the span
};

/// Per-set rows combining the index cluster's bands with each member's hard
/// assignment fraction. `fractions[g-1]` are hard_assign fractions of group g.
std::vector<ClusterSetReport> build_cluster_set_reports(
    const std::vector<ClusterSet>& sets, const std::vector<LcaModel>& models,
    const std::vector<Vector>& fractions, const ConditionCatalog& catalog,
    const BandThresholds& bands = {});

/// CSV `set_id,name,high,moderate,singleton,g1..gG`; band lists are
/// semicolon-joined, group cells are percentages at 2 decimals, blank outside
/// the set's span. When `split_moderate` is set the moderate column is split
/// into [0.5, hi] and [lo, 0.5) halves.
void write_cluster_set_csv(std::ostream& out,
                           const std::vector<ClusterSetReport>& reports,
                           int group_count, bool split_moderate = false,
                           const std::vector<LcaModel>* models = nullptr,
                           const std::vector<ClusterSet>* sets = nullptr,
                           const ConditionCatalog* catalog = nullptr,
                           const BandThresholds& bands = {});

struct Summary {
  Index singleton = 0;
  Index non_singleton = 0;
  std::map<int, Index> span_histogram;   // span length -> set count
  std::vector<Index> singleton_per_group;  // index g-1 -> singleton sets in g
};

Summary summarize(const std::vector<ClusterSet>& sets, int group_count);

void write_summary_json(std::ostream& out, const Summary& summary);

/// DOT graph: one node "G{g}:C{k}" per cluster, grouped by stratum, one edge
/// per accepted match with the similarity as its weight.
void write_dot(std::ostream& out, const AlignmentChain& chain);

void write_graphml(std::ostream& out, const AlignmentChain& chain);

}  // namespace stratlca
