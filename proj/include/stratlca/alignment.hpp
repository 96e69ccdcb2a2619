#pragma once

#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "stratlca/lca.hpp"
#include "stratlca/types.hpp"

namespace stratlca {

/// Chebyshev (L-infinity) distance between two probability vectors.
template <class DerivedA, class DerivedB>
double chebyshev_distance(const Eigen::MatrixBase<DerivedA>& a,
                          const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    std::ostringstream msg;
    msg << "vector lengths differ: " << a.size() << " vs " << b.size();
    throw ValidationError(msg.str());
  }
  return (a.derived().template cast<double>() - b.derived().template cast<double>())
      .cwiseAbs()
      .maxCoeff();
}

/// Similarity s = 1 - Chebyshev distance, in [0, 1].
template <class DerivedA, class DerivedB>
double similarity(const Eigen::MatrixBase<DerivedA>& a,
                  const Eigen::MatrixBase<DerivedB>& b) {
  return 1.0 - chebyshev_distance(a, b);
}

/// Pairwise cluster similarities between two fitted models: entry (i, j) is
/// the similarity of cluster i of `a` to cluster j of `b`.
template <class Scalar>
Matrix similarity_matrix(const LcaModelT<Scalar>& a, const LcaModelT<Scalar>& b) {
  if (a.dimension() != b.dimension()) {
    std::ostringstream msg;
    msg << "model dimensions differ: " << a.dimension() << " vs " << b.dimension();
    throw ValidationError(msg.str());
  }
  Matrix s(a.components(), b.components());
  for (Index i = 0; i < a.components(); ++i) {
    for (Index j = 0; j < b.components(); ++j) {
      s(i, j) = similarity(a.theta.col(i), b.theta.col(j));
    }
  }
  return s;
}

struct Match {
  Index from = 0;  // cluster index in the younger stratum
  Index to = 0;    // cluster index in the older stratum
  double similarity = 0;

  friend bool operator==(const Match&, const Match&) = default;
};

using MatchList = std::vector<Match>;

/// Greedy partial matching: repeatedly accept the globally most similar
/// unmatched pair until the best remaining similarity falls below the
/// threshold (the boundary itself is accepted). Ties break to the lower row,
/// then the lower column. Accepted similarities are non-increasing.
MatchList greedy_match(const Eigen::Ref<const Matrix>& similarities,
                       double threshold);

/// Accepted matches between every consecutive stratum pair, youngest first.
struct AlignmentChain {
  double threshold = 0.7;
  std::vector<Index> cluster_counts;  // K per group, youngest first
  std::vector<MatchList> matches;     // matches[g-1] links groups g and g+1

  int group_count() const { return static_cast<int>(cluster_counts.size()); }
  Index total_clusters() const;
  Index total_matches() const;
};

/// Matches each stratum's clusters to its predecessor's, youngest pair first.
/// The matching always compares fitted theta columns; any presentation
/// re-indexing downstream cannot change which columns are compared.
AlignmentChain chain_alignments(const std::vector<LcaModel>& models, double threshold);

/// A maximal run of matched clusters across consecutive groups. `members`
/// holds (1-based group, cluster index) pairs; the first member is the index
/// cluster in the youngest group of the set.
struct ClusterSet {
  int id = 0;
  std::vector<std::pair<int, Index>> members;
  bool singleton = false;

  int first_group() const { return members.front().first; }
  int last_group() const { return members.back().first; }
  int span() const { return static_cast<int>(members.size()); }
};

/// Connected components of the match graph. Components are paths because each
/// cluster matches at most once per side. Sets are ordered by (youngest group,
/// cluster index) and ids are assigned in that order, so
/// #sets = total clusters - total accepted matches.
std::vector<ClusterSet> build_cluster_sets(const AlignmentChain& chain);

}  // namespace stratlca
