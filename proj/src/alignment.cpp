#include "stratlca/alignment.hpp"

#include <numeric>

namespace stratlca {

MatchList greedy_match(const Eigen::Ref<const Matrix>& similarities,
                       double threshold) {
  if (threshold < 0.0 || threshold > 1.0) {
    throw ConfigError("similarity threshold must lie in [0, 1]");
  }
  const Index rows = similarities.rows();
  const Index cols = similarities.cols();
  std::vector<char> row_used(static_cast<std::size_t>(rows), 0);
  std::vector<char> col_used(static_cast<std::size_t>(cols), 0);

  MatchList matches;
  const Index rounds = std::min(rows, cols);
  for (Index round = 0; round < rounds; ++round) {
    Index best_i = -1;
    Index best_j = -1;
    double best = -1.0;
    for (Index i = 0; i < rows; ++i) {
      if (row_used[static_cast<std::size_t>(i)]) continue;
      for (Index j = 0; j < cols; ++j) {
        if (col_used[static_cast<std::size_t>(j)]) continue;
        if (similarities(i, j) > best) {  // strict: first hit wins ties
          best = similarities(i, j);
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_i < 0 || best < threshold) break;
    matches.push_back(Match{best_i, best_j, best});
    row_used[static_cast<std::size_t>(best_i)] = 1;
    col_used[static_cast<std::size_t>(best_j)] = 1;
  }
  return matches;
}

Index AlignmentChain::total_clusters() const {
  return std::accumulate(cluster_counts.begin(), cluster_counts.end(), Index{0});
}

Index AlignmentChain::total_matches() const {
  Index total = 0;
  for (const auto& m : matches) total += static_cast<Index>(m.size());
  return total;
}

AlignmentChain chain_alignments(const std::vector<LcaModel>& models,
                                double threshold) {
  AlignmentChain chain;
  chain.threshold = threshold;
  chain.cluster_counts.reserve(models.size());
  for (const auto& m : models) chain.cluster_counts.push_back(m.components());
  for (std::size_t g = 1; g < models.size(); ++g) {
    chain.matches.push_back(
        greedy_match(similarity_matrix(models[g - 1], models[g]), threshold));
  }
  return chain;
}

std::vector<ClusterSet> build_cluster_sets(const AlignmentChain& chain) {
  const int g_count = chain.group_count();

  // next[g-1] maps a cluster of group g to its accepted partner in g+1.
  std::vector<std::vector<Index>> next(chain.matches.size());
  std::vector<std::vector<char>> has_prev(static_cast<std::size_t>(g_count));
  for (int g = 0; g < g_count; ++g) {
    has_prev[static_cast<std::size_t>(g)].assign(
        static_cast<std::size_t>(chain.cluster_counts[static_cast<std::size_t>(g)]), 0);
  }
  for (std::size_t g = 0; g < chain.matches.size(); ++g) {
    next[g].assign(
        static_cast<std::size_t>(chain.cluster_counts[g]), Index{-1});
    for (const auto& m : chain.matches[g]) {
      next[g][static_cast<std::size_t>(m.from)] = m.to;
      has_prev[g + 1][static_cast<std::size_t>(m.to)] = 1;
    }
  }

  std::vector<ClusterSet> sets;
  for (int g = 1; g <= g_count; ++g) {
    const Index k_g = chain.cluster_counts[static_cast<std::size_t>(g - 1)];
    for (Index k = 0; k < k_g; ++k) {
      if (has_prev[static_cast<std::size_t>(g - 1)][static_cast<std::size_t>(k)]) {
        continue;  // continuation of an earlier set
      }
      ClusterSet set;
      set.id = static_cast<int>(sets.size());
      int group = g;
      Index cluster = k;
      for (;;) {
        set.members.emplace_back(group, cluster);
        if (group > static_cast<int>(chain.matches.size())) break;
        const Index to =
            next[static_cast<std::size_t>(group - 1)][static_cast<std::size_t>(cluster)];
        if (to < 0) break;
        cluster = to;
        ++group;
      }
      set.singleton = set.members.size() == 1;
      sets.push_back(std::move(set));
    }
  }
  return sets;
}

}  // namespace stratlca
