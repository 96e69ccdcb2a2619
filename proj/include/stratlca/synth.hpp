#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "stratlca/alignment.hpp"
#include "stratlca/cohort.hpp"
#include "stratlca/lca.hpp"
#include "stratlca/types.hpp"

namespace stratlca {

/// Planted Bernoulli mixtures, one per stratum, used to generate synthetic
/// cohorts with known structure.
struct PlantedSpec {
  std::vector<Index> counts;     // records per stratum; size G
  std::vector<LcaModel> models;  // true model per stratum; size G
  StrataSpec strata{};           // ages are placed in the first G bands
  std::vector<std::string> condition_names;  // optional; defaults to c01..cD
  std::uint64_t seed = 0;

  int group_count() const { return static_cast<int>(models.size()); }
  Index dimension() const { return models.empty() ? 0 : models.front().dimension(); }
  /// Simplex-valid pi, theta strictly inside (0, 1), consistent shapes.
  void validate() const;

  /// Per-stratum models from a base model plus a linear per-step theta shift,
  /// clipped into [clip_floor, 1 - clip_floor].
  static PlantedSpec from_base_and_drift(const LcaModel& base, const Matrix& drift,
                                         int groups, std::vector<Index> counts,
                                         std::uint64_t seed,
                                         const StrataSpec& strata = {},
                                         double clip_floor = 1e-4);
};

struct GroundTruth {
  std::vector<LcaModel> models;        // planted, per stratum
  std::vector<int> labels;             // generating component per record
  double threshold = 0.7;              // tau the intended structure was built with
  AlignmentChain intended_chain;       // alignment of the planted models
  std::vector<ClusterSet> intended_sets;
};

/// Draws each record's component from pi*, then conditions from theta*, and
/// places its age uniformly within the stratum band. Deterministic given the
/// spec's seed; strata use independent derived seeds.
std::pair<Cohort, GroundTruth> generate_planted_cohort(const PlantedSpec& spec,
                                                       double threshold = 0.7);

struct TruthMatch {
  std::vector<Index> permutation;  // truth component k -> fitted column perm[k]
  double max_error = 0;            // max over components of Chebyshev distance
};

/// Component permutation minimizing the worst per-component Chebyshev error
/// between fitted and planted theta columns. Exhaustive up to K = 8, greedy
/// closest-pair assignment above.
TruthMatch match_to_truth(const LcaModel& fitted, const LcaModel& truth);

PlantedSpec load_planted_spec(std::istream& in, const std::string& source_name);
PlantedSpec load_planted_spec_file(const std::filesystem::path& path);

void write_ground_truth_json(std::ostream& out, const GroundTruth& truth);
GroundTruth read_ground_truth_json(std::istream& in, const std::string& source_name);

}  // namespace stratlca
