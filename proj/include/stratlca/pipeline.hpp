#pragma once

#include <filesystem>
#include <vector>

#include "stratlca/alignment.hpp"
#include "stratlca/cohort.hpp"
#include "stratlca/lca.hpp"
#include "stratlca/model_io.hpp"
#include "stratlca/report.hpp"
#include "stratlca/types.hpp"

namespace stratlca {

/// Everything a full run needs; defaults reproduce the reference protocol
/// (K = 50, 50 restarts, threshold 0.7, 5-year strata over ages 40-99,
/// prevalence bands 0.3/0.7).
struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  StrataSpec strata{};
  FitConfig fit{};
  double threshold = 0.7;
  BandThresholds bands{};
  bool whole_population = false;
  bool graphml = false;
  int threads = 0;  // 0 -> STRATA_LCA_THREADS / hardware
};

struct FitStageResult {
  std::vector<StratumModelRecord> records;  // groups 1..G, then 0 if requested
  FilterCounts counts;
};

/// Loads and filters the input, fits every stratum (plus the optional
/// whole-population model as group 0). Stratum g uses the fit seed
/// derive_seed(config.fit.seed, g). Pure compute; writes nothing.
FitStageResult fit_stage(const RunConfig& config);

/// models/model_g{NN}.json per record plus manifest.json under out_dir.
void write_fit_outputs(const RunConfig& config, const FitStageResult& fit);

struct AlignStageResult {
  AlignmentChain chain;
  std::vector<ClusterSet> sets;
};

/// Aligns the age-stratum records (group 0 is skipped) in group order.
/// Throws ValidationError naming the offending files on a D mismatch.
AlignStageResult align_stage(const std::vector<StratumModelRecord>& records,
                             double threshold);

/// chain.json and cluster_sets.json under out_dir.
void write_align_outputs(const RunConfig& config, const AlignStageResult& aligned);

/// Recomputes hard assignments from the input cohort, then writes
/// cluster_sets.csv, summary.json, network.dot (and network.graphml when
/// enabled) plus prevalence.csv under out_dir.
void report_stage(const RunConfig& config,
                  const std::vector<StratumModelRecord>& records,
                  const AlignStageResult& aligned);

struct PipelineResult {
  FitStageResult fit;
  AlignStageResult aligned;
  Summary summary;
};

/// fit -> align -> report, writing every artifact under config.out_dir.
PipelineResult run_pipeline(const RunConfig& config);

/// models/model_g*.json under out_dir, sorted by file name.
std::vector<std::filesystem::path> discover_model_files(
    const std::filesystem::path& out_dir);

std::vector<StratumModelRecord> load_model_records(
    const std::vector<std::filesystem::path>& paths);

/// Age-stratum models ordered by group, excluding the whole-population fit.
std::vector<LcaModel> stratum_models(const std::vector<StratumModelRecord>& records);

/// Reconstructs the strata spec from persisted records' age ranges, so report
/// runs agree with the fit that produced the models.
StrataSpec infer_strata(const std::vector<StratumModelRecord>& records);

}  // namespace stratlca
