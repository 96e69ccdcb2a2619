#include "stratlca/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json_util.hpp"

namespace stratlca {

namespace {

std::string model_file_name(int group) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "model_g%02d.json", group);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  return out;
}

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

FitStageResult fit_stage(const RunConfig& config) {
  config.strata.validate();
  config.fit.validate();

  const Cohort raw = load_cohort_file(config.input);
  FitStageResult result;
  const Cohort eligible = filter_eligible(raw, config.strata, &result.counts);
  std::cerr << "eligible: kept " << result.counts.kept << ", dropped "
            << result.counts.dropped_age << " by age, "
            << result.counts.dropped_no_condition << " with no condition\n";

  const auto strata = stratify(eligible, config.strata);
  for (const auto& stratum : strata) {
    if (stratum.size() == 0) {
      std::ostringstream msg;
      msg << "stratum G" << stratum.group_index << " (" << stratum.age_lo << "-"
          << stratum.age_hi << ") is empty; narrow --age-min/--age-max to the data";
      throw ValidationError(msg.str());
    }
    if (stratum.size() < config.fit.K) {
      std::cerr << "warning: stratum G" << stratum.group_index << " has "
                << stratum.size() << " records for K = " << config.fit.K << "\n";
    }
  }

  for (const auto& stratum : strata) {
    const auto start = std::chrono::steady_clock::now();
    FitConfig per_stratum = config.fit;
    per_stratum.seed =
        derive_seed(config.fit.seed, static_cast<std::uint64_t>(stratum.group_index));
    StratumModelRecord record;
    record.group = stratum.group_index;
    record.age_lo = stratum.age_lo;
    record.age_hi = stratum.age_hi;
    record.fit = fit_best(stratum, per_stratum, config.threads);
    std::cerr << "fit G" << record.group << ": ll=" << record.fit.log_likelihood
              << " bic=" << record.fit.bic << " (" << seconds_since(start) << "s)\n";
    result.records.push_back(std::move(record));
  }

  if (config.whole_population) {
    const auto start = std::chrono::steady_clock::now();
    FitConfig whole = config.fit;
    whole.seed = derive_seed(config.fit.seed, 0);
    StratumModelRecord record;
    record.group = 0;
    record.age_lo = config.strata.age_min;
    record.age_hi = config.strata.age_max;
    record.fit = fit_best(eligible.conditions(), whole, config.threads);
    std::cerr << "fit whole population: ll=" << record.fit.log_likelihood << " ("
              << seconds_since(start) << "s)\n";
    result.records.push_back(std::move(record));
  }
  return result;
}

void write_fit_outputs(const RunConfig& config, const FitStageResult& fit) {
  const auto model_dir = config.out_dir / "models";
  std::filesystem::create_directories(model_dir);
  for (const auto& record : fit.records) {
    write_model_json_file(model_dir / model_file_name(record.group), record);
  }

  auto manifest = open_out(config.out_dir / "manifest.json");
  manifest << "{\n  \"config\": {\n";
  manifest << "    \"input\": \"" << config.input.generic_string() << "\",\n";
  manifest << "    \"k\": " << config.fit.K << ",\n";
  manifest << "    \"restarts\": " << config.fit.restarts << ",\n";
  manifest << "    \"max_iterations\": " << config.fit.max_iterations << ",\n";
  manifest << "    \"tolerance\": " << to_sig12(config.fit.tolerance) << ",\n";
  manifest << "    \"smoothing_floor\": " << to_sig12(config.fit.smoothing_floor)
           << ",\n";
  manifest << "    \"seed\": " << config.fit.seed << ",\n";
  manifest << "    \"age_min\": " << config.strata.age_min << ",\n";
  manifest << "    \"age_max\": " << config.strata.age_max << ",\n";
  manifest << "    \"strata_width\": " << config.strata.width << ",\n";
  manifest << "    \"threshold\": " << to_sig12(config.threshold) << ",\n";
  manifest << "    \"band_lo\": " << to_sig12(config.bands.lo) << ",\n";
  manifest << "    \"band_hi\": " << to_sig12(config.bands.hi) << ",\n";
  manifest << "    \"whole_population\": "
           << (config.whole_population ? "true" : "false") << "\n  },\n";
  manifest << "  \"eligible\": {\"kept\": " << fit.counts.kept
           << ", \"dropped_age\": " << fit.counts.dropped_age
           << ", \"dropped_no_condition\": " << fit.counts.dropped_no_condition
           << "},\n";
  manifest << "  \"strata\": [";
  bool first = true;
  for (const auto& record : fit.records) {
    if (!first) manifest << ",";
    first = false;
    manifest << "\n    {\"group\": " << record.group << ", \"age_range\": ["
             << record.age_lo << ", " << record.age_hi
             << "], \"model_file\": \"models/" << model_file_name(record.group)
             << "\", \"iterations\": " << record.fit.iterations
             << ", \"converged\": " << (record.fit.converged ? "true" : "false")
             << "}";
  }
  manifest << "\n  ]\n}\n";
}

AlignStageResult align_stage(const std::vector<StratumModelRecord>& records,
                             double threshold) {
  std::vector<const StratumModelRecord*> strata;
  for (const auto& r : records) {
    if (r.group > 0) strata.push_back(&r);
  }
  if (strata.empty()) throw ValidationError("no age-stratum models to align");
  std::sort(strata.begin(), strata.end(),
            [](const auto* a, const auto* b) { return a->group < b->group; });

  const Index d = strata.front()->fit.model.dimension();
  for (const auto* r : strata) {
    if (r->fit.model.dimension() != d) {
      std::ostringstream msg;
      msg << "model dimension mismatch: " << strata.front()->source << " has D = " << d
          << " but " << r->source << " has D = " << r->fit.model.dimension();
      throw ValidationError(msg.str());
    }
  }

  std::vector<LcaModel> models;
  models.reserve(strata.size());
  for (const auto* r : strata) models.push_back(r->fit.model);

  AlignStageResult result;
  result.chain = chain_alignments(models, threshold);
  result.sets = build_cluster_sets(result.chain);
  return result;
}

void write_align_outputs(const RunConfig& config, const AlignStageResult& aligned) {
  std::filesystem::create_directories(config.out_dir);
  auto chain_out = open_out(config.out_dir / "chain.json");
  write_chain_json(chain_out, aligned.chain);
  auto sets_out = open_out(config.out_dir / "cluster_sets.json");
  write_cluster_sets_json(sets_out, aligned.sets);
}

void report_stage(const RunConfig& config,
                  const std::vector<StratumModelRecord>& records,
                  const AlignStageResult& aligned) {
  const StrataSpec spec = infer_strata(records);
  const Cohort raw = load_cohort_file(config.input);
  const Cohort eligible = filter_eligible(raw, spec);
  const auto strata = stratify(eligible, spec);

  const auto models = stratum_models(records);
  if (models.size() > strata.size()) {
    throw ValidationError("model files cover more groups than the strata spec");
  }

  std::vector<Vector> fractions;
  fractions.reserve(models.size());
  for (std::size_t g = 0; g < models.size(); ++g) {
    fractions.push_back(hard_assign(models[g], strata[g]).fractions);
  }

  const auto reports = build_cluster_set_reports(aligned.sets, models, fractions,
                                                 eligible.catalog(), config.bands);

  std::filesystem::create_directories(config.out_dir);
  auto csv = open_out(config.out_dir / "cluster_sets.csv");
  write_cluster_set_csv(csv, reports, static_cast<int>(models.size()));

  auto summary_out = open_out(config.out_dir / "summary.json");
  write_summary_json(summary_out, summarize(aligned.sets, static_cast<int>(models.size())));

  auto dot = open_out(config.out_dir / "network.dot");
  write_dot(dot, aligned.chain);
  if (config.graphml) {
    auto graphml = open_out(config.out_dir / "network.graphml");
    write_graphml(graphml, aligned.chain);
  }

  // Prevalence covers the strata the spec defines, not just fitted groups.
  auto prevalence = open_out(config.out_dir / "prevalence.csv");
  write_prevalence_csv(prevalence, eligible.catalog(), strata, eligible);
}

PipelineResult run_pipeline(const RunConfig& config) {
  PipelineResult result;
  result.fit = fit_stage(config);
  write_fit_outputs(config, result.fit);
  // Later stages consume the persisted models (rounded to 12 significant
  // digits), so a composed run is byte-identical to fit/align/report run
  // separately.
  const auto records = load_model_records(discover_model_files(config.out_dir));
  result.aligned = align_stage(records, config.threshold);
  write_align_outputs(config, result.aligned);
  report_stage(config, records, result.aligned);
  result.summary =
      summarize(result.aligned.sets, result.aligned.chain.group_count());
  return result;
}

std::vector<std::filesystem::path> discover_model_files(
    const std::filesystem::path& out_dir) {
  const auto model_dir = out_dir / "models";
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(model_dir)) return files;
  for (const auto& entry : std::filesystem::directory_iterator(model_dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("model_g") &&
        name.ends_with(".json")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<StratumModelRecord> load_model_records(
    const std::vector<std::filesystem::path>& paths) {
  std::vector<StratumModelRecord> records;
  records.reserve(paths.size());
  for (const auto& path : paths) {
    records.push_back(read_model_json_file(path));
  }
  return records;
}

StrataSpec infer_strata(const std::vector<StratumModelRecord>& records) {
  std::vector<const StratumModelRecord*> strata;
  for (const auto& r : records) {
    if (r.group > 0) strata.push_back(&r);
  }
  if (strata.empty()) throw ValidationError("no age-stratum models given");
  std::sort(strata.begin(), strata.end(),
            [](const auto* a, const auto* b) { return a->group < b->group; });
  StrataSpec spec;
  spec.age_min = strata.front()->age_lo;
  spec.age_max = strata.back()->age_hi;
  spec.width = strata.front()->age_hi - strata.front()->age_lo + 1;
  spec.validate();
  for (const auto* r : strata) {
    const auto [lo, hi] = spec.age_range(r->group);
    if (r->age_lo != lo || r->age_hi != hi) {
      throw ValidationError("model file " + r->source +
                            " does not fit a uniform strata grid");
    }
  }
  return spec;
}

std::vector<LcaModel> stratum_models(const std::vector<StratumModelRecord>& records) {
  std::vector<const StratumModelRecord*> strata;
  for (const auto& r : records) {
    if (r.group > 0) strata.push_back(&r);
  }
  std::sort(strata.begin(), strata.end(),
            [](const auto* a, const auto* b) { return a->group < b->group; });
  for (std::size_t g = 0; g < strata.size(); ++g) {
    if (strata[g]->group != static_cast<int>(g) + 1) {
      throw ValidationError("model files do not form consecutive groups 1..G");
    }
  }
  std::vector<LcaModel> models;
  models.reserve(strata.size());
  for (const auto* r : strata) models.push_back(r->fit.model);
  return models;
}

}  // namespace stratlca
