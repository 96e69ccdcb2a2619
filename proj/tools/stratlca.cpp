// Command-line front end: fit, align, report, simulate, and run subcommands
// over the age-stratified clustering pipeline.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "stratlca/cohort.hpp"
#include "stratlca/model_io.hpp"
#include "stratlca/pipeline.hpp"
#include "stratlca/synth.hpp"
#include "stratlca/types.hpp"

namespace {

namespace fs = std::filesystem;
using namespace stratlca;

constexpr int kExitOk = 0;
constexpr int kExitCompute = 1;
constexpr int kExitUsage = 2;

struct CliOptions {
  RunConfig config;
  std::vector<std::string> model_files;
};

void add_common_flags(CLI::App* cmd, CliOptions& opt, bool with_fit_flags) {
  cmd->add_option("--out", opt.config.out_dir, "Output directory")->required();
  if (with_fit_flags) {
    cmd->add_option("--k", opt.config.fit.K, "Clusters per stratum");
    cmd->add_option("--restarts", opt.config.fit.restarts, "Independent EM restarts");
    cmd->add_option("--tol", opt.config.fit.tolerance,
                    "Relative log-likelihood stopping tolerance");
    cmd->add_option("--max-iter", opt.config.fit.max_iterations,
                    "Maximum EM iterations per restart");
    cmd->add_option("--smoothing", opt.config.fit.smoothing_floor,
                    "Probability clamp for theta");
    cmd->add_option("--seed", opt.config.fit.seed, "Base random seed");
    cmd->add_option("--age-min", opt.config.strata.age_min, "Youngest eligible age");
    cmd->add_option("--age-max", opt.config.strata.age_max, "Oldest eligible age");
    cmd->add_option("--strata-width", opt.config.strata.width, "Stratum width in years");
  }
}

std::vector<StratumModelRecord> records_for(const CliOptions& opt) {
  std::vector<fs::path> paths;
  if (!opt.model_files.empty()) {
    paths.assign(opt.model_files.begin(), opt.model_files.end());
  } else {
    paths = discover_model_files(opt.config.out_dir);
  }
  if (paths.empty()) {
    throw ValidationError("no model files given and none found under " +
                          (opt.config.out_dir / "models").string());
  }
  return load_model_records(paths);
}

void print_set_counts(const std::vector<ClusterSet>& sets) {
  Index singleton = 0;
  for (const auto& s : sets) singleton += s.singleton ? 1 : 0;
  std::cout << "cluster sets: " << sets.size() << " (" << singleton << " singleton, "
            << static_cast<Index>(sets.size()) - singleton << " non-singleton)\n";
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Age-stratified latent class clustering with cluster-set alignment"};
  app.require_subcommand(1);
  CliOptions opt;

  auto* fit = app.add_subcommand("fit", "Fit one mixture model per age stratum");
  fit->add_option("--input", opt.config.input, "Cohort CSV")->required();
  add_common_flags(fit, opt, true);
  fit->add_flag("--whole-population", opt.config.whole_population,
                "Also fit a single unstratified model (group 0)");

  auto* align = app.add_subcommand("align", "Align fitted models across strata");
  add_common_flags(align, opt, false);
  align->add_option("--threshold", opt.config.threshold,
                    "Minimum similarity for an accepted match");
  align->add_option("models", opt.model_files,
                    "Model JSON files (default: <out>/models/model_g*.json)");

  auto* report = app.add_subcommand("report", "Tabulate and export cluster sets");
  report->add_option("--input", opt.config.input, "Cohort CSV")->required();
  add_common_flags(report, opt, false);
  report->add_option("--threshold", opt.config.threshold,
                     "Threshold used when the chain must be rebuilt");
  report->add_option("--band-lo", opt.config.bands.lo, "Moderate band lower bound");
  report->add_option("--band-hi", opt.config.bands.hi, "Moderate band upper bound");
  report->add_flag("--graphml", opt.config.graphml, "Also emit network.graphml");
  report->add_option("models", opt.model_files,
                     "Model JSON files (default: <out>/models/model_g*.json)");

  auto* simulate = app.add_subcommand("simulate", "Generate a planted synthetic cohort");
  simulate->add_option("--input", opt.config.input, "Planted spec JSON")->required();
  simulate->add_option("--out", opt.config.out_dir, "Output directory")->required();
  simulate->add_option("--threshold", opt.config.threshold,
                       "Similarity threshold for the intended structure");

  auto* run = app.add_subcommand("run", "Full pipeline: fit, align, report");
  run->add_option("--input", opt.config.input, "Cohort CSV")->required();
  add_common_flags(run, opt, true);
  run->add_option("--threshold", opt.config.threshold,
                  "Minimum similarity for an accepted match");
  run->add_option("--band-lo", opt.config.bands.lo, "Moderate band lower bound");
  run->add_option("--band-hi", opt.config.bands.hi, "Moderate band upper bound");
  run->add_flag("--whole-population", opt.config.whole_population,
                "Also fit a single unstratified model (group 0)");
  run->add_flag("--graphml", opt.config.graphml, "Also emit network.graphml");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (fit->parsed()) {
      const auto result = fit_stage(opt.config);
      write_fit_outputs(opt.config, result);
      std::cout << "wrote " << result.records.size() << " model files to "
                << (opt.config.out_dir / "models").string() << "\n";
    } else if (align->parsed()) {
      const auto records = records_for(opt);
      const auto aligned = align_stage(records, opt.config.threshold);
      write_align_outputs(opt.config, aligned);
      print_set_counts(aligned.sets);
    } else if (report->parsed()) {
      const auto records = records_for(opt);
      const auto chain_path = opt.config.out_dir / "chain.json";
      AlignStageResult aligned;
      if (fs::exists(chain_path)) {
        const auto doc = read_chain_json_file(chain_path);
        aligned.chain = chain_from_doc(doc, stratum_models(records));
        aligned.sets = build_cluster_sets(aligned.chain);
      } else {
        aligned = align_stage(records, opt.config.threshold);
      }
      report_stage(opt.config, records, aligned);
      print_set_counts(aligned.sets);
    } else if (simulate->parsed()) {
      const auto spec = load_planted_spec_file(opt.config.input);
      auto [cohort, truth] = generate_planted_cohort(spec, opt.config.threshold);
      fs::create_directories(opt.config.out_dir);
      std::ofstream csv(opt.config.out_dir / "cohort.csv");
      if (!csv) throw ParseError("cannot write cohort.csv");
      write_cohort_csv(csv, cohort);
      std::ofstream truth_out(opt.config.out_dir / "truth.json");
      if (!truth_out) throw ParseError("cannot write truth.json");
      write_ground_truth_json(truth_out, truth);
      std::cout << "wrote " << cohort.size() << " records to "
                << (opt.config.out_dir / "cohort.csv").string() << "\n";
    } else if (run->parsed()) {
      const auto result = run_pipeline(opt.config);
      print_set_counts(result.aligned.sets);
    }
  } catch (const ComputeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCompute;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }
