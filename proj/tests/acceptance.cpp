// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Covers EM ascent, planted recovery, posterior and matching oracles,
// boundary and counting behaviour, drift replication, golden determinism,
// and the full-shape smoke run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stratlca/alignment.hpp"
#include "stratlca/cohort.hpp"
#include "stratlca/lca.hpp"
#include "stratlca/pipeline.hpp"
#include "stratlca/report.hpp"
#include "stratlca/rng.hpp"
#include "stratlca/synth.hpp"

using namespace stratlca;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

class Check {
 public:
  Check(int number, std::string name)
      : number_(number), name_(std::move(name)),
        start_(std::chrono::steady_clock::now()) {}

  void fail(const std::string& why) {
    ok_ = false;
    if (!why_.empty()) why_ += "; ";
    why_ += why;
  }

  void expect(bool condition, const std::string& why) {
    if (!condition) fail(why);
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

  ~Check() {
    std::printf("[%s] %2d. %s (%.1fs)%s%s\n", ok_ ? "PASS" : "FAIL", number_,
                name_.c_str(), elapsed(), why_.empty() ? "" : " -- ",
                why_.c_str());
    std::fflush(stdout);
    if (!ok_) ++g_failures;
  }

 private:
  int number_;
  std::string name_;
  bool ok_ = true;
  std::string why_;
  std::chrono::steady_clock::time_point start_;
};

Matrix random_binary(Rng& rng, Index n, Index d) {
  Vector p(d);
  for (Index j = 0; j < d; ++j) p[j] = rng.uniform(0.1, 0.9);
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) m(i, j) = rng.bernoulli(p[j]) ? 1.0 : 0.0;
  }
  return m;
}

LcaModel random_mixture(Rng& rng, Index k, Index d, double lo, double hi) {
  LcaModel m;
  Vector pi(k);
  for (Index j = 0; j < k; ++j) pi[j] = rng.uniform(0.2, 1.0);
  m.pi = pi / pi.sum();
  m.theta.resize(d, k);
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < d; ++i) m.theta(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

// Round-by-round rescanning reference for the greedy matcher.
MatchList reference_greedy(const Matrix& s, double tau) {
  std::vector<char> row_used(static_cast<std::size_t>(s.rows()), 0);
  std::vector<char> col_used(static_cast<std::size_t>(s.cols()), 0);
  MatchList out;
  for (;;) {
    double best = -std::numeric_limits<double>::infinity();
    Index bi = -1;
    Index bj = -1;
    for (Index i = 0; i < s.rows(); ++i) {
      if (row_used[static_cast<std::size_t>(i)]) continue;
      for (Index j = 0; j < s.cols(); ++j) {
        if (col_used[static_cast<std::size_t>(j)]) continue;
        if (s(i, j) > best) {
          best = s(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0 || best < tau) break;
    out.push_back(Match{bi, bj, best});
    row_used[static_cast<std::size_t>(bi)] = 1;
    col_used[static_cast<std::size_t>(bj)] = 1;
  }
  return out;
}

Matrix brute_posterior(const LcaModel& model, const Matrix& data) {
  Matrix post(data.rows(), model.components());
  for (Index i = 0; i < data.rows(); ++i) {
    double total = 0.0;
    for (Index k = 0; k < model.components(); ++k) {
      double w = model.pi[k];
      for (Index d = 0; d < data.cols(); ++d) {
        w *= data(i, d) != 0.0 ? model.theta(d, k) : 1.0 - model.theta(d, k);
      }
      post(i, k) = w;
      total += w;
    }
    post.row(i) /= total;
  }
  return post;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing " + path.string() + ">";
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("stratlca_acc_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::map<int, int> span_histogram(const std::vector<ClusterSet>& sets) {
  std::map<int, int> h;
  for (const auto& s : sets) ++h[s.span()];
  return h;
}

void criterion_em_ascent() {
  Check check(1, "EM ascent over randomized instances");
  Rng rng(2024);
  for (int instance = 0; instance < 200; ++instance) {
    const Index n = 10 + static_cast<Index>(rng.below(191));  // <= 200
    const Index d = 1 + static_cast<Index>(rng.below(8));
    const Index k = 1 + static_cast<Index>(rng.below(4));
    const Matrix data = random_binary(rng, n, d);
    Rng init(rng.raw());
    LcaModel model = random_init<double>(k, d, init);
    double prev = log_likelihood(model, data);
    for (int it = 0; it < 30; ++it) {
      const Matrix resp = e_step(model, data);
      const auto updated = m_step(resp, data, 1e-4);
      model.pi = updated.pi;
      model.theta = updated.theta;
      const double ll = log_likelihood(model, data);
      if (ll < prev - 1e-8) {
        std::ostringstream why;
        why << "log-likelihood dropped by " << prev - ll << " on instance "
            << instance;
        check.fail(why.str());
        return;
      }
      prev = ll;
    }
  }
  check.expect(check.elapsed() < 60.0, "took longer than 60s");
}

void criterion_planted_recovery() {
  Check check(2, "planted recovery at G=3, D=10, K=3, N=5000");
  LcaModel truth;
  truth.pi = Vector(3);
  truth.pi << 0.5, 0.3, 0.2;
  truth.theta = Matrix::Constant(10, 3, 0.1);
  truth.theta.col(0).segment(0, 3).setConstant(0.9);
  truth.theta.col(1).segment(3, 3).setConstant(0.9);
  truth.theta.col(2).segment(6, 3).setConstant(0.9);

  PlantedSpec spec;
  spec.models = {truth, truth, truth};
  spec.counts = {5000, 5000, 5000};
  spec.strata = StrataSpec{40, 54, 5};
  spec.seed = 77;
  const auto [cohort, ground_truth] = generate_planted_cohort(spec);
  const auto strata = stratify(filter_eligible(cohort, spec.strata), spec.strata);

  FitConfig config;
  config.K = 3;
  config.restarts = 20;
  config.seed = 11;
  for (const auto& stratum : strata) {
    FitConfig per_stratum = config;
    per_stratum.seed =
        derive_seed(config.seed, static_cast<std::uint64_t>(stratum.group_index));
    const auto fit = fit_best(stratum, per_stratum);
    const auto match = match_to_truth(fit.model, truth);
    std::ostringstream tag;
    tag << "stratum G" << stratum.group_index;
    check.expect(match.max_error <= 0.05,
                 tag.str() + ": theta error " + std::to_string(match.max_error));
    for (Index k = 0; k < 3; ++k) {
      const double pi_err = std::abs(
          fit.model.pi[match.permutation[static_cast<std::size_t>(k)]] - truth.pi[k]);
      check.expect(pi_err <= 0.03, tag.str() + ": pi error " + std::to_string(pi_err));
    }
  }
  check.expect(check.elapsed() < 120.0, "took longer than 120s");
}

void criterion_estep_oracle() {
  Check check(3, "E-step equals the brute-force posterior");
  Rng rng(31);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.below(12));
    const Index d = 1 + static_cast<Index>(rng.below(4));
    const Index k = 1 + static_cast<Index>(rng.below(2));
    const Matrix data = random_binary(rng, n, d);
    const LcaModel model = random_mixture(rng, k, d, 0.02, 0.98);
    const double err =
        (e_step(model, data) - brute_posterior(model, data)).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
  }
  std::ostringstream why;
  why << "max deviation " << worst;
  check.expect(worst <= 1e-10, why.str());
}

void criterion_chebyshev_boundary() {
  Check check(4, "0.3 gap sits exactly on the inclusive 0.7 boundary");
  const double tau = 0.7;
  const double boundary = 1.0 - tau;
  Vector a = Vector::Constant(5, 0.25);
  Vector b = a;
  b[3] = 0.25 + boundary;
  check.expect(similarity(a, b) == tau, "similarity is not exactly 0.7");
  Matrix s(1, 1);
  s(0, 0) = similarity(a, b);
  check.expect(greedy_match(s, tau).size() == 1, "boundary match was rejected");

  b[3] = 0.25 + boundary + 1e-9;
  check.expect(similarity(a, b) < tau, "past-boundary similarity not below 0.7");
  s(0, 0) = similarity(a, b);
  check.expect(greedy_match(s, tau).empty(), "past-boundary match was accepted");
}

void criterion_greedy_reference() {
  Check check(5, "greedy matching equals the reference over 1000 matrices");
  Rng rng(47);
  for (int trial = 0; trial < 1000; ++trial) {
    const Index rows = 1 + static_cast<Index>(rng.below(4));
    const Index cols = 1 + static_cast<Index>(rng.below(4));
    Matrix s(rows, cols);
    const bool discrete = trial % 2 == 0;  // force ties half the time
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) {
        s(i, j) =
            discrete ? 0.4 + 0.1 * static_cast<double>(rng.below(6)) : rng.unit();
      }
    }
    const double tau = 0.1 * static_cast<double>(rng.below(11));
    if (!(greedy_match(s, tau) == reference_greedy(s, tau))) {
      std::ostringstream why;
      why << "mismatch on trial " << trial;
      check.fail(why.str());
      return;
    }
  }
}

void criterion_counting_identity() {
  Check check(6, "set count equals clusters minus matches on every chain");
  Rng rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    const int groups = 1 + static_cast<int>(rng.below(12));
    const Index k = 1 + static_cast<Index>(rng.below(50));
    std::vector<LcaModel> models;
    for (int g = 0; g < groups; ++g) {
      models.push_back(random_mixture(rng, k, 6, 0.05, 0.95));
    }
    const double tau = rng.uniform(0.5, 1.0);
    const auto chain = chain_alignments(models, tau);
    const auto sets = build_cluster_sets(chain);
    if (static_cast<Index>(sets.size()) !=
        chain.total_clusters() - chain.total_matches()) {
      std::ostringstream why;
      why << "violated at G=" << groups << " K=" << k << " tau=" << tau;
      check.fail(why.str());
      return;
    }
  }
  check.expect(12 * 50 - 258 == 342, "published totals fail the identity");
}

void criterion_threshold_monotonicity() {
  Check check(7, "raising the threshold never loses cluster sets");
  Rng rng(59);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<LcaModel> models;
    const int groups = 3 + static_cast<int>(rng.below(4));
    for (int g = 0; g < groups; ++g) {
      models.push_back(random_mixture(rng, 6, 5, 0.25, 0.75));
    }
    std::size_t prev = 0;
    for (const double tau : {0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) {
      const auto sets = build_cluster_sets(chain_alignments(models, tau));
      if (sets.size() < prev) {
        std::ostringstream why;
        why << "count dropped at tau=" << tau << " on trial " << trial;
        check.fail(why.str());
        return;
      }
      prev = sets.size();
    }
  }
}

void criterion_drift_replication() {
  Check check(8, "drift scenario recovers the intended structure in 20 runs");
  // Components: static, drifting 0.1/stratum, drifting 0.4/stratum.
  LcaModel base;
  base.pi = Vector::Constant(3, 1.0 / 3.0);
  base.theta = Matrix::Constant(8, 3, 0.1);
  base.theta.col(0).segment(0, 2).setConstant(0.9);
  base.theta.col(1).segment(2, 2).setConstant(0.9);
  base.theta.col(2).segment(4, 2).setConstant(0.9);
  Matrix drift = Matrix::Zero(8, 3);
  drift.col(1).segment(2, 2).setConstant(-0.1);
  drift.col(2).segment(4, 2).setConstant(-0.4);

  int successes = 0;
  for (int run = 0; run < 20; ++run) {
    auto spec = PlantedSpec::from_base_and_drift(base, drift, 3, {3000, 3000, 3000},
                                                 9000 + run, StrataSpec{40, 54, 5});
    const auto [cohort, truth] = generate_planted_cohort(spec, 0.7);

    // The intended structure is read back from the sidecar document.
    std::stringstream sidecar;
    write_ground_truth_json(sidecar, truth);
    const auto reloaded = read_ground_truth_json(sidecar, "sidecar");

    const auto strata = stratify(filter_eligible(cohort, spec.strata), spec.strata);
    std::vector<LcaModel> fitted;
    for (const auto& stratum : strata) {
      FitConfig config;
      config.K = 3;
      config.restarts = 6;
      config.seed = derive_seed(static_cast<std::uint64_t>(run),
                                static_cast<std::uint64_t>(stratum.group_index));
      fitted.push_back(fit_best(stratum, config).model);
    }
    const auto sets = build_cluster_sets(chain_alignments(fitted, 0.7));
    if (span_histogram(sets) == span_histogram(reloaded.intended_sets)) {
      ++successes;
    }
  }
  std::ostringstream why;
  why << successes << "/20 runs matched";
  check.expect(successes >= 19, why.str());
  check.expect(check.elapsed() < 300.0, "took longer than 300s");
}

void criterion_golden_files(const fs::path& data_dir, const std::string& cli) {
  Check check(9, "fixed-seed run reproduces the checked-in golden outputs");
  const fs::path golden = data_dir / "golden";
  const fs::path out = fresh_dir("golden");
  const std::string command = "\"" + cli + "\" run --input " +
                              (golden / "cohort.csv").string() + " --out " +
                              out.string() +
                              " --age-min 40 --age-max 54 --k 3 --restarts 5"
                              " --seed 42 >/dev/null 2>/dev/null";
  if (std::system(command.c_str()) != 0) {
    check.fail("pipeline run failed");
    return;
  }
  for (const char* name :
       {"models/model_g01.json", "models/model_g02.json", "models/model_g03.json",
        "chain.json", "cluster_sets.csv", "network.dot"}) {
    if (slurp(out / name) != slurp(golden / "expected" / name)) {
      check.fail(std::string("byte mismatch in ") + name);
    }
  }
}

void criterion_paper_shape(const fs::path& scratch) {
  Check check(10, "paper-shape smoke: G=12, K=50, D=40, N=2000 per stratum");
  Rng mrng(5);
  const Index d = 40;
  const Index planted_k = 8;
  LcaModel truth;
  truth.pi = Vector::Constant(planted_k, 1.0 / static_cast<double>(planted_k));
  truth.theta.resize(d, planted_k);
  for (Index j = 0; j < planted_k; ++j) {
    for (Index i = 0; i < d; ++i) {
      truth.theta(i, j) = mrng.bernoulli(0.15) ? mrng.uniform(0.6, 0.95)
                                               : mrng.uniform(0.01, 0.2);
    }
  }
  PlantedSpec spec;
  spec.models.assign(12, truth);
  spec.counts.assign(12, 2000);
  spec.strata = StrataSpec{};
  spec.seed = 3;
  const auto [cohort, truth_doc] = generate_planted_cohort(spec);

  const fs::path input = scratch / "paper_shape.csv";
  {
    std::ofstream csv(input);
    write_cohort_csv(csv, cohort);
  }

  RunConfig config;
  config.input = input;
  config.out_dir = scratch / "paper_shape_out";
  config.fit.K = 50;
  config.fit.restarts = 5;
  config.fit.seed = 1;
  const auto result = run_pipeline(config);

  check.expect(result.fit.records.size() == 12, "expected 12 fitted strata");
  const auto files = discover_model_files(config.out_dir);
  check.expect(files.size() == 12, "expected 12 model files");
  for (const auto& file : files) {
    const auto record = read_model_json_file(file);
    if (record.fit.model.theta.rows() != 40 || record.fit.model.theta.cols() != 50) {
      check.fail("theta shape wrong in " + file.filename().string());
    }
  }
  for (const char* name :
       {"chain.json", "cluster_sets.json", "cluster_sets.csv", "summary.json",
        "network.dot", "prevalence.csv", "manifest.json"}) {
    check.expect(fs::exists(config.out_dir / name),
                 std::string("missing ") + name);
  }
  check.expect(check.elapsed() < 900.0, "took longer than 15 minutes");
}

void criterion_band_classification() {
  Check check(11, "prevalence bands split at 0.3/0.7 as published");
  Vector column(5);
  column << 0.9, 0.5, 0.1, 0.7, 0.3;
  const auto profile = classify_bands(column);
  check.expect(profile.high == std::vector<Index>{0}, "0.9 must be high");
  check.expect(profile.moderate == std::vector<Index>{1, 3, 4},
               "0.5, 0.7, 0.3 must be moderate");
  check.expect(profile.low == std::vector<Index>{2}, "0.1 must be low");

  Rng rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    Vector random_column(9);
    for (Index i = 0; i < 9; ++i) random_column[i] = rng.unit();
    const auto p = classify_bands(random_column);
    if (p.high.size() + p.moderate.size() + p.low.size() != 9) {
      check.fail("bands do not partition the catalog");
      return;
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : STRATLCA_CLI_PATH;
  const fs::path data_dir = argc > 2 ? argv[2] : STRATLCA_TEST_DATA_DIR;
  const fs::path scratch = fresh_dir("scratch");

  criterion_em_ascent();
  criterion_planted_recovery();
  criterion_estep_oracle();
  criterion_chebyshev_boundary();
  criterion_greedy_reference();
  criterion_counting_identity();
  criterion_threshold_monotonicity();
  criterion_drift_replication();
  criterion_golden_files(data_dir, cli);
  criterion_paper_shape(scratch);
  criterion_band_classification();

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
