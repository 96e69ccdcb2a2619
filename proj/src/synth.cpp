#include "stratlca/synth.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json_util.hpp"
#include "stratlca/rng.hpp"

namespace stratlca {

void PlantedSpec::validate() const {
  if (models.empty()) throw ConfigError("planted spec needs at least one stratum");
  if (counts.size() != models.size()) {
    throw ConfigError("planted spec counts and models disagree on G");
  }
  strata.validate();
  if (group_count() > strata.group_count()) {
    throw ConfigError("planted spec has more strata than the age range allows");
  }
  const Index d = models.front().dimension();
  for (std::size_t g = 0; g < models.size(); ++g) {
    const auto& m = models[g];
    if (m.dimension() != d) throw ConfigError("planted models disagree on D");
    if (m.pi.size() != m.theta.cols()) {
      throw ConfigError("planted pi length does not match theta columns");
    }
    if (m.pi.minCoeff() < 0.0 || std::abs(m.pi.sum() - 1.0) > 1e-9) {
      std::ostringstream msg;
      msg << "planted pi for stratum " << g + 1 << " is not a probability simplex";
      throw ConfigError(msg.str());
    }
    if (m.theta.minCoeff() <= 0.0 || m.theta.maxCoeff() >= 1.0) {
      std::ostringstream msg;
      msg << "planted theta for stratum " << g + 1 << " must lie strictly in (0, 1)";
      throw ConfigError(msg.str());
    }
    if (counts[g] < 0) throw ConfigError("negative stratum count");
  }
  if (!condition_names.empty() &&
      static_cast<Index>(condition_names.size()) != d) {
    throw ConfigError("condition name count does not match D");
  }
}

PlantedSpec PlantedSpec::from_base_and_drift(const LcaModel& base, const Matrix& drift,
                                             int groups, std::vector<Index> counts,
                                             std::uint64_t seed,
                                             const StrataSpec& strata,
                                             double clip_floor) {
  if (drift.rows() != base.theta.rows() || drift.cols() != base.theta.cols()) {
    throw ConfigError("drift shape does not match the base theta");
  }
  PlantedSpec spec;
  spec.counts = std::move(counts);
  spec.strata = strata;
  spec.seed = seed;
  spec.models.reserve(static_cast<std::size_t>(groups));
  for (int g = 0; g < groups; ++g) {
    LcaModel m;
    m.pi = base.pi;
    m.theta = (base.theta + static_cast<double>(g) * drift)
                  .cwiseMax(clip_floor)
                  .cwiseMin(1.0 - clip_floor);
    spec.models.push_back(std::move(m));
  }
  return spec;
}

namespace {

ConditionCatalog catalog_for(const PlantedSpec& spec) {
  ConditionCatalog catalog;
  if (!spec.condition_names.empty()) {
    catalog.names = spec.condition_names;
  } else {
    for (Index d = 1; d <= spec.dimension(); ++d) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "c%02lld", static_cast<long long>(d));
      catalog.names.emplace_back(buf);
    }
  }
  return catalog;
}

Index draw_component(const Vector& pi, Rng& rng) {
  const double u = rng.unit();
  double cum = 0.0;
  for (Index k = 0; k < pi.size(); ++k) {
    cum += pi[k];
    if (u < cum) return k;
  }
  return pi.size() - 1;
}

}  // namespace

std::pair<Cohort, GroundTruth> generate_planted_cohort(const PlantedSpec& spec,
                                                       double threshold) {
  spec.validate();
  const Index d = spec.dimension();
  const int g_count = spec.group_count();
  const Index total = std::accumulate(spec.counts.begin(), spec.counts.end(), Index{0});

  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(total));
  IntVector ages(total);
  Matrix conditions(total, d);
  GroundTruth truth;
  truth.labels.reserve(static_cast<std::size_t>(total));
  truth.models = spec.models;
  truth.threshold = threshold;

  Index row = 0;
  for (int g = 1; g <= g_count; ++g) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(g)));
    const auto& model = spec.models[static_cast<std::size_t>(g - 1)];
    const auto [age_lo, age_hi] = spec.strata.age_range(g);
    const Index n_g = spec.counts[static_cast<std::size_t>(g - 1)];
    for (Index i = 0; i < n_g; ++i, ++row) {
      std::ostringstream id;
      id << 'g' << g << '_' << i;
      ids.push_back(id.str());
      ages[row] = rng.uniform_int(age_lo, age_hi);
      const Index k = draw_component(model.pi, rng);
      truth.labels.push_back(static_cast<int>(k));
      for (Index j = 0; j < d; ++j) {
        conditions(row, j) = rng.bernoulli(model.theta(j, k)) ? 1.0 : 0.0;
      }
    }
  }

  truth.intended_chain = chain_alignments(truth.models, threshold);
  truth.intended_sets = build_cluster_sets(truth.intended_chain);

  Cohort cohort(std::make_shared<ConditionCatalog>(catalog_for(spec)), std::move(ids),
                std::move(ages), std::move(conditions));
  return {std::move(cohort), std::move(truth)};
}

TruthMatch match_to_truth(const LcaModel& fitted, const LcaModel& truth) {
  if (fitted.dimension() != truth.dimension()) {
    throw ValidationError("fitted and planted models disagree on D");
  }
  if (fitted.components() != truth.components()) {
    throw ValidationError("fitted and planted models disagree on K");
  }
  const Index k = truth.components();
  Matrix dist(k, k);  // dist(t, f): truth column t vs fitted column f
  for (Index t = 0; t < k; ++t) {
    for (Index f = 0; f < k; ++f) {
      dist(t, f) = chebyshev_distance(truth.theta.col(t), fitted.theta.col(f));
    }
  }

  TruthMatch best;
  if (k <= 8) {
    std::vector<Index> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), Index{0});
    best.max_error = std::numeric_limits<double>::infinity();
    do {
      double worst = 0.0;
      for (Index t = 0; t < k; ++t) {
        worst = std::max(worst, dist(t, perm[static_cast<std::size_t>(t)]));
      }
      if (worst < best.max_error) {
        best.max_error = worst;
        best.permutation = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }

  // Greedy closest-pair assignment for large K.
  best.permutation.assign(static_cast<std::size_t>(k), Index{-1});
  std::vector<char> truth_done(static_cast<std::size_t>(k), 0);
  std::vector<char> fitted_done(static_cast<std::size_t>(k), 0);
  best.max_error = 0.0;
  for (Index round = 0; round < k; ++round) {
    Index bt = -1;
    Index bf = -1;
    double lo = std::numeric_limits<double>::infinity();
    for (Index t = 0; t < k; ++t) {
      if (truth_done[static_cast<std::size_t>(t)]) continue;
      for (Index f = 0; f < k; ++f) {
        if (fitted_done[static_cast<std::size_t>(f)]) continue;
        if (dist(t, f) < lo) {
          lo = dist(t, f);
          bt = t;
          bf = f;
        }
      }
    }
    best.permutation[static_cast<std::size_t>(bt)] = bf;
    truth_done[static_cast<std::size_t>(bt)] = 1;
    fitted_done[static_cast<std::size_t>(bf)] = 1;
    best.max_error = std::max(best.max_error, lo);
  }
  return best;
}

PlantedSpec load_planted_spec(std::istream& in, const std::string& source_name) {
  const auto j = jsonutil::parse_document(in, source_name);
  PlantedSpec spec;
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.strata.age_min = j.value("age_min", 40);
  spec.strata.age_max = j.value("age_max", 99);
  spec.strata.width = j.value("width", 5);

  if (j.contains("conditions")) {
    spec.condition_names = j.at("conditions").get<std::vector<std::string>>();
  }

  if (j.contains("models")) {
    for (const auto& entry : j.at("models")) {
      LcaModel m;
      m.pi = jsonutil::parse_vector(entry.at("pi"), source_name, "pi");
      m.theta = jsonutil::parse_matrix_rows(entry.at("theta"), source_name, "theta");
      spec.models.push_back(std::move(m));
    }
  } else {
    LcaModel base;
    if (!j.contains("pi") || !j.contains("theta")) {
      jsonutil::fail(source_name, "need either \"models\" or \"pi\"+\"theta\"");
    }
    base.pi = jsonutil::parse_vector(j.at("pi"), source_name, "pi");
    base.theta = jsonutil::parse_matrix_rows(j.at("theta"), source_name, "theta");
    const int groups = jsonutil::require<int>(j, source_name, "G");
    Matrix drift = Matrix::Zero(base.theta.rows(), base.theta.cols());
    if (j.contains("drift")) {
      drift = jsonutil::parse_matrix_rows(j.at("drift"), source_name, "drift");
    }
    const double clip = j.value("clip_floor", 1e-4);
    auto derived = PlantedSpec::from_base_and_drift(base, drift, groups, {}, spec.seed,
                                                    spec.strata, clip);
    spec.models = std::move(derived.models);
  }

  const auto g_count = spec.models.size();
  if (j.contains("counts")) {
    spec.counts = j.at("counts").get<std::vector<Index>>();
  } else if (j.contains("count")) {
    spec.counts.assign(g_count, j.at("count").get<Index>());
  } else {
    jsonutil::fail(source_name, "need \"counts\" or \"count\"");
  }
  spec.validate();
  return spec;
}

PlantedSpec load_planted_spec_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open spec file " + path.string());
  return load_planted_spec(in, path.filename().string());
}

void write_ground_truth_json(std::ostream& out, const GroundTruth& truth) {
  out << "{\n";
  out << "  \"threshold\": " << to_sig12(truth.threshold) << ",\n";
  out << "  \"models\": [";
  for (std::size_t g = 0; g < truth.models.size(); ++g) {
    if (g > 0) out << ",";
    out << "\n    {\"group\": " << g + 1 << ", \"pi\": ";
    jsonutil::write_vector(out, truth.models[g].pi);
    out << ", \"theta\": ";
    jsonutil::write_matrix_rows(out, truth.models[g].theta);
    out << "}";
  }
  out << "\n  ],\n";
  out << "  \"labels\": [";
  for (std::size_t i = 0; i < truth.labels.size(); ++i) {
    if (i > 0) out << ", ";
    out << truth.labels[i];
  }
  out << "],\n";
  out << "  \"intended_sets\": [";
  for (std::size_t i = 0; i < truth.intended_sets.size(); ++i) {
    const auto& set = truth.intended_sets[i];
    if (i > 0) out << ",";
    out << "\n    {\"id\": " << set.id << ", \"members\": [";
    for (std::size_t m = 0; m < set.members.size(); ++m) {
      if (m > 0) out << ", ";
      out << '[' << set.members[m].first << ", " << set.members[m].second << ']';
    }
    out << "], \"singleton\": " << (set.singleton ? "true" : "false") << "}";
  }
  if (!truth.intended_sets.empty()) out << "\n  ";
  out << "]\n}\n";
}

GroundTruth read_ground_truth_json(std::istream& in, const std::string& source_name) {
  const auto j = jsonutil::parse_document(in, source_name);
  GroundTruth truth;
  truth.threshold = jsonutil::require<double>(j, source_name, "threshold");
  for (const auto& entry : j.at("models")) {
    LcaModel m;
    m.pi = jsonutil::parse_vector(entry.at("pi"), source_name, "pi");
    m.theta = jsonutil::parse_matrix_rows(entry.at("theta"), source_name, "theta");
    truth.models.push_back(std::move(m));
  }
  truth.labels = j.at("labels").get<std::vector<int>>();
  truth.intended_chain = chain_alignments(truth.models, truth.threshold);
  truth.intended_sets = build_cluster_sets(truth.intended_chain);
  return truth;
}

}  // namespace stratlca
