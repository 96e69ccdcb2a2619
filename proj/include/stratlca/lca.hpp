#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "stratlca/cohort.hpp"
#include "stratlca/numeric.hpp"
#include "stratlca/parallel.hpp"
#include "stratlca/rng.hpp"
#include "stratlca/types.hpp"

namespace stratlca {

/// Multivariate Bernoulli mixture: mixing weights pi (K) and per-cluster
/// condition probabilities theta (D x K, one column per cluster).
template <class Scalar>
struct LcaModelT {
  VectorX<Scalar> pi;
  MatrixX<Scalar> theta;

  Index components() const { return pi.size(); }
  Index dimension() const { return theta.rows(); }
};

using LcaModel = LcaModelT<double>;

struct FitConfig {
  Index K = 50;
  int restarts = 50;
  int max_iterations = 500;
  double tolerance = 1e-6;        // relative log-likelihood change
  double smoothing_floor = 1e-4;  // theta clamp into [eps, 1-eps]
  std::uint64_t seed = 0;

  void validate() const {
    if (K < 1) throw ConfigError("K must be >= 1");
    if (restarts < 1) throw ConfigError("restarts must be >= 1");
    if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
    if (!(tolerance > 0)) throw ConfigError("tolerance must be > 0");
    if (!(smoothing_floor > 0) || !(smoothing_floor < 0.5)) {
      throw ConfigError("smoothing_floor must lie in (0, 0.5)");
    }
  }
};

template <class Scalar>
struct FitResultT {
  LcaModelT<Scalar> model;
  Scalar log_likelihood = 0;
  Scalar bic = 0;
  int iterations = 0;
  bool converged = false;
  std::uint64_t seed_used = 0;
};

using FitResult = FitResultT<double>;

namespace detail {

template <class Scalar>
void check_data_model(const LcaModelT<Scalar>& model, const MatrixX<Scalar>& data) {
  if (data.rows() == 0) throw ValidationError("empty stratum");
  if (model.dimension() != data.cols()) {
    std::ostringstream msg;
    msg << "model dimension " << model.dimension() << " does not match data dimension "
        << data.cols();
    throw ValidationError(msg.str());
  }
  if (model.pi.size() != model.theta.cols()) {
    throw ValidationError("pi length does not match theta column count");
  }
}

/// N x K matrix of ln(pi_k) + ln p(y_i | theta_k). One GEMM:
/// ln p(y|theta_k) = y . (ln theta_k - ln(1-theta_k)) + sum_d ln(1-theta_dk).
template <class Scalar>
MatrixX<Scalar> log_joint(const LcaModelT<Scalar>& model, const MatrixX<Scalar>& data) {
  const auto log_theta = model.theta.array().log();
  const auto log_comp = (Scalar(1) - model.theta.array()).log();
  const MatrixX<Scalar> logit = (log_theta - log_comp).matrix();
  RowVectorX<Scalar> offset = log_comp.colwise().sum().matrix();
  offset += model.pi.array().log().matrix().transpose();
  MatrixX<Scalar> lj = data * logit;
  lj.rowwise() += offset;
  return lj;
}

}  // namespace detail

/// Total log-likelihood of the data under the mixture, log-sum-exp stable.
/// Exactly invariant under permutations of the model's components.
template <class Scalar>
Scalar log_likelihood(const LcaModelT<Scalar>& model, const MatrixX<Scalar>& data) {
  detail::check_data_model(model, data);
  return log_sum_exp_rows(detail::log_joint(model, data)).sum();
}

/// Posterior membership probabilities, one row per record, rows sum to 1.
template <class Scalar>
MatrixX<Scalar> e_step(const LcaModelT<Scalar>& model, const MatrixX<Scalar>& data) {
  detail::check_data_model(model, data);
  return softmax_rows_from_log(detail::log_joint(model, data)).weights;
}

template <class Scalar>
struct MStepResult {
  VectorX<Scalar> pi;
  MatrixX<Scalar> theta;
};

/// Weighted-mean update: pi_k = mean responsibility, theta column k = the
/// responsibility-weighted mean of the data, clamped into [floor, 1-floor].
/// Components with (near) zero total responsibility keep a finite theta; the
/// fit loop owns their reinitialization.
template <class Scalar>
MStepResult<Scalar> m_step(const MatrixX<Scalar>& resp, const MatrixX<Scalar>& data,
                           Scalar floor) {
  if (resp.rows() != data.rows()) {
    throw ValidationError("responsibility rows do not match data rows");
  }
  const auto n = static_cast<Scalar>(data.rows());
  RowVectorX<Scalar> totals = resp.colwise().sum();
  MStepResult<Scalar> out;
  out.pi = (totals / n).transpose();
  out.theta = data.transpose() * resp;
  const RowVectorX<Scalar> safe_totals =
      totals.cwiseMax(std::numeric_limits<Scalar>::min());
  out.theta.array().rowwise() /= safe_totals.array();
  out.theta = out.theta.cwiseMax(floor).cwiseMin(Scalar(1) - floor);
  return out;
}

/// BIC with p = (K-1) + K*D free parameters.
inline double bic(double log_likelihood, Index k, Index d, Index n) {
  const double p = static_cast<double>(k - 1) + static_cast<double>(k * d);
  return -2.0 * log_likelihood + p * std::log(static_cast<double>(n));
}

/// Random initialization: theta uniform in [0.25, 0.75], pi uniform 1/K.
template <class Scalar>
LcaModelT<Scalar> random_init(Index k, Index d, Rng& rng) {
  LcaModelT<Scalar> model;
  model.pi = VectorX<Scalar>::Constant(k, Scalar(1) / static_cast<Scalar>(k));
  model.theta.resize(d, k);
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < d; ++i) {
      model.theta(i, j) = static_cast<Scalar>(rng.uniform(0.25, 0.75));
    }
  }
  return model;
}

/// EM from one random initialization. Stops when the relative log-likelihood
/// change |ll_t - ll_{t-1}| / (|ll_{t-1}| + 1) drops below config.tolerance,
/// or after config.max_iterations updates. `iterations` counts parameter
/// updates (M-steps). Throws ComputeError on a non-finite likelihood.
template <class Scalar>
FitResultT<Scalar> fit_em(const MatrixX<Scalar>& data, const FitConfig& config,
                          std::uint64_t seed) {
  config.validate();
  if (data.rows() == 0) throw ValidationError("empty stratum");
  const Index n = data.rows();
  const Index d = data.cols();
  const Scalar eps = static_cast<Scalar>(config.smoothing_floor);
  constexpr Scalar kPiFloor = Scalar(1e-10);

  Rng rng(seed);
  FitResultT<Scalar> result;
  result.seed_used = seed;
  result.model = random_init<Scalar>(config.K, d, rng);

  Scalar ll_prev = std::numeric_limits<Scalar>::quiet_NaN();
  for (int update = 0;; ++update) {
    const auto softmax = softmax_rows_from_log(detail::log_joint(result.model, data));
    const Scalar ll = softmax.log_norms.sum();
    if (!std::isfinite(ll)) {
      std::ostringstream msg;
      msg << "non-finite log-likelihood at iteration " << update;
      throw ComputeError(msg.str());
    }
    result.log_likelihood = ll;
    if (update > 0 &&
        std::abs(ll - ll_prev) / (std::abs(ll_prev) + Scalar(1)) <
            static_cast<Scalar>(config.tolerance)) {
      result.converged = true;
      break;
    }
    if (update == config.max_iterations) break;
    ll_prev = ll;

    auto updated = m_step(softmax.weights, data, eps);
    // A starved component (total responsibility < 1 record) is re-seeded at a
    // fresh random position so the fit keeps exactly K live clusters.
    const RowVectorX<Scalar> totals = softmax.weights.colwise().sum();
    for (Index k = 0; k < config.K; ++k) {
      if (totals[k] < Scalar(1)) {
        for (Index i = 0; i < d; ++i) {
          updated.theta(i, k) = static_cast<Scalar>(rng.uniform(0.25, 0.75));
        }
      }
    }
    updated.pi = updated.pi.cwiseMax(kPiFloor);
    updated.pi /= updated.pi.sum();
    result.model.pi = std::move(updated.pi);
    result.model.theta = std::move(updated.theta);
    result.iterations = update + 1;
  }

  result.bic = bic(static_cast<double>(result.log_likelihood), config.K, d, n);
  return result;
}

/// Multi-restart selection: config.restarts independent EM runs with seeds
/// derive_seed(config.seed, r); the result with the smallest BIC wins, ties
/// going to the lower restart index. Restarts may run in parallel; the
/// selection does not depend on scheduling.
template <class Scalar>
FitResultT<Scalar> fit_best(const MatrixX<Scalar>& data, const FitConfig& config,
                            int threads = 0) {
  config.validate();
  const int r_count = config.restarts;
  std::vector<FitResultT<Scalar>> results(static_cast<std::size_t>(r_count));
  std::vector<std::string> failures(static_cast<std::size_t>(r_count));
  std::vector<char> ok(static_cast<std::size_t>(r_count), 0);

  parallel_for(r_count, threads, [&](Index r) {
    const auto i = static_cast<std::size_t>(r);
    try {
      results[i] = fit_em<Scalar>(data, config,
                                  derive_seed(config.seed, static_cast<std::uint64_t>(r)));
      ok[i] = 1;
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });

  int best = -1;
  for (int r = 0; r < r_count; ++r) {
    if (!ok[static_cast<std::size_t>(r)]) continue;
    if (best < 0 || results[static_cast<std::size_t>(r)].bic <
                        results[static_cast<std::size_t>(best)].bic) {
      best = r;
    }
  }
  if (best < 0) {
    std::ostringstream msg;
    msg << "all " << r_count << " restarts failed; first error: ";
    for (const auto& f : failures) {
      if (!f.empty()) {
        msg << f;
        break;
      }
    }
    throw ComputeError(msg.str());
  }
  return std::move(results[static_cast<std::size_t>(best)]);
}

template <class Scalar>
struct HardAssignment {
  Eigen::VectorXi labels;     // argmax posterior per record, ties to lowest k
  Eigen::VectorXi sizes;      // per-cluster record counts
  VectorX<Scalar> fractions;  // sizes / N
};

template <class Scalar>
HardAssignment<Scalar> hard_assign(const LcaModelT<Scalar>& model,
                                   const MatrixX<Scalar>& data) {
  const MatrixX<Scalar> resp = e_step(model, data);
  const Index n = resp.rows();
  const Index k = resp.cols();
  HardAssignment<Scalar> out;
  out.labels.resize(n);
  out.sizes = Eigen::VectorXi::Zero(k);
  for (Index i = 0; i < n; ++i) {
    Index arg = 0;
    for (Index j = 1; j < k; ++j) {
      if (resp(i, j) > resp(i, arg)) arg = j;
    }
    out.labels[i] = static_cast<int>(arg);
    ++out.sizes[arg];
  }
  out.fractions = out.sizes.template cast<Scalar>() / static_cast<Scalar>(n);
  return out;
}

// Stratum conveniences; fitting consumes the 0/1 condition matrix directly.
inline double log_likelihood(const LcaModel& model, const Stratum& s) {
  return log_likelihood(model, s.data.conditions());
}
inline Matrix e_step(const LcaModel& model, const Stratum& s) {
  return e_step(model, s.data.conditions());
}
inline FitResult fit_em(const Stratum& s, const FitConfig& config, std::uint64_t seed) {
  return fit_em(s.data.conditions(), config, seed);
}
inline FitResult fit_best(const Stratum& s, const FitConfig& config, int threads = 0) {
  return fit_best(s.data.conditions(), config, threads);
}
inline HardAssignment<double> hard_assign(const LcaModel& model, const Stratum& s) {
  return hard_assign(model, s.data.conditions());
}

}  // namespace stratlca
