#pragma once

#include <Eigen/Core>
#include <vector>

#include "survpp/data.hpp"
#include "survpp/model.hpp"
#include "survpp/samplers.hpp"
#include "survpp/trial_sim.hpp"

namespace survpp {

// Discrete sampling prior: rows of candidate beta vectors and, per stratum,
// rows of candidate baseline-hazard vectors. When `joint` is set the beta
// and lambda matrices are row-aligned and a single row index is resampled,
// preserving their posterior dependence; otherwise indices are drawn
// independently.
struct SamplingPrior {
  Eigen::MatrixXd beta;
  std::vector<Eigen::MatrixXd> lambda;
  bool joint = false;

  void validate() const;
};

struct HypothesisSpec {
  double delta = 0.0;
  bool null_is_geq = true;  // H0: beta1 >= delta; false: H0: beta1 <= delta
  double gamma = 0.975;     // posterior probability threshold for rejection

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0))
      throw Error(ErrorKind::config, "gamma must lie in (0, 1)");
  }

  // Posterior probability of the alternative region for a column of beta_1
  // draws.
  double posterior_prob(const Eigen::Ref<const Eigen::VectorXd>& beta1) const {
    const Eigen::Index m = beta1.size();
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < m; ++i)
      hits += null_is_geq ? (beta1[i] < delta) : (beta1[i] > delta);
    return static_cast<double>(hits) / static_cast<double>(m);
  }
};

struct DesignResult {
  Eigen::VectorXd posterior_probs;  // per completed trial
  std::vector<int> reject;          // r^(b) per completed trial
  double estimate = 0.0;            // q-hat
  double mc_se = 0.0;               // sqrt(q(1-q)/B)
  int n_trials = 0;                 // completed trials
  int n_failed = 0;
  std::vector<int> failed_trials;   // indices of failed trials (if any)
  std::uint64_t clamp_events = 0;
};

struct DnDaPriors {
  SamplingPrior dn;  // historical posterior truncated to beta_1 > 0
  SamplingPrior da;  // historical posterior truncated to beta_1 < 0
};

// Default sampling priors from the historical data: a full-borrowing
// (a0 = 1) posterior run without current data, split by the sign of
// beta_1. Lambda rows stay aligned with the retained beta rows.
DnDaPriors build_default_sampling_priors(
    const std::vector<SurvivalDataset>& historical,
    const IntervalPartition& partition, const PriorSpec& prior,
    const SamplerConfig& cfg, Rng rng);

SamplingPrior build_point_mass_prior(const Eigen::VectorXd& beta_point,
                                     const BaselineHazards& lambda_point);

enum class A0Mode { fixed, random };

// Everything the operating-characteristic loop needs beyond the data.
struct DesignSpec {
  A0Mode a0_mode = A0Mode::fixed;
  Eigen::VectorXd a0;         // fixed mode
  MvnMixture prior_beta_mvn;  // random mode
  TrialDesignConfig trial;
  HypothesisSpec hypothesis;
  std::vector<int> n_intervals;  // fitting partition sizes (rebuilt per trial)
  int n_trials = 1000;           // B
  int workers = 1;
  double max_failure_fraction = 0.01;
};

// The simulation loop of the sample-size procedure: per trial, draw theta
// from the sampling prior, simulate a trial (generation-stage partition),
// refit with the fitting prior on a per-trial pooled partition, and count
// rejections. Trials are independent work items; per-trial RNG streams are
// keyed on the trial index, so the estimate does not depend on the worker
// count.
DesignResult estimate_operating_characteristic(
    const std::vector<SurvivalDataset>& historical, const DesignSpec& spec,
    const SamplingPrior& sampling, const IntervalPartition& gen_partition,
    const PriorSpec& fit_prior, const SamplerConfig& mcmc, Rng master);

struct SampleSizeDecision {
  bool feasible = false;
  int n_alpha0 = -1;  // min n with q0 <= alpha0 (-1: none)
  int n_alpha1 = -1;  // min n with q1 >= 1 - alpha1 (-1: none)
  int chosen = -1;    // max of the two when both exist
};

// Grid entries are (n, type-I rate q0, power q1); the rule is applied
// literally, min over the satisfying set for each constraint.
SampleSizeDecision decide_sample_size(
    const std::vector<std::tuple<int, double, double>>& grid, double alpha0,
    double alpha1);

}  // namespace survpp
