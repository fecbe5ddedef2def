#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "survpp/data.hpp"
#include "survpp/model.hpp"
#include "survpp/rng.hpp"
#include "survpp/slice.hpp"

namespace survpp {

struct SamplerConfig {
  int n_keep = 10000;  // posterior draws kept (nMC)
  int n_burn = 200;    // burn-in iterations (nBI)
  double slice_width_beta = 1.0;
  double slice_width_log_lambda = 1.0;
  int max_stepout_doublings = 10;

  void validate() const {
    if (n_keep < 1 || n_burn < 0)
      throw Error(ErrorKind::config, "need n_keep >= 1 and n_burn >= 0");
    if (!(slice_width_beta > 0.0) || !(slice_width_log_lambda > 0.0))
      throw Error(ErrorKind::config, "slice widths must be positive");
  }

  SliceConfig beta_slice() const {
    return {slice_width_beta, max_stepout_doublings};
  }
  SliceConfig log_lambda_slice() const {
    return {slice_width_log_lambda, max_stepout_doublings};
  }
};

struct PosteriorDraws {
  Eigen::MatrixXd beta;                  // n_keep x P
  std::vector<Eigen::MatrixXd> lambda;   // per stratum, n_keep x K_s
  std::vector<Eigen::MatrixXd> lambda0;  // empty unless unshared + historical
  Eigen::VectorXd a0_fixed;              // echoed fixed vector (empty if marginalized)
  bool a0_marginalized = false;
  std::uint64_t clamp_events = 0;        // linear-predictor clamps observed
};

// Slice-within-Gibbs sampler for the fixed-a0 power-prior posterior.
// `current` may be null: the run then samples the power prior itself
// (historical-only), with a single lambda set informed by the weighted
// historical data. With unshared baselines and current data present, a
// separate lambda0 set is sampled.
PosteriorDraws phm_fixed_a0(const RiskTable* current,
                            const std::vector<RiskTable>& historical,
                            const Eigen::VectorXd& a0, const PriorSpec& prior,
                            const SamplerConfig& cfg, Rng rng);

PosteriorDraws phm_fixed_a0(const SurvivalDataset* current,
                            const std::vector<SurvivalDataset>& historical,
                            const Eigen::VectorXd& a0,
                            const IntervalPartition& partition,
                            const PriorSpec& prior, const SamplerConfig& cfg,
                            Rng rng);

// Discrete approximation to the normalized power prior for beta,
// pi(beta | D0) = integral of pi(beta | D0, a0) pi(a0) da0: draws a0 from
// its Beta priors L times and, for each draw, advances a slice-sampling
// chain on the conditional kernel for `n_inner_burn` sweeps (warm-started
// from the previously retained point) before retaining one beta. Returns an
// L x P matrix.
Eigen::MatrixXd approximate_prior_beta(const std::vector<RiskTable>& historical,
                                       const PriorSpec& prior, int n_draws,
                                       int n_inner_burn,
                                       const SamplerConfig& cfg, Rng rng);

Eigen::MatrixXd approximate_prior_beta(
    const std::vector<SurvivalDataset>& historical,
    const IntervalPartition& partition, const PriorSpec& prior, int n_draws,
    int n_inner_burn, const SamplerConfig& cfg, Rng rng);

// Moment fit of a single multivariate normal to draws (rows). Requires more
// rows than columns and a nonsingular sample covariance.
MvnMixture fit_single_mvn(const Eigen::MatrixXd& draws);

// Posterior sampler under the normalized power prior with beta's prior
// replaced by its (mixture-of-)normal approximation; lambda0 and a0 are
// already marginalized out and do not appear in the draws.
PosteriorDraws phm_random_a0(const RiskTable& current,
                             const MvnMixture& prior_beta,
                             const PriorSpec& prior, const SamplerConfig& cfg,
                             Rng rng);

PosteriorDraws phm_random_a0(const SurvivalDataset& current,
                             const MvnMixture& prior_beta,
                             const IntervalPartition& partition,
                             const PriorSpec& prior, const SamplerConfig& cfg,
                             Rng rng);

}  // namespace survpp
