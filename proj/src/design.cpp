#include "survpp/design.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace survpp {

void SamplingPrior::validate() const {
  if (beta.rows() < 1 || beta.cols() < 1)
    throw Error(ErrorKind::config, "sampling prior for beta is empty");
  if (lambda.empty())
    throw Error(ErrorKind::config, "sampling prior for lambda is empty");
  for (const auto& m : lambda) {
    if (m.rows() < 1 || m.cols() < 1)
      throw Error(ErrorKind::config,
                  "sampling prior for lambda has an empty stratum matrix");
    if ((m.array() <= 0.0).any())
      throw Error(ErrorKind::config,
                  "sampling prior for lambda must be strictly positive");
    if (joint && m.rows() != beta.rows())
      throw Error(ErrorKind::config,
                  "joint resampling requires row-aligned beta and lambda "
                  "matrices");
  }
}

DnDaPriors build_default_sampling_priors(
    const std::vector<SurvivalDataset>& historical,
    const IntervalPartition& partition, const PriorSpec& prior,
    const SamplerConfig& cfg, Rng rng) {
  if (historical.empty())
    throw Error(ErrorKind::elicitation,
                "default sampling priors require historical data");
  const Eigen::VectorXd a0 =
      Eigen::VectorXd::Ones(static_cast<Eigen::Index>(historical.size()));
  const PosteriorDraws draws =
      phm_fixed_a0(static_cast<const SurvivalDataset*>(nullptr), historical,
                   a0, partition, prior, cfg, rng);

  auto subset = [&](bool positive) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < draws.beta.rows(); ++i) {
      const double b1 = draws.beta(i, 0);
      if ((positive && b1 > 0.0) || (!positive && b1 < 0.0)) rows.push_back(i);
    }
    if (rows.empty())
      throw Error(ErrorKind::elicitation,
                  std::string("no posterior draws with beta_1 ") +
                      (positive ? "> 0" : "< 0") +
                      "; increase the number of MCMC draws");
    SamplingPrior sp;
    sp.joint = true;
    sp.beta.resize(static_cast<Eigen::Index>(rows.size()), draws.beta.cols());
    for (size_t r = 0; r < rows.size(); ++r)
      sp.beta.row(static_cast<Eigen::Index>(r)) = draws.beta.row(rows[r]);
    for (const auto& lam : draws.lambda) {
      Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), lam.cols());
      for (size_t r = 0; r < rows.size(); ++r)
        m.row(static_cast<Eigen::Index>(r)) = lam.row(rows[r]);
      sp.lambda.push_back(std::move(m));
    }
    sp.validate();
    return sp;
  };

  DnDaPriors out;
  out.dn = subset(true);
  out.da = subset(false);
  return out;
}

SamplingPrior build_point_mass_prior(const Eigen::VectorXd& beta_point,
                                     const BaselineHazards& lambda_point) {
  SamplingPrior sp;
  sp.joint = true;
  sp.beta = beta_point.transpose();
  for (const auto& lam : lambda_point) sp.lambda.push_back(lam.transpose());
  sp.validate();
  return sp;
}

namespace {

struct TrialOutcome {
  bool failed = false;
  double posterior_prob = 0.0;
  int reject = 0;
  std::uint64_t clamps = 0;
};

TrialOutcome run_one_trial(int b, const std::vector<SurvivalDataset>& historical,
                           const DesignSpec& spec, const SamplingPrior& sampling,
                           const IntervalPartition& gen_partition,
                           const CovariatePool& pool,
                           const PriorSpec& fit_prior,
                           const SamplerConfig& mcmc, const Rng& master) {
  TrialOutcome out;
  const std::uint64_t clamps_before = eval_diagnostics().clamp_events;
  try {
    Rng rng_gen = master.stream(static_cast<std::uint64_t>(b), 0);
    Rng rng_fit = master.stream(static_cast<std::uint64_t>(b), 1);

    // step 1: theta ~ sampling prior
    Eigen::VectorXd beta;
    BaselineHazards lambda(sampling.lambda.size());
    if (sampling.joint) {
      const auto idx = rng_gen.uniform_index(
          static_cast<std::uint64_t>(sampling.beta.rows()));
      beta = sampling.beta.row(static_cast<Eigen::Index>(idx)).transpose();
      for (size_t s = 0; s < sampling.lambda.size(); ++s)
        lambda[s] = sampling.lambda[s]
                        .row(static_cast<Eigen::Index>(idx))
                        .transpose();
    } else {
      const auto bidx = rng_gen.uniform_index(
          static_cast<std::uint64_t>(sampling.beta.rows()));
      beta = sampling.beta.row(static_cast<Eigen::Index>(bidx)).transpose();
      for (size_t s = 0; s < sampling.lambda.size(); ++s) {
        const auto lidx = rng_gen.uniform_index(
            static_cast<std::uint64_t>(sampling.lambda[s].rows()));
        lambda[s] = sampling.lambda[s]
                        .row(static_cast<Eigen::Index>(lidx))
                        .transpose();
      }
    }

    // step 2: simulate the trial
    const std::vector<CompleteSubject> complete = simulate_complete_data(
        spec.trial, beta, lambda, pool, gen_partition, rng_gen);
    const SurvivalDataset observed = construct_observed_data(
        complete, spec.trial.target_events, spec.trial.t_min, spec.trial.t_max,
        pool.stratum_labels, pool.covariate_names);

    // step 3: refit on the per-trial pooled partition
    std::vector<const SurvivalDataset*> pool_ds{&observed};
    for (const auto& h : historical) pool_ds.push_back(&h);
    const IntervalPartition fit_partition =
        default_partition(pool_ds, spec.n_intervals);

    PosteriorDraws draws;
    if (spec.a0_mode == A0Mode::fixed) {
      draws = phm_fixed_a0(&observed, historical, spec.a0, fit_partition,
                           fit_prior, mcmc, rng_fit);
    } else {
      draws = phm_random_a0(observed, spec.prior_beta_mvn, fit_partition,
                            fit_prior, mcmc, rng_fit);
    }

    // step 4: rejection indicator
    out.posterior_prob = spec.hypothesis.posterior_prob(draws.beta.col(0));
    out.reject = out.posterior_prob >= spec.hypothesis.gamma ? 1 : 0;
  } catch (const Error&) {
    out.failed = true;
  }
  out.clamps = eval_diagnostics().clamp_events - clamps_before;
  return out;
}

}  // namespace

DesignResult estimate_operating_characteristic(
    const std::vector<SurvivalDataset>& historical, const DesignSpec& spec,
    const SamplingPrior& sampling, const IntervalPartition& gen_partition,
    const PriorSpec& fit_prior, const SamplerConfig& mcmc, Rng master) {
  if (spec.n_trials < 1)
    throw Error(ErrorKind::config, "need at least one simulated trial");
  spec.trial.validate();
  spec.hypothesis.validate();
  sampling.validate();
  if (spec.a0_mode == A0Mode::fixed) {
    if (spec.a0.size() != static_cast<Eigen::Index>(historical.size()))
      throw Error(ErrorKind::config,
                  "a0 vector length does not match historical datasets");
  } else if (spec.prior_beta_mvn.size() == 0) {
    throw Error(ErrorKind::config,
                "random-a0 design requires a beta prior mixture");
  }

  const CovariatePool pool = CovariatePool::from_historical(historical);
  const int B = spec.n_trials;
  std::vector<TrialOutcome> outcomes(static_cast<size_t>(B));

  const int workers = std::max(1, spec.workers);
  if (workers == 1) {
    for (int b = 0; b < B; ++b)
      outcomes[static_cast<size_t>(b)] =
          run_one_trial(b, historical, spec, sampling, gen_partition, pool,
                        fit_prior, mcmc, master);
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        const int b = next.fetch_add(1);
        if (b >= B) return;
        outcomes[static_cast<size_t>(b)] =
            run_one_trial(b, historical, spec, sampling, gen_partition, pool,
                          fit_prior, mcmc, master);
      }
    };
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  DesignResult result;
  std::vector<double> probs;
  for (int b = 0; b < B; ++b) {
    const TrialOutcome& o = outcomes[static_cast<size_t>(b)];
    result.clamp_events += o.clamps;
    if (o.failed) {
      result.failed_trials.push_back(b);
      continue;
    }
    probs.push_back(o.posterior_prob);
    result.reject.push_back(o.reject);
  }
  result.n_failed = static_cast<int>(result.failed_trials.size());
  result.n_trials = static_cast<int>(result.reject.size());
  if (result.n_failed >
      spec.max_failure_fraction * static_cast<double>(B)) {
    std::string ids;
    for (size_t i = 0; i < result.failed_trials.size() && i < 20; ++i)
      ids += (i ? ", " : "") + std::to_string(result.failed_trials[i]);
    throw Error(ErrorKind::sampler,
                std::to_string(result.n_failed) + " of " + std::to_string(B) +
                    " trials failed (limit " +
                    std::to_string(spec.max_failure_fraction) +
                    "); failed trial indices: " + ids);
  }
  if (result.n_trials == 0)
    throw Error(ErrorKind::sampler, "all trials failed");

  result.posterior_probs = Eigen::Map<Eigen::VectorXd>(
      probs.data(), static_cast<Eigen::Index>(probs.size()));
  double sum = 0.0;
  for (int r : result.reject) sum += r;
  result.estimate = sum / static_cast<double>(result.n_trials);
  result.mc_se = std::sqrt(result.estimate * (1.0 - result.estimate) /
                           static_cast<double>(result.n_trials));
  return result;
}

SampleSizeDecision decide_sample_size(
    const std::vector<std::tuple<int, double, double>>& grid, double alpha0,
    double alpha1) {
  if (grid.empty())
    throw Error(ErrorKind::config, "sample-size grid is empty");
  SampleSizeDecision d;
  for (const auto& [n, q0, q1] : grid) {
    if (q0 <= alpha0 && (d.n_alpha0 < 0 || n < d.n_alpha0)) d.n_alpha0 = n;
    if (q1 >= 1.0 - alpha1 && (d.n_alpha1 < 0 || n < d.n_alpha1))
      d.n_alpha1 = n;
  }
  if (d.n_alpha0 >= 0 && d.n_alpha1 >= 0) {
    d.feasible = true;
    d.chosen = std::max(d.n_alpha0, d.n_alpha1);
  }
  return d;
}

}  // namespace survpp
