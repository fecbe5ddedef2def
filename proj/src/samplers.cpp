#include "survpp/samplers.hpp"

#include <algorithm>
#include <cmath>

namespace survpp {

namespace {

// One likelihood block: a risk table entering the joint density with a
// weight (1 for current data, a0_j for historical dataset j) and the hazard
// set whose lambdas multiply its exposures.
struct Block {
  const RiskTable* rt = nullptr;
  double weight = 1.0;
  int lambda_set = 0;          // 0 -> lambda, 1 -> lambda0
  Eigen::VectorXd eta;         // linear predictor per pattern
  Eigen::VectorXd phi;         // exp(eta), refreshed after each beta sweep
  Eigen::VectorXd omega;       // sum_sk lambda_sk R[s][k][u]
  Eigen::VectorXd evx;         // P: sum_u E_u x_u
  std::vector<Eigen::VectorXd> event_sums;  // [s]: K_s, row sums of events
};

double beta_prior_coord_term(const BetaPrior& prior, int p, double t) {
  if (prior.type == BetaPriorType::improper_uniform) return 0.0;
  const double z = (t - prior.mean[p]) / prior.sd[p];
  return -0.5 * z * z;
}

// Shared slice-within-Gibbs engine for phm_fixed_a0 and phm_random_a0. In
// mixture mode the beta prior (and any historical information) is carried
// by the supplied mixture density instead of likelihood blocks.
class GibbsSampler {
 public:
  GibbsSampler(std::vector<Block> blocks, const PriorSpec& prior,
               const SamplerConfig& cfg, bool sample_lambda0,
               const MvnMixture* beta_mixture)
      : blocks_(std::move(blocks)),
        prior_(prior),
        cfg_(cfg),
        sample_lambda0_(sample_lambda0),
        mixture_(beta_mixture) {
    if (blocks_.empty())
      throw Error(ErrorKind::config, "sampler needs at least one dataset");
    S_ = blocks_.front().rt->n_strata;
    P_ = static_cast<int>(blocks_.front().rt->n_covariates);
    n_intervals_ = blocks_.front().rt->n_intervals;
    for (const auto& b : blocks_)
      if (b.rt->n_strata != S_ || b.rt->n_intervals != n_intervals_ ||
          b.rt->n_covariates != P_)
        throw Error(ErrorKind::config,
                    "datasets disagree in strata, intervals, or covariates");

    beta_ = Eigen::VectorXd::Zero(P_);
    lambda_[0] = init_hazards(0);
    if (sample_lambda0_) lambda_[1] = init_hazards(1);

    for (auto& b : blocks_) {
      b.eta = b.rt->patterns * beta_;
      b.evx = b.rt->patterns.transpose() * b.rt->event_count_by_pattern;
      b.event_sums.resize(S_);
      for (int s = 0; s < S_; ++s)
        b.event_sums[s] = b.rt->events_by_pattern[s].rowwise().sum();
    }
    // weighted event totals per hazard set; constant across iterations, so
    // improper-prior degeneracy can be detected up front
    for (int m = 0; m < 2; ++m) {
      if (m == 1 && !sample_lambda0_) break;
      weighted_events_[m].resize(S_);
      for (int s = 0; s < S_; ++s) {
        weighted_events_[m][s] = Eigen::VectorXd::Zero(n_intervals_[s]);
        for (const auto& b : blocks_)
          if (b.lambda_set == m)
            weighted_events_[m][s] += b.weight * b.event_sums[s];
      }
      const LambdaPrior& lp = m == 0 ? prior_.lambda : prior_.lambda0;
      if (lp.type != LambdaPriorType::normal_on_log) {
        for (int s = 0; s < S_; ++s)
          for (int k = 0; k < n_intervals_[s]; ++k)
            if (!(lp.gamma_shape(s, k) + weighted_events_[m][s][k] > 0.0))
              throw Error(
                  ErrorKind::degenerate,
                  "full conditional for stratum " + std::to_string(s + 1) +
                      ", interval " + std::to_string(k + 1) +
                      " has shape <= 0 (no events under an improper prior); "
                      "use a proper Gamma prior or merge intervals");
      }
    }
    refresh_phi();
    refresh_omega(0);
    if (sample_lambda0_) refresh_omega(1);
  }

  PosteriorDraws run(Rng& rng) {
    PosteriorDraws draws;
    draws.beta.resize(cfg_.n_keep, P_);
    draws.lambda.resize(S_);
    for (int s = 0; s < S_; ++s)
      draws.lambda[s].resize(cfg_.n_keep, n_intervals_[s]);
    if (sample_lambda0_) {
      draws.lambda0.resize(S_);
      for (int s = 0; s < S_; ++s)
        draws.lambda0[s].resize(cfg_.n_keep, n_intervals_[s]);
    }

    const std::uint64_t clamps_before = eval_diagnostics().clamp_events;
    for (int it = 0; it < cfg_.n_burn + cfg_.n_keep; ++it) {
      sweep(rng);
      const int row = it - cfg_.n_burn;
      if (row < 0) continue;
      draws.beta.row(row) = beta_;
      for (int s = 0; s < S_; ++s) {
        draws.lambda[s].row(row) = lambda_[0][s];
        if (sample_lambda0_) draws.lambda0[s].row(row) = lambda_[1][s];
      }
    }
    draws.clamp_events = eval_diagnostics().clamp_events - clamps_before;
    return draws;
  }

 private:
  BaselineHazards init_hazards(int set) {
    BaselineHazards lam(S_);
    for (int s = 0; s < S_; ++s) {
      double events = 0.0, time = 0.0;
      for (const auto& b : blocks_) {
        if (b.lambda_set != set) continue;
        for (int k = 0; k < b.rt->n_intervals[s]; ++k) {
          events += b.rt->events_by_pattern[s].row(k).sum();
          time += b.rt->exposure_by_pattern[s].row(k).sum();
        }
      }
      lam[s] = Eigen::VectorXd::Constant(n_intervals_[s],
                                         (events + 0.5) / (time + 1.0));
    }
    return lam;
  }

  void refresh_phi() {
    for (auto& b : blocks_) {
      b.phi.resize(b.eta.size());
      for (Eigen::Index u = 0; u < b.eta.size(); ++u)
        b.phi[u] = clamped_exp(b.eta[u]);
    }
  }

  void refresh_omega(int set) {
    for (auto& b : blocks_) {
      if (b.lambda_set != set) continue;
      b.omega = Eigen::VectorXd::Zero(b.eta.size());
      for (int s = 0; s < S_; ++s)
        b.omega.noalias() +=
            b.rt->exposure_by_pattern[s].transpose() * lambda_[set][s];
    }
  }

  double beta_coord_target(int p, double t) {
    const double d = t - beta_[p];
    double lp = 0.0;
    for (const auto& b : blocks_) {
      const auto xcol = b.rt->patterns.col(p);
      double exposure = 0.0;
      for (Eigen::Index u = 0; u < b.eta.size(); ++u)
        exposure += clamped_exp(b.eta[u] + d * xcol[u]) * b.omega[u];
      lp += b.weight * (d * b.evx[p] - exposure);
    }
    if (mixture_ != nullptr) {
      scratch_beta_ = beta_;
      scratch_beta_[p] = t;
      lp += mixture_->log_density(scratch_beta_);
    } else {
      lp += beta_prior_coord_term(prior_.beta, p, t);
    }
    return lp;
  }

  void sweep(Rng& rng) {
    // (i) beta, coordinate by coordinate
    for (int p = 0; p < P_; ++p) {
      const double old = beta_[p];
      const double next = slice_sample_1d(
          [&](double t) { return beta_coord_target(p, t); }, old,
          cfg_.beta_slice(), rng);
      if (next != old) {
        beta_[p] = next;
        const double d = next - old;
        for (auto& b : blocks_) b.eta += d * b.rt->patterns.col(p);
      }
    }
    refresh_phi();
    // (ii) lambda, (iii) lambda0
    update_lambda_set(0, rng);
    if (sample_lambda0_) update_lambda_set(1, rng);
  }

  void update_lambda_set(int set, Rng& rng) {
    const LambdaPrior& lp = set == 0 ? prior_.lambda : prior_.lambda0;
    for (int s = 0; s < S_; ++s) {
      for (int k = 0; k < n_intervals_[s]; ++k) {
        const double events = weighted_events_[set][s][k];
        double exposure = 0.0;
        for (const auto& b : blocks_)
          if (b.lambda_set == set)
            exposure +=
                b.weight * b.rt->exposure_by_pattern[s].row(k).dot(b.phi);
        if (lp.type == LambdaPriorType::normal_on_log) {
          const double mu = lp.log_mean[s][k];
          const double sd = lp.log_sd[s][k];
          const double z0 = std::log(lambda_[set][s][k]);
          const double z1 = slice_sample_1d(
              [&](double z) {
                const double dev = (z - mu) / sd;
                return events * z - clamped_exp(z) * exposure -
                       0.5 * dev * dev;
              },
              z0, cfg_.log_lambda_slice(), rng);
          lambda_[set][s][k] = std::exp(z1);
        } else {
          lambda_[set][s][k] = rng.gamma(lp.gamma_shape(s, k) + events,
                                         lp.gamma_rate(s, k) + exposure);
        }
      }
    }
    refresh_omega(set);
  }

  std::vector<Block> blocks_;
  PriorSpec prior_;
  SamplerConfig cfg_;
  bool sample_lambda0_;
  const MvnMixture* mixture_;
  int S_ = 0;
  int P_ = 0;
  std::vector<int> n_intervals_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd scratch_beta_;
  BaselineHazards lambda_[2];
  std::vector<Eigen::VectorXd> weighted_events_[2];
};

std::vector<RiskTable> build_tables(
    const std::vector<SurvivalDataset>& datasets,
    const IntervalPartition& partition) {
  std::vector<RiskTable> out;
  out.reserve(datasets.size());
  for (const auto& ds : datasets) out.push_back(build_risk_table(ds, partition));
  return out;
}

}  // namespace

PosteriorDraws phm_fixed_a0(const RiskTable* current,
                            const std::vector<RiskTable>& historical,
                            const Eigen::VectorXd& a0, const PriorSpec& prior,
                            const SamplerConfig& cfg, Rng rng) {
  cfg.validate();
  if (current == nullptr && historical.empty())
    throw Error(ErrorKind::config,
                "need current data or at least one historical dataset");
  if (a0.size() != static_cast<Eigen::Index>(historical.size()))
    throw Error(ErrorKind::config,
                "a0 vector length " + std::to_string(a0.size()) +
                    " does not match " + std::to_string(historical.size()) +
                    " historical datasets");
  if ((a0.array() < 0.0).any() || (a0.array() > 1.0).any())
    throw Error(ErrorKind::domain, "a0 entries must lie in [0, 1]");

  // With no current data (elicitation mode) the weighted historical data
  // inform the single lambda set directly; a separate lambda0 set exists
  // only for unshared baselines alongside current data.
  const bool have_current = current != nullptr;
  const bool unshared =
      have_current && !prior.shared_baseline && !historical.empty();

  std::vector<Block> blocks;
  if (have_current) {
    Block b;
    b.rt = current;
    b.weight = 1.0;
    b.lambda_set = 0;
    blocks.push_back(std::move(b));
  }
  for (size_t j = 0; j < historical.size(); ++j) {
    const double w = a0[static_cast<Eigen::Index>(j)];
    if (w == 0.0) continue;  // fully discounted: identical to absent data
    Block b;
    b.rt = &historical[j];
    b.weight = w;
    b.lambda_set = unshared ? 1 : 0;
    blocks.push_back(std::move(b));
  }
  if (blocks.empty())
    throw Error(ErrorKind::config,
                "all historical datasets have a0 = 0 and there is no "
                "current data; nothing to sample");

  GibbsSampler sampler(std::move(blocks), prior, cfg, unshared, nullptr);
  PosteriorDraws draws = sampler.run(rng);
  draws.a0_fixed = a0;
  if (unshared && draws.lambda0.empty()) {
    // all-zero a0 with unshared baselines: lambda0 is just its prior; draw
    // it directly so the output shape matches the model
    draws.lambda0.resize(draws.lambda.size());
    for (size_t s = 0; s < draws.lambda.size(); ++s) {
      draws.lambda0[s].resize(cfg.n_keep, draws.lambda[s].cols());
      for (int i = 0; i < cfg.n_keep; ++i)
        for (Eigen::Index k = 0; k < draws.lambda[s].cols(); ++k)
          draws.lambda0[s](i, k) =
              rng.gamma(prior.lambda0.gamma_shape(static_cast<int>(s),
                                                  static_cast<int>(k)),
                        prior.lambda0.gamma_rate(static_cast<int>(s),
                                                 static_cast<int>(k)));
    }
  }
  return draws;
}

PosteriorDraws phm_fixed_a0(const SurvivalDataset* current,
                            const std::vector<SurvivalDataset>& historical,
                            const Eigen::VectorXd& a0,
                            const IntervalPartition& partition,
                            const PriorSpec& prior, const SamplerConfig& cfg,
                            Rng rng) {
  std::vector<RiskTable> hist_rts = build_tables(historical, partition);
  if (current == nullptr)
    return phm_fixed_a0(nullptr, hist_rts, a0, prior, cfg, rng);
  const RiskTable cur = build_risk_table(*current, partition);
  return phm_fixed_a0(&cur, hist_rts, a0, prior, cfg, rng);
}

namespace {

// Chain state for the conditional-kernel sampler behind
// approximate_prior_beta.
class NppKernelChain {
 public:
  NppKernelChain(const std::vector<RiskTable>& historical,
                 const PriorSpec& prior, const SamplerConfig& cfg)
      : hist_(historical), prior_(prior), cfg_(cfg) {
    if (hist_.empty())
      throw Error(ErrorKind::config, "no historical datasets");
    if (prior_.beta.type != BetaPriorType::normal)
      throw Error(ErrorKind::config,
                  "the normalized power prior requires a normal initial "
                  "prior on beta");
    if (prior_.lambda0.type != LambdaPriorType::gamma)
      throw Error(ErrorKind::config,
                  "the normalized power prior requires Gamma priors on "
                  "lambda0");
    S_ = hist_.front().n_strata;
    P_ = static_cast<int>(hist_.front().n_covariates);
    n_intervals_ = hist_.front().n_intervals;
    beta_ = Eigen::VectorXd::Zero(P_);
    eta_.resize(hist_.size());
    evx_.resize(hist_.size());
    event_sums_.resize(hist_.size());
    for (size_t j = 0; j < hist_.size(); ++j) {
      eta_[j] = hist_[j].patterns * beta_;
      evx_[j] = hist_[j].patterns.transpose() * hist_[j].event_count_by_pattern;
      event_sums_[j].resize(S_);
      for (int s = 0; s < S_; ++s)
        event_sums_[j][s] = hist_[j].events_by_pattern[s].rowwise().sum();
    }
  }

  void set_a0(const Eigen::VectorXd& a0) {
    a0_ = a0;
    // p_sk = c_sk + sum_j a0_j D_jsk; beta-free, so cached per a0 draw
    p_.resize(S_);
    for (int s = 0; s < S_; ++s) {
      p_[s].resize(n_intervals_[s]);
      for (int k = 0; k < n_intervals_[s]; ++k) {
        double v = prior_.lambda0.gamma_shape(s, k);
        for (size_t j = 0; j < hist_.size(); ++j)
          v += a0_[static_cast<Eigen::Index>(j)] * event_sums_[j][s][k];
        p_[s][k] = v;
      }
    }
  }

  void sweep(Rng& rng) {
    for (int p = 0; p < P_; ++p) {
      const double old = beta_[p];
      const double next = slice_sample_1d(
          [&](double t) { return coord_target(p, t); }, old,
          cfg_.beta_slice(), rng);
      if (next != old) {
        beta_[p] = next;
        const double d = next - old;
        for (size_t j = 0; j < hist_.size(); ++j)
          eta_[j] += d * hist_[j].patterns.col(p);
      }
    }
  }

  const Eigen::VectorXd& beta() const { return beta_; }
  int n_covariates() const { return P_; }

 private:
  double coord_target(int p, double t) {
    const double d = t - beta_[p];
    double lp = 0.0;
    phi_.resize(hist_.size());
    for (size_t j = 0; j < hist_.size(); ++j) {
      const auto xcol = hist_[j].patterns.col(p);
      phi_[j].resize(eta_[j].size());
      for (Eigen::Index u = 0; u < eta_[j].size(); ++u)
        phi_[j][u] = clamped_exp(eta_[j][u] + d * xcol[u]);
      lp += a0_[static_cast<Eigen::Index>(j)] * d * evx_[j][p];
    }
    for (int s = 0; s < S_; ++s)
      for (int k = 0; k < n_intervals_[s]; ++k) {
        double q = prior_.lambda0.gamma_rate(s, k);
        for (size_t j = 0; j < hist_.size(); ++j)
          q += a0_[static_cast<Eigen::Index>(j)] *
               hist_[j].exposure_by_pattern[s].row(k).dot(phi_[j]);
        lp -= p_[s][k] * std::log(q);
      }
    lp += beta_prior_coord_term(prior_.beta, p, t);
    return lp;
  }

  const std::vector<RiskTable>& hist_;
  PriorSpec prior_;
  SamplerConfig cfg_;
  int S_ = 0;
  int P_ = 0;
  std::vector<int> n_intervals_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd a0_;
  std::vector<Eigen::VectorXd> eta_;
  std::vector<Eigen::VectorXd> evx_;
  std::vector<std::vector<Eigen::VectorXd>> event_sums_;
  std::vector<Eigen::VectorXd> p_;
  std::vector<Eigen::VectorXd> phi_;  // scratch
};

}  // namespace

Eigen::MatrixXd approximate_prior_beta(const std::vector<RiskTable>& historical,
                                       const PriorSpec& prior, int n_draws,
                                       int n_inner_burn,
                                       const SamplerConfig& cfg, Rng rng) {
  cfg.validate();
  if (n_draws < 2)
    throw Error(ErrorKind::config, "need at least 2 approximation draws");
  if (n_inner_burn < 1)
    throw Error(ErrorKind::config, "inner burn-in must be >= 1");
  if (prior.a0.kind != A0Spec::Kind::beta)
    throw Error(ErrorKind::config,
                "approximate_prior_beta requires Beta priors on a0");
  prior.a0.validate(static_cast<Eigen::Index>(historical.size()));

  NppKernelChain chain(historical, prior, cfg);
  const Eigen::Index J = static_cast<Eigen::Index>(historical.size());
  Eigen::MatrixXd draws(n_draws, chain.n_covariates());
  Eigen::VectorXd a0(J);
  for (int l = 0; l < n_draws; ++l) {
    for (Eigen::Index j = 0; j < J; ++j)
      a0[j] = rng.beta(prior.a0.shape1[j], prior.a0.shape2[j]);
    try {
      chain.set_a0(a0);
      for (int it = 0; it < n_inner_burn; ++it) chain.sweep(rng);
    } catch (const Error& e) {
      throw Error(e.kind(), "approximation draw " + std::to_string(l + 1) +
                                ": " + e.what());
    }
    draws.row(l) = chain.beta();
  }
  return draws;
}

Eigen::MatrixXd approximate_prior_beta(
    const std::vector<SurvivalDataset>& historical,
    const IntervalPartition& partition, const PriorSpec& prior, int n_draws,
    int n_inner_burn, const SamplerConfig& cfg, Rng rng) {
  const std::vector<RiskTable> rts = build_tables(historical, partition);
  return approximate_prior_beta(rts, prior, n_draws, n_inner_burn, cfg, rng);
}

MvnMixture fit_single_mvn(const Eigen::MatrixXd& draws) {
  const Eigen::Index L = draws.rows();
  const Eigen::Index P = draws.cols();
  if (L <= P)
    throw Error(ErrorKind::fitting,
                "need more draws than dimensions to fit a normal");
  MvnMixture::Component c;
  c.mean = draws.colwise().mean();
  const Eigen::MatrixXd centered = draws.rowwise() - c.mean.transpose();
  c.cov = centered.transpose() * centered / static_cast<double>(L - 1);
  c.weight = 1.0;
  if (!c.cov.allFinite() || c.cov.diagonal().minCoeff() <= 0.0)
    throw Error(ErrorKind::fitting,
                "sample covariance of the approximation draws is singular; "
                "increase the number of draws");
  try {
    return MvnMixture({c});
  } catch (const Error&) {
    throw Error(ErrorKind::fitting,
                "sample covariance of the approximation draws is singular; "
                "increase the number of draws");
  }
}

PosteriorDraws phm_random_a0(const RiskTable& current,
                             const MvnMixture& prior_beta,
                             const PriorSpec& prior, const SamplerConfig& cfg,
                             Rng rng) {
  cfg.validate();
  if (prior.shared_baseline)
    throw Error(ErrorKind::config,
                "the normalized power prior supports unshared baseline "
                "hazards only");
  if (prior_beta.dim() != current.n_covariates)
    throw Error(ErrorKind::config,
                "mixture dimension does not match the covariate count");
  std::vector<Block> blocks(1);
  blocks[0].rt = &current;
  blocks[0].weight = 1.0;
  blocks[0].lambda_set = 0;
  GibbsSampler sampler(std::move(blocks), prior, cfg, false, &prior_beta);
  PosteriorDraws draws = sampler.run(rng);
  draws.a0_marginalized = true;
  return draws;
}

PosteriorDraws phm_random_a0(const SurvivalDataset& current,
                             const MvnMixture& prior_beta,
                             const IntervalPartition& partition,
                             const PriorSpec& prior, const SamplerConfig& cfg,
                             Rng rng) {
  const RiskTable rt = build_risk_table(current, partition);
  return phm_random_a0(rt, prior_beta, prior, cfg, rng);
}

}  // namespace survpp
