#include "survpp/model.hpp"

#include <algorithm>
#include <cmath>

namespace survpp {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

BetaPrior BetaPrior::normal_iid(Eigen::Index p, double mean, double sd) {
  BetaPrior prior;
  prior.type = BetaPriorType::normal;
  prior.mean = Eigen::VectorXd::Constant(p, mean);
  prior.sd = Eigen::VectorXd::Constant(p, sd);
  return prior;
}

BetaPrior BetaPrior::improper(Eigen::Index p) {
  BetaPrior prior;
  prior.type = BetaPriorType::improper_uniform;
  prior.mean = Eigen::VectorXd::Zero(p);
  prior.sd = Eigen::VectorXd::Ones(p);
  return prior;
}

double BetaPrior::log_density(const Eigen::VectorXd& beta) const {
  if (type == BetaPriorType::improper_uniform) return 0.0;
  double lp = 0.0;
  for (Eigen::Index p = 0; p < beta.size(); ++p) {
    const double z = (beta[p] - mean[p]) / sd[p];
    lp += -0.5 * (kLog2Pi + z * z) - std::log(sd[p]);
  }
  return lp;
}

void BetaPrior::validate(Eigen::Index p) const {
  if (type == BetaPriorType::improper_uniform) return;
  if (mean.size() != p || sd.size() != p)
    throw Error(ErrorKind::config,
                "beta prior hyperparameters must have one entry per "
                "coefficient");
  if ((sd.array() <= 0.0).any())
    throw Error(ErrorKind::config, "beta prior sd must be positive");
}

LambdaPrior LambdaPrior::gamma_iid(const std::vector<int>& n_intervals,
                                   double shape, double rate) {
  LambdaPrior prior;
  prior.type = LambdaPriorType::gamma;
  for (int K : n_intervals) {
    prior.shape.push_back(Eigen::VectorXd::Constant(K, shape));
    prior.rate.push_back(Eigen::VectorXd::Constant(K, rate));
  }
  return prior;
}

LambdaPrior LambdaPrior::improper(const std::vector<int>& n_intervals) {
  LambdaPrior prior;
  prior.type = LambdaPriorType::improper;
  for (int K : n_intervals) {
    prior.shape.push_back(Eigen::VectorXd::Zero(K));
    prior.rate.push_back(Eigen::VectorXd::Zero(K));
  }
  return prior;
}

LambdaPrior LambdaPrior::normal_on_log_iid(const std::vector<int>& n_intervals,
                                           double mean, double sd) {
  LambdaPrior prior;
  prior.type = LambdaPriorType::normal_on_log;
  for (int K : n_intervals) {
    prior.log_mean.push_back(Eigen::VectorXd::Constant(K, mean));
    prior.log_sd.push_back(Eigen::VectorXd::Constant(K, sd));
  }
  return prior;
}

void LambdaPrior::validate(const std::vector<int>& n_intervals) const {
  const size_t S = n_intervals.size();
  auto check = [&](const std::vector<Eigen::VectorXd>& v, const char* name,
                   bool positive) {
    if (v.size() != S)
      throw Error(ErrorKind::config,
                  std::string("lambda prior ") + name +
                      " must have one vector per stratum");
    for (size_t s = 0; s < S; ++s) {
      if (v[s].size() != n_intervals[s])
        throw Error(ErrorKind::config,
                    std::string("lambda prior ") + name + " for stratum " +
                        std::to_string(s + 1) + " has the wrong length");
      if (positive && (v[s].array() <= 0.0).any())
        throw Error(ErrorKind::config, std::string("lambda prior ") + name +
                                           " entries must be positive");
    }
  };
  switch (type) {
    case LambdaPriorType::gamma:
      check(shape, "shape", true);
      check(rate, "rate", true);
      break;
    case LambdaPriorType::improper:
      break;
    case LambdaPriorType::normal_on_log:
      check(log_mean, "log-mean", false);
      check(log_sd, "log-sd", true);
      break;
  }
}

double LambdaPrior::gamma_shape(int s, int k) const {
  return type == LambdaPriorType::improper ? 0.0 : shape[s][k];
}

double LambdaPrior::gamma_rate(int s, int k) const {
  return type == LambdaPriorType::improper ? 0.0 : rate[s][k];
}

A0Spec A0Spec::fixed_vector(Eigen::VectorXd a0) {
  A0Spec spec;
  spec.kind = Kind::fixed;
  spec.fixed = std::move(a0);
  return spec;
}

A0Spec A0Spec::beta_iid(Eigen::Index n_datasets, double u, double v) {
  A0Spec spec;
  spec.kind = Kind::beta;
  spec.shape1 = Eigen::VectorXd::Constant(n_datasets, u);
  spec.shape2 = Eigen::VectorXd::Constant(n_datasets, v);
  return spec;
}

void A0Spec::validate(Eigen::Index n_datasets) const {
  if (kind == Kind::fixed) {
    if (fixed.size() != n_datasets)
      throw Error(ErrorKind::config,
                  "a0 vector length " + std::to_string(fixed.size()) +
                      " does not match " + std::to_string(n_datasets) +
                      " historical datasets");
    if ((fixed.array() < 0.0).any() || (fixed.array() > 1.0).any())
      throw Error(ErrorKind::domain, "fixed a0 entries must lie in [0, 1]");
  } else {
    if (shape1.size() != n_datasets || shape2.size() != n_datasets)
      throw Error(ErrorKind::config,
                  "a0 beta hyperparameters must have one entry per "
                  "historical dataset");
    if ((shape1.array() <= 0.0).any() || (shape2.array() <= 0.0).any())
      throw Error(ErrorKind::config,
                  "a0 beta hyperparameters must be positive");
  }
}

PriorSpec PriorSpec::defaults(Eigen::Index p,
                              const std::vector<int>& n_intervals) {
  PriorSpec spec;
  spec.beta = BetaPrior::normal_iid(p, 0.0, std::sqrt(1000.0));
  spec.lambda = LambdaPrior::gamma_iid(n_intervals, 1e-5, 1e-5);
  spec.lambda0 = LambdaPrior::gamma_iid(n_intervals, 1e-5, 1e-5);
  spec.a0 = A0Spec::fixed_vector(Eigen::VectorXd());
  return spec;
}

EvalDiagnostics& eval_diagnostics() {
  thread_local EvalDiagnostics diag;
  return diag;
}

double clamped_exp(double eta) {
  if (eta > 700.0) {
    ++eval_diagnostics().clamp_events;
    eta = 700.0;
  } else if (eta < -700.0) {
    ++eval_diagnostics().clamp_events;
    eta = -700.0;
  }
  return std::exp(eta);
}

Eigen::VectorXd pattern_linear_predictors(const RiskTable& rt,
                                          const Eigen::VectorXd& beta) {
  return rt.patterns * beta;
}

double log_likelihood(const Eigen::VectorXd& beta,
                      const BaselineHazards& lambda, const RiskTable& rt) {
  if (static_cast<int>(lambda.size()) < rt.n_strata)
    throw Error(ErrorKind::domain, "lambda has fewer strata than the data");
  if (beta.size() != rt.n_covariates)
    throw Error(ErrorKind::domain, "beta length does not match covariates");

  const Eigen::VectorXd eta = pattern_linear_predictors(rt, beta);
  Eigen::VectorXd phi(eta.size());
  for (Eigen::Index u = 0; u < eta.size(); ++u) phi[u] = clamped_exp(eta[u]);

  double ll = rt.event_count_by_pattern.dot(eta);
  for (int s = 0; s < rt.n_strata; ++s) {
    const int K = rt.n_intervals[s];
    if (lambda[s].size() != K)
      throw Error(ErrorKind::domain,
                  "lambda stratum " + std::to_string(s + 1) +
                      " has the wrong number of intervals");
    for (int k = 0; k < K; ++k) {
      const double lam = lambda[s][k];
      if (!(lam > 0.0))
        throw Error(ErrorKind::domain, "baseline hazards must be positive");
      const double d = rt.events_by_pattern[s].row(k).sum();
      const double w = rt.exposure_by_pattern[s].row(k).dot(phi);
      ll += d * std::log(lam) - lam * w;
    }
  }
  return ll;
}

double log_power_prior_beta(const Eigen::VectorXd& beta,
                            const BaselineHazards& lambda0,
                            const std::vector<RiskTable>& historical,
                            const Eigen::VectorXd& a0,
                            const PriorSpec& prior) {
  if (a0.size() != static_cast<Eigen::Index>(historical.size()))
    throw Error(ErrorKind::domain,
                "a0 must have one entry per historical dataset");
  if ((a0.array() < 0.0).any() || (a0.array() > 1.0).any())
    throw Error(ErrorKind::domain, "a0 entries must lie in [0, 1]");
  double lp = prior.beta.log_density(beta);
  for (size_t j = 0; j < historical.size(); ++j)
    if (a0[static_cast<Eigen::Index>(j)] > 0.0)
      lp += a0[static_cast<Eigen::Index>(j)] *
            log_likelihood(beta, lambda0, historical[j]);
  return lp;
}

GammaParams lambda_full_conditional(int s, int k, const Eigen::VectorXd& beta,
                                    const RiskTable* current,
                                    const std::vector<RiskTable>& historical,
                                    const Eigen::VectorXd& a0,
                                    const PriorSpec& prior, HazardSet which) {
  const LambdaPrior& lp = which == HazardSet::historical_unshared
                              ? prior.lambda0
                              : prior.lambda;
  if (lp.type == LambdaPriorType::normal_on_log)
    throw Error(ErrorKind::domain,
                "no conjugate conditional under the normal-on-log prior");

  GammaParams out;
  out.shape = lp.gamma_shape(s, k);
  out.rate = lp.gamma_rate(s, k);

  const bool use_current = which != HazardSet::historical_unshared;
  const bool use_historical = which != HazardSet::current_unshared;

  if (use_current && current != nullptr && s < current->n_strata) {
    const Eigen::VectorXd eta = pattern_linear_predictors(*current, beta);
    Eigen::VectorXd phi(eta.size());
    for (Eigen::Index u = 0; u < eta.size(); ++u)
      phi[u] = clamped_exp(eta[u]);
    out.shape += current->events_by_pattern[s].row(k).sum();
    out.rate += current->exposure_by_pattern[s].row(k).dot(phi);
  }
  if (use_historical) {
    for (size_t j = 0; j < historical.size(); ++j) {
      const double w = a0[static_cast<Eigen::Index>(j)];
      if (w == 0.0) continue;
      const RiskTable& rt = historical[j];
      if (s >= rt.n_strata) continue;
      const Eigen::VectorXd eta = pattern_linear_predictors(rt, beta);
      Eigen::VectorXd phi(eta.size());
      for (Eigen::Index u = 0; u < eta.size(); ++u)
        phi[u] = clamped_exp(eta[u]);
      out.shape += w * rt.events_by_pattern[s].row(k).sum();
      out.rate += w * rt.exposure_by_pattern[s].row(k).dot(phi);
    }
  }
  if (!(out.shape > 0.0))
    throw Error(ErrorKind::degenerate,
                "full conditional for stratum " + std::to_string(s + 1) +
                    ", interval " + std::to_string(k + 1) +
                    " has shape <= 0 (no events under an improper prior); "
                    "use a proper Gamma prior or merge intervals");
  return out;
}

double log_npp_beta_kernel(const Eigen::VectorXd& beta,
                           const Eigen::VectorXd& a0,
                           const std::vector<RiskTable>& historical,
                           const PriorSpec& prior) {
  if (prior.beta.type != BetaPriorType::normal)
    throw Error(ErrorKind::config,
                "the normalized power prior requires a normal initial prior "
                "on beta");
  if (prior.lambda0.type != LambdaPriorType::gamma)
    throw Error(ErrorKind::config,
                "the normalized power prior requires Gamma priors on "
                "lambda0");
  if (historical.empty())
    throw Error(ErrorKind::domain, "no historical datasets");
  if (a0.size() != static_cast<Eigen::Index>(historical.size()))
    throw Error(ErrorKind::domain,
                "a0 must have one entry per historical dataset");

  const int S = historical.front().n_strata;
  double lp = prior.beta.log_density(beta);

  // event terms and per-dataset pattern rates
  std::vector<Eigen::VectorXd> phis(historical.size());
  for (size_t j = 0; j < historical.size(); ++j) {
    const RiskTable& rt = historical[j];
    const Eigen::VectorXd eta = pattern_linear_predictors(rt, beta);
    Eigen::VectorXd phi(eta.size());
    for (Eigen::Index u = 0; u < eta.size(); ++u)
      phi[u] = clamped_exp(eta[u]);
    phis[j] = phi;
    lp += a0[static_cast<Eigen::Index>(j)] *
          rt.event_count_by_pattern.dot(eta);
  }

  for (int s = 0; s < S; ++s) {
    const int K = historical.front().n_intervals[s];
    for (int k = 0; k < K; ++k) {
      double p_sk = prior.lambda0.gamma_shape(s, k);
      double q_sk = prior.lambda0.gamma_rate(s, k);
      for (size_t j = 0; j < historical.size(); ++j) {
        const double w = a0[static_cast<Eigen::Index>(j)];
        if (w == 0.0) continue;
        const RiskTable& rt = historical[j];
        if (s >= rt.n_strata) continue;
        p_sk += w * rt.events_by_pattern[s].row(k).sum();
        q_sk += w * rt.exposure_by_pattern[s].row(k).dot(phis[j]);
      }
      if (!(q_sk > 0.0))
        throw Error(ErrorKind::domain,
                    "q_sk <= 0 in the normalized power prior kernel");
      lp += -p_sk * std::log(q_sk);
    }
  }
  return lp;
}

MvnMixture::MvnMixture(std::vector<Component> components)
    : components_(std::move(components)) {
  if (components_.empty())
    throw Error(ErrorKind::config, "mixture must have at least one component");
  const Eigen::Index p = components_[0].mean.size();
  double total_weight = 0.0;
  for (const auto& c : components_) {
    if (c.mean.size() != p || c.cov.rows() != p || c.cov.cols() != p)
      throw Error(ErrorKind::config, "mixture component dimensions disagree");
    if (!(c.weight > 0.0))
      throw Error(ErrorKind::config, "mixture weights must be positive");
    if (!c.cov.isApprox(c.cov.transpose(), 1e-10))
      throw Error(ErrorKind::config,
                  "mixture covariance must be symmetric");
    total_weight += c.weight;
  }
  for (auto& c : components_) {
    c.weight /= total_weight;
    Eigen::LLT<Eigen::MatrixXd> llt(c.cov);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorKind::config,
                  "mixture covariance is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    double log_det_half = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) log_det_half += std::log(L(i, i));
    chol_.push_back(L);
    log_norm_.push_back(-0.5 * static_cast<double>(p) * kLog2Pi -
                        log_det_half);
    log_weight_.push_back(std::log(c.weight));
  }
}

double MvnMixture::log_density(const Eigen::VectorXd& x) const {
  if (components_.empty())
    throw Error(ErrorKind::domain, "empty mixture");
  if (x.size() != dim())
    throw Error(ErrorKind::domain, "point dimension does not match mixture");
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(components_.size());
  for (size_t c = 0; c < components_.size(); ++c) {
    const Eigen::VectorXd z =
        chol_[c].triangularView<Eigen::Lower>().solve(x - components_[c].mean);
    terms[c] = log_weight_[c] + log_norm_[c] - 0.5 * z.squaredNorm();
    max_term = std::max(max_term, terms[c]);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc);
}

double log_mixture_density(const Eigen::VectorXd& beta,
                           const MvnMixture& mix) {
  return mix.log_density(beta);
}

}  // namespace survpp
