#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "survpp/data.hpp"
#include "survpp/error.hpp"

namespace survpp {

// Baseline hazards, one strictly positive vector of length K_s per stratum.
using BaselineHazards = std::vector<Eigen::VectorXd>;

enum class BetaPriorType { improper_uniform, normal };

// Initial prior for the regression coefficients: improper uniform or
// independent normals per component.
struct BetaPrior {
  BetaPriorType type = BetaPriorType::normal;
  Eigen::VectorXd mean;  // per component
  Eigen::VectorXd sd;

  static BetaPrior normal_iid(Eigen::Index p, double mean, double sd);
  static BetaPrior improper(Eigen::Index p);

  // Full log density (with normalizing constants) for the normal case;
  // zero for the improper uniform.
  double log_density(const Eigen::VectorXd& beta) const;
  void validate(Eigen::Index p) const;
};

enum class LambdaPriorType { gamma, normal_on_log, improper };

// Prior for a set of baseline hazards. Hyperparameters are stored per
// stratum and interval.
struct LambdaPrior {
  LambdaPriorType type = LambdaPriorType::gamma;
  std::vector<Eigen::VectorXd> shape;     // gamma shape a_sk
  std::vector<Eigen::VectorXd> rate;      // gamma rate b_sk
  std::vector<Eigen::VectorXd> log_mean;  // normal on log(lambda)
  std::vector<Eigen::VectorXd> log_sd;

  static LambdaPrior gamma_iid(const std::vector<int>& n_intervals,
                               double shape, double rate);
  static LambdaPrior improper(const std::vector<int>& n_intervals);
  static LambdaPrior normal_on_log_iid(const std::vector<int>& n_intervals,
                                       double mean, double sd);
  void validate(const std::vector<int>& n_intervals) const;

  double gamma_shape(int s, int k) const;
  double gamma_rate(int s, int k) const;
};

// Discounting specification: a fixed vector a_0 (one weight per historical
// dataset) or independent Beta(u_j, v_j) priors.
struct A0Spec {
  enum class Kind { fixed, beta };
  Kind kind = Kind::fixed;
  Eigen::VectorXd fixed;
  Eigen::VectorXd shape1;
  Eigen::VectorXd shape2;

  static A0Spec fixed_vector(Eigen::VectorXd a0);
  static A0Spec beta_iid(Eigen::Index n_datasets, double u, double v);
  void validate(Eigen::Index n_datasets) const;
};

struct PriorSpec {
  BetaPrior beta;
  LambdaPrior lambda;
  LambdaPrior lambda0;
  A0Spec a0;
  bool shared_baseline = false;

  // Package defaults: N(0, 10^3) on each beta component, Gamma(1e-5, 1e-5)
  // on every hazard.
  static PriorSpec defaults(Eigen::Index p,
                            const std::vector<int>& n_intervals);
};

// Warning counters for numerical guards. Thread-local; samplers fold their
// thread's counts into the result diagnostics.
struct EvalDiagnostics {
  std::uint64_t clamp_events = 0;
};
EvalDiagnostics& eval_diagnostics();

// exp(eta) with the linear predictor clamped to +-700; clamps are counted
// in eval_diagnostics().
double clamped_exp(double eta);

// Linear predictors x_u' beta for the unique covariate patterns of rt.
Eigen::VectorXd pattern_linear_predictors(const RiskTable& rt,
                                          const Eigen::VectorXd& beta);

// PWCH-PH log likelihood (constant of proportionality dropped: the
// per-subject event-density constants that do not involve beta or lambda).
double log_likelihood(const Eigen::VectorXd& beta,
                      const BaselineHazards& lambda, const RiskTable& rt);

// Log of the fixed-a0 power prior for beta, including the beta-free lambda0
// terms, so the same value also serves the lambda0 full conditionals:
// sum_j a0_j * log_likelihood(beta, lambda0, rt_j) + log pi_0(beta).
double log_power_prior_beta(const Eigen::VectorXd& beta,
                            const BaselineHazards& lambda0,
                            const std::vector<RiskTable>& historical,
                            const Eigen::VectorXd& a0, const PriorSpec& prior);

struct GammaParams {
  double shape = 0.0;
  double rate = 0.0;
};

// Which hazard set a full conditional refers to.
enum class HazardSet { current_unshared, historical_unshared, shared };

// Closed-form Gamma full conditional for one baseline hazard. `current` may
// be null (elicitation runs with no current data). Throws
// Error(degenerate) when the improper prior leaves shape <= 0, and
// Error(domain) under the normal-on-log prior (not conjugate).
GammaParams lambda_full_conditional(int s, int k, const Eigen::VectorXd& beta,
                                    const RiskTable* current,
                                    const std::vector<RiskTable>& historical,
                                    const Eigen::VectorXd& a0,
                                    const PriorSpec& prior, HazardSet which);

// Log kernel of the conditional normalized power prior for beta given a0,
// with lambda0 integrated out under its Gamma prior:
//   sum_sk -p_sk log q_sk + sum_j a0_j sum_i nu_i x_i'beta
//   + sum_p log N(beta_p; mu_p, sigma_p^2),
// where p_sk and q_sk are the Gamma full-conditional parameters of
// lambda_0sk. Requires Gamma priors on lambda0 and a normal initial prior
// on beta.
double log_npp_beta_kernel(const Eigen::VectorXd& beta,
                           const Eigen::VectorXd& a0,
                           const std::vector<RiskTable>& historical,
                           const PriorSpec& prior);

// Finite mixture of multivariate normals. Covariances are validated as
// symmetric positive definite at construction.
class MvnMixture {
 public:
  struct Component {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    double weight = 1.0;
  };

  MvnMixture() = default;
  explicit MvnMixture(std::vector<Component> components);

  double log_density(const Eigen::VectorXd& x) const;
  Eigen::Index dim() const { return components_.empty() ? 0 : components_[0].mean.size(); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(components_.size()); }
  const std::vector<Component>& components() const { return components_; }

 private:
  std::vector<Component> components_;
  std::vector<Eigen::MatrixXd> chol_;      // lower Cholesky factors
  std::vector<double> log_norm_;           // -P/2 log(2 pi) - log|L|
  std::vector<double> log_weight_;
};

double log_mixture_density(const Eigen::VectorXd& beta, const MvnMixture& mix);

}  // namespace survpp
