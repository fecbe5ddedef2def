#pragma once

#include <Eigen/Core>
#include <limits>
#include <string>
#include <vector>

#include "survpp/data.hpp"
#include "survpp/model.hpp"
#include "survpp/rng.hpp"

namespace survpp {

enum class EnrollmentDist { uniform, exponential };
enum class CensorshipDist { none, uniform, exponential, constant };

// Data-generation knobs for one hypothetical trial. Parameter meanings:
// uniform -> upper bound of U(0, param); exponential -> rate; constant ->
// the fixed censoring time.
struct TrialDesignConfig {
  int n_subjects = 0;
  int target_events = 0;  // nu, triggers the analysis
  EnrollmentDist enrollment = EnrollmentDist::uniform;
  double enrollment_param = 1.0;
  double randomization_prob = 0.5;
  CensorshipDist censorship = CensorshipDist::none;
  double censorship_param = 0.0;
  double dropout_prob = 0.0;
  double dropout_bound = 0.0;  // dropout times are U(0, bound)
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();

  void validate() const;
};

// Complete-data record for one simulated subject: everything observed if
// follow-up never ended.
struct CompleteSubject {
  double enrollment = 0.0;       // r_i
  Eigen::VectorXd covariates;    // x_i (column 0 = treatment)
  int stratum = 0;               // dense 0-based
  double event_time = 0.0;       // latent t_i
  double censor_time = 0.0;      // latent c_i (+inf when uncensored)
  double observation = 0.0;      // y~_i = min(t_i, c_i)
  int event = 0;                 // nu~_i = 1[t_i <= c_i]
  double elapsed = 0.0;          // e_i = r_i + y~_i
};

// Rows (covariates beyond treatment, stratum) jointly resampled with
// replacement during data generation; built from the pooled historical
// datasets.
struct CovariatePool {
  Eigen::MatrixXd covariates;  // n_pool x P (column 0 unused)
  std::vector<int> strata;
  std::vector<std::string> stratum_labels;
  std::vector<std::string> covariate_names;

  static CovariatePool from_historical(
      const std::vector<SurvivalDataset>& historical);
  Eigen::Index size() const {
    return static_cast<Eigen::Index>(strata.size());
  }
};

// Per-subject complete-data simulation: enrollment, randomized treatment,
// joint covariate/stratum resample from the pool, then the sequential
// piecewise-exponential event-time construction, censorship and dropout.
std::vector<CompleteSubject> simulate_complete_data(
    const TrialDesignConfig& design, const Eigen::VectorXd& beta,
    const BaselineHazards& lambda, const CovariatePool& pool,
    const IntervalPartition& partition, Rng& rng);

// Observed-data construction: the analysis time T is the calendar time of
// the target_events-th event (t_max when fewer events exist), clamped to
// [t_min, t_max]; subjects enrolling at or after T are removed, later
// follow-up is administratively censored at T.
SurvivalDataset construct_observed_data(
    const std::vector<CompleteSubject>& complete, int target_events,
    double t_min, double t_max, std::vector<std::string> stratum_labels,
    std::vector<std::string> covariate_names = {});

}  // namespace survpp
