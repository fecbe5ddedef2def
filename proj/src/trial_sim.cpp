#include "survpp/trial_sim.hpp"

#include <algorithm>
#include <cmath>

namespace survpp {

void TrialDesignConfig::validate() const {
  if (target_events < 1)
    throw Error(ErrorKind::config, "target_events must be >= 1");
  if (n_subjects < target_events)
    throw Error(ErrorKind::config,
                "n_subjects must be at least target_events");
  if (!(enrollment_param > 0.0))
    throw Error(ErrorKind::config, "enrollment parameter must be positive");
  if (randomization_prob < 0.0 || randomization_prob > 1.0)
    throw Error(ErrorKind::config, "randomization_prob must lie in [0, 1]");
  if (censorship != CensorshipDist::none && censorship_param < 0.0)
    throw Error(ErrorKind::config, "censorship parameter must be >= 0");
  if ((censorship == CensorshipDist::uniform ||
       censorship == CensorshipDist::exponential) &&
      !(censorship_param > 0.0))
    throw Error(ErrorKind::config, "censorship parameter must be positive");
  if (dropout_prob < 0.0 || dropout_prob > 1.0)
    throw Error(ErrorKind::config, "dropout_prob must lie in [0, 1]");
  if (dropout_prob > 0.0 && !(dropout_bound > 0.0))
    throw Error(ErrorKind::config,
                "dropout_bound must be positive when dropout_prob > 0");
  if (!(t_min <= t_max))
    throw Error(ErrorKind::config, "need t_min <= t_max");
  if (t_min < 0.0)
    throw Error(ErrorKind::config, "t_min must be >= 0");
}

CovariatePool CovariatePool::from_historical(
    const std::vector<SurvivalDataset>& historical) {
  CovariatePool pool;
  if (historical.empty()) return pool;
  const Eigen::Index P = historical.front().n_covariates();
  Eigen::Index total = 0;
  for (const auto& ds : historical) {
    if (ds.n_covariates() != P)
      throw Error(ErrorKind::config,
                  "historical covariate matrices have different widths");
    total += ds.n();
  }
  pool.covariates.resize(total, P);
  pool.strata.reserve(total);
  Eigen::Index row = 0;
  for (const auto& ds : historical) {
    pool.covariates.middleRows(row, ds.n()) = ds.covariates;
    pool.strata.insert(pool.strata.end(), ds.strata.begin(), ds.strata.end());
    row += ds.n();
  }
  pool.stratum_labels = historical.front().stratum_labels;
  pool.covariate_names = historical.front().covariate_names;
  return pool;
}

std::vector<CompleteSubject> simulate_complete_data(
    const TrialDesignConfig& design, const Eigen::VectorXd& beta,
    const BaselineHazards& lambda, const CovariatePool& pool,
    const IntervalPartition& partition, Rng& rng) {
  design.validate();
  const Eigen::Index P = beta.size();
  const int S = partition.n_strata();
  for (int s = 0; s < S; ++s) {
    if (static_cast<int>(lambda.size()) <= s ||
        lambda[s].size() != partition.n_intervals(s))
      throw Error(ErrorKind::config,
                  "lambda does not match the generation partition");
    if ((lambda[s].array() <= 0.0).any())
      throw Error(ErrorKind::domain, "generating hazards must be positive");
  }
  const bool need_pool = P > 1 || S > 1;
  if (need_pool && pool.size() == 0)
    throw Error(ErrorKind::config,
                "covariate/stratum resampling requires a nonempty pool");

  std::vector<CompleteSubject> out(static_cast<size_t>(design.n_subjects));
  for (auto& subj : out) {
    subj.enrollment = design.enrollment == EnrollmentDist::uniform
                          ? rng.uniform(0.0, design.enrollment_param)
                          : rng.exponential(design.enrollment_param);
    subj.covariates = Eigen::VectorXd::Zero(P);
    subj.covariates[0] = rng.bernoulli(design.randomization_prob) ? 1.0 : 0.0;
    if (need_pool) {
      const Eigen::Index row =
          static_cast<Eigen::Index>(rng.uniform_index(pool.size()));
      for (Eigen::Index j = 1; j < P; ++j)
        subj.covariates[j] = pool.covariates(row, j);
      subj.stratum = pool.strata[static_cast<size_t>(row)];
    } else {
      subj.stratum = 0;
    }

    const double phi = clamped_exp(subj.covariates.dot(beta));
    const int s = subj.stratum;
    const int K = partition.n_intervals(s);
    double t = 0.0;
    for (int k = 0; k < K; ++k) {
      t = partition.lower(s, k) + rng.exponential(lambda[s][k] * phi);
      if (t <= partition.upper(s, k)) break;
    }
    subj.event_time = t;

    double c = std::numeric_limits<double>::infinity();
    switch (design.censorship) {
      case CensorshipDist::none:
        break;
      case CensorshipDist::uniform:
        c = rng.uniform(0.0, design.censorship_param);
        break;
      case CensorshipDist::exponential:
        c = rng.exponential(design.censorship_param);
        break;
      case CensorshipDist::constant:
        c = design.censorship_param;
        break;
    }
    if (design.dropout_prob > 0.0 && rng.bernoulli(design.dropout_prob))
      c = std::min(c, rng.uniform(0.0, design.dropout_bound));
    subj.censor_time = c;

    subj.observation = std::min(subj.event_time, c);
    subj.event = subj.event_time <= c ? 1 : 0;
    subj.elapsed = subj.enrollment + subj.observation;
  }
  return out;
}

SurvivalDataset construct_observed_data(
    const std::vector<CompleteSubject>& complete, int target_events,
    double t_min, double t_max, std::vector<std::string> stratum_labels,
    std::vector<std::string> covariate_names) {
  if (target_events < 1)
    throw Error(ErrorKind::config, "target_events must be >= 1");

  std::vector<double> event_calendar;
  for (const auto& s : complete)
    if (s.event == 1) event_calendar.push_back(s.elapsed);
  double analysis_time = t_max;
  if (static_cast<int>(event_calendar.size()) >= target_events) {
    std::nth_element(event_calendar.begin(),
                     event_calendar.begin() + (target_events - 1),
                     event_calendar.end());
    analysis_time = event_calendar[static_cast<size_t>(target_events - 1)];
  }
  analysis_time = std::min(std::max(analysis_time, t_min), t_max);

  std::vector<size_t> keep;
  for (size_t i = 0; i < complete.size(); ++i)
    if (complete[i].enrollment < analysis_time) keep.push_back(i);

  const Eigen::Index n = static_cast<Eigen::Index>(keep.size());
  const Eigen::Index P =
      complete.empty() ? 1 : complete.front().covariates.size();
  if (stratum_labels.empty()) {
    int S = 1;
    for (const auto& s : complete) S = std::max(S, s.stratum + 1);
    for (int s = 0; s < S; ++s) stratum_labels.push_back(std::to_string(s + 1));
  }
  SurvivalDataset ds;
  ds.role = DatasetRole::current;
  ds.times.resize(n);
  ds.events.resize(n);
  ds.covariates.resize(n, P);
  ds.strata.resize(static_cast<size_t>(n));
  ds.stratum_labels = std::move(stratum_labels);
  ds.covariate_names = std::move(covariate_names);
  if (ds.covariate_names.empty())
    for (Eigen::Index j = 0; j < P; ++j)
      ds.covariate_names.push_back(j == 0 ? "trt"
                                          : "x" + std::to_string(j + 1));

  for (Eigen::Index i = 0; i < n; ++i) {
    const CompleteSubject& s = complete[keep[static_cast<size_t>(i)]];
    if (s.elapsed > analysis_time) {
      ds.times[i] = analysis_time - s.enrollment;
      ds.events[i] = 0;
    } else {
      ds.times[i] = s.observation;
      ds.events[i] = s.event;
    }
    ds.covariates.row(i) = s.covariates;
    ds.strata[static_cast<size_t>(i)] = s.stratum;
  }
  ds.validate();
  return ds;
}

}  // namespace survpp
