#pragma once

#include <Eigen/Core>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "survpp/error.hpp"

namespace survpp {

enum class DatasetRole { current, historical };

// Right-censored survival data. Covariate column 0 is the treatment
// indicator. Strata are stored as dense 0-based indices; `stratum_labels`
// maps index -> external label (shared across all datasets of a session).
struct SurvivalDataset {
  Eigen::VectorXd times;             // y_i >= 0
  Eigen::VectorXi events;            // nu_i in {0,1}
  Eigen::MatrixXd covariates;        // n x P
  std::vector<int> strata;           // dense 0-based
  DatasetRole role = DatasetRole::current;
  std::vector<std::string> covariate_names;
  std::vector<std::string> stratum_labels;

  Eigen::Index n() const { return times.size(); }
  Eigen::Index n_covariates() const { return covariates.cols(); }
  int n_strata() const { return static_cast<int>(stratum_labels.size()); }

  // Throws Error(parse/schema) when an invariant is violated.
  void validate() const;
};

// Per-stratum change points 0 = t_0 < t_1 < ... < t_K = inf. Only the
// interior points are stored; n_intervals(s) = interior[s].size() + 1.
struct IntervalPartition {
  std::vector<Eigen::VectorXd> interior;

  int n_strata() const { return static_cast<int>(interior.size()); }
  int n_intervals(int s) const {
    return static_cast<int>(interior[s].size()) + 1;
  }
  double lower(int s, int k) const {
    return k == 0 ? 0.0 : interior[s][k - 1];
  }
  double upper(int s, int k) const {
    return k == n_intervals(s) - 1 ? std::numeric_limits<double>::infinity()
                                   : interior[s][k];
  }
  // Interval index k with t_{k-1} < y <= t_k; y = 0 maps to interval 0.
  int interval_of(int s, double y) const;

  void validate() const;
};

// Sufficient statistics of a dataset under a partition. Exposures and
// interval-event indicators are kept per subject (the r_ik / nu_ik arrays),
// and additionally aggregated by unique covariate pattern, which is what
// makes repeated likelihood evaluation cheap: all sums over subjects
// collapse to sums over patterns.
struct RiskTable {
  // per subject
  std::vector<Eigen::VectorXd> exposure;  // exposure[i] has K_{s_i} entries
  std::vector<int> event_interval;        // -1 when censored
  std::vector<int> stratum;               // dense 0-based
  std::vector<std::vector<int>> stratum_index;  // G_s: subject ids

  // aggregation by unique covariate pattern
  Eigen::MatrixXd patterns;            // U x P unique covariate rows
  std::vector<int> pattern_of;         // per subject
  // [s] is a K_s x U matrix: exposure_by_pattern[s](k, u) = sum of r_ik over
  // subjects in stratum s with pattern u; events_by_pattern likewise counts.
  std::vector<Eigen::MatrixXd> exposure_by_pattern;
  std::vector<Eigen::MatrixXd> events_by_pattern;
  Eigen::VectorXd event_count_by_pattern;  // U: total events per pattern

  Eigen::Index n_subjects = 0;
  Eigen::Index n_covariates = 0;
  int n_strata = 0;
  std::vector<int> n_intervals;  // K_s per stratum
  double total_events = 0.0;
  double total_time = 0.0;

  Eigen::Index n_patterns() const { return patterns.rows(); }
};

// Column-name mapping for delimited ingestion. `label` is the optional
// dataset-label column used to select current vs historical rows.
struct DatasetSchema {
  std::string time;
  std::string event;
  std::string stratum;
  std::vector<std::string> covariates;
  std::string label;  // empty: no label column
};

// Loads one dataset from a comma-separated file with a header row. When
// `select_label` is set, only rows whose label column equals it are read.
// `stratum_labels`, when provided, fixes the external-label -> dense-index
// mapping (so several datasets of a session share one mapping); otherwise
// the mapping is built from the file.
SurvivalDataset load_dataset(
    const std::string& path, const DatasetSchema& schema,
    const std::optional<std::string>& select_label = std::nullopt,
    DatasetRole role = DatasetRole::current,
    const std::vector<std::string>& stratum_labels = {});

// Scans the file for the set of external stratum labels (sorted numerically
// when every label parses as a number, otherwise lexicographically).
std::vector<std::string> scan_stratum_labels(const std::string& path,
                                             const DatasetSchema& schema);

// Default change points: interior points are the k/K_s empirical quantiles
// (inclusive / type-7 convention) of pooled event times per stratum.
// Duplicate quantiles are perturbed to the midpoint between adjacent
// distinct event times; impossible perturbation is a partition error.
IntervalPartition default_partition(
    const std::vector<const SurvivalDataset*>& datasets,
    const std::vector<int>& n_intervals);

RiskTable build_risk_table(const SurvivalDataset& dataset,
                           const IntervalPartition& partition);

// One row per treatment x stratum cell, ordered by (treatment, stratum).
struct SummaryRow {
  double treatment = 0.0;
  int stratum = 0;  // dense 0-based
  std::string stratum_label;
  Eigen::Index sample_size = 0;
  Eigen::Index n_events = 0;
  double risk_time = 0.0;
};

std::vector<SummaryRow> summarize(const SurvivalDataset& dataset);

// Type-7 (inclusive) empirical quantile of a sorted vector.
double quantile_type7(const std::vector<double>& sorted, double p);

}  // namespace survpp
