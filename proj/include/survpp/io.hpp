#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "survpp/data.hpp"
#include "survpp/design.hpp"
#include "survpp/model.hpp"
#include "survpp/samplers.hpp"

namespace survpp::io {

using nlohmann::json;

// Draws as delimited text: one row per kept iteration, named columns
// (beta_<p>, lambda_<s>_<k>, lambda0_<s>_<k>), full double precision.
void write_draws_csv(const std::string& path, const PosteriorDraws& draws);

// Means, SDs and central credible intervals at `ci_level` for every
// parameter, plus the a0 echo and diagnostics.
json summarize_draws(const PosteriorDraws& draws, double ci_level);

void write_json(const std::string& path, const json& value);
json read_json(const std::string& path);

json mixture_to_json(const MvnMixture& mix);
MvnMixture mixture_from_json(const json& value);

// Numeric matrix with a header row, comma separated.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& column_names);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

// Datasets are written in the same delimited format load_dataset ingests.
void write_dataset_csv(const std::string& path, const SurvivalDataset& ds,
                       const DatasetSchema& schema,
                       const std::string& label_value = "");

json design_result_to_json(const DesignResult& result,
                           bool include_trial_probs);

json summary_rows_to_json(const std::vector<SummaryRow>& rows);
void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows);

double empirical_quantile(const Eigen::VectorXd& draws, double p);

}  // namespace survpp::io
