#include "survpp/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace survpp::io {

namespace {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> draw_column_names(const PosteriorDraws& draws) {
  std::vector<std::string> names;
  for (Eigen::Index p = 0; p < draws.beta.cols(); ++p)
    names.push_back("beta_" + std::to_string(p + 1));
  for (size_t s = 0; s < draws.lambda.size(); ++s)
    for (Eigen::Index k = 0; k < draws.lambda[s].cols(); ++k)
      names.push_back("lambda_" + std::to_string(s + 1) + "_" +
                      std::to_string(k + 1));
  for (size_t s = 0; s < draws.lambda0.size(); ++s)
    for (Eigen::Index k = 0; k < draws.lambda0[s].cols(); ++k)
      names.push_back("lambda0_" + std::to_string(s + 1) + "_" +
                      std::to_string(k + 1));
  return names;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorKind::config, "cannot write to " + path);
  return out;
}

json parameter_summary(const std::string& name,
                       const Eigen::Ref<const Eigen::VectorXd>& column,
                       double ci_level) {
  const double mean = column.mean();
  const double var =
      (column.array() - mean).square().sum() /
      std::max<double>(1.0, static_cast<double>(column.size() - 1));
  const double tail = 0.5 * (1.0 - ci_level);
  return json{{"name", name},
              {"mean", mean},
              {"sd", std::sqrt(var)},
              {"ci_lower", empirical_quantile(column, tail)},
              {"ci_upper", empirical_quantile(column, 1.0 - tail)}};
}

}  // namespace

double empirical_quantile(const Eigen::VectorXd& draws, double p) {
  std::vector<double> sorted(draws.data(), draws.data() + draws.size());
  std::sort(sorted.begin(), sorted.end());
  return quantile_type7(sorted, p);
}

void write_draws_csv(const std::string& path, const PosteriorDraws& draws) {
  std::ofstream out = open_out(path);
  const auto names = draw_column_names(draws);
  for (size_t c = 0; c < names.size(); ++c)
    out << (c ? "," : "") << names[c];
  out << "\n";
  const Eigen::Index n = draws.beta.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    bool first = true;
    auto emit = [&](double v) {
      out << (first ? "" : ",") << format_full(v);
      first = false;
    };
    for (Eigen::Index p = 0; p < draws.beta.cols(); ++p)
      emit(draws.beta(i, p));
    for (const auto& lam : draws.lambda)
      for (Eigen::Index k = 0; k < lam.cols(); ++k) emit(lam(i, k));
    for (const auto& lam : draws.lambda0)
      for (Eigen::Index k = 0; k < lam.cols(); ++k) emit(lam(i, k));
    out << "\n";
  }
}

json summarize_draws(const PosteriorDraws& draws, double ci_level) {
  if (!(ci_level > 0.0 && ci_level < 1.0))
    throw Error(ErrorKind::config, "credible level must lie in (0, 1)");
  json beta = json::array();
  for (Eigen::Index p = 0; p < draws.beta.cols(); ++p)
    beta.push_back(parameter_summary("beta_" + std::to_string(p + 1),
                                     draws.beta.col(p), ci_level));
  auto hazards = [&](const std::vector<Eigen::MatrixXd>& sets,
                     const std::string& prefix) {
    json out = json::array();
    for (size_t s = 0; s < sets.size(); ++s) {
      json stratum = json::array();
      for (Eigen::Index k = 0; k < sets[s].cols(); ++k)
        stratum.push_back(parameter_summary(
            prefix + "_" + std::to_string(s + 1) + "_" + std::to_string(k + 1),
            sets[s].col(k), ci_level));
      out.push_back(stratum);
    }
    return out;
  };
  json summary{{"ci_level", ci_level},
               {"n_draws", draws.beta.rows()},
               {"beta", beta},
               {"lambda", hazards(draws.lambda, "lambda")},
               {"diagnostics", {{"clamp_events", draws.clamp_events}}}};
  if (!draws.lambda0.empty())
    summary["lambda0"] = hazards(draws.lambda0, "lambda0");
  if (draws.a0_marginalized)
    summary["a0"] = "marginalized";
  else if (draws.a0_fixed.size() > 0)
    summary["a0"] = std::vector<double>(
        draws.a0_fixed.data(), draws.a0_fixed.data() + draws.a0_fixed.size());
  return summary;
}

void write_json(const std::string& path, const json& value) {
  std::ofstream out = open_out(path);
  out << value.dump(2) << "\n";
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::config, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, path + ": " + e.what());
  }
}

json mixture_to_json(const MvnMixture& mix) {
  json components = json::array();
  for (const auto& c : mix.components()) {
    json cov = json::array();
    for (Eigen::Index i = 0; i < c.cov.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < c.cov.cols(); ++j) row.push_back(c.cov(i, j));
      cov.push_back(row);
    }
    components.push_back(
        {{"mean", std::vector<double>(c.mean.data(),
                                      c.mean.data() + c.mean.size())},
         {"cov", cov},
         {"weight", c.weight}});
  }
  return json{{"components", components}};
}

MvnMixture mixture_from_json(const json& value) {
  if (!value.contains("components") || !value["components"].is_array())
    throw Error(ErrorKind::config,
                "mixture JSON must contain a 'components' array");
  std::vector<MvnMixture::Component> components;
  for (const auto& c : value["components"]) {
    MvnMixture::Component comp;
    const auto mean = c.at("mean").get<std::vector<double>>();
    comp.mean = Eigen::Map<const Eigen::VectorXd>(
        mean.data(), static_cast<Eigen::Index>(mean.size()));
    const auto& cov = c.at("cov");
    const Eigen::Index p = static_cast<Eigen::Index>(cov.size());
    comp.cov.resize(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
      const auto row = cov[static_cast<size_t>(i)].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(row.size()) != p)
        throw Error(ErrorKind::config, "mixture covariance is not square");
      for (Eigen::Index j = 0; j < p; ++j) comp.cov(i, j) = row[static_cast<size_t>(j)];
    }
    comp.weight = c.value("weight", 1.0);
    components.push_back(std::move(comp));
  }
  return MvnMixture(std::move(components));
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& column_names) {
  if (static_cast<Eigen::Index>(column_names.size()) != m.cols())
    throw Error(ErrorKind::config, "column name count does not match matrix");
  std::ofstream out = open_out(path);
  for (size_t c = 0; c < column_names.size(); ++c)
    out << (c ? "," : "") << column_names[c];
  out << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << (j ? "," : "") << format_full(m(i, j));
    out << "\n";
  }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::config, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorKind::parse, path + ": empty file");
  std::vector<std::vector<double>> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        row.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw Error(ErrorKind::parse, path + ": line " +
                                          std::to_string(line_no) +
                                          ": non-numeric field '" + field +
                                          "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(ErrorKind::parse,
                  path + ": line " + std::to_string(line_no) +
                      ": inconsistent field count");
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw Error(ErrorKind::parse, path + ": no data rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  return m;
}

void write_dataset_csv(const std::string& path, const SurvivalDataset& ds,
                       const DatasetSchema& schema,
                       const std::string& label_value) {
  std::ofstream out = open_out(path);
  const bool with_label = !schema.label.empty();
  if (with_label) out << schema.label << ",";
  out << schema.time << "," << schema.event << "," << schema.stratum;
  for (const auto& name : schema.covariates) out << "," << name;
  out << "\n";
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    if (with_label) out << label_value << ",";
    out << format_full(ds.times[i]) << "," << ds.events[i] << ","
        << ds.stratum_labels[static_cast<size_t>(ds.strata[i])];
    for (Eigen::Index j = 0; j < ds.n_covariates(); ++j)
      out << "," << format_full(ds.covariates(i, j));
    out << "\n";
  }
}

json design_result_to_json(const DesignResult& result,
                           bool include_trial_probs) {
  json out{{"estimate", result.estimate},
           {"mc_se", result.mc_se},
           {"n_trials", result.n_trials},
           {"n_failed", result.n_failed},
           {"diagnostics", {{"clamp_events", result.clamp_events}}}};
  if (!result.failed_trials.empty()) out["failed_trials"] = result.failed_trials;
  if (include_trial_probs) {
    out["posterior_probs"] = std::vector<double>(
        result.posterior_probs.data(),
        result.posterior_probs.data() + result.posterior_probs.size());
    out["reject"] = result.reject;
  }
  return out;
}

json summary_rows_to_json(const std::vector<SummaryRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"treatment", r.treatment},
                   {"stratum", r.stratum_label},
                   {"n", r.sample_size},
                   {"events", r.n_events},
                   {"risk_time", r.risk_time}});
  return out;
}

void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows) {
  std::ofstream out = open_out(path);
  out << "treatment,stratum,n,events,risk_time\n";
  for (const auto& r : rows) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", r.risk_time);
    out << format_full(r.treatment) << "," << r.stratum_label << ","
        << r.sample_size << "," << r.n_events << "," << buf << "\n";
  }
}

}  // namespace survpp::io
