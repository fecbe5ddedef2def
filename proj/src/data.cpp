#include "survpp/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace survpp {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim whitespace and stray CR
    const auto b = field.find_first_not_of(" \t\r\"");
    const auto e = field.find_last_not_of(" \t\r\"");
    out.push_back(b == std::string::npos ? std::string()
                                         : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& value) {
  if (s.empty()) return false;
  try {
    size_t pos = 0;
    value = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
    return pos == s.size() && std::isfinite(value);
  } catch (const std::exception&) {
    return false;
  }
}

bool numeric_label_order(const std::vector<std::string>& labels,
                         std::vector<std::string>& sorted) {
  std::vector<std::pair<double, std::string>> num;
  for (const auto& l : labels) {
    double v;
    if (!parse_double(l, v)) return false;
    num.emplace_back(v, l);
  }
  std::sort(num.begin(), num.end());
  sorted.clear();
  for (const auto& [v, l] : num) sorted.push_back(l);
  return true;
}

struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvFile read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::schema, "cannot open file: " + path);
  CsvFile csv;
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorKind::schema, "empty file (no header row): " + path);
  csv.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    csv.rows.push_back(split_csv_line(line));
  }
  return csv;
}

int column_index(const CsvFile& csv, const std::string& name,
                 const std::string& path) {
  const auto it = std::find(csv.header.begin(), csv.header.end(), name);
  if (it == csv.header.end())
    throw Error(ErrorKind::schema,
                "missing column '" + name + "' in " + path);
  return static_cast<int>(it - csv.header.begin());
}

}  // namespace

void SurvivalDataset::validate() const {
  const Eigen::Index m = n();
  if (events.size() != m || covariates.rows() != m ||
      static_cast<Eigen::Index>(strata.size()) != m)
    throw Error(ErrorKind::schema, "dataset field lengths disagree");
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(times[i] >= 0.0) || !std::isfinite(times[i]))
      throw Error(ErrorKind::parse, "row " + std::to_string(i) +
                                        ": time must be a nonnegative real");
    if (events[i] != 0 && events[i] != 1)
      throw Error(ErrorKind::parse,
                  "row " + std::to_string(i) + ": event must be 0 or 1");
    if (strata[i] < 0 || strata[i] >= n_strata())
      throw Error(ErrorKind::parse, "row " + std::to_string(i) +
                                        ": stratum index out of range");
  }
}

int IntervalPartition::interval_of(int s, double y) const {
  const Eigen::VectorXd& pts = interior[s];
  if (y <= 0.0) return 0;
  int k = 0;
  while (k < pts.size() && y > pts[k]) ++k;
  return k;
}

void IntervalPartition::validate() const {
  for (int s = 0; s < n_strata(); ++s) {
    double prev = 0.0;
    for (Eigen::Index j = 0; j < interior[s].size(); ++j) {
      if (!(interior[s][j] > prev) || !std::isfinite(interior[s][j]))
        throw Error(ErrorKind::partition,
                    "change points for stratum " + std::to_string(s + 1) +
                        " are not strictly increasing and positive");
      prev = interior[s][j];
    }
  }
}

std::vector<std::string> scan_stratum_labels(const std::string& path,
                                             const DatasetSchema& schema) {
  const CsvFile csv = read_csv(path);
  const int sc = column_index(csv, schema.stratum, path);
  std::set<std::string> seen;
  for (const auto& row : csv.rows)
    if (sc < static_cast<int>(row.size()) && !row[sc].empty())
      seen.insert(row[sc]);
  std::vector<std::string> labels(seen.begin(), seen.end());
  std::vector<std::string> numeric;
  if (numeric_label_order(labels, numeric)) return numeric;
  return labels;  // already lexicographically sorted by the set
}

SurvivalDataset load_dataset(const std::string& path,
                             const DatasetSchema& schema,
                             const std::optional<std::string>& select_label,
                             DatasetRole role,
                             const std::vector<std::string>& stratum_labels) {
  const CsvFile csv = read_csv(path);
  const int tc = column_index(csv, schema.time, path);
  const int ec = column_index(csv, schema.event, path);
  const int sc = column_index(csv, schema.stratum, path);
  std::vector<int> cc;
  for (const auto& name : schema.covariates)
    cc.push_back(column_index(csv, name, path));
  int lc = -1;
  if (select_label) {
    if (schema.label.empty())
      throw Error(ErrorKind::schema,
                  "dataset selection requested but no label column mapped");
    lc = column_index(csv, schema.label, path);
  }

  SurvivalDataset ds;
  ds.role = role;
  ds.covariate_names = schema.covariates;
  ds.stratum_labels =
      stratum_labels.empty() ? scan_stratum_labels(path, schema)
                             : stratum_labels;
  std::map<std::string, int> stratum_of;
  for (size_t s = 0; s < ds.stratum_labels.size(); ++s)
    stratum_of[ds.stratum_labels[s]] = static_cast<int>(s);

  std::vector<double> times;
  std::vector<int> events;
  std::vector<std::vector<double>> covs;
  std::vector<int> strata;

  const int max_col = std::max(
      {tc, ec, sc, lc, cc.empty() ? -1 : *std::max_element(cc.begin(), cc.end())});
  for (size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::string where = "row " + std::to_string(r + 1);
    if (lc >= 0) {
      if (lc >= static_cast<int>(row.size()) || row[lc] != *select_label)
        continue;
    }
    if (max_col >= static_cast<int>(row.size()))
      throw Error(ErrorKind::parse, where + ": fewer fields than header");
    double t;
    if (!parse_double(row[tc], t) || t < 0.0)
      throw Error(ErrorKind::parse,
                  where + ": time value '" + row[tc] + "' is not a "
                  "nonnegative number");
    double ev;
    if (!parse_double(row[ec], ev) || (ev != 0.0 && ev != 1.0))
      throw Error(ErrorKind::parse,
                  where + ": event value '" + row[ec] + "' is not 0/1");
    const auto sit = stratum_of.find(row[sc]);
    if (row[sc].empty() || sit == stratum_of.end())
      throw Error(ErrorKind::parse,
                  where + ": unknown stratum label '" + row[sc] + "'");
    std::vector<double> x(cc.size());
    for (size_t j = 0; j < cc.size(); ++j)
      if (!parse_double(row[cc[j]], x[j]))
        throw Error(ErrorKind::parse, where + ": covariate '" +
                                          schema.covariates[j] +
                                          "' value is missing or non-numeric");
    times.push_back(t);
    events.push_back(static_cast<int>(ev));
    covs.push_back(std::move(x));
    strata.push_back(sit->second);
  }

  const Eigen::Index n = static_cast<Eigen::Index>(times.size());
  ds.times = Eigen::Map<Eigen::VectorXd>(times.data(), n);
  ds.events = Eigen::Map<Eigen::VectorXi>(events.data(), n);
  ds.covariates.resize(n, static_cast<Eigen::Index>(cc.size()));
  for (Eigen::Index i = 0; i < n; ++i)
    for (size_t j = 0; j < cc.size(); ++j)
      ds.covariates(i, static_cast<Eigen::Index>(j)) = covs[i][j];
  ds.strata = std::move(strata);
  ds.validate();
  return ds;
}

double quantile_type7(const std::vector<double>& sorted, double p) {
  const size_t n = sorted.size();
  if (n == 0)
    throw Error(ErrorKind::domain, "quantile of an empty sample");
  if (n == 1) return sorted[0];
  const double h = (static_cast<double>(n) - 1.0) * p;
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

IntervalPartition default_partition(
    const std::vector<const SurvivalDataset*>& datasets,
    const std::vector<int>& n_intervals) {
  if (datasets.empty())
    throw Error(ErrorKind::partition, "no datasets supplied");
  const int S = datasets.front()->n_strata();
  if (static_cast<int>(n_intervals.size()) != S)
    throw Error(ErrorKind::partition,
                "n_intervals has " + std::to_string(n_intervals.size()) +
                    " entries for " + std::to_string(S) + " strata");

  IntervalPartition part;
  part.interior.resize(S);
  for (int s = 0; s < S; ++s) {
    const int K = n_intervals[s];
    if (K < 1)
      throw Error(ErrorKind::partition,
                  "stratum " + std::to_string(s + 1) + ": K must be >= 1");
    std::vector<double> ev_times;
    for (const auto* ds : datasets)
      for (Eigen::Index i = 0; i < ds->n(); ++i)
        if (ds->strata[i] == s && ds->events[i] == 1)
          ev_times.push_back(ds->times[i]);
    if (static_cast<int>(ev_times.size()) < K)
      throw Error(ErrorKind::partition,
                  "stratum " + std::to_string(s + 1) + ": " +
                      std::to_string(ev_times.size()) + " pooled events for " +
                      std::to_string(K) + " intervals");
    std::sort(ev_times.begin(), ev_times.end());

    std::vector<double> pts;
    for (int k = 1; k < K; ++k)
      pts.push_back(quantile_type7(ev_times, static_cast<double>(k) / K));

    // distinct event times, used to resolve duplicated quantiles
    std::vector<double> distinct = ev_times;
    distinct.erase(std::unique(distinct.begin(), distinct.end()),
                   distinct.end());

    Eigen::VectorXd interior(K - 1);
    double prev = 0.0;
    for (int k = 0; k < K - 1; ++k) {
      double c = pts[k];
      if (c <= prev) {
        // duplicated (or zero) quantile: move to the midpoint between the
        // adjacent distinct event times above prev
        auto it = std::upper_bound(distinct.begin(), distinct.end(), prev);
        if (it == distinct.end() || it + 1 == distinct.end())
          throw Error(ErrorKind::partition,
                      "stratum " + std::to_string(s + 1) +
                          ": tied event times leave fewer than " +
                          std::to_string(K) +
                          " distinct interval boundaries; reduce the number "
                          "of intervals");
        c = 0.5 * (*it + *(it + 1));
      }
      interior[k] = c;
      prev = c;
    }
    part.interior[s] = interior;
  }
  part.validate();
  return part;
}

RiskTable build_risk_table(const SurvivalDataset& dataset,
                           const IntervalPartition& partition) {
  if (partition.n_strata() < dataset.n_strata())
    throw Error(ErrorKind::partition,
                "partition covers fewer strata than the dataset");
  RiskTable rt;
  const Eigen::Index n = dataset.n();
  const Eigen::Index P = dataset.n_covariates();
  const int S = dataset.n_strata();
  rt.n_subjects = n;
  rt.n_covariates = P;
  rt.n_strata = S;
  rt.stratum = dataset.strata;
  rt.stratum_index.resize(S);
  rt.n_intervals.resize(S);
  for (int s = 0; s < S; ++s) rt.n_intervals[s] = partition.n_intervals(s);

  // unique covariate patterns
  std::map<std::vector<double>, int> pattern_ids;
  rt.pattern_of.resize(n);
  std::vector<std::vector<double>> pattern_rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> key(P);
    for (Eigen::Index j = 0; j < P; ++j) key[j] = dataset.covariates(i, j);
    auto [it, inserted] =
        pattern_ids.emplace(key, static_cast<int>(pattern_rows.size()));
    if (inserted) pattern_rows.push_back(key);
    rt.pattern_of[i] = it->second;
  }
  const Eigen::Index U = static_cast<Eigen::Index>(pattern_rows.size());
  rt.patterns.resize(U, P);
  for (Eigen::Index u = 0; u < U; ++u)
    for (Eigen::Index j = 0; j < P; ++j) rt.patterns(u, j) = pattern_rows[u][j];

  rt.exposure_by_pattern.resize(S);
  rt.events_by_pattern.resize(S);
  for (int s = 0; s < S; ++s) {
    rt.exposure_by_pattern[s] = Eigen::MatrixXd::Zero(rt.n_intervals[s], U);
    rt.events_by_pattern[s] = Eigen::MatrixXd::Zero(rt.n_intervals[s], U);
  }
  rt.event_count_by_pattern = Eigen::VectorXd::Zero(U);

  rt.exposure.resize(n);
  rt.event_interval.assign(n, -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int s = dataset.strata[i];
    const int K = rt.n_intervals[s];
    const double y = dataset.times[i];
    const int u = rt.pattern_of[i];
    rt.stratum_index[s].push_back(static_cast<int>(i));
    Eigen::VectorXd r(K);
    for (int k = 0; k < K; ++k) {
      const double lo = partition.lower(s, k);
      const double hi = partition.upper(s, k);
      r[k] = std::max(0.0, std::min(y, hi) - lo);
    }
    rt.exposure[i] = r;
    rt.exposure_by_pattern[s].col(u) += r;
    if (dataset.events[i] == 1) {
      // y = 0 events are assigned to the first interval so that the
      // interval-event indicators always sum to nu_i
      const int k = partition.interval_of(s, y);
      rt.event_interval[i] = k;
      rt.events_by_pattern[s](k, u) += 1.0;
      rt.event_count_by_pattern[u] += 1.0;
      rt.total_events += 1.0;
    }
    rt.total_time += y;
  }
  return rt;
}

std::vector<SummaryRow> summarize(const SurvivalDataset& dataset) {
  if (dataset.n() == 0)
    throw Error(ErrorKind::domain, "cannot summarize an empty dataset");
  if (dataset.n_covariates() < 1)
    throw Error(ErrorKind::domain,
                "summary requires a treatment column (covariate 1)");
  std::map<std::pair<double, int>, SummaryRow> cells;
  for (Eigen::Index i = 0; i < dataset.n(); ++i) {
    const double trt = dataset.covariates(i, 0);
    const int s = dataset.strata[i];
    auto& row = cells[{trt, s}];
    row.treatment = trt;
    row.stratum = s;
    row.stratum_label = dataset.stratum_labels[s];
    row.sample_size += 1;
    row.n_events += dataset.events[i];
    row.risk_time += dataset.times[i];
  }
  std::vector<SummaryRow> out;
  out.reserve(cells.size());
  for (auto& [key, row] : cells) out.push_back(row);
  return out;
}

}  // namespace survpp
