// survpp command-line front end: dataset summaries, posterior analysis with
// fixed or random discounting, normalized-power-prior approximation, trial
// simulation, and operating-characteristic estimation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "survpp/design.hpp"
#include "survpp/io.hpp"

namespace fs = std::filesystem;
using survpp::Error;
using survpp::ErrorKind;
using survpp::io::json;

namespace {

// ---------------------------------------------------------------------------
// configuration access with field-path error messages
// ---------------------------------------------------------------------------

class Conf {
 public:
  Conf(const json& value, std::string path) : value_(&value), path_(std::move(path)) {}

  bool has(const std::string& key) const {
    return value_->is_object() && value_->contains(key) &&
           !(*value_)[key].is_null();
  }

  Conf at(const std::string& key) const {
    if (!has(key))
      throw Error(ErrorKind::config, join(key) + ": required field missing");
    return Conf((*value_)[key], join(key));
  }

  std::optional<Conf> maybe(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return Conf((*value_)[key], join(key));
  }

  template <typename T>
  T get() const {
    try {
      return value_->get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorKind::config, path_ + ": unexpected value type");
    }
  }

  template <typename T>
  T get(const std::string& key) const {
    return at(key).get<T>();
  }

  template <typename T>
  T get_or(const std::string& key, T fallback) const {
    if (!has(key)) return fallback;
    return at(key).get<T>();
  }

  // number or the string "inf"
  double get_time_bound(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = *at(key).value_;
    if (v.is_string() && (v.get<std::string>() == "inf" ||
                          v.get<std::string>() == "Inf"))
      return std::numeric_limits<double>::infinity();
    return at(key).get<double>();
  }

  const json& raw() const { return *value_; }
  const std::string& path() const { return path_; }

 private:
  std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  const json* value_;
  std::string path_;
};

json default_config() {
  return json{
      {"data",
       {{"path", ""},
        {"time", "time"},
        {"event", "event"},
        {"stratum", "stratum"},
        {"covariates", json::array({"trt"})},
        {"label", ""},
        {"current", nullptr},
        {"historical", json::array()}}},
      {"partition",
       {{"n_intervals", json::array()},
        {"changepoints", nullptr},
        {"pool", "pooled"}}},
      {"priors",
       {{"beta", {{"type", "normal"}, {"mean", 0.0}, {"var", 1000.0}}},
        {"lambda", {{"type", "gamma"}, {"shape", 1e-5}, {"rate", 1e-5}}},
        {"lambda0", {{"type", "gamma"}, {"shape", 1e-5}, {"rate", 1e-5}}},
        {"a0", json::array()},
        {"a0_beta", {{"shape1", 1.0}, {"shape2", 1.0}}},
        {"shared_baseline", false}}},
      {"sampler",
       {{"n_draws", 10000},
        {"burn_in", 200},
        {"slice_width_beta", 1.0},
        {"slice_width_log_lambda", 1.0},
        {"max_stepout_doublings", 10}}},
      {"approximation", {{"n_draws", 10000}, {"inner_burn", 200}}},
      {"mixture", nullptr},
      {"design",
       {{"n_subjects", 0},
        {"target_events", 0},
        {"enrollment", {{"dist", "uniform"}, {"param", 1.0}}},
        {"randomization_prob", 0.5},
        {"censorship", {{"dist", "none"}, {"param", 0.0}}},
        {"dropout", {{"prob", 0.0}, {"bound", 0.0}}},
        {"t_min", 0.0},
        {"t_max", "inf"},
        {"n_trials", 10000},
        {"max_failure_fraction", 0.01},
        {"hypothesis", {{"delta", 0.0}, {"null", ">="}, {"gamma", 0.975}}},
        {"sampling_prior",
         {{"mode", ""},
          {"beta_file", ""},
          {"lambda_files", json::array()},
          {"point_beta", json::array()},
          {"point_lambda", json::array()},
          {"joint", false}}},
        {"grid", nullptr},
        {"store_trial_probs", false}}},
      {"ci_level", 0.95},
      {"seed", nullptr},
      {"workers", 1},
      {"out", "out"}};
}

void deep_merge(json& base, const json& overlay) {
  if (!overlay.is_object() || !base.is_object()) {
    base = overlay;
    return;
  }
  for (const auto& [key, value] : overlay.items()) {
    if (base.contains(key) && base[key].is_object() && value.is_object())
      deep_merge(base[key], value);
    else
      base[key] = value;
  }
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw Error(ErrorKind::config,
                "--set expects key.path=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // unquoted strings pass through
  }
  json* node = &config;
  size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty())
      throw Error(ErrorKind::config, "--set: empty key in '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

// ---------------------------------------------------------------------------
// building model inputs from the configuration
// ---------------------------------------------------------------------------

struct SessionData {
  std::optional<survpp::SurvivalDataset> current;
  std::vector<survpp::SurvivalDataset> historical;
  survpp::DatasetSchema schema;
};

survpp::DatasetSchema schema_from(const Conf& data) {
  survpp::DatasetSchema schema;
  schema.time = data.get<std::string>("time");
  schema.event = data.get<std::string>("event");
  schema.stratum = data.get<std::string>("stratum");
  schema.covariates = data.get<std::vector<std::string>>("covariates");
  schema.label = data.get_or<std::string>("label", "");
  if (schema.covariates.empty())
    throw Error(ErrorKind::config,
                data.path() + ".covariates: need at least the treatment "
                "column");
  return schema;
}

SessionData load_session(const Conf& root, bool need_current,
                         bool need_historical) {
  const Conf data = root.at("data");
  SessionData session;
  session.schema = schema_from(data);
  const std::string path = data.get<std::string>("path");
  if (path.empty())
    throw Error(ErrorKind::config, "data.path: required field missing");

  const auto historical_labels =
      data.get_or<std::vector<std::string>>("historical", {});
  const bool has_current = data.has("current");
  const auto labels = survpp::scan_stratum_labels(path, session.schema);

  if (has_current) {
    const std::string current_label = data.get<std::string>("current");
    if (current_label.empty()) {
      session.current = survpp::load_dataset(path, session.schema,
                                             std::nullopt,
                                             survpp::DatasetRole::current,
                                             labels);
    } else {
      session.current = survpp::load_dataset(path, session.schema,
                                             current_label,
                                             survpp::DatasetRole::current,
                                             labels);
    }
  }
  for (const auto& l : historical_labels)
    session.historical.push_back(
        survpp::load_dataset(path, session.schema, l,
                             survpp::DatasetRole::historical, labels));

  if (need_current && !session.current)
    throw Error(ErrorKind::config,
                "data.current: this command requires current data");
  if (need_historical && session.historical.empty())
    throw Error(ErrorKind::config,
                "data.historical: this command requires historical data");
  return session;
}

std::vector<int> n_intervals_from(const Conf& root, int n_strata) {
  const auto v = root.at("partition").get_or<std::vector<int>>(
      "n_intervals", {});
  if (v.empty())
    throw Error(ErrorKind::config,
                "partition.n_intervals: required field missing");
  if (static_cast<int>(v.size()) != n_strata)
    throw Error(ErrorKind::config,
                "partition.n_intervals: expected one entry per stratum (" +
                    std::to_string(n_strata) + ")");
  return v;
}

survpp::IntervalPartition partition_from(
    const Conf& root, const SessionData& session, bool historical_pool_only) {
  const Conf part = root.at("partition");
  const int S =
      session.historical.empty()
          ? session.current->n_strata()
          : session.historical.front().n_strata();
  if (const auto cp = part.maybe("changepoints")) {
    const auto lists = cp->get<std::vector<std::vector<double>>>();
    if (static_cast<int>(lists.size()) != S)
      throw Error(ErrorKind::config,
                  "partition.changepoints: expected one list per stratum");
    survpp::IntervalPartition partition;
    for (const auto& pts : lists)
      partition.interior.push_back(Eigen::Map<const Eigen::VectorXd>(
          pts.data(), static_cast<Eigen::Index>(pts.size())));
    partition.validate();
    return partition;
  }
  const auto K = n_intervals_from(root, S);
  std::string pool = part.get_or<std::string>("pool", "pooled");
  if (historical_pool_only) pool = "historical";
  std::vector<const survpp::SurvivalDataset*> sets;
  if (pool == "pooled" && session.current) sets.push_back(&*session.current);
  for (const auto& h : session.historical) sets.push_back(&h);
  if (pool != "pooled" && pool != "historical")
    throw Error(ErrorKind::config,
                "partition.pool: must be 'pooled' or 'historical'");
  return survpp::default_partition(sets, K);
}

survpp::LambdaPrior lambda_prior_from(const Conf& conf,
                                      const std::vector<int>& n_intervals) {
  const std::string type = conf.get_or<std::string>("type", "gamma");
  if (type == "gamma")
    return survpp::LambdaPrior::gamma_iid(n_intervals,
                                          conf.get_or("shape", 1e-5),
                                          conf.get_or("rate", 1e-5));
  if (type == "improper") return survpp::LambdaPrior::improper(n_intervals);
  if (type == "normal-on-log")
    return survpp::LambdaPrior::normal_on_log_iid(
        n_intervals, conf.get_or("mean", 0.0), conf.get_or("sd", 1.0));
  throw Error(ErrorKind::config,
              conf.path() + ".type: unknown lambda prior '" + type + "'");
}

survpp::PriorSpec priors_from(const Conf& root, Eigen::Index P,
                              const std::vector<int>& n_intervals,
                              Eigen::Index n_historical) {
  const Conf priors = root.at("priors");
  survpp::PriorSpec spec;

  const Conf beta = priors.at("beta");
  const std::string beta_type = beta.get_or<std::string>("type", "normal");
  if (beta_type == "normal") {
    spec.beta = survpp::BetaPrior::normal_iid(
        P, beta.get_or("mean", 0.0), std::sqrt(beta.get_or("var", 1000.0)));
  } else if (beta_type == "improper-uniform") {
    spec.beta = survpp::BetaPrior::improper(P);
  } else {
    throw Error(ErrorKind::config,
                "priors.beta.type: unknown prior '" + beta_type + "'");
  }
  spec.beta.validate(P);

  spec.lambda = lambda_prior_from(priors.at("lambda"), n_intervals);
  spec.lambda0 = lambda_prior_from(priors.at("lambda0"), n_intervals);
  spec.lambda.validate(n_intervals);
  spec.lambda0.validate(n_intervals);
  spec.shared_baseline = priors.get_or("shared_baseline", false);

  const auto a0 = priors.get_or<std::vector<double>>("a0", {});
  if (!a0.empty()) {
    spec.a0 = survpp::A0Spec::fixed_vector(Eigen::Map<const Eigen::VectorXd>(
        a0.data(), static_cast<Eigen::Index>(a0.size())));
  } else if (const auto ab = priors.maybe("a0_beta")) {
    spec.a0 = survpp::A0Spec::beta_iid(n_historical,
                                       ab->get_or("shape1", 1.0),
                                       ab->get_or("shape2", 1.0));
  }
  return spec;
}

survpp::SamplerConfig sampler_from(const Conf& root) {
  const Conf s = root.at("sampler");
  survpp::SamplerConfig cfg;
  cfg.n_keep = s.get_or("n_draws", 10000);
  cfg.n_burn = s.get_or("burn_in", 200);
  cfg.slice_width_beta = s.get_or("slice_width_beta", 1.0);
  cfg.slice_width_log_lambda = s.get_or("slice_width_log_lambda", 1.0);
  cfg.max_stepout_doublings = s.get_or("max_stepout_doublings", 10);
  cfg.validate();
  return cfg;
}

survpp::TrialDesignConfig trial_from(const Conf& root) {
  const Conf d = root.at("design");
  survpp::TrialDesignConfig trial;
  trial.n_subjects = d.get_or("n_subjects", 0);
  trial.target_events = d.get_or("target_events", 0);
  const Conf enroll = d.at("enrollment");
  const std::string edist = enroll.get_or<std::string>("dist", "uniform");
  if (edist == "uniform")
    trial.enrollment = survpp::EnrollmentDist::uniform;
  else if (edist == "exponential")
    trial.enrollment = survpp::EnrollmentDist::exponential;
  else
    throw Error(ErrorKind::config,
                "design.enrollment.dist: unknown distribution '" + edist +
                    "'");
  trial.enrollment_param = enroll.get_or("param", 1.0);
  trial.randomization_prob = d.get_or("randomization_prob", 0.5);
  const Conf censor = d.at("censorship");
  const std::string cdist = censor.get_or<std::string>("dist", "none");
  if (cdist == "none")
    trial.censorship = survpp::CensorshipDist::none;
  else if (cdist == "uniform")
    trial.censorship = survpp::CensorshipDist::uniform;
  else if (cdist == "exponential")
    trial.censorship = survpp::CensorshipDist::exponential;
  else if (cdist == "constant")
    trial.censorship = survpp::CensorshipDist::constant;
  else
    throw Error(ErrorKind::config,
                "design.censorship.dist: unknown distribution '" + cdist +
                    "'");
  trial.censorship_param = censor.get_or("param", 0.0);
  const Conf dropout = d.at("dropout");
  trial.dropout_prob = dropout.get_or("prob", 0.0);
  trial.dropout_bound = dropout.get_or("bound", 0.0);
  trial.t_min = d.get_or("t_min", 0.0);
  trial.t_max = d.get_time_bound("t_max",
                                 std::numeric_limits<double>::infinity());
  trial.validate();
  return trial;
}

survpp::HypothesisSpec hypothesis_from(const Conf& root) {
  const Conf h = root.at("design").at("hypothesis");
  survpp::HypothesisSpec hyp;
  hyp.delta = h.get_or("delta", 0.0);
  const std::string null_dir = h.get_or<std::string>("null", ">=");
  if (null_dir == ">=")
    hyp.null_is_geq = true;
  else if (null_dir == "<=")
    hyp.null_is_geq = false;
  else
    throw Error(ErrorKind::config,
                "design.hypothesis.null: must be '>=' or '<='");
  hyp.gamma = h.get_or("gamma", 0.975);
  hyp.validate();
  return hyp;
}

Eigen::VectorXd fixed_a0_from(const Conf& root, Eigen::Index n_historical) {
  const auto a0 = root.at("priors").get_or<std::vector<double>>("a0", {});
  if (a0.empty())
    throw Error(ErrorKind::config,
                "priors.a0: fixed-a0 commands require an a0 vector");
  Eigen::VectorXd v;
  if (a0.size() == 1 && n_historical > 1)
    v = Eigen::VectorXd::Constant(n_historical, a0[0]);
  else
    v = Eigen::Map<const Eigen::VectorXd>(
        a0.data(), static_cast<Eigen::Index>(a0.size()));
  if (v.size() != n_historical)
    throw Error(ErrorKind::config,
                "priors.a0: length " + std::to_string(v.size()) +
                    " does not match " + std::to_string(n_historical) +
                    " historical datasets");
  return v;
}

// Seed resolution: config, else entropy (recorded in the echo either way).
std::uint64_t resolve_seed(json& config) {
  if (!config["seed"].is_null()) return config["seed"].get<std::uint64_t>();
  std::random_device rd;
  const std::uint64_t seed =
      (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  config["seed"] = seed;
  return seed;
}

fs::path ensure_out_dir(const json& config) {
  const fs::path dir = config["out"].get<std::string>();
  fs::create_directories(dir);
  return dir;
}

// Stream namespaces: keep per-command RNG streams disjoint from the
// per-trial streams the design loop derives.
constexpr std::uint64_t kAnalyzeStream = 0xA11CE;
constexpr std::uint64_t kApproxStream = 0xABB0;
constexpr std::uint64_t kElicitStream = 0xE11C;
constexpr std::uint64_t kDesignStream = 0xDE51;
constexpr std::uint64_t kSimulateStream = 0x51AA;

survpp::MvnMixture mixture_from_config(const Conf& root) {
  const Conf mix = root.at("mixture");
  if (mix.raw().is_string())
    return survpp::io::mixture_from_json(
        survpp::io::read_json(mix.get<std::string>()));
  if (mix.raw().is_object() && mix.has("path"))
    return survpp::io::mixture_from_json(
        survpp::io::read_json(mix.get<std::string>("path")));
  return survpp::io::mixture_from_json(mix.raw());
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

int cmd_summarize(json& config) {
  const Conf root(config, "");
  const Conf data = root.at("data");
  const survpp::DatasetSchema schema = schema_from(data);
  const std::string path = data.get<std::string>("path");
  const fs::path out_dir = ensure_out_dir(config);

  std::vector<std::pair<std::string, survpp::SurvivalDataset>> sets;
  const auto labels = survpp::scan_stratum_labels(path, schema);
  std::vector<std::string> dataset_labels;
  if (data.has("current"))
    dataset_labels.push_back(data.get<std::string>("current"));
  for (const auto& l :
       data.get_or<std::vector<std::string>>("historical", {}))
    dataset_labels.push_back(l);
  if (dataset_labels.empty()) {
    sets.emplace_back("all", survpp::load_dataset(path, schema, std::nullopt,
                                                  survpp::DatasetRole::current,
                                                  labels));
  } else {
    for (const auto& l : dataset_labels)
      sets.emplace_back(l, survpp::load_dataset(
                               path, schema, l,
                               survpp::DatasetRole::current, labels));
  }

  json all = json::object();
  std::printf("dataset,treatment,stratum,n,events,risk_time\n");
  for (const auto& [label, ds] : sets) {
    const auto rows = survpp::summarize(ds);
    for (const auto& r : rows)
      std::printf("%s,%g,%s,%lld,%lld,%.1f\n", label.c_str(), r.treatment,
                  r.stratum_label.c_str(),
                  static_cast<long long>(r.sample_size),
                  static_cast<long long>(r.n_events), r.risk_time);
    all[label] = survpp::io::summary_rows_to_json(rows);
    survpp::io::write_summary_csv(
        (out_dir / ("summary_" + label + ".csv")).string(), rows);
  }
  all["config"] = config;
  survpp::io::write_json((out_dir / "summary.json").string(), all);
  return 0;
}

int cmd_analyze(json& config, bool random_a0) {
  const std::uint64_t seed = resolve_seed(config);
  const Conf root(config, "");
  SessionData session = load_session(root, /*need_current=*/false,
                                     /*need_historical=*/!random_a0);
  const bool have_current = session.current.has_value();
  if (random_a0 && !have_current)
    throw Error(ErrorKind::config,
                "data.current: analyze-random requires current data");
  if (!have_current && session.historical.empty())
    throw Error(ErrorKind::config, "data: no datasets selected");

  const survpp::IntervalPartition partition =
      partition_from(root, session, /*historical_pool_only=*/false);
  const int S = partition.n_strata();
  std::vector<int> K(S);
  for (int s = 0; s < S; ++s) K[s] = partition.n_intervals(s);
  const Eigen::Index P = have_current
                             ? session.current->n_covariates()
                             : session.historical.front().n_covariates();
  const survpp::PriorSpec priors = priors_from(
      root, P, K, static_cast<Eigen::Index>(session.historical.size()));
  const survpp::SamplerConfig sampler = sampler_from(root);
  const survpp::Rng master(seed);

  survpp::PosteriorDraws draws;
  json mixture_echo;
  if (random_a0) {
    survpp::MvnMixture mixture;
    if (root.has("mixture")) {
      mixture = mixture_from_config(root);
    } else {
      // no mixture supplied: build the default single-normal approximation
      if (session.historical.empty())
        throw Error(ErrorKind::config,
                    "data.historical: building the beta prior approximation "
                    "requires historical data");
      survpp::PriorSpec approx_priors = priors;
      if (approx_priors.a0.kind != survpp::A0Spec::Kind::beta)
        throw Error(ErrorKind::config,
                    "priors.a0_beta: required for the built-in "
                    "approximation");
      const Conf approx = root.at("approximation");
      // the approximation uses the historical-only partition
      survpp::IntervalPartition hist_partition = partition;
      if (have_current) {
        std::vector<const survpp::SurvivalDataset*> hs;
        for (const auto& h : session.historical) hs.push_back(&h);
        hist_partition = survpp::default_partition(hs, K);
      }
      const Eigen::MatrixXd beta_draws = survpp::approximate_prior_beta(
          session.historical, hist_partition, approx_priors,
          approx.get_or("n_draws", 10000), approx.get_or("inner_burn", 200),
          sampler, master.stream(kApproxStream, 7));
      mixture = survpp::fit_single_mvn(beta_draws);
    }
    mixture_echo = survpp::io::mixture_to_json(mixture);
    draws = survpp::phm_random_a0(*session.current, mixture, partition,
                                  priors, sampler,
                                  master.stream(kAnalyzeStream, 7));
  } else {
    const Eigen::VectorXd a0 = fixed_a0_from(
        root, static_cast<Eigen::Index>(session.historical.size()));
    draws = survpp::phm_fixed_a0(
        have_current ? &*session.current : nullptr, session.historical, a0,
        partition, priors, sampler, master.stream(kAnalyzeStream, 7));
  }

  const fs::path out_dir = ensure_out_dir(config);
  survpp::io::write_draws_csv((out_dir / "draws.csv").string(), draws);
  json summary = survpp::io::summarize_draws(
      draws, root.get_or("ci_level", 0.95));
  json changepoints = json::array();
  for (int s = 0; s < S; ++s) {
    json pts = json::array();
    for (Eigen::Index i = 0; i < partition.interior[s].size(); ++i)
      pts.push_back(partition.interior[s][i]);
    changepoints.push_back(pts);
  }
  summary["changepoints"] = changepoints;
  if (!mixture_echo.is_null()) summary["prior_beta_mvn"] = mixture_echo;
  summary["config"] = config;
  survpp::io::write_json((out_dir / "summary.json").string(), summary);
  std::printf("wrote %s and %s\n", (out_dir / "draws.csv").c_str(),
              (out_dir / "summary.json").c_str());
  return 0;
}

int cmd_approximate_prior(json& config) {
  const std::uint64_t seed = resolve_seed(config);
  const Conf root(config, "");
  SessionData session =
      load_session(root, /*need_current=*/false, /*need_historical=*/true);
  // the approximation is a prior for beta given historical data only
  std::vector<const survpp::SurvivalDataset*> hs;
  for (const auto& h : session.historical) hs.push_back(&h);
  const int S = session.historical.front().n_strata();
  const auto K = n_intervals_from(root, S);
  const survpp::IntervalPartition partition =
      survpp::default_partition(hs, K);
  const Eigen::Index P = session.historical.front().n_covariates();
  survpp::PriorSpec priors = priors_from(
      root, P, K, static_cast<Eigen::Index>(session.historical.size()));
  if (priors.a0.kind != survpp::A0Spec::Kind::beta)
    throw Error(ErrorKind::config,
                "priors.a0_beta: approximate-prior requires Beta "
                "hyperparameters for a0");
  const survpp::SamplerConfig sampler = sampler_from(root);
  const Conf approx = root.at("approximation");
  const survpp::Rng master(seed);
  const Eigen::MatrixXd draws = survpp::approximate_prior_beta(
      session.historical, partition, priors, approx.get_or("n_draws", 10000),
      approx.get_or("inner_burn", 200), sampler,
      master.stream(kApproxStream, 7));
  const survpp::MvnMixture mixture = survpp::fit_single_mvn(draws);

  const fs::path out_dir = ensure_out_dir(config);
  std::vector<std::string> names;
  for (Eigen::Index p = 0; p < draws.cols(); ++p)
    names.push_back("beta_" + std::to_string(p + 1));
  survpp::io::write_matrix_csv((out_dir / "prior_beta_draws.csv").string(),
                               draws, names);
  json mvn = survpp::io::mixture_to_json(mixture);
  mvn["config"] = config;
  survpp::io::write_json((out_dir / "prior_beta_mvn.json").string(), mvn);
  std::printf("wrote %s and %s\n",
              (out_dir / "prior_beta_draws.csv").c_str(),
              (out_dir / "prior_beta_mvn.json").c_str());
  return 0;
}

survpp::SamplingPrior sampling_prior_from(
    const Conf& root, const std::string& mode,
    const std::vector<survpp::SurvivalDataset>& historical,
    const survpp::IntervalPartition& hist_partition,
    const survpp::PriorSpec& priors, const survpp::SamplerConfig& sampler,
    const survpp::Rng& master) {
  const Conf sp = root.at("design").at("sampling_prior");
  if (mode == "default-null" || mode == "default-alternative") {
    survpp::PriorSpec elicit = priors;
    elicit.a0 = survpp::A0Spec::fixed_vector(Eigen::VectorXd::Ones(
        static_cast<Eigen::Index>(historical.size())));
    const survpp::DnDaPriors dnda = survpp::build_default_sampling_priors(
        historical, hist_partition, elicit, sampler,
        master.stream(kElicitStream, 7));
    return mode == "default-null" ? dnda.dn : dnda.da;
  }
  if (mode == "point") {
    const auto beta = sp.get<std::vector<double>>("point_beta");
    const auto lambda = sp.get<std::vector<std::vector<double>>>("point_lambda");
    survpp::BaselineHazards lam;
    for (const auto& v : lambda)
      lam.push_back(Eigen::Map<const Eigen::VectorXd>(
          v.data(), static_cast<Eigen::Index>(v.size())));
    return survpp::build_point_mass_prior(
        Eigen::Map<const Eigen::VectorXd>(
            beta.data(), static_cast<Eigen::Index>(beta.size())),
        lam);
  }
  if (mode == "files") {
    survpp::SamplingPrior prior;
    prior.beta = survpp::io::read_matrix_csv(sp.get<std::string>("beta_file"));
    for (const auto& f : sp.get<std::vector<std::string>>("lambda_files"))
      prior.lambda.push_back(survpp::io::read_matrix_csv(f));
    prior.joint = sp.get_or("joint", false);
    prior.validate();
    return prior;
  }
  throw Error(ErrorKind::config,
              "design.sampling_prior.mode: expected 'default-null', "
              "'default-alternative', 'point', or 'files', got '" +
                  mode + "'");
}

int cmd_design(json& config, bool random_a0) {
  const std::uint64_t seed = resolve_seed(config);
  const Conf root(config, "");
  SessionData session =
      load_session(root, /*need_current=*/false, /*need_historical=*/true);
  const auto& historical = session.historical;
  const int S = historical.front().n_strata();
  const auto K = n_intervals_from(root, S);

  // generation-stage partition: historical-only event quantiles
  std::vector<const survpp::SurvivalDataset*> hs;
  for (const auto& h : historical) hs.push_back(&h);
  const survpp::IntervalPartition gen_partition =
      survpp::default_partition(hs, K);

  const Eigen::Index P = historical.front().n_covariates();
  const survpp::PriorSpec priors = priors_from(
      root, P, K, static_cast<Eigen::Index>(historical.size()));
  const survpp::SamplerConfig sampler = sampler_from(root);
  const survpp::Rng master(seed);
  const Conf design = root.at("design");

  survpp::DesignSpec spec;
  spec.trial = trial_from(root);
  spec.hypothesis = hypothesis_from(root);
  spec.n_intervals = K;
  spec.n_trials = design.get_or("n_trials", 10000);
  spec.workers = root.get_or("workers", 1);
  spec.max_failure_fraction = design.get_or("max_failure_fraction", 0.01);
  if (random_a0) {
    spec.a0_mode = survpp::A0Mode::random;
    if (root.has("mixture")) {
      spec.prior_beta_mvn = mixture_from_config(root);
    } else {
      if (priors.a0.kind != survpp::A0Spec::Kind::beta)
        throw Error(ErrorKind::config,
                    "priors.a0_beta: required for the built-in "
                    "approximation");
      const Conf approx = root.at("approximation");
      const Eigen::MatrixXd beta_draws = survpp::approximate_prior_beta(
          historical, gen_partition, priors, approx.get_or("n_draws", 10000),
          approx.get_or("inner_burn", 200), sampler,
          master.stream(kApproxStream, 7));
      spec.prior_beta_mvn = survpp::fit_single_mvn(beta_draws);
    }
  } else {
    spec.a0_mode = survpp::A0Mode::fixed;
    spec.a0 = fixed_a0_from(root,
                            static_cast<Eigen::Index>(historical.size()));
  }

  const std::string mode =
      design.at("sampling_prior").get_or<std::string>("mode", "");
  std::vector<std::string> modes;
  if (mode == "default-both") {
    modes = {"default-null", "default-alternative"};
  } else {
    modes = {mode};
  }

  // grid of (a0, target_events); absent -> the single configured point
  std::vector<double> grid_a0;
  std::vector<int> grid_events;
  int subjects_per_event = 0;
  if (const auto grid = design.maybe("grid")) {
    grid_a0 = grid->get_or<std::vector<double>>("a0", {});
    grid_events = grid->get_or<std::vector<int>>("target_events", {});
    subjects_per_event = grid->get_or("subjects_per_event", 0);
  }
  if (grid_a0.empty()) grid_a0 = {random_a0 ? -1.0 : spec.a0.mean()};
  if (grid_events.empty()) grid_events = {spec.trial.target_events};

  const fs::path out_dir = ensure_out_dir(config);
  std::ofstream table((out_dir / "oc_table.csv").string());
  table << "sampling_prior,a0,target_events,n_subjects,estimate,mc_se,"
           "n_trials,n_failed\n";

  json runs = json::array();
  for (const std::string& m : modes) {
    const survpp::SamplingPrior sampling = sampling_prior_from(
        root, m, historical, gen_partition, priors, sampler, master);
    for (double a0v : grid_a0) {
      if (!random_a0)
        spec.a0 = Eigen::VectorXd::Constant(
            static_cast<Eigen::Index>(historical.size()), a0v);
      for (int nu : grid_events) {
        survpp::DesignSpec run_spec = spec;
        run_spec.trial.target_events = nu;
        if (subjects_per_event > 0)
          run_spec.trial.n_subjects = subjects_per_event * nu;
        const survpp::DesignResult result =
            survpp::estimate_operating_characteristic(
                historical, run_spec, sampling, gen_partition, priors,
                sampler, master.stream(kDesignStream, 7));
        json run = survpp::io::design_result_to_json(
            result, design.get_or("store_trial_probs", false));
        run["sampling_prior"] = m;
        run["target_events"] = nu;
        run["n_subjects"] = run_spec.trial.n_subjects;
        if (!random_a0) run["a0"] = a0v;
        runs.push_back(run);
        table << m << "," << (random_a0 ? std::string("random")
                                        : std::to_string(a0v))
              << "," << nu << "," << run_spec.trial.n_subjects << ","
              << result.estimate << "," << result.mc_se << ","
              << result.n_trials << "," << result.n_failed << "\n";
        table.flush();
        std::printf("%s a0=%s nu=%d: estimate=%.4f (MC-SE %.4f)\n", m.c_str(),
                    random_a0 ? "random" : std::to_string(a0v).c_str(), nu,
                    result.estimate, result.mc_se);
      }
    }
  }
  json out{{"runs", runs}, {"config", config}};
  if (random_a0)
    out["prior_beta_mvn"] = survpp::io::mixture_to_json(spec.prior_beta_mvn);
  survpp::io::write_json((out_dir / "design.json").string(), out);
  return 0;
}

int cmd_simulate(json& config) {
  const std::uint64_t seed = resolve_seed(config);
  const Conf root(config, "");
  SessionData session =
      load_session(root, /*need_current=*/false, /*need_historical=*/true);
  const auto& historical = session.historical;
  const int S = historical.front().n_strata();
  const auto K = n_intervals_from(root, S);
  std::vector<const survpp::SurvivalDataset*> hs;
  for (const auto& h : historical) hs.push_back(&h);
  const survpp::IntervalPartition gen_partition =
      survpp::default_partition(hs, K);
  const Eigen::Index P = historical.front().n_covariates();
  const survpp::PriorSpec priors = priors_from(
      root, P, K, static_cast<Eigen::Index>(historical.size()));
  const survpp::SamplerConfig sampler = sampler_from(root);
  const survpp::Rng master(seed);
  const Conf design = root.at("design");
  const std::string mode =
      design.at("sampling_prior").get_or<std::string>("mode", "");
  const survpp::SamplingPrior sampling = sampling_prior_from(
      root, mode, historical, gen_partition, priors, sampler, master);
  const survpp::TrialDesignConfig trial = trial_from(root);

  survpp::Rng rng = master.stream(kSimulateStream, 0);
  Eigen::VectorXd beta;
  survpp::BaselineHazards lambda(sampling.lambda.size());
  const auto idx =
      rng.uniform_index(static_cast<std::uint64_t>(sampling.beta.rows()));
  beta = sampling.beta.row(static_cast<Eigen::Index>(idx)).transpose();
  for (size_t s = 0; s < sampling.lambda.size(); ++s) {
    const auto lidx = sampling.joint
                          ? idx
                          : rng.uniform_index(static_cast<std::uint64_t>(
                                sampling.lambda[s].rows()));
    lambda[s] =
        sampling.lambda[s].row(static_cast<Eigen::Index>(lidx)).transpose();
  }
  const survpp::CovariatePool pool =
      survpp::CovariatePool::from_historical(historical);
  const auto complete = survpp::simulate_complete_data(
      trial, beta, lambda, pool, gen_partition, rng);
  const survpp::SurvivalDataset observed = survpp::construct_observed_data(
      complete, trial.target_events, trial.t_min, trial.t_max,
      pool.stratum_labels, pool.covariate_names);

  const fs::path out_dir = ensure_out_dir(config);
  survpp::DatasetSchema schema = session.schema;
  const fs::path out_path = out_dir / "simulated_trial.csv";
  survpp::io::write_dataset_csv(out_path.string(), observed, schema,
                                schema.label.empty() ? "" : "simulated");
  json meta{{"n_subjects_enrolled", observed.n()},
            {"n_events", observed.events.sum()},
            {"generating_beta",
             std::vector<double>(beta.data(), beta.data() + beta.size())},
            {"config", config}};
  survpp::io::write_json((out_dir / "simulated_trial.json").string(), meta);
  std::printf("wrote %s (%lld subjects, %d events)\n", out_path.c_str(),
              static_cast<long long>(observed.n()), observed.events.sum());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "survpp: Bayesian analysis and design of time-to-event trials with "
      "historical-data borrowing (piecewise-constant-hazard proportional "
      "hazards model)"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed_flag;
  std::optional<int> workers_flag;
  std::optional<std::string> out_flag;

  app.add_option("--config", config_path, "JSON configuration file")
      ->expected(1);
  app.add_option("--set", overrides,
                 "override a configuration field, e.g. --set sampler.n_draws=5000");
  app.add_option("--seed", seed_flag, "master seed (overrides config)");
  app.add_option("--workers", workers_flag, "worker threads for design runs");
  app.add_option("--out", out_flag, "output directory");

  auto* summarize = app.add_subcommand(
      "summarize", "event counts and risk time by treatment and stratum");
  auto* analyze_fixed = app.add_subcommand(
      "analyze-fixed", "posterior sampling with fixed a0 discounting");
  auto* analyze_random = app.add_subcommand(
      "analyze-random",
      "posterior sampling with random a0 (normalized power prior)");
  auto* approximate_prior = app.add_subcommand(
      "approximate-prior",
      "draws from the normalized power prior for beta plus a fitted normal");
  auto* design_fixed = app.add_subcommand(
      "design-fixed", "power / type I error by trial simulation, fixed a0");
  auto* design_random = app.add_subcommand(
      "design-random", "power / type I error by trial simulation, random a0");
  auto* simulate = app.add_subcommand(
      "simulate", "export one simulated trial dataset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    json config = default_config();
    if (!config_path.empty())
      deep_merge(config, survpp::io::read_json(config_path));
    for (const auto& o : overrides) apply_override(config, o);
    if (seed_flag) config["seed"] = *seed_flag;
    if (workers_flag) config["workers"] = *workers_flag;
    if (out_flag) config["out"] = *out_flag;

    if (summarize->parsed()) return cmd_summarize(config);
    if (analyze_fixed->parsed()) return cmd_analyze(config, false);
    if (analyze_random->parsed()) return cmd_analyze(config, true);
    if (approximate_prior->parsed()) return cmd_approximate_prior(config);
    if (design_fixed->parsed()) return cmd_design(config, false);
    if (design_random->parsed()) return cmd_design(config, true);
    if (simulate->parsed()) return cmd_simulate(config);
    std::fprintf(stderr, "no command given\n");
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.is_validation() ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
