#include "lcwm/experiments.hpp"

#include "lcwm/gibbs_io.hpp"
#include "lcwm/iris.hpp"
#include "lcwm/parallel.hpp"
#include "lcwm/params_json.hpp"
#include "lcwm/simulate.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lcwm {

namespace {

std::size_t to_size(Index i) { return static_cast<std::size_t>(i); }

// Stream ids within one experiment seed.
constexpr std::uint64_t kSimulateStream = 1;
constexpr std::uint64_t kAmputateStream = 2;
constexpr std::uint64_t kTruthStream = 3;
constexpr std::uint64_t kRunStream = 100;
constexpr std::uint64_t kEvalStream = 200;

struct Task {
  Method method;
  std::string scenario;
  std::vector<Index> inputs;
};

ScaleSettings resolve(const ExperimentOptions& opts) {
  ScaleSettings s = scale_settings(opts.scale);
  if (opts.calibration_replicates)
    s.calibration_replicates = *opts.calibration_replicates;
  if (opts.kl_samples)
    s.kl_samples = *opts.kl_samples;
  if (opts.max_sweeps)
    s.max_sweeps = *opts.max_sweeps;
  if (s.max_sweeps <= s.burn_in)
    throw std::invalid_argument("max sweeps must exceed the burn-in");
  return s;
}

SamplerConfig sampler_config(const ScaleSettings& s, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.burn_in = s.burn_in;
  cfg.target_ess = s.target_ess;
  cfg.max_sweeps = s.max_sweeps;
  cfg.seed = seed;
  cfg.store_imputations = 1;
  cfg.store_params = false;
  return cfg;
}

// Index of the most responsible component of `truth` for each row of `y`.
class Classifier {
 public:
  explicit Classifier(const FmmParams& truth) : eval_(truth), buf_(to_size(truth.g())) {}

  Index operator()(const Eigen::Ref<const Vector>& y) {
    eval_.log_joint_terms(y, buf_);
    Index best = 0;
    for (std::size_t k = 1; k < buf_.size(); ++k)
      if (buf_[k] > buf_[to_size(best)])
        best = static_cast<Index>(k);
    return best;
  }

 private:
  FmmEvaluator eval_;
  std::vector<double> buf_;
};

struct RunOutput {
  MethodRow row;
  Dataset completed;
};

RunOutput run_task(const Task& task, const Dataset& amputated, const ScaleSettings& settings,
                   const ExperimentOptions& opts, std::uint64_t seed, std::uint64_t stream,
                   const FmmParams* share_truth) {
  RngStream rng(seed, stream);
  BaselineConfig bcfg;
  bcfg.method = task.method;
  bcfg.seed = seed;
  const SamplerConfig cfg = sampler_config(settings, seed);

  std::vector<double> share_sum;
  Index share_draws = 0;
  DrawObserver observer;
  std::optional<Classifier> classify;
  if (share_truth) {
    classify.emplace(*share_truth);
    share_sum.assign(to_size(share_truth->g()), 0.0);
    observer = [&](const GibbsState& state, const MixtureData& data) {
      if (data.n_missing() == 0)
        return;
      std::vector<double> counts(share_sum.size(), 0.0);
      for (Index k = 0; k < data.n_missing(); ++k)
        counts[to_size((*classify)(state.y_mis.row(k).transpose()))] += 1.0;
      for (std::size_t g = 0; g < counts.size(); ++g)
        share_sum[g] += counts[g] / static_cast<double>(data.n_missing());
      ++share_draws;
    };
  }

  ImputationResult res = impute(amputated, task.inputs, bcfg, cfg, rng, opts.g_max, observer);
  RunOutput out;
  out.row.method = to_string(task.method);
  out.row.scenario = task.scenario;
  if (res.draws) {
    out.row.sweeps = res.draws->sweeps_run;
    out.row.ess = res.draws->ess;
    out.row.below_target = res.draws->below_target;
    out.row.g_saturated = res.draws->g_saturated;
  }
  out.completed = res.completed.front();

  if (share_truth) {
    if (share_draws == 0) {
      // pmm: classify the completed dataset itself.
      const auto miss = amputated.missing_rows();
      if (!miss.empty()) {
        const Matrix y = out.completed.outputs();
        for (Index r : miss)
          share_sum[to_size((*classify)(y.row(r).transpose()))] += 1.0 / static_cast<double>(miss.size());
        share_draws = 1;
      }
    }
    for (double& s : share_sum)
      s /= static_cast<double>(std::max<Index>(share_draws, 1));
    out.row.imputed_shares = share_sum;
  }
  return out;
}

std::vector<double> label_shares(const Dataset& ds, bool missing, Index g) {
  std::vector<double> out(to_size(g), 0.0);
  if (!ds.labels)
    return out;
  double total = 0.0;
  for (Index i = 0; i < ds.rows(); ++i) {
    if (ds.missing[to_size(i)] != missing)
      continue;
    out[to_size((*ds.labels)[to_size(i)])] += 1.0;
    total += 1.0;
  }
  if (total > 0.0)
    for (double& v : out)
      v /= total;
  return out;
}

void run_tasks(ExperimentResult& res, const std::vector<Task>& tasks, const ScaleSettings& settings,
               const ExperimentOptions& opts, const FmmParams* share_truth) {
  std::vector<RunOutput> outs(tasks.size());
  parallel_for(
      tasks.size(),
      [&](std::size_t k) {
        outs[k] = run_task(tasks[k], res.amputated, settings, opts, res.seed, kRunStream + k, share_truth);
      },
      opts.workers);
  for (auto& o : outs) {
    res.completed.push_back({o.row.method, o.row.scenario, o.completed});
    res.rows.push_back(std::move(o.row));
  }
}

void evaluate_rows(ExperimentResult& res, const EvaluationConfig& ecfg, const ExperimentOptions& opts) {
  const std::size_t n = res.completed.size();
  std::vector<KlReport> reports(n);
  parallel_for(
      n,
      [&](std::size_t k) {
        RngStream rng(res.seed, kEvalStream + k);
        reports[k] = evaluate_imputation(res.completed[k].data, res.truth, ecfg, rng);
      },
      opts.workers);
  for (std::size_t k = 0; k < n; ++k) {
    res.rows[k].kl = reports[k].kl_mc;
    res.rows[k].mc_stderr = reports[k].mc_stderr;
  }
}

MethodRow named_row(const std::string& method) {
  MethodRow row;
  row.method = method;
  row.scenario = "-";
  return row;
}

void add_check(ExperimentResult& res, const std::string& name, bool pass, const std::string& detail) {
  res.checks.push_back({name, pass, detail});
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

void immutability_check(ExperimentResult& res) {
  bool ok = true;
  for (const auto& c : res.completed)
    ok = ok && observed_cells_unchanged(res.amputated, c.data) && c.data.n_missing() == 0;
  add_check(res, "observed_cells_unchanged", ok, "all completed datasets");
}

} // namespace

Scale scale_from_string(const std::string& s) {
  if (s == "desk")
    return Scale::desk;
  if (s == "full")
    return Scale::full;
  throw std::invalid_argument("unknown scale '" + s + "'");
}

std::string to_string(Scale s) { return s == Scale::desk ? "desk" : "full"; }

ScaleSettings scale_settings(Scale s) {
  if (s == Scale::desk)
    return {2000, 200.0, 12000, 500, 100000};
  return {10000, 1000.0, 60000, 10000, 100000};
}

const MethodRow& ExperimentResult::row(const std::string& method, const std::string& scenario) const {
  for (const auto& r : rows)
    if (r.method == method && r.scenario == scenario)
      return r;
  throw std::invalid_argument("no result row for " + method + " / " + scenario);
}

bool observed_cells_unchanged(const Dataset& reference, const Dataset& completed) {
  if (reference.rows() != completed.rows() || reference.cols() != completed.cols())
    return false;
  for (Index i = 0; i < reference.rows(); ++i)
    for (Index c = 0; c < reference.cols(); ++c) {
      const double a = reference.values(i, c);
      if (std::isnan(a))
        continue;
      const double b = completed.values(i, c);
      if (std::memcmp(&a, &b, sizeof(double)) != 0)
        return false;
    }
  return true;
}

ExperimentResult run_sim_table2(std::uint64_t seed, const ExperimentOptions& opts) {
  ExperimentResult res;
  res.experiment = "sim-table2";
  res.seed = seed;
  res.scale = opts.scale;
  res.settings = resolve(opts);

  const FmmParams joint = sim_preset_params();
  RngStream sim_rng(seed, kSimulateStream);
  res.original = simulate_fmm(joint, kSimPresetRows, sim_rng, sim_preset_columns(), sim_preset_roles());
  RngStream amp_rng(seed, kAmputateStream);
  auto amp = amputate_mar(res.original, kSimPresetMarRates, amp_rng);
  res.amputated = std::move(amp.data);
  res.warnings = std::move(amp.warnings);
  const std::vector<Index> y_idx{2, 3};
  res.truth = joint.marginal(y_idx);
  res.observed_shares = label_shares(res.amputated, false, 2);
  res.missing_shares = label_shares(res.amputated, true, 2);

  CalibrationConfig cal;
  cal.rows = kSimPresetRows;
  cal.replicates = res.settings.calibration_replicates;
  cal.kl_samples = res.settings.kl_samples;
  cal.em.g = 2;
  RngStream cal_rng(seed, kTruthStream);
  res.interval = kl_quantile_interval(res.truth, cal, cal_rng);

  std::vector<Task> tasks{{Method::mean, "-", {}}};
  for (Method m : {Method::cwm, Method::pmm, Method::norm}) {
    tasks.push_back({m, "x1", {0}});
    tasks.push_back({m, "x2", {1}});
    tasks.push_back({m, "x1x2", {0, 1}});
  }
  run_tasks(res, tasks, res.settings, opts, &res.truth);

  // Reference rows: the complete data and the observed rows alone.
  res.completed.insert(res.completed.begin(), {"com", "-", res.original});
  res.rows.insert(res.rows.begin(), named_row("com"));
  EvaluationConfig ecfg;
  ecfg.em.g = 2;
  ecfg.kl_samples = res.settings.kl_samples;
  evaluate_rows(res, ecfg, opts);
  {
    RngStream rng(seed, kEvalStream + 99);
    const KlReport obs = evaluate_observed(res.amputated, res.truth, ecfg, rng);
    MethodRow row = named_row("obs");
    row.kl = obs.kl_mc;
    row.mc_stderr = obs.mc_stderr;
    res.rows.insert(res.rows.begin() + 1, row);
  }
  for (auto& r : res.rows)
    r.relative = relative_distance(r.kl, res.interval->hi);

  auto kl = [&](const std::string& m, const std::string& s) { return res.row(m, s).kl; };
  add_check(res, "cwm_x1_gt_x2", kl("cwm", "x1") > kl("cwm", "x2"),
            fmt(kl("cwm", "x1")) + " > " + fmt(kl("cwm", "x2")));
  add_check(res, "cwm_x1_gt_x1x2", kl("cwm", "x1") > kl("cwm", "x1x2"),
            fmt(kl("cwm", "x1")) + " > " + fmt(kl("cwm", "x1x2")));
  add_check(res, "cwm_le_norm_x2", kl("cwm", "x2") <= kl("norm", "x2"),
            fmt(kl("cwm", "x2")) + " <= " + fmt(kl("norm", "x2")));
  add_check(res, "cwm_le_norm_x1x2", kl("cwm", "x1x2") <= kl("norm", "x1x2"),
            fmt(kl("cwm", "x1x2")) + " <= " + fmt(kl("norm", "x1x2")));
  const double mean_rel = res.row("mean").relative.ratio;
  add_check(res, "mean_relative_gt_10", mean_rel > 10.0, fmt(mean_rel) + " > 10");
  for (const char* m : {"pmm", "norm"})
    add_check(res, std::string(m) + "_x2_lt_x1", kl(m, "x2") < kl(m, "x1"),
              fmt(kl(m, "x2")) + " < " + fmt(kl(m, "x1")));
  const auto& cwm_sh = res.row("cwm", "x1x2").imputed_shares;
  add_check(res, "cwm_x1x2_shares", std::abs(cwm_sh[0] - 0.225) <= 0.05 && std::abs(cwm_sh[1] - 0.775) <= 0.05,
            "(" + fmt(cwm_sh[0]) + ", " + fmt(cwm_sh[1]) + ") vs (0.225, 0.775) +- 0.05");
  const auto& mean_sh = res.row("mean").imputed_shares;
  add_check(res, "mean_shares", std::abs(mean_sh[0] - 0.699) <= 0.05 && std::abs(mean_sh[1] - 0.301) <= 0.05,
            "(" + fmt(mean_sh[0]) + ", " + fmt(mean_sh[1]) + ") vs (0.699, 0.301) +- 0.05");
  add_check(res, "interval_hi_in_bracket", res.interval->hi >= 0.006 && res.interval->hi <= 0.017,
            fmt(res.interval->hi) + " in [0.006, 0.017]");
  immutability_check(res);
  return res;
}

ExperimentResult run_iris(IrisMechanism mech, std::uint64_t seed, const ExperimentOptions& opts) {
  ExperimentResult res;
  res.experiment = mech == IrisMechanism::mar ? "iris-mar" : "iris-mnar";
  res.seed = seed;
  res.scale = opts.scale;
  res.settings = resolve(opts);
  res.original = iris_dataset();

  RngStream amp_rng(seed, kAmputateStream);
  auto amp = mech == IrisMechanism::mar ? amputate_mar(res.original, kIrisMarRates, amp_rng)
                                        : amputate_mnar(res.original, -20.4, 3.0, "Sepal.Length", amp_rng);
  res.amputated = std::move(amp.data);
  res.warnings = std::move(amp.warnings);
  res.observed_shares = label_shares(res.amputated, false, 3);
  res.missing_shares = label_shares(res.amputated, true, 3);

  EmConfig em;
  em.g = 3;
  RngStream truth_rng(seed, kTruthStream);
  res.truth = fit_gmm_em(res.original.outputs(), em, truth_rng).params;

  const auto inputs = res.amputated.roles.input_idx;
  std::vector<Task> tasks{{Method::mean, "-", {}},
                          {Method::cwm, "-", inputs},
                          {Method::pmm, "-", inputs},
                          {Method::norm, "-", inputs}};
  run_tasks(res, tasks, res.settings, opts, nullptr);

  EvaluationConfig ecfg;
  ecfg.em = em;
  ecfg.kl_samples = res.settings.kl_samples;
  evaluate_rows(res, ecfg, opts);
  RngStream rng(seed, kEvalStream + 99);
  const KlReport obs = evaluate_observed(res.amputated, res.truth, ecfg, rng);
  MethodRow obs_row = named_row("obs");
  obs_row.kl = obs.kl_mc;
  obs_row.mc_stderr = obs.mc_stderr;
  res.rows.insert(res.rows.begin(), obs_row);
  for (auto& r : res.rows)
    r.relative = ratio_to_reference(r.kl, obs_row.kl);

  auto kl = [&](const std::string& m) { return res.row(m).kl; };
  auto less = [&](const std::string& a, const std::string& b) {
    add_check(res, a + "_lt_" + b, kl(a) < kl(b), fmt(kl(a)) + " < " + fmt(kl(b)));
  };
  if (mech == IrisMechanism::mar) {
    less("cwm", "pmm");
    less("pmm", "mean");
    less("cwm", "norm");
    less("norm", "mean");
    const double rel = res.row("cwm").relative.ratio;
    add_check(res, "cwm_relative_lt_1", rel < 1.0, fmt(rel) + " < 1");
  } else {
    bool unique = res.row("cwm").relative.ratio < 1.0;
    std::string detail = "cwm " + fmt(res.row("cwm").relative.ratio);
    for (const char* m : {"mean", "pmm", "norm"}) {
      unique = unique && res.row(m).relative.ratio >= 1.0;
      detail += ", " + std::string(m) + " " + fmt(res.row(m).relative.ratio);
    }
    add_check(res, "cwm_unique_relative_lt_1", unique, detail);
  }
  immutability_check(res);
  return res;
}

ExperimentResult run_experiment(const std::string& name, std::uint64_t seed, const ExperimentOptions& opts) {
  if (name == "sim-table2")
    return run_sim_table2(seed, opts);
  if (name == "iris-mar")
    return run_iris(IrisMechanism::mar, seed, opts);
  if (name == "iris-mnar")
    return run_iris(IrisMechanism::mnar, seed, opts);
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

nlohmann::json experiment_manifest(const ExperimentResult& result, const ExperimentOptions& opts) {
  nlohmann::json j;
  j["tool"] = "lcwm";
  j["version"] = kVersion;
  j["command"] = "reproduce";
  j["experiment"] = result.experiment;
  j["seed"] = result.seed;
  j["scale"] = to_string(result.scale);
  j["settings"] = {{"burn_in", result.settings.burn_in},
                   {"target_ess", result.settings.target_ess},
                   {"max_sweeps", result.settings.max_sweeps},
                   {"calibration_replicates", result.settings.calibration_replicates},
                   {"kl_samples", result.settings.kl_samples},
                   {"g_max", opts.g_max}};
  j["rng"] = {{"engine", "mt19937_64"},
              {"streams",
               {{"simulate", kSimulateStream},
                {"amputate", kAmputateStream},
                {"truth_and_calibration", kTruthStream},
                {"method_runs", "100 + task index"},
                {"evaluation", "200 + task index, 299 for observed rows"}}}};
  j["rows"] = result.original.rows();
  j["missing_rows"] = result.amputated.n_missing();
  j["observed_label_shares"] = result.observed_shares;
  j["missing_label_shares"] = result.missing_shares;
  j["truth"] = to_json(result.truth);
  if (result.interval)
    j["interval"] = {{"lo", result.interval->lo},
                     {"hi", result.interval->hi},
                     {"level", result.interval->level},
                     {"replicates", result.interval->replicates},
                     {"failures", result.interval->failures},
                     {"low_n", result.interval->low_n}};
  j["warnings"] = result.warnings;
  return j;
}

void write_experiment(const ExperimentResult& result, const ExperimentOptions& opts, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "completed");
  {
    std::ofstream out(dir / "table.csv");
    out << "method,scenario,kl_mc,mc_stderr,relative_distance,ratio,imputed_share_1,imputed_share_2,sweeps,ess,"
           "below_target,g_saturated\n";
    for (const auto& r : result.rows) {
      out << r.method << ',' << r.scenario << ',' << format_double(r.kl) << ',' << format_double(r.mc_stderr) << ','
          << r.relative.str() << ',' << format_double(r.relative.ratio);
      for (std::size_t k = 0; k < 2; ++k)
        out << ',' << (k < r.imputed_shares.size() ? format_double(r.imputed_shares[k]) : "");
      out << ',' << r.sweeps << ',' << format_double(r.ess) << ',' << (r.below_target ? 1 : 0) << ','
          << (r.g_saturated ? 1 : 0) << '\n';
    }
  }
  {
    std::ofstream out(dir / "checks.csv");
    out << "check,result,detail\n";
    for (const auto& c : result.checks)
      out << c.name << ',' << (c.pass ? "PASS" : "FAIL") << ",\"" << c.detail << "\"\n";
  }
  write_csv(result.original, dir / "original.csv");
  write_csv(result.amputated, dir / "amputated.csv");
  for (const auto& c : result.completed) {
    std::string name = c.method;
    if (c.scenario != "-")
      name += "_" + c.scenario;
    write_csv(c.data, dir / "completed" / (name + ".csv"));
  }
  if (opts.points) {
    std::ofstream out(dir / "points.csv");
    out << "method,scenario,projection,x_var,y_var,x,y,status\n";
    const auto& cols = result.amputated.columns;
    auto emit = [&](const std::string& method, const std::string& scenario, const Dataset& ds, Index row,
                    const char* status) {
      for (std::size_t a = 0; a < cols.size(); ++a)
        for (std::size_t b = a + 1; b < cols.size(); ++b)
          out << method << ',' << scenario << ',' << cols[a] << ':' << cols[b] << ',' << cols[a] << ',' << cols[b]
              << ',' << format_double(ds.values(row, static_cast<Index>(a))) << ','
              << format_double(ds.values(row, static_cast<Index>(b))) << ',' << status << '\n';
    };
    for (Index i = 0; i < result.amputated.rows(); ++i)
      emit("data", "-", result.original, i, result.amputated.missing[to_size(i)] ? "missing" : "observed");
    for (const auto& c : result.completed) {
      if (c.method == "com")
        continue;
      for (Index i : result.amputated.missing_rows())
        emit(c.method, c.scenario, c.data, i, "imputed");
    }
  }
  write_json(experiment_manifest(result, opts), dir / "manifest.json");
}

} // namespace lcwm
