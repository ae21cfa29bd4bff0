#include "lcwm/baselines.hpp"
#include "lcwm/evaluation.hpp"
#include "lcwm/experiments.hpp"
#include "lcwm/gibbs_io.hpp"
#include "lcwm/iris.hpp"
#include "lcwm/params_json.hpp"
#include "lcwm/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace lcwm;

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_string())
    return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v)
      out += (out.empty() ? "" : ",") + json_scalar(e);
    return out;
  }
  return v.dump();
}

// Moves the keys of a JSON config file in front of the explicit flags so the
// explicit ones win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config.empty())
    return args;
  std::ifstream in(config);
  if (!in)
    throw UsageError("cannot open config file " + config);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file " + config + ": " + e.what());
  }
  if (!j.is_object())
    throw UsageError("config file must hold a JSON object");
  std::vector<std::string> extra;
  for (const auto& [key, value] : j.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>())
        extra.push_back("--" + key);
      continue;
    }
    extra.push_back("--" + key);
    extra.push_back(json_scalar(value));
  }
  auto pos = std::find_if(args.begin(), args.end(), [](const std::string& a) { return !a.empty() && a[0] != '-'; });
  if (pos != args.end())
    ++pos;
  args.insert(pos, extra.begin(), extra.end());
  return args;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::vector<std::string>& args,
                    std::uint64_t seed, nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json j;
  j["tool"] = "lcwm";
  j["version"] = kVersion;
  j["command"] = command;
  j["args"] = args;
  j["seed"] = seed;
  j["rng"] = "mt19937_64";
  for (auto& [k, v] : extra.items())
    j[k] = v;
  write_json(j, dir / "manifest.json");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster-weighted missing-data imputation", "lcwm"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  std::string config_file;
  app.add_option("--config", config_file, "JSON file with default flag values");

  std::uint64_t seed = kDefaultSeed;
  std::string out_dir = "out";

  // simulate
  auto* sim = app.add_subcommand("simulate", "Draw a labelled dataset from a Gaussian mixture");
  std::string preset = "paper-sim";
  std::string params_path;
  Index sim_n = kSimPresetRows;
  Index sim_g = 0;
  std::vector<std::string> sim_inputs, sim_outputs;
  sim->add_option("--preset", preset, "paper-sim")->check(CLI::IsMember({"paper-sim"}));
  sim->add_option("--params", params_path, "FMM parameter JSON (overrides the preset)")->check(CLI::ExistingFile);
  sim->add_option("--n", sim_n, "Rows")->check(CLI::PositiveNumber);
  sim->add_option("--g", sim_g, "Keep only the first g preset components")->check(CLI::PositiveNumber);
  sim->add_option("--inputs", sim_inputs, "Input column names for --params")->delimiter(',');
  sim->add_option("--outputs", sim_outputs, "Output column names for --params")->delimiter(',');
  sim->add_option("--seed", seed);
  sim->add_option("--out", out_dir);

  // amputate
  auto* amp = app.add_subcommand("amputate", "Mask output blocks under MAR or MNAR");
  std::string amp_data;
  std::string mechanism = "mar";
  std::vector<double> rates;
  double beta0 = -20.4, beta1 = 3.0;
  std::string driver = "Sepal.Length";
  amp->add_option("--data", amp_data, "CSV with a metadata sidecar, or 'iris'")->required();
  amp->add_option("--mechanism", mechanism)->check(CLI::IsMember({"mar", "mnar"}));
  amp->add_option("--rates", rates, "Per-label masking rates")->delimiter(',')->check(CLI::Range(0.0, 1.0));
  amp->add_option("--beta0", beta0);
  amp->add_option("--beta1", beta1);
  amp->add_option("--driver", driver);
  amp->add_option("--seed", seed);
  amp->add_option("--out", out_dir);

  // impute
  auto* imp = app.add_subcommand("impute", "Complete a dataset with cwm, mean, norm or pmm");
  std::string imp_data;
  std::string method = "cwm";
  std::vector<std::string> imp_inputs;
  SamplerConfig scfg;
  BaselineConfig bcfg;
  Index g_max = 10;
  imp->add_option("--data", imp_data)->required();
  imp->add_option("--method", method)->check(CLI::IsMember({"cwm", "mean", "norm", "pmm"}));
  imp->add_option("--inputs", imp_inputs, "Auxiliary input columns (default: all inputs)")->delimiter(',');
  imp->add_option("--m", scfg.store_imputations, "Completed datasets to write")->check(CLI::PositiveNumber);
  imp->add_option("--burn-in", scfg.burn_in)->check(CLI::NonNegativeNumber);
  imp->add_option("--target-ess", scfg.target_ess)->check(CLI::PositiveNumber);
  imp->add_option("--max-sweeps", scfg.max_sweeps)->check(CLI::PositiveNumber);
  imp->add_option("--thin", scfg.thin)->check(CLI::PositiveNumber);
  imp->add_option("--g-max", g_max)->check(CLI::PositiveNumber);
  imp->add_option("--donors", bcfg.pmm_donors)->check(CLI::PositiveNumber);
  imp->add_option("--cycles", bcfg.pmm_cycles)->check(CLI::PositiveNumber);
  imp->add_option("--seed", seed);
  imp->add_option("--out", out_dir);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "KL divergence of completed data against a reference mixture");
  std::vector<std::string> ev_data;
  std::string truth_path;
  Index ev_g = 2;
  Index kl_samples = 100000;
  Index cal_reps = 500;
  Index cal_rows = 0;
  double interval_hi = 0.0;
  double level = 0.95;
  ev->add_option("--data", ev_data, "Completed CSV files")->required()->delimiter(',');
  ev->add_option("--truth", truth_path, "Reference FMM JSON on the output columns")->required();
  ev->add_option("--g", ev_g)->check(CLI::PositiveNumber);
  ev->add_option("--kl-samples", kl_samples)->check(CLI::Range(Index{1000}, Index{1} << 40));
  ev->add_option("--calibration-replicates", cal_reps)->check(CLI::PositiveNumber);
  ev->add_option("--calibration-rows", cal_rows, "Rows per replicate (default: dataset rows)");
  ev->add_option("--interval-hi", interval_hi, "Use this upper limit instead of calibrating");
  ev->add_option("--level", level)->check(CLI::Range(0.5, 1.0));
  ev->add_option("--seed", seed);
  ev->add_option("--out", out_dir);

  // reproduce
  auto* rep = app.add_subcommand("reproduce", "Run a full experiment and write its table and checks");
  std::string experiment;
  std::string scale = "desk";
  ExperimentOptions xopts;
  Index rep_reps = 0, rep_kl = 0, rep_sweeps = 0;
  bool no_points = false;
  rep->add_option("--experiment", experiment)->required()->check(CLI::IsMember({"sim-table2", "iris-mar", "iris-mnar"}));
  rep->add_option("--scale", scale)->check(CLI::IsMember({"desk", "full"}));
  rep->add_option("--calibration-replicates", rep_reps)->check(CLI::PositiveNumber);
  rep->add_option("--kl-samples", rep_kl)->check(CLI::Range(Index{1000}, Index{1} << 40));
  rep->add_option("--max-sweeps", rep_sweeps)->check(CLI::PositiveNumber);
  rep->add_option("--g-max", xopts.g_max)->check(CLI::PositiveNumber);
  rep->add_option("--workers", xopts.workers);
  rep->add_flag("--no-points", no_points, "Skip the long-format plot CSV");
  rep->add_option("--seed", seed);
  rep->add_option("--out", out_dir);

  for (auto* sub : {sim, amp, imp, ev, rep})
    for (auto* opt : sub->get_options())
      opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  for (auto* opt : {imp->get_option("--inputs"), sim->get_option("--inputs"), sim->get_option("--outputs"),
                    amp->get_option("--rates"), ev->get_option("--data")})
    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  std::string stage = "setup";
  try {
    const fs::path out(out_dir);
    fs::create_directories(out);

    if (*sim) {
      stage = "simulate";
      FmmParams params;
      std::vector<std::string> columns;
      ColumnRoles roles;
      if (!params_path.empty()) {
        params = read_fmm(params_path);
        if (sim_outputs.empty())
          throw UsageError("--params needs --outputs (and optionally --inputs)");
        columns = sim_inputs;
        columns.insert(columns.end(), sim_outputs.begin(), sim_outputs.end());
        roles = ColumnRoles::leading(static_cast<Index>(sim_inputs.size()), static_cast<Index>(sim_outputs.size()));
      } else {
        params = sim_preset_params();
        columns = sim_preset_columns();
        roles = sim_preset_roles();
      }
      if (sim_g > 0) {
        if (sim_g > params.g())
          throw UsageError("--g exceeds the number of components");
        FmmParams kept;
        kept.alpha = params.alpha.head(sim_g) / params.alpha.head(sim_g).sum();
        kept.mu.assign(params.mu.begin(), params.mu.begin() + sim_g);
        kept.sigma.assign(params.sigma.begin(), params.sigma.begin() + sim_g);
        params = std::move(kept);
      }
      RngStream rng(seed, 1);
      const Dataset ds = simulate_fmm(params, sim_n, rng, columns, roles);
      write_csv(ds, out / "data.csv");
      write_json(to_json(params), out / "params.json");
      std::vector<Index> y_idx = roles.output_idx;
      write_json(to_json(params.marginal(y_idx)), out / "truth_outputs.json");
      write_manifest(out, "simulate", args, seed, {{"outputs", {"data.csv", "params.json", "truth_outputs.json"}}});
    } else if (*amp) {
      stage = "amputate";
      const Dataset ds = amp_data == "iris" ? iris_dataset() : load_dataset(amp_data);
      RngStream rng(seed, 2);
      Amputation res;
      if (mechanism == "mar") {
        if (rates.empty())
          throw UsageError("--mechanism mar needs --rates");
        res = amputate_mar(ds, rates, rng);
      } else {
        res = amputate_mnar(ds, beta0, beta1, driver, rng);
      }
      write_csv(res.data, out / "amputated.csv");
      if (amp_data == "iris")
        write_csv(ds, out / "original.csv");
      for (const auto& w : res.warnings)
        std::cerr << "warning: " << w << '\n';
      std::cout << res.data.n_missing() << " of " << res.data.rows() << " rows masked\n";
      write_manifest(out, "amputate", args, seed,
                     {{"missing_rows", res.data.n_missing()}, {"warnings", res.warnings}, {"outputs", {"amputated.csv"}}});
    } else if (*imp) {
      stage = "impute";
      const Dataset ds = imp_data == "iris" ? iris_dataset() : load_dataset(imp_data);
      std::vector<Index> inputs = imp_inputs.empty() ? ds.roles.input_idx : ds.column_indices(imp_inputs);
      bcfg.method = method_from_string(method);
      bcfg.seed = seed;
      scfg.seed = seed;
      if (bcfg.method == Method::mean)
        inputs.clear();
      RngStream rng(seed, 100);
      const ImputationResult res = impute(ds, inputs, bcfg, scfg, rng, g_max);
      nlohmann::json files = nlohmann::json::array();
      for (std::size_t k = 0; k < res.completed.size(); ++k) {
        const std::string name = "completed_" + std::to_string(k + 1) + ".csv";
        write_csv(res.completed[k], out / name);
        files.push_back(name);
      }
      nlohmann::json summary;
      if (res.draws) {
        summary = posterior_summary(*res.draws, res.data, *res.hp, scfg);
        write_trace_csv(*res.draws, out / "trace.csv");
        files.push_back("trace.csv");
        if (res.draws->below_target)
          std::cerr << "warning: effective sample size " << res.draws->ess << " below target after "
                    << res.draws->sweeps_run << " sweeps\n";
      } else {
        summary["pmm"] = {{"donors", bcfg.pmm_donors}, {"cycles", bcfg.pmm_cycles}, {"ridge", bcfg.pmm_ridge}};
      }
      summary["method"] = method;
      std::vector<std::string> used;
      for (Index c : inputs)
        used.push_back(ds.columns[static_cast<std::size_t>(c)]);
      summary["inputs"] = used;
      write_json(summary, out / "summary.json");
      files.push_back("summary.json");
      write_manifest(out, "impute", args, seed, {{"outputs", files}});
    } else if (*ev) {
      stage = "evaluate";
      if (!fs::exists(truth_path))
        throw std::runtime_error("truth parameter file not found: " + truth_path);
      const FmmParams truth = read_fmm(truth_path);
      EvaluationConfig ecfg;
      ecfg.em.g = ev_g;
      ecfg.kl_samples = kl_samples;
      std::vector<Dataset> sets;
      for (const auto& path : ev_data)
        sets.push_back(load_dataset(path));
      std::optional<QuantileInterval> interval;
      if (interval_hi > 0.0) {
        interval = QuantileInterval{0.0, interval_hi, level, 0, 0, false, {}};
      } else {
        stage = "calibrate";
        CalibrationConfig cal;
        cal.rows = cal_rows > 0 ? cal_rows : sets.front().rows();
        cal.replicates = cal_reps;
        cal.level = level;
        cal.kl_samples = kl_samples;
        cal.em = ecfg.em;
        RngStream rng(seed, 3);
        interval = kl_quantile_interval(truth, cal, rng);
      }
      stage = "evaluate";
      std::ofstream csv(out / "kl.csv");
      csv << "label,kl_mc,mc_stderr,interval_lo,interval_hi,relative_distance\n";
      for (std::size_t k = 0; k < sets.size(); ++k) {
        RngStream rng(seed, 200 + k);
        const KlReport r = evaluate_imputation(sets[k], truth, ecfg, rng, &*interval);
        csv << fs::path(ev_data[k]).stem().string() << ',' << format_double(r.kl_mc) << ','
            << format_double(r.mc_stderr) << ',' << format_double(interval->lo) << ','
            << format_double(interval->hi) << ',' << r.relative.str() << '\n';
        std::cout << ev_data[k] << ": KL " << r.kl_mc << " (" << r.relative.str() << ")\n";
      }
      write_manifest(out, "evaluate", args, seed,
                     {{"interval", {{"lo", interval->lo}, {"hi", interval->hi}, {"level", interval->level},
                                    {"replicates", interval->replicates}, {"low_n", interval->low_n}}},
                      {"outputs", {"kl.csv"}}});
    } else if (*rep) {
      stage = "reproduce";
      xopts.scale = scale_from_string(scale);
      xopts.points = !no_points;
      if (rep_reps > 0)
        xopts.calibration_replicates = rep_reps;
      if (rep_kl > 0)
        xopts.kl_samples = rep_kl;
      if (rep_sweeps > 0)
        xopts.max_sweeps = rep_sweeps;
      const ExperimentResult res = run_experiment(experiment, seed, xopts);
      stage = "write";
      write_experiment(res, xopts, out);
      int failed = 0;
      for (const auto& c : res.checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  " << c.detail << '\n';
        failed += c.pass ? 0 : 1;
      }
      std::cout << res.checks.size() - static_cast<std::size_t>(failed) << "/" << res.checks.size()
                << " checks passed; outputs in " << out.string() << '\n';
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error in " << stage << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
