#pragma once

#include "lcwm/baselines.hpp"
#include "lcwm/evaluation.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lcwm {

enum class Scale { desk, full };
Scale scale_from_string(const std::string& s);
std::string to_string(Scale s);

struct ScaleSettings {
  Index burn_in = 2000;
  double target_ess = 200.0;
  Index max_sweeps = 12000;
  Index calibration_replicates = 500;
  Index kl_samples = 100000;
};
ScaleSettings scale_settings(Scale s);

struct ExperimentOptions {
  Scale scale = Scale::desk;
  std::optional<Index> calibration_replicates;
  std::optional<Index> kl_samples;
  std::optional<Index> max_sweeps;
  Index g_max = 10;
  unsigned workers = 0;
  bool points = true;
};

struct MethodRow {
  std::string method;
  std::string scenario; // input set, or "-" when none applies
  double kl = 0.0;
  double mc_stderr = 0.0;
  RelativeDistance relative;
  // Share of imputed rows assigned to each true cluster (simulation only).
  std::vector<double> imputed_shares;
  Index sweeps = 0;
  double ess = 0.0;
  bool below_target = false;
  bool g_saturated = false;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CompletedRun {
  std::string method;
  std::string scenario;
  Dataset data;
};

struct ExperimentResult {
  std::string experiment;
  std::uint64_t seed = 0;
  ScaleSettings settings;
  Scale scale = Scale::desk;
  Dataset original;
  Dataset amputated;
  FmmParams truth;
  std::optional<QuantileInterval> interval;
  std::vector<MethodRow> rows;
  std::vector<CompletedRun> completed;
  std::vector<Check> checks;
  // Cluster shares among observed and masked rows by true label.
  std::vector<double> observed_shares;
  std::vector<double> missing_shares;
  std::vector<std::string> warnings;

  [[nodiscard]] const MethodRow& row(const std::string& method, const std::string& scenario = "-") const;
};

/// Simulation study: complete, observed-only, mean, and cwm/pmm/norm under
/// the input sets x1, x2, x1+x2.
ExperimentResult run_sim_table2(std::uint64_t seed, const ExperimentOptions& opts);

enum class IrisMechanism { mar, mnar };
/// Iris with MAR or MNAR non-response; relative distances use the
/// observed-data KL as the unit.
ExperimentResult run_iris(IrisMechanism mech, std::uint64_t seed, const ExperimentOptions& opts);

ExperimentResult run_experiment(const std::string& name, std::uint64_t seed, const ExperimentOptions& opts);

/// True when every observed cell of `reference` is bitwise equal in `completed`.
bool observed_cells_unchanged(const Dataset& reference, const Dataset& completed);

/// table.csv, checks.csv, points.csv (optional), completed/<method>.csv,
/// and manifest.json under `dir`.
void write_experiment(const ExperimentResult& result, const ExperimentOptions& opts, const std::filesystem::path& dir);

nlohmann::json experiment_manifest(const ExperimentResult& result, const ExperimentOptions& opts);

inline constexpr std::uint64_t kDefaultSeed = 20240601;
inline constexpr const char* kVersion = "1.0.0";

} // namespace lcwm
