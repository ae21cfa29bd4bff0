#pragma once

#include "lcwm/dataset.hpp"
#include "lcwm/mixture.hpp"
#include "lcwm/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace lcwm {

/// Sampler view of a dataset. `w` holds one observation per column with the
/// coordinates ordered (inputs, outputs); masked outputs are NaN.
struct MixtureData {
  Matrix w;
  Index d = 0;
  Index p = 0;
  std::vector<Index> missing_rows;
  std::vector<Index> observed_rows;
  // Dataset column of each sampler column.
  std::vector<Index> source_cols;

  [[nodiscard]] Index n() const noexcept { return w.cols(); }
  [[nodiscard]] Index q() const noexcept { return d + p; }
  [[nodiscard]] Index n_missing() const noexcept { return static_cast<Index>(missing_rows.size()); }

  /// Uses `input_cols` (dataset column indices, a subset of the dataset's
  /// inputs) as the sampler inputs and every output column as outputs.
  static MixtureData from_dataset(const Dataset& ds, const std::vector<Index>& input_cols);
  /// All declared inputs.
  static MixtureData from_dataset(const Dataset& ds);
};

struct Hyperparams {
  Index g_max = 10;
  Vector mu0;
  double h = 1.0;
  double f = 0.0;
  double a_delta = 0.25;
  double b_delta = 0.25;
  double a_eta = 0.25;
  double b_eta = 0.25;

  /// mu0 = column means after filling masked outputs with observed means,
  /// f = q + 2, the remaining fields at their defaults.
  static Hyperparams defaults(const MixtureData& data, Index g_max = 10);
  void validate(Index q) const;
};

struct SamplerConfig {
  Index burn_in = 2000;
  double target_ess = 200.0;
  Index max_sweeps = 12000;
  Index thin = 1;
  std::uint64_t seed = 0;
  Index store_imputations = 1;
  bool relabel = true;
  bool store_params = true;
  Index ess_check_every = 50;

  void validate() const;
};

struct GibbsState {
  std::vector<Index> z;
  std::vector<Index> z_mis;
  Matrix y_mis;
  Vector nu;
  double eta = 1.0;
  Vector delta;
  FmmParams params;
  Index iter = 0;
  // Completed data, laid out like MixtureData::w.
  Matrix w;
};

struct PosteriorDraws {
  std::vector<FmmParams> params;
  std::vector<double> eta;
  std::vector<Vector> delta;
  std::vector<double> loglik;
  std::vector<Index> sweep;
  std::vector<Index> nonempty;
  std::vector<Vector> alpha;
  std::vector<Matrix> completed_y_mis;
  std::vector<Index> completed_sweeps;
  Index sweeps_run = 0;
  double ess = 0.0;
  bool below_target = false;
  // Set when every component is occupied on some sweep after burn-in.
  bool g_saturated = false;
  // Non-empty component counts over all sweeps, burn-in included.
  std::vector<Index> nonempty_histogram;
};

using DrawObserver = std::function<void(const GibbsState&, const MixtureData&)>;

GibbsState init_state(const MixtureData& data, const Hyperparams& hp, RngStream& rng);

void update_allocations(GibbsState& state, const MixtureData& data, RngStream& rng);
void update_stick_weights(GibbsState& state, RngStream& rng);
void update_eta(GibbsState& state, const Hyperparams& hp, RngStream& rng);
void update_delta(GibbsState& state, const Hyperparams& hp, RngStream& rng);
void update_component_params(GibbsState& state, const MixtureData& data, const Hyperparams& hp,
                             RngStream& rng);
void impute_step(GibbsState& state, const MixtureData& data, RngStream& rng);
void relabel(GibbsState& state);

/// One full sweep: z, stick weights, eta, component parameters, delta,
/// z_mis and y_mis, then relabel when enabled.
void sweep(GibbsState& state, const MixtureData& data, const Hyperparams& hp, RngStream& rng,
           bool do_relabel = true);

/// alpha_g = nu_g prod_{k<g} (1 - nu_k).
Vector stick_to_alpha(const Vector& nu);
std::vector<Index> component_counts(const GibbsState& state);

/// Observed-data log-likelihood: log p(w) for complete rows, log p(x) for
/// masked rows (zero when d = 0).
double observed_loglik(const GibbsState& state, const MixtureData& data);

/// log p(W, z, nu, eta, mu, Sigma, delta) at the current completed data.
double log_joint(const GibbsState& state, const MixtureData& data, const Hyperparams& hp);

PosteriorDraws run_sampler(const MixtureData& data, const Hyperparams& hp, const SamplerConfig& cfg,
                           RngStream& rng, const DrawObserver& observer = {});

/// Writes imputed outputs back into a copy of `ds` (mask cleared).
Dataset complete_dataset(const Dataset& ds, const MixtureData& data, const Matrix& y_mis);

/// Posterior mean of the stored parameters with components matched by position.
FmmParams posterior_mean(const PosteriorDraws& draws);

} // namespace lcwm
