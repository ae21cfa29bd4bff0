#pragma once

#include "lcwm/dataset.hpp"
#include "lcwm/gibbs.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace lcwm {

enum class Method { cwm, mean, norm, pmm };

Method method_from_string(const std::string& name);
std::string to_string(Method m);

struct BaselineConfig {
  Method method = Method::cwm;
  Index pmm_donors = 5;
  Index pmm_cycles = 10;
  double pmm_ridge = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ImputationResult {
  Method method = Method::cwm;
  std::vector<Dataset> completed;
  MixtureData data;
  std::optional<Hyperparams> hp;
  std::optional<PosteriorDraws> draws;
};

/// Full LCWM imputation with `input_cols` as auxiliaries.
ImputationResult impute_cwm(const Dataset& ds, const std::vector<Index>& input_cols, const SamplerConfig& cfg,
                            RngStream& rng, Index g_max = 10, const DrawObserver& observer = {});

/// Sampler without inputs: component choice follows alpha alone.
ImputationResult impute_mean(const Dataset& ds, const SamplerConfig& cfg, RngStream& rng, Index g_max = 10,
                             const DrawObserver& observer = {});

/// Sampler with a single component: Bayesian multivariate linear regression.
ImputationResult impute_norm(const Dataset& ds, const std::vector<Index>& input_cols, const SamplerConfig& cfg,
                             RngStream& rng, const DrawObserver& observer = {});

/// Chained predictive mean matching (type 1). Each of the `m` completed
/// datasets comes from an independent chain.
ImputationResult impute_pmm(const Dataset& ds, const std::vector<Index>& input_cols, const BaselineConfig& cfg,
                            RngStream& rng, Index m = 1);

/// Dispatch on `bcfg.method`; pmm ignores the sampler settings.
ImputationResult impute(const Dataset& ds, const std::vector<Index>& input_cols, const BaselineConfig& bcfg,
                        const SamplerConfig& cfg, RngStream& rng, Index g_max = 10,
                        const DrawObserver& observer = {});

} // namespace lcwm
