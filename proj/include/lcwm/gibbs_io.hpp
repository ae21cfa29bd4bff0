#pragma once

#include "lcwm/gibbs.hpp"

#include <json.hpp>

#include <filesystem>

namespace lcwm {

/// Posterior means, ESS, stopping flags and the non-empty count histogram.
nlohmann::json posterior_summary(const PosteriorDraws& draws, const MixtureData& data,
                                 const Hyperparams& hp, const SamplerConfig& cfg);

/// sweep, loglik, nonempty_count, alpha_1..alpha_G per stored draw.
void write_trace_csv(const PosteriorDraws& draws, const std::filesystem::path& path);

nlohmann::json to_json(const Hyperparams& hp);
nlohmann::json to_json(const SamplerConfig& cfg);

} // namespace lcwm
