#pragma once

#include "lcwm/mixture.hpp"

#include <json.hpp>

#include <filesystem>

namespace lcwm {

// FmmParams document: {"g": G, "alpha": [...], "mu": [[...]...], "sigma": [[[...]...]...]}
nlohmann::json to_json(const FmmParams& fmm);
FmmParams fmm_from_json(const nlohmann::json& j);

// LcwmParams document: {"g", "d", "p", "alpha", "mu_x", "sigma_x", "coef", "intercept", "sigma_cond"}
// with coef[g] stored as d rows of p entries.
nlohmann::json to_json(const LcwmParams& lcwm);

nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const Matrix& m);
Vector vector_from_json(const nlohmann::json& j);
Matrix matrix_from_json(const nlohmann::json& j);

FmmParams read_fmm(const std::filesystem::path& path);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

} // namespace lcwm
