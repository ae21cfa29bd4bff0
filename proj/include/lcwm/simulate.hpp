#pragma once

#include "lcwm/dataset.hpp"
#include "lcwm/mixture.hpp"
#include "lcwm/rng.hpp"

#include <string>
#include <variant>
#include <vector>

namespace lcwm {

/// Ancestral sampling from a joint mixture: label ~ alpha, row ~ component.
/// Labels are stored 0-based.
Dataset simulate_fmm(const FmmParams& params, Index n, RngStream& rng,
                     std::vector<std::string> columns, ColumnRoles roles);

/// The two-component 4-D model of the simulation study, columns (x1, x2, y1, y2).
FmmParams sim_preset_params();
std::vector<std::string> sim_preset_columns();
ColumnRoles sim_preset_roles();
inline constexpr Index kSimPresetRows = 1000;
inline const std::vector<double> kSimPresetMarRates{0.103, 0.478};

struct MarSpec {
  std::vector<double> rates; // one per label
};
struct MnarSpec {
  double beta0 = -20.4;
  double beta1 = 3.0;
  std::string driver = "Sepal.Length";
};
using AmputationSpec = std::variant<MarSpec, MnarSpec>;

struct Amputation {
  Dataset data;
  std::vector<std::string> warnings;
};

/// Masks each row's output block with the rate of its label. Stored values of
/// the input block are untouched; masked output cells become NaN.
Amputation amputate_mar(const Dataset& ds, const std::vector<double>& rates, RngStream& rng);

/// Masks row i with probability logit^{-1}(beta0 + beta1 * driver_i).
Amputation amputate_mnar(const Dataset& ds, double beta0, double beta1,
                         const std::string& driver, RngStream& rng);

Amputation amputate(const Dataset& ds, const AmputationSpec& spec, RngStream& rng);

double inv_logit(double t);

} // namespace lcwm
