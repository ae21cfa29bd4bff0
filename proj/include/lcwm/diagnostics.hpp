#pragma once

#include <span>

namespace lcwm {

/// Effective sample size via Geyer's initial positive sequence: autocorrelations
/// are summed in adjacent pairs until a pair sum turns non-positive. The result
/// is capped at the chain length. A constant chain returns its length.
/// Requires at least 10 values.
double effective_sample_size(std::span<const double> chain);

} // namespace lcwm
