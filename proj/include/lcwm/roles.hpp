#pragma once

#include "lcwm/types.hpp"

#include <vector>

namespace lcwm {

/// Which columns act as inputs (fully observed auxiliaries) and which as
/// outputs (subject to non-response).
struct ColumnRoles {
  std::vector<Index> input_idx;
  std::vector<Index> output_idx;

  [[nodiscard]] Index d() const noexcept { return static_cast<Index>(input_idx.size()); }
  [[nodiscard]] Index p() const noexcept { return static_cast<Index>(output_idx.size()); }
  [[nodiscard]] Index total() const noexcept { return d() + p(); }

  /// Inputs occupy [0, d), outputs [d, d+p).
  static ColumnRoles leading(Index d, Index p);

  /// Throws unless p >= 1 and the two lists are disjoint and cover [0, total).
  void validate(Index total_columns) const;
};

} // namespace lcwm
