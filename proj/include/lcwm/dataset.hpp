#pragma once

#include "lcwm/roles.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lcwm {

/// n x (d+p) table with unit non-response on the output block. Masked rows
/// store NaN in every output cell; input cells are always finite.
struct Dataset {
  std::vector<std::string> columns;
  Matrix values;
  ColumnRoles roles;
  std::vector<bool> missing;
  std::optional<std::vector<int>> labels;

  [[nodiscard]] Index rows() const noexcept { return values.rows(); }
  [[nodiscard]] Index cols() const noexcept { return values.cols(); }
  [[nodiscard]] Index n_missing() const;
  [[nodiscard]] std::vector<Index> missing_rows() const;
  [[nodiscard]] std::vector<Index> observed_rows() const;

  /// Column position by name; throws std::invalid_argument for unknown names.
  [[nodiscard]] Index column_index(const std::string& name) const;
  [[nodiscard]] std::vector<Index> column_indices(const std::vector<std::string>& names) const;

  /// Output block of the rows with observed outputs.
  [[nodiscard]] Matrix observed_outputs() const;
  /// Full output block; only meaningful when nothing is missing.
  [[nodiscard]] Matrix outputs() const;

  void validate() const;
};

struct RoleNames {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

/// Reads a CSV with a header row. Output cells may be empty or NA, but only
/// for the whole output block of a row. Columns listed in neither role are
/// rejected.
Dataset load_csv(const std::filesystem::path& path, const RoleNames& roles);

/// Reads `path` and takes roles and labels from the `<path>.meta.json` sidecar.
/// Non-empty `roles` override the sidecar.
Dataset load_dataset(const std::filesystem::path& path, const RoleNames& roles = {});

/// Writes the CSV (shortest round-trip number format, NA for missing cells)
/// and the JSON sidecar.
void write_csv(const Dataset& ds, const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);
nlohmann::json dataset_metadata(const Dataset& ds);

std::string format_double(double v);

} // namespace lcwm
