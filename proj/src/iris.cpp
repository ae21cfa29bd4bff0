#include "lcwm/iris.hpp"

#include <array>

namespace lcwm {

#include "iris_table.inc"

Dataset iris_dataset() {
  Dataset ds;
  ds.columns = {"Sepal.Length", "Sepal.Width", "Petal.Length", "Petal.Width"};
  ds.roles.input_idx = {1, 2};
  ds.roles.output_idx = {0, 3};
  ds.values.resize(static_cast<Index>(kIris.size()), 4);
  std::vector<int> labels;
  labels.reserve(kIris.size());
  for (std::size_t i = 0; i < kIris.size(); ++i) {
    const auto& r = kIris[i];
    ds.values.row(static_cast<Index>(i)) << r.sepal_length, r.sepal_width, r.petal_length, r.petal_width;
    labels.push_back(r.species);
  }
  ds.labels = std::move(labels);
  ds.missing.assign(kIris.size(), false);
  return ds;
}

} // namespace lcwm
