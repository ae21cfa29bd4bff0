#pragma once

#include "lcwm/dataset.hpp"

namespace lcwm {

/// Fisher's Iris measurements, labels 0 = setosa, 1 = versicolor, 2 = virginica.
/// Inputs: Sepal.Width, Petal.Length. Outputs: Sepal.Length, Petal.Width.
Dataset iris_dataset();

inline const std::vector<double> kIrisMarRates{0.28, 0.26, 0.10};

} // namespace lcwm
