#include "lcwm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace lcwm {

double effective_sample_size(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 10)
    throw std::invalid_argument("effective_sample_size: need at least 10 values");

  double mean = 0.0;
  for (double v : chain)
    mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> centred(n);
  for (std::size_t t = 0; t < n; ++t)
    centred[t] = chain[t] - mean;

  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t)
      s += centred[t] * centred[t + lag];
    return s / static_cast<double>(n);
  };

  const double c0 = autocov(0);
  if (!(c0 > 0.0) || !std::isfinite(c0))
    return static_cast<double>(n);

  double tau = -1.0;
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    const double pair = (autocov(lag) + autocov(lag + 1)) / c0;
    if (!(pair > 0.0))
      break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / static_cast<double>(n));
  return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

} // namespace lcwm
