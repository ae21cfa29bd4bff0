#pragma once

#include "lcwm/dataset.hpp"
#include "lcwm/mixture.hpp"
#include "lcwm/rng.hpp"

#include <string>
#include <vector>

namespace lcwm {

struct EmConfig {
  Index g = 2;
  Index restarts = 10;
  double tol = 1e-8;
  Index max_iter = 500;
};

struct EmFit {
  FmmParams params;
  double loglik = 0.0;
  // Log-likelihood after every iteration of the winning restart.
  std::vector<double> trace;
  Index iterations = 0;
  Index failed_restarts = 0;
};

/// EM for a G-component Gaussian mixture on the rows of `data` (n x p), best
/// of `restarts` k-means++ seeded runs. Diagonal covariance entries are
/// floored at 1e-6 times the column variance; a run that ends with a weight
/// below 1/n or a variance on that floor counts as degenerate.
EmFit fit_gmm_em(const Matrix& data, const EmConfig& cfg, RngStream& rng);

/// Closed-form KL(f || g) between two Gaussians.
double kl_gaussian_closed(const Vector& mu_f, const SpdMatrix& sigma_f, const Vector& mu_g, const SpdMatrix& sigma_g);

struct KlEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo KL(f || g) from draws of f.
KlEstimate kl_mc(const FmmParams& f, const FmmParams& g, Index n_samples, RngStream& rng);

/// n rows from an FMM, one observation per row.
Matrix sample_fmm(const FmmParams& f, Index n, RngStream& rng);

struct QuantileInterval {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  Index replicates = 0;
  Index failures = 0;
  bool low_n = false;
  std::vector<double> values;
};

struct CalibrationConfig {
  Index rows = 1000;
  Index replicates = 500;
  double level = 0.95;
  Index kl_samples = 100000;
  EmConfig em;
};

/// Sampling-noise band for KL: simulate, refit with fixed G, compare to the
/// truth; returns (0, level quantile). Replicate r uses rng.substream(r).
QuantileInterval kl_quantile_interval(const FmmParams& truth, const CalibrationConfig& cfg, RngStream& rng);

/// Type-7 sample quantile.
double quantile(std::vector<double> values, double level);

struct RelativeDistance {
  bool within = false;
  double ratio = 0.0;
  [[nodiscard]] std::string str() const;
};

/// WI when kl <= hi, otherwise kl / hi.
RelativeDistance relative_distance(double kl, double hi);
/// Plain ratio kl / reference, never WI.
RelativeDistance ratio_to_reference(double kl, double reference);

struct KlReport {
  std::string label;
  double kl_mc = 0.0;
  double mc_stderr = 0.0;
  QuantileInterval interval;
  RelativeDistance relative;
  FmmParams fit;
};

struct EvaluationConfig {
  EmConfig em;
  Index kl_samples = 100000;
};

/// Fits the output block of `completed` with EM and compares it to `truth`
/// (which lives on the same output coordinates, in role order).
KlReport evaluate_imputation(const Dataset& completed, const FmmParams& truth, const EvaluationConfig& cfg,
                             RngStream& rng, const QuantileInterval* interval = nullptr);

/// Same, fitting only the rows with observed outputs.
KlReport evaluate_observed(const Dataset& ds, const FmmParams& truth, const EvaluationConfig& cfg, RngStream& rng,
                           const QuantileInterval* interval = nullptr);

} // namespace lcwm
