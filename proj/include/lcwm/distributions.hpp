#pragma once

#include "lcwm/linalg.hpp"
#include "lcwm/rng.hpp"

#include <span>

namespace lcwm {

double mvn_logpdf(const Vector& x, const Vector& mu, const SpdMatrix& sigma);

/// mu + L z with L the cached Cholesky factor and z iid N(0, 1).
Vector mvn_sample(RngStream& rng, const Vector& mu, const SpdMatrix& sigma);

/// Gamma with the rate convention: density proportional to x^(shape-1) exp(-rate x).
double sample_gamma(RngStream& rng, double shape, double rate);
double sample_beta(RngStream& rng, double a, double b);

/// Index drawn with probability proportional to `weights` (need not sum to one).
std::size_t sample_categorical(RngStream& rng, std::span<const double> weights);
/// Same, with unnormalized log-weights.
std::size_t sample_categorical_log(RngStream& rng, std::span<const double> log_weights);

/// Inverse-Wishart draw with density proportional to
/// |S|^{-(dof+q+1)/2} exp(-tr(scale S^{-1}) / 2). Uses the Bartlett
/// decomposition of Wishart(dof, scale^{-1}) followed by inversion.
SpdMatrix sample_inverse_wishart(RngStream& rng, double dof, const SpdMatrix& scale);

/// log of the inverse-Wishart density above (normalized).
double inverse_wishart_logpdf(const SpdMatrix& s, double dof, const SpdMatrix& scale);
double gamma_logpdf(double x, double shape, double rate);
double beta_logpdf(double x, double a, double b);

double log_sum_exp(std::span<const double> values);

} // namespace lcwm
