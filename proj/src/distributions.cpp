#include "lcwm/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace lcwm {

double mvn_logpdf(const Vector& x, const Vector& mu, const SpdMatrix& sigma) {
  if (x.size() != mu.size() || mu.size() != sigma.dim())
    throw std::invalid_argument("mvn_logpdf: dimension mismatch");
  return MvnDensity(mu, sigma)(x);
}

Vector mvn_sample(RngStream& rng, const Vector& mu, const SpdMatrix& sigma) {
  if (mu.size() != sigma.dim())
    throw std::invalid_argument("mvn_sample: dimension mismatch");
  Vector z(mu.size());
  for (Index i = 0; i < z.size(); ++i)
    z(i) = rng.normal();
  return mu + sigma.cholesky().triangularView<Eigen::Lower>() * z;
}

double sample_gamma(RngStream& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate))
    throw std::invalid_argument("sample_gamma: shape and rate must be positive and finite");
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(rng);
}

double sample_beta(RngStream& rng, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument("sample_beta: parameters must be positive");
  const double x = sample_gamma(rng, a, 1.0);
  const double y = sample_gamma(rng, b, 1.0);
  if (x + y == 0.0)
    return a / (a + b);
  return x / (x + y);
}

std::size_t sample_categorical(RngStream& rng, std::span<const double> weights) {
  if (weights.empty())
    throw std::invalid_argument("sample_categorical: empty weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("sample_categorical: weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0))
    throw std::invalid_argument("sample_categorical: weights sum to zero");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0) {
      last_positive = k;
      acc += weights[k];
      if (u < acc)
        return k;
    }
  }
  return last_positive;
}

std::size_t sample_categorical_log(RngStream& rng, std::span<const double> log_weights) {
  if (log_weights.empty())
    throw std::invalid_argument("sample_categorical_log: empty weights");
  const double m = *std::max_element(log_weights.begin(), log_weights.end());
  if (std::isnan(m) || m == -std::numeric_limits<double>::infinity())
    throw NumericalError("sample_categorical_log: no finite log-weight");
  std::vector<double> w(log_weights.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (std::isnan(log_weights[k]))
      throw NumericalError("sample_categorical_log: NaN log-weight");
    w[k] = std::exp(log_weights[k] - m);
  }
  return sample_categorical(rng, w);
}

SpdMatrix sample_inverse_wishart(RngStream& rng, double dof, const SpdMatrix& scale) {
  const Index q = scale.dim();
  if (!(dof > static_cast<double>(q) - 1.0))
    throw std::invalid_argument("sample_inverse_wishart: dof must exceed dimension - 1");

  // Wishart(dof, scale^{-1}) = L A A^T L^T with L = chol(scale^{-1}).
  const Matrix l = chol_psd(symmetrize(scale.inverse()), "inverse-Wishart scale");
  Matrix a = Matrix::Zero(q, q);
  for (Index i = 0; i < q; ++i) {
    a(i, i) = std::sqrt(sample_gamma(rng, 0.5 * (dof - static_cast<double>(i)), 0.5));
    for (Index j = 0; j < i; ++j)
      a(i, j) = rng.normal();
  }
  const Matrix la = l * a;
  const Matrix la_inv = la.triangularView<Eigen::Lower>().solve(Matrix::Identity(q, q));
  return SpdMatrix(symmetrize(la_inv.transpose() * la_inv), "inverse-Wishart draw");
}

namespace {

double log_multigamma(double a, Index q) {
  double out = 0.25 * static_cast<double>(q * (q - 1)) * std::log(std::numbers::pi);
  for (Index j = 0; j < q; ++j)
    out += std::lgamma(a - 0.5 * static_cast<double>(j));
  return out;
}

} // namespace

double inverse_wishart_logpdf(const SpdMatrix& s, double dof, const SpdMatrix& scale) {
  const Index q = s.dim();
  if (scale.dim() != q)
    throw std::invalid_argument("inverse_wishart_logpdf: dimension mismatch");
  const double qd = static_cast<double>(q);
  const double trace = (scale.matrix() * s.inverse()).trace();
  return 0.5 * dof * scale.log_det() - 0.5 * dof * qd * std::log(2.0) -
         log_multigamma(0.5 * dof, q) - 0.5 * (dof + qd + 1.0) * s.log_det() - 0.5 * trace;
}

double gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0))
    return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double beta_logpdf(double x, double a, double b) {
  if (!(x > 0.0) || !(x < 1.0))
    return -std::numeric_limits<double>::infinity();
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) +
         (b - 1.0) * std::log1p(-x);
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty())
    return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m))
    return m;
  double s = 0.0;
  for (double v : values)
    s += std::exp(v - m);
  return m + std::log(s);
}

} // namespace lcwm
