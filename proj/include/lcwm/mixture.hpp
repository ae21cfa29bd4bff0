#pragma once

#include "lcwm/linalg.hpp"
#include "lcwm/roles.hpp"

#include <vector>

namespace lcwm {

/// Gaussian finite mixture on the joint (input, output) space.
struct FmmParams {
  Vector alpha;
  std::vector<Vector> mu;
  std::vector<SpdMatrix> sigma;

  [[nodiscard]] Index g() const noexcept { return alpha.size(); }
  [[nodiscard]] Index dim() const { return mu.empty() ? 0 : mu.front().size(); }

  /// Checks sizes, that alpha is a simplex (1e-12), and dimensions agree.
  void validate() const;

  /// Marginal mixture over the coordinates in `idx` (same weights).
  [[nodiscard]] FmmParams marginal(std::span<const Index> idx) const;
};

struct LcwmComponent {
  double alpha = 0.0;
  Vector mu_x;      // d
  Matrix sigma_x;   // d x d (0 x 0 when d = 0)
  Matrix coef;      // B, d x p
  Vector intercept; // b0, p
  SpdMatrix sigma_cond{Matrix::Identity(1, 1)};
};

/// Cluster-weighted parameterization: x-marginal times linear-Gaussian y | x.
struct LcwmParams {
  Index d = 0;
  Index p = 0;
  std::vector<LcwmComponent> components;

  [[nodiscard]] Index g() const noexcept { return static_cast<Index>(components.size()); }
  [[nodiscard]] Vector alpha() const;
};

/// Component-wise Schur-complement map from the joint mixture.
LcwmParams fmm_to_lcwm(const FmmParams& fmm, const ColumnRoles& roles);

double fmm_logdensity(const FmmParams& fmm, const Vector& w);
double lcwm_joint_logdensity(const LcwmParams& lcwm, const Vector& x, const Vector& y);

/// p(Z | x, y): joint responsibilities.
Vector responsibility_xy(const LcwmParams& lcwm, const Vector& x, const Vector& y);
/// p(Z | x): the responsibilities that pick the imputing component. Equals
/// alpha when d = 0 or when every x-marginal is the same.
Vector responsibility_x(const LcwmParams& lcwm, const Vector& x);
/// Mixture-of-regressions responsibilities (conditional factor and weight only).
Vector responsibility_mrm(const LcwmParams& lcwm, const Vector& x, const Vector& y);

/// Softmax of log-weights. Throws NumericalError on NaN input.
Vector normalize_log_weights(const Vector& log_weights);

/// Precomputed densities for repeated evaluation of one LCWM.
class LcwmEvaluator {
 public:
  explicit LcwmEvaluator(const LcwmParams& lcwm);

  [[nodiscard]] Index g() const noexcept { return static_cast<Index>(log_alpha_.size()); }
  [[nodiscard]] const LcwmParams& params() const noexcept { return lcwm_; }

  /// log phi_d(x; mu_g, Sigma_g); zero when d = 0.
  [[nodiscard]] double log_marginal_x(Index g, const Vector& x) const;
  /// log phi_p(y; B_g^T x + b_g0, Sigma~_g).
  [[nodiscard]] double log_conditional_y(Index g, const Vector& x, const Vector& y) const;
  [[nodiscard]] Vector conditional_mean(Index g, const Vector& x) const;

  [[nodiscard]] double joint_logdensity(const Vector& x, const Vector& y) const;
  [[nodiscard]] double marginal_x_logdensity(const Vector& x) const;
  [[nodiscard]] Vector responsibility_xy(const Vector& x, const Vector& y) const;
  [[nodiscard]] Vector responsibility_x(const Vector& x) const;
  [[nodiscard]] Vector responsibility_mrm(const Vector& x, const Vector& y) const;

 private:
  LcwmParams lcwm_;
  std::vector<double> log_alpha_;
  std::vector<MvnDensity> x_density_;
  std::vector<Matrix> cond_chol_;
  std::vector<double> cond_log_norm_;
};

/// Precomputed component densities of an FMM.
class FmmEvaluator {
 public:
  explicit FmmEvaluator(const FmmParams& fmm);

  [[nodiscard]] Index g() const noexcept { return static_cast<Index>(density_.size()); }
  /// log alpha_g + log phi(w; mu_g, Sigma_g) for every g, written to `out`.
  void log_joint_terms(const Eigen::Ref<const Vector>& w, std::vector<double>& out) const;
  [[nodiscard]] double logdensity(const Eigen::Ref<const Vector>& w) const;

 private:
  std::vector<double> log_alpha_;
  std::vector<MvnDensity> density_;
};

} // namespace lcwm
