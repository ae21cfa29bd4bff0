#include "lcwm/mixture.hpp"

#include "lcwm/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace lcwm {

ColumnRoles ColumnRoles::leading(Index d, Index p) {
  ColumnRoles roles;
  for (Index i = 0; i < d; ++i)
    roles.input_idx.push_back(i);
  for (Index i = 0; i < p; ++i)
    roles.output_idx.push_back(d + i);
  return roles;
}

void ColumnRoles::validate(Index total_columns) const {
  if (p() < 1)
    throw std::invalid_argument("ColumnRoles: need at least one output column");
  if (total() != total_columns)
    throw std::invalid_argument("ColumnRoles: roles do not cover every column");
  std::vector<int> seen(static_cast<std::size_t>(total_columns), 0);
  for (const auto* list : {&input_idx, &output_idx})
    for (Index i : *list) {
      if (i < 0 || i >= total_columns || seen[static_cast<std::size_t>(i)]++)
        throw std::invalid_argument("ColumnRoles: indices must be disjoint and in range");
    }
}

void FmmParams::validate() const {
  const Index k = g();
  if (k < 1)
    throw std::invalid_argument("FmmParams: no components");
  if (static_cast<Index>(mu.size()) != k || static_cast<Index>(sigma.size()) != k)
    throw std::invalid_argument("FmmParams: component count mismatch");
  if ((alpha.array() < 0.0).any() || std::abs(alpha.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("FmmParams: alpha is not a simplex");
  const Index q = dim();
  for (Index c = 0; c < k; ++c) {
    if (mu[static_cast<std::size_t>(c)].size() != q || sigma[static_cast<std::size_t>(c)].dim() != q)
      throw std::invalid_argument("FmmParams: component dimension mismatch");
  }
}

FmmParams FmmParams::marginal(std::span<const Index> idx) const {
  FmmParams out;
  out.alpha = alpha;
  for (std::size_t c = 0; c < mu.size(); ++c) {
    out.mu.push_back(select(mu[c], idx));
    out.sigma.emplace_back(select(sigma[c].matrix(), idx, idx), "marginal covariance");
  }
  return out;
}

Vector LcwmParams::alpha() const {
  Vector a(g());
  for (Index c = 0; c < g(); ++c)
    a(c) = components[static_cast<std::size_t>(c)].alpha;
  return a;
}

LcwmParams fmm_to_lcwm(const FmmParams& fmm, const ColumnRoles& roles) {
  roles.validate(fmm.dim());
  LcwmParams out;
  out.d = roles.d();
  out.p = roles.p();
  out.components.reserve(static_cast<std::size_t>(fmm.g()));
  for (Index c = 0; c < fmm.g(); ++c) {
    const auto& mu = fmm.mu[static_cast<std::size_t>(c)];
    const auto& sigma = fmm.sigma[static_cast<std::size_t>(c)].matrix();
    LcwmComponent comp;
    comp.alpha = fmm.alpha(c);
    comp.mu_x = select(mu, roles.input_idx);
    comp.sigma_x = select(sigma, roles.input_idx, roles.input_idx);
    try {
      GaussianRegression reg = gaussian_regression(mu, sigma, roles.input_idx, roles.output_idx);
      comp.coef = std::move(reg.coef);
      comp.intercept = std::move(reg.intercept);
      comp.sigma_cond = SpdMatrix(std::move(reg.cov), "conditional covariance");
    } catch (const NumericalError& e) {
      std::ostringstream msg;
      msg << "fmm_to_lcwm: component " << c + 1 << ": " << e.what();
      throw NumericalError(msg.str());
    }
    out.components.push_back(std::move(comp));
  }
  return out;
}

Vector normalize_log_weights(const Vector& log_weights) {
  if (log_weights.hasNaN())
    throw NumericalError("responsibility: NaN log-weight");
  const double m = log_weights.maxCoeff();
  if (m == -std::numeric_limits<double>::infinity())
    throw NumericalError("responsibility: every component has zero weight");
  Vector w = (log_weights.array() - m).exp().matrix();
  return w / w.sum();
}

namespace {

double safe_log(double a) {
  return a > 0.0 ? std::log(a) : -std::numeric_limits<double>::infinity();
}

} // namespace

LcwmEvaluator::LcwmEvaluator(const LcwmParams& lcwm) : lcwm_(lcwm) {
  const std::size_t k = lcwm_.components.size();
  log_alpha_.resize(k);
  cond_chol_.resize(k);
  cond_log_norm_.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto& comp = lcwm_.components[c];
    log_alpha_[c] = safe_log(comp.alpha);
    if (lcwm_.d > 0)
      x_density_.emplace_back(comp.mu_x, SpdMatrix(comp.sigma_x, "input covariance"));
    cond_chol_[c] = comp.sigma_cond.cholesky();
    cond_log_norm_[c] = -0.5 * static_cast<double>(lcwm_.p) * std::log(2.0 * std::numbers::pi) -
                        cond_chol_[c].diagonal().array().log().sum();
  }
}

double LcwmEvaluator::log_marginal_x(Index g, const Vector& x) const {
  if (x.size() != lcwm_.d)
    throw std::invalid_argument("LcwmEvaluator: input dimension mismatch");
  if (lcwm_.d == 0)
    return 0.0;
  return x_density_[static_cast<std::size_t>(g)](x);
}

Vector LcwmEvaluator::conditional_mean(Index g, const Vector& x) const {
  const auto& comp = lcwm_.components[static_cast<std::size_t>(g)];
  if (lcwm_.d == 0)
    return comp.intercept;
  return comp.coef.transpose() * x + comp.intercept;
}

double LcwmEvaluator::log_conditional_y(Index g, const Vector& x, const Vector& y) const {
  if (y.size() != lcwm_.p || x.size() != lcwm_.d)
    throw std::invalid_argument("LcwmEvaluator: dimension mismatch");
  const auto k = static_cast<std::size_t>(g);
  const Vector z = cond_chol_[k].triangularView<Eigen::Lower>().solve(y - conditional_mean(g, x));
  return cond_log_norm_[k] - 0.5 * z.squaredNorm();
}

double LcwmEvaluator::joint_logdensity(const Vector& x, const Vector& y) const {
  std::vector<double> terms(log_alpha_.size());
  for (Index c = 0; c < g(); ++c)
    terms[static_cast<std::size_t>(c)] =
        log_alpha_[static_cast<std::size_t>(c)] + log_marginal_x(c, x) + log_conditional_y(c, x, y);
  return log_sum_exp(terms);
}

double LcwmEvaluator::marginal_x_logdensity(const Vector& x) const {
  std::vector<double> terms(log_alpha_.size());
  for (Index c = 0; c < g(); ++c)
    terms[static_cast<std::size_t>(c)] = log_alpha_[static_cast<std::size_t>(c)] + log_marginal_x(c, x);
  return log_sum_exp(terms);
}

Vector LcwmEvaluator::responsibility_xy(const Vector& x, const Vector& y) const {
  Vector lw(g());
  for (Index c = 0; c < g(); ++c)
    lw(c) = log_alpha_[static_cast<std::size_t>(c)] + log_marginal_x(c, x) + log_conditional_y(c, x, y);
  return normalize_log_weights(lw);
}

Vector LcwmEvaluator::responsibility_x(const Vector& x) const {
  const Vector alpha = lcwm_.alpha();
  if (lcwm_.d == 0)
    return alpha;
  Vector lx(g());
  for (Index c = 0; c < g(); ++c)
    lx(c) = log_marginal_x(c, x);
  if (lx.hasNaN())
    throw NumericalError("responsibility_x: NaN density");
  // A factor shared by every component cancels and leaves alpha.
  if ((lx.array() == lx(0)).all())
    return alpha / alpha.sum();
  for (Index c = 0; c < g(); ++c)
    lx(c) += log_alpha_[static_cast<std::size_t>(c)];
  return normalize_log_weights(lx);
}

Vector LcwmEvaluator::responsibility_mrm(const Vector& x, const Vector& y) const {
  Vector lw(g());
  for (Index c = 0; c < g(); ++c)
    lw(c) = log_alpha_[static_cast<std::size_t>(c)] + log_conditional_y(c, x, y);
  return normalize_log_weights(lw);
}

double lcwm_joint_logdensity(const LcwmParams& lcwm, const Vector& x, const Vector& y) {
  return LcwmEvaluator(lcwm).joint_logdensity(x, y);
}

Vector responsibility_xy(const LcwmParams& lcwm, const Vector& x, const Vector& y) {
  return LcwmEvaluator(lcwm).responsibility_xy(x, y);
}

Vector responsibility_x(const LcwmParams& lcwm, const Vector& x) {
  return LcwmEvaluator(lcwm).responsibility_x(x);
}

Vector responsibility_mrm(const LcwmParams& lcwm, const Vector& x, const Vector& y) {
  return LcwmEvaluator(lcwm).responsibility_mrm(x, y);
}

FmmEvaluator::FmmEvaluator(const FmmParams& fmm) {
  fmm.validate();
  for (Index c = 0; c < fmm.g(); ++c) {
    log_alpha_.push_back(safe_log(fmm.alpha(c)));
    density_.emplace_back(fmm.mu[static_cast<std::size_t>(c)], fmm.sigma[static_cast<std::size_t>(c)]);
  }
}

void FmmEvaluator::log_joint_terms(const Eigen::Ref<const Vector>& w, std::vector<double>& out) const {
  out.resize(density_.size());
  for (std::size_t c = 0; c < density_.size(); ++c)
    out[c] = log_alpha_[c] + density_[c](w);
}

double FmmEvaluator::logdensity(const Eigen::Ref<const Vector>& w) const {
  std::vector<double> terms;
  log_joint_terms(w, terms);
  return log_sum_exp(terms);
}

double fmm_logdensity(const FmmParams& fmm, const Vector& w) {
  if (w.size() != fmm.dim())
    throw std::invalid_argument("fmm_logdensity: dimension mismatch");
  return FmmEvaluator(fmm).logdensity(w);
}

} // namespace lcwm
