#include "lcwm/evaluation.hpp"

#include "lcwm/distributions.hpp"
#include "lcwm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace lcwm {

double kl_gaussian_closed(const Vector& mu_f, const SpdMatrix& sigma_f, const Vector& mu_g, const SpdMatrix& sigma_g) {
  const Index q = mu_f.size();
  if (mu_g.size() != q || sigma_f.dim() != q || sigma_g.dim() != q)
    throw std::invalid_argument("kl_gaussian_closed: dimension mismatch");
  const auto llt = sigma_g.cholesky().triangularView<Eigen::Lower>();
  const Matrix a = llt.solve(sigma_f.cholesky());
  const Vector b = llt.solve(mu_g - mu_f);
  return 0.5 * (a.squaredNorm() + b.squaredNorm() - static_cast<double>(q) + sigma_g.log_det() - sigma_f.log_det());
}

Matrix sample_fmm(const FmmParams& f, Index n, RngStream& rng) {
  f.validate();
  Matrix out(n, f.dim());
  const std::span<const double> alpha(f.alpha.data(), static_cast<std::size_t>(f.g()));
  for (Index i = 0; i < n; ++i) {
    const auto g = sample_categorical(rng, alpha);
    out.row(i) = mvn_sample(rng, f.mu[g], f.sigma[g]).transpose();
  }
  return out;
}

KlEstimate kl_mc(const FmmParams& f, const FmmParams& g, Index n_samples, RngStream& rng) {
  if (f.dim() != g.dim())
    throw std::invalid_argument("kl_mc: dimension mismatch");
  if (n_samples < 2)
    throw std::invalid_argument("kl_mc: need at least two samples");
  f.validate();
  g.validate();
  const FmmEvaluator ef(f), eg(g);
  const std::span<const double> alpha(f.alpha.data(), static_cast<std::size_t>(f.g()));
  const Index q = f.dim();
  Vector z(q), w(q);
  double sum = 0.0, sum2 = 0.0;
  for (Index i = 0; i < n_samples; ++i) {
    const auto c = sample_categorical(rng, alpha);
    for (Index j = 0; j < q; ++j)
      z(j) = rng.normal();
    w.noalias() = f.mu[c];
    w.noalias() += f.sigma[c].cholesky().triangularView<Eigen::Lower>() * z;
    const double diff = ef.logdensity(w) - eg.logdensity(w);
    sum += diff;
    sum2 += diff * diff;
  }
  const auto n = static_cast<double>(n_samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

double quantile(std::vector<double> values, double level) {
  if (values.empty())
    throw std::invalid_argument("quantile: no values");
  if (!(level >= 0.0 && level <= 1.0))
    throw std::invalid_argument("quantile: level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * level;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

QuantileInterval kl_quantile_interval(const FmmParams& truth, const CalibrationConfig& cfg, RngStream& rng) {
  if (cfg.replicates < 1)
    throw std::invalid_argument("kl_quantile_interval: need at least one replicate");
  const auto n_rep = static_cast<std::size_t>(cfg.replicates);
  std::vector<double> kl(n_rep, 0.0);
  std::vector<char> ok(n_rep, 0);
  parallel_for(n_rep, [&](std::size_t r) {
    RngStream stream = rng.substream(r);
    try {
      const Matrix sample = sample_fmm(truth, cfg.rows, stream);
      RngStream em_stream = stream.substream(1);
      const EmFit fit = fit_gmm_em(sample, cfg.em, em_stream);
      RngStream kl_stream = stream.substream(2);
      kl[r] = kl_mc(truth, fit.params, cfg.kl_samples, kl_stream).estimate;
      ok[r] = 1;
    } catch (const NumericalError&) {
      ok[r] = 0;
    }
  });
  QuantileInterval out;
  out.level = cfg.level;
  out.replicates = cfg.replicates;
  for (std::size_t r = 0; r < n_rep; ++r) {
    if (ok[r])
      out.values.push_back(kl[r]);
    else
      ++out.failures;
  }
  if (static_cast<double>(out.failures) > 0.01 * static_cast<double>(cfg.replicates))
    throw NumericalError("kl_quantile_interval: " + std::to_string(out.failures) + " of " +
                         std::to_string(cfg.replicates) + " replicates failed");
  out.lo = 0.0;
  out.hi = quantile(out.values, cfg.level);
  out.low_n = cfg.replicates < 100;
  return out;
}

std::string RelativeDistance::str() const {
  if (within)
    return "WI";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", ratio);
  return buf;
}

RelativeDistance relative_distance(double kl, double hi) {
  if (!(hi > 0.0))
    throw std::invalid_argument("relative_distance: interval upper limit must be positive");
  if (kl <= hi)
    return {true, kl / hi};
  return {false, kl / hi};
}

RelativeDistance ratio_to_reference(double kl, double reference) {
  if (!(reference > 0.0))
    throw std::invalid_argument("ratio_to_reference: reference must be positive");
  return {false, kl / reference};
}

namespace {

KlReport evaluate_rows(const Matrix& outputs, const FmmParams& truth, const EvaluationConfig& cfg, RngStream& rng,
                       const QuantileInterval* interval) {
  if (outputs.cols() != truth.dim())
    throw std::invalid_argument("evaluate: truth dimension does not match the output block");
  RngStream em_stream = rng.substream(1);
  RngStream kl_stream = rng.substream(2);
  KlReport rep;
  rep.fit = fit_gmm_em(outputs, cfg.em, em_stream).params;
  const auto est = kl_mc(truth, rep.fit, cfg.kl_samples, kl_stream);
  rep.kl_mc = est.estimate;
  rep.mc_stderr = est.std_error;
  if (interval) {
    rep.interval = *interval;
    rep.interval.values.clear();
    rep.relative = relative_distance(rep.kl_mc, interval->hi);
  }
  return rep;
}

} // namespace

KlReport evaluate_imputation(const Dataset& completed, const FmmParams& truth, const EvaluationConfig& cfg,
                             RngStream& rng, const QuantileInterval* interval) {
  if (completed.n_missing() != 0)
    throw std::invalid_argument("evaluate_imputation: dataset still has missing rows");
  return evaluate_rows(completed.outputs(), truth, cfg, rng, interval);
}

KlReport evaluate_observed(const Dataset& ds, const FmmParams& truth, const EvaluationConfig& cfg, RngStream& rng,
                           const QuantileInterval* interval) {
  return evaluate_rows(ds.observed_outputs(), truth, cfg, rng, interval);
}

} // namespace lcwm
