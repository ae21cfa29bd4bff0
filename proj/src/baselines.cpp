#include "lcwm/baselines.hpp"

#include "lcwm/distributions.hpp"

#include <algorithm>
#include <cmath>

namespace lcwm {

namespace {

std::size_t to_size(Index i) { return static_cast<std::size_t>(i); }

ImputationResult run_gibbs(Method method, const Dataset& ds, const std::vector<Index>& input_cols,
                           const SamplerConfig& cfg, RngStream& rng, Index g_max, const DrawObserver& observer) {
  ImputationResult out;
  out.method = method;
  out.data = MixtureData::from_dataset(ds, input_cols);
  out.hp = Hyperparams::defaults(out.data, g_max);
  if (out.data.n_missing() == 0) {
    out.completed.assign(to_size(cfg.store_imputations), ds);
    return out;
  }
  out.draws = run_sampler(out.data, *out.hp, cfg, rng, observer);
  for (const auto& y : out.draws->completed_y_mis)
    out.completed.push_back(complete_dataset(ds, out.data, y));
  return out;
}

} // namespace

Method method_from_string(const std::string& name) {
  if (name == "cwm")
    return Method::cwm;
  if (name == "mean")
    return Method::mean;
  if (name == "norm")
    return Method::norm;
  if (name == "pmm")
    return Method::pmm;
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::string to_string(Method m) {
  switch (m) {
  case Method::cwm:
    return "cwm";
  case Method::mean:
    return "mean";
  case Method::norm:
    return "norm";
  case Method::pmm:
    return "pmm";
  }
  return "?";
}

void BaselineConfig::validate() const {
  if (pmm_donors < 1)
    throw std::invalid_argument("pmm donors must be at least 1");
  if (pmm_cycles < 1)
    throw std::invalid_argument("pmm cycles must be at least 1");
  if (!(pmm_ridge >= 0.0))
    throw std::invalid_argument("pmm ridge must be nonnegative");
}

ImputationResult impute_cwm(const Dataset& ds, const std::vector<Index>& input_cols, const SamplerConfig& cfg,
                            RngStream& rng, Index g_max, const DrawObserver& observer) {
  return run_gibbs(Method::cwm, ds, input_cols, cfg, rng, g_max, observer);
}

ImputationResult impute_mean(const Dataset& ds, const SamplerConfig& cfg, RngStream& rng, Index g_max,
                             const DrawObserver& observer) {
  return run_gibbs(Method::mean, ds, {}, cfg, rng, g_max, observer);
}

ImputationResult impute_norm(const Dataset& ds, const std::vector<Index>& input_cols, const SamplerConfig& cfg,
                             RngStream& rng, const DrawObserver& observer) {
  return run_gibbs(Method::norm, ds, input_cols, cfg, rng, 1, observer);
}

namespace {

// Ridge-stabilized posterior draw of regression coefficients.
struct NormDraw {
  Vector beta_hat;
  Vector beta_star;
};

NormDraw norm_draw(const Matrix& x, const Vector& y, double ridge, RngStream& rng) {
  const Index k = x.cols();
  Matrix xtx = x.transpose() * x;
  Matrix penalized = xtx;
  penalized.diagonal() += ridge * xtx.diagonal();
  const Matrix v = symmetrize(penalized.inverse());
  NormDraw out;
  out.beta_hat = v * (x.transpose() * y);
  const Vector resid = y - x * out.beta_hat;
  const double df = std::max<double>(static_cast<double>(x.rows() - k), 1.0);
  const double chi2 = sample_gamma(rng, 0.5 * df, 0.5);
  const double sigma_star = std::sqrt(resid.squaredNorm() / chi2);
  Vector z(k);
  for (Index j = 0; j < k; ++j)
    z(j) = rng.normal();
  const Matrix l = chol_psd(v, "pmm coefficient covariance");
  out.beta_star = out.beta_hat + l * z * sigma_star;
  return out;
}

Dataset pmm_chain(const Dataset& ds, const std::vector<Index>& input_cols, const BaselineConfig& cfg,
                  RngStream& rng) {
  Dataset out = ds;
  const auto miss = ds.missing_rows();
  const auto obs = ds.observed_rows();
  if (miss.empty())
    return out;
  if (static_cast<Index>(obs.size()) < cfg.pmm_donors)
    throw std::invalid_argument("pmm: fewer observed donors than the donor count");
  const auto& outs = ds.roles.output_idx;

  for (Index r : miss) {
    const Index donor = obs[to_size(static_cast<Index>(rng() % obs.size()))];
    for (Index c : outs)
      out.values(r, c) = ds.values(donor, c);
  }

  const auto n_obs = static_cast<Index>(obs.size());
  const auto n_mis = static_cast<Index>(miss.size());
  const Index k = 1 + static_cast<Index>(input_cols.size()) + static_cast<Index>(outs.size()) - 1;
  Matrix x_obs(n_obs, k), x_mis(n_mis, k);
  Vector y_obs(n_obs);
  std::vector<std::pair<double, Index>> dist(obs.size());

  for (Index cycle = 0; cycle < cfg.pmm_cycles; ++cycle) {
    for (Index target : outs) {
      auto fill = [&](Matrix& x, const std::vector<Index>& rows) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const auto ri = static_cast<Index>(i);
          Index col = 0;
          x(ri, col++) = 1.0;
          for (Index c : input_cols)
            x(ri, col++) = out.values(rows[i], c);
          for (Index c : outs)
            if (c != target)
              x(ri, col++) = out.values(rows[i], c);
        }
      };
      fill(x_obs, obs);
      fill(x_mis, miss);
      for (Index i = 0; i < n_obs; ++i)
        y_obs(i) = ds.values(obs[to_size(i)], target);

      const NormDraw nd = norm_draw(x_obs, y_obs, cfg.pmm_ridge, rng);
      const Vector pred_obs = x_obs * nd.beta_hat;
      const Vector pred_mis = x_mis * nd.beta_star;
      for (Index m = 0; m < n_mis; ++m) {
        for (Index i = 0; i < n_obs; ++i)
          dist[to_size(i)] = {std::abs(pred_obs(i) - pred_mis(m)), i};
        std::partial_sort(dist.begin(), dist.begin() + cfg.pmm_donors, dist.end());
        const auto pick = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(cfg.pmm_donors));
        out.values(miss[to_size(m)], target) = y_obs(dist[pick].second);
      }
    }
  }
  for (Index r : miss)
    out.missing[to_size(r)] = false;
  return out;
}

} // namespace

ImputationResult impute_pmm(const Dataset& ds, const std::vector<Index>& input_cols, const BaselineConfig& cfg,
                            RngStream& rng, Index m) {
  cfg.validate();
  ds.validate();
  for (Index c : input_cols)
    if (std::find(ds.roles.input_idx.begin(), ds.roles.input_idx.end(), c) == ds.roles.input_idx.end())
      throw std::invalid_argument("pmm: column " + std::to_string(c) + " is not an input column");
  ImputationResult out;
  out.method = Method::pmm;
  out.data = MixtureData::from_dataset(ds, input_cols);
  for (Index k = 0; k < m; ++k) {
    RngStream chain = rng.substream(static_cast<std::uint64_t>(k));
    out.completed.push_back(pmm_chain(ds, input_cols, cfg, chain));
  }
  return out;
}

ImputationResult impute(const Dataset& ds, const std::vector<Index>& input_cols, const BaselineConfig& bcfg,
                        const SamplerConfig& cfg, RngStream& rng, Index g_max, const DrawObserver& observer) {
  switch (bcfg.method) {
  case Method::cwm:
    return impute_cwm(ds, input_cols, cfg, rng, g_max, observer);
  case Method::mean:
    return impute_mean(ds, cfg, rng, g_max, observer);
  case Method::norm:
    return impute_norm(ds, input_cols, cfg, rng, observer);
  case Method::pmm:
    return impute_pmm(ds, input_cols, bcfg, rng, cfg.store_imputations);
  }
  throw std::invalid_argument("unknown method");
}

} // namespace lcwm
