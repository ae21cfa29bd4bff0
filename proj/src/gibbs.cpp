#include "lcwm/gibbs.hpp"

#include "lcwm/diagnostics.hpp"
#include "lcwm/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lcwm {

namespace {

constexpr double kLogTiny = -690.7755278982137; // ln(1e-300)
// Largest double below one; stick variables of non-final components stay under it.
const double kStickMax = std::nextafter(1.0, 0.0);

std::size_t to_size(Index i) { return static_cast<std::size_t>(i); }

// Draws from unnormalized log-weights held in `buf`; overwrites `buf`.
Index draw_log_weights(RngStream& rng, std::vector<double>& buf) {
  const double m = *std::max_element(buf.begin(), buf.end());
  if (!std::isfinite(m))
    throw NumericalError("allocation weights are not finite");
  double total = 0.0;
  for (double& v : buf) {
    v = std::exp(v - m);
    total += v;
  }
  const double u = rng.uniform() * total;
  double acc = 0.0;
  Index last = 0;
  for (std::size_t k = 0; k < buf.size(); ++k) {
    if (buf[k] <= 0.0)
      continue;
    acc += buf[k];
    last = static_cast<Index>(k);
    if (u < acc)
      return last;
  }
  return last;
}

std::vector<double> log_alpha(const Vector& alpha) {
  std::vector<double> out(to_size(alpha.size()));
  for (Index g = 0; g < alpha.size(); ++g)
    out[to_size(g)] = alpha(g) > 0.0 ? std::log(alpha(g)) : -std::numeric_limits<double>::infinity();
  return out;
}

std::vector<Index> range_index(Index begin, Index end) {
  std::vector<Index> out;
  for (Index i = begin; i < end; ++i)
    out.push_back(i);
  return out;
}

void write_y(GibbsState& state, const MixtureData& data, std::size_t k, const Vector& y) {
  const Index col = data.missing_rows[k];
  state.w.col(col).tail(data.p) = y;
  state.y_mis.row(static_cast<Index>(k)) = y.transpose();
}

} // namespace

MixtureData MixtureData::from_dataset(const Dataset& ds, const std::vector<Index>& input_cols) {
  ds.validate();
  for (Index c : input_cols)
    if (std::find(ds.roles.input_idx.begin(), ds.roles.input_idx.end(), c) == ds.roles.input_idx.end())
      throw std::invalid_argument("column '" + (c >= 0 && c < ds.cols() ? ds.columns[to_size(c)] : std::to_string(c)) +
                                  "' is not an input column");
  MixtureData out;
  out.d = static_cast<Index>(input_cols.size());
  out.p = ds.roles.p();
  out.source_cols = input_cols;
  out.source_cols.insert(out.source_cols.end(), ds.roles.output_idx.begin(), ds.roles.output_idx.end());
  out.w.resize(out.q(), ds.rows());
  for (Index i = 0; i < ds.rows(); ++i)
    for (Index j = 0; j < out.q(); ++j)
      out.w(j, i) = ds.values(i, out.source_cols[to_size(j)]);
  out.missing_rows = ds.missing_rows();
  out.observed_rows = ds.observed_rows();
  return out;
}

MixtureData MixtureData::from_dataset(const Dataset& ds) { return from_dataset(ds, ds.roles.input_idx); }

Hyperparams Hyperparams::defaults(const MixtureData& data, Index g_max) {
  if (data.observed_rows.empty())
    throw std::invalid_argument("no fully observed rows");
  Hyperparams hp;
  hp.g_max = g_max;
  hp.f = static_cast<double>(data.q()) + 2.0;
  hp.mu0 = Vector::Zero(data.q());
  for (Index j = 0; j < data.q(); ++j) {
    double s = 0.0;
    for (Index i : data.observed_rows)
      s += data.w(j, i);
    const double obs_mean = s / static_cast<double>(data.observed_rows.size());
    if (j < data.d) {
      for (Index i : data.missing_rows)
        s += data.w(j, i);
      hp.mu0(j) = s / static_cast<double>(data.n());
    } else {
      hp.mu0(j) = obs_mean;
    }
  }
  return hp;
}

void Hyperparams::validate(Index q) const {
  if (g_max < 1)
    throw std::invalid_argument("Hyperparams: g_max must be at least 1");
  if (mu0.size() != q)
    throw std::invalid_argument("Hyperparams: mu0 has the wrong dimension");
  if (!(h > 0.0))
    throw std::invalid_argument("Hyperparams: h must be positive");
  if (!(f > static_cast<double>(q) - 1.0))
    throw std::invalid_argument("Hyperparams: f must exceed q - 1");
  if (!(a_delta > 0.0) || !(b_delta > 0.0) || !(a_eta > 0.0) || !(b_eta > 0.0))
    throw std::invalid_argument("Hyperparams: gamma hyperparameters must be positive");
}

void SamplerConfig::validate() const {
  if (burn_in < 0 || burn_in >= max_sweeps)
    throw std::invalid_argument("SamplerConfig: need 0 <= burn_in < max_sweeps");
  if (thin < 1)
    throw std::invalid_argument("SamplerConfig: thin must be at least 1");
  if (store_imputations < 1)
    throw std::invalid_argument("SamplerConfig: store_imputations must be at least 1");
  if (ess_check_every < 1)
    throw std::invalid_argument("SamplerConfig: ess_check_every must be at least 1");
}

Vector stick_to_alpha(const Vector& nu) {
  Vector alpha(nu.size());
  double remaining = 1.0;
  for (Index g = 0; g < nu.size(); ++g) {
    alpha(g) = nu(g) * remaining;
    remaining *= 1.0 - nu(g);
  }
  return alpha;
}

std::vector<Index> component_counts(const GibbsState& state) {
  std::vector<Index> counts(to_size(state.params.g()), 0);
  for (Index zi : state.z)
    counts[to_size(zi)] += 1;
  return counts;
}

GibbsState init_state(const MixtureData& data, const Hyperparams& hp, RngStream& rng) {
  hp.validate(data.q());
  if (data.observed_rows.empty())
    throw std::invalid_argument("init_state: no fully observed rows");
  GibbsState state;
  const Index g_max = hp.g_max;
  state.w = data.w;
  state.y_mis.resize(data.n_missing(), data.p);
  if (data.n_missing() > 0) {
    Vector y_mean = Vector::Zero(data.p);
    for (Index i : data.observed_rows)
      y_mean += data.w.col(i).tail(data.p);
    y_mean /= static_cast<double>(data.observed_rows.size());
    for (std::size_t k = 0; k < data.missing_rows.size(); ++k)
      write_y(state, data, k, y_mean);
  }
  state.z.resize(to_size(data.n()));
  for (auto& zi : state.z)
    zi = static_cast<Index>(rng() % static_cast<std::uint64_t>(g_max));
  state.z_mis.assign(data.missing_rows.size(), 0);
  for (std::size_t k = 0; k < data.missing_rows.size(); ++k)
    state.z_mis[k] = state.z[to_size(data.missing_rows[k])];

  state.eta = hp.a_eta / hp.b_eta;
  state.nu = Vector::Ones(g_max);
  for (Index g = 0; g + 1 < g_max; ++g)
    state.nu(g) = std::min(kStickMax, sample_beta(rng, 1.0, state.eta));
  state.params.alpha = stick_to_alpha(state.nu);
  state.delta = Vector::Constant(data.q(), hp.a_delta / hp.b_delta);
  state.params.mu.assign(to_size(g_max), hp.mu0);
  state.params.sigma.assign(to_size(g_max), SpdMatrix::identity(data.q()));
  update_component_params(state, data, hp, rng);
  return state;
}

void update_allocations(GibbsState& state, const MixtureData& data, RngStream& rng) {
  const Index g_count = state.params.g();
  if (g_count == 1) {
    std::fill(state.z.begin(), state.z.end(), 0);
    return;
  }
  const auto la = log_alpha(state.params.alpha);
  std::vector<MvnDensity> dens;
  dens.reserve(to_size(g_count));
  for (Index g = 0; g < g_count; ++g)
    dens.emplace_back(state.params.mu[to_size(g)], state.params.sigma[to_size(g)]);
  std::vector<double> buf(to_size(g_count));
  for (Index i = 0; i < data.n(); ++i) {
    for (Index g = 0; g < g_count; ++g) {
      const auto gs = to_size(g);
      buf[gs] = std::isfinite(la[gs]) ? la[gs] + dens[gs](state.w.col(i)) : la[gs];
    }
    state.z[to_size(i)] = draw_log_weights(rng, buf);
  }
  for (std::size_t k = 0; k < data.missing_rows.size(); ++k)
    state.z_mis[k] = state.z[to_size(data.missing_rows[k])];
}

void update_stick_weights(GibbsState& state, RngStream& rng) {
  const auto counts = component_counts(state);
  const Index g_count = state.params.g();
  std::vector<double> suffix(to_size(g_count) + 1, 0.0);
  for (Index g = g_count - 1; g >= 0; --g)
    suffix[to_size(g)] = suffix[to_size(g) + 1] + static_cast<double>(counts[to_size(g)]);
  for (Index g = 0; g + 1 < g_count; ++g)
    state.nu(g) = std::min(kStickMax, sample_beta(rng, 1.0 + static_cast<double>(counts[to_size(g)]),
                                                  state.eta + suffix[to_size(g) + 1]));
  state.nu(g_count - 1) = 1.0;
  state.params.alpha = stick_to_alpha(state.nu);
}

void update_eta(GibbsState& state, const Hyperparams& hp, RngStream& rng) {
  const Index g_count = state.nu.size();
  double log_alpha_last = 0.0;
  for (Index g = 0; g + 1 < g_count; ++g)
    log_alpha_last += std::log1p(-state.nu(g));
  log_alpha_last = std::max(log_alpha_last, kLogTiny);
  state.eta = sample_gamma(rng, hp.a_eta + static_cast<double>(g_count - 1), hp.b_eta - log_alpha_last);
}

void update_delta(GibbsState& state, const Hyperparams& hp, RngStream& rng) {
  const Index q = state.delta.size();
  const Index g_count = state.params.g();
  Vector diag_sum = Vector::Zero(q);
  for (Index g = 0; g < g_count; ++g)
    diag_sum += state.params.sigma[to_size(g)].inverse().diagonal();
  const double shape = hp.a_delta + 0.5 * static_cast<double>(g_count) * hp.f;
  for (Index j = 0; j < q; ++j)
    state.delta(j) = sample_gamma(rng, shape, hp.b_delta + 0.5 * diag_sum(j));
}

void update_component_params(GibbsState& state, const MixtureData& data, const Hyperparams& hp,
                             RngStream& rng) {
  const Index q = data.q();
  const Index g_count = hp.g_max;
  std::vector<Index> counts(to_size(g_count), 0);
  std::vector<Vector> sums(to_size(g_count), Vector::Zero(q));
  for (Index i = 0; i < data.n(); ++i) {
    const auto g = to_size(state.z[to_size(i)]);
    counts[g] += 1;
    sums[g] += state.w.col(i);
  }
  std::vector<Matrix> scatter(to_size(g_count), Matrix::Zero(q, q));
  std::vector<Vector> means(to_size(g_count));
  for (Index g = 0; g < g_count; ++g)
    if (counts[to_size(g)] > 0)
      means[to_size(g)] = sums[to_size(g)] / static_cast<double>(counts[to_size(g)]);
  Vector centered(q);
  for (Index i = 0; i < data.n(); ++i) {
    const auto g = to_size(state.z[to_size(i)]);
    centered = state.w.col(i) - means[g];
    scatter[g].selfadjointView<Eigen::Lower>().rankUpdate(centered);
  }

  const Matrix delta_mat = state.delta.asDiagonal();
  Vector z(q);
  for (Index g = 0; g < g_count; ++g) {
    const auto gs = to_size(g);
    const double n_g = static_cast<double>(counts[gs]);
    Matrix scale = delta_mat;
    Vector mean = hp.mu0;
    if (counts[gs] > 0) {
      const Vector diff = means[gs] - hp.mu0;
      scale += scatter[gs].selfadjointView<Eigen::Lower>();
      scale += diff * diff.transpose() / (1.0 / hp.h + 1.0 / n_g);
      mean = (hp.h * hp.mu0 + n_g * means[gs]) / (hp.h + n_g);
    }
    SpdMatrix sigma = sample_inverse_wishart(rng, hp.f + n_g, SpdMatrix(symmetrize(scale), "posterior scale"));
    for (Index j = 0; j < q; ++j)
      z(j) = rng.normal();
    state.params.mu[gs] = mean + sigma.cholesky().triangularView<Eigen::Lower>() * z / std::sqrt(hp.h + n_g);
    state.params.sigma[gs] = std::move(sigma);
  }
}

void impute_step(GibbsState& state, const MixtureData& data, RngStream& rng) {
  if (data.n_missing() == 0)
    return;
  const Index g_count = state.params.g();
  const Index d = data.d;
  const Index p = data.p;
  const auto la = log_alpha(state.params.alpha);
  std::vector<double> buf(to_size(g_count));
  Vector noise(p);
  Vector y(p);

  if (d == 0) {
    for (std::size_t k = 0; k < data.missing_rows.size(); ++k) {
      buf = la;
      const Index g = g_count == 1 ? 0 : draw_log_weights(rng, buf);
      state.z_mis[k] = g;
      for (Index j = 0; j < p; ++j)
        noise(j) = rng.normal();
      y = state.params.mu[to_size(g)] +
          state.params.sigma[to_size(g)].cholesky().triangularView<Eigen::Lower>() * noise;
      write_y(state, data, k, y);
    }
    return;
  }

  const auto x_idx = range_index(0, d);
  const auto y_idx = range_index(d, d + p);
  std::vector<MvnDensity> x_dens;
  std::vector<GaussianRegression> reg;
  std::vector<Matrix> cond_chol;
  for (Index g = 0; g < g_count; ++g) {
    const auto& mu = state.params.mu[to_size(g)];
    const auto& sigma = state.params.sigma[to_size(g)].matrix();
    x_dens.emplace_back(mu.head(d), SpdMatrix(sigma.topLeftCorner(d, d), "x-block covariance"));
    reg.push_back(gaussian_regression(mu, sigma, x_idx, y_idx));
    cond_chol.push_back(chol_psd(reg.back().cov, "conditional covariance"));
  }
  for (std::size_t k = 0; k < data.missing_rows.size(); ++k) {
    const auto x = state.w.col(data.missing_rows[k]).head(d);
    Index g = 0;
    if (g_count > 1) {
      for (Index c = 0; c < g_count; ++c) {
        const auto cs = to_size(c);
        buf[cs] = std::isfinite(la[cs]) ? la[cs] + x_dens[cs](x) : la[cs];
      }
      g = draw_log_weights(rng, buf);
    }
    state.z_mis[k] = g;
    const auto& r = reg[to_size(g)];
    for (Index j = 0; j < p; ++j)
      noise(j) = rng.normal();
    y = r.coef.transpose() * x + r.intercept + cond_chol[to_size(g)].triangularView<Eigen::Lower>() * noise;
    write_y(state, data, k, y);
  }
}

void relabel(GibbsState& state) {
  const Index g_count = state.params.g();
  std::vector<Index> order(to_size(g_count));
  std::iota(order.begin(), order.end(), 0);
  const auto& alpha = state.params.alpha;
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return alpha(a) > alpha(b); });
  bool identity = true;
  for (Index g = 0; g < g_count; ++g)
    identity = identity && order[to_size(g)] == g;
  if (identity)
    return;

  std::vector<Index> new_label(to_size(g_count));
  FmmParams sorted;
  sorted.alpha.resize(g_count);
  for (Index g = 0; g < g_count; ++g) {
    const auto old = to_size(order[to_size(g)]);
    new_label[old] = g;
    sorted.alpha(g) = alpha(static_cast<Index>(old));
    sorted.mu.push_back(state.params.mu[old]);
    sorted.sigma.push_back(state.params.sigma[old]);
  }
  state.params = std::move(sorted);
  for (auto& zi : state.z)
    zi = new_label[to_size(zi)];
  for (auto& zi : state.z_mis)
    zi = new_label[to_size(zi)];

  double remaining = 0.0;
  state.nu(g_count - 1) = 1.0;
  for (Index g = g_count - 1; g >= 0; --g) {
    remaining += state.params.alpha(g);
    if (g + 1 < g_count)
      state.nu(g) = remaining > 0.0 ? std::min(kStickMax, state.params.alpha(g) / remaining) : 0.0;
  }
}

void sweep(GibbsState& state, const MixtureData& data, const Hyperparams& hp, RngStream& rng,
           bool do_relabel) {
  update_allocations(state, data, rng);
  update_stick_weights(state, rng);
  update_eta(state, hp, rng);
  update_component_params(state, data, hp, rng);
  update_delta(state, hp, rng);
  impute_step(state, data, rng);
  if (do_relabel)
    relabel(state);
  ++state.iter;
}

double observed_loglik(const GibbsState& state, const MixtureData& data) {
  const FmmEvaluator joint(state.params);
  double total = 0.0;
  for (Index i : data.observed_rows)
    total += joint.logdensity(state.w.col(i));
  if (data.d > 0 && data.n_missing() > 0) {
    const auto x_idx = range_index(0, data.d);
    const FmmEvaluator marginal(state.params.marginal(x_idx));
    for (Index i : data.missing_rows)
      total += marginal.logdensity(state.w.col(i).head(data.d));
  }
  return total;
}

double log_joint(const GibbsState& state, const MixtureData& data, const Hyperparams& hp) {
  const Index g_count = state.params.g();
  const auto la = log_alpha(state.params.alpha);
  std::vector<MvnDensity> dens;
  for (Index g = 0; g < g_count; ++g)
    dens.emplace_back(state.params.mu[to_size(g)], state.params.sigma[to_size(g)]);
  double total = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    const auto g = to_size(state.z[to_size(i)]);
    total += la[g] + dens[g](state.w.col(i));
  }
  const SpdMatrix delta_mat(Matrix(state.delta.asDiagonal()), "Delta");
  for (Index g = 0; g < g_count; ++g) {
    const auto& sigma = state.params.sigma[to_size(g)];
    total += inverse_wishart_logpdf(sigma, hp.f, delta_mat);
    total += mvn_logpdf(state.params.mu[to_size(g)], hp.mu0, SpdMatrix(sigma.matrix() / hp.h, "prior mean covariance"));
  }
  for (Index g = 0; g + 1 < g_count; ++g)
    total += beta_logpdf(state.nu(g), 1.0, state.eta);
  total += gamma_logpdf(state.eta, hp.a_eta, hp.b_eta);
  for (Index j = 0; j < state.delta.size(); ++j)
    total += gamma_logpdf(state.delta(j), hp.a_delta, hp.b_delta);
  return total;
}

namespace {

// Keeps a bounded, evenly thinned record of imputation draws.
class ImputationBuffer {
 public:
  explicit ImputationBuffer(Index m) : cap_(std::max<Index>(32, 4 * m)) {}

  void offer(Index sweep, const Matrix& y) {
    if (seen_++ % stride_ == 0) {
      sweeps_.push_back(sweep);
      draws_.push_back(y);
      if (static_cast<Index>(draws_.size()) > 2 * cap_) {
        std::vector<Index> s;
        std::vector<Matrix> d;
        for (std::size_t k = 0; k < draws_.size(); k += 2) {
          s.push_back(sweeps_[k]);
          d.push_back(std::move(draws_[k]));
        }
        sweeps_ = std::move(s);
        draws_ = std::move(d);
        stride_ *= 2;
      }
    }
    last_sweep_ = sweep;
    last_ = y;
  }

  void emit(Index m, PosteriorDraws& out) const {
    if (m == 1 || draws_.empty()) {
      for (Index k = 0; k < m; ++k) {
        out.completed_y_mis.push_back(last_);
        out.completed_sweeps.push_back(last_sweep_);
      }
      return;
    }
    const auto b = static_cast<double>(draws_.size() - 1);
    for (Index k = 0; k < m; ++k) {
      const auto idx = static_cast<std::size_t>(std::lround(b * static_cast<double>(k) / static_cast<double>(m - 1)));
      out.completed_y_mis.push_back(draws_[idx]);
      out.completed_sweeps.push_back(sweeps_[idx]);
    }
  }

 private:
  Index cap_;
  Index stride_ = 1;
  Index seen_ = 0;
  std::vector<Index> sweeps_;
  std::vector<Matrix> draws_;
  Index last_sweep_ = 0;
  Matrix last_;
};

} // namespace

PosteriorDraws run_sampler(const MixtureData& data, const Hyperparams& hp, const SamplerConfig& cfg,
                           RngStream& rng, const DrawObserver& observer) {
  cfg.validate();
  hp.validate(data.q());
  GibbsState state = init_state(data, hp, rng);
  PosteriorDraws draws;
  draws.nonempty_histogram.assign(to_size(hp.g_max) + 1, 0);
  ImputationBuffer buffer(cfg.store_imputations);
  Index stored = 0;

  for (Index s = 1; s <= cfg.max_sweeps; ++s) {
    sweep(state, data, hp, rng, cfg.relabel);
    const auto counts = component_counts(state);
    const auto nonempty = static_cast<Index>(std::count_if(counts.begin(), counts.end(), [](Index c) { return c > 0; }));
    draws.nonempty_histogram[to_size(nonempty)] += 1;
    if (s > cfg.burn_in && hp.g_max >= 2 && nonempty == hp.g_max)
      draws.g_saturated = true;
    draws.sweeps_run = s;
    if (s <= cfg.burn_in || (s - cfg.burn_in) % cfg.thin != 0)
      continue;

    const double ll = observed_loglik(state, data);
    if (!std::isfinite(ll))
      throw NumericalError("log-likelihood is not finite at sweep " + std::to_string(s));
    draws.loglik.push_back(ll);
    draws.sweep.push_back(s);
    draws.nonempty.push_back(nonempty);
    draws.alpha.push_back(state.params.alpha);
    draws.eta.push_back(state.eta);
    draws.delta.push_back(state.delta);
    if (cfg.store_params)
      draws.params.push_back(state.params);
    buffer.offer(s, state.y_mis);
    if (observer)
      observer(state, data);
    ++stored;

    if (stored >= 10 && stored % cfg.ess_check_every == 0) {
      draws.ess = effective_sample_size(draws.loglik);
      if (draws.ess >= cfg.target_ess)
        break;
    }
  }
  if (draws.loglik.size() >= 10)
    draws.ess = effective_sample_size(draws.loglik);
  draws.below_target = draws.ess < cfg.target_ess;
  buffer.emit(cfg.store_imputations, draws);
  return draws;
}

Dataset complete_dataset(const Dataset& ds, const MixtureData& data, const Matrix& y_mis) {
  if (y_mis.rows() != data.n_missing() || y_mis.cols() != data.p)
    throw std::invalid_argument("complete_dataset: imputation block has the wrong shape");
  Dataset out = ds;
  for (std::size_t k = 0; k < data.missing_rows.size(); ++k) {
    const Index r = data.missing_rows[k];
    for (Index j = 0; j < data.p; ++j)
      out.values(r, data.source_cols[to_size(data.d + j)]) = y_mis(static_cast<Index>(k), j);
    out.missing[to_size(r)] = false;
  }
  return out;
}

FmmParams posterior_mean(const PosteriorDraws& draws) {
  if (draws.params.empty())
    throw std::invalid_argument("posterior_mean: no stored parameter draws");
  const auto& first = draws.params.front();
  const Index g_count = first.g();
  const auto n = static_cast<double>(draws.params.size());
  Vector alpha = Vector::Zero(g_count);
  std::vector<Vector> mu(to_size(g_count), Vector::Zero(first.dim()));
  std::vector<Matrix> sigma(to_size(g_count), Matrix::Zero(first.dim(), first.dim()));
  for (const auto& p : draws.params) {
    alpha += p.alpha;
    for (Index g = 0; g < g_count; ++g) {
      mu[to_size(g)] += p.mu[to_size(g)];
      sigma[to_size(g)] += p.sigma[to_size(g)].matrix();
    }
  }
  FmmParams out;
  out.alpha = alpha / alpha.sum();
  for (Index g = 0; g < g_count; ++g) {
    out.mu.push_back(mu[to_size(g)] / n);
    out.sigma.emplace_back(symmetrize(sigma[to_size(g)] / n), "posterior mean covariance");
  }
  return out;
}

} // namespace lcwm
