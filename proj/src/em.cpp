#include "lcwm/evaluation.hpp"

#include "lcwm/distributions.hpp"

#include <cmath>
#include <limits>

namespace lcwm {

namespace {

std::size_t to_size(Index i) { return static_cast<std::size_t>(i); }

struct Degenerate {};

// data is p x n here.
std::vector<Vector> kmeanspp(const Matrix& data, Index g, RngStream& rng) {
  const Index n = data.cols();
  std::vector<Vector> centers;
  centers.push_back(data.col(static_cast<Index>(rng() % static_cast<std::uint64_t>(n))));
  std::vector<double> d2(to_size(n), std::numeric_limits<double>::infinity());
  while (static_cast<Index>(centers.size()) < g) {
    for (Index i = 0; i < n; ++i)
      d2[to_size(i)] = std::min(d2[to_size(i)], (data.col(i) - centers.back()).squaredNorm());
    double total = 0.0;
    for (double v : d2)
      total += v;
    Index pick = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
    if (total > 0.0)
      pick = static_cast<Index>(sample_categorical(rng, d2));
    centers.push_back(data.col(pick));
  }
  return centers;
}

// k-means from the given seeds; returns the final hard labels.
std::vector<Index> lloyd(const Matrix& data, std::vector<Vector> centers, Index max_iter = 100) {
  const Index n = data.cols();
  const auto g = static_cast<Index>(centers.size());
  std::vector<Index> labels(to_size(n), -1);
  for (Index it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      Index arg = 0;
      double bestd = std::numeric_limits<double>::infinity();
      for (Index k = 0; k < g; ++k) {
        const double dd = (data.col(i) - centers[to_size(k)]).squaredNorm();
        if (dd < bestd) {
          bestd = dd;
          arg = k;
        }
      }
      if (labels[to_size(i)] != arg) {
        labels[to_size(i)] = arg;
        changed = true;
      }
    }
    if (!changed)
      break;
    std::vector<Index> counts(to_size(g), 0);
    std::vector<Vector> sums(to_size(g), Vector::Zero(data.rows()));
    for (Index i = 0; i < n; ++i) {
      counts[to_size(labels[to_size(i)])] += 1;
      sums[to_size(labels[to_size(i)])] += data.col(i);
    }
    for (Index k = 0; k < g; ++k)
      if (counts[to_size(k)] > 0)
        centers[to_size(k)] = sums[to_size(k)] / static_cast<double>(counts[to_size(k)]);
  }
  return labels;
}

FmmParams m_step(const Matrix& data, const Matrix& resp, const Vector& floor) {
  const Index n = data.cols();
  const Index p = data.rows();
  const Index g = resp.cols();
  FmmParams out;
  out.alpha.resize(g);
  for (Index k = 0; k < g; ++k) {
    const double nk = resp.col(k).sum();
    if (!(nk >= 1.0))
      throw Degenerate{};
    out.alpha(k) = nk / static_cast<double>(n);
    Vector mu = data * resp.col(k) / nk;
    Matrix centered = data.colwise() - mu;
    Matrix sigma = (centered * resp.col(k).asDiagonal() * centered.transpose()) / nk;
    sigma = symmetrize(sigma);
    for (Index j = 0; j < p; ++j)
      sigma(j, j) = std::max(sigma(j, j), floor(j));
    out.mu.push_back(std::move(mu));
    try {
      out.sigma.emplace_back(sigma, "EM covariance");
    } catch (const NumericalError&) {
      throw Degenerate{};
    }
  }
  out.alpha /= out.alpha.sum();
  return out;
}

double e_step(const Matrix& data, const FmmParams& params, Matrix& resp) {
  const Index n = data.cols();
  const Index g = params.g();
  std::vector<double> la(to_size(g));
  std::vector<MvnDensity> dens;
  for (Index k = 0; k < g; ++k) {
    la[to_size(k)] = std::log(params.alpha(k));
    dens.emplace_back(params.mu[to_size(k)], params.sigma[to_size(k)]);
  }
  double ll = 0.0;
  std::vector<double> terms(to_size(g));
  for (Index i = 0; i < n; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (Index k = 0; k < g; ++k) {
      terms[to_size(k)] = la[to_size(k)] + dens[to_size(k)](data.col(i));
      m = std::max(m, terms[to_size(k)]);
    }
    double s = 0.0;
    for (Index k = 0; k < g; ++k) {
      const double e = std::exp(terms[to_size(k)] - m);
      resp(i, k) = e;
      s += e;
    }
    resp.row(i) /= s;
    ll += m + std::log(s);
  }
  return ll;
}

} // namespace

EmFit fit_gmm_em(const Matrix& rows, const EmConfig& cfg, RngStream& rng) {
  const Index n = rows.rows();
  const Index p = rows.cols();
  const Index g = cfg.g;
  if (g < 1 || cfg.restarts < 1 || cfg.max_iter < 1)
    throw std::invalid_argument("fit_gmm_em: bad configuration");
  if (n <= g * (p + p * (p + 1) / 2))
    throw std::invalid_argument("fit_gmm_em: too few rows for " + std::to_string(g) + " components");
  if (!rows.allFinite())
    throw std::invalid_argument("fit_gmm_em: data contain non-finite values");

  const Matrix data = rows.transpose();
  const Vector mean = data.rowwise().mean();
  const Vector var = (data.colwise() - mean).rowwise().squaredNorm() / static_cast<double>(n);
  const Vector floor = 1e-6 * var;

  EmFit best;
  best.loglik = -std::numeric_limits<double>::infinity();
  bool any = false;
  Index failed = 0;
  Matrix resp(n, g);
  for (Index r = 0; r < cfg.restarts; ++r) {
    RngStream stream = rng.substream(static_cast<std::uint64_t>(r));
    try {
      const std::vector<Index> labels = lloyd(data, kmeanspp(data, g, stream));
      resp.setZero();
      for (Index i = 0; i < n; ++i)
        resp(i, labels[to_size(i)]) = 1.0;
      FmmParams params = m_step(data, resp, floor);
      std::vector<double> trace;
      double prev = e_step(data, params, resp);
      trace.push_back(prev);
      Index it = 0;
      for (it = 1; it <= cfg.max_iter; ++it) {
        params = m_step(data, resp, floor);
        const double ll = e_step(data, params, resp);
        if (!std::isfinite(ll))
          throw Degenerate{};
        trace.push_back(ll);
        const bool done = std::abs(ll - prev) <= cfg.tol * std::abs(prev);
        prev = ll;
        if (done)
          break;
      }
      for (const auto& sigma : params.sigma)
        for (Index j = 0; j < p; ++j)
          if (sigma(j, j) <= floor(j) * (1.0 + 1e-9))
            throw Degenerate{};
      if (!any || prev > best.loglik) {
        best.params = std::move(params);
        best.loglik = prev;
        best.trace = std::move(trace);
        best.iterations = std::min(it, cfg.max_iter);
        any = true;
      }
    } catch (const Degenerate&) {
      ++failed;
    }
  }
  if (!any)
    throw NumericalError("fit_gmm_em: every restart produced a degenerate component");
  best.failed_restarts = failed;
  return best;
}

} // namespace lcwm
