#include "lcwm/distributions.hpp"
#include "lcwm/mixture.hpp"
#include "lcwm/params_json.hpp"
#include "lcwm/simulate.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace lcwm;

namespace {

Matrix random_spd(RngStream& rng, Index q) {
  Matrix a(q, q);
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < q; ++j) a(i, j) = rng.normal();
  return a * a.transpose() / static_cast<double>(q) + 0.3 * Matrix::Identity(q, q);
}

Vector random_vector(RngStream& rng, Index q, double scale = 1.0) {
  Vector v(q);
  for (Index i = 0; i < q; ++i) v(i) = scale * rng.normal();
  return v;
}

FmmParams random_fmm(RngStream& rng, Index g, Index q) {
  FmmParams f;
  f.alpha = Vector(g);
  for (Index k = 0; k < g; ++k) f.alpha(k) = 0.2 + rng.uniform();
  f.alpha /= f.alpha.sum();
  for (Index k = 0; k < g; ++k) {
    f.mu.push_back(random_vector(rng, q, 2.0));
    f.sigma.emplace_back(random_spd(rng, q));
  }
  return f;
}

// Shuffled roles so inputs are not always the leading columns.
ColumnRoles random_roles(RngStream& rng, Index q, Index d) {
  std::vector<Index> idx(static_cast<std::size_t>(q));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  ColumnRoles r;
  r.input_idx.assign(idx.begin(), idx.begin() + d);
  r.output_idx.assign(idx.begin() + d, idx.end());
  return r;
}

Vector assemble(const ColumnRoles& r, const Vector& x, const Vector& y) {
  Vector w(r.total());
  for (Index i = 0; i < r.d(); ++i) w(r.input_idx[static_cast<std::size_t>(i)]) = x(i);
  for (Index i = 0; i < r.p(); ++i) w(r.output_idx[static_cast<std::size_t>(i)]) = y(i);
  return w;
}

// Model whose components share one x-marginal.
FmmParams shared_x_model(RngStream& rng, Index g, Index d, Index p) {
  const Index q = d + p;
  Vector mu_x = random_vector(rng, d);
  Matrix sxx = random_spd(rng, d);
  FmmParams f = random_fmm(rng, g, q);
  for (Index k = 0; k < g; ++k) {
    Matrix b = Matrix::Zero(d, p);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < p; ++j) b(i, j) = rng.normal();
    Vector b0 = random_vector(rng, p, 2.0);
    Matrix sc = random_spd(rng, p);
    Matrix s(q, q);
    s.topLeftCorner(d, d) = sxx;
    s.topRightCorner(d, p) = sxx * b;
    s.bottomLeftCorner(p, d) = b.transpose() * sxx;
    s.bottomRightCorner(p, p) = sc + b.transpose() * sxx * b;
    Vector mu(q);
    mu.head(d) = mu_x;
    mu.tail(p) = b.transpose() * mu_x + b0;
    f.mu[static_cast<std::size_t>(k)] = mu;
    f.sigma[static_cast<std::size_t>(k)] = SpdMatrix(s);
  }
  return f;
}

} // namespace

TEST_CASE("independent blocks give zero slopes") {
  FmmParams f;
  f.alpha = Vector::Constant(2, 0.5);
  for (int k = 0; k < 2; ++k) {
    Matrix s = Matrix::Zero(3, 3);
    s(0, 0) = 1.0 + k;
    s.bottomRightCorner(2, 2) << 2.0, 0.4, 0.4, 1.0;
    f.mu.push_back(Vector::Constant(3, k + 1.0));
    f.sigma.emplace_back(s);
  }
  auto l = fmm_to_lcwm(f, ColumnRoles::leading(1, 2));
  for (const auto& c : l.components) {
    CHECK(c.coef.norm() == 0.0);
    CHECK(c.sigma_cond.matrix().isApprox(f.sigma[0].matrix().bottomRightCorner(2, 2)));
  }
  CHECK(l.components[1].intercept.isApprox(Vector::Constant(2, 2.0)));
}

TEST_CASE("component one of the simulation model maps by hand") {
  FmmParams f = sim_preset_params();
  auto l = fmm_to_lcwm(f, sim_preset_roles());
  const auto& c = l.components[0];
  Matrix bt = Matrix::Constant(2, 2, 1.0 / 3.0);
  CHECK((c.coef.transpose() - bt).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(c.intercept(0) - 8.0 / 3.0) < 1e-12);
  CHECK(std::abs(c.intercept(1) - 2.0 / 3.0) < 1e-12);
  Matrix sc(2, 2);
  sc << 2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0;
  CHECK((c.sigma_cond.matrix() - sc).cwiseAbs().maxCoeff() < 1e-12);

  // Same numbers from conditioning the joint at an arbitrary x.
  std::vector<Index> xs{0, 1};
  Vector x(2);
  x << -0.7, 2.2;
  auto cond = conditional_gaussian(f.mu[0], f.sigma[0], xs, x);
  CHECK((cond.mean - (c.coef.transpose() * x + c.intercept)).norm() < 1e-12);
  CHECK((cond.cov.matrix() - c.sigma_cond.matrix()).norm() < 1e-12);
}

TEST_CASE("no inputs keeps the output block") {
  RngStream rng(2);
  FmmParams f = random_fmm(rng, 3, 2);
  auto l = fmm_to_lcwm(f, ColumnRoles::leading(0, 2));
  for (Index k = 0; k < 3; ++k) {
    const auto& c = l.components[static_cast<std::size_t>(k)];
    CHECK(c.coef.size() == 0);
    CHECK(c.intercept.isApprox(f.mu[static_cast<std::size_t>(k)]));
    CHECK(c.sigma_cond.matrix().isApprox(f.sigma[static_cast<std::size_t>(k)].matrix()));
  }
  LcwmEvaluator ev(l);
  Vector x(0);
  Vector y = random_vector(rng, 2);
  Vector r = ev.responsibility_x(x);
  CHECK((r - f.alpha).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("joint density is preserved by the mapping") {
  RngStream rng(7);
  double worst = 0.0;
  for (int model = 0; model < 40; ++model) {
    const Index g = 1 + static_cast<Index>(rng() % 4);
    const Index q = 2 + static_cast<Index>(rng() % 5);
    const Index d = static_cast<Index>(rng() % static_cast<std::uint64_t>(q));
    FmmParams f = random_fmm(rng, g, q);
    ColumnRoles roles = random_roles(rng, q, d);
    auto l = fmm_to_lcwm(f, roles);
    LcwmEvaluator ev(l);
    for (int i = 0; i < 100; ++i) {
      Vector x = random_vector(rng, d, 2.0);
      Vector y = random_vector(rng, q - d, 2.0);
      double a = ev.joint_logdensity(x, y);
      double b = fmm_logdensity(f, assemble(roles, x, y));
      worst = std::max(worst, std::abs(a - b));
      CHECK(std::abs(lcwm_joint_logdensity(l, x, y) - a) < 1e-12);
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("single component without cross covariance factorizes") {
  FmmParams f;
  f.alpha = Vector::Ones(1);
  Matrix s = Matrix::Zero(3, 3);
  s(0, 0) = 1.5;
  s.bottomRightCorner(2, 2) << 1.0, 0.2, 0.2, 0.7;
  Vector mu(3);
  mu << 0.5, -1.0, 2.0;
  f.mu = {mu};
  f.sigma = {SpdMatrix(s)};
  auto l = fmm_to_lcwm(f, ColumnRoles::leading(1, 2));
  Vector x = Vector::Constant(1, 1.3);
  Vector y(2);
  y << 0.1, 2.5;
  double expected = mvn_logpdf(x, mu.head(1), SpdMatrix(Matrix(s.topLeftCorner(1, 1)))) +
                    mvn_logpdf(y, mu.tail(2), SpdMatrix(Matrix(s.bottomRightCorner(2, 2))));
  CHECK(lcwm_joint_logdensity(l, x, y) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("simulation model at the first mean") {
  FmmParams f = sim_preset_params();
  auto l = fmm_to_lcwm(f, sim_preset_roles());
  Vector x = f.mu[0].head(2);
  Vector y = f.mu[0].tail(2);
  double v = lcwm_joint_logdensity(l, x, y);
  CHECK(std::isfinite(v));
  CHECK(std::abs(v - fmm_logdensity(f, f.mu[0])) < 1e-10);
  CHECK(responsibility_xy(l, x, y)(0) > 0.99);
  CHECK(responsibility_x(l, x)(0) > 0.99);
}

TEST_CASE("responsibilities with one component or symmetric components") {
  RngStream rng(9);
  FmmParams one = random_fmm(rng, 1, 3);
  auto l1 = fmm_to_lcwm(one, ColumnRoles::leading(1, 2));
  Vector x = random_vector(rng, 1);
  Vector y = random_vector(rng, 2);
  CHECK(responsibility_xy(l1, x, y)(0) == 1.0);
  CHECK(responsibility_x(l1, x)(0) == 1.0);
  CHECK(responsibility_mrm(l1, x, y)(0) == 1.0);

  FmmParams sym;
  sym.alpha = Vector::Constant(2, 0.5);
  sym.mu = {Vector::Constant(2, -1.0), Vector::Constant(2, 1.0)};
  sym.sigma = {SpdMatrix::identity(2), SpdMatrix::identity(2)};
  auto ls = fmm_to_lcwm(sym, ColumnRoles::leading(1, 1));
  Vector r = responsibility_xy(ls, Vector::Zero(1), Vector::Zero(1));
  CHECK(r(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r(1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("shared x-marginal reduces to the mixture of regressions") {
  RngStream rng(13);
  for (int model = 0; model < 5; ++model) {
    const Index d = 1 + model % 2;
    const Index p = 1 + (model + 1) % 3;
    FmmParams f = shared_x_model(rng, 3, d, p);
    auto l = fmm_to_lcwm(f, ColumnRoles::leading(d, p));
    LcwmEvaluator ev(l);
    const auto& c0 = l.components[0];
    for (int i = 0; i < 100; ++i) {
      Vector x = random_vector(rng, d, 2.0);
      Vector y = random_vector(rng, p, 2.0);
      Vector rxy = ev.responsibility_xy(x, y);
      Vector rmrm = ev.responsibility_mrm(x, y);
      Vector rx = ev.responsibility_x(x);
      CHECK((rxy - rmrm).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((rx - l.alpha()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(std::abs(rxy.sum() - 1.0) < 1e-12);
      CHECK(rxy.minCoeff() >= 0.0);

      // Marginal of x times the mixture of regressions.
      std::vector<double> terms;
      for (Index k = 0; k < l.g(); ++k)
        terms.push_back(std::log(l.components[static_cast<std::size_t>(k)].alpha) + ev.log_conditional_y(k, x, y));
      double mrm = mvn_logpdf(x, c0.mu_x, SpdMatrix(c0.sigma_x)) + log_sum_exp(terms);
      CHECK(std::abs(mrm - ev.joint_logdensity(x, y)) < 1e-10);
    }
  }
}

TEST_CASE("distinct x-marginals separate the responsibilities") {
  FmmParams f = sim_preset_params();
  auto l = fmm_to_lcwm(f, sim_preset_roles());
  LcwmEvaluator ev(l);
  RngStream rng(21);
  double biggest = 0.0;
  for (int i = 0; i < 200; ++i) {
    Vector w = f.mu[static_cast<std::size_t>(i % 2)] + random_vector(rng, 4, 2.0);
    Vector x = w.head(2);
    Vector y = w.tail(2);
    Vector a = ev.responsibility_xy(x, y);
    Vector b = ev.responsibility_mrm(x, y);
    biggest = std::max(biggest, (a - b).cwiseAbs().maxCoeff());
    CHECK(std::abs(a.sum() - 1.0) < 1e-12);
    CHECK(std::abs(b.sum() - 1.0) < 1e-12);
    CHECK(std::abs(ev.responsibility_x(x).sum() - 1.0) < 1e-12);
  }
  CHECK(biggest > 0.1);
}

TEST_CASE("NaN input is an error") {
  FmmParams f = sim_preset_params();
  auto l = fmm_to_lcwm(f, sim_preset_roles());
  Vector x = Vector::Constant(2, std::nan(""));
  CHECK_THROWS_AS(responsibility_x(l, x), NumericalError);
  Vector lw(2);
  lw << 0.0, std::nan("");
  CHECK_THROWS_AS(normalize_log_weights(lw), NumericalError);
}

TEST_CASE("parameters survive a JSON round trip") {
  FmmParams f = sim_preset_params();
  FmmParams back = fmm_from_json(to_json(f));
  CHECK(back.alpha == f.alpha);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(back.mu[k] == f.mu[k]);
    CHECK(back.sigma[k].matrix() == f.sigma[k].matrix());
  }
  FmmParams marg = f.marginal(std::vector<Index>{2, 3});
  CHECK(marg.dim() == 2);
  CHECK(marg.mu[1] == f.mu[1].tail(2));
  f.alpha(0) = 0.7;
  CHECK_THROWS(f.validate());
}
