#include "lcwm/diagnostics.hpp"
#include "lcwm/distributions.hpp"
#include "lcwm/linalg.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace lcwm;

namespace {

Matrix random_spd(RngStream& rng, Index q) {
  Matrix a(q, q);
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < q; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + 0.5 * Matrix::Identity(q, q);
}

Vector random_vector(RngStream& rng, Index q) {
  Vector v(q);
  for (Index i = 0; i < q; ++i) v(i) = rng.normal();
  return v;
}

// Explicit determinant and inverse, no factorization.
double naive_logpdf(const Vector& x, const Vector& mu, const Matrix& s) {
  const double q = static_cast<double>(x.size());
  const Vector r = x - mu;
  const double quad = r.dot(s.inverse() * r);
  return -0.5 * q * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(s.determinant()) - 0.5 * quad;
}

} // namespace

TEST_CASE("mvn_logpdf at the mode") {
  CHECK(mvn_logpdf(Vector::Zero(1), Vector::Zero(1), SpdMatrix::identity(1)) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
  for (Index q = 1; q <= 5; ++q) {
    Vector mu = Vector::LinSpaced(q, -1.0, 2.0);
    CHECK(mvn_logpdf(mu, mu, SpdMatrix::identity(q)) ==
          doctest::Approx(-0.5 * static_cast<double>(q) * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
  }
}

TEST_CASE("mvn_logpdf agrees with determinant and inverse") {
  RngStream rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix s = random_spd(rng, 3);
    Vector mu = random_vector(rng, 3);
    Vector x = random_vector(rng, 3);
    CHECK(std::abs(mvn_logpdf(x, mu, SpdMatrix(s)) - naive_logpdf(x, mu, s)) < 1e-10);
    MvnDensity dens(mu, SpdMatrix(s));
    CHECK(std::abs(dens(x) - naive_logpdf(x, mu, s)) < 1e-10);
  }
}

TEST_CASE("mvn_logpdf rejects mismatched dimensions") {
  CHECK_THROWS(mvn_logpdf(Vector::Zero(2), Vector::Zero(3), SpdMatrix::identity(3)));
  CHECK_THROWS(mvn_logpdf(Vector::Zero(2), Vector::Zero(2), SpdMatrix::identity(3)));
}

TEST_CASE("mvn density integrates to one") {
  // Importance sampling with a wider Gaussian proposal.
  RngStream rng(5);
  for (Index q = 1; q <= 3; ++q) {
    Matrix s = random_spd(rng, q);
    Vector mu = random_vector(rng, q);
    SpdMatrix target(s);
    SpdMatrix proposal(Matrix(4.0 * s));
    const int n = 1000000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      Vector x = mvn_sample(rng, mu, proposal);
      sum += std::exp(mvn_logpdf(x, mu, target) - mvn_logpdf(x, mu, proposal));
    }
    CHECK(sum / n == doctest::Approx(1.0).epsilon(0.01));
  }
}

TEST_CASE("mvn_sample moments") {
  RngStream rng(3);
  const int n = 100000;
  Vector mu(2);
  mu << 1.0, 2.0;
  Vector mean = Vector::Zero(2);
  for (int i = 0; i < n; ++i) mean += mvn_sample(rng, mu, SpdMatrix::identity(2));
  mean /= n;
  CHECK(std::abs(mean(0) - 1.0) < 0.02);
  CHECK(std::abs(mean(1) - 2.0) < 0.02);

  Matrix s(2, 2);
  s << 1.0, 0.5, 0.5, 1.0;
  SpdMatrix sigma(s);
  Matrix draws(n, 2);
  for (int i = 0; i < n; ++i) draws.row(i) = mvn_sample(rng, Vector::Zero(2), sigma).transpose();
  Matrix centered = draws.rowwise() - draws.colwise().mean();
  Matrix cov = centered.transpose() * centered / (n - 1);
  CHECK((cov - s).cwiseAbs().maxCoeff() < 0.02);

  const double eps = 1e-12;
  Vector tight = mvn_sample(rng, mu, SpdMatrix(Matrix(eps * Matrix::Identity(2, 2))));
  CHECK((tight - mu).cwiseAbs().maxCoeff() < 6.0 * std::sqrt(eps));
}

TEST_CASE("chol_psd") {
  CHECK(chol_psd(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3)));
  Matrix a(2, 2);
  a << 4, 2, 2, 3;
  Matrix l = chol_psd(a);
  Matrix expected(2, 2);
  expected << 2, 0, 1, std::sqrt(2.0);
  CHECK((l - expected).cwiseAbs().maxCoeff() < 1e-14);

  Matrix neg(2, 2);
  neg << 1, 0, 0, -1;
  CHECK_THROWS_AS(chol_psd(neg), NumericalError);
  CHECK_THROWS_AS(SpdMatrix{neg}, NumericalError);

  // Rank deficient but PSD: rescued by the jitter ladder.
  Matrix rank1(2, 2);
  rank1 << 1, 1, 1, 1;
  Matrix lr = chol_psd(rank1);
  CHECK(((lr * lr.transpose()) - rank1).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("inverse Wishart moments") {
  RngStream rng(17);
  const int n = 100000;
  {
    const double f = 7.0;
    const double delta = 2.5;
    SpdMatrix scale(Matrix::Constant(1, 1, delta));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += sample_inverse_wishart(rng, f, scale)(0, 0);
    CHECK(sum / n == doctest::Approx(delta / (f - 2.0)).epsilon(0.03));
  }
  {
    Matrix sum = Matrix::Zero(2, 2);
    for (int i = 0; i < n; ++i) sum += sample_inverse_wishart(rng, 10.0, SpdMatrix::identity(2)).matrix();
    sum /= n;
    CHECK(sum(0, 0) == doctest::Approx(1.0 / 7.0).epsilon(0.05));
    CHECK(sum(1, 1) == doctest::Approx(1.0 / 7.0).epsilon(0.05));
    CHECK(std::abs(sum(0, 1)) < 0.05 / 7.0);
  }
  CHECK_THROWS(sample_inverse_wishart(rng, 1.0, SpdMatrix::identity(2)));
}

TEST_CASE("gamma, beta and categorical") {
  RngStream rng(23);
  const int n = 100000;
  double g = 0.0;
  double b = 0.0;
  for (int i = 0; i < n; ++i) {
    g += sample_gamma(rng, 3.0, 2.0);
    b += sample_beta(rng, 1.0, 1.0);
  }
  CHECK(g / n == doctest::Approx(1.5).epsilon(0.02));
  CHECK(b / n == doctest::Approx(0.5).epsilon(0.01));

  std::vector<double> w{0.0, 1.0, 0.0};
  for (int i = 0; i < 100; ++i) CHECK(sample_categorical(rng, w) == 1);
  std::vector<double> lw{-1e300, 0.0, -std::numeric_limits<double>::infinity()};
  for (int i = 0; i < 100; ++i) CHECK(sample_categorical_log(rng, lw) == 1);

  CHECK_THROWS(sample_gamma(rng, 0.0, 1.0));
  CHECK_THROWS(sample_gamma(rng, 1.0, -1.0));
  CHECK_THROWS(sample_beta(rng, 1.0, 0.0));
  std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS(sample_categorical(rng, zero));
}

TEST_CASE("conditional_gaussian") {
  Matrix s(2, 2);
  s << 1, 0.5, 0.5, 1;
  std::vector<Index> given{0};
  auto c = conditional_gaussian(Vector::Zero(2), SpdMatrix(s), given, Vector::Constant(1, 2.0));
  CHECK(c.mean(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c.cov(0, 0) == doctest::Approx(0.75).epsilon(1e-14));

  Matrix block = Matrix::Zero(3, 3);
  block(0, 0) = 2.0;
  block.bottomRightCorner(2, 2) << 1.0, 0.3, 0.3, 2.0;
  Vector mu(3);
  mu << 1, 2, 3;
  auto ind = conditional_gaussian(mu, SpdMatrix(block), given, Vector::Constant(1, -4.0));
  CHECK((ind.mean - mu.tail(2)).norm() < 1e-14);
  CHECK((ind.cov.matrix() - block.bottomRightCorner(2, 2)).norm() < 1e-14);

  // Outputs of a four-dimensional component conditioned on inputs at their mean.
  Matrix s1 = Matrix::Constant(4, 4, 0.5);
  s1.diagonal().setOnes();
  Vector mu1(4);
  mu1 << 1, 3, 4, 2;
  std::vector<Index> xs{0, 1};
  auto at_mean = conditional_gaussian(mu1, SpdMatrix(s1), xs, mu1.head(2));
  CHECK((at_mean.mean - mu1.tail(2)).norm() < 1e-12);
}

TEST_CASE("joint density factorizes into marginal and conditional") {
  RngStream rng(29);
  std::vector<Index> xs{0, 2};
  std::vector<Index> ys{1, 3};
  for (int rep = 0; rep < 100; ++rep) {
    Matrix s = random_spd(rng, 4);
    Vector mu = random_vector(rng, 4);
    Vector w = random_vector(rng, 4);
    SpdMatrix sigma(s);
    Vector x = select(w, xs);
    Vector y = select(w, ys);
    auto c = conditional_gaussian(mu, sigma, xs, x);
    SpdMatrix sxx(select(s, xs, xs));
    double lhs = mvn_logpdf(w, mu, sigma);
    double rhs = mvn_logpdf(y, c.mean, c.cov) + mvn_logpdf(x, select(mu, xs), sxx);
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("effective sample size") {
  RngStream rng(31);
  std::vector<double> iid(10000);
  for (auto& v : iid) v = rng.normal();
  double ess = effective_sample_size(iid);
  CHECK(ess >= 8000.0);
  CHECK(ess <= 10500.0);

  const double rho = 0.9;
  std::vector<double> ar(100000);
  double prev = rng.normal() / std::sqrt(1 - rho * rho);
  for (auto& v : ar) {
    prev = rho * prev + rng.normal();
    v = prev;
  }
  const double expected = 100000.0 * (1 - rho) / (1 + rho);
  CHECK(effective_sample_size(ar) == doctest::Approx(expected).epsilon(0.2));

  std::vector<double> constant(50, 3.0);
  CHECK(effective_sample_size(constant) == 50.0);
  std::vector<double> one{1.0};
  CHECK_THROWS(effective_sample_size(one));
}

TEST_CASE("streams are reproducible") {
  RngStream a(42, 7);
  RngStream b(42, 7);
  SpdMatrix s = SpdMatrix::identity(3);
  for (int i = 0; i < 50; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(sample_gamma(a, 0.3, 2.0) == sample_gamma(b, 0.3, 2.0));
    CHECK(sample_beta(a, 2.0, 0.5) == sample_beta(b, 2.0, 0.5));
    CHECK(mvn_sample(a, Vector::Zero(3), s) == mvn_sample(b, Vector::Zero(3), s));
    CHECK(sample_inverse_wishart(a, 6.0, s).matrix() == sample_inverse_wishart(b, 6.0, s).matrix());
  }
  RngStream c(42, 8);
  RngStream d(42, 7);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += c() == d();
  CHECK(same == 0);
  RngStream parent(42, 7);
  RngStream s1 = parent.substream(1);
  RngStream s1b = parent.substream(1);
  RngStream s2 = parent.substream(2);
  CHECK(s1() == s1b());
  CHECK(s1() != s2());
}
