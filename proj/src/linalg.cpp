#include "lcwm/linalg.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace lcwm {

namespace {

bool try_llt(const Matrix& a, Matrix& out) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success)
    return false;
  out = llt.matrixL();
  return out.allFinite() && (out.diagonal().array() > 0.0).all();
}

} // namespace

Matrix chol_psd(const Matrix& sigma, std::string_view name) {
  if (sigma.rows() != sigma.cols())
    throw std::invalid_argument(std::string(name) + ": matrix is not square");
  if (!sigma.allFinite())
    throw NumericalError(std::string(name) + ": non-finite entries");
  Matrix l;
  if (try_llt(sigma, l))
    return l;

  const double scale = sigma.diagonal().mean();
  for (double j : {1e-10, 1e-8, 1e-6}) {
    Matrix jittered = sigma;
    jittered.diagonal().array() += j * std::abs(scale);
    if (try_llt(jittered, l))
      return l;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
  std::ostringstream msg;
  msg << name << ": not positive definite after jitter (smallest eigenvalue "
      << eig.eigenvalues().minCoeff() << ")";
  throw NumericalError(msg.str());
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

SpdMatrix::SpdMatrix(Matrix m, std::string_view name) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0)
    throw std::invalid_argument(std::string(name) + ": must be square and non-empty");
  const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, m_.cwiseAbs().maxCoeff()))
    throw std::invalid_argument(std::string(name) + ": not symmetric");
  l_ = chol_psd(m_, name);
}

SpdMatrix SpdMatrix::identity(Index dim) { return SpdMatrix(Matrix::Identity(dim, dim)); }

double SpdMatrix::log_det() const { return 2.0 * l_.diagonal().array().log().sum(); }

Matrix SpdMatrix::inverse() const {
  const Matrix linv = l_.triangularView<Eigen::Lower>().solve(Matrix::Identity(dim(), dim()));
  return linv.transpose() * linv;
}

Vector select(const Vector& v, std::span<const Index> idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    out(static_cast<Index>(i)) = v(idx[i]);
  return out;
}

Matrix select(const Matrix& m, std::span<const Index> rows, std::span<const Index> cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
  return out;
}

GaussianRegression gaussian_regression(const Vector& mu, const Matrix& sigma,
                                       std::span<const Index> given_idx,
                                       std::span<const Index> free_idx) {
  const auto d = static_cast<Index>(given_idx.size());
  const auto p = static_cast<Index>(free_idx.size());
  if (mu.size() != sigma.rows() || sigma.rows() != sigma.cols())
    throw std::invalid_argument("gaussian_regression: dimension mismatch");
  if (p == 0)
    throw std::invalid_argument("gaussian_regression: no free coordinates");

  GaussianRegression reg;
  const Vector mu_y = select(mu, free_idx);
  const Matrix s_yy = select(sigma, free_idx, free_idx);
  if (d == 0) {
    reg.coef = Matrix::Zero(0, p);
    reg.intercept = mu_y;
    reg.cov = s_yy;
    return reg;
  }
  const Vector mu_x = select(mu, given_idx);
  const Matrix s_xx = select(sigma, given_idx, given_idx);
  const Matrix s_xy = select(sigma, given_idx, free_idx);

  const Matrix l = chol_psd(s_xx, "conditioning block");
  // B = Sxx^{-1} Sxy via two triangular solves
  Matrix tmp = l.triangularView<Eigen::Lower>().solve(s_xy);
  reg.coef = l.transpose().triangularView<Eigen::Upper>().solve(tmp);
  reg.intercept = mu_y - reg.coef.transpose() * mu_x;
  reg.cov = symmetrize(s_yy - s_xy.transpose() * reg.coef);
  return reg;
}

ConditionalGaussian conditional_gaussian(const Vector& mu, const SpdMatrix& sigma,
                                         std::span<const Index> given_idx,
                                         const Vector& given_vals) {
  const Index q = mu.size();
  if (sigma.dim() != q)
    throw std::invalid_argument("conditional_gaussian: dimension mismatch");
  if (static_cast<Index>(given_idx.size()) != given_vals.size())
    throw std::invalid_argument("conditional_gaussian: given values do not match indices");
  std::vector<bool> given(static_cast<std::size_t>(q), false);
  for (Index i : given_idx) {
    if (i < 0 || i >= q || given[static_cast<std::size_t>(i)])
      throw std::invalid_argument("conditional_gaussian: bad conditioning index");
    given[static_cast<std::size_t>(i)] = true;
  }
  std::vector<Index> free_idx;
  for (Index i = 0; i < q; ++i)
    if (!given[static_cast<std::size_t>(i)])
      free_idx.push_back(i);
  if (free_idx.empty())
    throw std::invalid_argument("conditional_gaussian: must leave at least one free coordinate");

  GaussianRegression reg = gaussian_regression(mu, sigma.matrix(), given_idx, free_idx);
  Vector mean = reg.intercept;
  if (!given_idx.empty())
    mean += reg.coef.transpose() * given_vals;
  return {std::move(mean), SpdMatrix(std::move(reg.cov), "conditional covariance")};
}

MvnDensity::MvnDensity(Vector mu, const SpdMatrix& sigma) : mu_(std::move(mu)), l_(sigma.cholesky()) {
  if (mu_.size() != sigma.dim())
    throw std::invalid_argument("MvnDensity: dimension mismatch");
  log_norm_ = -0.5 * static_cast<double>(mu_.size()) * std::log(2.0 * std::numbers::pi) -
              l_.diagonal().array().log().sum();
}

double MvnDensity::operator()(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != mu_.size())
    throw std::invalid_argument("mvn_logpdf: dimension mismatch");
  const Index q = mu_.size();
  constexpr Index kStack = 16;
  double stack[kStack];
  Vector heap;
  double* z = stack;
  if (q > kStack) {
    heap.resize(q);
    z = heap.data();
  }
  double quad = 0.0;
  for (Index i = 0; i < q; ++i) {
    double s = x(i) - mu_(i);
    for (Index j = 0; j < i; ++j)
      s -= l_(i, j) * z[j];
    z[i] = s / l_(i, i);
    quad += z[i] * z[i];
  }
  return log_norm_ - 0.5 * quad;
}

} // namespace lcwm
