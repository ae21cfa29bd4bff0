#pragma once

#include "lcwm/types.hpp"

#include <span>
#include <string_view>

namespace lcwm {

/// Lower Cholesky factor of a symmetric matrix. If the plain factorization
/// fails, retries with j * mean(diag) * I added for j in {1e-10, 1e-8, 1e-6};
/// throws NumericalError (with the smallest eigenvalue) after that.
Matrix chol_psd(const Matrix& sigma, std::string_view name = "matrix");

/// Symmetric positive definite matrix with its Cholesky factor cached.
class SpdMatrix {
 public:
  explicit SpdMatrix(Matrix m, std::string_view name = "covariance");

  static SpdMatrix identity(Index dim);

  [[nodiscard]] const Matrix& matrix() const noexcept { return m_; }
  [[nodiscard]] const Matrix& cholesky() const noexcept { return l_; }
  [[nodiscard]] Index dim() const noexcept { return m_.rows(); }
  [[nodiscard]] double log_det() const;
  [[nodiscard]] Matrix inverse() const;

  double operator()(Index i, Index j) const { return m_(i, j); }

 private:
  Matrix m_;
  Matrix l_;
};

Matrix symmetrize(const Matrix& m);

/// Gather entries of `v` at `idx`.
Vector select(const Vector& v, std::span<const Index> idx);
/// Gather the `rows` x `cols` block of `m`.
Matrix select(const Matrix& m, std::span<const Index> rows,
              std::span<const Index> cols);

/// Linear-Gaussian view of a partitioned normal: y | x ~ N(B^T x + b0, cov).
struct GaussianRegression {
  Matrix coef;      // B, d x p
  Vector intercept; // b0, length p
  Matrix cov;       // Schur complement, p x p
};

/// Regression of the `free_idx` block on the `given_idx` block of N(mu, sigma).
/// With an empty `given_idx`, coef is d x 0-by-p empty and cov is the free block.
GaussianRegression gaussian_regression(const Vector& mu, const Matrix& sigma,
                                       std::span<const Index> given_idx,
                                       std::span<const Index> free_idx);

struct ConditionalGaussian {
  Vector mean;
  SpdMatrix cov;
};

/// Moments of the free coordinates given the coordinates in `given_idx` equal
/// `given_vals`. The free block keeps its original coordinate order.
ConditionalGaussian conditional_gaussian(const Vector& mu, const SpdMatrix& sigma,
                                         std::span<const Index> given_idx,
                                         const Vector& given_vals);

/// Gaussian log-density with the factorization done once.
class MvnDensity {
 public:
  MvnDensity(Vector mu, const SpdMatrix& sigma);

  [[nodiscard]] double operator()(const Eigen::Ref<const Vector>& x) const;
  [[nodiscard]] Index dim() const noexcept { return mu_.size(); }

 private:
  Vector mu_;
  Matrix l_;
  double log_norm_;
};

} // namespace lcwm
