#pragma once

// Volterra feature map and the posterior expectations of the per-mode design
// matrices. All mode indices in this header are zero-based.

#include <cstddef>
#include <span>

#include "btnv/tensor.hpp"

namespace btnv {

/// I x N matrix whose column n is the window (1, u(n), u(n-1), ..., u(n-M+1)),
/// with I = M + 1. Samples before the start of the signal read as zero.
class LaggedInputMatrix {
 public:
  LaggedInputMatrix() = default;
  LaggedInputMatrix(Matrix windows, std::size_t memory);

  const Matrix& matrix() const noexcept { return windows_; }
  std::size_t memory() const noexcept { return memory_; }
  std::size_t dim() const noexcept { return memory_ + 1; }
  std::size_t samples() const noexcept { return static_cast<std::size_t>(windows_.cols()); }

  auto column(std::size_t n) const { return windows_.col(static_cast<Eigen::Index>(n)); }

  /// Drop the first `count` columns (warm-up samples whose windows are mostly padding).
  LaggedInputMatrix drop_leading(std::size_t count) const;

 private:
  Matrix windows_;
  std::size_t memory_ = 0;
};

LaggedInputMatrix build_lagged_matrix(std::span<const double> signal, std::size_t memory);

/// Window for zero-based sample `n` of `signal`.
Vector build_window(std::span<const double> signal, std::size_t n, std::size_t memory);

/// G^(d), (I R) x N. Column n is h_n (x) u_n with h_n the Hadamard product of
/// W^(k)T u_n over k != d, so that vec(W^(d))^T G_n = cpd_dot(means, u_n).
Matrix design_matrix(const Matrix& windows, const CpdFactors& means, std::size_t mode);

/// G^(d) y without materializing G^(d); returned as an I x R matrix (vec
/// layout of a factor).
Matrix design_times(const Matrix& windows, const CpdFactors& means, std::size_t mode,
                    const Eigen::Ref<const Vector>& y);

/// Per-sample second moments E[(W^T u_n)(W^T u_n)^T] for one factor with
/// posterior mean `mean` (I x R) and covariance `cov` ((I R) x (I R)). Returned
/// as an (R R) x N matrix whose column n is vec(M_n).
Matrix second_moment(const Matrix& windows, const Matrix& mean, const Matrix& cov);

/// Unpack column n of a second_moment result into the R x R matrix M_n.
Matrix moment_at(const Matrix& moments, std::size_t n, std::size_t rank);

/// E[G^(d) G^(d)T] = sum_n (Hadamard_{k != d} M_n^(k)) (x) u_n u_n^T.
/// `moments[mode]` is not read.
Matrix expected_gram(const Matrix& windows, std::span<const Matrix> moments, std::size_t mode);

/// E||y - U^{D,T} w||^2 under the factorized posterior.
double expected_residual(const Matrix& windows, const Eigen::Ref<const Vector>& y,
                         const CpdFactors& means, std::span<const Matrix> moments);

/// Plug-in predictions cpd_dot(means, u_n) for every column.
Vector predict_means(const Matrix& windows, const CpdFactors& means);

}  // namespace btnv
