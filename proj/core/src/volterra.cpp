#include "btnv/volterra.hpp"

#include <cmath>

#include "btnv/errors.hpp"

namespace btnv {

namespace {

using Index = Eigen::Index;

// Row-block Hadamard product of W^(k)T U over k != skip; R x N.
Matrix partial_products(const Matrix& windows, const CpdFactors& means, std::size_t skip) {
  Matrix h = Matrix::Ones(static_cast<Index>(means.rank()), windows.cols());
  for (std::size_t k = 0; k < means.order(); ++k) {
    if (k == skip) continue;
    h.array() *= factor_projection(means[k], windows).array();
  }
  return h;
}

void check_windows(const Matrix& windows, const CpdFactors& means) {
  if (static_cast<std::size_t>(windows.rows()) != means.dim())
    throw DomainError("window length does not match factor rows");
}

}  // namespace

LaggedInputMatrix::LaggedInputMatrix(Matrix windows, std::size_t memory)
    : windows_(std::move(windows)), memory_(memory) {
  if (static_cast<std::size_t>(windows_.rows()) != memory_ + 1)
    throw DomainError("LaggedInputMatrix: expected M + 1 rows");
}

LaggedInputMatrix LaggedInputMatrix::drop_leading(std::size_t count) const {
  if (count >= samples()) throw DomainError("drop_leading: no samples would remain");
  const auto n = static_cast<Index>(count);
  return LaggedInputMatrix(windows_.rightCols(windows_.cols() - n), memory_);
}

LaggedInputMatrix build_lagged_matrix(std::span<const double> signal, std::size_t memory) {
  if (signal.empty()) throw DomainError("build_lagged_matrix: empty input signal");
  if (memory < 1) throw DomainError("build_lagged_matrix: memory must be at least 1");
  const auto n_samples = static_cast<Index>(signal.size());
  const auto m = static_cast<Index>(memory);
  Matrix windows = Matrix::Zero(m + 1, n_samples);
  windows.row(0).setOnes();
  for (Index n = 0; n < n_samples; ++n)
    for (Index lag = 0; lag < m && lag <= n; ++lag)
      windows(1 + lag, n) = signal[static_cast<std::size_t>(n - lag)];
  return LaggedInputMatrix(std::move(windows), memory);
}

Vector build_window(std::span<const double> signal, std::size_t n, std::size_t memory) {
  if (n >= signal.size()) throw DomainError("build_window: sample index out of range");
  Vector u = Vector::Zero(static_cast<Index>(memory + 1));
  u(0) = 1.0;
  for (std::size_t lag = 0; lag < memory && lag <= n; ++lag)
    u(static_cast<Index>(1 + lag)) = signal[n - lag];
  return u;
}

Matrix design_matrix(const Matrix& windows, const CpdFactors& means, std::size_t mode) {
  check_windows(windows, means);
  if (mode >= means.order()) throw DomainError("design_matrix: mode out of range");
  const Matrix h = partial_products(windows, means, mode);
  return khatri_rao(h, windows);
}

Matrix design_times(const Matrix& windows, const CpdFactors& means, std::size_t mode,
                    const Eigen::Ref<const Vector>& y) {
  check_windows(windows, means);
  if (y.size() != windows.cols()) throw DomainError("design_times: y length mismatch");
  Matrix h = partial_products(windows, means, mode);
  h.array().rowwise() *= y.transpose().array();
  return windows * h.transpose();
}

Matrix second_moment(const Matrix& windows, const Matrix& mean, const Matrix& cov) {
  const Index dim = mean.rows();
  const Index rank = mean.cols();
  if (windows.rows() != dim) throw DomainError("second_moment: window length mismatch");
  if (cov.rows() != dim * rank || cov.cols() != dim * rank)
    throw DomainError("second_moment: covariance must be (I R) x (I R)");

  const Matrix proj = factor_projection(mean, windows);
  Matrix out(rank * rank, windows.cols());
  for (Index r = 0; r < rank; ++r) {
    for (Index s = r; s < rank; ++s) {
      const auto block = cov.block(r * dim, s * dim, dim, dim);
      Eigen::RowVectorXd quad = (windows.array() * (block * windows).array()).colwise().sum();
      quad.array() += proj.row(r).array() * proj.row(s).array();
      out.row(r + s * rank) = quad;
      if (s != r) out.row(s + r * rank) = quad;
    }
  }
  return out;
}

Matrix moment_at(const Matrix& moments, std::size_t n, std::size_t rank) {
  const auto r = static_cast<Index>(rank);
  return moments.col(static_cast<Index>(n)).reshaped(r, r);
}

Matrix expected_gram(const Matrix& windows, std::span<const Matrix> moments, std::size_t mode) {
  if (moments.empty() || mode >= moments.size())
    throw DomainError("expected_gram: mode out of range");
  const Index n_samples = windows.cols();
  const Index dim = windows.rows();
  const Index rank_sq = moments[mode].rows();
  const auto rank = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(rank_sq))));

  Matrix h = Matrix::Ones(rank_sq, n_samples);
  for (std::size_t k = 0; k < moments.size(); ++k) {
    if (k == mode) continue;
    if (moments[k].rows() != rank_sq || moments[k].cols() != n_samples)
      throw DomainError("expected_gram: inconsistent second-moment shapes");
    h.array() *= moments[k].array();
  }

  Matrix gram(dim * rank, dim * rank);
  Matrix weighted(dim, n_samples);
  for (Index r = 0; r < rank; ++r) {
    for (Index s = r; s < rank; ++s) {
      weighted = windows.array().rowwise() * h.row(r + s * rank).array();
      gram.block(r * dim, s * dim, dim, dim).noalias() = weighted * windows.transpose();
      if (s == r) {
        auto diag = gram.block(r * dim, r * dim, dim, dim);
        diag = (0.5 * (diag + diag.transpose())).eval();
      } else {
        gram.block(s * dim, r * dim, dim, dim) = gram.block(r * dim, s * dim, dim, dim).transpose();
      }
    }
  }
  return gram;
}

double expected_residual(const Matrix& windows, const Eigen::Ref<const Vector>& y,
                         const CpdFactors& means, std::span<const Matrix> moments) {
  check_windows(windows, means);
  if (y.size() != windows.cols()) throw DomainError("expected_residual: y length mismatch");
  if (moments.size() != means.order())
    throw DomainError("expected_residual: one moment set per factor is required");

  const Vector yhat = predict_means(windows, means);
  Matrix prod = moments[0];
  for (std::size_t k = 1; k < moments.size(); ++k) prod.array() *= moments[k].array();
  // ||y - yhat||^2 plus the posterior spread sum_n (1^T M_n 1 - yhat_n^2); the
  // second sum is non-negative and small, so splitting avoids cancellation.
  const Vector spread = prod.colwise().sum().transpose() - yhat.cwiseAbs2();
  return (y - yhat).squaredNorm() + spread.sum();
}

Vector predict_means(const Matrix& windows, const CpdFactors& means) {
  check_windows(windows, means);
  Vector out(windows.cols());
  for (Index n = 0; n < windows.cols(); ++n) out(n) = cpd_dot(means, windows.col(n));
  return out;
}

}  // namespace btnv
