#pragma once

// Dense tensor primitives used throughout the library.
//
// Layout convention: vectorization is first-index-fastest, and the Kronecker
// product takes its first operand as the slow (block) index. Together these
// make vec() of an I x R matrix its columns stacked in order, which is exactly
// Eigen's column-major storage. Every structured matrix in the solver
// (design matrices, covariances, prior precisions) is laid out this way.

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace btnv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// D factor matrices of a rank-R canonical polyadic decomposition, all I x R.
/// Column r of factor d is the rank-one component w_r^(d); row i collects the
/// weights of input lag i.
class CpdFactors {
 public:
  CpdFactors() = default;
  explicit CpdFactors(std::vector<Matrix> factors);

  /// D zero-initialized I x R factors.
  static CpdFactors zeros(std::size_t order, std::size_t dim, std::size_t rank);

  std::size_t order() const noexcept { return factors_.size(); }
  std::size_t dim() const noexcept;
  std::size_t rank() const noexcept;

  const Matrix& operator[](std::size_t d) const { return factors_[d]; }
  Matrix& operator[](std::size_t d) { return factors_[d]; }

  const std::vector<Matrix>& factors() const noexcept { return factors_; }

 private:
  std::vector<Matrix> factors_;
};

/// Multi-index with one-based entries, i_d in [1, I_d].
struct MultiIndex {
  std::vector<std::size_t> indices;
  std::vector<std::size_t> dims;
};

/// One-based linear index i = i_1 + sum_{d>=2} (i_d - 1) prod_{k<d} I_k.
std::size_t vec_index(const MultiIndex& mi);

/// Inverse of vec_index for the given extents.
MultiIndex unvec_index(std::size_t linear, const std::vector<std::size_t>& dims);

/// Kronecker product with `a` as the slow operand.
Matrix kronecker(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b);

/// Column-wise Kronecker product of two matrices with equal column counts.
Matrix khatri_rao(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b);

Matrix hadamard(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b);

inline constexpr std::size_t kDefaultReconstructLimit = 1'000'000;

/// Full coefficient vector vec(W), length I^D, with entry
/// vec_index(i_1..i_D) = sum_r prod_d W^(d)(i_d, r). Exists for testing;
/// throws SizeLimitError when I^D exceeds `max_entries`.
Vector cpd_reconstruct(const CpdFactors& f,
                       std::size_t max_entries = kDefaultReconstructLimit);

/// W^T U as an R x N matrix. Each entry is accumulated in index order, so it
/// is bitwise independent of R, N and the storage offset of the column.
Matrix factor_projection(const Matrix& factor, const Matrix& windows);

/// (u (x) ... (x) u)^T cpd_reconstruct(f), evaluated in O(DIR) as
/// 1_R^T (W^(1)T u * ... * W^(D)T u).
double cpd_dot(const CpdFactors& f, const Eigen::Ref<const Vector>& u);

/// The R-vector h = Hadamard product over d != skip of W^(d)T u. Passing
/// skip >= order() multiplies all modes. The empty product is all ones.
Vector cpd_partial_product(const CpdFactors& f, const Eigen::Ref<const Vector>& u,
                           std::size_t skip);

}  // namespace btnv
