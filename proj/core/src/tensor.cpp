#include "btnv/tensor.hpp"

#include <string>

#include "btnv/errors.hpp"

namespace btnv {

CpdFactors::CpdFactors(std::vector<Matrix> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw DomainError("CpdFactors: at least one factor is required");
  const auto rows = factors_.front().rows();
  const auto cols = factors_.front().cols();
  if (rows < 1 || cols < 1) throw DomainError("CpdFactors: factors must be non-empty");
  for (const auto& f : factors_) {
    if (f.rows() != rows || f.cols() != cols)
      throw DomainError("CpdFactors: all factors must share the same I x R shape");
  }
}

CpdFactors CpdFactors::zeros(std::size_t order, std::size_t dim, std::size_t rank) {
  const auto i = static_cast<Eigen::Index>(dim);
  const auto r = static_cast<Eigen::Index>(rank);
  return CpdFactors(std::vector<Matrix>(order, Matrix::Zero(i, r)));
}

std::size_t CpdFactors::dim() const noexcept {
  return factors_.empty() ? 0 : static_cast<std::size_t>(factors_.front().rows());
}

std::size_t CpdFactors::rank() const noexcept {
  return factors_.empty() ? 0 : static_cast<std::size_t>(factors_.front().cols());
}

std::size_t vec_index(const MultiIndex& mi) {
  if (mi.indices.size() != mi.dims.size() || mi.dims.empty())
    throw DomainError("vec_index: indices and dims must have equal, non-zero length");
  std::size_t linear = 0;
  std::size_t stride = 1;
  for (std::size_t d = 0; d < mi.dims.size(); ++d) {
    const auto i = mi.indices[d];
    if (i < 1 || i > mi.dims[d])
      throw DomainError("vec_index: index " + std::to_string(i) + " out of range in mode " +
                        std::to_string(d + 1));
    linear += (i - 1) * stride;
    stride *= mi.dims[d];
  }
  return linear + 1;
}

MultiIndex unvec_index(std::size_t linear, const std::vector<std::size_t>& dims) {
  std::size_t total = 1;
  for (auto n : dims) total *= n;
  if (dims.empty() || linear < 1 || linear > total)
    throw DomainError("unvec_index: linear index out of range");
  MultiIndex mi{std::vector<std::size_t>(dims.size()), dims};
  std::size_t rest = linear - 1;
  for (std::size_t d = 0; d < dims.size(); ++d) {
    mi.indices[d] = rest % dims[d] + 1;
    rest /= dims[d];
  }
  return mi;
}

Matrix kronecker(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix khatri_rao(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  if (a.cols() != b.cols())
    throw DomainError("khatri_rao: operands must have the same number of columns");
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out.col(j).segment(i * b.rows(), b.rows()) = a(i, j) * b.col(j);
  return out;
}

Matrix hadamard(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DomainError("hadamard: operands must have the same shape");
  return a.cwiseProduct(b);
}

Vector cpd_reconstruct(const CpdFactors& f, std::size_t max_entries) {
  const std::size_t dim = f.dim();
  std::size_t total = 1;
  for (std::size_t d = 0; d < f.order(); ++d) {
    if (total > max_entries / dim)
      throw SizeLimitError("cpd_reconstruct: I^D exceeds the configured limit of " +
                           std::to_string(max_entries) + " entries");
    total *= dim;
  }

  // Entry vec_index(i_1..i_D) holds sum_r prod_d W^(d)(i_d, r). Mode 1 is the
  // fastest index, so it must be the last (fast) Khatri-Rao operand.
  Matrix chain = f[f.order() - 1];
  for (std::size_t d = f.order() - 1; d-- > 0;) chain = khatri_rao(chain, f[d]);
  return chain.rowwise().sum();
}

namespace {

double ordered_dot(const double* a, const double* b, Eigen::Index n) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

Matrix factor_projection(const Matrix& factor, const Matrix& windows) {
  if (factor.rows() != windows.rows())
    throw DomainError("factor_projection: window length does not match factor rows");
  const Eigen::Index dim = factor.rows();
  Matrix out(factor.cols(), windows.cols());
  for (Eigen::Index n = 0; n < windows.cols(); ++n)
    for (Eigen::Index r = 0; r < factor.cols(); ++r)
      out(r, n) = ordered_dot(factor.col(r).data(), windows.col(n).data(), dim);
  return out;
}

Vector cpd_partial_product(const CpdFactors& f, const Eigen::Ref<const Vector>& u,
                           std::size_t skip) {
  if (static_cast<std::size_t>(u.size()) != f.dim())
    throw DomainError("cpd_partial_product: input length does not match factor rows");
  const Eigen::Index rank = static_cast<Eigen::Index>(f.rank());
  Vector h = Vector::Ones(rank);
  for (std::size_t d = 0; d < f.order(); ++d) {
    if (d == skip) continue;
    for (Eigen::Index r = 0; r < rank; ++r) h(r) *= ordered_dot(f[d].col(r).data(), u.data(), u.size());
  }
  return h;
}

double cpd_dot(const CpdFactors& f, const Eigen::Ref<const Vector>& u) {
  const Vector h = cpd_partial_product(f, u, f.order());
  double total = 0.0;
  for (Eigen::Index r = 0; r < h.size(); ++r) total += h(r);
  return total;
}

}  // namespace btnv
