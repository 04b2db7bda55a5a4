#pragma once

// Test-only reference computations. None of these call into the solver
// paths they are used to check.

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "btnv/model.hpp"
#include "btnv/tensor.hpp"

namespace btnv::oracle {

/// Random matrix with i.i.d. standard normal entries.
Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols);

CpdFactors random_factors(std::mt19937_64& rng, std::size_t order, std::size_t dim, std::size_t rank);

/// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double lo, double hi);

/// sum over all multi-indices of prod_d u[i_d] * sum_r prod_d W^(d)(i_d, r),
/// by explicit enumeration.
double brute_force_dot(const CpdFactors& f, const Vector& u);

/// vec of the CPD tensor by explicit enumeration with first index fastest.
Vector brute_force_reconstruct(const CpdFactors& f);

/// Draw vec(W) ~ N(mean, cov) for a factor, returned as an I x R matrix.
class GaussianFactorSampler {
 public:
  GaussianFactorSampler(const Matrix& mean, const Matrix& cov);
  Matrix draw(std::mt19937_64& rng) const;

 private:
  Matrix mean_;
  Matrix chol_;
};

/// Mean-field variational Bayesian linear regression y = X^T w + e with an
/// ARD-style prior w_i ~ N(0, 1/(lambda delta_i)), written directly in
/// terms of X X^T and a dense LU inverse.
struct VbLinearRegression {
  Vector mean;
  Matrix cov;
  GammaPosterior lambda;
  std::vector<GammaPosterior> delta;
  GammaPosterior tau;

  VbLinearRegression(const Priors& priors, Eigen::Index dim);
  /// One sweep in the order w, delta, lambda, tau.
  void sweep(const Matrix& x, const Vector& y, const Priors& priors, bool update_tau = true);
  void update_noise(const Matrix& x, const Vector& y, const Priors& priors);
};

/// Log density of a location-scale Student-t, written from the Gamma-function
/// definition.
double student_t_log_pdf(double y, double location, double scale, double dof);

}  // namespace btnv::oracle
