#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "btnv/tensor.hpp"

namespace btnv {

/// Gamma(shape, rate) variational factor.
struct GammaPosterior {
  double shape = 1.0;
  double rate = 1.0;

  double mean() const noexcept { return shape / rate; }
  /// E[ln x] = digamma(shape) - ln(rate).
  double log_mean() const;
  double entropy() const;
  /// E_q[ln Gamma(x | prior_shape, prior_rate)].
  double expected_log_prior(double prior_shape, double prior_rate) const;

  bool operator==(const GammaPosterior&) const = default;
};

/// Shape/rate pairs of the Gamma hyperpriors: noise (a0, b0), column
/// precisions lambda (c0, d0) and lag precisions delta (g0, h0).
struct Priors {
  double a0 = 1e-6;
  double b0 = 1e-6;
  double c0 = 1e-6;
  double d0 = 1e-6;
  double g0 = 1e-6;
  double h0 = 1e-6;

  /// Throws DomainError unless every constant is positive and finite.
  void validate() const;

  bool operator==(const Priors&) const = default;
};

/// Gaussian posterior of one factor matrix. `covariance` is indexed in the
/// vec layout: entry (i + r I) corresponds to W(i, r).
struct FactorPosterior {
  Matrix mean;        // I x R
  Matrix covariance;  // (I R) x (I R)
};

/// Affine maps used to bring data into the identification scale: inputs to
/// [0, 1] and outputs to zero mean, unit (population) variance.
struct NormalizationRecord {
  double input_min = 0.0;
  double input_max = 1.0;
  double output_mean = 0.0;
  double output_std = 1.0;

  double normalize_input(double u) const { return (u - input_min) / (input_max - input_min); }
  double normalize_output(double y) const { return (y - output_mean) / output_std; }
  double denormalize_output(double y) const { return y * output_std + output_mean; }

  bool operator==(const NormalizationRecord&) const = default;
};

/// Complete variational state: D factor posteriors, R column precisions, I
/// lag precisions shared by every factor, and the noise precision.
struct ModelState {
  std::size_t order = 0;   // D
  std::size_t memory = 0;  // M; I = M + 1
  Priors priors;
  std::vector<FactorPosterior> factors;
  std::vector<GammaPosterior> lambda;
  std::vector<GammaPosterior> delta;
  GammaPosterior tau;
  NormalizationRecord normalization;

  std::size_t dim() const noexcept { return memory + 1; }
  std::size_t rank() const noexcept;

  CpdFactors mean_factors() const;
  Vector lambda_means() const;
  Vector delta_means() const;

  /// Throws DomainError when shapes disagree with order/memory/rank.
  void validate() const;
};

ModelState init_state(std::size_t order, std::size_t memory, std::size_t initial_rank,
                      const Priors& priors, std::uint64_t seed);

/// Diagonal of E[Lambda] (x) E[Delta], length I R, entry (i + r I) = E[lambda_r] E[delta_i].
Vector prior_precision_diagonal(const ModelState& state);

/// E[Lambda] (x) E[Delta] as a dense (I R) x (I R) matrix.
Matrix prior_precision(const ModelState& state);

}  // namespace btnv
