#pragma once

// Mean-field coordinate ascent for the CPD-Volterra model.
//
// One sweep updates every factor posterior in turn, then the lag precisions
// delta, the column precisions lambda and (by default) the noise precision
// tau, evaluates the evidence lower bound and finally prunes rank components
// whose weights have collapsed. All updates are the closed-form conjugate
// ones, so the bound never decreases between two sweeps at the same rank.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "btnv/model.hpp"
#include "btnv/volterra.hpp"

namespace btnv {

struct FitConfig {
  std::size_t order = 3;          // D
  std::size_t initial_rank = 20;  // R before truncation
  std::size_t max_iter = 200;
  double elbo_rel_tol = 1e-6;
  /// A component is dropped when its largest per-factor column RMS falls
  /// below this fraction of the largest column RMS over all components.
  double truncation_threshold = 1e-3;
  /// When false, delta stays at its initial value (no lag penalization).
  bool delta_enabled = true;
  /// When false, tau is only updated once after the sweep loop.
  bool tau_every_sweep = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TraceRecord {
  std::size_t iteration = 0;  // one-based sweep index
  double elbo = 0.0;
  std::size_t rank = 0;  // rank at the time the bound was evaluated
  double e_tau = 0.0;
  double seconds = 0.0;  // wall time since the start of the fit
};

struct FitTrace {
  std::vector<TraceRecord> records;
  bool converged = false;
  double runtime_seconds = 0.0;
};

struct FitResult {
  ModelState state;
  FitTrace trace;
};

/// Second moments of every factor, see second_moment().
std::vector<Matrix> factor_moments(const ModelState& state, const Matrix& windows);

/// Closed-form Gaussian update of factor `mode` given all other posteriors.
/// `moments` must hold current second moments of every factor.
FactorPosterior update_factor(const ModelState& state, const Matrix& windows,
                              const Eigen::Ref<const Vector>& y, std::size_t mode,
                              std::span<const Matrix> moments);
FactorPosterior update_factor(const ModelState& state, const Matrix& windows,
                              const Eigen::Ref<const Vector>& y, std::size_t mode);

std::vector<GammaPosterior> update_delta(const ModelState& state);
std::vector<GammaPosterior> update_lambda(const ModelState& state);

GammaPosterior update_tau(const ModelState& state, const Matrix& windows,
                          const Eigen::Ref<const Vector>& y, std::span<const Matrix> moments);
GammaPosterior update_tau(const ModelState& state, const Matrix& windows,
                          const Eigen::Ref<const Vector>& y);

/// Evidence lower bound E_q[ln p(y, theta)] + H(q).
double compute_elbo(const ModelState& state, const Matrix& windows,
                    const Eigen::Ref<const Vector>& y, std::span<const Matrix> moments);
double compute_elbo(const ModelState& state, const Matrix& windows,
                    const Eigen::Ref<const Vector>& y);

/// Remove collapsed rank components in place; returns how many were removed.
/// At least one component is always kept.
std::size_t truncate_rank(ModelState& state, double threshold);

/// Run the full identification from a seeded initial state.
FitResult identify(const LaggedInputMatrix& inputs, const Eigen::Ref<const Vector>& y,
                   const FitConfig& config, const Priors& priors);

/// Same, starting from a caller-provided state (its order/memory must match).
FitResult identify_from(ModelState initial, const LaggedInputMatrix& inputs,
                        const Eigen::Ref<const Vector>& y, const FitConfig& config);

}  // namespace btnv
