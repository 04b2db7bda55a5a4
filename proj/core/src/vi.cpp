#include "btnv/vi.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>

#include "btnv/errors.hpp"

namespace btnv {

namespace {

using Index = Eigen::Index;
using Clock = std::chrono::steady_clock;

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

bool all_finite(const Matrix& m) { return m.allFinite(); }

// E[W(i, r)^2] for every entry of one factor, as an I x R matrix.
Matrix squared_expectation(const FactorPosterior& f) {
  const Index dim = f.mean.rows();
  const Index rank = f.mean.cols();
  Matrix out = f.mean.cwiseAbs2();
  out += f.covariance.diagonal().reshaped(dim, rank);
  return out;
}

double log_det_spd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NumericError("covariance is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

void FitConfig::validate() const {
  if (order < 1) throw DomainError("FitConfig: order must be at least 1");
  if (initial_rank < 1) throw DomainError("FitConfig: initial rank must be at least 1");
  if (max_iter < 1) throw DomainError("FitConfig: max_iter must be at least 1");
  if (!(elbo_rel_tol > 0.0)) throw DomainError("FitConfig: elbo_rel_tol must be positive");
  if (!(truncation_threshold > 0.0))
    throw DomainError("FitConfig: truncation_threshold must be positive");
}

std::vector<Matrix> factor_moments(const ModelState& state, const Matrix& windows) {
  std::vector<Matrix> moments;
  moments.reserve(state.order);
  for (const auto& f : state.factors) moments.push_back(second_moment(windows, f.mean, f.covariance));
  return moments;
}

FactorPosterior update_factor(const ModelState& state, const Matrix& windows,
                              const Eigen::Ref<const Vector>& y, std::size_t mode,
                              std::span<const Matrix> moments) {
  if (mode >= state.order) throw DomainError("update_factor: mode out of range");
  const double e_tau = state.tau.mean();
  const Index dim = static_cast<Index>(state.dim());
  const Index rank = static_cast<Index>(state.rank());

  Matrix precision = expected_gram(windows, moments, mode);
  precision *= e_tau;
  precision.diagonal() += prior_precision_diagonal(state);

  const Matrix rhs = e_tau * design_times(windows, state.mean_factors(), mode, y).reshaped();

  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-10 * precision.trace() / static_cast<double>(precision.rows());
    precision.diagonal().array() += jitter;
    llt.compute(precision);
    if (llt.info() != Eigen::Success)
      throw NumericError("factor " + std::to_string(mode + 1) +
                         " precision is not positive definite");
  }

  FactorPosterior out;
  out.covariance = llt.solve(Matrix::Identity(dim * rank, dim * rank));
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.mean = llt.solve(rhs).reshaped(dim, rank);
  if (!all_finite(out.covariance) || !all_finite(out.mean))
    throw NumericError("non-finite posterior for factor " + std::to_string(mode + 1));
  return out;
}

FactorPosterior update_factor(const ModelState& state, const Matrix& windows,
                              const Eigen::Ref<const Vector>& y, std::size_t mode) {
  const auto moments = factor_moments(state, windows);
  return update_factor(state, windows, y, mode, moments);
}

std::vector<GammaPosterior> update_delta(const ModelState& state) {
  const Vector lambda = state.lambda_means();
  Vector weighted = Vector::Zero(static_cast<Index>(state.dim()));
  for (const auto& f : state.factors) weighted += squared_expectation(f) * lambda;

  const double shape = state.priors.g0 + 0.5 * static_cast<double>(state.order * state.rank());
  std::vector<GammaPosterior> out(state.dim());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = {shape, state.priors.h0 + 0.5 * weighted(static_cast<Index>(i))};
  return out;
}

std::vector<GammaPosterior> update_lambda(const ModelState& state) {
  const Vector delta = state.delta_means();
  Vector weighted = Vector::Zero(static_cast<Index>(state.rank()));
  for (const auto& f : state.factors) weighted += squared_expectation(f).transpose() * delta;

  const double shape = state.priors.c0 + 0.5 * static_cast<double>(state.order * state.dim());
  std::vector<GammaPosterior> out(state.rank());
  for (std::size_t r = 0; r < out.size(); ++r)
    out[r] = {shape, state.priors.d0 + 0.5 * weighted(static_cast<Index>(r))};
  return out;
}

GammaPosterior update_tau(const ModelState& state, const Matrix& windows,
                          const Eigen::Ref<const Vector>& y, std::span<const Matrix> moments) {
  const double residual = expected_residual(windows, y, state.mean_factors(), moments);
  return {state.priors.a0 + 0.5 * static_cast<double>(y.size()),
          state.priors.b0 + 0.5 * residual};
}

GammaPosterior update_tau(const ModelState& state, const Matrix& windows,
                          const Eigen::Ref<const Vector>& y) {
  const auto moments = factor_moments(state, windows);
  return update_tau(state, windows, y, moments);
}

double compute_elbo(const ModelState& state, const Matrix& windows,
                    const Eigen::Ref<const Vector>& y, std::span<const Matrix> moments) {
  const auto& p = state.priors;
  const double n = static_cast<double>(y.size());
  const double dim = static_cast<double>(state.dim());
  const double rank = static_cast<double>(state.rank());

  // Likelihood.
  const double residual = expected_residual(windows, y, state.mean_factors(), moments);
  double elbo = 0.5 * n * (state.tau.log_mean() - kLog2Pi) - 0.5 * state.tau.mean() * residual;

  // Gaussian factor priors N(0, (Lambda (x) Delta)^-1).
  double sum_log_lambda = 0.0;
  for (const auto& g : state.lambda) sum_log_lambda += g.log_mean();
  double sum_log_delta = 0.0;
  for (const auto& g : state.delta) sum_log_delta += g.log_mean();
  const Vector lambda = state.lambda_means();
  const Vector delta = state.delta_means();
  for (const auto& f : state.factors) {
    const double quad = delta.dot(squared_expectation(f) * lambda);
    elbo += -0.5 * dim * rank * kLog2Pi + 0.5 * dim * sum_log_lambda +
            0.5 * rank * sum_log_delta - 0.5 * quad;
  }

  // Gamma hyperpriors.
  for (const auto& g : state.lambda) elbo += g.expected_log_prior(p.c0, p.d0);
  for (const auto& g : state.delta) elbo += g.expected_log_prior(p.g0, p.h0);
  elbo += state.tau.expected_log_prior(p.a0, p.b0);

  // Entropies.
  for (const auto& f : state.factors)
    elbo += 0.5 * dim * rank * (1.0 + kLog2Pi) + 0.5 * log_det_spd(f.covariance);
  for (const auto& g : state.lambda) elbo += g.entropy();
  for (const auto& g : state.delta) elbo += g.entropy();
  elbo += state.tau.entropy();

  if (!std::isfinite(elbo)) throw NumericError("non-finite evidence lower bound");
  return elbo;
}

double compute_elbo(const ModelState& state, const Matrix& windows,
                    const Eigen::Ref<const Vector>& y) {
  const auto moments = factor_moments(state, windows);
  return compute_elbo(state, windows, y, moments);
}

std::size_t truncate_rank(ModelState& state, double threshold) {
  const std::size_t rank = state.rank();
  if (rank <= 1) return 0;
  const double root_dim = std::sqrt(static_cast<double>(state.dim()));

  std::vector<double> score(rank, 0.0);
  for (const auto& f : state.factors)
    for (std::size_t r = 0; r < rank; ++r)
      score[r] = std::max(score[r], f.mean.col(static_cast<Index>(r)).norm() / root_dim);
  const double cutoff = threshold * *std::max_element(score.begin(), score.end());

  std::vector<Index> keep;
  for (std::size_t r = 0; r < rank; ++r)
    if (!(score[r] < cutoff)) keep.push_back(static_cast<Index>(r));
  if (keep.size() == rank) return 0;

  const Index dim = static_cast<Index>(state.dim());
  std::vector<Index> entries;
  entries.reserve(keep.size() * static_cast<std::size_t>(dim));
  for (Index r : keep)
    for (Index i = 0; i < dim; ++i) entries.push_back(r * dim + i);

  for (auto& f : state.factors) {
    f.mean = f.mean(Eigen::all, keep).eval();
    f.covariance = f.covariance(entries, entries).eval();
  }
  std::vector<GammaPosterior> lambda;
  lambda.reserve(keep.size());
  for (Index r : keep) lambda.push_back(state.lambda[static_cast<std::size_t>(r)]);
  state.lambda = std::move(lambda);
  return rank - keep.size();
}

FitResult identify(const LaggedInputMatrix& inputs, const Eigen::Ref<const Vector>& y,
                   const FitConfig& config, const Priors& priors) {
  config.validate();
  return identify_from(
      init_state(config.order, inputs.memory(), config.initial_rank, priors, config.seed), inputs,
      y, config);
}

FitResult identify_from(ModelState state, const LaggedInputMatrix& inputs,
                        const Eigen::Ref<const Vector>& y, const FitConfig& config) {
  config.validate();
  state.validate();
  if (state.memory != inputs.memory())
    throw DomainError("identify: model memory does not match the input windows");
  if (static_cast<std::size_t>(y.size()) != inputs.samples())
    throw DomainError("identify: output length does not match the number of windows");

  const Matrix& windows = inputs.matrix();
  const auto start = Clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  FitResult result;
  std::vector<Matrix> moments = factor_moments(state, windows);
  std::size_t iter = 0;
  try {
    for (iter = 1; iter <= config.max_iter; ++iter) {
      for (std::size_t d = 0; d < state.order; ++d) {
        state.factors[d] = update_factor(state, windows, y, d, moments);
        moments[d] = second_moment(windows, state.factors[d].mean, state.factors[d].covariance);
      }
      if (config.delta_enabled) state.delta = update_delta(state);
      state.lambda = update_lambda(state);
      if (config.tau_every_sweep) state.tau = update_tau(state, windows, y, moments);

      const double elbo = compute_elbo(state, windows, y, moments);
      auto& records = result.trace.records;
      records.push_back({iter, elbo, state.rank(), state.tau.mean(), elapsed()});

      if (truncate_rank(state, config.truncation_threshold) > 0) {
        moments = factor_moments(state, windows);
        continue;
      }
      if (records.size() >= 2) {
        const auto& prev = records[records.size() - 2];
        if (prev.rank == records.back().rank &&
            std::abs(elbo - prev.elbo) < config.elbo_rel_tol * std::abs(prev.elbo)) {
          result.trace.converged = true;
          break;
        }
      }
    }
    state.tau = update_tau(state, windows, y, moments);
  } catch (const NumericError& e) {
    throw NumericError(e.what(), std::min(iter, config.max_iter));
  }

  result.trace.runtime_seconds = elapsed();
  result.state = std::move(state);
  return result;
}

}  // namespace btnv
