#include "btnv/model.hpp"

#include <cmath>
#include <random>

#include <boost/math/special_functions/digamma.hpp>

#include "btnv/errors.hpp"

namespace btnv {

double GammaPosterior::log_mean() const {
  return boost::math::digamma(shape) - std::log(rate);
}

double GammaPosterior::entropy() const {
  return shape - std::log(rate) + std::lgamma(shape) + (1.0 - shape) * boost::math::digamma(shape);
}

double GammaPosterior::expected_log_prior(double prior_shape, double prior_rate) const {
  return prior_shape * std::log(prior_rate) - std::lgamma(prior_shape) +
         (prior_shape - 1.0) * log_mean() - prior_rate * mean();
}

void Priors::validate() const {
  for (double v : {a0, b0, c0, d0, g0, h0}) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError("prior constants must be positive and finite");
  }
}

std::size_t ModelState::rank() const noexcept {
  return factors.empty() ? 0 : static_cast<std::size_t>(factors.front().mean.cols());
}

CpdFactors ModelState::mean_factors() const {
  std::vector<Matrix> means;
  means.reserve(factors.size());
  for (const auto& f : factors) means.push_back(f.mean);
  return CpdFactors(std::move(means));
}

Vector ModelState::lambda_means() const {
  Vector out(static_cast<Eigen::Index>(lambda.size()));
  for (std::size_t r = 0; r < lambda.size(); ++r) out(static_cast<Eigen::Index>(r)) = lambda[r].mean();
  return out;
}

Vector ModelState::delta_means() const {
  Vector out(static_cast<Eigen::Index>(delta.size()));
  for (std::size_t i = 0; i < delta.size(); ++i) out(static_cast<Eigen::Index>(i)) = delta[i].mean();
  return out;
}

void ModelState::validate() const {
  if (order < 1 || memory < 1) throw DomainError("model: order and memory must be at least 1");
  if (factors.size() != order) throw DomainError("model: expected one posterior per factor");
  const auto i = static_cast<Eigen::Index>(dim());
  const auto r = static_cast<Eigen::Index>(rank());
  if (r < 1) throw DomainError("model: rank must be at least 1");
  for (const auto& f : factors) {
    if (f.mean.rows() != i || f.mean.cols() != r)
      throw DomainError("model: factor mean must be I x R");
    if (f.covariance.rows() != i * r || f.covariance.cols() != i * r)
      throw DomainError("model: factor covariance must be (I R) x (I R)");
  }
  if (lambda.size() != rank()) throw DomainError("model: lambda length must equal the rank");
  if (delta.size() != dim()) throw DomainError("model: delta length must equal I");
  priors.validate();
}

ModelState init_state(std::size_t order, std::size_t memory, std::size_t initial_rank,
                      const Priors& priors, std::uint64_t seed) {
  if (order < 1 || memory < 1 || initial_rank < 1)
    throw DomainError("init_state: order, memory and rank must be at least 1");
  priors.validate();

  ModelState state;
  state.order = order;
  state.memory = memory;
  state.priors = priors;

  const auto i = static_cast<Eigen::Index>(memory + 1);
  const auto r = static_cast<Eigen::Index>(initial_rank);
  const double scale = 1.0 / std::sqrt(static_cast<double>(initial_rank));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  state.factors.reserve(order);
  for (std::size_t d = 0; d < order; ++d) {
    FactorPosterior f;
    f.mean.resize(i, r);
    // Column-major fill keeps the draw order independent of Eigen internals.
    for (Eigen::Index c = 0; c < r; ++c)
      for (Eigen::Index row = 0; row < i; ++row) f.mean(row, c) = scale * normal(rng);
    f.covariance = Matrix::Identity(i * r, i * r);
    state.factors.push_back(std::move(f));
  }

  state.lambda.assign(initial_rank, GammaPosterior{priors.c0, priors.d0});
  state.delta.assign(memory + 1, GammaPosterior{priors.g0, priors.h0});
  state.tau = GammaPosterior{priors.a0, priors.b0};
  return state;
}

Vector prior_precision_diagonal(const ModelState& state) {
  const Vector lambda = state.lambda_means();
  const Vector delta = state.delta_means();
  return kronecker(lambda, delta).col(0);
}

Matrix prior_precision(const ModelState& state) {
  return prior_precision_diagonal(state).asDiagonal();
}

}  // namespace btnv
