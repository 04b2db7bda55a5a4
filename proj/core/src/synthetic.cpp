#include "btnv/synthetic.hpp"

#include <cmath>
#include <random>
#include <string>

#include "btnv/errors.hpp"
#include "btnv/volterra.hpp"

namespace btnv {

namespace {

std::size_t checked_power(std::size_t base, std::size_t exp, std::size_t limit) {
  std::size_t total = 1;
  for (std::size_t k = 0; k < exp; ++k) {
    if (base != 0 && total > limit / base)
      throw SizeLimitError("kernel size exceeds the limit of " + std::to_string(limit) + " entries");
    total *= base;
  }
  return total;
}

}  // namespace

std::size_t SyntheticSystem::order() const {
  return std::visit([](const auto& k) { return k.order(); }, kernels);
}

std::size_t SyntheticSystem::memory() const {
  if (const auto* k = std::get_if<VolterraKernels>(&kernels)) return k->memory;
  return std::get<CpdFactors>(kernels).dim() - 1;
}

VolterraKernels explicit_kernels(const CpdFactors& factors, std::size_t max_entries) {
  const std::size_t order = factors.order();
  const std::size_t dim = factors.dim();
  if (dim < 2) throw DomainError("explicit_kernels: factors need at least one lag row");
  const std::size_t memory = dim - 1;

  const Vector full = cpd_reconstruct(factors, max_entries);
  VolterraKernels out;
  out.memory = memory;
  for (std::size_t d = 0; d <= order; ++d)
    out.kernels.push_back(Vector::Zero(static_cast<Eigen::Index>(checked_power(memory, d, max_entries))));

  const std::vector<std::size_t> dims(order, dim);
  for (std::size_t linear = 1; linear <= static_cast<std::size_t>(full.size()); ++linear) {
    const MultiIndex mi = unvec_index(linear, dims);
    std::size_t degree = 0;
    std::size_t offset = 0;
    std::size_t stride = 1;
    for (std::size_t i : mi.indices) {
      if (i == 1) continue;  // constant row
      offset += (i - 2) * stride;
      stride *= memory;
      ++degree;
    }
    out.kernels[degree](static_cast<Eigen::Index>(offset)) += full(static_cast<Eigen::Index>(linear - 1));
  }
  return out;
}

std::vector<double> volterra_response(const VolterraKernels& kernels, std::span<const double> u,
                                      std::size_t max_entries) {
  const std::size_t memory = kernels.memory;
  if (kernels.kernels.empty()) throw DomainError("volterra_response: no kernels");
  for (std::size_t d = 0; d < kernels.kernels.size(); ++d) {
    if (static_cast<std::size_t>(kernels.kernels[d].size()) != checked_power(memory, d, max_entries))
      throw DomainError("volterra_response: kernel " + std::to_string(d) + " must have M^d entries");
  }
  const auto lagged = [&](std::size_t n, std::size_t lag) {
    return lag <= n ? u[n - lag] : 0.0;
  };

  std::vector<double> y(u.size(), 0.0);
  for (std::size_t n = 0; n < u.size(); ++n) {
    double acc = kernels.kernels[0](0);
    for (std::size_t d = 1; d < kernels.kernels.size(); ++d) {
      const Vector& k = kernels.kernels[d];
      // Nested sum over (m_1, ..., m_d) with m_1 fastest.
      std::vector<std::size_t> lags(d, 0);
      for (Eigen::Index flat = 0; flat < k.size(); ++flat) {
        double term = k(flat);
        for (std::size_t j = 0; j < d && term != 0.0; ++j) term *= lagged(n, lags[j]);
        acc += term;
        for (std::size_t j = 0; j < d; ++j) {
          if (++lags[j] < memory) break;
          lags[j] = 0;
        }
      }
    }
    y[n] = acc;
  }
  return y;
}

std::vector<double> volterra_response(const CpdFactors& factors, std::span<const double> u) {
  const LaggedInputMatrix windows = build_lagged_matrix(u, factors.dim() - 1);
  const Vector y = predict_means(windows.matrix(), factors);
  return {y.data(), y.data() + y.size()};
}

Dataset synthesize(const SyntheticSystem& system, std::span<const double> u, std::uint64_t seed) {
  for (double v : u)
    if (!std::isfinite(v)) throw DomainError("synthesize: input signal must be finite");
  if (!(system.noise_std >= 0.0)) throw DomainError("synthesize: noise std must be non-negative");

  Dataset data;
  data.u.assign(u.begin(), u.end());
  data.y = std::visit([&](const auto& k) { return volterra_response(k, u); }, system.kernels);
  if (system.noise_std > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, system.noise_std);
    for (auto& v : data.y) v += noise(rng);
  }
  return data;
}

double noise_std_for_snr(std::span<const double> clean, double snr_db) {
  if (clean.empty()) throw DomainError("noise_std_for_snr: empty signal");
  double mean = 0.0;
  for (double v : clean) mean += v;
  mean /= static_cast<double>(clean.size());
  double var = 0.0;
  for (double v : clean) var += (v - mean) * (v - mean);
  var /= static_cast<double>(clean.size());
  return std::sqrt(var / std::pow(10.0, snr_db / 10.0));
}

CpdFactors random_cpd_kernel(std::size_t order, std::size_t memory, std::size_t rank,
                             std::size_t support, std::uint64_t seed) {
  if (order < 1 || memory < 1 || rank < 1)
    throw DomainError("random_cpd_kernel: order, memory and rank must be at least 1");
  if (support < 1 || support > memory)
    throw DomainError("random_cpd_kernel: support must lie in [1, M]");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto dim = static_cast<Eigen::Index>(memory + 1);
  Matrix v = Matrix::Zero(dim, static_cast<Eigen::Index>(rank));
  for (Eigen::Index r = 0; r < v.cols(); ++r) {
    v(0, r) = normal(rng);
    for (Eigen::Index lag = 0; lag < static_cast<Eigen::Index>(support); ++lag)
      v(1 + lag, r) = std::pow(0.8, static_cast<double>(lag)) * normal(rng);
  }
  return CpdFactors(std::vector<Matrix>(order, v));
}

std::vector<double> random_input(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<double> u(n);
  for (auto& v : u) v = uniform(rng);
  return u;
}

}  // namespace btnv
