#pragma once

// Ground-truth Volterra systems for simulation and testing.

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "btnv/dataset.hpp"
#include "btnv/tensor.hpp"

namespace btnv {

/// Explicit kernels W_0..W_D. kernels[d] is the order-d kernel flattened with
/// the first lag index fastest, size M^d (kernels[0] holds the constant).
struct VolterraKernels {
  std::size_t memory = 0;
  std::vector<Vector> kernels;

  std::size_t order() const noexcept { return kernels.empty() ? 0 : kernels.size() - 1; }
};

/// A Volterra system given either by explicit kernels or by CPD factors over
/// windows (1, u(n), ..., u(n-M+1)), plus white Gaussian output noise.
struct SyntheticSystem {
  std::variant<VolterraKernels, CpdFactors> kernels;
  double noise_std = 0.0;

  std::size_t order() const;
  std::size_t memory() const;
};

/// Expand CPD factors into explicit kernels. Every full multi-index over
/// {constant, lag 0, ..., lag M-1}^D contributes to the kernel whose order is
/// its number of non-constant entries, at those lags in order of appearance.
VolterraKernels explicit_kernels(const CpdFactors& factors,
                                 std::size_t max_entries = kDefaultReconstructLimit);

/// Noise-free output by direct nested summation over explicit kernels.
std::vector<double> volterra_response(const VolterraKernels& kernels, std::span<const double> u,
                                      std::size_t max_entries = kDefaultReconstructLimit);

/// Noise-free output via cpd_dot on each input window.
std::vector<double> volterra_response(const CpdFactors& factors, std::span<const double> u);

/// Simulate the system on `u`; noise is drawn from a generator seeded with `seed`.
Dataset synthesize(const SyntheticSystem& system, std::span<const double> u, std::uint64_t seed);

/// Noise standard deviation giving the requested signal-to-noise ratio (dB)
/// relative to the population variance of `clean`.
double noise_std_for_snr(std::span<const double> clean, double snr_db);

/// Symmetric rank-`rank` CPD kernel: every factor equals one I x R matrix
/// whose rows beyond lag `support - 1` are zero (fading memory with finite
/// support). Entries are Gaussian with a mild geometric decay over lags.
CpdFactors random_cpd_kernel(std::size_t order, std::size_t memory, std::size_t rank,
                             std::size_t support, std::uint64_t seed);

/// Uniform white input on [-1, 1].
std::vector<double> random_input(std::size_t n, std::uint64_t seed);

}  // namespace btnv
