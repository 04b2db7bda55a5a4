#pragma once

// End-to-end helpers working in original data units: normalization,
// windowing, identification and evaluation.

#include <cstddef>
#include <vector>

#include "btnv/dataset.hpp"
#include "btnv/persistence.hpp"
#include "btnv/predictor.hpp"
#include "btnv/vi.hpp"

namespace btnv {

struct IdentifyOptions {
  FitConfig fit;
  Priors priors;
  std::size_t memory = 100;
  /// Leading estimation samples excluded from the fit (their windows are
  /// mostly zero padding). They still contribute to the normalization.
  std::size_t warmup = 0;
};

/// Normalize on the estimation part of `data` and identify a model on it.
ModelArtifact identify_dataset(const Dataset& data, const IdentifyOptions& options);

/// Predictive distributions in original output units for every sample of
/// `data`, windows built from `data.u` alone.
std::vector<PredictiveT> predict_dataset(const ModelState& state, const Dataset& data);

/// RMSE/NLL in original units over samples [warmup, N) of `data`.
EvalReport evaluate_dataset(const ModelState& state, const Dataset& data, std::size_t warmup = 0);

struct LagProfileRow {
  std::size_t index = 0;  // window row: 0 is the constant, 1 + j is lag j
  double e_delta = 0.0;
  std::vector<double> row_norms;  // ||W^(d)(i, :)|| per factor
};

/// Posterior lag precisions and factor row norms, one row per window entry.
std::vector<LagProfileRow> delta_profile(const ModelState& state);

}  // namespace btnv
