#pragma once

#include <optional>
#include <span>
#include <vector>

#include "btnv/model.hpp"
#include "btnv/tensor.hpp"

namespace btnv {

/// Location-scale Student-t predictive distribution.
struct PredictiveT {
  double location = 0.0;
  double scale = 1.0;
  double dof = 1.0;

  /// dof / (dof - 2) * scale^2, undefined for dof <= 2.
  std::optional<double> variance() const;
  double log_pdf(double y) const;
};

/// Predictive distribution for one normalized input window (leading 1).
/// The squared scale is E[1/tau] plus the propagated factor uncertainty
/// sum_d g_d^T Sigma_d g_d, with g_d the mode-d design column at the
/// posterior means.
PredictiveT predict_one(const ModelState& state, const Eigen::Ref<const Vector>& window);

/// predict_one for every column of `windows`.
std::vector<PredictiveT> predict(const ModelState& state, const Matrix& windows);

/// Map a prediction in the normalized output scale back to original units.
PredictiveT denormalize(const PredictiveT& p, const NormalizationRecord& record);

/// Average negative log predictive density.
double nll(std::span<const PredictiveT> preds, std::span<const double> y);

/// Root mean squared error of the predictive locations.
double rmse(std::span<const PredictiveT> preds, std::span<const double> y);

struct EvalReport {
  double rmse = 0.0;
  double nll = 0.0;
  std::vector<double> mean;
  std::vector<double> variance;  // NaN where dof <= 2
};

/// Metrics over predictions already expressed in the same units as `y`.
EvalReport make_report(std::span<const PredictiveT> preds, std::span<const double> y);

}  // namespace btnv
