#include "btnv/predictor.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "btnv/errors.hpp"

namespace btnv {

std::optional<double> PredictiveT::variance() const {
  if (!(dof > 2.0)) return std::nullopt;
  return dof / (dof - 2.0) * scale * scale;
}

double PredictiveT::log_pdf(double y) const {
  const double z = (y - location) / scale;
  return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
         0.5 * std::log(dof * std::numbers::pi) - std::log(scale) -
         0.5 * (dof + 1.0) * std::log1p(z * z / dof);
}

PredictiveT predict_one(const ModelState& state, const Eigen::Ref<const Vector>& window) {
  if (static_cast<std::size_t>(window.size()) != state.dim())
    throw DomainError("predict_one: window length must be M + 1");
  const CpdFactors means = state.mean_factors();

  double spread = 0.0;
  for (std::size_t d = 0; d < state.order; ++d) {
    const Vector h = cpd_partial_product(means, window, d);
    const Vector g = kronecker(h, window).col(0);
    spread += g.dot(state.factors[d].covariance * g);
  }

  PredictiveT p;
  p.location = cpd_dot(means, window);
  p.dof = 2.0 * state.tau.shape;
  p.scale = std::sqrt(state.tau.rate / state.tau.shape + spread);
  return p;
}

std::vector<PredictiveT> predict(const ModelState& state, const Matrix& windows) {
  std::vector<PredictiveT> out;
  out.reserve(static_cast<std::size_t>(windows.cols()));
  for (Eigen::Index n = 0; n < windows.cols(); ++n) out.push_back(predict_one(state, windows.col(n)));
  return out;
}

PredictiveT denormalize(const PredictiveT& p, const NormalizationRecord& record) {
  return {record.denormalize_output(p.location), p.scale * record.output_std, p.dof};
}

double nll(std::span<const PredictiveT> preds, std::span<const double> y) {
  if (preds.size() != y.size()) throw DomainError("nll: length mismatch");
  if (preds.empty()) throw DomainError("nll: no predictions");
  double total = 0.0;
  for (std::size_t n = 0; n < y.size(); ++n) total -= preds[n].log_pdf(y[n]);
  return total / static_cast<double>(y.size());
}

double rmse(std::span<const PredictiveT> preds, std::span<const double> y) {
  if (preds.size() != y.size()) throw DomainError("rmse: length mismatch");
  if (preds.empty()) throw DomainError("rmse: no predictions");
  double total = 0.0;
  for (std::size_t n = 0; n < y.size(); ++n) {
    const double e = y[n] - preds[n].location;
    total += e * e;
  }
  return std::sqrt(total / static_cast<double>(y.size()));
}

EvalReport make_report(std::span<const PredictiveT> preds, std::span<const double> y) {
  EvalReport report;
  report.rmse = rmse(preds, y);
  report.nll = nll(preds, y);
  report.mean.reserve(preds.size());
  report.variance.reserve(preds.size());
  for (const auto& p : preds) {
    report.mean.push_back(p.location);
    report.variance.push_back(p.variance().value_or(std::numeric_limits<double>::quiet_NaN()));
  }
  return report;
}

}  // namespace btnv
