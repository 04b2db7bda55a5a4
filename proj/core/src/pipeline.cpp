#include "btnv/pipeline.hpp"

#include "btnv/errors.hpp"
#include "btnv/volterra.hpp"

namespace btnv {

ModelArtifact identify_dataset(const Dataset& data, const IdentifyOptions& options) {
  data.validate();
  const Dataset estimation = data.estimation();
  const NormalizationRecord record = fit_normalization(estimation);
  const Dataset scaled = apply_normalization(estimation, record);
  if (options.warmup >= scaled.size())
    throw DomainError("identify: warm-up leaves no estimation samples");

  LaggedInputMatrix windows = build_lagged_matrix(scaled.u, options.memory);
  Vector y = Eigen::Map<const Vector>(scaled.y.data(), static_cast<Eigen::Index>(scaled.size()));
  if (options.warmup > 0) {
    windows = windows.drop_leading(options.warmup);
    y = y.tail(y.size() - static_cast<Eigen::Index>(options.warmup)).eval();
  }

  FitResult fit = identify(windows, y, options.fit, options.priors);
  fit.state.normalization = record;
  return {std::move(fit.state), std::move(fit.trace), options.fit};
}

std::vector<PredictiveT> predict_dataset(const ModelState& state, const Dataset& data) {
  data.validate();
  if (data.u.empty()) throw DomainError("predict: empty dataset");
  std::vector<double> u(data.u.size());
  for (std::size_t n = 0; n < u.size(); ++n) u[n] = state.normalization.normalize_input(data.u[n]);
  const LaggedInputMatrix windows = build_lagged_matrix(u, state.memory);
  std::vector<PredictiveT> preds = predict(state, windows.matrix());
  for (auto& p : preds) p = denormalize(p, state.normalization);
  return preds;
}

EvalReport evaluate_dataset(const ModelState& state, const Dataset& data, std::size_t warmup) {
  if (warmup >= data.size()) throw DomainError("evaluate: warm-up leaves no samples");
  const auto preds = predict_dataset(state, data);
  const std::span<const PredictiveT> scored(preds.begin() + static_cast<std::ptrdiff_t>(warmup), preds.end());
  const std::span<const double> y(data.y.begin() + static_cast<std::ptrdiff_t>(warmup), data.y.end());
  return make_report(scored, y);
}

std::vector<LagProfileRow> delta_profile(const ModelState& state) {
  std::vector<LagProfileRow> rows(state.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].index = i;
    rows[i].e_delta = state.delta[i].mean();
    for (const auto& f : state.factors)
      rows[i].row_norms.push_back(f.mean.row(static_cast<Eigen::Index>(i)).norm());
  }
  return rows;
}

}  // namespace btnv
