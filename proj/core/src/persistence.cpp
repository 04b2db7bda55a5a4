#include "btnv/persistence.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "btnv/errors.hpp"

namespace btnv {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kManifest = "manifest.json";
constexpr const char* kFormatName = "btnv-model";

void write_blob(const fs::path& path, const Matrix& m) {
  std::vector<char> bytes;
  bytes.reserve(static_cast<std::size_t>(m.size()) * 8);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const auto bits = std::bit_cast<std::uint64_t>(m(r, c));
      for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
  }
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

Matrix read_blob(const fs::path& path, Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("missing blob " + path.filename().string());
  const std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const auto expected = static_cast<std::size_t>(rows * cols) * 8;
  if (bytes.size() != expected)
    throw FormatError("blob " + path.filename().string() + " has " + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(expected));
  Matrix m(rows, cols);
  std::size_t pos = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * b);
      m(r, c) = std::bit_cast<double>(bits);
    }
  }
  return m;
}

json gamma_json(const GammaPosterior& g) { return {{"shape", g.shape}, {"rate", g.rate}}; }

GammaPosterior gamma_from(const json& j) {
  return {j.at("shape").get<double>(), j.at("rate").get<double>()};
}

json gamma_list(const std::vector<GammaPosterior>& gs) {
  json arr = json::array();
  for (const auto& g : gs) arr.push_back(gamma_json(g));
  return arr;
}

}  // namespace

void save_model(const ModelArtifact& artifact, const fs::path& dir) {
  const ModelState& s = artifact.state;
  s.validate();
  fs::create_directories(dir);

  json blobs = json::array();
  const auto dim = static_cast<Eigen::Index>(s.dim());
  const auto rank = static_cast<Eigen::Index>(s.rank());
  for (std::size_t d = 0; d < s.order; ++d) {
    const std::string stem = "factor_" + std::to_string(d + 1);
    write_blob(dir / (stem + "_mean.f64"), s.factors[d].mean);
    write_blob(dir / (stem + "_cov.f64"), s.factors[d].covariance);
    blobs.push_back({{"name", stem + "_mean"}, {"file", stem + "_mean.f64"}, {"shape", {dim, rank}}});
    blobs.push_back({{"name", stem + "_cov"},
                     {"file", stem + "_cov.f64"},
                     {"shape", {dim * rank, dim * rank}}});
  }

  json trace = json::array();
  for (const auto& r : artifact.trace.records)
    trace.push_back({{"iter", r.iteration}, {"elbo", r.elbo}, {"rank", r.rank},
                     {"e_tau", r.e_tau}, {"seconds", r.seconds}});

  const auto& p = s.priors;
  const auto& n = s.normalization;
  const auto& c = artifact.config;
  json manifest = {
      {"format", kFormatName},
      {"version", kModelFormatVersion},
      {"order", s.order},
      {"memory", s.memory},
      {"rank", s.rank()},
      {"priors", {{"a0", p.a0}, {"b0", p.b0}, {"c0", p.c0}, {"d0", p.d0}, {"g0", p.g0}, {"h0", p.h0}}},
      {"normalization",
       {{"input_min", n.input_min},
        {"input_max", n.input_max},
        {"output_mean", n.output_mean},
        {"output_std", n.output_std}}},
      {"tau", gamma_json(s.tau)},
      {"lambda", gamma_list(s.lambda)},
      {"delta", gamma_list(s.delta)},
      {"blobs", blobs},
      {"fit",
       {{"initial_rank", c.initial_rank},
        {"max_iter", c.max_iter},
        {"elbo_rel_tol", c.elbo_rel_tol},
        {"truncation_threshold", c.truncation_threshold},
        {"delta_enabled", c.delta_enabled},
        {"tau_every_sweep", c.tau_every_sweep},
        {"seed", c.seed},
        {"converged", artifact.trace.converged},
        {"runtime_s", artifact.trace.runtime_seconds},
        {"trace", trace}}},
  };
  std::ofstream out(dir / kManifest);
  out << manifest.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + (dir / kManifest).string());
}

void save_model(const ModelState& state, const fs::path& dir) {
  ModelArtifact artifact;
  artifact.state = state;
  artifact.config.order = state.order;
  artifact.config.initial_rank = state.rank();
  save_model(artifact, dir);
}

ModelArtifact load_model(const fs::path& dir) {
  std::ifstream in(dir / kManifest);
  if (!in) throw FormatError("no manifest.json in " + dir.string());
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("unreadable manifest: ") + e.what());
  }

  try {
    if (m.value("format", std::string{}) != kFormatName) throw FormatError("not a btnv model manifest");
    const int version = m.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw FormatError("unsupported model format version " + std::to_string(version) +
                        " (expected " + std::to_string(kModelFormatVersion) + ")");

    ModelArtifact a;
    ModelState& s = a.state;
    s.order = m.at("order").get<std::size_t>();
    s.memory = m.at("memory").get<std::size_t>();
    const auto rank = m.at("rank").get<std::size_t>();
    const auto& p = m.at("priors");
    s.priors = {p.at("a0").get<double>(), p.at("b0").get<double>(), p.at("c0").get<double>(),
                p.at("d0").get<double>(), p.at("g0").get<double>(), p.at("h0").get<double>()};
    const auto& n = m.at("normalization");
    s.normalization = {n.at("input_min").get<double>(), n.at("input_max").get<double>(),
                       n.at("output_mean").get<double>(), n.at("output_std").get<double>()};
    s.tau = gamma_from(m.at("tau"));
    for (const auto& g : m.at("lambda")) s.lambda.push_back(gamma_from(g));
    for (const auto& g : m.at("delta")) s.delta.push_back(gamma_from(g));

    const auto dim = static_cast<Eigen::Index>(s.memory + 1);
    const auto r = static_cast<Eigen::Index>(rank);
    const auto& blobs = m.at("blobs");
    if (blobs.size() != 2 * s.order) throw FormatError("expected two blobs per factor");
    for (std::size_t d = 0; d < s.order; ++d) {
      const auto& mean_desc = blobs.at(2 * d);
      const auto& cov_desc = blobs.at(2 * d + 1);
      const auto mean_shape = mean_desc.at("shape").get<std::vector<Eigen::Index>>();
      const auto cov_shape = cov_desc.at("shape").get<std::vector<Eigen::Index>>();
      if (mean_shape != std::vector<Eigen::Index>{dim, r} ||
          cov_shape != std::vector<Eigen::Index>{dim * r, dim * r})
        throw FormatError("blob shapes disagree with order/memory/rank");
      FactorPosterior f;
      f.mean = read_blob(dir / mean_desc.at("file").get<std::string>(), dim, r);
      f.covariance = read_blob(dir / cov_desc.at("file").get<std::string>(), dim * r, dim * r);
      s.factors.push_back(std::move(f));
    }
    try {
      s.validate();
    } catch (const DomainError& e) {
      throw FormatError(std::string("inconsistent model: ") + e.what());
    }

    if (m.contains("fit")) {
      const auto& fit = m.at("fit");
      auto& c = a.config;
      c.order = s.order;
      c.initial_rank = fit.value("initial_rank", rank);
      c.max_iter = fit.value("max_iter", c.max_iter);
      c.elbo_rel_tol = fit.value("elbo_rel_tol", c.elbo_rel_tol);
      c.truncation_threshold = fit.value("truncation_threshold", c.truncation_threshold);
      c.delta_enabled = fit.value("delta_enabled", c.delta_enabled);
      c.tau_every_sweep = fit.value("tau_every_sweep", c.tau_every_sweep);
      c.seed = fit.value("seed", c.seed);
      a.trace.converged = fit.value("converged", false);
      a.trace.runtime_seconds = fit.value("runtime_s", 0.0);
      for (const auto& t : fit.value("trace", json::array()))
        a.trace.records.push_back({t.at("iter").get<std::size_t>(), t.at("elbo").get<double>(),
                                   t.at("rank").get<std::size_t>(), t.at("e_tau").get<double>(),
                                   t.at("seconds").get<double>()});
    }
    return a;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

}  // namespace btnv
