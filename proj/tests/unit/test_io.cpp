#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "btnv/dataset.hpp"
#include "btnv/errors.hpp"
#include "btnv/persistence.hpp"
#include "btnv/predictor.hpp"
#include "btnv/synthetic.hpp"
#include "btnv/volterra.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace btnv;
using btnv::test::rel_err;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("btnv_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ModelState random_model(std::mt19937_64& rng, std::size_t order, std::size_t memory, std::size_t rank) {
  ModelState s = init_state(order, memory, rank, Priors{}, rng());
  std::uniform_real_distribution<double> pos(0.1, 10.0);
  const auto ir = static_cast<Eigen::Index>((memory + 1) * rank);
  for (auto& f : s.factors) f.covariance = oracle::random_spd(rng, ir, 1e-3, 1.0);
  for (auto& g : s.lambda) g = {pos(rng), pos(rng)};
  for (auto& g : s.delta) g = {pos(rng), pos(rng)};
  s.tau = {pos(rng), pos(rng)};
  s.normalization = {-pos(rng), pos(rng), pos(rng), pos(rng)};
  return s;
}

Vector as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

bool same_bits(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("CSV parsing examples") {
  std::istringstream ok("u,y\n0.1,1.0\n0.2,1.1");
  const Dataset d = read_csv(ok);
  REQUIRE(d.size() == 2);
  CHECK(d.u[1] == 0.2);
  CHECK(d.y[0] == 1.0);

  std::istringstream header_only("u,y\n");
  CHECK_THROWS_AS(read_csv(header_only), ParseError);

  std::istringstream with_nan("u,y\n0.1,1.0\nnan,2.0\n");
  try {
    read_csv(with_nan);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  std::istringstream bad_header("a,b\n1,2\n");
  CHECK_THROWS_AS(read_csv(bad_header), ParseError);
  std::istringstream three_cols("u,y\n1,2,3\n");
  CHECK_THROWS_AS(read_csv(three_cols), ParseError);
  std::istringstream text("u,y\n1,2\n1,abc\n");
  try {
    read_csv(text);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream inf("u,y\n1,inf\n");
  CHECK_THROWS_AS(read_csv(inf), ParseError);
}

TEST_CASE("CSV round trip is exact") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Dataset d;
  for (int k = 0; k < 100; ++k) {
    d.u.push_back(normal(rng) * 1e-7);
    d.y.push_back(normal(rng) * 1e5);
  }
  const fs::path dir = scratch_dir("csv");
  save_csv(dir / "d.csv", d);
  const Dataset back = load_csv(dir / "d.csv");
  CHECK(back.u == d.u);
  CHECK(back.y == d.y);
}

TEST_CASE("normalization examples") {
  Dataset d{{0.0, 2.0}, {1.0, 3.0}, std::nullopt};
  const auto [n, rec] = normalize(d);
  CHECK(n.u == std::vector<double>{0.0, 1.0});
  CHECK(rec.output_mean == 2.0);
  CHECK(rec.output_std == 1.0);
  CHECK(n.y == std::vector<double>{-1.0, 1.0});

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  Dataset r;
  for (int k = 0; k < 50; ++k) {
    r.u.push_back(unif(rng));
    r.y.push_back(unif(rng));
  }
  const auto [nr, rr] = normalize(r);
  for (std::size_t k = 0; k < r.size(); ++k) {
    CHECK(std::abs(rr.denormalize_output(nr.y[k]) - r.y[k]) < 1e-12);
    CHECK(nr.u[k] >= 0.0);
    CHECK(nr.u[k] <= 1.0);
  }

  CHECK_THROWS_AS(normalize(Dataset{{1.0, 1.0}, {1.0, 2.0}, std::nullopt}), DomainError);
  CHECK_THROWS_AS(normalize(Dataset{{1.0, 2.0}, {3.0, 3.0}, std::nullopt}), DomainError);
}

TEST_CASE("normalization uses the estimation split only") {
  Dataset d{{0.0, 2.0, 100.0}, {1.0, 3.0, 50.0}, 2};
  const auto [n, rec] = normalize(d);
  CHECK(rec.input_min == 0.0);
  CHECK(rec.input_max == 2.0);
  CHECK(rec.output_mean == 2.0);
  CHECK(n.u[2] == 50.0);
  CHECK(n.y[2] == 48.0);
  CHECK(d.validation().size() == 1);
  CHECK(d.estimation().size() == 2);
  Dataset bad = d;
  bad.split = 4;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("synthesize with a first-order impulse kernel copies the input") {
  VolterraKernels k;
  k.memory = 3;
  k.kernels = {Vector::Zero(1), (Vector(3) << 2.5, 0.0, 0.0).finished()};
  const auto u = random_input(30, 3);
  const Dataset d = synthesize(SyntheticSystem{k, 0.0}, u, 0);
  for (std::size_t n = 0; n < u.size(); ++n) CHECK(d.y[n] == 2.5 * u[n]);
}

TEST_CASE("CPD and explicit kernel responses agree") {
  std::mt19937_64 rng(4);
  for (std::size_t order = 1; order <= 3; ++order)
    for (std::size_t memory : {1u, 3u, 6u}) {
      const CpdFactors f = oracle::random_factors(rng, order, memory + 1, 2);
      std::vector<double> u(40);
      std::normal_distribution<double> normal;
      for (auto& v : u) v = normal(rng);
      const auto via_cpd = volterra_response(f, u);
      const auto nested = volterra_response(explicit_kernels(f), u);
      CHECK(rel_err(as_vector(via_cpd), as_vector(nested)) < 1e-12);
    }
  const CpdFactors sym = random_cpd_kernel(2, 4, 1, 4, 5);
  const auto u = random_input(50, 6);
  const auto a = volterra_response(sym, u);
  const auto b = volterra_response(explicit_kernels(sym), u);
  CHECK(rel_err(as_vector(a), as_vector(b)) < 1e-12);
}

TEST_CASE("explicit kernels have the expected sizes") {
  const CpdFactors f = random_cpd_kernel(3, 4, 2, 2, 7);
  const VolterraKernels k = explicit_kernels(f);
  REQUIRE(k.order() == 3);
  CHECK(k.memory == 4);
  CHECK(k.kernels[0].size() == 1);
  CHECK(k.kernels[1].size() == 4);
  CHECK(k.kernels[2].size() == 16);
  CHECK(k.kernels[3].size() == 64);
  CHECK_THROWS_AS(explicit_kernels(CpdFactors::zeros(4, 40, 1)), SizeLimitError);
}

TEST_CASE("fading-memory kernels vanish beyond their support") {
  const CpdFactors f = random_cpd_kernel(2, 10, 2, 4, 8);
  for (std::size_t d = 0; d < 2; ++d) {
    CHECK(f[d] == f[0]);
    CHECK(f[d].bottomRows(6).isZero(0.0));
    CHECK_FALSE(f[d].topRows(5).isZero(0.0));
  }
}

TEST_CASE("synthetic noise is reproducible and has the requested level") {
  const CpdFactors f = random_cpd_kernel(2, 3, 1, 3, 9);
  const auto u = random_input(20000, 10);
  const SyntheticSystem sys{f, 0.3};
  const Dataset a = synthesize(sys, u, 11);
  const Dataset b = synthesize(sys, u, 11);
  const Dataset c = synthesize(sys, u, 12);
  CHECK(a.y == b.y);
  CHECK(a.y != c.y);
  const auto clean = volterra_response(f, u);
  double ss = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n) ss += (a.y[n] - clean[n]) * (a.y[n] - clean[n]);
  CHECK(std::sqrt(ss / 20000.0) == doctest::Approx(0.3).epsilon(0.03));

  const double s20 = noise_std_for_snr(clean, 20.0);
  double mean = 0.0, var = 0.0;
  for (double v : clean) mean += v;
  mean /= static_cast<double>(clean.size());
  for (double v : clean) var += (v - mean) * (v - mean);
  var /= static_cast<double>(clean.size());
  CHECK(s20 * s20 == doctest::Approx(var / 100.0).epsilon(1e-12));

  for (double v : u) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("model persistence is bitwise exact") {
  std::mt19937_64 rng(13);
  const fs::path dir = scratch_dir("persist");
  for (int k = 0; k < 3; ++k) {
    ModelArtifact art;
    art.state = random_model(rng, static_cast<std::size_t>(k + 1), 4, static_cast<std::size_t>(3 - k));
    art.trace.records = {{1, -10.5, 3, 2.0, 0.01}, {2, -9.25, 3, 2.5, 0.02}};
    art.trace.converged = true;
    art.config.order = art.state.order;
    const fs::path sub = dir / std::to_string(k);
    save_model(art, sub);
    const ModelArtifact back = load_model(sub);
    CHECK(back.state.order == art.state.order);
    CHECK(back.state.memory == art.state.memory);
    CHECK(back.state.priors == art.state.priors);
    CHECK(back.state.normalization == art.state.normalization);
    CHECK(back.state.lambda == art.state.lambda);
    CHECK(back.state.delta == art.state.delta);
    CHECK(back.state.tau == art.state.tau);
    for (std::size_t d = 0; d < art.state.order; ++d) {
      CHECK(same_bits(back.state.factors[d].mean, art.state.factors[d].mean));
      CHECK(same_bits(back.state.factors[d].covariance, art.state.factors[d].covariance));
    }
    REQUIRE(back.trace.records.size() == 2);
    CHECK(back.trace.records[1].elbo == -9.25);
    CHECK(back.trace.converged);

    const Matrix windows = oracle::random_matrix(rng, 5, 10);
    const auto p0 = predict(art.state, windows);
    const auto p1 = predict(back.state, windows);
    for (std::size_t n = 0; n < p0.size(); ++n) {
      CHECK(std::memcmp(&p0[n].location, &p1[n].location, sizeof(double)) == 0);
      CHECK(std::memcmp(&p0[n].scale, &p1[n].scale, sizeof(double)) == 0);
    }
  }
}

TEST_CASE("corrupted artifacts are rejected") {
  std::mt19937_64 rng(14);
  const fs::path dir = scratch_dir("corrupt");
  const ModelState s = random_model(rng, 2, 3, 2);

  save_model(s, dir / "short");
  {
    const fs::path blob = dir / "short" / "factor_1_cov.f64";
    REQUIRE(fs::exists(blob));
    fs::resize_file(blob, fs::file_size(blob) - 8);
  }
  CHECK_THROWS_AS(load_model(dir / "short"), FormatError);

  save_model(s, dir / "version");
  {
    const fs::path manifest = dir / "version" / "manifest.json";
    std::ifstream in(manifest);
    nlohmann::json m = nlohmann::json::parse(in);
    in.close();
    m["version"] = kModelFormatVersion + 1;
    std::ofstream(manifest) << m.dump(2);
  }
  try {
    load_model(dir / "version");
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }

  save_model(s, dir / "shape");
  {
    const fs::path manifest = dir / "shape" / "manifest.json";
    std::ifstream in(manifest);
    nlohmann::json m = nlohmann::json::parse(in);
    in.close();
    m["rank"] = 3;
    std::ofstream(manifest) << m.dump(2);
  }
  CHECK_THROWS_AS(load_model(dir / "shape"), FormatError);

  fs::create_directories(dir / "empty");
  CHECK_THROWS_AS(load_model(dir / "empty"), FormatError);
  {
    std::ofstream(dir / "empty" / "manifest.json") << "{ not json";
  }
  CHECK_THROWS_AS(load_model(dir / "empty"), FormatError);
}

}
