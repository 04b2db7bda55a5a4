#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "btnv/dataset.hpp"
#include "btnv/errors.hpp"
#include "btnv/persistence.hpp"
#include "btnv/pipeline.hpp"
#include "btnv/synthetic.hpp"

namespace btnv::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Thrown for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Priors parse_priors(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--priors: '" + item + "' is not a number");
    }
  }
  if (values.size() != 6) throw UsageError("--priors expects six values a0,b0,c0,d0,g0,h0");
  Priors p{values[0], values[1], values[2], values[3], values[4], values[5]};
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw UsageError(std::string("--priors: ") + e.what());
  }
  return p;
}

/// Write to `path`, or to `out` when the path is "-".
template <class Fn>
void emit(const std::string& path, std::ostream& out, Fn&& write) {
  if (path == "-") {
    write(out);
    return;
  }
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + path);
  write(file);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

json fit_summary(const ModelArtifact& a) {
  const auto& records = a.trace.records;
  return {{"seed", a.config.seed},
          {"final_rank", a.state.rank()},
          {"elbo", records.empty() ? 0.0 : records.back().elbo},
          {"iterations", records.size()},
          {"converged", a.trace.converged},
          {"runtime_s", a.trace.runtime_seconds}};
}

// ---------------------------------------------------------------- identify

struct IdentifyArgs {
  std::string data;
  std::string out;
  std::size_t order = 3;
  std::size_t memory = 100;
  std::size_t rank = 20;
  std::size_t max_iter = 200;
  double tol = 1e-6;
  double truncation = 1e-3;
  std::uint64_t seed = 0;
  std::string delta = "on";
  std::string priors;
  std::size_t split = 0;
  std::size_t warmup = 0;
  std::size_t seeds = 1;
  bool tau_after_loop = false;
};

int run_identify(const IdentifyArgs& args, std::ostream& out) {
  IdentifyOptions options;
  options.memory = args.memory;
  options.warmup = args.warmup;
  options.fit.order = args.order;
  options.fit.initial_rank = args.rank;
  options.fit.max_iter = args.max_iter;
  options.fit.elbo_rel_tol = args.tol;
  options.fit.truncation_threshold = args.truncation;
  options.fit.delta_enabled = args.delta == "on";
  options.fit.tau_every_sweep = !args.tau_after_loop;
  if (!args.priors.empty()) options.priors = parse_priors(args.priors);
  try {
    options.fit.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }

  Dataset data = load_csv(args.data);
  if (args.split > 0) data.split = args.split;

  if (args.seeds <= 1) {
    options.fit.seed = args.seed;
    const ModelArtifact artifact = identify_dataset(data, options);
    save_model(artifact, args.out);
    out << fit_summary(artifact).dump(2) << '\n';
    return kExitOk;
  }

  // Independent runs share nothing but the read-only dataset.
  std::vector<std::future<ModelArtifact>> jobs;
  for (std::size_t k = 0; k < args.seeds; ++k) {
    IdentifyOptions run = options;
    run.fit.seed = args.seed + k;
    jobs.push_back(std::async(std::launch::async, [&data, run] { return identify_dataset(data, run); }));
  }
  json runs = json::array();
  std::vector<double> ranks, runtimes;
  for (auto& job : jobs) {
    const ModelArtifact artifact = job.get();
    const fs::path dir = fs::path(args.out) / ("seed_" + std::to_string(artifact.config.seed));
    save_model(artifact, dir);
    json s = fit_summary(artifact);
    s["model"] = dir.string();
    runs.push_back(s);
    ranks.push_back(static_cast<double>(artifact.state.rank()));
    runtimes.push_back(artifact.trace.runtime_seconds);
  }
  out << json{{"runs", runs},
              {"final_rank", {{"mean", mean_of(ranks)}, {"std", std_of(ranks)}}},
              {"runtime_s", {{"mean", mean_of(runtimes)}, {"std", std_of(runtimes)}}}}
             .dump(2)
      << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- predict

int run_predict(const std::string& model_dir, const std::string& data_path, const std::string& out_path,
                std::ostream& out) {
  const ModelArtifact artifact = load_model(model_dir);
  const Dataset data = load_csv(data_path);
  const auto preds = predict_dataset(artifact.state, data);
  emit(out_path, out, [&](std::ostream& os) {
    os << "n,mean,variance,scale,dof\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t n = 0; n < preds.size(); ++n) {
      const auto var = preds[n].variance();
      os << n << ',' << preds[n].location << ',';
      if (var) os << *var;
      else os << "nan";
      os << ',' << preds[n].scale << ',' << preds[n].dof << '\n';
    }
  });
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

int run_evaluate(const std::vector<std::string>& models, const std::string& data_path, std::size_t split,
                 std::size_t warmup, const std::string& out_path, std::ostream& out) {
  Dataset data = load_csv(data_path);
  if (split > 0) {
    data.split = split;
    data.validate();
    data = data.validation();
    if (data.u.empty()) throw UsageError("--split leaves no validation samples");
  }

  json runs = json::array();
  std::vector<double> rmses, nlls, ranks, runtimes;
  for (const auto& dir : models) {
    const ModelArtifact artifact = load_model(dir);
    const EvalReport report = evaluate_dataset(artifact.state, data, warmup);
    const auto& records = artifact.trace.records;
    runs.push_back({{"rmse", report.rmse},
                    {"nll", report.nll},
                    {"final_rank", artifact.state.rank()},
                    {"elbo", records.empty() ? 0.0 : records.back().elbo},
                    {"runtime_s", artifact.trace.runtime_seconds},
                    {"seed", artifact.config.seed}});
    rmses.push_back(report.rmse);
    nlls.push_back(report.nll);
    ranks.push_back(static_cast<double>(artifact.state.rank()));
    runtimes.push_back(artifact.trace.runtime_seconds);
  }

  json result;
  if (runs.size() == 1) {
    result = runs[0];
  } else {
    const auto stat = [](const std::vector<double>& v) { return json{{"mean", mean_of(v)}, {"std", std_of(v)}}; };
    result = {{"runs", runs},
              {"summary",
               {{"rmse", stat(rmses)}, {"nll", stat(nlls)}, {"final_rank", stat(ranks)},
                {"runtime_s", stat(runtimes)}}}};
  }
  emit(out_path, out, [&](std::ostream& os) { os << result.dump(2) << '\n'; });
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::size_t order = 2;
  std::size_t memory = 10;
  std::size_t rank = 2;
  std::size_t support = 0;
  double noise_std = -1.0;
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string out;
};

int run_simulate(const SimulateArgs& args, std::ostream& out) {
  const std::size_t support = args.support == 0 ? args.memory : args.support;
  if (support > args.memory) throw UsageError("--support must not exceed --memory");
  if (args.n < 1) throw UsageError("--n must be at least 1");

  SyntheticSystem system;
  system.kernels = random_cpd_kernel(args.order, args.memory, args.rank, support, args.seed);
  const auto u = random_input(args.n, args.seed + 1);
  if (!std::isnan(args.snr_db)) {
    system.noise_std = noise_std_for_snr(volterra_response(std::get<CpdFactors>(system.kernels), u),
                                         args.snr_db);
  } else {
    system.noise_std = args.noise_std < 0.0 ? 0.0 : args.noise_std;
  }
  const Dataset data = synthesize(system, u, args.seed + 2);
  emit(args.out, out, [&](std::ostream& os) { write_csv(os, data); });
  return kExitOk;
}

// ---------------------------------------------------------------- report

int run_report(const std::string& model_dir, const std::string& trace_path, const std::string& profile_path,
               std::ostream& out) {
  if (trace_path.empty() && profile_path.empty())
    throw UsageError("report needs --trace and/or --delta-profile");
  const ModelArtifact artifact = load_model(model_dir);
  if (!trace_path.empty()) {
    emit(trace_path, out, [&](std::ostream& os) {
      os << "iter,elbo,rank,e_tau\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
      for (const auto& r : artifact.trace.records)
        os << r.iteration << ',' << r.elbo << ',' << r.rank << ',' << r.e_tau << '\n';
    });
  }
  if (!profile_path.empty()) {
    emit(profile_path, out, [&](std::ostream& os) {
      os << "index,e_delta";
      for (std::size_t d = 1; d <= artifact.state.order; ++d) os << ",row_norm_" << d;
      os << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
      for (const auto& row : delta_profile(artifact.state)) {
        os << row.index << ',' << row.e_delta;
        for (double v : row.row_norms) os << ',' << v;
        os << '\n';
      }
    });
  }
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian CPD-Volterra system identification"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  IdentifyArgs id;
  auto* identify = app.add_subcommand("identify", "Fit a model to a u,y CSV");
  identify->add_option("--data", id.data, "Input CSV with header u,y")->required()->check(CLI::ExistingFile);
  identify->add_option("--out", id.out, "Output model directory")->required();
  identify->add_option("--order", id.order, "Volterra order D")->capture_default_str()->check(CLI::PositiveNumber);
  identify->add_option("--memory", id.memory, "Memory length M")->capture_default_str()->check(CLI::PositiveNumber);
  identify->add_option("--rank", id.rank, "Initial CPD rank")->capture_default_str()->check(CLI::PositiveNumber);
  identify->add_option("--max-iter", id.max_iter, "Maximum number of sweeps")->capture_default_str()->check(CLI::PositiveNumber);
  identify->add_option("--tol", id.tol, "Relative ELBO change for convergence")->capture_default_str()->check(CLI::PositiveNumber);
  identify->add_option("--truncation", id.truncation, "Relative column RMS below which a component is pruned")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  identify->add_option("--seed", id.seed, "Seed for the factor initialization")->capture_default_str();
  identify->add_option("--delta", id.delta, "Learn lag precisions (on) or keep them fixed (off)")
      ->capture_default_str()
      ->check(CLI::IsMember({"on", "off"}));
  identify->add_option("--priors", id.priors, "Gamma hyperpriors a0,b0,c0,d0,g0,h0");
  identify->add_option("--split", id.split, "Number of leading samples used for estimation");
  identify->add_option("--warmup", id.warmup, "Leading estimation samples left out of the fit");
  identify->add_option("--seeds", id.seeds, "Run this many consecutive seeds concurrently")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  identify->add_flag("--tau-after-loop", id.tau_after_loop, "Update the noise precision only after the sweeps");

  std::string model, data, out_path = "-";
  auto* predict = app.add_subcommand("predict", "Write per-sample predictive mean and variance");
  predict->add_option("--model", model, "Model directory")->required()->check(CLI::ExistingDirectory);
  predict->add_option("--data", data, "Input CSV with header u,y")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", out_path, "Output CSV ('-' for stdout)")->capture_default_str();

  std::vector<std::string> eval_models;
  std::string eval_data, eval_out = "-";
  std::size_t eval_split = 0, eval_warmup = 0;
  auto* evaluate = app.add_subcommand("evaluate", "RMSE and NLL of one or more models on a dataset");
  evaluate->add_option("--model", eval_models, "Model directory (repeat to aggregate runs)")
      ->required()
      ->check(CLI::ExistingDirectory);
  evaluate->add_option("--data", eval_data, "Input CSV with header u,y")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--split", eval_split, "Score only samples from this index on");
  evaluate->add_option("--warmup", eval_warmup, "Leading samples excluded from the metrics");
  evaluate->add_option("--out", eval_out, "Metrics JSON ('-' for stdout)")->capture_default_str();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate data from a random low-rank Volterra system");
  simulate->add_option("--order", sim.order, "Volterra order D")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--memory", sim.memory, "Memory length M")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--rank", sim.rank, "CPD rank of the kernel")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--support", sim.support, "Number of active lags (default: all)");
  auto* noise_opt = simulate->add_option("--noise-std", sim.noise_std, "Output noise standard deviation")
                        ->check(CLI::NonNegativeNumber);
  simulate->add_option("--snr", sim.snr_db, "Output signal-to-noise ratio in dB")->excludes(noise_opt);
  simulate->add_option("--n", sim.n, "Number of samples")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Seed for kernel, input and noise")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output CSV ('-' for stdout)")->required();

  std::string report_model, trace_path, profile_path;
  auto* report = app.add_subcommand("report", "Export the fit trace and lag-precision profile");
  report->add_option("--model", report_model, "Model directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--trace", trace_path, "CSV of iter, elbo, rank, e_tau ('-' for stdout)");
  report->add_option("--delta-profile", profile_path, "CSV of E[delta_i] and factor row norms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (*identify) return run_identify(id, out);
    if (*predict) return run_predict(model, data, out_path, out);
    if (*evaluate) return run_evaluate(eval_models, eval_data, eval_split, eval_warmup, eval_out, out);
    if (*simulate) return run_simulate(sim, out);
    if (*report) return run_report(report_model, trace_path, profile_path, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace btnv::cli
