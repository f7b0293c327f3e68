// mif: simulate, fit, detect, localize and benchmark from the command line.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mif/error.hpp"
#include "mif/io.hpp"
#include "mif/localization.hpp"
#include "mif/optimizer.hpp"

namespace {

constexpr int kExitBenchmark = 5;

mif::PackLayout default_layout() {
  return mif::build_layout(4, 6, mif::CellSpec{}, 0.002, 4);
}

void require_benchmark_columns(const std::vector<mif::TelemetryFrame>& frames) {
  if (frames.front().temperatures.size() != mif::kBenchmarkCells ||
      frames.front().voltages.size() != mif::kBenchmarkGroups) {
    throw mif::DataError("dataset must hold 24 temperatures and 6 group voltages");
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mif::ConfigError("cannot write " + path);
  return out;
}

struct SimulateArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int run_simulate(const SimulateArgs& a) {
  mif::ScenarioConfig sc = mif::load_scenario(a.config);
  if (a.seed) sc.sim.rng_seed = *a.seed;
  const mif::SimResult r = mif::simulate(sc.sim, sc.layout(), sc.cell);
  mif::save_telemetry(a.out, r.frames);
  std::size_t abnormal = 0;
  for (const auto& f : r.frames) abnormal += f.abnormal ? 1 : 0;
  std::printf("frames=%zu normal=%zu abnormal=%zu%s\n", r.frames.size(),
              r.frames.size() - abnormal, abnormal,
              r.status == mif::SimStatus::depleted ? " (stopped: pack depleted)" : "");
  return 0;
}

struct FitArgs {
  std::vector<std::string> normal;
  std::vector<std::string> fault;
  std::string params;
  std::string out;
  std::string log;
  bool optimize = false;
  std::optional<double> beta;
  std::optional<std::size_t> window;
  std::optional<std::size_t> order;
  std::size_t generations = 50;
  std::size_t population = 30;
  std::size_t training_frames = 600;
  std::uint64_t seed = 1;
};

int run_fit(const FitArgs& a) {
  if (a.optimize && a.fault.empty()) {
    throw mif::ConfigError("--optimize needs at least one --fault dataset");
  }
  mif::DetectorParams base = a.params.empty() ? mif::DetectorParams{} : mif::load_params(a.params);
  if (a.beta) base.beta = *a.beta;
  if (a.window) base.window = *a.window;

  std::vector<std::vector<mif::TelemetryFrame>> normal;
  for (const auto& p : a.normal) {
    normal.push_back(mif::load_telemetry(p));
    require_benchmark_columns(normal.back());
  }
  if (a.order) {
    base.order = *a.order;
  } else if (a.params.empty()) {
    const auto& first = normal.front();
    if (first.size() < base.window) throw mif::DataError("dataset is shorter than the window");
    base.order = mif::derive_model_order(mif::temperature_window(first, 0, base.window));
  }
  base.validate();

  const mif::PackLayout layout = default_layout();
  if (a.optimize) {
    std::vector<std::vector<mif::TelemetryFrame>> runs = normal;
    for (const auto& p : a.fault) {
      runs.push_back(mif::load_telemetry(p));
      require_benchmark_columns(runs.back());
    }
    mif::MetricsConfig metrics;
    metrics.training_frames = a.training_frames;
    mif::FitnessEvaluator fitness(std::move(runs), layout.cell_centers, base, metrics);
    mif::GaConfig ga;
    ga.generations = a.generations;
    ga.population = a.population;
    ga.rng_seed = a.seed;
    const mif::GaResult r = mif::mga_optimize(std::ref(fitness), ga);
    if (r.fallback) {
      std::fprintf(stderr, "warning: no candidate detected any abnormal frame; keeping defaults\n");
    }
    base.window = r.best.window;
    base.weights = r.best.weights;
    if (!a.log.empty()) {
      auto out = open_out(a.log);
      mif::write_generation_log(out, r.log);
    }
    std::printf("best objective=%.6g window=%zu alpha=(%.6g, %.6g, %.6g)\n", r.best_objective,
                base.window, base.weights[0], base.weights[1], base.weights[2]);
  }

  mif::PipelineConfig pc;
  pc.window = base.window;
  pc.order = base.order;
  std::vector<mif::EntropyStreams> streams;
  for (const auto& run : normal) {
    streams.push_back(mif::compute_entropy_streams(run, pc, layout.cell_centers));
  }
  std::vector<const mif::EntropyStreams*> ptrs;
  for (const auto& s : streams) ptrs.push_back(&s);
  const mif::DetectorParams fitted = mif::fit_detector(ptrs, a.training_frames, base);
  mif::save_params(a.out, fitted);
  std::printf("window=%zu order=%zu threshold=%.6g\n", fitted.window, fitted.order,
              fitted.threshold);
  return 0;
}

struct DetectArgs {
  std::string data;
  std::string params;
  std::string out;
  bool refit = false;
  std::size_t training_frames = 600;
};

int run_detect(const DetectArgs& a) {
  const auto frames = mif::load_telemetry(a.data);
  require_benchmark_columns(frames);
  mif::DetectorParams params = mif::load_params(a.params);
  const mif::PackLayout layout = default_layout();
  mif::PipelineConfig pc;
  pc.window = params.window;
  pc.order = params.order;
  const auto streams = mif::compute_entropy_streams(frames, pc, layout.cell_centers);
  if (a.refit) params = mif::refit_on_run(streams, a.training_frames, params);
  const auto h = mif::fuse(streams, params);
  const auto outcome = mif::detect(h, mif::frame_times(frames), params.threshold);
  auto out = open_out(a.out);
  mif::write_detection_trace(out, streams, outcome, params);
  std::size_t alarms = 0;
  std::size_t usable = 0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (!h[k]) continue;
    ++usable;
    alarms += outcome.alarm[k] ? 1 : 0;
  }
  if (const auto t = outcome.alarm_time()) {
    std::printf("t_f=%.17g alarms=%zu usable=%zu\n", *t, alarms, usable);
  } else {
    std::printf("t_f=none status=normal alarms=0 usable=%zu\n", usable);
  }
  return 0;
}

struct LocalizeArgs {
  std::string data;
  std::string params;
  std::string out;
  double tf = 0.0;
};

int run_localize(const LocalizeArgs& a) {
  const auto frames = mif::load_telemetry(a.data);
  require_benchmark_columns(frames);
  const mif::DetectorParams params = mif::load_params(a.params);
  std::optional<std::size_t> index;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (frames[k].t >= a.tf) {
      index = k;
      break;
    }
  }
  if (!index || *index + 1 < params.window) {
    throw mif::ConfigError("t_f out of range: needs a frame at or after the first full window");
  }
  const mif::PackLayout layout = default_layout();
  const auto map = mif::contribution_at(frames, *index, params.window, params.order);
  auto out = open_out(a.out);
  mif::write_contribution_csv(out, map, layout);
  std::printf("#%zu\n", mif::localize(map, layout));
  return 0;
}

struct BenchmarkArgs {
  std::string scenarios = "scenarios";
  std::string params;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int run_benchmark(const BenchmarkArgs& a) {
  const mif::DetectorParams params =
      a.params.empty() ? mif::DetectorParams{} : mif::load_params(a.params);
  const mif::BenchmarkReport report = mif::run_benchmark(a.scenarios, params, a.seed);
  auto out = open_out(a.out);
  mif::write_benchmark_report(out, report);
  mif::write_benchmark_report(std::cout, report);
  for (const auto& r : report.rows) {
    if (r.failed) std::fprintf(stderr, "scenario %zu failed: %s\n", r.id, r.error.c_str());
  }
  std::printf("detected=%zu/%zu localized=%zu/%zu far_ok=%d adr_ok=%d -> %s\n", report.detected,
              report.rows.size(), report.localized, report.rows.size(), report.far_ok ? 1 : 0,
              report.adr_ok ? 1 : 0, report.passed ? "PASS" : "FAIL");
  return report.passed ? 0 : kExitBenchmark;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Battery pack abnormality detection by multiscale entropy fusion"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Simulate a scenario config into a telemetry CSV");
  c_sim->add_option("--config", sim.config, "Scenario config file")->required();
  c_sim->add_option("--out", sim.out, "Output telemetry CSV")->required();
  c_sim->add_option("--seed", sim.seed, "Override rng_seed");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit normalizers and threshold, optionally tune W and weights");
  c_fit->add_option("--normal", fit.normal, "Normal-condition dataset (repeatable)")->required();
  c_fit->add_option("--fault", fit.fault, "Fault dataset for --optimize (repeatable)");
  c_fit->add_option("--params", fit.params, "Start from this params file");
  c_fit->add_option("--out", fit.out, "Output params file")->required();
  c_fit->add_flag("--optimize", fit.optimize, "Tune window and weights with the genetic search");
  c_fit->add_option("--beta", fit.beta, "Confidence level");
  c_fit->add_option("--window", fit.window, "Window size W");
  c_fit->add_option("--order", fit.order, "Model order n (default: derived from the data)");
  c_fit->add_option("--generations", fit.generations, "GA generations");
  c_fit->add_option("--population", fit.population, "GA population");
  c_fit->add_option("--training-frames", fit.training_frames, "Leading frames used for fitting");
  c_fit->add_option("--log", fit.log, "Per-generation log CSV");
  c_fit->add_option("--seed", fit.seed, "GA seed");

  DetectArgs det;
  auto* c_det = app.add_subcommand("detect", "Run detection on a telemetry CSV");
  c_det->add_option("--data", det.data, "Telemetry CSV")->required();
  c_det->add_option("--params", det.params, "Params file")->required();
  c_det->add_option("--out", det.out, "Output trace CSV")->required();
  c_det->add_flag("--refit", det.refit, "Refit normalizers and threshold on this dataset's leading frames");
  c_det->add_option("--training-frames", det.training_frames, "Leading frames used by --refit");
  std::uint64_t unused_seed = 0;
  c_det->add_option("--seed", unused_seed, "Accepted for uniformity; detection is deterministic");

  LocalizeArgs loc;
  auto* c_loc = app.add_subcommand("localize", "Contribution map and faulty cell at an alarm time");
  c_loc->add_option("--data", loc.data, "Telemetry CSV")->required();
  c_loc->add_option("--params", loc.params, "Params file")->required();
  c_loc->add_option("--tf", loc.tf, "Alarm time t_f in seconds")->required();
  c_loc->add_option("--out", loc.out, "Output contribution CSV")->required();
  c_loc->add_option("--seed", unused_seed, "Accepted for uniformity; localization is deterministic");

  BenchmarkArgs bench;
  auto* c_bench = app.add_subcommand("benchmark", "Simulate, detect and localize every scenario");
  c_bench->add_option("--scenarios", bench.scenarios, "Directory of scenario configs");
  c_bench->add_option("--params", bench.params, "Params file (default: built-in defaults)");
  c_bench->add_option("--out", bench.out, "Output report CSV")->required();
  c_bench->add_option("--seed", bench.seed, "Master seed; scenario seed = master + id");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_sim) return run_simulate(sim);
    if (*c_fit) return run_fit(fit);
    if (*c_det) return run_detect(det);
    if (*c_loc) return run_localize(loc);
    if (*c_bench) return run_benchmark(bench);
  } catch (const mif::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const mif::SimulationError& e) {
    std::fprintf(stderr, "simulation error: %s\n", e.what());
    return 3;
  } catch (const mif::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 4;
  }
  return 0;
}
