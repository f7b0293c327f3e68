#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "mif/error.hpp"
#include "mif/optimizer.hpp"

using namespace mif;

namespace {

std::string pct(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * f);
  return buf;
}

DetectionOutcome synthetic_outcome(std::size_t frames, std::size_t first_alarm) {
  std::vector<std::optional<double>> h(frames);
  std::vector<double> t(frames);
  for (std::size_t k = 0; k < frames; ++k) {
    t[k] = static_cast<double>(k);
    if (k >= 26) h[k] = k >= first_alarm ? 1.0 : 0.0;
  }
  return detect(h, t, 0.5);
}

}  // namespace

TEST_CASE("metric arithmetic on raw counts") {
  AlarmCounts c;
  c.detected_abnormal = 922;
  c.total_abnormal = 1000;
  c.false_alarms = 2;
  c.total_normal = 1000;
  c.onset = 1000.0;
  c.detection = 1011.0;
  const AlarmCounts runs[] = {c};
  const EvaluationResult r = evaluate(runs, MetricsConfig{});
  CHECK(pct(r.adr) == "92.20");
  CHECK(r.relative_delay == doctest::Approx(0.011).epsilon(1e-12));
  CHECK(*r.delay == 11.0);
  CHECK(r.objective == doctest::Approx(1.0 / 0.922 + 0.002 + 0.011).epsilon(1e-12));
}

TEST_CASE("objective") {
  CHECK(objective(0.922, 0.002, 0.011) == doctest::Approx(1.0976).epsilon(1e-4));
  CHECK(objective(1.0, 0.0, 0.0) == 1.0);
  CHECK(std::isinf(objective(0.0, 0.0, 0.0)));
}

TEST_CASE("metrics from a detection outcome") {
  const DetectionOutcome out = synthetic_outcome(2000, 1000);
  std::vector<bool> labels(2000, false);
  for (std::size_t k = 1000; k < 2000; ++k) labels[k] = true;
  const EvaluationResult r = compute_metrics(out, labels, MetricsConfig{});
  CHECK(r.adr == 1.0);
  CHECK(r.far == 0.0);
  CHECK(r.relative_delay == 0.0);
  CHECK(r.objective == 1.0);
}

TEST_CASE("no detection costs the full duration") {
  const DetectionOutcome out = synthetic_outcome(2000, 5000);
  std::vector<bool> labels(2000, false);
  for (std::size_t k = 1000; k < 2000; ++k) labels[k] = true;
  const EvaluationResult r = compute_metrics(out, labels, MetricsConfig{});
  CHECK(r.adr == 0.0);
  CHECK_FALSE(r.delay);
  CHECK(r.relative_delay == doctest::Approx(1.999));
  CHECK(std::isinf(r.objective));
}

TEST_CASE("false alarms are counted only after the training segment") {
  const DetectionOutcome out = synthetic_outcome(2000, 100);
  std::vector<bool> labels(2000, false);
  for (std::size_t k = 1000; k < 2000; ++k) labels[k] = true;
  const AlarmCounts c = count_alarms(out, labels, MetricsConfig{});
  CHECK(c.total_normal == 400);
  CHECK(c.false_alarms == 400);
  CHECK(c.total_abnormal == 1000);
  CHECK(*c.detection == 1000.0);
}

TEST_CASE("unusable labeling") {
  const DetectionOutcome out = synthetic_outcome(700, 5000);
  const std::vector<bool> normal(700, false);
  CHECK_THROWS_WITH_AS(compute_metrics(out, normal, MetricsConfig{}), "unusable scenario labeling",
                       DataError);
}

TEST_CASE("simplex projection") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.3, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::array<double, 3> v = {g(rng), g(rng), g(rng)};
    const auto p = project_to_simplex(v);
    double sum = 0.0;
    for (double a : p) {
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
      sum += a;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    const auto again = project_to_simplex(p);
    for (int i = 0; i < 3; ++i) CHECK(again[i] == doctest::Approx(p[i]).epsilon(1e-12));
    // Optimality: no feasible vertex or midpoint is closer.
    auto dist = [&](const std::array<double, 3>& q) {
      return std::pow(q[0] - v[0], 2) + std::pow(q[1] - v[1], 2) + std::pow(q[2] - v[2], 2);
    };
    for (const auto& q : {std::array<double, 3>{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.5, 0.5, 0},
                          {1.0 / 3, 1.0 / 3, 1.0 / 3}}) {
      CHECK(dist(p) <= dist(q) + 1e-12);
    }
  }
  const auto inside = project_to_simplex({0.216, 0.573, 0.211});
  CHECK(inside[0] == doctest::Approx(0.216));
  CHECK(inside[1] == doctest::Approx(0.573));
}

TEST_CASE("genetic search on a synthetic landscape") {
  // Minimum at W = 40, weights (0.2, 0.5, 0.3).
  auto f = [](const Candidate& c) {
    return 1.0 + std::pow((static_cast<double>(c.window) - 40.0) / 50.0, 2) +
           std::pow(c.weights[0] - 0.2, 2) + std::pow(c.weights[1] - 0.5, 2) +
           std::pow(c.weights[2] - 0.3, 2);
  };
  GaConfig cfg;
  cfg.generations = 40;
  cfg.population = 20;
  bool all_feasible = true;
  std::size_t emitted = 0;
  const GaResult r = mga_optimize(f, cfg, [&](const Candidate& c) {
    ++emitted;
    all_feasible = all_feasible && feasible(c, cfg.window_min, cfg.window_max);
  });
  CHECK(all_feasible);
  CHECK(emitted == 20 + 40 * 18);
  CHECK_FALSE(r.fallback);
  CHECK(r.log.size() == 41);
  for (std::size_t g = 1; g < r.log.size(); ++g) CHECK(r.log[g].best <= r.log[g - 1].best);
  CHECK(r.best_objective <= r.log.front().best);
  CHECK(std::abs(static_cast<double>(r.best.window) - 40.0) <= 6.0);
  CHECK(r.best_objective < 1.01);

  const GaResult again = mga_optimize(f, cfg);
  CHECK(again.best == r.best);
  CHECK(again.best_objective == r.best_objective);
}

TEST_CASE("genetic search falls back to defaults when nothing detects") {
  GaConfig cfg;
  cfg.generations = 3;
  cfg.population = 6;
  const GaResult r = mga_optimize([](const Candidate&) { return std::numeric_limits<double>::infinity(); }, cfg);
  CHECK(r.fallback);
  CHECK(r.best == Candidate{});
}

TEST_CASE("ga config validation") {
  GaConfig cfg;
  cfg.population = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = GaConfig{};
  cfg.elite = 29;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("random candidates are feasible") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) CHECK(feasible(random_candidate(rng, 5, 200), 5, 200));
  Candidate c;
  c.weights = {0.5, 0.5, 0.1};
  CHECK_FALSE(feasible(c, 5, 200));
  c = Candidate{};
  c.window = 201;
  CHECK_FALSE(feasible(c, 5, 200));
}

TEST_CASE("fitness evaluation on a simulated fault is deterministic") {
  const CellSpec spec;
  const PackLayout layout = build_layout(4, 6, spec, 0.002, 4);
  SimConfig cfg;
  cfg.duration = 1200.0;
  cfg.rng_seed = 3;
  FaultSpec fault;
  fault.fault_cell = 4;
  fault.onset = 800.0;
  cfg.fault = fault;
  std::vector<std::vector<TelemetryFrame>> runs = {simulate(cfg, layout, spec).frames};
  FitnessEvaluator eval(runs, layout.cell_centers, DetectorParams{});
  const Candidate c;
  const EvaluationResult a = eval.evaluate(c);
  const EvaluationResult b = eval.evaluate(c);
  CHECK(a.objective == b.objective);
  CHECK(eval.cached_windows() == 1);
  CHECK(a.adr > 0.0);
  CHECK(a.adr <= 1.0);
  CHECK(a.far >= 0.0);
  CHECK(a.far <= 1.0);

  cfg.fault->onset = 300.0;
  std::vector<std::vector<TelemetryFrame>> early = {simulate(cfg, layout, spec).frames};
  CHECK_THROWS_AS(FitnessEvaluator(early, layout.cell_centers, DetectorParams{}), DataError);
}
