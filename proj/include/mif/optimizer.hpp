#pragma once

// Detection metrics (ADR, FAR, relative ADD), the scalar tuning objective,
// and a real-coded genetic search over the window size and fusion weights.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mif/fusion_detect.hpp"
#include "mif/pack_sim.hpp"

namespace mif {

struct MetricsConfig {
  double reference_time = 1000.0;    // t_r, s
  std::size_t training_frames = 600; // frames before this index are never scored

  void validate() const;
};

/// Raw alarm counts of one labeled run.
struct AlarmCounts {
  std::size_t detected_abnormal = 0;  // N_da
  std::size_t total_abnormal = 0;     // N_ta
  std::size_t false_alarms = 0;       // N_f
  std::size_t total_normal = 0;       // N_tn
  std::optional<double> onset;        // t_a, first abnormal-labeled frame
  std::optional<double> detection;    // t_d, first alarm at or after t_a
  double duration = 0.0;              // s, last frame time minus first
};

/// Counts scored frames (index >= training_frames, past warm-up).
AlarmCounts count_alarms(const DetectionOutcome& outcome, const std::vector<bool>& labels,
                         const MetricsConfig& cfg);

struct EvaluationResult {
  double adr = 0.0;              // eta_1
  double far = 0.0;              // eta_2
  double relative_delay = 0.0;   // eta_3
  std::optional<double> delay;   // t_d - t_a of a single run, s
  double objective = std::numeric_limits<double>::infinity();
};

/// 1/eta_1 + eta_2 + eta_3; +inf when eta_1 == 0.
double objective(double adr, double far, double relative_delay);

/// Pools counts over runs: ADR over every abnormal frame, FAR over every
/// normal frame, relative delay averaged over the runs that contain a fault.
/// A run without a detection contributes duration / t_r.
EvaluationResult evaluate(std::span<const AlarmCounts> runs, const MetricsConfig& cfg);

EvaluationResult compute_metrics(const DetectionOutcome& outcome, const std::vector<bool>& labels,
                                 const MetricsConfig& cfg);

std::vector<bool> frame_labels(std::span<const TelemetryFrame> frames);

struct Candidate {
  std::size_t window = 27;
  std::array<double, 3> weights = {0.216, 0.573, 0.211};

  bool operator==(const Candidate&) const = default;
};

/// Euclidean projection onto {a : a_i >= 0, sum a_i = 1}.
std::array<double, 3> project_to_simplex(const std::array<double, 3>& v);

/// Weights in [0, 1] summing to 1 within 1e-9 and window in [lo, hi].
bool feasible(const Candidate& c, std::size_t window_min, std::size_t window_max);

/// Scores candidates by running the full pipeline on labeled runs.  Each run
/// refits its normalizers and threshold on its own leading training frames.
/// Entropy streams are cached per window size.
class FitnessEvaluator {
public:
  FitnessEvaluator(std::vector<std::vector<TelemetryFrame>> runs, std::vector<Point> sensors,
                   DetectorParams base, MetricsConfig metrics = {});

  EvaluationResult evaluate(const Candidate& c);
  double operator()(const Candidate& c) { return evaluate(c).objective; }

  DetectorParams params_for(const Candidate& c) const;
  std::size_t cached_windows() const { return cache_.size(); }

private:
  const std::vector<EntropyStreams>& streams_for(std::size_t window);

  std::vector<std::vector<TelemetryFrame>> runs_;
  std::vector<std::vector<bool>> labels_;
  std::vector<std::vector<double>> times_;
  std::vector<Point> sensors_;
  DetectorParams base_;
  MetricsConfig metrics_;
  std::map<std::size_t, std::vector<EntropyStreams>> cache_;
};

struct GaConfig {
  std::size_t population = 30;
  std::size_t generations = 50;
  std::size_t tournament = 3;
  double crossover_rate = 0.9;
  double blend = 0.5;             // BLX-alpha extension
  double mutation_rate = 0.3;
  double mutation_scale_start = 0.15;
  double mutation_scale_end = 0.01;
  std::size_t window_step = 3;
  std::size_t elite = 2;
  std::size_t immigrants = 2;
  std::size_t window_min = 5;
  std::size_t window_max = 200;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

struct GenerationLog {
  std::size_t generation = 0;
  double best = 0.0;
  double mean = 0.0;  // over finite objectives; inf when none
  Candidate best_candidate;
};

struct GaResult {
  Candidate best;
  double best_objective = std::numeric_limits<double>::infinity();
  std::vector<GenerationLog> log;
  bool fallback = false;  // nothing detected; default candidate returned
};

using Fitness = std::function<double(const Candidate&)>;

/// Individuals are handed to `on_emit` right before they are scored.
GaResult mga_optimize(const Fitness& fitness, const GaConfig& cfg,
                      const std::function<void(const Candidate&)>& on_emit = {});

/// Uniform random feasible candidate: window uniform in range, weights
/// uniform on the simplex.
Candidate random_candidate(std::mt19937_64& rng, std::size_t window_min, std::size_t window_max);

/// Best of `count` uniform random candidates.
GaResult random_search(const Fitness& fitness, std::size_t count, std::size_t window_min,
                       std::size_t window_max, std::uint64_t seed);

}  // namespace mif
