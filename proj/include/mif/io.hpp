#pragma once

// File formats and the scenario benchmark.
//
// Telemetry: CSV with header t,T01..TNN,V1..VP,I,label, values printed with
// 17 significant digits.  Scenario configs and detector params: flat
// `key = value` text, `#` starts a comment.

#include <array>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mif/fusion_detect.hpp"
#include "mif/localization.hpp"
#include "mif/optimizer.hpp"
#include "mif/pack_sim.hpp"

namespace mif {

void write_telemetry_csv(std::ostream& out, std::span<const TelemetryFrame> frames);
/// Throws DataError naming the 1-based line number of a malformed row.
std::vector<TelemetryFrame> read_telemetry_csv(std::istream& in);

void save_telemetry(const std::filesystem::path& path, std::span<const TelemetryFrame> frames);
std::vector<TelemetryFrame> load_telemetry(const std::filesystem::path& path);

/// Ordered key/value pairs; duplicate keys are rejected.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues parse_key_values(std::istream& in);

/// Expected results quoted next to a scenario in the benchmark report.
struct ScenarioTargets {
  std::optional<double> add;   // s
  std::optional<double> adr;   // percent
  std::optional<double> far;   // percent
  std::optional<std::size_t> cell;
};

struct ScenarioConfig {
  std::size_t id = 0;
  std::string name;
  std::size_t rows = 4;
  std::size_t cols = 6;
  double gap = 0.002;  // m
  CellSpec cell;
  SimConfig sim;
  ScenarioTargets targets;

  PackLayout layout() const;
};

/// Keys mirror the SimConfig, FaultSpec and CellSpec field names.  Any key
/// of FaultSpec enables the fault.  Throws ConfigError naming the key.
ScenarioConfig parse_scenario(std::istream& in);
ScenarioConfig load_scenario(const std::filesystem::path& path);

void write_params(std::ostream& out, const DetectorParams& params);
DetectorParams read_params(std::istream& in);
void save_params(const std::filesystem::path& path, const DetectorParams& params);
DetectorParams load_params(const std::filesystem::path& path);

/// Per-frame `t,h_d,h_s,h_t,H,H_r,alarm`; warm-up rows leave the entropy
/// fields empty.
void write_detection_trace(std::ostream& out, const EntropyStreams& streams,
                           const DetectionOutcome& outcome, const DetectorParams& params);

void write_generation_log(std::ostream& out, std::span<const GenerationLog> log);

/// Refits normalizers and threshold on the leading `training_frames` of
/// one run, keeping window, weights, beta and order.
DetectorParams refit_on_run(const EntropyStreams& streams, std::size_t training_frames,
                            const DetectorParams& params);

struct BenchmarkRow {
  std::size_t id = 0;
  std::string name;
  std::optional<double> add;   // s
  double adr = 0.0;            // percent
  double far = 0.0;            // percent
  std::optional<std::size_t> estimated_cell;
  std::size_t true_cell = 0;
  bool match = false;
  bool failed = false;
  std::string error;
  ScenarioTargets targets;
};

struct BenchmarkCriteria {
  double max_add = 60.0;           // s
  double max_far = 5.0;            // percent, every scenario
  double min_adr = 70.0;           // percent, detected scenarios
  std::size_t min_detected = 8;
  std::size_t min_localized = 8;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  std::size_t detected = 0;   // alarm after onset within max_add
  std::size_t localized = 0;
  bool far_ok = false;
  bool adr_ok = false;
  bool passed = false;
};

BenchmarkRow run_scenario(const ScenarioConfig& scenario, const DetectorParams& params,
                          const MetricsConfig& metrics = {});

/// Loads every *.cfg in `dir`, runs them ordered by scenario id.  With a
/// master seed each scenario uses seed + id.
BenchmarkReport run_benchmark(const std::filesystem::path& dir, const DetectorParams& params,
                              std::optional<std::uint64_t> master_seed = std::nullopt,
                              const BenchmarkCriteria& criteria = {});

void write_benchmark_report(std::ostream& out, const BenchmarkReport& report);

}  // namespace mif
