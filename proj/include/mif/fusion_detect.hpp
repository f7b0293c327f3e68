#pragma once

// Fusion of the three entropy streams into the multiscale statistic H(k),
// the KDE reference threshold, and the alarm rule.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mif/pack_sim.hpp"
#include "mif/spatiotemporal_entropy.hpp"

namespace mif {

struct DetectorParams {
  std::size_t window = 27;
  std::array<double, 3> weights = {0.216, 0.573, 0.211};
  std::array<double, 3> normalizers = {1.0, 1.0, 1.0};  // training maxima
  double threshold = 0.0;                                // H_r
  double beta = 0.99;
  std::size_t order = 1;  // model order n; `fit` derives it from the training data

  void validate() const;
};

/// Component-wise value / training maximum.  Not clipped at one.
double normalize(double value, double training_max);

double multiscale_statistic(double h_d, double h_s, double h_t, const DetectorParams& params);

struct KdeModel {
  std::vector<double> samples;
  double bandwidth = 0.0;

  double density(double w) const;
  /// Integral of the density from -infinity to w.
  double cdf(double w) const;
};

/// Gaussian-kernel KDE with the rule-of-thumb bandwidth
/// b = 1.06 * sigma * L^(-1/5), sigma the sample standard deviation.
KdeModel fit_kde(std::span<const double> training);

/// Smallest H_r whose CDF reaches `beta`, by bisection to 1e-10.
double threshold_from_kde(const KdeModel& model, double beta);

struct EntropySample {
  double h_d = 0.0;
  double h_s = 0.0;
  double h_t = 0.0;
};

struct PipelineConfig {
  std::size_t window = 27;
  std::size_t order = 1;  // model order n; `fit` derives it from the training data
  FuzzyParams fuzzy;
};

/// Per-frame entropies; empty entries mark warm-up frames (fewer than W
/// samples seen).  The initial decomposition is taken from the first W
/// frames of the run.
struct EntropyStreams {
  std::vector<std::optional<EntropySample>> samples;
  Decomposition initial;
};

EntropyStreams compute_entropy_streams(std::span<const TelemetryFrame> frames,
                                       const PipelineConfig& cfg,
                                       std::span<const Point> sensors);

/// Temperatures of frames [first, first + count) as an N x count matrix.
Eigen::MatrixXd temperature_window(std::span<const TelemetryFrame> frames, std::size_t first,
                                   std::size_t count);

std::vector<std::optional<double>> fuse(const EntropyStreams& streams,
                                        const DetectorParams& params);

/// Fits normalizers (training maxima) and the KDE threshold on the first
/// `training_frames` frames of each stream.  Window, weights, beta and order
/// are taken from `base`.
DetectorParams fit_detector(std::span<const EntropyStreams* const> training,
                            std::size_t training_frames, const DetectorParams& base);

struct DetectionOutcome {
  std::vector<double> times;
  std::vector<std::optional<double>> statistic;
  std::vector<bool> alarm;
  std::optional<std::size_t> first_alarm;  // frame index
  double threshold = 0.0;

  std::optional<double> alarm_time() const;
  /// First alarm at or after `t`.
  std::optional<std::size_t> first_alarm_after(double t) const;
};

/// Alarm wherever H(k) > H_r strictly; warm-up frames never alarm.
DetectionOutcome detect(std::span<const std::optional<double>> statistic,
                        std::span<const double> times, double threshold);

std::vector<double> frame_times(std::span<const TelemetryFrame> frames);

}  // namespace mif
