#include "mif/fusion_detect.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mif/error.hpp"
#include "mif/lumped_entropy.hpp"

namespace mif {

void DetectorParams::validate() const {
  if (window < 1) throw ConfigError("window must be a positive integer");
  if (order < 1) throw ConfigError("model order must be positive");
  double sum = 0.0;
  for (double a : weights) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("fusion weights must lie in [0, 1]");
    sum += a;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("fusion weights must sum to 1");
  for (double m : normalizers) {
    if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("normalizers must be positive");
  }
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
}

double normalize(double value, double training_max) {
  if (!(training_max > 0.0)) throw ConfigError("training maximum must be positive");
  return value / training_max;
}

double multiscale_statistic(double h_d, double h_s, double h_t, const DetectorParams& params) {
  return params.weights[0] * normalize(h_d, params.normalizers[0]) +
         params.weights[1] * normalize(h_s, params.normalizers[1]) +
         params.weights[2] * normalize(h_t, params.normalizers[2]);
}

double KdeModel::density(double w) const {
  const double inv = 1.0 / (bandwidth * std::sqrt(2.0 * std::numbers::pi));
  double acc = 0.0;
  for (double h : samples) {
    const double z = (w - h) / bandwidth;
    acc += std::exp(-0.5 * z * z);
  }
  return inv * acc / static_cast<double>(samples.size());
}

double KdeModel::cdf(double w) const {
  double acc = 0.0;
  for (double h : samples) acc += 0.5 * std::erfc(-(w - h) / (bandwidth * std::numbers::sqrt2));
  return acc / static_cast<double>(samples.size());
}

KdeModel fit_kde(std::span<const double> training) {
  if (training.size() < 2) throw DataError("KDE needs at least two training samples");
  const auto n = static_cast<double>(training.size());
  const double mean = std::accumulate(training.begin(), training.end(), 0.0) / n;
  double var = 0.0;
  for (double h : training) var += (h - mean) * (h - mean);
  const double sigma = std::sqrt(var / (n - 1.0));
  if (!(sigma > 1e-12 * std::max(1.0, std::abs(mean)))) throw DataError("degenerate training statistic");
  KdeModel model;
  model.samples.assign(training.begin(), training.end());
  model.bandwidth = 1.06 * sigma * std::pow(n, -0.2);
  return model;
}

double threshold_from_kde(const KdeModel& model, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
  const auto [lo_it, hi_it] = std::minmax_element(model.samples.begin(), model.samples.end());
  double lo = *lo_it - 12.0 * model.bandwidth;
  double hi = *hi_it + 12.0 * model.bandwidth;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (model.cdf(mid) >= beta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

Eigen::MatrixXd temperature_window(std::span<const TelemetryFrame> frames, std::size_t first,
                                   std::size_t count) {
  if (first + count > frames.size()) throw DataError("temperature window exceeds the data");
  const std::size_t n = frames[first].temperatures.size();
  Eigen::MatrixXd y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(count));
  for (std::size_t j = 0; j < count; ++j) {
    const auto& temps = frames[first + j].temperatures;
    if (temps.size() != n) throw DataError("inconsistent sensor count across frames");
    for (std::size_t i = 0; i < n; ++i) {
      y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = temps[i];
    }
  }
  return y;
}

EntropyStreams compute_entropy_streams(std::span<const TelemetryFrame> frames,
                                       const PipelineConfig& cfg,
                                       std::span<const Point> sensors) {
  const std::size_t w = cfg.window;
  if (frames.size() < w) throw DataError("dataset is shorter than the window");
  if (frames.front().temperatures.size() != sensors.size()) {
    throw DataError("sensor coordinates do not match the temperature columns");
  }
  EntropyStreams out;
  out.samples.assign(frames.size(), std::nullopt);
  out.initial = decompose_window(temperature_window(frames, 0, w), cfg.order);
  const AxisSplit split = make_axis_split(sensors);

  const Eigen::MatrixXd all = temperature_window(frames, 0, frames.size());
  LumpedEntropyTracker lumped(w, frames.front().voltages.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto record = lumped.push(frames[k].voltages);
    if (!record) continue;
    const std::size_t first = k + 1 - w;
    const Eigen::MatrixXd window =
        all.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(w));
    const Decomposition dec = decompose_window(window, cfg.order, &out.initial);
    EntropySample s;
    s.h_d = record->h_d;
    s.h_s = spatial_entropy(sbf_variation(dec, out.initial, split));
    s.h_t = temporal_entropy(dec, cfg.fuzzy);
    out.samples[k] = s;
  }
  return out;
}

std::vector<std::optional<double>> fuse(const EntropyStreams& streams,
                                        const DetectorParams& params) {
  std::vector<std::optional<double>> h(streams.samples.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (const auto& s = streams.samples[k]) {
      h[k] = multiscale_statistic(s->h_d, s->h_s, s->h_t, params);
    }
  }
  return h;
}

DetectorParams fit_detector(std::span<const EntropyStreams* const> training,
                            std::size_t training_frames, const DetectorParams& base) {
  if (training.empty()) throw DataError("fitting needs at least one training run");
  DetectorParams params = base;
  std::array<double, 3> maxima = {0.0, 0.0, 0.0};
  std::size_t usable = 0;
  for (const EntropyStreams* streams : training) {
    const std::size_t limit = std::min(training_frames, streams->samples.size());
    for (std::size_t k = 0; k < limit; ++k) {
      const auto& s = streams->samples[k];
      if (!s) continue;
      maxima[0] = std::max(maxima[0], s->h_d);
      maxima[1] = std::max(maxima[1], s->h_s);
      maxima[2] = std::max(maxima[2], s->h_t);
      ++usable;
    }
  }
  if (usable < 2) throw DataError("training segment shorter than the window");
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(maxima[i] > 0.0)) {
      throw DataError("training entropy stream " + std::to_string(i + 1) + " is identically zero");
    }
  }
  params.normalizers = maxima;

  std::vector<double> h;
  h.reserve(usable);
  for (const EntropyStreams* streams : training) {
    const std::size_t limit = std::min(training_frames, streams->samples.size());
    for (std::size_t k = 0; k < limit; ++k) {
      if (const auto& s = streams->samples[k]) {
        h.push_back(multiscale_statistic(s->h_d, s->h_s, s->h_t, params));
      }
    }
  }
  params.threshold = threshold_from_kde(fit_kde(h), params.beta);
  return params;
}

std::optional<double> DetectionOutcome::alarm_time() const {
  if (!first_alarm) return std::nullopt;
  return times[*first_alarm];
}

std::optional<std::size_t> DetectionOutcome::first_alarm_after(double t) const {
  for (std::size_t k = 0; k < alarm.size(); ++k) {
    if (alarm[k] && times[k] >= t) return k;
  }
  return std::nullopt;
}

DetectionOutcome detect(std::span<const std::optional<double>> statistic,
                        std::span<const double> times, double threshold) {
  if (statistic.size() != times.size()) throw DataError("statistic and time axes differ");
  DetectionOutcome out;
  out.threshold = threshold;
  out.times.assign(times.begin(), times.end());
  out.statistic.assign(statistic.begin(), statistic.end());
  out.alarm.assign(statistic.size(), false);
  for (std::size_t k = 0; k < statistic.size(); ++k) {
    if (statistic[k] && *statistic[k] > threshold) {
      out.alarm[k] = true;
      if (!out.first_alarm) out.first_alarm = k;
    }
  }
  return out;
}

std::vector<double> frame_times(std::span<const TelemetryFrame> frames) {
  std::vector<double> t;
  t.reserve(frames.size());
  for (const auto& f : frames) t.push_back(f.t);
  return t;
}

}  // namespace mif
