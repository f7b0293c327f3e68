#pragma once

// Dissimilarity entropy of the parallel-group voltages: sliding coefficient
// of variation per group, absolute Z-scores across groups, then a
// skewness-like ratio of absolute third to second central moments.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace mif {

/// Fixed-capacity ring holding the last W samples of several signals.
class SlidingWindowBuffer {
public:
  SlidingWindowBuffer(std::size_t capacity, std::size_t signals);

  void push(std::span<const double> sample);
  bool warm() const { return size_ == capacity_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  std::size_t signals() const { return signals_; }

  /// Oldest-first copy of one signal's window.
  std::vector<double> window(std::size_t signal) const;

private:
  std::size_t capacity_;
  std::size_t signals_;
  std::size_t head_ = 0;  // next slot to overwrite
  std::size_t size_ = 0;
  std::vector<double> data_;  // capacity_ x signals_, slot-major
};

inline constexpr double kZeroMeanTolerance = 1e-12;
inline constexpr double kDegenerateSpread = 1e-15;

/// Population std / mean over the buffered window of one signal.
double sliding_cv(const SlidingWindowBuffer& buffer, std::size_t signal);
double coefficient_of_variation(std::span<const double> window);

struct ZScores {
  std::vector<double> values;
  bool degenerate = false;
};

ZScores z_scores(std::span<const double> cvs);

double dissimilarity_entropy(std::span<const double> z);

struct LumpedEntropyRecord {
  std::vector<double> cvs;
  std::vector<double> z;
  double h_d = 0.0;
  bool degenerate = false;
};

/// Streams voltage samples through a window of size W; emits a record once
/// the window is warm.
class LumpedEntropyTracker {
public:
  LumpedEntropyTracker(std::size_t window, std::size_t signals);

  std::optional<LumpedEntropyRecord> push(std::span<const double> voltages);

private:
  SlidingWindowBuffer buffer_;
};

}  // namespace mif
