#include "mif/lumped_entropy.hpp"

#include <cmath>
#include <numeric>

#include "mif/error.hpp"

namespace mif {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_std(std::span<const double> v, double mean) {
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

SlidingWindowBuffer::SlidingWindowBuffer(std::size_t capacity, std::size_t signals)
    : capacity_(capacity), signals_(signals), data_(capacity * signals, 0.0) {
  if (capacity == 0 || signals == 0) {
    throw ConfigError("sliding window needs a positive capacity and signal count");
  }
}

void SlidingWindowBuffer::push(std::span<const double> sample) {
  if (sample.size() != signals_) throw DataError("sample width does not match the buffer");
  std::copy(sample.begin(), sample.end(), data_.begin() + head_ * signals_);
  head_ = (head_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

std::vector<double> SlidingWindowBuffer::window(std::size_t signal) const {
  std::vector<double> out;
  out.reserve(size_);
  const std::size_t start = (head_ + capacity_ - size_) % capacity_;
  for (std::size_t i = 0; i < size_; ++i) {
    out.push_back(data_[((start + i) % capacity_) * signals_ + signal]);
  }
  return out;
}

double coefficient_of_variation(std::span<const double> window) {
  if (window.empty()) throw DataError("empty window");
  const double mu = mean_of(window);
  if (std::abs(mu) < kZeroMeanTolerance) throw DataError("zero-mean window");
  return population_std(window, mu) / mu;
}

double sliding_cv(const SlidingWindowBuffer& buffer, std::size_t signal) {
  if (!buffer.warm()) throw DataError("sliding window is not warm");
  const std::vector<double> w = buffer.window(signal);
  return coefficient_of_variation(w);
}

ZScores z_scores(std::span<const double> cvs) {
  if (cvs.size() < 2) throw DataError("z-scores need at least two signals");
  ZScores out;
  out.values.assign(cvs.size(), 0.0);
  const double mu = mean_of(cvs);
  const double sigma = population_std(cvs, mu);
  if (sigma < kDegenerateSpread) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < cvs.size(); ++i) out.values[i] = std::abs(cvs[i] - mu) / sigma;
  return out;
}

double dissimilarity_entropy(std::span<const double> z) {
  if (z.size() < 2) throw DataError("dissimilarity entropy needs at least two values");
  const double mu = mean_of(z);
  double m2 = 0.0;
  double m3 = 0.0;
  for (double v : z) {
    const double d = v - mu;
    m2 += d * d;
    m3 += std::abs(d) * d * d;
  }
  const auto p = static_cast<double>(z.size());
  m2 /= p;
  m3 /= p;
  if (m2 < kDegenerateSpread) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

LumpedEntropyTracker::LumpedEntropyTracker(std::size_t window, std::size_t signals)
    : buffer_(window, signals) {}

std::optional<LumpedEntropyRecord> LumpedEntropyTracker::push(
    std::span<const double> voltages) {
  buffer_.push(voltages);
  if (!buffer_.warm()) return std::nullopt;
  LumpedEntropyRecord rec;
  rec.cvs.reserve(buffer_.signals());
  for (std::size_t i = 0; i < buffer_.signals(); ++i) rec.cvs.push_back(sliding_cv(buffer_, i));
  ZScores z = z_scores(rec.cvs);
  rec.z = std::move(z.values);
  rec.degenerate = z.degenerate;
  rec.h_d = dissimilarity_entropy(rec.z);
  return rec;
}

}  // namespace mif
