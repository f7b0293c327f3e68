#include "mif/spatiotemporal_entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "mif/error.hpp"

namespace mif {

Eigen::MatrixXd Decomposition::reconstruct() const {
  return phi * lambda.asDiagonal() * a;
}

Decomposition decompose_window(const Eigen::MatrixXd& window, std::size_t order,
                               const Decomposition* reference) {
  const auto n_sensors = static_cast<std::size_t>(window.rows());
  const auto width = static_cast<std::size_t>(window.cols());
  if (order < 1 || order > n_sensors || order > width) {
    throw ConfigError("model order must satisfy 1 <= n <= min(N, W)");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(window, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double tol = (sv.size() > 0 ? sv(0) : 0.0) *
                     static_cast<double>(std::max(n_sensors, width)) *
                     std::numeric_limits<double>::epsilon();

  Decomposition dec;
  dec.order = order;
  const auto n = static_cast<Eigen::Index>(order);
  dec.phi = Eigen::MatrixXd::Zero(window.rows(), n);
  dec.lambda = Eigen::VectorXd::Zero(n);
  dec.a = Eigen::MatrixXd::Zero(n, window.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(sv(i) > tol)) break;
    dec.phi.col(i) = svd.matrixU().col(i);
    dec.lambda(i) = sv(i);
    dec.a.row(i) = svd.matrixV().col(i).transpose();
    ++dec.effective_rank;
  }
  dec.rank_deficient = dec.effective_rank < order;

  if (reference) {
    if (reference->phi.rows() != dec.phi.rows() || reference->order != order) {
      throw DataError("reference decomposition has a different shape");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (dec.phi.col(i).dot(reference->phi.col(i)) < 0.0) {
        dec.phi.col(i) *= -1.0;
        dec.a.row(i) *= -1.0;
      }
    }
  }
  return dec;
}

std::size_t derive_model_order(const Eigen::MatrixXd& window, double energy_fraction) {
  if (!(energy_fraction > 0.0 && energy_fraction <= 1.0)) {
    throw ConfigError("energy fraction must lie in (0, 1]");
  }
  if (window.size() == 0) throw DataError("empty window");
  const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXd>(window).singularValues();
  const double total = sv.squaredNorm();
  if (!(total > 0.0)) return 1;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    acc += sv(i) * sv(i);
    if (acc >= energy_fraction * total) return static_cast<std::size_t>(i + 1);
  }
  return static_cast<std::size_t>(sv.size());
}

AxisSplit make_axis_split(std::span<const Point> sensors) {
  AxisSplit split;
  const std::size_t n = sensors.size();
  const std::size_t lower = (n + 1) / 2;
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
      return axis == 0 ? sensors[l].x < sensors[r].x : sensors[l].y < sensors[r].y;
    });
    order.resize(lower);
    split.lower[static_cast<std::size_t>(axis)] = std::move(order);
  }
  return split;
}

std::vector<double> basis_variation(const Decomposition& current,
                                    const Decomposition& initial) {
  if (current.phi.rows() != initial.phi.rows() || current.order != initial.order) {
    throw DataError("decompositions differ in sensor count or order");
  }
  const Eigen::VectorXd v = (current.phi - initial.phi).cwiseAbs().rowwise().sum();
  return {v.data(), v.data() + v.size()};
}

SpatialPdf sbf_variation(const Decomposition& current, const Decomposition& initial,
                         const AxisSplit& split) {
  SpatialPdf pdf;
  pdf.variation = basis_variation(current, initial);
  pdf.normalizer = std::accumulate(pdf.variation.begin(), pdf.variation.end(), 0.0);
  pdf.probability.assign(pdf.variation.size(), 0.0);
  if (pdf.normalizer < kNullPdfTolerance) return pdf;
  pdf.null = false;
  for (std::size_t i = 0; i < pdf.variation.size(); ++i) {
    pdf.probability[i] = pdf.variation[i] / pdf.normalizer;
  }
  for (std::size_t axis = 0; axis < 2; ++axis) {
    double lower = 0.0;
    for (std::size_t s : split.lower[axis]) lower += pdf.probability[s];
    lower = std::clamp(lower, 0.0, 1.0);
    pdf.half_mass[axis] = {lower, 1.0 - lower};
  }
  return pdf;
}

double spatial_entropy(const SpatialPdf& pdf) {
  if (pdf.null) return 0.0;
  auto plogp = [](double p) { return p > 0.0 ? p * std::log2(p) : 0.0; };
  double acc = 0.0;
  for (const auto& axis : pdf.half_mass) acc += 1.0 + plogp(axis[0]) + plogp(axis[1]);
  return std::clamp(acc / 2.0, 0.0, 1.0);
}

void FuzzyParams::validate() const {
  if (m < 1) throw ConfigError("fuzzy embedding dimension must be at least 1");
  if (!(r > 0.0)) throw ConfigError("fuzzy tolerance must be positive");
}

namespace {

// Mean pairwise fuzzy similarity of the `count` baseline-removed delay
// vectors of dimension `dim`.
double average_similarity(std::span<const double> x, std::size_t dim, std::size_t count,
                          double tolerance, std::vector<double>& scratch) {
  scratch.resize(count * dim);
  for (std::size_t j = 0; j < count; ++j) {
    double base = 0.0;
    for (std::size_t l = 0; l < dim; ++l) base += x[j + l];
    base /= static_cast<double>(dim);
    for (std::size_t l = 0; l < dim; ++l) scratch[j * dim + l] = std::abs(x[j + l] - base);
  }
  const double scale = tolerance > 0.0 ? std::numbers::ln2 / (tolerance * tolerance) : 0.0;
  double sum = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    const double* vj = &scratch[j * dim];
    for (std::size_t q = j + 1; q < count; ++q) {
      const double* vq = &scratch[q * dim];
      double d = 0.0;
      for (std::size_t l = 0; l < dim; ++l) d = std::max(d, std::abs(vj[l] - vq[l]));
      if (d == 0.0) {
        sum += 1.0;
      } else if (tolerance > 0.0) {
        sum += std::exp(-scale * d * d);
      }
    }
  }
  const auto c = static_cast<double>(count);
  return 2.0 * sum / (c * (c - 1.0));
}

}  // namespace

double fuzzy_entropy(std::span<const double> series, const FuzzyParams& params) {
  params.validate();
  const std::size_t w = series.size();
  if (w < params.m + 2) throw DataError("window too short for fuzzy entropy");
  double tolerance = params.r;
  if (params.relative) {
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) /
                        static_cast<double>(w);
    double var = 0.0;
    for (double v : series) var += (v - mean) * (v - mean);
    tolerance *= std::sqrt(var / static_cast<double>(w));
  }
  const std::size_t count = w - params.m;
  std::vector<double> scratch;
  constexpr double floor = std::numeric_limits<double>::min();
  const double s_m =
      std::max(average_similarity(series, params.m, count, tolerance, scratch), floor);
  const double s_m1 =
      std::max(average_similarity(series, params.m + 1, count, tolerance, scratch), floor);
  return std::log(s_m) - std::log(s_m1);
}

double temporal_entropy(const Decomposition& dec, const FuzzyParams& params) {
  double acc = 0.0;
  std::vector<double> row(static_cast<std::size_t>(dec.a.cols()));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(dec.effective_rank); ++i) {
    for (Eigen::Index t = 0; t < dec.a.cols(); ++t) row[static_cast<std::size_t>(t)] = dec.a(i, t);
    acc += dec.lambda(i) * fuzzy_entropy(row, params);
  }
  return acc;
}

}  // namespace mif
