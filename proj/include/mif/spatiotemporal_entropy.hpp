#pragma once

// Space-time separation of a sensor window and the two entropies built on
// it: spatial entropy (concentration of basis-function drift across the
// pack) and temporal entropy (fuzzy entropy of the temporal coefficients
// weighted by their singular values).

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "mif/pack_sim.hpp"

namespace mif {

/// Truncated SVD Y ~= phi * diag(lambda) * a of an N x W window.
struct Decomposition {
  Eigen::MatrixXd phi;     // N x n, orthonormal columns
  Eigen::VectorXd lambda;  // n, descending
  Eigen::MatrixXd a;       // n x W, orthonormal rows
  std::size_t order = 0;
  std::size_t effective_rank = 0;
  bool rank_deficient = false;

  Eigen::MatrixXd reconstruct() const;
};

/// Decomposes `window` (sensors x time).  With a reference, each mode is
/// sign-flipped so that its spatial basis has non-negative overlap with the
/// reference's.  Missing modes of a rank-deficient window are zero-filled.
Decomposition decompose_window(const Eigen::MatrixXd& window, std::size_t order,
                               const Decomposition* reference = nullptr);

/// Smallest order whose leading singular values carry at least
/// `energy_fraction` of the window's squared Frobenius norm.
std::size_t derive_model_order(const Eigen::MatrixXd& window, double energy_fraction = 0.999);

struct SpatialPdf {
  std::vector<double> variation;  // per sensor
  double normalizer = 0.0;        // G
  std::vector<double> probability;
  std::array<std::array<double, 2>, 2> half_mass{};  // [axis][lower, upper]
  bool null = true;
};

inline constexpr double kNullPdfTolerance = 1e-12;

/// Sensor ordering used to split the pack into lower/upper halves per axis.
/// The lower half takes ceil(N/2) sensors.
struct AxisSplit {
  std::array<std::vector<std::size_t>, 2> lower;  // sensor indices per axis
};

AxisSplit make_axis_split(std::span<const Point> sensors);

/// Per-sensor summed absolute drift of the spatial basis functions.
std::vector<double> basis_variation(const Decomposition& current, const Decomposition& initial);

SpatialPdf sbf_variation(const Decomposition& current, const Decomposition& initial,
                         const AxisSplit& split);

/// Mean over both axes of 1 + P1 log2 P1 + P2 log2 P2; zero for a null pdf.
double spatial_entropy(const SpatialPdf& pdf);

struct FuzzyParams {
  std::size_t m = 2;
  /// Similarity tolerance.  When `relative` is set the effective tolerance
  /// is `r` times the population standard deviation of the series.
  double r = 0.2;
  bool relative = true;

  void validate() const;
};

double fuzzy_entropy(std::span<const double> series, const FuzzyParams& params);

double temporal_entropy(const Decomposition& dec, const FuzzyParams& params);

}  // namespace mif
