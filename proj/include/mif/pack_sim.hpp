#pragma once

// Coupled electro-thermal model of a cylindrical-cell pack.
//
// The thermal side is a 2-D explicit finite-volume solver on a rectangular
// grid covering the pack footprint; every cell owns the grid nodes whose
// centres fall inside its circular cross-section.  The electrical side is a
// series string of parallel groups, each solved as a linear network of
// OCV sources behind a constant internal resistance.  An internal short
// circuit adds a resistive drain inside one cell and deposits its power on
// that cell's footprint.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mif {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct CellSpec {
  double diameter = 0.021;             // m
  double height = 0.070;               // m
  double capacity_ah = 4.8;            // Ah
  double nominal_voltage = 3.7;        // V
  double internal_resistance = 0.03;   // ohm
  double heat_capacity_vol = 2.0e6;    // J/(m^3 K)
  // Lateral (radial) diffusivity, ~0.5 W/(m K) at heat_capacity_vol.
  double kx = 2.5e-7;                  // m^2/s
  double ky = 2.5e-7;                  // m^2/s

  void validate() const;
};

struct GridSpec {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double dx = 0.0;
  double dy = 0.0;

  std::size_t node_count() const { return nx * ny; }
  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx + ix; }
};

/// Geometry and topology of the pack.  Cells are indexed 0..N-1 in
/// column-major order (serial number = index + 1); column c forms series
/// group c, so the left column (airflow side) holds cells #1..#rows.
struct PackLayout {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double gap = 0.0;
  double pitch = 0.0;
  double width = 0.0;   // x_b
  double depth = 0.0;   // y_b
  double cell_height = 0.0;
  std::vector<Point> cell_centers;
  std::vector<std::vector<std::size_t>> series_groups;
  GridSpec grid;
  std::vector<std::vector<std::size_t>> footprints;
  std::vector<int> node_owner;  // -1 for nodes in the inter-cell gaps

  std::size_t cell_count() const { return cell_centers.size(); }
  std::size_t group_count() const { return series_groups.size(); }
  std::size_t group_of(std::size_t cell) const;
  double node_volume() const { return grid.dx * grid.dy * cell_height; }
};

inline constexpr std::size_t kBenchmarkCells = 24;
inline constexpr std::size_t kBenchmarkGroups = 6;

/// Builds a rows x cols lattice with `grid_res` grid nodes per cell pitch on
/// each axis.  With `require_benchmark_topology` the layout must hold the
/// 24-cell, 6-group benchmark pack.
PackLayout build_layout(std::size_t rows, std::size_t cols, const CellSpec& spec,
                        double gap, std::size_t grid_res,
                        bool require_benchmark_topology = true);

/// Counts how often an out-of-range SOC was clamped.
struct OcvDiagnostics {
  std::size_t clamped = 0;
};

/// Identified OCV-SOC polynomial of the cell (degree 6, Horner form).
double ocv_of_soc(double soc, OcvDiagnostics* diag = nullptr);

struct FaultSpec {
  std::size_t fault_cell = 1;  // serial number, 1-based
  double r_short = 10.0;       // ohm
  double r_equiv = 0.005;      // m, radius of the equivalent ISC sphere
  double onset = 1000.0;       // s

  void validate(std::size_t cell_count) const;
  bool active(double t) const { return t >= onset; }
};

/// Volumetric power density of the short inside its equivalent sphere, W/m^3.
double isc_power_density(double voltage, const FaultSpec& fault);

enum class ElectricalStatus { ok, depleted };

struct ElectricalState {
  std::vector<double> soc;             // per cell
  std::vector<double> branch_current;  // per cell, external branch current, A
  std::vector<double> drain_current;   // per cell, internal short current, A
  std::vector<double> group_voltage;   // per group, V
  double pack_current = 0.0;           // A, positive on discharge
  ElectricalStatus status = ElectricalStatus::ok;

  /// Total current through the cell's internal resistance.
  double cell_current(std::size_t cell) const {
    return branch_current[cell] + drain_current[cell];
  }
};

ElectricalState initial_electrical_state(const PackLayout& layout, double soc);

/// Solves every parallel group for the given pack current at time `t` and
/// advances SOC by coulomb counting over `dt`.
ElectricalState step_electrical(const ElectricalState& state, double pack_current,
                                const PackLayout& layout, const CellSpec& spec,
                                const std::optional<FaultSpec>& fault, double t,
                                double dt, OcvDiagnostics* diag = nullptr);

struct CellHeat {
  std::vector<double> joule;  // W per cell, I^2 R_int
  std::vector<double> isc;    // W per cell, V^2 / R_short on the faulted cell

  double total() const;
};

CellHeat heat_generation(const ElectricalState& state, const PackLayout& layout,
                         const CellSpec& spec, const std::optional<FaultSpec>& fault,
                         double t);

/// Spreads per-cell power uniformly over each footprint, returning W/m^3
/// per grid node.
std::vector<double> source_density(const CellHeat& heat, const PackLayout& layout);

struct ThermalField {
  std::vector<double> temperatures;  // K, nx*ny row-major (iy * nx + ix)
  double time = 0.0;

  double mean() const;
};

struct SimConfig {
  double dt = 0.25;                 // s, integration step
  double duration = 2000.0;         // s
  double output_interval = 1.0;     // s per telemetry frame
  double ambient = 293.15;          // K
  double airflow_speed = 1.0;       // m/s, left edge
  double h_forced = 25.0;           // W/(m^2 K), left edge
  double h_natural = 5.0;           // W/(m^2 K), other edges
  double discharge_rate = 2.0;      // C-rate; pack current = rate * capacity
  double initial_soc = 0.9;
  double temp_noise_std = 0.05;     // K
  double voltage_noise_std = 0.001; // V
  double current_noise_std = 0.01;  // A
  std::uint64_t rng_seed = 1;
  std::size_t grid_res = 4;
  /// Start from the steady field of the fault-free duty cycle instead of a
  /// uniform ambient field.
  bool steady_initial = true;
  std::optional<FaultSpec> fault;

  /// Rejects configs whose dt violates the explicit-scheme stability bound.
  void validate(const PackLayout& layout, const CellSpec& spec) const;
  std::size_t frame_count() const;
};

double stability_limit(const PackLayout& layout, const CellSpec& spec);

/// One explicit finite-volume step.  Left edge uses `h_forced`, the other
/// three edges `h_natural`.  Throws SimulationError on a non-finite node.
ThermalField step_thermal(const ThermalField& field, std::span<const double> sources,
                          const SimConfig& cfg, const PackLayout& layout,
                          const CellSpec& spec);

/// Steady temperature field for constant per-node sources under the
/// configured convective edges.  Throws SimulationError when every edge is
/// insulated (no steady state exists).
ThermalField steady_state_field(std::span<const double> sources, const SimConfig& cfg,
                                const PackLayout& layout, const CellSpec& spec);

/// Per-cell footprint-mean temperatures.
std::vector<double> cell_mean_temperatures(const ThermalField& field,
                                           const PackLayout& layout);

/// Total thermal energy of the field relative to 0 K, J.
double thermal_energy(const ThermalField& field, const PackLayout& layout,
                      const CellSpec& spec);

struct TelemetryFrame {
  double t = 0.0;
  std::vector<double> temperatures;  // N cells, K
  std::vector<double> voltages;      // P groups, V
  double current = 0.0;              // A
  bool abnormal = false;
};

enum class SimStatus { completed, depleted };

struct SimResult {
  std::vector<TelemetryFrame> frames;
  SimStatus status = SimStatus::completed;
  double injected_energy = 0.0;  // J, integrated heat sources
};

/// Stepwise simulator; `simulate` drives it to completion.
class PackSimulator {
public:
  PackSimulator(SimConfig cfg, PackLayout layout, CellSpec spec);

  /// Advances one integration step.  Returns false once the pack is depleted.
  bool step();
  TelemetryFrame sample();

  const ThermalField& field() const { return field_; }
  const ElectricalState& electrical() const { return electrical_; }
  const PackLayout& layout() const { return layout_; }
  double time() const { return field_.time; }
  double injected_energy() const { return injected_; }
  const OcvDiagnostics& diagnostics() const { return diag_; }

private:
  SimConfig cfg_;
  PackLayout layout_;
  CellSpec spec_;
  ThermalField field_;
  ElectricalState electrical_;
  OcvDiagnostics diag_;
  std::mt19937_64 rng_;
  double injected_ = 0.0;
};

SimResult simulate(const SimConfig& cfg, const PackLayout& layout, const CellSpec& spec);

}  // namespace mif
