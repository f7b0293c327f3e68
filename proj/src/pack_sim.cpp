#include "mif/pack_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Sparse>

#include "mif/error.hpp"

namespace mif {

namespace {

// Coefficients of the OCV-SOC fit, highest degree first.
constexpr std::array<double, 7> kOcvCoefficients = {-34.39, 127.38, -182.10, 127.24,
                                                    -45.57, 8.40,   3.19};

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConfigError(std::string(name) + " must be strictly positive");
  }
}

// Solves each parallel group at time t.  `dt` may be zero, in which case
// SOC is left untouched.
ElectricalState solve_network(const ElectricalState& state, double pack_current,
                              const PackLayout& layout, const CellSpec& spec,
                              const std::optional<FaultSpec>& fault, double t, double dt,
                              OcvDiagnostics* diag) {
  const double r_int = spec.internal_resistance;
  if (!(r_int > 0.0)) {
    throw SimulationError("singular parallel network: internal resistance is zero");
  }
  const std::size_t n = layout.cell_count();
  ElectricalState next = state;
  next.pack_current = pack_current;
  next.branch_current.assign(n, 0.0);
  next.drain_current.assign(n, 0.0);
  next.group_voltage.assign(layout.group_count(), 0.0);

  const bool short_active = fault && fault->active(t);
  const std::size_t short_cell = short_active ? fault->fault_cell - 1 : n;

  for (std::size_t g = 0; g < layout.group_count(); ++g) {
    const auto& cells = layout.series_groups[g];
    // Cell c: V = OCV_c - R (I_c + g_c V), with g_c the short conductance.
    double source_sum = 0.0;
    double conductance_sum = 0.0;
    for (std::size_t c : cells) {
      const double g_short = c == short_cell ? 1.0 / fault->r_short : 0.0;
      source_sum += ocv_of_soc(state.soc[c], diag) / r_int;
      conductance_sum += (1.0 + r_int * g_short) / r_int;
    }
    const double v = (source_sum - pack_current) / conductance_sum;
    next.group_voltage[g] = v;
    for (std::size_t c : cells) {
      const double g_short = c == short_cell ? 1.0 / fault->r_short : 0.0;
      next.branch_current[c] =
          (ocv_of_soc(state.soc[c], diag) - v * (1.0 + r_int * g_short)) / r_int;
      next.drain_current[c] = g_short * v;
    }
  }

  if (dt > 0.0) {
    const double coulombs = 3600.0 * spec.capacity_ah;
    for (std::size_t c = 0; c < n; ++c) {
      double soc = state.soc[c] - next.cell_current(c) * dt / coulombs;
      if (soc <= 0.0) {
        soc = 0.0;
        next.status = ElectricalStatus::depleted;
      }
      next.soc[c] = std::min(soc, 1.0);
    }
  }
  return next;
}

}  // namespace

void CellSpec::validate() const {
  require_positive(diameter, "diameter");
  require_positive(height, "height");
  require_positive(capacity_ah, "nominal_capacity");
  require_positive(nominal_voltage, "nominal_voltage");
  require_positive(internal_resistance, "internal_resistance");
  require_positive(heat_capacity_vol, "heat_capacity_vol");
  require_positive(kx, "kx");
  require_positive(ky, "ky");
}

std::size_t PackLayout::group_of(std::size_t cell) const {
  for (std::size_t g = 0; g < series_groups.size(); ++g) {
    const auto& members = series_groups[g];
    if (std::find(members.begin(), members.end(), cell) != members.end()) return g;
  }
  throw DataError("cell " + std::to_string(cell) + " belongs to no series group");
}

PackLayout build_layout(std::size_t rows, std::size_t cols, const CellSpec& spec,
                        double gap, std::size_t grid_res,
                        bool require_benchmark_topology) {
  spec.validate();
  if (rows == 0 || cols == 0) throw ConfigError("layout needs at least one row and column");
  if (require_benchmark_topology &&
      (rows * cols != kBenchmarkCells || cols != kBenchmarkGroups)) {
    throw ConfigError("benchmark topology requires 24 cells in 6 series groups");
  }
  if (grid_res < 1) throw ConfigError("grid_res must be at least 1");
  if (gap < 0.0) throw ConfigError("gap must be non-negative");

  PackLayout layout;
  layout.rows = rows;
  layout.cols = cols;
  layout.gap = gap;
  layout.pitch = spec.diameter + gap;
  layout.width = static_cast<double>(cols) * layout.pitch;
  layout.depth = static_cast<double>(rows) * layout.pitch;
  layout.cell_height = spec.height;

  layout.grid.nx = cols * grid_res;
  layout.grid.ny = rows * grid_res;
  layout.grid.dx = layout.pitch / static_cast<double>(grid_res);
  layout.grid.dy = layout.grid.dx;

  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<std::size_t> group;
    for (std::size_t r = 0; r < rows; ++r) {
      group.push_back(layout.cell_centers.size());
      layout.cell_centers.push_back({(static_cast<double>(c) + 0.5) * layout.pitch,
                                     (static_cast<double>(r) + 0.5) * layout.pitch});
    }
    layout.series_groups.push_back(std::move(group));
  }

  const double radius = 0.5 * spec.diameter;
  layout.node_owner.assign(layout.grid.node_count(), -1);
  layout.footprints.assign(layout.cell_count(), {});
  for (std::size_t cell = 0; cell < layout.cell_count(); ++cell) {
    const Point centre = layout.cell_centers[cell];
    for (std::size_t iy = 0; iy < layout.grid.ny; ++iy) {
      const double y = (static_cast<double>(iy) + 0.5) * layout.grid.dy;
      for (std::size_t ix = 0; ix < layout.grid.nx; ++ix) {
        const double x = (static_cast<double>(ix) + 0.5) * layout.grid.dx;
        if (std::hypot(x - centre.x, y - centre.y) > radius) continue;
        const std::size_t node = layout.grid.index(ix, iy);
        if (layout.node_owner[node] != -1) continue;
        layout.node_owner[node] = static_cast<int>(cell);
        layout.footprints[cell].push_back(node);
      }
    }
    if (layout.footprints[cell].empty()) {
      throw ConfigError("grid too coarse: cell #" + std::to_string(cell + 1) +
                        " covers no grid node");
    }
  }
  return layout;
}

double ocv_of_soc(double soc, OcvDiagnostics* diag) {
  if (!(soc >= 0.0 && soc <= 1.0)) {
    if (diag) ++diag->clamped;
    soc = std::isnan(soc) ? 0.0 : std::clamp(soc, 0.0, 1.0);
  }
  double acc = 0.0;
  for (double c : kOcvCoefficients) acc = acc * soc + c;
  return acc;
}

void FaultSpec::validate(std::size_t cell_count) const {
  require_positive(r_short, "r_short");
  require_positive(r_equiv, "r_equiv");
  if (!(onset >= 0.0)) throw ConfigError("onset must be non-negative");
  if (fault_cell < 1 || fault_cell > cell_count) {
    throw ConfigError("fault_cell must lie in [1, " + std::to_string(cell_count) + "]");
  }
}

double isc_power_density(double voltage, const FaultSpec& fault) {
  const double r = fault.r_equiv;
  return 3.0 * voltage * voltage / (4.0 * std::numbers::pi * r * r * r * fault.r_short);
}

ElectricalState initial_electrical_state(const PackLayout& layout, double soc) {
  ElectricalState state;
  state.soc.assign(layout.cell_count(), std::clamp(soc, 0.0, 1.0));
  state.branch_current.assign(layout.cell_count(), 0.0);
  state.drain_current.assign(layout.cell_count(), 0.0);
  state.group_voltage.assign(layout.group_count(), 0.0);
  return state;
}

ElectricalState step_electrical(const ElectricalState& state, double pack_current,
                                const PackLayout& layout, const CellSpec& spec,
                                const std::optional<FaultSpec>& fault, double t,
                                double dt, OcvDiagnostics* diag) {
  if (!(dt > 0.0)) throw SimulationError("electrical step requires dt > 0");
  return solve_network(state, pack_current, layout, spec, fault, t, dt, diag);
}

double CellHeat::total() const {
  return std::accumulate(joule.begin(), joule.end(), 0.0) +
         std::accumulate(isc.begin(), isc.end(), 0.0);
}

CellHeat heat_generation(const ElectricalState& state, const PackLayout& layout,
                         const CellSpec& spec, const std::optional<FaultSpec>& fault,
                         double t) {
  CellHeat heat;
  const std::size_t n = layout.cell_count();
  heat.joule.resize(n);
  heat.isc.assign(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    const double i = state.cell_current(c);
    heat.joule[c] = i * i * spec.internal_resistance;
  }
  if (fault && fault->active(t)) {
    const std::size_t c = fault->fault_cell - 1;
    const double v = state.group_voltage[layout.group_of(c)];
    heat.isc[c] = v * v / fault->r_short;
  }
  return heat;
}

std::vector<double> source_density(const CellHeat& heat, const PackLayout& layout) {
  std::vector<double> density(layout.grid.node_count(), 0.0);
  for (std::size_t c = 0; c < layout.cell_count(); ++c) {
    const auto& nodes = layout.footprints[c];
    const double volume = static_cast<double>(nodes.size()) * layout.node_volume();
    const double q = (heat.joule[c] + heat.isc[c]) / volume;
    for (std::size_t node : nodes) density[node] = q;
  }
  return density;
}

double ThermalField::mean() const {
  return std::accumulate(temperatures.begin(), temperatures.end(), 0.0) /
         static_cast<double>(temperatures.size());
}

double stability_limit(const PackLayout& layout, const CellSpec& spec) {
  const double h2 = std::min(layout.grid.dx * layout.grid.dx, layout.grid.dy * layout.grid.dy);
  return h2 / (2.0 * (spec.kx + spec.ky));
}

void SimConfig::validate(const PackLayout& layout, const CellSpec& spec) const {
  require_positive(dt, "dt");
  require_positive(output_interval, "output_interval");
  require_positive(ambient, "ambient");
  if (!(duration >= dt)) throw ConfigError("duration must be at least dt");
  if (h_forced < 0.0 || h_natural < 0.0) {
    throw ConfigError("convective coefficients must be non-negative");
  }
  if (temp_noise_std < 0.0 || voltage_noise_std < 0.0 || current_noise_std < 0.0) {
    throw ConfigError("noise standard deviations must be non-negative");
  }
  if (!(initial_soc > 0.0 && initial_soc <= 1.0)) {
    throw ConfigError("initial_soc must lie in (0, 1]");
  }
  if (discharge_rate < 0.0) throw ConfigError("discharge_rate must be non-negative");
  const double limit = stability_limit(layout, spec);
  if (dt > limit) {
    std::ostringstream msg;
    msg << "dt = " << dt << " s violates the explicit stability bound " << limit << " s";
    throw ConfigError(msg.str());
  }
  const double steps = output_interval / dt;
  if (std::abs(steps - std::round(steps)) > 1e-9) {
    throw ConfigError("output_interval must be an integer multiple of dt");
  }
  if (fault) fault->validate(layout.cell_count());
}

std::size_t SimConfig::frame_count() const {
  return static_cast<std::size_t>(std::floor(duration / output_interval + 1e-9));
}

namespace {

// Per-node rate coefficients of the finite-volume operator: interior faces
// couple to neighbours, boundary faces to ambient through the film.
struct ThermalCoefficients {
  double cx = 0.0;
  double cy = 0.0;
  double left = 0.0;
  double right = 0.0;
  double bottom = 0.0;
  double top = 0.0;
};

ThermalCoefficients thermal_coefficients(const SimConfig& cfg, const PackLayout& layout,
                                         const CellSpec& spec) {
  const GridSpec& g = layout.grid;
  const double cvol = spec.heat_capacity_vol;
  // Film coefficient in series with the half-cell conduction path.
  auto edge = [&](double h, double spacing, double k) {
    if (h <= 0.0) return 0.0;
    const double lambda = k * cvol;
    const double u = 1.0 / (1.0 / h + 0.5 * spacing / lambda);
    return u / (cvol * spacing);
  };
  ThermalCoefficients c;
  c.cx = spec.kx / (g.dx * g.dx);
  c.cy = spec.ky / (g.dy * g.dy);
  c.left = edge(cfg.h_forced, g.dx, spec.kx);
  c.right = edge(cfg.h_natural, g.dx, spec.kx);
  c.bottom = edge(cfg.h_natural, g.dy, spec.ky);
  c.top = c.bottom;
  return c;
}

}  // namespace

ThermalField step_thermal(const ThermalField& field, std::span<const double> sources,
                          const SimConfig& cfg, const PackLayout& layout,
                          const CellSpec& spec) {
  const GridSpec& g = layout.grid;
  if (field.temperatures.size() != g.node_count() || sources.size() != g.node_count()) {
    throw SimulationError("thermal field and source sizes do not match the grid");
  }
  const ThermalCoefficients c = thermal_coefficients(cfg, layout, spec);
  const double cvol = spec.heat_capacity_vol;
  const double amb = cfg.ambient;

  ThermalField next;
  next.time = field.time + cfg.dt;
  next.temperatures.resize(g.node_count());
  const auto& t = field.temperatures;
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      const std::size_t k = g.index(ix, iy);
      const double tk = t[k];
      double rate = sources[k] / cvol;
      rate += ix > 0 ? c.cx * (t[k - 1] - tk) : c.left * (amb - tk);
      rate += ix + 1 < g.nx ? c.cx * (t[k + 1] - tk) : c.right * (amb - tk);
      rate += iy > 0 ? c.cy * (t[k - g.nx] - tk) : c.bottom * (amb - tk);
      rate += iy + 1 < g.ny ? c.cy * (t[k + g.nx] - tk) : c.top * (amb - tk);
      const double value = tk + cfg.dt * rate;
      if (!std::isfinite(value)) {
        throw SimulationError("non-finite temperature at node (" + std::to_string(ix) + ", " +
                              std::to_string(iy) + ")");
      }
      next.temperatures[k] = value;
    }
  }
  return next;
}

ThermalField steady_state_field(std::span<const double> sources, const SimConfig& cfg,
                                const PackLayout& layout, const CellSpec& spec) {
  const GridSpec& g = layout.grid;
  if (sources.size() != g.node_count()) {
    throw SimulationError("source size does not match the grid");
  }
  if (cfg.h_forced <= 0.0 && cfg.h_natural <= 0.0) {
    throw SimulationError("insulated pack has no steady state");
  }
  const ThermalCoefficients c = thermal_coefficients(cfg, layout, spec);
  const auto n = static_cast<Eigen::Index>(g.node_count());
  // Solve for the rise above ambient: -L u = s / C_vol.
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(g.node_count() * 5);
  Eigen::VectorXd rhs(n);
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      const auto k = static_cast<Eigen::Index>(g.index(ix, iy));
      double diag = 0.0;
      auto couple = [&](bool interior, std::size_t other, double coeff, double edge) {
        if (interior) {
          diag += coeff;
          entries.emplace_back(k, static_cast<Eigen::Index>(other), -coeff);
        } else {
          diag += edge;
        }
      };
      const std::size_t kk = g.index(ix, iy);
      couple(ix > 0, kk - 1, c.cx, c.left);
      couple(ix + 1 < g.nx, kk + 1, c.cx, c.right);
      couple(iy > 0, kk - g.nx, c.cy, c.bottom);
      couple(iy + 1 < g.ny, kk + g.nx, c.cy, c.top);
      entries.emplace_back(k, k, diag);
      rhs(k) = sources[kk] / spec.heat_capacity_vol;
    }
  }
  Eigen::SparseMatrix<double> op(n, n);
  op.setFromTriplets(entries.begin(), entries.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(op);
  if (solver.info() != Eigen::Success) throw SimulationError("steady-state factorization failed");
  const Eigen::VectorXd rise = solver.solve(rhs);
  ThermalField field;
  field.temperatures.resize(g.node_count());
  for (Eigen::Index k = 0; k < n; ++k) {
    const double v = cfg.ambient + rise(k);
    if (!std::isfinite(v)) throw SimulationError("non-finite steady-state temperature");
    field.temperatures[static_cast<std::size_t>(k)] = v;
  }
  return field;
}

std::vector<double> cell_mean_temperatures(const ThermalField& field,
                                           const PackLayout& layout) {
  std::vector<double> means(layout.cell_count());
  for (std::size_t c = 0; c < layout.cell_count(); ++c) {
    double acc = 0.0;
    for (std::size_t node : layout.footprints[c]) acc += field.temperatures[node];
    means[c] = acc / static_cast<double>(layout.footprints[c].size());
  }
  return means;
}

double thermal_energy(const ThermalField& field, const PackLayout& layout,
                      const CellSpec& spec) {
  double acc = 0.0;
  for (double v : field.temperatures) acc += v;
  return acc * spec.heat_capacity_vol * layout.node_volume();
}

PackSimulator::PackSimulator(SimConfig cfg, PackLayout layout, CellSpec spec)
    : cfg_(std::move(cfg)), layout_(std::move(layout)), spec_(spec), rng_(cfg_.rng_seed) {
  spec_.validate();
  cfg_.validate(layout_, spec_);
  electrical_ = solve_network(initial_electrical_state(layout_, cfg_.initial_soc),
                              cfg_.discharge_rate * spec_.capacity_ah, layout_, spec_,
                              cfg_.fault, 0.0, 0.0, &diag_);
  if (cfg_.steady_initial) {
    // Fault-free heat of the initial operating point.
    const CellHeat heat = heat_generation(electrical_, layout_, spec_, std::nullopt, 0.0);
    field_ = steady_state_field(source_density(heat, layout_), cfg_, layout_, spec_);
  } else {
    field_.temperatures.assign(layout_.grid.node_count(), cfg_.ambient);
  }
  field_.time = 0.0;
}

bool PackSimulator::step() {
  const double t = field_.time;
  const double current = cfg_.discharge_rate * spec_.capacity_ah;
  ElectricalState next = step_electrical(electrical_, current, layout_, spec_, cfg_.fault,
                                         t, cfg_.dt, &diag_);
  const CellHeat heat = heat_generation(next, layout_, spec_, cfg_.fault, t);
  injected_ += heat.total() * cfg_.dt;
  const std::vector<double> sources = source_density(heat, layout_);
  field_ = step_thermal(field_, sources, cfg_, layout_, spec_);
  electrical_ = std::move(next);
  return electrical_.status == ElectricalStatus::ok;
}

TelemetryFrame PackSimulator::sample() {
  TelemetryFrame frame;
  frame.t = field_.time;
  frame.temperatures = cell_mean_temperatures(field_, layout_);
  frame.voltages = electrical_.group_voltage;
  frame.current = electrical_.pack_current;
  frame.abnormal = cfg_.fault && cfg_.fault->active(frame.t);

  std::normal_distribution<double> unit(0.0, 1.0);
  for (double& v : frame.temperatures) v += cfg_.temp_noise_std * unit(rng_);
  for (double& v : frame.voltages) v += cfg_.voltage_noise_std * unit(rng_);
  frame.current += cfg_.current_noise_std * unit(rng_);
  return frame;
}

SimResult simulate(const SimConfig& cfg, const PackLayout& layout, const CellSpec& spec) {
  PackSimulator sim(cfg, layout, spec);
  SimResult result;
  const std::size_t frames = cfg.frame_count();
  const auto substeps = static_cast<std::size_t>(std::llround(cfg.output_interval / cfg.dt));
  result.frames.reserve(frames);
  if (frames == 0) return result;
  result.frames.push_back(sim.sample());
  for (std::size_t k = 1; k < frames; ++k) {
    bool alive = true;
    for (std::size_t s = 0; s < substeps && alive; ++s) alive = sim.step();
    // Pin the clock to the sampling grid so labels do not drift with rounding.
    TelemetryFrame frame = sim.sample();
    frame.t = static_cast<double>(k) * cfg.output_interval;
    frame.abnormal = cfg.fault && cfg.fault->active(frame.t);
    result.frames.push_back(std::move(frame));
    if (!alive) {
      result.status = SimStatus::depleted;
      break;
    }
  }
  result.injected_energy = sim.injected_energy();
  return result;
}

}  // namespace mif
