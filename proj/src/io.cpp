#include "mif/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "mif/error.hpp"

namespace mif {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_unsigned(std::string_view s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string two_digit(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

}  // namespace

void write_telemetry_csv(std::ostream& out, std::span<const TelemetryFrame> frames) {
  if (frames.empty()) throw DataError("no frames to write");
  const std::size_t n = frames.front().temperatures.size();
  const std::size_t p = frames.front().voltages.size();
  std::string line = "t";
  for (std::size_t i = 1; i <= n; ++i) line += ",T" + two_digit(i);
  for (std::size_t i = 1; i <= p; ++i) line += ",V" + std::to_string(i);
  line += ",I,label\n";
  out << line;
  for (const auto& f : frames) {
    if (f.temperatures.size() != n || f.voltages.size() != p) {
      throw DataError("frames disagree on sensor counts");
    }
    line = fmt_double(f.t);
    for (double v : f.temperatures) line += "," + fmt_double(v);
    for (double v : f.voltages) line += "," + fmt_double(v);
    line += "," + fmt_double(f.current);
    line += f.abnormal ? ",1\n" : ",0\n";
    out << line;
  }
}

std::vector<TelemetryFrame> read_telemetry_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  std::size_t n = 0;
  std::size_t p = 0;
  if (header.size() < 4 || header.front() != "t" || header.back() != "label" ||
      header[header.size() - 2] != "I") {
    throw DataError("line 1: header must be t,T..,V..,I,label");
  }
  for (std::size_t c = 1; c + 2 < header.size(); ++c) {
    const std::string_view h = header[c];
    if (!h.empty() && h[0] == 'T' && p == 0 && h == "T" + two_digit(n + 1)) {
      ++n;
    } else if (!h.empty() && h[0] == 'V' && h == "V" + std::to_string(p + 1)) {
      ++p;
    } else {
      throw DataError("line 1: unexpected column '" + std::string(h) + "'");
    }
  }
  if (n == 0 || p == 0) throw DataError("line 1: header lacks temperature or voltage columns");

  std::vector<TelemetryFrame> frames;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (cells.size() != header.size()) {
      throw DataError(where + "expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(cells.size()));
    }
    std::vector<double> values(cells.size() - 1);
    for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
      const auto v = to_double(cells[c]);
      if (!v || !std::isfinite(*v)) {
        throw DataError(where + "bad number in column '" + std::string(header[c]) + "'");
      }
      values[c] = *v;
    }
    TelemetryFrame f;
    f.t = values[0];
    f.temperatures.assign(values.begin() + 1, values.begin() + 1 + static_cast<long>(n));
    f.voltages.assign(values.begin() + 1 + static_cast<long>(n),
                      values.begin() + 1 + static_cast<long>(n + p));
    f.current = values[1 + n + p];
    if (cells.back() == "1") {
      f.abnormal = true;
    } else if (cells.back() != "0") {
      throw DataError(where + "label must be 0 or 1");
    }
    frames.push_back(std::move(f));
  }
  if (frames.empty()) throw DataError("dataset has no rows");
  return frames;
}

void save_telemetry(const std::filesystem::path& path, std::span<const TelemetryFrame> frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_telemetry_csv(out, frames);
}

std::vector<TelemetryFrame> load_telemetry(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return read_telemetry_csv(in);
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    for (const auto& [k, v] : kv) {
      if (k == key) throw ConfigError("duplicate key '" + key + "'");
    }
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

namespace {

using Setter = std::function<void(const std::string&)>;

Setter real(double& field, const std::string& key) {
  return [&field, key](const std::string& v) {
    const auto d = to_double(v);
    if (!d || !std::isfinite(*d)) throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    field = *d;
  };
}

template <class T>
Setter integer(T& field, const std::string& key) {
  return [&field, key](const std::string& v) {
    const auto u = to_unsigned(v);
    if (!u) throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
    field = static_cast<T>(*u);
  };
}

Setter boolean(bool& field, const std::string& key) {
  return [&field, key](const std::string& v) {
    if (v == "true" || v == "1") {
      field = true;
    } else if (v == "false" || v == "0") {
      field = false;
    } else {
      throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
    }
  };
}

void apply_setters(const KeyValues& kv, const std::map<std::string, Setter>& setters) {
  for (const auto& [k, v] : kv) {
    const auto it = setters.find(k);
    if (it == setters.end()) throw ConfigError("unknown key '" + k + "'");
    it->second(v);
  }
}

}  // namespace

PackLayout ScenarioConfig::layout() const {
  return build_layout(rows, cols, cell, gap, sim.grid_res);
}

ScenarioConfig parse_scenario(std::istream& in) {
  const KeyValues kv = parse_key_values(in);
  ScenarioConfig sc;
  FaultSpec fault;
  bool has_fault = false;
  std::optional<double> target_add, target_adr, target_far;
  std::size_t target_cell = 0;
  bool has_target_cell = false;

  std::map<std::string, Setter> s;
  s["scenario_id"] = integer(sc.id, "scenario_id");
  s["name"] = [&](const std::string& v) { sc.name = v; };
  s["rows"] = integer(sc.rows, "rows");
  s["cols"] = integer(sc.cols, "cols");
  s["gap"] = real(sc.gap, "gap");
  s["diameter"] = real(sc.cell.diameter, "diameter");
  s["height"] = real(sc.cell.height, "height");
  s["capacity_ah"] = real(sc.cell.capacity_ah, "capacity_ah");
  s["nominal_voltage"] = real(sc.cell.nominal_voltage, "nominal_voltage");
  s["internal_resistance"] = real(sc.cell.internal_resistance, "internal_resistance");
  s["heat_capacity_vol"] = real(sc.cell.heat_capacity_vol, "heat_capacity_vol");
  s["kx"] = real(sc.cell.kx, "kx");
  s["ky"] = real(sc.cell.ky, "ky");
  s["dt"] = real(sc.sim.dt, "dt");
  s["duration"] = real(sc.sim.duration, "duration");
  s["output_interval"] = real(sc.sim.output_interval, "output_interval");
  s["ambient"] = real(sc.sim.ambient, "ambient");
  s["airflow_speed"] = real(sc.sim.airflow_speed, "airflow_speed");
  s["h_forced"] = real(sc.sim.h_forced, "h_forced");
  s["h_natural"] = real(sc.sim.h_natural, "h_natural");
  s["discharge_rate"] = real(sc.sim.discharge_rate, "discharge_rate");
  s["initial_soc"] = real(sc.sim.initial_soc, "initial_soc");
  s["temp_noise_std"] = real(sc.sim.temp_noise_std, "temp_noise_std");
  s["voltage_noise_std"] = real(sc.sim.voltage_noise_std, "voltage_noise_std");
  s["current_noise_std"] = real(sc.sim.current_noise_std, "current_noise_std");
  s["rng_seed"] = integer(sc.sim.rng_seed, "rng_seed");
  s["grid_res"] = integer(sc.sim.grid_res, "grid_res");
  s["steady_initial"] = boolean(sc.sim.steady_initial, "steady_initial");
  auto fault_key = [&](Setter inner) {
    return [&has_fault, inner](const std::string& v) {
      has_fault = true;
      inner(v);
    };
  };
  s["fault_cell"] = fault_key(integer(fault.fault_cell, "fault_cell"));
  s["r_short"] = fault_key(real(fault.r_short, "r_short"));
  s["r_equiv"] = fault_key(real(fault.r_equiv, "r_equiv"));
  s["onset"] = fault_key(real(fault.onset, "onset"));
  s["target_add"] = [&](const std::string& v) { real(target_add.emplace(), "target_add")(v); };
  s["target_adr"] = [&](const std::string& v) { real(target_adr.emplace(), "target_adr")(v); };
  s["target_far"] = [&](const std::string& v) { real(target_far.emplace(), "target_far")(v); };
  s["target_cell"] = [&](const std::string& v) {
    integer(target_cell, "target_cell")(v);
    has_target_cell = true;
  };
  apply_setters(kv, s);

  if (has_fault) sc.sim.fault = fault;
  sc.targets.add = target_add;
  sc.targets.adr = target_adr;
  sc.targets.far = target_far;
  if (has_target_cell) sc.targets.cell = target_cell;
  const PackLayout layout = sc.layout();
  sc.sim.validate(layout, sc.cell);
  return sc;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return parse_scenario(in);
}

void write_params(std::ostream& out, const DetectorParams& p) {
  out << "window = " << p.window << "\n"
      << "order = " << p.order << "\n"
      << "alpha1 = " << fmt_double(p.weights[0]) << "\n"
      << "alpha2 = " << fmt_double(p.weights[1]) << "\n"
      << "alpha3 = " << fmt_double(p.weights[2]) << "\n"
      << "max_hd = " << fmt_double(p.normalizers[0]) << "\n"
      << "max_hs = " << fmt_double(p.normalizers[1]) << "\n"
      << "max_ht = " << fmt_double(p.normalizers[2]) << "\n"
      << "threshold = " << fmt_double(p.threshold) << "\n"
      << "beta = " << fmt_double(p.beta) << "\n";
}

DetectorParams read_params(std::istream& in) {
  const KeyValues kv = parse_key_values(in);
  DetectorParams p;
  std::map<std::string, Setter> s;
  s["window"] = integer(p.window, "window");
  s["order"] = integer(p.order, "order");
  s["alpha1"] = real(p.weights[0], "alpha1");
  s["alpha2"] = real(p.weights[1], "alpha2");
  s["alpha3"] = real(p.weights[2], "alpha3");
  s["max_hd"] = real(p.normalizers[0], "max_hd");
  s["max_hs"] = real(p.normalizers[1], "max_hs");
  s["max_ht"] = real(p.normalizers[2], "max_ht");
  s["threshold"] = real(p.threshold, "threshold");
  s["beta"] = real(p.beta, "beta");
  apply_setters(kv, s);
  p.validate();
  return p;
}

void save_params(const std::filesystem::path& path, const DetectorParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_params(out, params);
}

DetectorParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return read_params(in);
}

void write_detection_trace(std::ostream& out, const EntropyStreams& streams,
                           const DetectionOutcome& outcome, const DetectorParams& params) {
  out << "t,h_d,h_s,h_t,H,H_r,alarm\n";
  for (std::size_t k = 0; k < outcome.times.size(); ++k) {
    std::string line = fmt_double(outcome.times[k]);
    if (const auto& s = streams.samples[k]) {
      line += "," + fmt_double(s->h_d) + "," + fmt_double(s->h_s) + "," + fmt_double(s->h_t) +
              "," + fmt_double(*outcome.statistic[k]);
    } else {
      line += ",,,,";
    }
    line += "," + fmt_double(params.threshold) + (outcome.alarm[k] ? ",1\n" : ",0\n");
    out << line;
  }
}

void write_generation_log(std::ostream& out, std::span<const GenerationLog> log) {
  out << "generation,best,mean,window,alpha1,alpha2,alpha3\n";
  for (const auto& g : log) {
    out << g.generation << "," << fmt_double(g.best) << "," << fmt_double(g.mean) << ","
        << g.best_candidate.window << "," << fmt_double(g.best_candidate.weights[0]) << ","
        << fmt_double(g.best_candidate.weights[1]) << ","
        << fmt_double(g.best_candidate.weights[2]) << "\n";
  }
}

DetectorParams refit_on_run(const EntropyStreams& streams, std::size_t training_frames,
                            const DetectorParams& params) {
  const EntropyStreams* one[] = {&streams};
  return fit_detector(one, training_frames, params);
}

BenchmarkRow run_scenario(const ScenarioConfig& scenario, const DetectorParams& params,
                          const MetricsConfig& metrics) {
  BenchmarkRow row;
  row.id = scenario.id;
  row.name = scenario.name;
  row.targets = scenario.targets;
  if (!scenario.sim.fault) throw ConfigError("benchmark scenario has no fault");
  row.true_cell = scenario.sim.fault->fault_cell;

  const PackLayout layout = scenario.layout();
  const SimResult sim = simulate(scenario.sim, layout, scenario.cell);
  PipelineConfig pc;
  pc.window = params.window;
  pc.order = params.order;
  const EntropyStreams streams = compute_entropy_streams(sim.frames, pc, layout.cell_centers);
  const DetectorParams fitted = refit_on_run(streams, metrics.training_frames, params);
  const auto h = fuse(streams, fitted);
  const DetectionOutcome outcome = detect(h, frame_times(sim.frames), fitted.threshold);
  const std::vector<bool> labels = frame_labels(sim.frames);
  const EvaluationResult r = compute_metrics(outcome, labels, metrics);
  row.adr = 100.0 * r.adr;
  row.far = 100.0 * r.far;
  row.add = r.delay;
  if (const auto k = outcome.first_alarm_after(scenario.sim.fault->onset)) {
    const ContributionMap map = contribution_at(sim.frames, *k, params.window, params.order);
    row.estimated_cell = localize(map, layout);
    row.match = *row.estimated_cell == row.true_cell;
  }
  return row;
}

BenchmarkReport run_benchmark(const std::filesystem::path& dir, const DetectorParams& params,
                              std::optional<std::uint64_t> master_seed,
                              const BenchmarkCriteria& criteria) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
  std::vector<ScenarioConfig> scenarios;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".cfg") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    ScenarioConfig sc = load_scenario(f);
    if (sc.name.empty()) sc.name = f.stem().string();
    if (master_seed) sc.sim.rng_seed = *master_seed + sc.id;
    scenarios.push_back(std::move(sc));
  }
  if (scenarios.empty()) throw ConfigError("no scenario configs in " + dir.string());
  std::stable_sort(scenarios.begin(), scenarios.end(),
                   [](const ScenarioConfig& a, const ScenarioConfig& b) { return a.id < b.id; });

  BenchmarkReport report;
  report.far_ok = true;
  report.adr_ok = true;
  for (const auto& sc : scenarios) {
    BenchmarkRow row;
    try {
      row = run_scenario(sc, params);
    } catch (const Error& e) {
      row.id = sc.id;
      row.name = sc.name;
      row.targets = sc.targets;
      row.true_cell = sc.sim.fault ? sc.sim.fault->fault_cell : 0;
      row.failed = true;
      row.error = e.what();
    }
    if (row.failed) {
      report.far_ok = false;
      report.adr_ok = false;
    } else {
      const bool detected = row.add && *row.add <= criteria.max_add;
      if (detected) ++report.detected;
      if (row.match) ++report.localized;
      if (row.far > criteria.max_far) report.far_ok = false;
      if (row.add && row.adr < criteria.min_adr) report.adr_ok = false;
    }
    report.rows.push_back(std::move(row));
  }
  report.passed = report.far_ok && report.adr_ok && report.detected >= criteria.min_detected &&
                  report.localized >= criteria.min_localized;
  return report;
}

namespace {

std::string opt(const std::optional<double>& v, const char* f) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, f, *v);
  return buf;
}

std::string opt(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

}  // namespace

void write_benchmark_report(std::ostream& out, const BenchmarkReport& report) {
  out << "scenario,name,add_s,adr_pct,far_pct,estimated_cell,true_cell,match,status,"
         "target_add_s,target_adr_pct,target_far_pct,target_cell\n";
  for (const auto& r : report.rows) {
    out << r.id << "," << r.name << "," << opt(r.add, "%.0f") << ","
        << opt(std::optional<double>(r.adr), "%.2f") << ","
        << opt(std::optional<double>(r.far), "%.2f") << "," << opt(r.estimated_cell) << ","
        << r.true_cell << "," << (r.match ? 1 : 0) << "," << (r.failed ? "FAILED" : "ok") << ","
        << opt(r.targets.add, "%.0f") << "," << opt(r.targets.adr, "%.2f") << ","
        << opt(r.targets.far, "%.2f") << "," << opt(r.targets.cell) << "\n";
  }
}

}  // namespace mif
