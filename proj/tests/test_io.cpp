#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "mif/error.hpp"
#include "mif/io.hpp"

#ifndef MIF_SOURCE_DIR
#define MIF_SOURCE_DIR "."
#endif

using namespace mif;

namespace {

std::vector<TelemetryFrame> short_run(std::uint64_t seed = 1) {
  const CellSpec spec;
  SimConfig cfg;
  cfg.duration = 50.0;
  cfg.rng_seed = seed;
  FaultSpec f;
  f.fault_cell = 5;
  f.onset = 30.0;
  cfg.fault = f;
  return simulate(cfg, build_layout(4, 6, spec, 0.002, 4), spec).frames;
}

}  // namespace

TEST_CASE("telemetry csv header and round trip") {
  const auto frames = short_run();
  std::ostringstream out;
  write_telemetry_csv(out, frames);
  const std::string text = out.str();
  const std::string header = text.substr(0, text.find('\n'));
  std::string expected = "t";
  for (int i = 1; i <= 24; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, ",T%02d", i);
    expected += buf;
  }
  expected += ",V1,V2,V3,V4,V5,V6,I,label";
  CHECK(header == expected);
  CHECK(text.find('\r') == std::string::npos);

  std::istringstream in(text);
  const auto back = read_telemetry_csv(in);
  REQUIRE(back.size() == frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    CHECK(back[k].t == frames[k].t);
    CHECK(back[k].abnormal == frames[k].abnormal);
    CHECK(back[k].current == doctest::Approx(frames[k].current).epsilon(1e-9));
    for (std::size_t i = 0; i < 24; ++i) CHECK(std::abs(back[k].temperatures[i] - frames[k].temperatures[i]) <= 1e-9);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(back[k].voltages[i] - frames[k].voltages[i]) <= 1e-9);
  }
  std::ostringstream again;
  write_telemetry_csv(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("malformed rows name their line") {
  const auto frames = short_run();
  std::ostringstream out;
  write_telemetry_csv(out, frames);
  std::string text = out.str();
  // Corrupt the third data row (line 4).
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) pos = text.find('\n', pos) + 1;
  text.insert(pos, "x");
  std::istringstream in(text);
  CHECK_THROWS_WITH_AS(read_telemetry_csv(in), doctest::Contains("line 4"), DataError);

  std::istringstream bad_header("t,T01,V1,label\n");
  CHECK_THROWS_AS(read_telemetry_csv(bad_header), DataError);
  std::istringstream short_row("t,T01,V1,I,label\n0,1,2,3\n");
  CHECK_THROWS_WITH_AS(read_telemetry_csv(short_row), doctest::Contains("line 2"), DataError);
  std::istringstream bad_label("t,T01,V1,I,label\n0,1,2,3,2\n");
  CHECK_THROWS_AS(read_telemetry_csv(bad_label), DataError);
}

TEST_CASE("scenario config parsing") {
  std::istringstream in(
      "# comment\n"
      "scenario_id = 3\n"
      "discharge_rate = 1   # trailing comment\n"
      "fault_cell = 11\n"
      "r_short = 5\n"
      "onset = 1500\n"
      "target_cell = 11\n");
  const ScenarioConfig sc = parse_scenario(in);
  CHECK(sc.id == 3);
  CHECK(sc.sim.discharge_rate == 1.0);
  REQUIRE(sc.sim.fault);
  CHECK(sc.sim.fault->fault_cell == 11);
  CHECK(sc.sim.fault->r_short == 5.0);
  CHECK(sc.sim.fault->onset == 1500.0);
  CHECK(*sc.targets.cell == 11);

  std::istringstream normal("discharge_rate = 2\n");
  CHECK_FALSE(parse_scenario(normal).sim.fault);

  std::istringstream unknown("fault_cel = 4\n");
  CHECK_THROWS_WITH_AS(parse_scenario(unknown), doctest::Contains("fault_cel"), ConfigError);
  std::istringstream bad_value("r_short = ten\n");
  CHECK_THROWS_WITH_AS(parse_scenario(bad_value), doctest::Contains("r_short"), ConfigError);
  std::istringstream dup("dt = 0.25\ndt = 0.5\n");
  CHECK_THROWS_AS(parse_scenario(dup), ConfigError);
  std::istringstream zero("duration = 0\n");
  CHECK_THROWS_AS(parse_scenario(zero), ConfigError);
  std::istringstream cell("fault_cell = 30\n");
  CHECK_THROWS_AS(parse_scenario(cell), ConfigError);
}

TEST_CASE("params file round-trips byte for byte") {
  DetectorParams p;
  p.window = 31;
  p.order = 2;
  p.weights = {0.1, 0.6, 0.3};
  p.normalizers = {1.9154321, 0.09439481234567, 19045.5};
  p.threshold = 0.8192734;
  p.beta = 0.95;
  std::ostringstream a;
  write_params(a, p);
  std::istringstream in(a.str());
  const DetectorParams q = read_params(in);
  std::ostringstream b;
  write_params(b, q);
  CHECK(a.str() == b.str());
  CHECK(q.normalizers == p.normalizers);
  CHECK(q.weights == p.weights);

  std::istringstream bad("window = 27\nalpha1 = 0.9\n");
  CHECK_THROWS_AS(read_params(bad), ConfigError);
}

TEST_CASE("detection trace leaves warm-up rows empty") {
  const auto frames = short_run();
  const PackLayout layout = build_layout(4, 6, CellSpec{}, 0.002, 4);
  PipelineConfig pc;
  pc.window = 10;
  const EntropyStreams s = compute_entropy_streams(frames, pc, layout.cell_centers);
  DetectorParams p;
  p.window = 10;
  p = refit_on_run(s, 30, p);
  const auto out = detect(fuse(s, p), frame_times(frames), p.threshold);
  std::ostringstream csv;
  write_detection_trace(csv, s, out, p);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,h_d,h_s,h_t,H,H_r,alarm");
  std::getline(in, line);
  CHECK(line.rfind("0,,,,,", 0) == 0);
  CHECK(line.back() == '0');
}

TEST_CASE("shipped scenario configs encode the nine fault cases") {
  const std::filesystem::path dir = std::filesystem::path(MIF_SOURCE_DIR) / "scenarios";
  const std::size_t cells[] = {4, 5, 11, 16, 18, 23, 23, 23, 23};
  const double rates[] = {2, 2, 2, 2, 2, 2, 1, 2, 2};
  const double shorts[] = {10, 10, 10, 10, 10, 10, 10, 5, 10};
  const double onsets[] = {1000, 1000, 1000, 1000, 1000, 1000, 1000, 1000, 1500};
  for (std::size_t i = 0; i < 9; ++i) {
    const ScenarioConfig sc = load_scenario(dir / ("scenario_" + std::to_string(i + 1) + ".cfg"));
    CHECK(sc.id == i + 1);
    REQUIRE(sc.sim.fault);
    CHECK(sc.sim.fault->fault_cell == cells[i]);
    CHECK(sc.sim.discharge_rate == rates[i]);
    CHECK(sc.sim.fault->r_short == shorts[i]);
    CHECK(sc.sim.fault->onset == onsets[i]);
    CHECK(sc.sim.frame_count() == 2000);
  }
  const ScenarioConfig normal = load_scenario(dir / "train" / "normal.cfg");
  CHECK_FALSE(normal.sim.fault);
}
