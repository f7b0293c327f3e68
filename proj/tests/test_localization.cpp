#include <doctest.h>

#include <sstream>

#include "mif/error.hpp"
#include "mif/localization.hpp"

using namespace mif;

namespace {

Decomposition unit_basis(std::size_t n_sensors) {
  Decomposition d;
  d.order = 1;
  d.effective_rank = 1;
  d.phi = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n_sensors), 1,
                                    1.0 / std::sqrt(static_cast<double>(n_sensors)));
  d.lambda = Eigen::VectorXd::Ones(1);
  d.a = Eigen::MatrixXd::Ones(1, 1);
  return d;
}

}  // namespace

TEST_CASE("unchanged bases contribute nothing") {
  const Decomposition init = unit_basis(24);
  const std::vector<Decomposition> decs(5, init);
  const ContributionMap map = contribution(decs, init);
  for (double c : map.contribution) CHECK(c == 0.0);
  CHECK(map.argmax == 0);
}

TEST_CASE("single frame, single mode gives the raw drift") {
  const Decomposition init = unit_basis(6);
  Decomposition cur = init;
  cur.phi(2, 0) += 0.3;
  cur.phi(4, 0) -= 0.1;
  const std::vector<Decomposition> decs = {cur};
  const ContributionMap map = contribution(decs, init);
  CHECK(map.contribution[2] == doctest::Approx(0.3));
  CHECK(map.contribution[4] == doctest::Approx(0.1));
  CHECK(map.contribution[0] == 0.0);
}

TEST_CASE("a perturbation on sensor 4 localizes to cell #4") {
  const PackLayout layout = build_layout(4, 6, CellSpec{}, 0.002, 4);
  const Decomposition init = unit_basis(24);
  std::vector<Decomposition> decs;
  for (int k = 0; k < 10; ++k) {
    Decomposition d = init;
    d.phi(3, 0) += 0.01 * (k + 1);
    d.phi(10, 0) += 0.001;
    decs.push_back(d);
  }
  ContributionMap map = contribution(decs, init);
  CHECK(localize(map, layout) == 4);
  for (double& c : map.contribution) c *= 3.5;
  CHECK(localize(map, layout) == 4);
}

TEST_CASE("ties go to the lower serial number") {
  const Decomposition init = unit_basis(24);
  Decomposition d = init;
  d.phi(7, 0) += 0.2;
  d.phi(15, 0) += 0.2;
  const std::vector<Decomposition> decs = {d};
  const ContributionMap map = contribution(decs, init);
  CHECK(map.argmax == 7);
  CHECK(localize(map, build_layout(4, 6, CellSpec{}, 0.002, 4)) == 8);
}

TEST_CASE("contribution is invariant to mode sign flips and order") {
  Eigen::MatrixXd y = Eigen::MatrixXd::Random(8, 12).array() + 4.0;
  const Decomposition init = decompose_window(y, 2);
  Eigen::MatrixXd z = y;
  z.row(5).array() += 0.3;
  const Decomposition aligned = decompose_window(z, 2, &init);
  Decomposition flipped = aligned;
  flipped.phi.col(1) *= -1.0;
  const Decomposition realigned = decompose_window(z, 2, &init);
  const std::vector<Decomposition> a = {aligned};
  const std::vector<Decomposition> b = {realigned};
  CHECK(contribution(a, init).contribution == contribution(b, init).contribution);
}

TEST_CASE("contribution at an alarm on simulated telemetry") {
  const CellSpec spec;
  const PackLayout layout = build_layout(4, 6, spec, 0.002, 4);
  SimConfig cfg;
  cfg.duration = 400.0;
  const SimResult r = simulate(cfg, layout, spec);
  CHECK_THROWS_WITH_AS(contribution_at(r.frames, 20, 27, 1), "alarm in warm-up", DataError);
  const ContributionMap early = contribution_at(r.frames, 26, 27, 1);
  CHECK(early.first_frame == 26);
  CHECK(early.last_frame == 26);
  for (double c : early.contribution) CHECK(c < 1e-12);
  const ContributionMap map = contribution_at(r.frames, 300, 27, 1);
  CHECK(map.first_frame == 274);
  for (double c : map.contribution) {
    CHECK(c >= 0.0);
    CHECK(c < 1e-3);
  }
  const ContributionMap again = contribution_at(r.frames, 300, 27, 1);
  CHECK(again.contribution == map.contribution);

  std::ostringstream csv;
  write_contribution_csv(csv, map, layout);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "cell,serial,x,y,C");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 24);
}
