#include "mif/localization.hpp"

#include <cstdio>

#include "mif/error.hpp"
#include "mif/fusion_detect.hpp"

namespace mif {

ContributionMap contribution(std::span<const Decomposition> decs, const Decomposition& initial) {
  if (decs.empty()) throw DataError("contribution needs at least one decomposition");
  ContributionMap map;
  map.contribution.assign(static_cast<std::size_t>(initial.phi.rows()), 0.0);
  for (const Decomposition& d : decs) {
    const std::vector<double> v = basis_variation(d, initial);
    for (std::size_t i = 0; i < v.size(); ++i) map.contribution[i] += v[i];
  }
  const double scale = 1.0 / (static_cast<double>(initial.order) * static_cast<double>(decs.size()));
  for (double& c : map.contribution) c *= scale;
  for (std::size_t i = 1; i < map.contribution.size(); ++i) {
    if (map.contribution[i] > map.contribution[map.argmax]) map.argmax = i;
  }
  return map;
}

ContributionMap contribution_at(std::span<const TelemetryFrame> frames, std::size_t alarm,
                                std::size_t window, std::size_t order) {
  if (window < 1) throw ConfigError("window must be a positive integer");
  if (alarm >= frames.size()) throw DataError("alarm frame beyond the data");
  if (alarm + 1 < window) throw DataError("alarm in warm-up");
  const Decomposition initial = decompose_window(temperature_window(frames, 0, window), order);
  const std::size_t first = alarm + 1 >= 2 * window - 1 ? alarm + 1 - window : window - 1;
  std::vector<Decomposition> decs;
  decs.reserve(alarm - first + 1);
  for (std::size_t k = first; k <= alarm; ++k) {
    decs.push_back(decompose_window(temperature_window(frames, k + 1 - window, window), order,
                                    &initial));
  }
  ContributionMap map = contribution(decs, initial);
  map.first_frame = first;
  map.last_frame = alarm;
  return map;
}

std::size_t localize(const ContributionMap& map, const PackLayout& layout) {
  if (map.contribution.size() != layout.cell_count()) {
    throw DataError("contribution map does not match the pack layout");
  }
  return map.argmax + 1;
}

void write_contribution_csv(std::ostream& out, const ContributionMap& map,
                            const PackLayout& layout) {
  if (map.contribution.size() != layout.cell_count()) {
    throw DataError("contribution map does not match the pack layout");
  }
  out << "cell,serial,x,y,C\n";
  char buf[160];
  for (std::size_t i = 0; i < map.contribution.size(); ++i) {
    const Point& p = layout.cell_centers[i];
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g\n", i, i + 1, p.x, p.y,
                  map.contribution[i]);
    out << buf;
  }
}

}  // namespace mif
