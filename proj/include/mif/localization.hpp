#pragma once

// Fault localization from the spatial-basis contribution map around an alarm.

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "mif/pack_sim.hpp"
#include "mif/spatiotemporal_entropy.hpp"

namespace mif {

struct ContributionMap {
  std::vector<double> contribution;  // per sensor, >= 0
  std::size_t first_frame = 0;       // window end indices averaged over
  std::size_t last_frame = 0;
  std::size_t argmax = 0;            // sensor index, lowest index on ties
};

/// Mean over the decompositions and their modes of |phi - phi0| per sensor.
ContributionMap contribution(std::span<const Decomposition> decs, const Decomposition& initial);

/// Recomputes the decompositions of the W windows ending at frame `alarm`
/// (aligned to the initial decomposition of the first W frames) and builds
/// the contribution map.  Windows that would start before frame 0 are
/// skipped.  Throws DataError when `alarm` lies inside the warm-up.
ContributionMap contribution_at(std::span<const TelemetryFrame> frames, std::size_t alarm,
                                std::size_t window, std::size_t order);

/// Serial number (1-based) of the cell owning the argmax sensor; one sensor
/// per cell, so sensor i belongs to cell i + 1.
std::size_t localize(const ContributionMap& map, const PackLayout& layout);

/// Rows `cell,serial,x,y,C`.
void write_contribution_csv(std::ostream& out, const ContributionMap& map,
                            const PackLayout& layout);

}  // namespace mif
