#pragma once
// Strain-gauge placements on the wing planform. Positions are stored as
// planform fractions: x = chord fraction in [0,1], y = span fraction in [0,1]
// measured from the clamped root.
#include <span>
#include <string>
#include <vector>

#include "dtwin/io.hpp"
#include "dtwin/types.hpp"

namespace dtwin {

struct Gauge {
  int id = 0;          // stable across layouts; never reused
  double chord = 0.0;  // chord fraction
  double span = 0.0;   // span fraction
  bool installed = false;
  bool excluded = false;  // sits inside a damage region; produces no signal
};

struct SensorLayout {
  std::vector<Gauge> gauges;

  std::vector<Gauge> usable() const;
  std::vector<int> usable_ids() const;
  const Gauge& by_id(int id) const;

  io::CsvTable to_csv() const;
  std::string hash() const;
};

// 24 factory-installed gauges: two chordwise rows of 12, evenly spaced over
// 25%..75% span. Ids run row-major from the root; with the default damage
// rectangles exactly ids 17, 18, 23, 24 land inside a region and are excluded.
SensorLayout installed_layout(std::span<const Rect> damage_regions);

// Installed gauges plus 58 retrofit candidates in four spanwise rows covering
// 10%..95% span. Candidate ids start at 25.
SensorLayout candidate_layout(std::span<const Rect> damage_regions);

}  // namespace dtwin
