#include "dtwin/layout.hpp"

#include <algorithm>
#include <stdexcept>

namespace dtwin {
namespace {

bool inside_any(std::span<const Rect> regions, double span_frac, double chord_frac) {
  for (const Rect& r : regions)
    if (r.contains(span_frac, chord_frac)) return true;
  return false;
}

void append_row(std::vector<Gauge>& out, int& next_id, double chord, int count,
                double span_lo, double span_hi, bool installed,
                std::span<const Rect> regions) {
  const double step = (span_hi - span_lo) / static_cast<double>(count - 1);
  for (int k = 0; k < count; ++k) {
    Gauge g;
    g.id = next_id++;
    g.chord = chord;
    g.span = span_lo + step * static_cast<double>(k);
    g.installed = installed;
    g.excluded = inside_any(regions, g.span, g.chord);
    out.push_back(g);
  }
}

}  // namespace

std::vector<Gauge> SensorLayout::usable() const {
  std::vector<Gauge> v;
  for (const Gauge& g : gauges)
    if (!g.excluded) v.push_back(g);
  return v;
}

std::vector<int> SensorLayout::usable_ids() const {
  std::vector<int> v;
  for (const Gauge& g : gauges)
    if (!g.excluded) v.push_back(g.id);
  return v;
}

const Gauge& SensorLayout::by_id(int id) const {
  for (const Gauge& g : gauges)
    if (g.id == id) return g;
  throw std::out_of_range("no gauge with id " + std::to_string(id));
}

io::CsvTable SensorLayout::to_csv() const {
  io::CsvTable t;
  t.header = {"id", "chord_fraction", "span_fraction", "installed", "excluded"};
  for (const Gauge& g : gauges)
    t.rows.push_back({std::to_string(g.id), io::format_double(g.chord),
                      io::format_double(g.span), g.installed ? "1" : "0",
                      g.excluded ? "1" : "0"});
  return t;
}

std::string SensorLayout::hash() const {
  std::string blob;
  for (const Gauge& g : gauges) {
    blob += std::to_string(g.id) + ':' + io::format_double(g.chord) + ':' +
            io::format_double(g.span) + ':' + (g.installed ? '1' : '0') + ':' +
            (g.excluded ? '1' : '0') + ';';
  }
  return io::hash_hex(blob);
}

SensorLayout installed_layout(std::span<const Rect> damage_regions) {
  SensorLayout layout;
  int next_id = 1;
  // Row at 30% chord (tension side), then 70% chord (compression side, same
  // side as the damage regions); each root to tip.
  append_row(layout.gauges, next_id, 0.30, 12, 0.25, 0.75, true, damage_regions);
  append_row(layout.gauges, next_id, 0.70, 12, 0.25, 0.75, true, damage_regions);
  return layout;
}

SensorLayout candidate_layout(std::span<const Rect> damage_regions) {
  SensorLayout layout = installed_layout(damage_regions);
  int next_id = 25;
  // Four retrofit rows, 58 positions total. Per-row counts are chosen so that
  // with the default damage rectangles exactly 11 candidates are excluded,
  // leaving 67 usable positions across the full layout.
  append_row(layout.gauges, next_id, 0.15, 11, 0.10, 0.95, false, damage_regions);
  append_row(layout.gauges, next_id, 0.45, 10, 0.10, 0.95, false, damage_regions);
  append_row(layout.gauges, next_id, 0.55, 19, 0.10, 0.95, false, damage_regions);
  append_row(layout.gauges, next_id, 0.85, 18, 0.10, 0.95, false, damage_regions);
  return layout;
}

}  // namespace dtwin
