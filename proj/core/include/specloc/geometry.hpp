#pragma once

#include <utility>
#include <vector>

#include "specloc/spectra.hpp"

namespace specloc {

// Simple counter-clockwise polygon over floor coordinates in cm. The
// constructor rejects fewer than 3 vertices, repeated consecutive vertices,
// self-intersecting edge pairs and clockwise winding.
class RoomPolygon {
 public:
  explicit RoomPolygon(std::vector<Position> vertices);

  const std::vector<Position>& vertices() const { return vertices_; }
  Position bbox_min() const { return bbox_min_; }
  Position bbox_max() const { return bbox_max_; }

 private:
  std::vector<Position> vertices_;
  Position bbox_min_{};
  Position bbox_max_{};
};

// Even-odd ray casting. Tie rule: points on the boundary count as inside,
// decided by an exact on-segment test before any crossings are counted.
bool contains(const RoomPolygon& poly, const Position& p);

struct ReferenceLayout {
  std::vector<Position> points;
  double spacing_cm = 100.0;  // nominal grid pitch
};

struct GridSpec {
  double origin_x = 50.0;
  double origin_y = 40.0;
  double pitch_x = 100.0;
  double pitch_y = 90.0;
};

// Grid points strictly inside the polygon, ascending (x, y). Boundary
// points are excluded so that every reference point is a proper interior
// location.
ReferenceLayout generate_layout(const RoomPolygon& poly, const GridSpec& grid);

// The default lab: a 6 m x 8 m bounding box minus the axis-aligned notch
// rectangle (200,300)-(400,800), leaving two 2 m-wide north arms joined by
// a southern base. The layout is 42 reference points on a ~100 cm pitch.
// The true floor plan is not recoverable from published material, so both
// are config-replaceable stand-ins.
std::pair<RoomPolygon, ReferenceLayout> default_room();

}  // namespace specloc
