#include "specloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace specloc {

namespace {

double cross(const Position& o, const Position& a, const Position& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Position& a, const Position& b, const Position& p) {
  if (cross(a, b, p) != 0.0) return false;
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

// Proper or improper intersection of segments ab and cd.
bool segments_intersect(const Position& a, const Position& b,
                        const Position& c, const Position& d) {
  const double d1 = cross(c, d, a);
  const double d2 = cross(c, d, b);
  const double d3 = cross(a, b, c);
  const double d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && on_segment(c, d, a)) return true;
  if (d2 == 0 && on_segment(c, d, b)) return true;
  if (d3 == 0 && on_segment(a, b, c)) return true;
  if (d4 == 0 && on_segment(a, b, d)) return true;
  return false;
}

double signed_area(const std::vector<Position>& v) {
  double area2 = 0.0;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    area2 += v[j].x * v[i].y - v[i].x * v[j].y;
  }
  return 0.5 * area2;
}

}  // namespace

RoomPolygon::RoomPolygon(std::vector<Position> vertices)
    : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 3) {
    throw std::invalid_argument("polygon needs at least 3 vertices");
  }
  for (const auto& v : vertices_) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
      throw std::invalid_argument("polygon vertex must be finite");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (vertices_[i] == vertices_[(i + 1) % n]) {
      throw std::invalid_argument("repeated consecutive polygon vertex");
    }
  }
  // Pairwise test of non-adjacent edges; adjacent edges share exactly one
  // endpoint by the check above.
  for (std::size_t i = 0; i < n; ++i) {
    const Position& a = vertices_[i];
    const Position& b = vertices_[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      const Position& c = vertices_[j];
      const Position& d = vertices_[(j + 1) % n];
      if (segments_intersect(a, b, c, d)) {
        throw std::invalid_argument("polygon edges self-intersect");
      }
    }
  }
  if (signed_area(vertices_) <= 0.0) {
    throw std::invalid_argument("polygon must be counter-clockwise");
  }
  bbox_min_ = bbox_max_ = vertices_[0];
  for (const auto& v : vertices_) {
    bbox_min_.x = std::min(bbox_min_.x, v.x);
    bbox_min_.y = std::min(bbox_min_.y, v.y);
    bbox_max_.x = std::max(bbox_max_.x, v.x);
    bbox_max_.y = std::max(bbox_max_.y, v.y);
  }
}

bool contains(const RoomPolygon& poly, const Position& p) {
  const auto& v = poly.vertices();
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (on_segment(v[j], v[i], p)) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((v[i].y > p.y) == (v[j].y > p.y)) continue;
    const double x_at =
        v[i].x + (p.y - v[i].y) / (v[j].y - v[i].y) * (v[j].x - v[i].x);
    if (p.x < x_at) inside = !inside;
  }
  return inside;
}

ReferenceLayout generate_layout(const RoomPolygon& poly, const GridSpec& grid) {
  if (grid.pitch_x <= 0.0 || grid.pitch_y <= 0.0) {
    throw std::invalid_argument("grid pitch must be positive");
  }
  const Position lo = poly.bbox_min();
  const Position hi = poly.bbox_max();
  ReferenceLayout layout;
  layout.spacing_cm = grid.pitch_x;
  for (int ix = 0; lo.x + grid.origin_x + ix * grid.pitch_x < hi.x; ++ix) {
    const double x = lo.x + grid.origin_x + ix * grid.pitch_x;
    for (int iy = 0; lo.y + grid.origin_y + iy * grid.pitch_y < hi.y; ++iy) {
      const double y = lo.y + grid.origin_y + iy * grid.pitch_y;
      const Position p{x, y};
      // Strict interior: reject boundary points by nudging the test.
      if (!contains(poly, p)) continue;
      bool on_edge = false;
      const auto& v = poly.vertices();
      for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        if (on_segment(v[j], v[i], p)) {
          on_edge = true;
          break;
        }
      }
      if (!on_edge) layout.points.push_back(p);
    }
  }
  std::sort(layout.points.begin(), layout.points.end(),
            [](const Position& a, const Position& b) {
              return std::tie(a.x, a.y) < std::tie(b.x, b.y);
            });
  return layout;
}

std::pair<RoomPolygon, ReferenceLayout> default_room() {
  RoomPolygon poly({{0, 0},
                    {600, 0},
                    {600, 800},
                    {400, 800},
                    {400, 300},
                    {200, 300},
                    {200, 800},
                    {0, 800}});
  ReferenceLayout layout = generate_layout(poly, GridSpec{});
  return {std::move(poly), std::move(layout)};
}

}  // namespace specloc
