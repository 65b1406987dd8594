#include "ilnet/eval/raster.hpp"

#include <algorithm>
#include <cmath>

namespace ilnet::eval {

bool point_in_polygon(geo::Point p, const std::vector<geo::Point>& polygon) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const geo::Point a = polygon[i], b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

bool box_contains(const Box& box, geo::Point p) {
  return p.x >= box.min_x && p.x <= box.max_x && p.y >= box.min_y && p.y <= box.max_y;
}

Box scenario_crop(const scene::Scenario& s) {
  Box b{INFINITY, INFINITY, -INFINITY, -INFINITY};
  for (const auto& a : s.agents) {
    for (const auto& st : a.states) {
      if (!st.observed) continue;
      b.min_x = std::min(b.min_x, st.position.x);
      b.min_y = std::min(b.min_y, st.position.y);
      b.max_x = std::max(b.max_x, st.position.x);
      b.max_y = std::max(b.max_y, st.position.y);
    }
  }
  b.min_x -= kCropMargin;
  b.min_y -= kCropMargin;
  b.max_x += kCropMargin;
  b.max_y += kCropMargin;
  return b;
}

Box extend_with_map(Box box, const scene::LaneGraph& map) {
  for (const auto& seg : map.segments) {
    for (const auto& pl : seg.polylines) {
      for (const auto& p : pl.points) {
        box.min_x = std::min(box.min_x, p.x);
        box.min_y = std::min(box.min_y, p.y);
        box.max_x = std::max(box.max_x, p.x);
        box.max_y = std::max(box.max_y, p.y);
      }
    }
  }
  return box;
}

DrivableRaster::DrivableRaster(const scene::LaneGraph& map, const Box& extent, double cell_size) : cell_(cell_size) {
  ox_ = static_cast<long>(std::floor(extent.min_x / cell_));
  oy_ = static_cast<long>(std::floor(extent.min_y / cell_));
  width_ = static_cast<long>(std::floor(extent.max_x / cell_)) - ox_ + 1;
  height_ = static_cast<long>(std::floor(extent.max_y / cell_)) - oy_ + 1;
  grid_.assign(static_cast<std::size_t>(width_ * height_), 0);

  for (const auto& seg : map.segments) {
    const scene::Polyline* left = nullptr;
    const scene::Polyline* right = nullptr;
    for (const auto& pl : seg.polylines) {
      if (pl.kind == scene::PolylineKind::kLeftBoundary) left = &pl;
      if (pl.kind == scene::PolylineKind::kRightBoundary) right = &pl;
      if (pl.kind == scene::PolylineKind::kCenterline) {
        for (const auto& p : pl.points) mark(cell_of(p));
      }
    }
    if (!left || !right) continue;
    const std::size_t n = std::min(left->points.size(), right->points.size());
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::vector<geo::Point> quad{left->points[i], left->points[i + 1], right->points[i + 1], right->points[i]};
      double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
      for (const auto& q : quad) {
        x0 = std::min(x0, q.x);
        y0 = std::min(y0, q.y);
        x1 = std::max(x1, q.x);
        y1 = std::max(y1, q.y);
      }
      const CellIndex lo = cell_of({x0, y0}), hi = cell_of({x1, y1});
      for (long iy = lo.iy; iy <= hi.iy; ++iy) {
        for (long ix = lo.ix; ix <= hi.ix; ++ix) {
          if (point_in_polygon(cell_center({ix, iy}), quad)) mark({ix, iy});
        }
      }
    }
  }
}

CellIndex DrivableRaster::cell_of(geo::Point p) const {
  return {static_cast<long>(std::floor(p.x / cell_)), static_cast<long>(std::floor(p.y / cell_))};
}

geo::Point DrivableRaster::cell_center(CellIndex c) const {
  return {(static_cast<double>(c.ix) + 0.5) * cell_, (static_cast<double>(c.iy) + 0.5) * cell_};
}

void DrivableRaster::mark(CellIndex c) {
  const long x = c.ix - ox_, y = c.iy - oy_;
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  grid_[static_cast<std::size_t>(y * width_ + x)] = 1;
}

bool DrivableRaster::drivable(CellIndex c) const {
  const long x = c.ix - ox_, y = c.iy - oy_;
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return false;
  return grid_[static_cast<std::size_t>(y * width_ + x)] != 0;
}

std::size_t DrivableRaster::drivable_cells_in(const Box& box) const {
  std::size_t count = 0;
  for (long y = 0; y < height_; ++y) {
    for (long x = 0; x < width_; ++x) {
      if (grid_[static_cast<std::size_t>(y * width_ + x)] == 0) continue;
      if (box_contains(box, cell_center({x + ox_, y + oy_}))) ++count;
    }
  }
  return count;
}

}  // namespace ilnet::eval
