#pragma once

#include <cstdint>
#include <vector>

#include "ilnet/geometry/geometry.hpp"
#include "ilnet/scene/scenario.hpp"

namespace ilnet::eval {

inline constexpr double kCellSize = 0.5;    ///< meters per raster cell
inline constexpr double kCropMargin = 10.0;  ///< meters around the agents' extent

struct Box {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
};

struct CellIndex {
  long ix = 0;
  long iy = 0;
  auto operator<=>(const CellIndex&) const = default;
};

/// Drivable-area occupancy on an axis-aligned grid: cells whose center lies in
/// a lane quad (consecutive left/right boundary points) or that contain a
/// centerline point.
class DrivableRaster {
 public:
  DrivableRaster() = default;
  /// Grid spanning `extent` (cells are aligned to multiples of cell_size).
  DrivableRaster(const scene::LaneGraph& map, const Box& extent, double cell_size = kCellSize);

  CellIndex cell_of(geo::Point p) const;
  /// False outside the grid.
  bool drivable(CellIndex c) const;
  bool drivable(geo::Point p) const { return drivable(cell_of(p)); }
  /// Drivable cells whose center lies inside `box`.
  std::size_t drivable_cells_in(const Box& box) const;
  geo::Point cell_center(CellIndex c) const;

  double cell_size() const { return cell_; }
  long width() const { return width_; }
  long height() const { return height_; }
  long origin_x() const { return ox_; }  ///< index of the first column
  long origin_y() const { return oy_; }

 private:
  void mark(CellIndex c);

  double cell_ = kCellSize;
  long ox_ = 0, oy_ = 0, width_ = 0, height_ = 0;
  std::vector<std::uint8_t> grid_;
};

/// Agent states (history and future) bounding box grown by kCropMargin.
Box scenario_crop(const scene::Scenario& s);
/// Union of `box` and every map point.
Box extend_with_map(Box box, const scene::LaneGraph& map);
bool box_contains(const Box& box, geo::Point p);

/// Even-odd point-in-polygon test.
bool point_in_polygon(geo::Point p, const std::vector<geo::Point>& polygon);

}  // namespace ilnet::eval
