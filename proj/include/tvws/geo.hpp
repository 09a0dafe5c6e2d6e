#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "tvws/errors.hpp"

namespace tvws {

/// Planar location in meters east/north of the area origin. Simulation areas
/// are well under 10 km across, so local tangent-plane coordinates are used
/// throughout; from_lat_lon() converts external geodetic coordinates.
struct GeoPoint {
    double x = 0.0;
    double y = 0.0;

    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
    bool operator==(const GeoPoint&) const = default;
};

double distance(const GeoPoint& p, const GeoPoint& q);

/// Equirectangular projection of (lat, lon) into local meters relative to an
/// origin. Adequate below city scale; no ellipsoidal correction.
GeoPoint from_lat_lon(double origin_lat_deg, double origin_lon_deg,
                      double lat_deg, double lon_deg);

/// Index of one grid cell. Column i grows east, row j grows north.
struct Cell {
    int i = 0;
    int j = 0;

    bool operator==(const Cell&) const = default;
    bool operator<(const Cell& o) const { return j != o.j ? j < o.j : i < o.i; }
};

struct CellHash {
    size_t operator()(const Cell& c) const {
        return std::hash<int64_t>{}((int64_t(c.j) << 32) ^ uint32_t(c.i));
    }
};

/// Axis-aligned rectangle, used for cell extents.
struct Rect {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

/// Distance from a point to the nearest point of a closed rectangle (zero if
/// the point is inside).
double rect_distance(const Rect& r, const GeoPoint& p);

/// Area of the intersection of a disk with an axis-aligned rectangle.
double disk_rect_intersection_area(const GeoPoint& center, double radius, const Rect& r);

/// The rectangular area of interest and its fine-grained cell grid.
/// cell_size defaults to 50 m (the localization accuracy required of
/// portable devices); it is configurable because the right granularity is an
/// open tuning question.
class AreaOfInterest {
  public:
    AreaOfInterest() = default;
    AreaOfInterest(double width_m, double height_m, double cell_size_m = 50.0);

    double width() const { return width_; }
    double height() const { return height_; }
    double cell_size() const { return cell_size_; }

    int cols() const { return cols_; }
    int rows() const { return rows_; }
    double diagonal() const { return std::hypot(width_, height_); }

    /// Closed-boundary containment test.
    bool contains(const GeoPoint& p) const {
        return p.finite() && p.x >= 0.0 && p.x <= width_ && p.y >= 0.0 && p.y <= height_;
    }

    bool valid_cell(const Cell& c) const {
        return c.i >= 0 && c.i < cols_ && c.j >= 0 && c.j < rows_;
    }

    /// Cell containing p: floor(x / cell_size) with the upper boundary
    /// clamped into the last cell. Throws OutOfAreaError outside the bounds.
    Cell cell_of(const GeoPoint& p) const;

    GeoPoint cell_center(const Cell& c) const;
    Rect cell_rect(const Cell& c) const;

    /// Every cell whose rectangle intersects the disk. Exact: equals the
    /// brute-force filter over all cells. A zero radius yields exactly
    /// cell_of(center).
    std::vector<Cell> cells_within(const GeoPoint& center, double radius) const;

    /// Same predicate as cells_within uses, exposed for oracle tests.
    bool cell_intersects_disk(const Cell& c, const GeoPoint& center, double radius) const;

  private:
    double width_ = 0, height_ = 0, cell_size_ = 50.0;
    int cols_ = 0, rows_ = 0;
};

} // namespace tvws
