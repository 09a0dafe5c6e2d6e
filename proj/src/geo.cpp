#include "tvws/geo.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

namespace tvws {

namespace {
constexpr double kEarthRadiusM = 6371000.0;

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
} // namespace

double distance(const GeoPoint& p, const GeoPoint& q) {
    return std::hypot(p.x - q.x, p.y - q.y);
}

GeoPoint from_lat_lon(double origin_lat_deg, double origin_lon_deg,
                      double lat_deg, double lon_deg) {
    const double x = kEarthRadiusM * std::cos(deg2rad(origin_lat_deg)) *
                     deg2rad(lon_deg - origin_lon_deg);
    const double y = kEarthRadiusM * deg2rad(lat_deg - origin_lat_deg);
    return GeoPoint{x, y};
}

double rect_distance(const Rect& r, const GeoPoint& p) {
    const double dx = std::max({r.x0 - p.x, 0.0, p.x - r.x1});
    const double dy = std::max({r.y0 - p.y, 0.0, p.y - r.y1});
    return std::hypot(dx, dy);
}

namespace {

// Area of disk(origin, r) intersected with the quarter-plane {x <= a, y <= b}.
// Integrates the horizontal slice length len(y) = clamp(a, -w, w) + w with
// w(y) = sqrt(r^2 - y^2) over y in [-r, min(b, r)].
double disk_quarter_plane_area(double r, double a, double b) {
    if (r <= 0.0 || a <= -r || b <= -r) return 0.0;

    auto W = [r](double y) { // antiderivative of w
        y = std::clamp(y, -r, r);
        return 0.5 * (y * std::sqrt(std::max(0.0, r * r - y * y)) +
                      r * r * std::asin(std::clamp(y / r, -1.0, 1.0)));
    };
    auto int_w = [&](double lo, double hi) { return hi > lo ? W(hi) - W(lo) : 0.0; };

    const double y_hi = std::min(b, r);
    if (a >= r) return 2.0 * int_w(-r, y_hi);

    const double y_star = std::sqrt(std::max(0.0, r * r - a * a));
    if (a >= 0.0) {
        // len = 2w for |y| > y_star, a + w inside the band
        double area = 2.0 * int_w(-r, std::min(y_hi, -y_star));
        const double hi_band = std::min(y_hi, y_star);
        if (hi_band > -y_star)
            area += a * (hi_band + y_star) + int_w(-y_star, hi_band);
        area += 2.0 * int_w(y_star, y_hi);
        return area;
    }
    // a < 0: slices exist only inside the band |y| <= y_star
    const double lo = -y_star, hi = std::min(y_hi, y_star);
    if (hi <= lo) return 0.0;
    return std::max(0.0, a * (hi - lo) + int_w(lo, hi));
}

} // namespace

double disk_rect_intersection_area(const GeoPoint& center, double radius, const Rect& r) {
    if (radius <= 0.0) return 0.0;
    // Shift so the disk is centered at the origin, then use the standard
    // inclusion-exclusion over the four corner quarter-planes.
    const double x0 = r.x0 - center.x, x1 = r.x1 - center.x;
    const double y0 = r.y0 - center.y, y1 = r.y1 - center.y;
    const double a = disk_quarter_plane_area(radius, x1, y1) -
                     disk_quarter_plane_area(radius, x0, y1) -
                     disk_quarter_plane_area(radius, x1, y0) +
                     disk_quarter_plane_area(radius, x0, y0);
    return std::max(0.0, a);
}

AreaOfInterest::AreaOfInterest(double width_m, double height_m, double cell_size_m)
    : width_(width_m), height_(height_m), cell_size_(cell_size_m) {
    if (!(width_ > 0.0) || !(height_ > 0.0) || !(cell_size_ > 0.0))
        throw ValidationError("area dimensions and cell size must be positive", "area");
    if (cell_size_ > std::min(width_, height_))
        throw ValidationError("cell_size must not exceed min(width, height)", "cell_size");
    cols_ = int(std::ceil(width_ / cell_size_));
    rows_ = int(std::ceil(height_ / cell_size_));
}

Cell AreaOfInterest::cell_of(const GeoPoint& p) const {
    if (!contains(p)) {
        std::ostringstream os;
        os << "point (" << p.x << ", " << p.y << ") outside area " << width_ << "x" << height_;
        throw OutOfAreaError(os.str());
    }
    const int i = std::min(int(std::floor(p.x / cell_size_)), cols_ - 1);
    const int j = std::min(int(std::floor(p.y / cell_size_)), rows_ - 1);
    return Cell{i, j};
}

GeoPoint AreaOfInterest::cell_center(const Cell& c) const {
    return GeoPoint{(c.i + 0.5) * cell_size_, (c.j + 0.5) * cell_size_};
}

Rect AreaOfInterest::cell_rect(const Cell& c) const {
    return Rect{c.i * cell_size_, c.j * cell_size_, (c.i + 1) * cell_size_, (c.j + 1) * cell_size_};
}

bool AreaOfInterest::cell_intersects_disk(const Cell& c, const GeoPoint& center,
                                          double radius) const {
    if (!valid_cell(c)) return false;
    if (contains(center) && cell_of(center) == c) return true;
    return rect_distance(cell_rect(c), center) < radius;
}

std::vector<Cell> AreaOfInterest::cells_within(const GeoPoint& center, double radius) const {
    std::vector<Cell> out;
    const int i0 = std::max(0, int(std::floor((center.x - radius) / cell_size_)));
    const int i1 = std::min(cols_ - 1, int(std::floor((center.x + radius) / cell_size_)));
    const int j0 = std::max(0, int(std::floor((center.y - radius) / cell_size_)));
    const int j1 = std::min(rows_ - 1, int(std::floor((center.y + radius) / cell_size_)));
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i)
            if (cell_intersects_disk(Cell{i, j}, center, radius)) out.push_back(Cell{i, j});
    if (out.empty() && contains(center)) out.push_back(cell_of(center));
    return out;
}

} // namespace tvws
