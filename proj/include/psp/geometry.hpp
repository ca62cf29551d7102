#pragma once

#include <cmath>
#include <optional>
#include <vector>

namespace psp::plan {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double k) const { return {x * k, y * k}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

using Polygon = std::vector<Vec2>;

// Even-odd test; boundary points count as inside.
bool point_in_polygon(Vec2 p, const Polygon& poly);

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

// True when segment ab touches the polygon (edge crossing or either
// endpoint inside).
bool segment_hits_polygon(Vec2 a, Vec2 b, const Polygon& poly);

// Smallest t in [0, 1] where a + t(b-a) crosses a polygon edge.
std::optional<double> segment_polygon_entry(Vec2 a, Vec2 b, const Polygon& poly);

} // namespace psp::plan
