#include "psp/geometry.hpp"

#include <algorithm>

namespace psp::plan {

bool point_in_polygon(Vec2 p, const Polygon& poly) {
    bool inside = false;
    std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        Vec2 a = poly[j];
        Vec2 b = poly[i];
        // on-edge check
        double cross = (b - a).cross(p - a);
        if (std::abs(cross) < 1e-12 && (p - a).dot(p - b) <= 1e-12) return true;
        if ((b.y > p.y) != (a.y > p.y)) {
            double t = (p.y - b.y) / (a.y - b.y);
            if (p.x < b.x + t * (a.x - b.x)) inside = !inside;
        }
    }
    return inside;
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
    double v = (b - a).cross(c - a);
    if (v > 1e-12) return 1;
    if (v < -1e-12) return -1;
    return 0;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
    return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
           std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

} // namespace

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    int o1 = orientation(a, b, c);
    int o2 = orientation(a, b, d);
    int o3 = orientation(c, d, a);
    int o4 = orientation(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

bool segment_hits_polygon(Vec2 a, Vec2 b, const Polygon& poly) {
    if (point_in_polygon(a, poly) || point_in_polygon(b, poly)) return true;
    std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        if (segments_intersect(a, b, poly[j], poly[i])) return true;
    }
    return false;
}

std::optional<double> segment_polygon_entry(Vec2 a, Vec2 b, const Polygon& poly) {
    Vec2 dir = b - a;
    double best = -1.0;
    std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        Vec2 c = poly[j];
        Vec2 d = poly[i];
        Vec2 edge = d - c;
        double denom = dir.cross(edge);
        if (std::abs(denom) < 1e-12) continue;
        double t = (c - a).cross(edge) / denom;
        double u = (c - a).cross(dir) / denom;
        if (t < -1e-12 || t > 1.0 + 1e-12 || u < -1e-12 || u > 1.0 + 1e-12) continue;
        if (best < 0.0 || t < best) best = t;
    }
    if (best < 0.0) return std::nullopt;
    return std::clamp(best, 0.0, 1.0);
}

} // namespace psp::plan
