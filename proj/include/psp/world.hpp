#pragma once

#include "psp/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace psp::plan {

// A race gate: a crossing segment; the planner aims for its center.
struct Gate {
    Vec2 a, b;
    Vec2 center() const { return {(a.x + b.x) * 0.5, (a.y + b.y) * 0.5}; }
    double half_length() const { return distance(a, b) * 0.5; }
};

// Gated 2-D course. Unknown obstacles are part of the ground truth but
// hidden from the planner; only the sensor and the collision audit may
// look at them.
struct World {
    std::vector<Gate> gates;
    std::vector<Polygon> known_obstacles;
    std::vector<Polygon> unknown_obstacles;
    Polygon outer_bounds;
    std::optional<Polygon> inner_bounds;
    double altitude_floor_ft = 75.0;

    static World from_json_text(const std::string& text);
    static World from_file(const std::string& path);

    bool inside_bounds(Vec2 p) const;
    // both endpoints inside, no boundary crossings
    bool segment_inside_bounds(Vec2 a, Vec2 b) const;
    bool segment_hits_known(Vec2 a, Vec2 b) const;
    bool segment_hits_any_obstacle(Vec2 a, Vec2 b) const;
};

struct RayRecord {
    double bearing = 0.0;
    bool hit = false;
    Vec2 point;          // hit point when hit
    double range = 0.0;  // distance to hit, or the sensor radius
};

struct LabeledPoint {
    Vec2 p;
    int label = 1;  // +1 free space, -1 obstacle
};

struct SenseResult {
    std::vector<RayRecord> rays;
    std::vector<LabeledPoint> points;
};

// Spinning range sensor: one ray per bearing, truncated at radius. Hits
// (on known or unknown obstacles) produce obstacle-labeled points at the
// surface plus one a short distance behind it (the interior is occupied);
// rays that reach full range contribute free-labeled samples every
// free_spacing meters.
SenseResult sense(const World& world, Vec2 pose, double radius, int n_rays,
                  double free_spacing, double hit_depth = 2.0);

} // namespace psp::plan
