#include "psp/world.hpp"

#include "psp/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace psp::plan {

using nlohmann::json;

namespace {

Vec2 vec_from(const json& j) {
    if (!j.is_array() || j.size() != 2) {
        fail(Error::Kind::Io, "expected [x, y] pair in world file");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

Polygon polygon_from(const json& j) {
    Polygon poly;
    for (const auto& p : j) poly.push_back(vec_from(p));
    if (poly.size() < 3) {
        fail(Error::Kind::Io, "polygon needs at least 3 vertices");
    }
    return poly;
}

} // namespace

World World::from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        fail(Error::Kind::Io, "world file is not valid JSON");
    }
    World world;
    for (const auto& g : j.at("gates")) {
        world.gates.push_back({vec_from(g.at("a")), vec_from(g.at("b"))});
    }
    if (world.gates.size() < 2) {
        fail(Error::Kind::Io, "world needs at least two gates");
    }
    if (j.contains("known_obstacles")) {
        for (const auto& o : j["known_obstacles"]) world.known_obstacles.push_back(polygon_from(o));
    }
    if (j.contains("unknown_obstacles")) {
        for (const auto& o : j["unknown_obstacles"]) {
            world.unknown_obstacles.push_back(polygon_from(o));
        }
    }
    world.outer_bounds = polygon_from(j.at("outer_bounds"));
    if (j.contains("inner_bounds")) world.inner_bounds = polygon_from(j["inner_bounds"]);
    if (j.contains("altitude_floor_ft")) world.altitude_floor_ft = j["altitude_floor_ft"].get<double>();
    return world;
}

World World::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(Error::Kind::Io, "cannot open world file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

bool World::inside_bounds(Vec2 p) const {
    if (!point_in_polygon(p, outer_bounds)) return false;
    if (inner_bounds && point_in_polygon(p, *inner_bounds)) return false;
    return true;
}

bool World::segment_inside_bounds(Vec2 a, Vec2 b) const {
    if (!inside_bounds(a) || !inside_bounds(b)) return false;
    std::size_t n = outer_bounds.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        if (segments_intersect(a, b, outer_bounds[j], outer_bounds[i])) return false;
    }
    if (inner_bounds) {
        if (segment_hits_polygon(a, b, *inner_bounds)) return false;
    }
    return true;
}

bool World::segment_hits_known(Vec2 a, Vec2 b) const {
    for (const Polygon& o : known_obstacles) {
        if (segment_hits_polygon(a, b, o)) return true;
    }
    return false;
}

bool World::segment_hits_any_obstacle(Vec2 a, Vec2 b) const {
    if (segment_hits_known(a, b)) return true;
    for (const Polygon& o : unknown_obstacles) {
        if (segment_hits_polygon(a, b, o)) return true;
    }
    return false;
}

SenseResult sense(const World& world, Vec2 pose, double radius, int n_rays,
                  double free_spacing, double hit_depth) {
    SenseResult result;
    result.rays.reserve(static_cast<std::size_t>(n_rays));
    for (int r = 0; r < n_rays; r++) {
        double bearing = 2.0 * 3.141592653589793 * r / n_rays;
        Vec2 tip = pose + Vec2{std::cos(bearing), std::sin(bearing)} * radius;

        double best_t = 2.0;  // > 1 means no hit within radius
        auto probe = [&](const Polygon& poly) {
            if (auto t = segment_polygon_entry(pose, tip, poly)) {
                if (*t < best_t) best_t = *t;
            }
        };
        for (const Polygon& o : world.known_obstacles) probe(o);
        for (const Polygon& o : world.unknown_obstacles) probe(o);

        RayRecord record;
        record.bearing = bearing;
        if (best_t <= 1.0) {
            record.hit = true;
            record.point = pose + (tip - pose) * best_t;
            record.range = best_t * radius;
            result.points.push_back({record.point, -1});
            if (hit_depth > 0.0) {
                double deeper = (record.range + hit_depth) / radius;
                result.points.push_back({pose + (tip - pose) * deeper, -1});
            }
        } else {
            record.hit = false;
            record.range = radius;
            if (free_spacing > 0.0) {
                for (double d = free_spacing; d <= radius; d += free_spacing) {
                    result.points.push_back({pose + (tip - pose) * (d / radius), +1});
                }
            }
        }
        result.rays.push_back(record);
    }
    return result;
}

} // namespace psp::plan
