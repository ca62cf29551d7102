#include "psp/mission.hpp"

#include "psp/numfmt.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace psp::plan {

const char* mission_summary_csv_header() {
    return "seed,completed,collisions,cycles,path_length";
}

std::string MissionResult::summary_csv_row() const {
    std::ostringstream out;
    out << seed << ',' << (completed ? 1 : 0) << ',' << collisions << ',' << cycles << ','
        << fmt_double(path_length);
    return out.str();
}

std::string MissionResult::log_jsonl() const {
    std::ostringstream out;
    for (const CycleLog& entry : log) {
        nlohmann::ordered_json j;
        j["cycle"] = entry.cycle;
        j["pose"] = {entry.pose.x, entry.pose.y};
        j["target_gate"] = entry.target_gate;
        j["sensed_points"] = entry.sensed_points;
        j["tree_nodes"] = entry.tree_nodes;
        j["psp_pruned"] = entry.psp_pruned;
        j["path_length"] = entry.path_length;
        j["min_edge_p"] = entry.min_edge_p;
        j["held"] = entry.held;
        nlohmann::ordered_json exec = nlohmann::ordered_json::array();
        for (const Vec2& p : entry.executed) exec.push_back({p.x, p.y});
        j["executed"] = std::move(exec);
        out << j.dump() << '\n';
    }
    return out.str();
}

namespace {

double polyline_length(const std::vector<Vec2>& pts) {
    double total = 0.0;
    for (std::size_t i = 1; i < pts.size(); i++) total += distance(pts[i - 1], pts[i]);
    return total;
}

} // namespace

MissionResult run_mission(const World& world, const lang::Program& psp_program,
                          const MissionConfig& config, std::uint64_t seed) {
    const PlanConfig& plan_cfg = config.plan;
    MissionResult result;
    result.seed = seed;

    BeliefGrid belief(plan_cfg.belief);
    EdgeChecker checker(psp_program, plan_cfg.epsilon, plan_cfg.waypoint_spacing);

    Vec2 pose = world.gates.front().center();
    std::size_t target = 1;
    std::vector<Vec2> flown{pose};  // full executed trace, newest last
    int consecutive_holds = 0;

    for (int cycle = 0; cycle < plan_cfg.max_cycles; cycle++) {
        result.cycles = cycle + 1;
        CycleLog entry;
        entry.cycle = cycle;
        entry.pose = pose;
        entry.target_gate = static_cast<int>(target);

        SenseResult scan =
            sense(world, pose, plan_cfg.sensor_radius, plan_cfg.n_rays, plan_cfg.free_spacing);
        belief.observe(scan.points);
        entry.sensed_points = static_cast<int>(scan.points.size());

        Vec2 goal = world.gates[target].center();
        SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(cycle)));
        PlanResult planned = plan_cycle(world, belief, pose, goal, plan_cfg, checker, rng);
        entry.tree_nodes = static_cast<int>(planned.tree.nodes.size());
        entry.psp_pruned = planned.psp_pruned;
        entry.path_length = polyline_length(planned.path);

        if (!config.svg_dir.empty()) {
            std::ostringstream name;
            name << config.svg_dir << "/cycle_" << seed << "_";
            name.width(3);
            name.fill('0');
            name << cycle << ".svg";
            std::ofstream svg(name.str());
            std::vector<Vec2> trace;
            for (const CycleLog& past : result.log) {
                trace.insert(trace.end(), past.executed.begin(), past.executed.end());
            }
            svg << render_svg(world, planned.tree, planned.path, trace, pose, goal);
        }

        if (planned.path.size() < 2) {
            entry.held = true;
            consecutive_holds++;
            // stuck against a freshly sensed surface: back off along the
            // flown trace (known-safe space) and replan from there
            if (consecutive_holds >= 2 && flown.size() >= 2) {
                double budget = plan_cfg.traverse_distance * 0.4;
                entry.executed.push_back(pose);
                while (budget > 0.0 && flown.size() >= 2) {
                    Vec2 from = flown.back();
                    Vec2 to = flown[flown.size() - 2];
                    double len = distance(from, to);
                    if (len > budget) {
                        to = from + (to - from) * (budget / len);
                        flown.back() = to;
                        budget = 0.0;
                    } else {
                        flown.pop_back();
                        budget -= len;
                    }
                    entry.executed.push_back(to);
                }
                pose = entry.executed.back();
                result.path_length += polyline_length(entry.executed);
                consecutive_holds = 0;
            }
            result.log.push_back(std::move(entry));
            continue;
        }
        consecutive_holds = 0;

        // fly a bounded prefix of the planned path; audit against ground
        // truth (unknown obstacles included)
        double budget = plan_cfg.traverse_distance;
        entry.executed.push_back(pose);
        bool collided = false;
        for (std::size_t i = 1; i < planned.path.size() && budget > 0.0; i++) {
            if (i - 1 < planned.path_edge_p.size()) {
                entry.min_edge_p = std::min(entry.min_edge_p, planned.path_edge_p[i - 1]);
            }
            Vec2 from = entry.executed.back();
            Vec2 to = planned.path[i];
            double len = distance(from, to);
            if (len > budget) {
                to = from + (to - from) * (budget / len);
                len = budget;
            }
            budget -= len;
            if (world.segment_hits_any_obstacle(from, to)) {
                collided = true;
            }
            entry.executed.push_back(to);

            // gate crossing in flight order
            while (target < world.gates.size() &&
                   (segments_intersect(from, to, world.gates[target].a, world.gates[target].b) ||
                    distance(to, world.gates[target].center()) <= plan_cfg.goal_radius)) {
                target++;
                result.gates_passed = static_cast<int>(target) - 1;
                if (target == world.gates.size()) break;
            }
            if (target == world.gates.size()) break;
        }
        result.path_length += polyline_length(entry.executed);
        pose = entry.executed.back();
        flown.insert(flown.end(), entry.executed.begin() + 1, entry.executed.end());
        result.log.push_back(std::move(entry));

        if (collided) {
            result.collisions++;
            break;  // a real collision ends the mission
        }
        if (target == world.gates.size()) {
            result.completed = true;
            break;
        }
    }
    result.gates_passed = static_cast<int>(target) - 1;
    return result;
}

std::string render_svg(const World& world, const PlanTree& tree, const std::vector<Vec2>& path,
                       const std::vector<Vec2>& trace, Vec2 pose, Vec2 goal) {
    double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
    for (const Vec2& v : world.outer_bounds) {
        min_x = std::min(min_x, v.x);
        min_y = std::min(min_y, v.y);
        max_x = std::max(max_x, v.x);
        max_y = std::max(max_y, v.y);
    }
    double pad = 10.0;
    min_x -= pad;
    min_y -= pad;
    max_x += pad;
    max_y += pad;
    double w = max_x - min_x;
    double h = max_y - min_y;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << fmt_double(min_x) << " "
        << fmt_double(min_y) << " " << fmt_double(w) << " " << fmt_double(h)
        << "\" width=\"900\">\n";
    // flip y so the course reads naturally
    out << "<g transform=\"translate(0," << fmt_double(min_y + max_y) << ") scale(1,-1)\">\n";

    auto poly = [&](const Polygon& p, const char* fill, const char* stroke) {
        out << "<polygon points=\"";
        for (const Vec2& v : p) out << fmt_double(v.x) << "," << fmt_double(v.y) << " ";
        out << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\" stroke-width=\"1\"/>\n";
    };
    poly(world.outer_bounds, "#f8f8f8", "#404040");
    if (world.inner_bounds) poly(*world.inner_bounds, "#e0e0e0", "#404040");
    for (const Polygon& o : world.known_obstacles) poly(o, "#9aa0a6", "#3c4043");
    for (const Polygon& o : world.unknown_obstacles) poly(o, "#f28b82", "#a50e0e");

    for (std::size_t i = 1; i < tree.nodes.size(); i++) {
        const TreeNode& node = tree.nodes[i];
        const TreeNode& parent = tree.nodes[static_cast<std::size_t>(node.parent)];
        out << "<line x1=\"" << fmt_double(parent.p.x) << "\" y1=\"" << fmt_double(parent.p.y)
            << "\" x2=\"" << fmt_double(node.p.x) << "\" y2=\"" << fmt_double(node.p.y)
            << "\" stroke=\"#e8a0a0\" stroke-width=\"0.5\"/>\n";
    }

    auto polyline = [&](const std::vector<Vec2>& pts, const char* stroke, double width) {
        if (pts.size() < 2) return;
        out << "<polyline points=\"";
        for (const Vec2& v : pts) out << fmt_double(v.x) << "," << fmt_double(v.y) << " ";
        out << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << width << "\"/>\n";
    };
    polyline(path, "#1a73e8", 2.0);
    polyline(trace, "#188038", 2.0);

    for (std::size_t i = 0; i < world.gates.size(); i++) {
        const Gate& gate = world.gates[i];
        out << "<line x1=\"" << fmt_double(gate.a.x) << "\" y1=\"" << fmt_double(gate.a.y)
            << "\" x2=\"" << fmt_double(gate.b.x) << "\" y2=\"" << fmt_double(gate.b.y)
            << "\" stroke=\"#0d652d\" stroke-width=\"2.5\"/>\n";
    }
    out << "<circle cx=\"" << fmt_double(pose.x) << "\" cy=\"" << fmt_double(pose.y)
        << "\" r=\"3\" fill=\"#174ea6\"/>\n";
    out << "<circle cx=\"" << fmt_double(goal.x) << "\" cy=\"" << fmt_double(goal.y)
        << "\" r=\"3\" fill=\"#0d652d\"/>\n";
    out << "</g>\n</svg>\n";
    return out.str();
}

} // namespace psp::plan
