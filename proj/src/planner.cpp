#include "psp/planner.hpp"

#include "psp/inference.hpp"
#include "psp/validator.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

namespace psp::plan {

using nlohmann::json;

PlanConfig PlanConfig::from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        fail(Error::Kind::Io, "planner config is not valid JSON");
    }
    PlanConfig cfg;
    auto get = [&](const char* name, auto& target) {
        if (j.contains(name)) target = j[name].get<std::decay_t<decltype(target)>>();
    };
    get("n_nodes", cfg.n_nodes);
    get("epsilon", cfg.epsilon);
    get("steer_radius", cfg.steer_radius);
    get("goal_radius", cfg.goal_radius);
    get("sensor_radius", cfg.sensor_radius);
    get("n_rays", cfg.n_rays);
    get("free_spacing", cfg.free_spacing);
    get("waypoint_spacing", cfg.waypoint_spacing);
    get("traverse_distance", cfg.traverse_distance);
    get("max_cycles", cfg.max_cycles);
    get("rewire_gamma", cfg.rewire_gamma);
    get("goal_bias", cfg.goal_bias);
    get("fallback_progress", cfg.fallback_progress);
    get("cell_size", cfg.belief.cell_size);
    get("obs_noise_var", cfg.belief.obs_noise_var);
    get("prior_bias", cfg.belief.prior_bias);
    get("prior_sigma_w", cfg.belief.prior_sigma_w);
    get("prior_sigma_b", cfg.belief.prior_sigma_b);
    return cfg;
}

PlanConfig PlanConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(Error::Kind::Io, "cannot open planner config: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::vector<Vec2> PlanTree::path_to(int node) const {
    std::vector<Vec2> path;
    for (int cur = node; cur >= 0; cur = nodes[static_cast<std::size_t>(cur)].parent) {
        path.push_back(nodes[static_cast<std::size_t>(cur)].p);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

EdgeChecker::EdgeChecker(const lang::Program& program, double epsilon, double waypoint_spacing)
    : program_(program), epsilon_(epsilon), spacing_(waypoint_spacing) {}

EdgeChecker::Result EdgeChecker::check(const BeliefGrid& belief, Vec2 a, Vec2 b) const {
    // waypoints along the edge, grouped by the belief cell containing
    // them; the start point is where the robot already is, so the gate
    // covers the new motion (s >= 1)
    double length = distance(a, b);
    int steps = std::max(1, static_cast<int>(std::ceil(length / spacing_)));
    std::map<CellKey, std::vector<double>> groups;
    for (int s = 1; s <= steps; s++) {
        Vec2 p = a + (b - a) * (static_cast<double>(s) / steps);
        CellKey key = belief.key_of(p);
        std::array<double, 3> phi = belief.features(p, key);
        auto& rows = groups[key];
        rows.insert(rows.end(), phi.begin(), phi.end());
    }

    Result result;
    for (const auto& [key, rows] : groups) {
        const CellBelief& cell = belief.cell(key);
        lang::InputBinding binding;
        long long count = static_cast<long long>(rows.size() / 3);
        binding.set_array("x", {count, 3}, rows);
        binding.set_vector("Mu", {cell.mu[0], cell.mu[1], cell.mu[2]});
        binding.set_matrix("Sigma", {{cell.sigma(0, 0), cell.sigma(0, 1), cell.sigma(0, 2)},
                                     {cell.sigma(1, 0), cell.sigma(1, 1), cell.sigma(1, 2)},
                                     {cell.sigma(2, 0), cell.sigma(2, 1), cell.sigma(2, 2)}});
        lang::ValidatedProgram vp = lang::validate(program_, binding);
        infer::SafetyVerdict verdict = infer::query_safety(vp, binding, epsilon_);
        result.p *= verdict.p_lower;
    }
    result.safe = result.p >= epsilon_;
    return result;
}

namespace {

struct Candidate {
    int parent;
    double cost;
};

} // namespace

PlanResult plan_cycle(const World& world, const BeliefGrid& belief, Vec2 start, Vec2 goal,
                      const PlanConfig& config, const EdgeChecker& checker, SplitMix64& rng) {
    PlanResult result;
    PlanTree& tree = result.tree;
    tree.nodes.push_back({start, -1, 0.0});

    // sampling box around the course
    double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
    for (const Vec2& v : world.outer_bounds) {
        min_x = std::min(min_x, v.x);
        min_y = std::min(min_y, v.y);
        max_x = std::max(max_x, v.x);
        max_y = std::max(max_y, v.y);
    }

    // negative means rejected; otherwise the PSP edge probability
    auto edge_p = [&](Vec2 a, Vec2 b) -> double {
        if (!world.segment_inside_bounds(a, b) || world.segment_hits_known(a, b)) {
            result.geometry_rejected++;
            return -1.0;
        }
        EdgeChecker::Result checked = checker.check(belief, a, b);
        if (!checked.safe) {
            result.psp_pruned++;
            return -1.0;
        }
        return checked.p;
    };

    long long attempts_left =
        static_cast<long long>(config.n_nodes) * config.max_attempts_per_node;
    while (static_cast<int>(tree.nodes.size()) <= config.n_nodes && attempts_left-- > 0) {
        Vec2 sample;
        if (rng.next_unit_co() < config.goal_bias) {
            sample = goal;
        } else {
            sample = {min_x + (max_x - min_x) * rng.next_unit_co(),
                      min_y + (max_y - min_y) * rng.next_unit_co()};
        }
        if (!world.inside_bounds(sample)) continue;

        // nearest node
        int nearest = 0;
        double nearest_d = 1e300;
        for (std::size_t i = 0; i < tree.nodes.size(); i++) {
            double d = distance(tree.nodes[i].p, sample);
            if (d < nearest_d) {
                nearest_d = d;
                nearest = static_cast<int>(i);
            }
        }

        // steer
        Vec2 from = tree.nodes[static_cast<std::size_t>(nearest)].p;
        Vec2 to = sample;
        if (nearest_d > config.steer_radius) {
            to = from + (sample - from) * (config.steer_radius / nearest_d);
        }
        if (distance(from, to) < 1e-6) continue;

        // near set for parent choice and rewiring
        double n = static_cast<double>(tree.nodes.size()) + 1.0;
        double near_radius =
            std::min(config.steer_radius, config.rewire_gamma * std::sqrt(std::log(n) / n));
        std::vector<int> near;
        for (std::size_t i = 0; i < tree.nodes.size(); i++) {
            if (distance(tree.nodes[i].p, to) <= near_radius) near.push_back(static_cast<int>(i));
        }
        if (near.empty()) near.push_back(nearest);

        // cheapest feasible parent (checking the nearest node as fallback)
        Candidate best{-1, 1e300};
        double best_edge_p = 1.0;
        std::sort(near.begin(), near.end(), [&](int a, int b) {
            return tree.nodes[static_cast<std::size_t>(a)].cost +
                       distance(tree.nodes[static_cast<std::size_t>(a)].p, to) <
                   tree.nodes[static_cast<std::size_t>(b)].cost +
                       distance(tree.nodes[static_cast<std::size_t>(b)].p, to);
        });
        for (int candidate : near) {
            const TreeNode& node = tree.nodes[static_cast<std::size_t>(candidate)];
            double cost = node.cost + distance(node.p, to);
            if (cost >= best.cost) break;  // sorted: no cheaper candidate left
            double p = edge_p(node.p, to);
            if (p >= 0.0) {
                best = {candidate, cost};
                best_edge_p = p;
                break;
            }
        }
        if (best.parent < 0) continue;

        int new_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({to, best.parent, best.cost, best_edge_p});

        // rewire neighbors through the new node where it is cheaper
        for (int candidate : near) {
            TreeNode& node = tree.nodes[static_cast<std::size_t>(candidate)];
            double through = best.cost + distance(to, node.p);
            if (through + 1e-9 >= node.cost) continue;
            double p = edge_p(to, node.p);
            if (p >= 0.0) {
                node.parent = new_id;
                node.edge_p = p;
                double delta = through - node.cost;
                node.cost = through;
                // propagate the improvement to descendants
                for (std::size_t i = 0; i < tree.nodes.size(); i++) {
                    int cur = tree.nodes[i].parent;
                    while (cur >= 0) {
                        if (cur == candidate) {
                            tree.nodes[i].cost += delta;
                            break;
                        }
                        cur = tree.nodes[static_cast<std::size_t>(cur)].parent;
                    }
                }
            }
        }
    }

    // Dijkstra over the tree edges from the root
    std::size_t count = tree.nodes.size();
    std::vector<std::vector<int>> children(count);
    for (std::size_t i = 1; i < count; i++) {
        children[static_cast<std::size_t>(tree.nodes[i].parent)].push_back(static_cast<int>(i));
    }
    std::vector<double> dist(count, 1e300);
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    dist[0] = 0.0;
    queue.push({0.0, 0});
    while (!queue.empty()) {
        auto [d, id] = queue.top();
        queue.pop();
        if (d > dist[static_cast<std::size_t>(id)]) continue;
        for (int child : children[static_cast<std::size_t>(id)]) {
            double nd = d + distance(tree.nodes[static_cast<std::size_t>(id)].p,
                                     tree.nodes[static_cast<std::size_t>(child)].p);
            if (nd < dist[static_cast<std::size_t>(child)]) {
                dist[static_cast<std::size_t>(child)] = nd;
                queue.push({nd, child});
            }
        }
    }

    int best_goal = -1;
    double best_cost = 1e300;
    for (std::size_t i = 0; i < count; i++) {
        if (distance(tree.nodes[i].p, goal) <= config.goal_radius && dist[i] < best_cost) {
            best_cost = dist[i];
            best_goal = static_cast<int>(i);
        }
    }
    auto edge_probabilities = [&](int node) {
        std::vector<double> out;
        for (int cur = node; cur > 0; cur = tree.nodes[static_cast<std::size_t>(cur)].parent) {
            out.push_back(tree.nodes[static_cast<std::size_t>(cur)].edge_p);
        }
        std::reverse(out.begin(), out.end());
        return out;
    };

    if (best_goal >= 0) {
        result.reached_goal_region = true;
        result.path = tree.path_to(best_goal);
        result.path_edge_p = edge_probabilities(best_goal);
        return result;
    }

    if (config.fallback_progress) {
        // no node in the goal region: head for the node that gets closest
        int closest = -1;
        double closest_d = distance(start, goal);
        for (std::size_t i = 1; i < count; i++) {
            double d = distance(tree.nodes[i].p, goal);
            if (d < closest_d && dist[i] < 1e300) {
                closest_d = d;
                closest = static_cast<int>(i);
            }
        }
        if (closest >= 0) {
            result.path = tree.path_to(closest);
            result.path_edge_p = edge_probabilities(closest);
        }
    }
    return result;
}

} // namespace psp::plan
