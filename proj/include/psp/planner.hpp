#pragma once

#include "psp/belief.hpp"
#include "psp/parser.hpp"
#include "psp/rng.hpp"
#include "psp/world.hpp"

#include <string>
#include <vector>

namespace psp::plan {

struct PlanConfig {
    int n_nodes = 300;
    double epsilon = 0.5;
    double steer_radius = 18.0;
    double goal_radius = 12.0;
    double sensor_radius = 90.0;
    int n_rays = 360;
    double free_spacing = 6.0;
    double waypoint_spacing = 1.0;
    double traverse_distance = 30.0;
    int max_cycles = 60;
    double rewire_gamma = 80.0;   // near radius = gamma * sqrt(log n / n)
    double goal_bias = 0.05;
    int max_attempts_per_node = 30;
    // when no tree node reaches the goal region, steer toward the node
    // closest to the goal instead of holding in place
    bool fallback_progress = true;
    BeliefConfig belief;

    static PlanConfig from_file(const std::string& path);
    static PlanConfig from_json_text(const std::string& text);
};

struct TreeNode {
    Vec2 p;
    int parent = -1;
    double cost = 0.0;
    double edge_p = 1.0;  // PSP verdict for the edge from the parent
};

struct PlanTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    std::vector<Vec2> path_to(int node) const;
};

// The PSP edge gate: waypoints along the edge, grouped per belief cell,
// each group checked through the full probabilistic-program pipeline
// against that cell's classifier posterior.
class EdgeChecker {
public:
    EdgeChecker(const lang::Program& program, double epsilon, double waypoint_spacing);

    // product of per-cell-group safety probabilities and its verdict
    struct Result {
        bool safe = false;
        double p = 1.0;
    };
    Result check(const BeliefGrid& belief, Vec2 a, Vec2 b) const;

private:
    const lang::Program& program_;
    double epsilon_;
    double spacing_;
};

struct PlanResult {
    PlanTree tree;
    std::vector<Vec2> path;        // empty when no safe path was found
    std::vector<double> path_edge_p;  // PSP verdict per path edge
    bool reached_goal_region = false;
    int psp_pruned = 0;            // candidate edges rejected by the PSP gate
    int geometry_rejected = 0;
};

// One receding-horizon planning cycle: RRT* over the known world with the
// PSP gate on every candidate edge, then Dijkstra over the surviving tree
// to the cheapest node in the goal region.
PlanResult plan_cycle(const World& world, const BeliefGrid& belief, Vec2 start, Vec2 goal,
                      const PlanConfig& config, const EdgeChecker& checker, SplitMix64& rng);

} // namespace psp::plan
