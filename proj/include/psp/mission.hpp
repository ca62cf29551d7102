#pragma once

#include "psp/planner.hpp"

#include <string>
#include <vector>

namespace psp::plan {

struct CycleLog {
    int cycle = 0;
    Vec2 pose;
    int target_gate = 0;
    int sensed_points = 0;
    int tree_nodes = 0;
    int psp_pruned = 0;
    double path_length = 0.0;
    double min_edge_p = 1.0;     // weakest PSP verdict among executed edges
    std::vector<Vec2> executed;  // polyline actually flown this cycle
    bool held = false;           // no safe path; re-sensed and replanned
};

struct MissionResult {
    std::uint64_t seed = 0;
    bool completed = false;
    int collisions = 0;
    int cycles = 0;
    double path_length = 0.0;
    int gates_passed = 0;
    std::vector<CycleLog> log;

    std::string summary_csv_row() const;
    std::string log_jsonl() const;
};

struct MissionConfig {
    PlanConfig plan;
    std::string svg_dir;  // per-cycle snapshots when non-empty
};

// Receding-horizon loop: sense, update the belief, plan with the PSP edge
// gate, fly a bounded prefix of the path, repeat until the final gate or
// the cycle cap. Executed motion is audited against the ground-truth
// world (including obstacles the planner never saw).
MissionResult run_mission(const World& world, const lang::Program& psp_program,
                          const MissionConfig& config, std::uint64_t seed);

const char* mission_summary_csv_header();

// Fig-style frame: bounds, obstacles, tree, path, executed trace.
std::string render_svg(const World& world, const PlanTree& tree, const std::vector<Vec2>& path,
                       const std::vector<Vec2>& trace, Vec2 pose, Vec2 goal);

} // namespace psp::plan
