#pragma once

#include "psp/slp.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace psp::gm {

using NodeId = std::uint32_t;

enum class NodeKind : std::uint8_t {
    PrimitiveDraw,   // scalar draw (one component of a multivariate draw)
    ContinuousOp,    // real-valued op over random-dependent values
    Comparator,      // continuous inputs -> boolean (the marginalization frontier)
    BooleanOp,       // boolean op over random-dependent booleans
    BooleanConst,    // fully folded output
};

const char* node_kind_name(NodeKind kind);

// Continuous node as constant + linear combination over scalar Gaussian
// primitives; NonAffine marks anything the closed-form path cannot carry
// (products of draws, non-Gaussian primitives, nonlinear ops).
struct AffineForm {
    bool affine = false;
    double constant = 0.0;
    std::vector<std::pair<NodeId, double>> coeffs;  // sorted by primitive id

    static AffineForm non_affine() { return {}; }
    static AffineForm of_constant(double c) { return {true, c, {}}; }
    bool is_constant() const { return affine && coeffs.empty(); }
};

AffineForm affine_add(const AffineForm& a, const AffineForm& b, double sign_b);
AffineForm affine_scale(const AffineForm& a, double k);

// One jointly-Gaussian draw: scalar draws get a 1x1 block, multivariate
// draws one block per instruction with the full covariance kept.
struct GaussianBlock {
    std::vector<double> mean;
    std::vector<double> cov;   // row-major k*k
    std::vector<NodeId> members;
    int dim = 0;
};

// Operand of a graph node: a parent node or a constant payload (constants
// never become nodes).
struct NodeRef {
    bool is_node = false;
    NodeId node = 0;
    double constant = 0.0;  // booleans as 0/1

    static NodeRef of_node(NodeId id) { return {true, id, 0.0}; }
    static NodeRef of_const(double v) { return {false, 0, v}; }
};

enum class CmpOp : std::uint8_t { Lt, Le, Gt, Ge, Eq, Ne };

struct GraphNode {
    NodeKind kind = NodeKind::ContinuousOp;
    slp::InstrId instr = 0;  // provenance

    // PrimitiveDraw
    lang::DistFamily family = lang::DistFamily::Gaussian;
    int block = -1;       // Gaussian block index
    int block_index = 0;  // component within the block
    double param_a = 0.0, param_b = 0.0;  // Gamma/Beta/Bernoulli

    // ContinuousOp / Comparator / BooleanOp
    slp::OpCode op = slp::OpCode::Add;
    int arity = 0;
    NodeRef a, b;

    // filled by affine_analysis (continuous nodes and comparators)
    AffineForm form;

    // filled by assign_cpts
    CmpOp cmp = CmpOp::Gt;       // comparator: event form <cmp> 0
    bool needs_sampling = false; // comparator without a usable affine form
    std::array<std::uint8_t, 4> cpt{};  // boolean nodes: row index = parent bits
    bool const_value = false;    // BooleanConst

    std::vector<NodeId> parents;
    std::vector<NodeId> children;

    bool is_boolean() const {
        return kind == NodeKind::Comparator || kind == NodeKind::BooleanOp ||
               kind == NodeKind::BooleanConst;
    }
};

struct GraphicalModel {
    std::vector<GraphNode> nodes;
    std::vector<GaussianBlock> blocks;
    std::vector<NodeId> primitives;  // the set P of direct probabilistic assignments
    NodeId output = 0;

    const GraphNode& at(NodeId id) const { return nodes[id]; }
    GraphNode& at(NodeId id) { return nodes[id]; }
    std::size_t size() const { return nodes.size(); }

    // ancestor set Asc(node) intersected with the primitive set
    std::vector<NodeId> primitive_ancestors(NodeId node) const;

    // mean / variance / covariance of affine forms over the blocks
    double form_mean(const AffineForm& f) const;
    double form_variance(const AffineForm& f) const;
    double form_covariance(const AffineForm& f, const AffineForm& g) const;
};

// Spawns a node for every random-dependent instruction in the output's
// ancestor cone; adds edges when one node's value feeds another.
GraphicalModel induce_graph(const slp::StraightLineProgram& folded);

// Annotates every continuous node (and each comparator's event) with its
// affine form over the Gaussian primitives; never fails, since non-affine
// nodes are marked, not rejected.
void affine_analysis(GraphicalModel& gm);

// Attaches deterministic truth tables to boolean nodes and the
// (form, op, threshold-at-zero) payload to comparators; comparators with
// no affine form are flagged for the sampling path.
void assign_cpts(GraphicalModel& gm);

// induce + affine + cpts
GraphicalModel compile_model(const slp::StraightLineProgram& folded);

// Graphviz dump for debugging and goldens.
std::string to_dot(const GraphicalModel& gm);

// Ancestral forward simulation of the model; used by the cross-checks and
// the per-leaf sampling fallback. Boolean nodes yield 0/1. Draw values
// match the SLP simulator bit for bit (same per-instruction streams).
struct ModelSimulator {
    explicit ModelSimulator(const GraphicalModel& gm);

    // values for all nodes given (seed, sample); returns output truth
    bool run(std::uint64_t seed, std::uint64_t sample_index);
    // evaluate one node (parents must already be evaluated this sample)
    void eval_node(NodeId id, std::uint64_t seed, std::uint64_t sample_index);
    double value(NodeId id) const { return values[id]; }

    const GraphicalModel& gm;
    std::vector<double> values;
    std::vector<std::vector<double>> block_chol;
    std::vector<std::vector<double>> block_values;
    std::vector<std::uint64_t> block_stamp;
    std::uint64_t stamp = 0;
};

} // namespace psp::gm
