#include "psp/graph.hpp"

#include "psp/linalg.hpp"
#include "psp/numfmt.hpp"
#include "psp/rng.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace psp::gm {

using slp::Instruction;
using slp::InstrId;
using slp::OpCode;
using slp::Operand;

const char* node_kind_name(NodeKind kind) {
    switch (kind) {
        case NodeKind::PrimitiveDraw: return "primitive";
        case NodeKind::ContinuousOp: return "continuous";
        case NodeKind::Comparator: return "comparator";
        case NodeKind::BooleanOp: return "boolean";
        case NodeKind::BooleanConst: return "const";
    }
    return "?";
}

AffineForm affine_add(const AffineForm& a, const AffineForm& b, double sign_b) {
    if (!a.affine || !b.affine) return AffineForm::non_affine();
    AffineForm out;
    out.affine = true;
    out.constant = a.constant + sign_b * b.constant;
    out.coeffs.reserve(a.coeffs.size() + b.coeffs.size());
    std::size_t i = 0, j = 0;
    while (i < a.coeffs.size() || j < b.coeffs.size()) {
        if (j >= b.coeffs.size() || (i < a.coeffs.size() && a.coeffs[i].first < b.coeffs[j].first)) {
            out.coeffs.push_back(a.coeffs[i++]);
        } else if (i >= a.coeffs.size() || b.coeffs[j].first < a.coeffs[i].first) {
            out.coeffs.emplace_back(b.coeffs[j].first, sign_b * b.coeffs[j].second);
            j++;
        } else {
            double c = a.coeffs[i].second + sign_b * b.coeffs[j].second;
            if (c != 0.0) out.coeffs.emplace_back(a.coeffs[i].first, c);
            i++;
            j++;
        }
    }
    return out;
}

AffineForm affine_scale(const AffineForm& a, double k) {
    if (!a.affine) return AffineForm::non_affine();
    AffineForm out = a;
    out.constant *= k;
    if (k == 0.0) {
        out.coeffs.clear();
        return out;
    }
    for (auto& [id, c] : out.coeffs) c *= k;
    return out;
}

std::vector<NodeId> GraphicalModel::primitive_ancestors(NodeId node) const {
    std::vector<bool> seen(nodes.size(), false);
    std::vector<NodeId> stack{node};
    std::vector<NodeId> result;
    seen[node] = true;
    while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        if (nodes[id].kind == NodeKind::PrimitiveDraw) {
            result.push_back(id);
        }
        for (NodeId parent : nodes[id].parents) {
            if (!seen[parent]) {
                seen[parent] = true;
                stack.push_back(parent);
            }
        }
    }
    std::sort(result.begin(), result.end());
    return result;
}

double GraphicalModel::form_mean(const AffineForm& f) const {
    double m = f.constant;
    for (const auto& [id, c] : f.coeffs) {
        const GraphNode& prim = nodes[id];
        m += c * blocks[static_cast<std::size_t>(prim.block)]
                     .mean[static_cast<std::size_t>(prim.block_index)];
    }
    return m;
}

double GraphicalModel::form_covariance(const AffineForm& f, const AffineForm& g) const {
    // blocks are independent: sum a^T Sigma b within each block
    double total = 0.0;
    for (const auto& [fid, fc] : f.coeffs) {
        const GraphNode& fp = nodes[fid];
        const GaussianBlock& blk = blocks[static_cast<std::size_t>(fp.block)];
        for (const auto& [gid, gc] : g.coeffs) {
            const GraphNode& gp = nodes[gid];
            if (gp.block != fp.block) continue;
            total += fc * gc *
                     blk.cov[static_cast<std::size_t>(fp.block_index * blk.dim + gp.block_index)];
        }
    }
    return total;
}

double GraphicalModel::form_variance(const AffineForm& f) const {
    double v = form_covariance(f, f);
    return v < 0.0 ? 0.0 : v;
}

GraphicalModel induce_graph(const slp::StraightLineProgram& folded) {
    GraphicalModel gm;
    gm.nodes.reserve(folded.size());
    std::vector<bool> random = slp::random_mask(folded);

    // restrict to the output's ancestor cone; dead draws disconnected by
    // folding must not spawn nodes
    std::vector<bool> live(folded.size(), false);
    {
        std::vector<InstrId> stack{folded.output};
        live[folded.output] = true;
        while (!stack.empty()) {
            InstrId id = stack.back();
            stack.pop_back();
            const Instruction& ins = folded.at(id);
            auto visit = [&](const Operand& o) {
                if (!o.is_const() && !live[o.id]) {
                    live[o.id] = true;
                    stack.push_back(o.id);
                }
            };
            if (ins.kind == Instruction::Kind::Unary) visit(ins.a);
            if (ins.kind == Instruction::Kind::Binary) {
                visit(ins.a);
                visit(ins.b);
            }
        }
    }

    // instruction -> node(s); multivariate draws expand to one primitive
    // node per component
    constexpr NodeId kNone = ~NodeId{0};
    std::vector<NodeId> node_of(folded.size(), kNone);
    std::vector<NodeId> first_component(folded.size(), kNone);

    auto operand_ref = [&](const Operand& o) -> NodeRef {
        switch (o.kind) {
            case Operand::Kind::Imm: return NodeRef::of_const(o.value);
            case Operand::Kind::BoolImm: return NodeRef::of_const(o.flag ? 1.0 : 0.0);
            case Operand::Kind::Ref: {
                if (node_of[o.id] != kNone) return NodeRef::of_node(node_of[o.id]);
                // reference to a non-random instruction (a folded ConstLoad)
                const Instruction& src = folded.at(o.id);
                double v = src.is_bool ? (src.flag ? 1.0 : 0.0) : src.value;
                return NodeRef::of_const(v);
            }
            case Operand::Kind::Elem:
                return NodeRef::of_node(first_component[o.id] + static_cast<NodeId>(o.comp));
        }
        return NodeRef::of_const(0.0);
    };

    for (InstrId id = 0; id < folded.size(); id++) {
        if (!live[id] || !random[id]) continue;
        const Instruction& ins = folded.at(id);
        switch (ins.kind) {
            case Instruction::Kind::Draw: {
                if (ins.draw.family == lang::DistFamily::Gaussian) {
                    GaussianBlock block;
                    block.dim = ins.draw.dim;
                    block.mean = ins.draw.mean;
                    block.cov = ins.draw.cov;
                    int block_id = static_cast<int>(gm.blocks.size());
                    for (int k = 0; k < ins.draw.dim; k++) {
                        GraphNode node;
                        node.kind = NodeKind::PrimitiveDraw;
                        node.instr = id;
                        node.family = ins.draw.family;
                        node.block = block_id;
                        node.block_index = k;
                        NodeId nid = static_cast<NodeId>(gm.nodes.size());
                        gm.nodes.push_back(std::move(node));
                        gm.primitives.push_back(nid);
                        block.members.push_back(nid);
                        if (k == 0) {
                            first_component[id] = nid;
                            node_of[id] = nid;  // scalar case resolves via node_of
                        }
                    }
                    gm.blocks.push_back(std::move(block));
                } else {
                    GraphNode node;
                    node.kind = NodeKind::PrimitiveDraw;
                    node.instr = id;
                    node.family = ins.draw.family;
                    node.param_a = ins.draw.a;
                    node.param_b = ins.draw.b;
                    NodeId nid = static_cast<NodeId>(gm.nodes.size());
                    gm.nodes.push_back(std::move(node));
                    gm.primitives.push_back(nid);
                    node_of[id] = nid;
                    first_component[id] = nid;
                }
                break;
            }
            case Instruction::Kind::Unary:
            case Instruction::Kind::Binary: {
                GraphNode node;
                node.instr = id;
                node.op = ins.op;
                node.arity = ins.kind == Instruction::Kind::Unary ? 1 : 2;
                node.a = operand_ref(ins.a);
                if (node.arity == 2) node.b = operand_ref(ins.b);
                bool boolean_result = ins.result_is_bool();
                if (!boolean_result) {
                    node.kind = NodeKind::ContinuousOp;
                } else if (slp::opcode_is_comparison(ins.op)) {
                    node.kind = NodeKind::Comparator;
                } else {
                    node.kind = NodeKind::BooleanOp;
                }
                if (node.a.is_node) node.parents.push_back(node.a.node);
                if (node.arity == 2 && node.b.is_node && (!node.a.is_node || node.b.node != node.a.node)) {
                    node.parents.push_back(node.b.node);
                }
                NodeId nid = static_cast<NodeId>(gm.nodes.size());
                gm.nodes.push_back(std::move(node));
                node_of[id] = nid;
                break;
            }
            default:
                break;
        }
    }

    if (node_of[folded.output] == kNone) {
        // fully folded program: a single constant output node
        const Instruction& out = folded.at(folded.output);
        GraphNode node;
        node.kind = NodeKind::BooleanConst;
        node.instr = folded.output;
        node.const_value = out.is_bool ? out.flag : out.value != 0.0;
        gm.output = static_cast<NodeId>(gm.nodes.size());
        gm.nodes.push_back(std::move(node));
    } else {
        gm.output = node_of[folded.output];
    }

    for (NodeId id = 0; id < gm.size(); id++) {
        for (NodeId parent : gm.nodes[id].parents) {
            gm.nodes[parent].children.push_back(id);
        }
    }
    return gm;
}

void affine_analysis(GraphicalModel& gm) {
    for (NodeId id = 0; id < gm.size(); id++) {
        GraphNode& node = gm.nodes[id];
        if (node.kind == NodeKind::PrimitiveDraw) {
            if (node.family == lang::DistFamily::Gaussian) {
                node.form.affine = true;
                node.form.constant = 0.0;
                node.form.coeffs = {{id, 1.0}};
            } else {
                node.form = AffineForm::non_affine();
            }
            continue;
        }
        if (node.kind != NodeKind::ContinuousOp) continue;

        auto ref_form = [&](const NodeRef& r) -> AffineForm {
            if (!r.is_node) return AffineForm::of_constant(r.constant);
            return gm.nodes[r.node].form;
        };

        AffineForm fa = ref_form(node.a);
        if (node.arity == 1) {
            node.form = node.op == OpCode::Neg ? affine_scale(fa, -1.0) : AffineForm::non_affine();
            continue;
        }
        AffineForm fb = ref_form(node.b);
        switch (node.op) {
            case OpCode::Add: node.form = affine_add(fa, fb, 1.0); break;
            case OpCode::Sub: node.form = affine_add(fa, fb, -1.0); break;
            case OpCode::Mul:
                if (fa.is_constant()) {
                    node.form = affine_scale(fb, fa.constant);
                } else if (fb.is_constant()) {
                    node.form = affine_scale(fa, fb.constant);
                } else {
                    node.form = AffineForm::non_affine();
                }
                break;
            case OpCode::Div:
                if (fb.is_constant() && fb.constant != 0.0) {
                    node.form = affine_scale(fa, 1.0 / fb.constant);
                } else {
                    node.form = AffineForm::non_affine();
                }
                break;
            default:
                node.form = AffineForm::non_affine();
                break;
        }
    }
}

void assign_cpts(GraphicalModel& gm) {
    for (NodeId id = 0; id < gm.size(); id++) {
        GraphNode& node = gm.nodes[id];
        if (node.kind == NodeKind::Comparator) {
            auto ref_form = [&](const NodeRef& r) -> AffineForm {
                if (!r.is_node) return AffineForm::of_constant(r.constant);
                return gm.nodes[r.node].form;
            };
            // event: (lhs - rhs) <cmp> 0
            AffineForm event = affine_add(ref_form(node.a), ref_form(node.b), -1.0);
            node.form = event;
            node.needs_sampling = !event.affine;
            switch (node.op) {
                case OpCode::Lt: node.cmp = CmpOp::Lt; break;
                case OpCode::Le: node.cmp = CmpOp::Le; break;
                case OpCode::Gt: node.cmp = CmpOp::Gt; break;
                case OpCode::Ge: node.cmp = CmpOp::Ge; break;
                case OpCode::Eq: node.cmp = CmpOp::Eq; break;
                case OpCode::Ne: node.cmp = CmpOp::Ne; break;
                default: break;
            }
            continue;
        }
        if (node.kind != NodeKind::BooleanOp) continue;

        // truth table over the random parents; constant operands are
        // folded into the table (identity/unary rows)
        auto eval = [&](bool a, bool b) {
            switch (node.op) {
                case OpCode::And: return a && b;
                case OpCode::Or: return a || b;
                case OpCode::Not: return !a;
                default: return false;
            }
        };
        int parent_count = static_cast<int>(node.parents.size());
        if (node.arity == 1 || node.op == OpCode::Not) {
            for (int bit = 0; bit < 2; bit++) {
                node.cpt[static_cast<std::size_t>(bit)] = eval(bit != 0, false) ? 1 : 0;
            }
        } else if (parent_count == 2) {
            for (int row = 0; row < 4; row++) {
                bool a = (row & 1) != 0;
                bool b = (row & 2) != 0;
                node.cpt[static_cast<std::size_t>(row)] = eval(a, b) ? 1 : 0;
            }
        } else if (parent_count == 1) {
            // one random parent; the other operand is a constant (or the
            // same node twice)
            bool a_const = !node.a.is_node;
            bool same = node.a.is_node && node.b.is_node && node.a.node == node.b.node;
            for (int bit = 0; bit < 2; bit++) {
                bool value = bit != 0;
                bool a = a_const ? node.a.constant != 0.0 : value;
                bool b = same ? value : (!node.b.is_node ? node.b.constant != 0.0 : value);
                node.cpt[static_cast<std::size_t>(bit)] = eval(a, b) ? 1 : 0;
            }
        }
    }
}

GraphicalModel compile_model(const slp::StraightLineProgram& folded) {
    GraphicalModel gm = induce_graph(folded);
    affine_analysis(gm);
    assign_cpts(gm);
    return gm;
}

std::string to_dot(const GraphicalModel& gm) {
    std::ostringstream out;
    out << "digraph model {\n";
    out << "  rankdir=TB;\n";
    for (NodeId id = 0; id < gm.size(); id++) {
        const GraphNode& node = gm.at(id);
        std::string label;
        std::string shape = "ellipse";
        switch (node.kind) {
            case NodeKind::PrimitiveDraw: {
                if (node.family == lang::DistFamily::Gaussian) {
                    const GaussianBlock& blk = gm.blocks[static_cast<std::size_t>(node.block)];
                    label = "N(" +
                            fmt_double(blk.mean[static_cast<std::size_t>(node.block_index)]) + ", " +
                            fmt_double(blk.cov[static_cast<std::size_t>(
                                node.block_index * blk.dim + node.block_index)]) +
                            ")";
                } else {
                    label = std::string(lang::dist_family_name(node.family)) + "(" +
                            fmt_double(node.param_a) +
                            (node.family == lang::DistFamily::Bernoulli
                                 ? ""
                                 : ", " + fmt_double(node.param_b)) +
                            ")";
                }
                shape = "doublecircle";
                break;
            }
            case NodeKind::ContinuousOp:
                label = slp::opcode_name(node.op);
                break;
            case NodeKind::Comparator:
                label = std::string("cmp ") + slp::opcode_name(node.op);
                shape = "diamond";
                break;
            case NodeKind::BooleanOp:
                label = slp::opcode_name(node.op);
                shape = "box";
                break;
            case NodeKind::BooleanConst:
                label = node.const_value ? "true" : "false";
                shape = "box";
                break;
        }
        out << "  n" << id << " [label=\"" << label << "\" shape=" << shape
            << " kind=" << node_kind_name(node.kind) << "];\n";
    }
    for (NodeId id = 0; id < gm.size(); id++) {
        for (NodeId parent : gm.at(id).parents) {
            out << "  n" << parent << " -> n" << id << ";\n";
        }
    }
    out << "  n" << gm.output << " [peripheries=2];\n";
    out << "}\n";
    return out.str();
}

ModelSimulator::ModelSimulator(const GraphicalModel& model) : gm(model) {
    values.resize(gm.size(), 0.0);
    block_chol.reserve(gm.blocks.size());
    for (const GaussianBlock& blk : gm.blocks) {
        Mat sigma(blk.dim, blk.dim);
        sigma.a = blk.cov;
        Mat lower;
        cholesky_psd(sigma, lower);
        block_chol.push_back(lower.a);
        block_values.emplace_back(static_cast<std::size_t>(blk.dim), 0.0);
    }
    block_stamp.assign(gm.blocks.size(), 0);
}

void ModelSimulator::eval_node(NodeId id, std::uint64_t seed, std::uint64_t sample_index) {
    const GraphNode& node = gm.at(id);
    auto ref_value = [&](const NodeRef& r) { return r.is_node ? values[r.node] : r.constant; };
    switch (node.kind) {
        case NodeKind::PrimitiveDraw: {
            if (node.family == lang::DistFamily::Gaussian) {
                const GaussianBlock& blk = gm.blocks[static_cast<std::size_t>(node.block)];
                std::vector<double>& vals = block_values[static_cast<std::size_t>(node.block)];
                if (block_stamp[static_cast<std::size_t>(node.block)] != stamp) {
                    SplitMix64 rng(mix_seed(seed, sample_index, node.instr));
                    const std::vector<double>& lower =
                        block_chol[static_cast<std::size_t>(node.block)];
                    double z[16];
                    for (int k = 0; k < blk.dim; k++) z[k] = rng.next_normal();
                    for (int r = 0; r < blk.dim; r++) {
                        double v = blk.mean[static_cast<std::size_t>(r)];
                        for (int c = 0; c <= r; c++) {
                            v += lower[static_cast<std::size_t>(r * blk.dim + c)] * z[c];
                        }
                        vals[static_cast<std::size_t>(r)] = v;
                    }
                    block_stamp[static_cast<std::size_t>(node.block)] = stamp;
                }
                values[id] = vals[static_cast<std::size_t>(node.block_index)];
            } else {
                SplitMix64 rng(mix_seed(seed, sample_index, node.instr));
                if (node.family == lang::DistFamily::Gamma) {
                    values[id] = rng.next_gamma(node.param_a, node.param_b);
                } else if (node.family == lang::DistFamily::Beta) {
                    values[id] = rng.next_beta(node.param_a, node.param_b);
                } else {
                    values[id] = rng.next_unit_co() < node.param_a ? 1.0 : 0.0;
                }
            }
            break;
        }
        case NodeKind::ContinuousOp:
        case NodeKind::Comparator:
        case NodeKind::BooleanOp: {
            double a = ref_value(node.a);
            double b = node.arity == 2 ? ref_value(node.b) : 0.0;
            switch (node.op) {
                case OpCode::Neg: values[id] = -a; break;
                case OpCode::Not: values[id] = a != 0.0 ? 0.0 : 1.0; break;
                case OpCode::Add: values[id] = a + b; break;
                case OpCode::Sub: values[id] = a - b; break;
                case OpCode::Mul: values[id] = a * b; break;
                case OpCode::Div: values[id] = a / b; break;
                case OpCode::Lt: values[id] = a < b ? 1.0 : 0.0; break;
                case OpCode::Le: values[id] = a <= b ? 1.0 : 0.0; break;
                case OpCode::Gt: values[id] = a > b ? 1.0 : 0.0; break;
                case OpCode::Ge: values[id] = a >= b ? 1.0 : 0.0; break;
                case OpCode::Eq: values[id] = a == b ? 1.0 : 0.0; break;
                case OpCode::Ne: values[id] = a != b ? 1.0 : 0.0; break;
                case OpCode::And: values[id] = (a != 0.0 && b != 0.0) ? 1.0 : 0.0; break;
                case OpCode::Or: values[id] = (a != 0.0 || b != 0.0) ? 1.0 : 0.0; break;
            }
            break;
        }
        case NodeKind::BooleanConst:
            values[id] = node.const_value ? 1.0 : 0.0;
            break;
    }
}

bool ModelSimulator::run(std::uint64_t seed, std::uint64_t sample_index) {
    stamp++;
    for (NodeId id = 0; id < gm.size(); id++) eval_node(id, seed, sample_index);
    return values[gm.output] != 0.0;
}

} // namespace psp::gm
