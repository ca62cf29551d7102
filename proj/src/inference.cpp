#include "psp/inference.hpp"

#include "psp/factor.hpp"
#include "psp/normal.hpp"
#include "psp/numfmt.hpp"
#include "psp/rng.hpp"
#include "psp/unroll.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

namespace psp::infer {

using gm::AffineForm;
using gm::GraphicalModel;
using gm::GraphNode;
using gm::NodeId;
using gm::NodeKind;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

IntervalSet IntervalSet::half_line_above(double t, bool closed) {
    return IntervalSet{{{t, kInf, closed, false}}};
}

IntervalSet IntervalSet::half_line_below(double t, bool closed) {
    return IntervalSet{{{-kInf, t, false, closed}}};
}

IntervalSet IntervalSet::point(double t) {
    return IntervalSet{{{t, t, true, true}}};
}

IntervalSet IntervalSet::everything_except(double t) {
    return IntervalSet{{{-kInf, t, false, false}, {t, kInf, false, false}}};
}

namespace {

bool intervals_touch(const IntervalSet::Interval& a, const IntervalSet::Interval& b) {
    // overlap or adjacency (e.g. (-inf, t] and (t, inf) merge; two open
    // intervals meeting at t do not cover t and stay separate)
    if (a.hi < b.lo || b.hi < a.lo) return false;
    if (a.hi == b.lo) return a.hi_closed || b.lo_closed;
    if (b.hi == a.lo) return b.hi_closed || a.lo_closed;
    return true;
}

} // namespace

IntervalSet IntervalSet::unite(const IntervalSet& other) const {
    std::vector<Interval> all = parts;
    all.insert(all.end(), other.parts.begin(), other.parts.end());
    std::sort(all.begin(), all.end(), [](const Interval& a, const Interval& b) {
        if (a.lo != b.lo) return a.lo < b.lo;
        return a.lo_closed && !b.lo_closed;
    });
    IntervalSet out;
    for (const Interval& cur : all) {
        if (!out.parts.empty() && intervals_touch(out.parts.back(), cur)) {
            Interval& last = out.parts.back();
            if (cur.hi > last.hi) {
                last.hi = cur.hi;
                last.hi_closed = cur.hi_closed;
            } else if (cur.hi == last.hi) {
                last.hi_closed = last.hi_closed || cur.hi_closed;
            }
        } else {
            out.parts.push_back(cur);
        }
    }
    return out;
}

IntervalSet IntervalSet::intersect(const IntervalSet& other) const {
    IntervalSet out;
    for (const Interval& a : parts) {
        for (const Interval& b : other.parts) {
            double lo = std::max(a.lo, b.lo);
            double hi = std::min(a.hi, b.hi);
            if (lo > hi) continue;
            bool lo_closed = (a.lo == lo ? a.lo_closed : true) && (b.lo == lo ? b.lo_closed : true);
            bool hi_closed = (a.hi == hi ? a.hi_closed : true) && (b.hi == hi ? b.hi_closed : true);
            if (lo == hi && !(lo_closed && hi_closed)) continue;
            out.parts.push_back({lo, hi, lo_closed, hi_closed});
        }
    }
    std::sort(out.parts.begin(), out.parts.end(),
              [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
    return out;
}

bool IntervalSet::one_sided() const {
    if (parts.size() != 1) return false;
    const Interval& only = parts[0];
    return (only.lo == -kInf) != (only.hi == kInf);
}

double IntervalSet::probability(double mean, double var) const {
    double total = 0.0;
    if (var <= 0.0) {
        for (const Interval& part : parts) {
            bool above_lo = part.lo == -kInf || mean > part.lo || (mean == part.lo && part.lo_closed);
            bool below_hi = part.hi == kInf || mean < part.hi || (mean == part.hi && part.hi_closed);
            if (above_lo && below_hi) return 1.0;
        }
        return 0.0;
    }
    double sd = std::sqrt(var);
    for (const Interval& part : parts) {
        double hi_cdf = part.hi == kInf ? 1.0 : normal_cdf((part.hi - mean) / sd);
        double lo_cdf = part.lo == -kInf ? 0.0 : normal_cdf((part.lo - mean) / sd);
        total += hi_cdf - lo_cdf;
    }
    if (total < 0.0) total = 0.0;
    if (total > 1.0) total = 1.0;
    return total;
}

namespace {

// canonical statistic: the coefficient part of the event form, sign
// normalized so that the first coefficient is positive; the constant is
// pushed into the event threshold
struct CanonicalEvent {
    AffineForm stat;      // constant == 0
    IntervalSet event;
    bool flipped = false;
};

CanonicalEvent canonicalize(const AffineForm& form, gm::CmpOp op) {
    // event: form <op> 0, i.e. stat <op> -constant with stat = form - c
    CanonicalEvent out;
    out.stat = form;
    out.stat.constant = 0.0;
    double threshold = -form.constant;
    bool flip = !out.stat.coeffs.empty() && out.stat.coeffs.front().second < 0.0;
    if (flip) {
        for (auto& [id, c] : out.stat.coeffs) c = -c;
        threshold = -threshold;
        out.flipped = true;
    }
    auto mirrored = [&](gm::CmpOp o) {
        switch (o) {
            case gm::CmpOp::Lt: return gm::CmpOp::Gt;
            case gm::CmpOp::Le: return gm::CmpOp::Ge;
            case gm::CmpOp::Gt: return gm::CmpOp::Lt;
            case gm::CmpOp::Ge: return gm::CmpOp::Le;
            default: return o;
        }
    };
    gm::CmpOp eff = flip ? mirrored(op) : op;
    switch (eff) {
        case gm::CmpOp::Gt: out.event = IntervalSet::half_line_above(threshold, false); break;
        case gm::CmpOp::Ge: out.event = IntervalSet::half_line_above(threshold, true); break;
        case gm::CmpOp::Lt: out.event = IntervalSet::half_line_below(threshold, false); break;
        case gm::CmpOp::Le: out.event = IntervalSet::half_line_below(threshold, true); break;
        case gm::CmpOp::Eq: out.event = IntervalSet::point(threshold); break;
        case gm::CmpOp::Ne: out.event = IntervalSet::everything_except(threshold); break;
    }
    return out;
}

bool same_statistic(const AffineForm& a, const AffineForm& b) {
    return a.affine && b.affine && a.coeffs == b.coeffs;
}

std::vector<NodeId> ancestors_sorted(const GraphicalModel& model, NodeId node) {
    std::vector<bool> seen(model.size(), false);
    std::vector<NodeId> stack{node};
    seen[node] = true;
    std::vector<NodeId> out;
    while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        out.push_back(id);
        for (NodeId parent : model.at(id).parents) {
            if (!seen[parent]) {
                seen[parent] = true;
                stack.push_back(parent);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

BernoulliLeaf marginalize_leaf(const GraphicalModel& model, NodeId comparator) {
    const GraphNode& node = model.at(comparator);
    if (node.kind != NodeKind::Comparator || node.needs_sampling) {
        fail(Error::Kind::Inference, "node has no Gaussian affine form; use the sampling path");
    }
    BernoulliLeaf leaf;
    leaf.node = comparator;
    leaf.method = LeafMethod::AnalyticGaussian;
    CanonicalEvent canon = canonicalize(node.form, node.cmp);
    leaf.stat = canon.stat;
    leaf.event = canon.event;
    leaf.two_sided = !canon.event.one_sided();
    double mean = model.form_mean(leaf.stat);
    double var = model.form_variance(leaf.stat);
    leaf.p_true = leaf.event.probability(mean, var);
    for (const auto& [id, c] : leaf.stat.coeffs) {
        (void)c;
        leaf.prim_support.push_back(id);
    }
    return leaf;
}

BernoulliLeaf marginalize_leaf_mc(const GraphicalModel& model, NodeId comparator, long long n,
                                  std::uint64_t seed) {
    if (n < 100) {
        fail(Error::Kind::Inference, "sampling a leaf needs at least 100 samples");
    }
    const GraphNode& target = model.at(comparator);
    if (!target.is_boolean()) {
        fail(Error::Kind::Inference, "sampling path expects a boolean-valued node");
    }

    // evaluate only the comparator's ancestor cone, in id (= topological)
    // order
    std::vector<NodeId> cone = ancestors_sorted(model, comparator);
    gm::ModelSimulator sim(model);

    long long hits = 0;
    for (long long s = 0; s < n; s++) {
        sim.stamp++;
        for (NodeId id : cone) {
            sim.eval_node(id, seed, static_cast<std::uint64_t>(s));
        }
        if (sim.value(comparator) != 0.0) hits++;
    }

    BernoulliLeaf leaf;
    leaf.node = comparator;
    leaf.method = LeafMethod::MonteCarlo;
    leaf.mc_samples = n;
    leaf.mc_seed = seed;
    leaf.p_true = static_cast<double>(hits) / static_cast<double>(n);
    for (NodeId id : cone) {
        if (model.at(id).kind == NodeKind::PrimitiveDraw) leaf.prim_support.push_back(id);
    }
    leaf.two_sided = true;  // unknown shape; never treated as one-sided
    return leaf;
}

namespace {

// Wilson score interval bound, shared with the oracle module's interface
double wilson_lower_bound(double p_hat, long long n, double confidence) {
    double z = normal_quantile(0.5 + confidence / 2.0);
    double nn = static_cast<double>(n);
    double denom = 1.0 + z * z / nn;
    double center = p_hat + z * z / (2.0 * nn);
    double half = z * std::sqrt(p_hat * (1.0 - p_hat) / nn + z * z / (4.0 * nn * nn));
    double lo = (center - half) / denom;
    return lo < 0.0 ? 0.0 : lo;
}

} // namespace

std::vector<BernoulliLeaf> marginalize_all(const GraphicalModel& model, const QueryOptions& opts) {
    std::vector<int> leaf_at(model.size(), -1);  // node id -> slot in leaves
    std::vector<BernoulliLeaf> leaves;
    for (NodeId id = 0; id < model.size(); id++) {
        const GraphNode& node = model.at(id);
        if (node.kind != NodeKind::Comparator) continue;
        BernoulliLeaf leaf;
        if (node.needs_sampling) {
            leaf = marginalize_leaf_mc(model, id, opts.mc_samples, mix_seed(opts.seed, id));
            if (opts.certify) {
                leaf.mc_lower_bound = true;
                leaf.p_true = wilson_lower_bound(leaf.p_true, leaf.mc_samples, opts.mc_confidence);
            }
        } else {
            leaf = marginalize_leaf(model, id);
        }
        leaf_at[id] = static_cast<int>(leaves.size());
        leaves.push_back(std::move(leaf));
    }

    // merge two-sided patterns: a boolean combiner whose two parents are
    // single-use analytic leaves over the same statistic becomes one exact
    // interval leaf
    std::vector<bool> dead(leaves.size(), false);
    bool changed = true;
    while (changed) {
        changed = false;
        for (NodeId id = 0; id < model.size(); id++) {
            const GraphNode& node = model.at(id);
            if (node.kind != NodeKind::BooleanOp || leaf_at[id] >= 0) continue;
            if (node.op != slp::OpCode::And && node.op != slp::OpCode::Or) continue;
            if (node.parents.size() != 2) continue;
            NodeId pa = node.parents[0];
            NodeId pb = node.parents[1];
            if (leaf_at[pa] < 0 || leaf_at[pb] < 0) continue;
            const BernoulliLeaf& la = leaves[static_cast<std::size_t>(leaf_at[pa])];
            const BernoulliLeaf& lb = leaves[static_cast<std::size_t>(leaf_at[pb])];
            if (la.method != LeafMethod::AnalyticGaussian ||
                lb.method != LeafMethod::AnalyticGaussian) {
                continue;
            }
            if (!same_statistic(la.stat, lb.stat)) continue;
            if (model.at(pa).children.size() != 1 || model.at(pb).children.size() != 1) continue;

            BernoulliLeaf merged;
            merged.node = id;
            merged.method = LeafMethod::AnalyticGaussian;
            merged.stat = la.stat;
            merged.event = node.op == slp::OpCode::Or ? la.event.unite(lb.event)
                                                      : la.event.intersect(lb.event);
            merged.two_sided = !merged.event.one_sided();
            merged.p_true =
                merged.event.probability(model.form_mean(merged.stat), model.form_variance(merged.stat));
            merged.prim_support = la.prim_support;
            dead[static_cast<std::size_t>(leaf_at[pa])] = true;
            dead[static_cast<std::size_t>(leaf_at[pb])] = true;
            leaf_at[pa] = -1;
            leaf_at[pb] = -1;
            leaf_at[id] = static_cast<int>(leaves.size());
            dead.push_back(false);
            leaves.push_back(std::move(merged));
            changed = true;
        }
    }
    std::size_t keep = 0;
    for (std::size_t i = 0; i < leaves.size(); i++) {
        if (!dead[i]) {
            if (keep != i) leaves[keep] = std::move(leaves[i]);
            keep++;
        }
    }
    leaves.resize(keep);

    // shared-ancestry groups: leaves touching a common primitive are
    // united; transitive closure is the right granularity for the
    // certificate's joint-Gaussian argument
    std::vector<int> group(leaves.size());
    for (std::size_t i = 0; i < group.size(); i++) group[i] = static_cast<int>(i);
    std::function<int(int)> find = [&](int x) {
        while (group[static_cast<std::size_t>(x)] != x) {
            group[static_cast<std::size_t>(x)] =
                group[static_cast<std::size_t>(group[static_cast<std::size_t>(x)])];
            x = group[static_cast<std::size_t>(x)];
        }
        return x;
    };
    std::vector<int> owner_of_prim(model.size(), -1);
    for (std::size_t i = 0; i < leaves.size(); i++) {
        for (NodeId prim : leaves[i].prim_support) {
            int& owner = owner_of_prim[prim];
            if (owner < 0) {
                owner = static_cast<int>(i);
            } else {
                group[static_cast<std::size_t>(find(static_cast<int>(i)))] = find(owner);
            }
        }
    }
    std::vector<int> group_size(leaves.size(), 0);
    for (std::size_t i = 0; i < leaves.size(); i++) group_size[static_cast<std::size_t>(find(static_cast<int>(i)))]++;
    for (std::size_t i = 0; i < leaves.size(); i++) {
        int g = find(static_cast<int>(i));
        leaves[i].shared_group = group_size[static_cast<std::size_t>(g)] > 1 ? g : -1;
    }
    // explicit per-leaf sets are diagnostics; skip them on large models
    if (leaves.size() <= 256) {
        for (std::size_t i = 0; i < leaves.size(); i++) {
            for (std::size_t j = i + 1; j < leaves.size(); j++) {
                const auto& a = leaves[i].prim_support;
                const auto& b = leaves[j].prim_support;
                std::size_t x = 0, y = 0;
                bool share = false;
                while (x < a.size() && y < b.size()) {
                    if (a[x] == b[y]) {
                        share = true;
                        break;
                    }
                    if (a[x] < b[y]) x++; else y++;
                }
                if (share) {
                    leaves[i].shares_ancestry_with.insert(leaves[j].node);
                    leaves[j].shares_ancestry_with.insert(leaves[i].node);
                }
            }
        }
    }
    return leaves;
}

namespace {

struct ResidualGraph {
    // per node: -2 not in the residual graph, -1 internal boolean node,
    // >= 0 index into leaves
    std::vector<int> role;
    std::vector<int> child_count;  // children within the residual graph

    bool is_tree = true;
};

ResidualGraph residual_graph(const GraphicalModel& model,
                             const std::vector<BernoulliLeaf>& leaves) {
    ResidualGraph rg;
    rg.role.assign(model.size(), -2);
    rg.child_count.assign(model.size(), 0);
    for (std::size_t i = 0; i < leaves.size(); i++) {
        rg.role[leaves[i].node] = static_cast<int>(i);
    }
    std::vector<bool> absorbed(model.size(), false);
    for (const BernoulliLeaf& leaf : leaves) {
        const GraphNode& node = model.at(leaf.node);
        if (node.kind == NodeKind::BooleanOp) {
            absorbed[node.parents[0]] = true;
            absorbed[node.parents[1]] = true;
        }
    }
    for (NodeId id = 0; id < model.size(); id++) {
        if (model.at(id).kind != NodeKind::BooleanOp) continue;
        if (rg.role[id] == -2 && !absorbed[id]) rg.role[id] = -1;
    }
    for (NodeId id = 0; id < model.size(); id++) {
        if (rg.role[id] != -1) continue;
        const GraphNode& node = model.at(id);
        for (NodeId parent : node.parents) {
            if (rg.role[parent] == -2) {
                // parent of an internal boolean node must itself be residual
                rg.is_tree = false;
                continue;
            }
            rg.child_count[parent]++;
        }
    }
    for (NodeId id = 0; id < model.size(); id++) {
        if (rg.role[id] == -2) continue;
        if (id != model.output && rg.child_count[id] != 1) rg.is_tree = false;
        if (id == model.output && rg.child_count[id] != 0) rg.is_tree = false;
    }
    return rg;
}

} // namespace

double boolean_inference(const GraphicalModel& model, const std::vector<BernoulliLeaf>& leaves,
                         int width_cap) {
    const GraphNode& out_node = model.at(model.output);
    if (out_node.kind == NodeKind::BooleanConst) {
        return out_node.const_value ? 1.0 : 0.0;
    }

    ResidualGraph rg = residual_graph(model, leaves);

    if (rg.is_tree) {
        // every residual node feeds exactly one consumer: subtrees carry
        // disjoint leaf sets, so probabilities propagate in one pass (this
        // is variable elimination in leaf-to-root order)
        std::vector<double> prob(model.size(), 0.0);
        for (NodeId id = 0; id < model.size(); id++) {
            if (rg.role[id] == -2) continue;
            if (rg.role[id] >= 0) {
                prob[id] = leaves[static_cast<std::size_t>(rg.role[id])].p_true;
                continue;
            }
            const GraphNode& node = model.at(id);
            if (node.parents.size() == 2) {
                double pa = prob[node.parents[0]];
                double pb = prob[node.parents[1]];
                double p = 0.0;
                for (int row = 0; row < 4; row++) {
                    if (!node.cpt[static_cast<std::size_t>(row)]) continue;
                    double wa = (row & 1) ? pa : 1.0 - pa;
                    double wb = (row & 2) ? pb : 1.0 - pb;
                    p += wa * wb;
                }
                prob[id] = p;
            } else {
                double pa = prob[node.parents[0]];
                prob[id] = (node.cpt[1] ? pa : 0.0) + (node.cpt[0] ? 1.0 - pa : 0.0);
            }
        }
        return prob[model.output];
    }

    std::vector<Factor> factors;
    for (const BernoulliLeaf& leaf : leaves) {
        factors.push_back(Factor::bernoulli(leaf.node, leaf.p_true));
    }
    for (NodeId id = 0; id < model.size(); id++) {
        if (rg.role[id] != -1) continue;
        const GraphNode& node = model.at(id);

        // deterministic CPT factor over (node, parents); induce_graph
        // already deduplicates a node used as both operands
        const std::vector<NodeId>& parents = node.parents;
        Factor f;
        f.vars.push_back(id);
        for (NodeId p : parents) f.vars.push_back(p);
        std::sort(f.vars.begin(), f.vars.end());
        f.table.assign(std::size_t{1} << f.vars.size(), 0.0);

        auto bit_of = [&](NodeId v, std::size_t row) -> bool {
            auto it = std::lower_bound(f.vars.begin(), f.vars.end(), v);
            std::size_t pos = static_cast<std::size_t>(it - f.vars.begin());
            return ((row >> pos) & 1) != 0;
        };
        for (std::size_t row = 0; row < f.table.size(); row++) {
            bool self = bit_of(id, row);
            bool expected;
            if (parents.size() == 2) {
                std::size_t key = (bit_of(parents[0], row) ? 1u : 0u) |
                                  (bit_of(parents[1], row) ? 2u : 0u);
                expected = node.cpt[key] != 0;
            } else {
                expected = node.cpt[bit_of(parents[0], row) ? 1 : 0] != 0;
            }
            f.table[row] = self == expected ? 1.0 : 0.0;
        }
        factors.push_back(std::move(f));
    }

    return eliminate_to_prob(std::move(factors), model.output, width_cap);
}

Certificate certify_lower_bound(const GraphicalModel& model,
                                const std::vector<BernoulliLeaf>& leaves) {
    Certificate cert;
    const GraphNode& out_node = model.at(model.output);
    if (out_node.kind == NodeKind::BooleanConst) {
        cert.certified = true;
        return cert;
    }

    // one reverse pass: a node is "conjunctive to the output" when every
    // consumer is an AND (or an identity pass-through) that is itself
    // conjunctive to the output
    std::vector<std::uint8_t> conjunctive(model.size(), 0);
    std::set<NodeId> leaf_nodes;
    for (const BernoulliLeaf& leaf : leaves) leaf_nodes.insert(leaf.node);
    for (NodeId rid = model.size(); rid-- > 0;) {
        if (rid == model.output) {
            conjunctive[rid] = 1;
            continue;
        }
        const GraphNode& node = model.at(rid);
        if (node.children.empty()) {
            conjunctive[rid] = 0;
            continue;
        }
        std::uint8_t ok = 1;
        for (NodeId child : node.children) {
            const GraphNode& consumer = model.at(child);
            bool combiner_ok = false;
            if (consumer.kind == NodeKind::BooleanOp && !leaf_nodes.count(child)) {
                if (consumer.op == slp::OpCode::And) {
                    combiner_ok = true;
                } else if (consumer.op == slp::OpCode::Or && consumer.parents.size() == 1) {
                    // false || x (identity); true || x was folded away
                    combiner_ok = consumer.cpt[0] == 0 && consumer.cpt[1] == 1;
                }
            }
            if (!combiner_ok || !conjunctive[child]) {
                ok = 0;
                break;
            }
        }
        conjunctive[rid] = ok;
    }

    for (const BernoulliLeaf& leaf : leaves) {
        if (leaf.method == LeafMethod::MonteCarlo && !leaf.mc_lower_bound) {
            cert.reasons.push_back("leaf " + std::to_string(leaf.node) +
                                   " is a sampled point estimate without a confidence bound");
        }
        if (!leaf.has_shared_ancestry()) continue;

        if (leaf.method == LeafMethod::MonteCarlo) {
            cert.reasons.push_back("leaf " + std::to_string(leaf.node) +
                                   " is sampled but shares ancestry with other leaves");
            continue;
        }
        if (leaf.two_sided) {
            cert.reasons.push_back("leaf " + std::to_string(leaf.node) +
                                   " is two-sided and shares ancestry with other leaves");
            continue;
        }
        if (!(leaf.node == model.output || conjunctive[leaf.node])) {
            cert.reasons.push_back("leaf " + std::to_string(leaf.node) +
                                   " reaches the output through a non-conjunctive combiner");
        }
    }

    // pairwise orientation-adjusted correlations within each dependence
    // group; an early exit above already flagged two-sided/MC members
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < leaves.size(); i++) {
        const BernoulliLeaf& leaf = leaves[i];
        if (leaf.has_shared_ancestry() && leaf.method == LeafMethod::AnalyticGaussian &&
            !leaf.two_sided) {
            groups[leaf.shared_group].push_back(i);
        }
    }
    for (const auto& [gid, members] : groups) {
        (void)gid;
        if (members.size() < 2) continue;
        // oriented statistic: flip "stat < t" events so all read "stat > t"
        std::vector<double> sign(members.size());
        std::vector<double> sd(members.size());
        for (std::size_t k = 0; k < members.size(); k++) {
            const BernoulliLeaf& leaf = leaves[members[k]];
            sign[k] = leaf.event.parts[0].hi == std::numeric_limits<double>::infinity() ? 1.0 : -1.0;
            sd[k] = std::sqrt(model.form_variance(leaf.stat));
        }

        // dense fast path when the whole group draws from one Gaussian
        // block (the usual shape: one classifier draw, many waypoints)
        int common_block = -2;
        for (std::size_t k = 0; k < members.size() && common_block != -3; k++) {
            for (const auto& [prim, c] : leaves[members[k]].stat.coeffs) {
                (void)c;
                int blk = model.at(prim).block;
                if (common_block == -2) common_block = blk;
                if (blk != common_block) common_block = -3;
            }
        }

        bool flagged = false;
        if (common_block >= 0) {
            const gm::GaussianBlock& blk = model.blocks[static_cast<std::size_t>(common_block)];
            int dim = blk.dim;
            std::vector<double> coeff(members.size() * static_cast<std::size_t>(dim), 0.0);
            std::vector<double> sigma_coeff(coeff.size(), 0.0);
            for (std::size_t k = 0; k < members.size(); k++) {
                double* a = &coeff[k * static_cast<std::size_t>(dim)];
                for (const auto& [prim, c] : leaves[members[k]].stat.coeffs) {
                    a[model.at(prim).block_index] = sign[k] * c;
                }
                double* sa = &sigma_coeff[k * static_cast<std::size_t>(dim)];
                for (int r = 0; r < dim; r++) {
                    double v = 0.0;
                    for (int c2 = 0; c2 < dim; c2++) {
                        v += blk.cov[static_cast<std::size_t>(r * dim + c2)] * a[c2];
                    }
                    sa[r] = v;
                }
            }
            for (std::size_t i = 0; i < members.size() && !flagged; i++) {
                const double* ai = &coeff[i * static_cast<std::size_t>(dim)];
                for (std::size_t j = i + 1; j < members.size(); j++) {
                    const double* sj = &sigma_coeff[j * static_cast<std::size_t>(dim)];
                    double cov = 0.0;
                    for (int r = 0; r < dim; r++) cov += ai[r] * sj[r];
                    double scale = sd[i] * sd[j];
                    if (cov < -1e-12 * (scale > 0 ? scale : 1.0)) {
                        cert.reasons.push_back("leaves " + std::to_string(leaves[members[i]].node) +
                                               " and " + std::to_string(leaves[members[j]].node) +
                                               " share ancestry with negative correlation");
                        flagged = true;
                        break;
                    }
                }
            }
        } else {
            for (std::size_t i = 0; i < members.size() && !flagged; i++) {
                const BernoulliLeaf& a = leaves[members[i]];
                for (std::size_t j = i + 1; j < members.size(); j++) {
                    const BernoulliLeaf& b = leaves[members[j]];
                    double cov = sign[i] * sign[j] * model.form_covariance(a.stat, b.stat);
                    double scale = sd[i] * sd[j];
                    if (cov < -1e-12 * (scale > 0 ? scale : 1.0)) {
                        cert.reasons.push_back("leaves " + std::to_string(a.node) + " and " +
                                               std::to_string(b.node) +
                                               " share ancestry with negative correlation");
                        flagged = true;
                        break;
                    }
                }
            }
        }
    }

    cert.certified = cert.reasons.empty();
    return cert;
}

std::string SafetyVerdict::to_json_text() const {
    nlohmann::ordered_json j;
    j["p_lower"] = p_lower;
    j["epsilon"] = epsilon;
    j["safe"] = safe;
    j["certified"] = certified;
    nlohmann::ordered_json leaves_json = nlohmann::ordered_json::array();
    for (const LeafDiagnostic& leaf : per_leaf) {
        nlohmann::ordered_json lj;
        lj["node"] = leaf.node;
        lj["p"] = leaf.p;
        lj["method"] = leaf.method;
        lj["two_sided"] = leaf.two_sided;
        lj["shared_ancestry"] = leaf.shared_ancestry;
        leaves_json.push_back(std::move(lj));
    }
    j["per_leaf"] = std::move(leaves_json);
    if (!notes.empty()) j["notes"] = notes;
    return j.dump();
}

SafetyVerdict query_model(const GraphicalModel& model, double epsilon, const QueryOptions& opts) {
    std::vector<BernoulliLeaf> leaves = marginalize_all(model, opts);
    double p = boolean_inference(model, leaves, opts.width_cap);
    Certificate cert = certify_lower_bound(model, leaves);

    SafetyVerdict verdict;
    verdict.p_lower = p;
    verdict.epsilon = epsilon;
    verdict.safe = p >= epsilon;
    verdict.certified = cert.certified;
    verdict.notes = std::move(cert.reasons);
    verdict.per_leaf.reserve(leaves.size());
    for (const BernoulliLeaf& leaf : leaves) {
        verdict.per_leaf.push_back({leaf.node, leaf.p_true,
                                    leaf.method == LeafMethod::AnalyticGaussian ? "analytic" : "mc",
                                    leaf.two_sided, leaf.has_shared_ancestry()});
    }
    return verdict;
}

SafetyVerdict query_safety(const lang::ValidatedProgram& vp, const lang::InputBinding& binding,
                           double epsilon, const QueryOptions& opts) {
    if (epsilon < 0.0 || epsilon > 1.0) {
        fail(Error::Kind::Inference, "epsilon must lie in [0, 1]");
    }
    slp::StraightLineProgram program = slp::unroll(vp, binding);
    slp::StraightLineProgram folded = slp::constant_fold(program);
    GraphicalModel model = gm::compile_model(folded);
    return query_model(model, epsilon, opts);
}

} // namespace psp::infer
