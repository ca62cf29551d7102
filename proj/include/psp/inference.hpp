#pragma once

#include "psp/binding.hpp"
#include "psp/graph.hpp"
#include "psp/validator.hpp"

#include <set>
#include <string>
#include <vector>

namespace psp::infer {

// Disjoint-interval event on one scalar Gaussian statistic. Two-sided
// events (|x| > t patterns) stay exact by carrying the full interval set.
struct IntervalSet {
    struct Interval {
        double lo, hi;
        bool lo_closed, hi_closed;
    };
    std::vector<Interval> parts;  // disjoint, sorted

    static IntervalSet half_line_above(double t, bool closed);
    static IntervalSet half_line_below(double t, bool closed);
    static IntervalSet point(double t);
    static IntervalSet everything_except(double t);

    IntervalSet unite(const IntervalSet& other) const;
    IntervalSet intersect(const IntervalSet& other) const;

    // one half-line (the certificate's "one-sided" condition)
    bool one_sided() const;
    // Pr(stat in set) for stat ~ N(mean, var); var == 0 is a point mass
    // where interval closedness is honored exactly
    double probability(double mean, double var) const;
};

enum class LeafMethod { AnalyticGaussian, MonteCarlo };

// A comparator (or merged two-sided pattern) marginalized into a single
// Bernoulli: the Eq.-style integral over its continuous ancestry.
struct BernoulliLeaf {
    gm::NodeId node = 0;
    double p_true = 0.0;
    LeafMethod method = LeafMethod::AnalyticGaussian;
    long long mc_samples = 0;
    std::uint64_t mc_seed = 0;
    bool mc_lower_bound = false;

    // analytic payload: canonical statistic (sign-normalized coefficients
    // over Gaussian primitives) and the event on it
    gm::AffineForm stat;
    IntervalSet event;
    bool two_sided = false;

    std::vector<gm::NodeId> prim_support;  // primitive ancestors
    // -1 when this leaf shares no primitive with any other leaf; otherwise
    // the id of its dependence group
    int shared_group = -1;
    // per-leaf detail sets; materialized only on small models (<= 256
    // leaves); shared_group always carries the yes/no answer
    std::set<gm::NodeId> shares_ancestry_with;

    bool has_shared_ancestry() const { return shared_group >= 0; }
};

struct QueryOptions {
    long long mc_samples = 100000;
    std::uint64_t seed = 0;
    int width_cap = 20;
    double mc_confidence = 0.99;
    bool certify = true;  // MC leaves then report one-sided lower bounds
};

// Analytic marginalization of one comparator: p = Pr(affine Gaussian
// event), exact via the normal CDF; zero variance degenerates to a step.
BernoulliLeaf marginalize_leaf(const gm::GraphicalModel& gm, gm::NodeId comparator);

// Sampling fallback for comparators without a Gaussian affine form;
// n < 100 is rejected.
BernoulliLeaf marginalize_leaf_mc(const gm::GraphicalModel& gm, gm::NodeId comparator,
                                  long long n, std::uint64_t seed);

// All comparators marginalized, with two-sided same-statistic patterns
// merged into exact interval leaves. Fills shares_ancestry_with.
std::vector<BernoulliLeaf> marginalize_all(const gm::GraphicalModel& gm,
                                           const QueryOptions& opts = {});

// Exact Pr(output = true) of the residual boolean DAG with the leaves
// treated as independent (factorized approximation).
double boolean_inference(const gm::GraphicalModel& gm, const std::vector<BernoulliLeaf>& leaves,
                         int width_cap = 20);

struct Certificate {
    bool certified = false;
    std::vector<std::string> reasons;  // why not, when uncertified
};

// Grants the lower-bound certificate when correlated leaves only combine
// conjunctively along negation-free paths, their oriented statistics are
// pairwise nonnegatively correlated, and sampled leaves carry confidence
// bounds. Leaves without shared ancestry are exact and unconstrained.
Certificate certify_lower_bound(const gm::GraphicalModel& gm,
                                const std::vector<BernoulliLeaf>& leaves);

struct LeafDiagnostic {
    gm::NodeId node;
    double p;
    const char* method;
    bool two_sided;
    bool shared_ancestry;
};

struct SafetyVerdict {
    double p_lower = 0.0;
    double epsilon = 0.5;
    bool safe = false;
    bool certified = false;
    std::vector<LeafDiagnostic> per_leaf;
    std::vector<std::string> notes;

    std::string to_json_text() const;
};

// Full pipeline: unroll -> fold -> induce -> marginalize -> boolean
// inference -> certificate. Deterministic given (program, binding,
// epsilon, seed).
SafetyVerdict query_safety(const lang::ValidatedProgram& vp, const lang::InputBinding& binding,
                           double epsilon, const QueryOptions& opts = {});

// Same, on an already compiled model (used where one unrolled program is
// queried repeatedly).
SafetyVerdict query_model(const gm::GraphicalModel& gm, double epsilon,
                          const QueryOptions& opts = {});

} // namespace psp::infer
