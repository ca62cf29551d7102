#include <doctest.h>

#include "psp/factor.hpp"
#include "psp/graph.hpp"
#include "psp/inference.hpp"
#include "psp/normal.hpp"
#include "psp/oracle.hpp"
#include "psp/unroll.hpp"

#include "helpers.hpp"

#include <cmath>
#include <thread>

using namespace psp;
using namespace psp::infer;

namespace {

struct Compiled {
    lang::Program program;
    lang::InputBinding binding;
    slp::StraightLineProgram folded;
    gm::GraphicalModel model;
};

Compiled compile_text(const std::string& source, lang::InputBinding binding) {
    Compiled out;
    out.program = lang::parse(source);
    out.binding = std::move(binding);
    lang::ValidatedProgram vp = lang::validate(out.program, out.binding);
    out.folded = slp::constant_fold(slp::unroll(vp, out.binding));
    out.model = gm::compile_model(out.folded);
    return out;
}

Compiled single_waypoint(double mu_x, double mu_y, double wx, double wy) {
    lang::InputBinding binding;
    binding.set_array("x", {1, 2}, {wx, wy});
    binding.set_vector("Mu", {mu_x, mu_y});
    binding.set_matrix("Sigma", {{1.0, 0.0}, {0.0, 1.0}});
    Compiled out;
    out.program = lang::parse(testutil::slurp(testutil::corpus_path("avoid_obstacle_any.psp")));
    out.binding = std::move(binding);
    lang::ValidatedProgram vp = lang::validate(out.program, out.binding);
    out.folded = slp::constant_fold(slp::unroll(vp, out.binding));
    out.model = gm::compile_model(out.folded);
    return out;
}

gm::NodeId first_comparator(const gm::GraphicalModel& model) {
    for (gm::NodeId id = 0; id < model.size(); id++) {
        if (model.at(id).kind == gm::NodeKind::Comparator) return id;
    }
    REQUIRE(false);
    return 0;
}

} // namespace

TEST_SUITE("inference") {

TEST_CASE("symmetric halfplane marginalizes to one half") {
    Compiled c = single_waypoint(0.0, 0.0, 1.0, 0.0);
    BernoulliLeaf leaf = marginalize_leaf(c.model, first_comparator(c.model));
    CHECK(leaf.p_true == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("shifted halfplane marginalizes to the normal CDF value") {
    Compiled c = single_waypoint(2.0, 0.0, 1.0, 0.0);
    BernoulliLeaf leaf = marginalize_leaf(c.model, first_comparator(c.model));
    // cross-checked against the sampling oracle below
    CHECK(leaf.p_true == doctest::Approx(0.9772498680518208).epsilon(1e-12));
    mc::OracleEstimate est = mc::estimate(c.folded, 1000000, 7);
    double se = std::sqrt(leaf.p_true * (1.0 - leaf.p_true) / 1e6);
    CHECK(std::abs(est.p_hat - leaf.p_true) <= 3.0 * se);
}

TEST_CASE("two-sided event on one statistic merges into an exact interval leaf") {
    // Xdistance ~ N(0,1) against threshold 1: union of disjoint tails
    lang::InputBinding binding;
    binding.set_vector("x", {0.0});
    binding.set_vector("y", {0.0});
    binding.set_vector("time", {0.0});
    binding.set_scalar("mu_x", 0.0);
    binding.set_scalar("mu_y", 0.0);   // Y stays decisively inside: unsafe in Y
    binding.set_scalar("mu_sx", 0.0);
    binding.set_scalar("mu_sy", 0.0);
    binding.set_scalar("sigma_sq", 1.0);
    binding.set_scalar("Thresh", 1.0);
    Compiled c = compile_text(testutil::slurp(testutil::corpus_path("avoid_car_crash.psp")),
                              std::move(binding));
    std::vector<BernoulliLeaf> leaves = marginalize_all(c.model);
    REQUIRE(leaves.size() == 2);  // SafeInX and SafeInY, both merged
    const double two_tails = 0.3173105078629141;  // 2 * (1 - cdf(1))
    CHECK(leaves[0].two_sided);
    CHECK(leaves[0].p_true == doctest::Approx(two_tails).epsilon(1e-12));
    CHECK(leaves[1].p_true == doctest::Approx(two_tails).epsilon(1e-12));
}

TEST_CASE("interval unions keep endpoint openness exact") {
    // only observable through zero-variance statistics, where strictness
    // decides the whole probability
    IntervalSet a = IntervalSet::half_line_below(2.0, true);   // (-inf, 2]
    IntervalSet b{{{0.0, 3.0, false, false}}};                 // (0, 3)
    IntervalSet u = a.unite(b);
    REQUIRE(u.parts.size() == 1);
    CHECK(u.parts[0].hi == 3.0);
    CHECK_FALSE(u.parts[0].hi_closed);
    CHECK(u.probability(3.0, 0.0) == 0.0);  // point mass at the open end
    CHECK(u.probability(2.0, 0.0) == 1.0);

    IntervalSet c = IntervalSet::half_line_above(3.0, true);   // [3, inf)
    IntervalSet v = u.unite(c);
    REQUIRE(v.parts.size() == 1);
    CHECK(v.probability(3.0, 0.0) == 1.0);

    // disjoint tails stay disjoint
    IntervalSet tails =
        IntervalSet::half_line_above(1.0, false).unite(IntervalSet::half_line_below(-1.0, false));
    CHECK(tails.parts.size() == 2);
    CHECK_FALSE(tails.one_sided());
}

TEST_CASE("sampled leaves agree with analytic ones within binomial error") {
    for (std::uint64_t seed = 0; seed < 12; seed++) {
        Compiled c = single_waypoint(0.3 + 0.1 * static_cast<double>(seed), -0.2, 0.8, 0.5);
        gm::NodeId cmp = first_comparator(c.model);
        BernoulliLeaf analytic = marginalize_leaf(c.model, cmp);
        BernoulliLeaf sampled = marginalize_leaf_mc(c.model, cmp, 100000, seed);
        double se = std::sqrt(analytic.p_true * (1.0 - analytic.p_true) / 1e5);
        CHECK(std::abs(sampled.p_true - analytic.p_true) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("sampling a leaf needs at least 100 samples") {
    Compiled c = single_waypoint(0.0, 0.0, 1.0, 0.0);
    CHECK_THROWS_AS(marginalize_leaf_mc(c.model, first_comparator(c.model), 99, 1), Error);
}

TEST_CASE("product of two draws routes to the sampling path at about one half") {
    Compiled c = compile_text(
        "bool F() { a = Gaussian(0, 1); b = Gaussian(0, 1); return a*b > 0; }",
        lang::InputBinding{});
    gm::NodeId cmp = first_comparator(c.model);
    CHECK(c.model.at(cmp).needs_sampling);
    BernoulliLeaf leaf = marginalize_leaf_mc(c.model, cmp, 200000, 3);
    CHECK(leaf.p_true == doctest::Approx(0.5).epsilon(0.01));
    CHECK_THROWS_AS(marginalize_leaf(c.model, cmp), Error);
}

TEST_CASE("deterministic-true comparator is certain for any seed") {
    Compiled c = compile_text(
        "bool F() { a = Gaussian(5, 0); return a > 1; }", lang::InputBinding{});
    // variance 0: the analytic path sees a step function
    BernoulliLeaf leaf = marginalize_leaf(c.model, first_comparator(c.model));
    CHECK(leaf.p_true == 1.0);
    BernoulliLeaf sampled = marginalize_leaf_mc(c.model, first_comparator(c.model), 500, 11);
    CHECK(sampled.p_true == 1.0);
}

TEST_CASE("equality comparisons on continuous statistics have measure zero") {
    Compiled eq = compile_text("bool F() { a = Gaussian(0, 1); return a == 0; }",
                               lang::InputBinding{});
    CHECK(query_model(eq.model, 0.5).p_lower == 0.0);
    Compiled ne = compile_text("bool F() { a = Gaussian(0, 1); return a != 0; }",
                               lang::InputBinding{});
    CHECK(query_model(ne.model, 0.5).p_lower == 1.0);
}

TEST_CASE("strictness matters for degenerate draws") {
    Compiled ge = compile_text("bool F() { a = Gaussian(2, 0); return a >= 2; }",
                               lang::InputBinding{});
    CHECK(query_model(ge.model, 0.5).p_lower == 1.0);
    Compiled gt = compile_text("bool F() { a = Gaussian(2, 0); return a > 2; }",
                               lang::InputBinding{});
    CHECK(query_model(gt.model, 0.5).p_lower == 0.0);
    Compiled eq = compile_text("bool F() { a = Gaussian(2, 0); return a == 2; }",
                               lang::InputBinding{});
    CHECK(query_model(eq.model, 0.5).p_lower == 1.0);
}

TEST_CASE("independence product over a conjunction chain") {
    std::vector<Factor> factors;
    factors.push_back(Factor::bernoulli(1, 0.9));
    factors.push_back(Factor::bernoulli(2, 0.9));
    // node 3 = 1 && 2
    Factor cpt{{1, 2, 3}, std::vector<double>(8, 0.0)};
    for (int a = 0; a < 2; a++) {
        for (int b = 0; b < 2; b++) {
            int self = a && b;
            cpt.table[static_cast<std::size_t>(a | (b << 1) | (self << 2))] = 1.0;
        }
    }
    factors.push_back(std::move(cpt));
    CHECK(eliminate_to_prob(std::move(factors), 3) == doctest::Approx(0.81).epsilon(1e-12));
}

TEST_CASE("negated single leaf complements its probability") {
    Compiled c = compile_text(
        "bool F() { a = Gaussian(0, 1); bool hit = a > 0.5244005127080407; "
        "bool r = !hit; return r; }",
        lang::InputBinding{});
    // the threshold is the 70% quantile, so Pr(hit) = 0.3
    SafetyVerdict verdict = query_model(c.model, 0.5);
    CHECK(verdict.p_lower == doctest::Approx(0.7).epsilon(1e-10));
}

TEST_CASE("battery family matches the closed-form product to 1e-9") {
    lang::Program prog = testutil::load_program("battery_flight.psp");
    lang::InputBinding binding = testutil::load_binding("bindings/battery_flight_default.json");
    lang::ValidatedProgram vp = lang::validate(prog, binding);
    SafetyVerdict verdict = query_safety(vp, binding, 0.5);

    // independent draws: closed form is the product of per-step normal
    // tails over the steps whose 3-step lookahead contains high altitude;
    // for the default heights those steps are {0, 2, 3, 4}
    const auto& battery = binding.get("logbatteryLevel");
    double variance = binding.get("variance").scalar;
    double thresh = binding.get("batteryThresh").scalar;
    double expected = 1.0;
    for (int i : {0, 2, 3, 4}) {
        expected *= gauss_tail_above(battery.at({i}), variance * i, thresh);
    }
    CHECK(verdict.p_lower == doctest::Approx(expected).epsilon(1e-9));
    CHECK(verdict.certified);
}

TEST_CASE("tree fast path and variable elimination agree") {
    for (std::uint64_t seed = 0; seed < 200; seed++) {
        testutil::ProgramGen gen(seed * 31 + 7);
        lang::Program prog = gen.program();
        lang::InputBinding binding = gen.binding_for(prog);
        lang::ValidatedProgram vp = lang::validate(prog, binding);
        slp::StraightLineProgram folded = slp::constant_fold(slp::unroll(vp, binding));
        gm::GraphicalModel model = gm::compile_model(folded);
        QueryOptions opts;
        opts.mc_samples = 2000;  // keep sampled leaves cheap
        opts.certify = false;
        std::vector<BernoulliLeaf> leaves = marginalize_all(model, opts);
        if (model.at(model.output).kind == gm::NodeKind::BooleanConst) continue;

        // force the elimination path by bypassing the tree shortcut:
        // build the factor problem directly
        double fast = boolean_inference(model, leaves);
        std::vector<Factor> factors;
        std::set<gm::NodeId> leaf_nodes;
        std::set<gm::NodeId> absorbed;
        for (const BernoulliLeaf& leaf : leaves) {
            leaf_nodes.insert(leaf.node);
            factors.push_back(Factor::bernoulli(leaf.node, leaf.p_true));
            const gm::GraphNode& node = model.at(leaf.node);
            if (node.kind == gm::NodeKind::BooleanOp) {
                absorbed.insert(node.parents[0]);
                absorbed.insert(node.parents[1]);
            }
        }
        for (gm::NodeId id = 0; id < model.size(); id++) {
            const gm::GraphNode& node = model.at(id);
            if (node.kind != gm::NodeKind::BooleanOp) continue;
            if (leaf_nodes.count(id) || absorbed.count(id)) continue;
            Factor f;
            f.vars.push_back(id);
            for (gm::NodeId p : node.parents) f.vars.push_back(p);
            std::sort(f.vars.begin(), f.vars.end());
            f.table.assign(std::size_t{1} << f.vars.size(), 0.0);
            for (std::size_t row = 0; row < f.table.size(); row++) {
                auto bit = [&](gm::NodeId v) {
                    auto it = std::lower_bound(f.vars.begin(), f.vars.end(), v);
                    return ((row >> (it - f.vars.begin())) & 1) != 0;
                };
                bool expected = node.parents.size() == 2
                                    ? node.cpt[(bit(node.parents[0]) ? 1u : 0u) |
                                               (bit(node.parents[1]) ? 2u : 0u)] != 0
                                    : node.cpt[bit(node.parents[0]) ? 1 : 0] != 0;
                f.table[row] = bit(id) == expected ? 1.0 : 0.0;
            }
            factors.push_back(std::move(f));
        }
        double slow = eliminate_to_prob(std::move(factors), model.output, 24);
        CHECK(fast == doctest::Approx(slow).epsilon(1e-10));
    }
}

TEST_CASE("monotone DAGs never lose probability when a leaf improves") {
    // negation-free random DAGs over independent leaves, output at the top
    psp::SplitMix64 rng(2024);
    for (int trial = 0; trial < 120; trial++) {
        int n_leaves = 3 + static_cast<int>(rng.next_u64() % 6);
        int n_ops = 2 + static_cast<int>(rng.next_u64() % 8);
        std::vector<double> p(static_cast<std::size_t>(n_leaves));
        for (double& v : p) v = 0.05 + 0.9 * rng.next_unit_co();

        auto build = [&](const std::vector<double>& leaf_p) {
            std::vector<Factor> factors;
            int next = 0;
            for (int l = 0; l < n_leaves; l++) {
                factors.push_back(Factor::bernoulli(static_cast<std::uint32_t>(next++), leaf_p[static_cast<std::size_t>(l)]));
            }
            psp::SplitMix64 wiring(static_cast<std::uint64_t>(trial) * 991 + 5);
            for (int o = 0; o < n_ops; o++) {
                std::uint32_t a = static_cast<std::uint32_t>(wiring.next_u64() % static_cast<std::uint64_t>(next));
                std::uint32_t b = static_cast<std::uint32_t>(wiring.next_u64() % static_cast<std::uint64_t>(next));
                bool is_and = wiring.next_unit_co() < 0.5;
                std::uint32_t self = static_cast<std::uint32_t>(next++);
                Factor f;
                f.vars = {a, b, self};
                std::sort(f.vars.begin(), f.vars.end());
                f.vars.erase(std::unique(f.vars.begin(), f.vars.end()), f.vars.end());
                f.table.assign(std::size_t{1} << f.vars.size(), 0.0);
                for (std::size_t row = 0; row < f.table.size(); row++) {
                    auto bit = [&](std::uint32_t v) {
                        auto it = std::lower_bound(f.vars.begin(), f.vars.end(), v);
                        return ((row >> (it - f.vars.begin())) & 1) != 0;
                    };
                    bool value = is_and ? (bit(a) && bit(b)) : (bit(a) || bit(b));
                    if (bit(self) == value) f.table[row] = 1.0;
                }
                factors.push_back(std::move(f));
            }
            return std::pair{factors, static_cast<std::uint32_t>(next - 1)};
        };

        auto [base_factors, query] = build(p);
        double base = eliminate_to_prob(base_factors, query, 24);
        for (int l = 0; l < n_leaves; l++) {
            std::vector<double> bumped = p;
            bumped[static_cast<std::size_t>(l)] = std::min(1.0, bumped[static_cast<std::size_t>(l)] + 0.01);
            auto [factors, q] = build(bumped);
            double raised = eliminate_to_prob(factors, q, 24);
            CHECK(raised >= base - 1e-12);
        }
    }
}

TEST_CASE("width cap suggests the sampling path") {
    std::vector<Factor> factors;
    int leaves = 16;
    for (int l = 0; l < leaves; l++) {
        factors.push_back(Factor::bernoulli(static_cast<std::uint32_t>(l), 0.5));
    }
    // one wide factor over all leaves plus the output
    Factor wide;
    for (int l = 0; l < leaves; l++) wide.vars.push_back(static_cast<std::uint32_t>(l));
    wide.vars.push_back(static_cast<std::uint32_t>(leaves));
    wide.table.assign(std::size_t{1} << wide.vars.size(), 1.0);
    factors.push_back(std::move(wide));
    CHECK_THROWS_WITH_AS(
        eliminate_to_prob(std::move(factors), static_cast<std::uint32_t>(leaves), 12),
        doctest::Contains("sampling"), Error);
}

TEST_CASE("battery and aligned-obstacle instances are certified; the car is not") {
    lang::Program battery = testutil::load_program("battery_flight.psp");
    lang::InputBinding battery_binding =
        testutil::load_binding("bindings/battery_flight_default.json");
    SafetyVerdict battery_verdict =
        query_safety(lang::validate(battery, battery_binding), battery_binding, 0.5);
    CHECK(battery_verdict.certified);

    // waypoints in one quadrant with a diagonal covariance: pairwise
    // covariances are nonnegative
    lang::Program obstacle = testutil::load_program("avoid_obstacle.psp");
    lang::InputBinding obstacle_binding =
        testutil::load_binding("bindings/avoid_obstacle_default.json");
    SafetyVerdict obstacle_verdict =
        query_safety(lang::validate(obstacle, obstacle_binding), obstacle_binding, 0.5);
    CHECK(obstacle_verdict.certified);

    lang::Program car = testutil::load_program("avoid_car_crash.psp");
    lang::InputBinding car_binding = testutil::load_binding("bindings/avoid_car_crash_default.json");
    SafetyVerdict car_verdict = query_safety(lang::validate(car, car_binding), car_binding, 0.5);
    CHECK_FALSE(car_verdict.certified);
    CHECK(!car_verdict.notes.empty());
    CHECK(car_verdict.p_lower > 0.0);  // verdict still reported
}

TEST_CASE("negatively correlated one-sided leaves lose the certificate") {
    // two waypoints in opposite directions: the factorized product is not
    // a guaranteed lower bound, and the certificate must say so
    lang::InputBinding binding;
    binding.set_array("x", {2, 2}, {1.0, 0.0, -1.0, 0.1});
    binding.set_vector("Mu", {0.5, 0.0});
    binding.set_matrix("Sigma", {{1.0, 0.0}, {0.0, 1.0}});
    Compiled c = compile_text(testutil::slurp(testutil::corpus_path("avoid_obstacle_any.psp")),
                              std::move(binding));
    SafetyVerdict verdict = query_model(c.model, 0.5);
    CHECK_FALSE(verdict.certified);
}

TEST_CASE("certified verdicts stay below the oracle estimate") {
    // obstacle instances whose waypoints share a cone keep the certificate;
    // the factorized value must then sit at or under the sampled truth
    psp::SplitMix64 rng(808);
    lang::Program program =
        lang::parse(testutil::slurp(testutil::corpus_path("avoid_obstacle_any.psp")));
    int certified_count = 0;
    for (int trial = 0; trial < 50; trial++) {
        double theta = rng.next_unit_co() * 6.283185307179586;
        double margin = 0.3 + rng.next_unit_co() * 2.2;
        int n = 3 + static_cast<int>(rng.next_u64() % 6);
        std::vector<double> waypoints;
        for (int i = 0; i < n; i++) {
            double angle = theta + (rng.next_unit_co() - 0.5) * 0.5;
            double radius = 0.7 + rng.next_unit_co() * 0.6;
            waypoints.push_back(radius * std::cos(angle));
            waypoints.push_back(radius * std::sin(angle));
        }
        lang::InputBinding binding;
        binding.set_array("x", {n, 2}, std::move(waypoints));
        binding.set_vector("Mu", {margin * std::cos(theta), margin * std::sin(theta)});
        double s = 0.2 + rng.next_unit_co() * 0.6;
        binding.set_matrix("Sigma", {{s, 0.0}, {0.0, s}});

        lang::ValidatedProgram vp = lang::validate(program, binding);
        slp::StraightLineProgram folded = slp::constant_fold(slp::unroll(vp, binding));
        SafetyVerdict verdict = query_model(gm::compile_model(folded), 0.5);
        if (!verdict.certified) continue;
        certified_count++;
        mc::OracleEstimate est = mc::estimate(folded, 40000, 4000 + trial);
        double se = std::sqrt(std::max(est.p_hat * (1.0 - est.p_hat), 2.5e-6) / 4e4);
        CHECK(verdict.p_lower <= est.p_hat + 3.0 * se);
    }
    CHECK(certified_count >= 40);  // the cone construction certifies almost always
}

TEST_CASE("constant-true program is safe and certified at any threshold") {
    Compiled c = compile_text("bool F() { return true; }", lang::InputBinding{});
    SafetyVerdict verdict = query_model(c.model, 0.99);
    CHECK(verdict.p_lower == 1.0);
    CHECK(verdict.safe);
    CHECK(verdict.certified);
}

TEST_CASE("single-waypoint obstacle queries match the documented examples") {
    {
        Compiled c = single_waypoint(2.0, 0.0, 1.0, 0.0);
        SafetyVerdict verdict = query_model(c.model, 0.9);
        CHECK(verdict.p_lower == doctest::Approx(0.9772498680518208).epsilon(1e-12));
        CHECK(verdict.safe);
    }
    {
        Compiled c = single_waypoint(0.0, 0.0, 1.0, 0.0);
        SafetyVerdict verdict = query_model(c.model, 0.9);
        CHECK(verdict.p_lower == doctest::Approx(0.5).epsilon(1e-12));
        CHECK_FALSE(verdict.safe);
        SafetyVerdict relaxed = query_model(c.model, 0.4);
        CHECK(relaxed.safe);
    }
}

TEST_CASE("safety flips monotonically in the threshold") {
    Compiled c = single_waypoint(1.0, 0.5, 0.9, 0.2);
    bool was_safe = true;
    for (double eps = 0.05; eps <= 1.0; eps += 0.05) {
        SafetyVerdict verdict = query_model(c.model, eps);
        if (!was_safe) CHECK_FALSE(verdict.safe);
        was_safe = verdict.safe;
    }
}

TEST_CASE("verdict JSON carries the documented fields") {
    Compiled c = single_waypoint(2.0, 0.0, 1.0, 0.0);
    SafetyVerdict verdict = query_model(c.model, 0.9);
    std::string json = verdict.to_json_text();
    for (const char* field : {"p_lower", "epsilon", "safe", "certified", "per_leaf"}) {
        CAPTURE(field);
        CHECK(json.find(field) != std::string::npos);
    }
}

TEST_CASE("a compiled model answers queries concurrently") {
    lang::Program prog = testutil::load_program("avoid_car_crash.psp");
    lang::InputBinding binding = testutil::load_binding("bindings/avoid_car_crash_default.json");
    lang::ValidatedProgram vp = lang::validate(prog, binding);
    gm::GraphicalModel model =
        gm::compile_model(slp::constant_fold(slp::unroll(vp, binding)));
    SafetyVerdict reference = query_model(model, 0.5);

    std::vector<std::thread> pool;
    std::vector<std::string> results(8);
    for (int t = 0; t < 8; t++) {
        pool.emplace_back([&, t] {
            results[static_cast<std::size_t>(t)] = query_model(model, 0.5).to_json_text();
        });
    }
    for (std::thread& t : pool) t.join();
    for (const std::string& r : results) CHECK(r == reference.to_json_text());
}

TEST_CASE("epsilon outside the unit interval is rejected") {
    lang::Program prog = testutil::load_program("battery_flight.psp");
    lang::InputBinding binding = testutil::load_binding("bindings/battery_flight_default.json");
    lang::ValidatedProgram vp = lang::validate(prog, binding);
    CHECK_THROWS_AS(query_safety(vp, binding, 1.5), Error);
}

} // TEST_SUITE
