#include <doctest.h>

#include "psp/benchmark.hpp"
#include "psp/oracle.hpp"
#include "psp/unroll.hpp"

#include "helpers.hpp"

#include <cmath>
#include <cstdlib>

using namespace psp;
using namespace psp::mc;

namespace {

slp::StraightLineProgram compile_folded(const std::string& source,
                                        const lang::InputBinding& binding) {
    lang::Program prog = lang::parse(source);
    lang::ValidatedProgram vp = lang::validate(prog, binding);
    return slp::constant_fold(slp::unroll(vp, binding));
}

} // namespace

TEST_SUITE("oracle") {

TEST_CASE("constant-true program estimates one for any sample count") {
    slp::StraightLineProgram slp = compile_folded("bool F() { return true; }", {});
    for (long long n : {100LL, 1000LL, 4096LL}) {
        OracleEstimate est = estimate(slp, n, 12345);
        CHECK(est.p_hat == 1.0);
        CHECK(est.ci_high == 1.0);
    }
}

TEST_CASE("shifted halfplane estimate lands on the CDF value") {
    lang::InputBinding binding;
    binding.set_array("x", {1, 2}, {1.0, 0.0});
    binding.set_vector("Mu", {2.0, 0.0});
    binding.set_matrix("Sigma", {{1.0, 0.0}, {0.0, 1.0}});
    slp::StraightLineProgram slp =
        compile_folded(testutil::slurp(testutil::corpus_path("avoid_obstacle_any.psp")), binding);
    OracleEstimate est = estimate(slp, 1000000, 99);
    CHECK(std::abs(est.p_hat - 0.9772498680518208) < 0.0005);
    CHECK(est.ci_low <= est.p_hat);
    CHECK(est.p_hat <= est.ci_high);
}

TEST_CASE("single-step car estimate matches the two-tail identity") {
    lang::InputBinding binding;
    binding.set_vector("x", {0.0});
    binding.set_vector("y", {0.0});
    binding.set_vector("time", {0.0});
    binding.set_scalar("mu_x", 0.0);
    binding.set_scalar("mu_y", 0.0);
    binding.set_scalar("mu_sx", 0.0);
    binding.set_scalar("mu_sy", 0.0);
    binding.set_scalar("sigma_sq", 1.0);
    binding.set_scalar("Thresh", 1.0);
    slp::StraightLineProgram slp =
        compile_folded(testutil::slurp(testutil::corpus_path("avoid_car_crash.psp")), binding);
    OracleEstimate est = estimate(slp, 1000000, 4);
    // X and Y are independent standard normals: the step is safe unless
    // both land inside the threshold, so p = 1 - (1 - 2(1-cdf(1)))^2
    double two_tails = 0.3173105078629141;
    double expected = 1.0 - (1.0 - two_tails) * (1.0 - two_tails);
    CHECK(std::abs(est.p_hat - expected) < 0.002);
}

TEST_CASE("wilson interval width roughly halves when n quadruples") {
    lang::InputBinding binding;
    binding.set_array("x", {1, 2}, {1.0, 0.0});
    binding.set_vector("Mu", {0.5, 0.0});
    binding.set_matrix("Sigma", {{1.0, 0.0}, {0.0, 1.0}});
    slp::StraightLineProgram slp =
        compile_folded(testutil::slurp(testutil::corpus_path("avoid_obstacle_any.psp")), binding);
    OracleEstimate small = estimate(slp, 20000, 5);
    OracleEstimate large = estimate(slp, 80000, 5);
    double ratio = (large.ci_high - large.ci_low) / (small.ci_high - small.ci_low);
    CHECK(ratio > 0.4);
    CHECK(ratio < 0.6);
}

TEST_CASE("estimates are bit-identical regardless of the worker count") {
    lang::InputBinding binding;
    binding.set_array("x", {3, 2}, {1.0, 0.2, 0.8, -0.1, 1.2, 0.4});
    binding.set_vector("Mu", {0.7, 0.1});
    binding.set_matrix("Sigma", {{0.5, 0.1}, {0.1, 0.3}});
    slp::StraightLineProgram slp =
        compile_folded(testutil::slurp(testutil::corpus_path("avoid_obstacle_any.psp")), binding);

    setenv("PSP_THREADS", "1", 1);
    OracleEstimate serial = estimate(slp, 50000, 77);
    setenv("PSP_THREADS", "8", 1);
    OracleEstimate parallel = estimate(slp, 50000, 77);
    unsetenv("PSP_THREADS");
    CHECK(serial.p_hat == parallel.p_hat);
    CHECK(serial.ci_low == parallel.ci_low);
    CHECK(serial.ci_high == parallel.ci_high);
}

TEST_CASE("oracle rejects tiny sample counts") {
    slp::StraightLineProgram slp = compile_folded("bool F() { return true; }", {});
    CHECK_THROWS_AS(estimate(slp, 99, 1), Error);
}

TEST_CASE("benchmark rows follow the documented cartesian count") {
    BenchConfig config;
    config.corpus_dir = testutil::source_dir() + "/corpus";
    config.lengths = {10, 20};
    config.param_sets = 3;
    config.oracle_ns = {100, 1000};
    config.fn_reference_n = 1000;
    config.seed = 5;
    BenchResult result = run_benchmark(config);
    // examples * lengths * sets * (analytic + |oracle ns|)
    CHECK(result.records.size() == 3u * 2u * 3u * 3u);
    // CSV header + one line per record
    std::string csv = result.to_csv();
    std::size_t lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(lines == result.records.size() + 1);
    CHECK(csv.rfind("example,length,param_set,method,wall_ns,p,epsilon,verdict", 0) == 0);
}

TEST_CASE("benchmark binding generation is deterministic") {
    lang::InputBinding a = generate_binding("avoid_obstacle", 10, 3, 42);
    lang::InputBinding b = generate_binding("avoid_obstacle", 10, 3, 42);
    CHECK(a.get("Mu").data == b.get("Mu").data);
    CHECK(a.get("x").data == b.get("x").data);
    lang::InputBinding c = generate_binding("avoid_obstacle", 10, 4, 42);
    CHECK(a.get("Mu").data != c.get("Mu").data);
}

} // TEST_SUITE
