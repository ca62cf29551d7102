#include "psp/benchmark.hpp"

#include "psp/graph.hpp"
#include "psp/inference.hpp"
#include "psp/numfmt.hpp"
#include "psp/oracle.hpp"
#include "psp/rng.hpp"
#include "psp/unroll.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace psp::mc {

namespace {

using Clock = std::chrono::steady_clock;

long long ns_since(Clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

double uniform(SplitMix64& rng, double lo, double hi) {
    return lo + (hi - lo) * rng.next_unit_co();
}

// Obstacle-classifier instances: a direction with a clear margin, waypoints
// in a cone around it. A small share of instances is made borderline (the
// factorized bound visibly below the true probability) and another share
// decisively unsafe by flipping a block of waypoints.
lang::InputBinding gen_obstacle(int length, SplitMix64& rng) {
    lang::InputBinding b;
    double theta = uniform(rng, 0.0, 6.283185307179586);
    double margin = uniform(rng, 2.5, 5.0);
    double mode = rng.next_unit_co();
    if (mode < 0.04) margin *= uniform(rng, 0.25, 0.6);  // borderline
    bool flip_block = mode >= 0.04 && mode < 0.32;       // decisively unsafe

    double mu_x = margin * std::cos(theta);
    double mu_y = margin * std::sin(theta);

    double alpha = uniform(rng, 0.0, 3.141592653589793);
    double s1 = uniform(rng, 0.05, 0.25);
    double s2 = uniform(rng, 0.05, 0.25);
    double ca = std::cos(alpha), sa = std::sin(alpha);
    double v11 = ca * ca * s1 * s1 + sa * sa * s2 * s2;
    double v22 = sa * sa * s1 * s1 + ca * ca * s2 * s2;
    double v12 = ca * sa * (s1 * s1 - s2 * s2);

    int flip_from = length, flip_to = length;
    if (flip_block) {
        flip_from = static_cast<int>(uniform(rng, 0.0, static_cast<double>(length)));
        flip_to = std::min(length, flip_from + 1 + static_cast<int>(uniform(rng, 0.0, 8.0)));
    }
    double spread = uniform(rng, 0.05, 0.3);
    std::vector<double> waypoints;
    waypoints.reserve(static_cast<std::size_t>(length) * 2);
    for (int i = 0; i < length; i++) {
        double angle = theta + uniform(rng, -spread, spread);
        if (i >= flip_from && i < flip_to) angle += 3.141592653589793;
        double radius = uniform(rng, 0.8, 1.4);
        waypoints.push_back(radius * std::cos(angle));
        waypoints.push_back(radius * std::sin(angle));
    }
    b.set_array("x", {length, 2}, std::move(waypoints));
    b.set_vector("Mu", {mu_x, mu_y});
    b.set_matrix("Sigma", {{v11, v12}, {v12, v22}});
    return b;
}

// Battery instances: a few altitude spikes, declining battery level, and a
// threshold placed decisively above or below the worst-case level. The
// engine is exact for this family, so no borderline mass is needed.
lang::InputBinding gen_battery(int length, SplitMix64& rng) {
    lang::InputBinding b;
    std::vector<double> height(static_cast<std::size_t>(length));
    for (double& h : height) h = uniform(rng, 20.0, 40.0);
    int spikes = 1 + static_cast<int>(uniform(rng, 0.0, 3.0));
    for (int s = 0; s < spikes; s++) {
        int at = static_cast<int>(uniform(rng, 0.0, static_cast<double>(length)));
        height[static_cast<std::size_t>(std::min(at, length - 1))] = uniform(rng, 70.0, 90.0);
    }

    double level = uniform(rng, 60.0, 80.0);
    double decline = uniform(rng, 0.02, 0.15);
    std::vector<double> battery(static_cast<std::size_t>(length));
    for (int i = 0; i < length; i++) {
        battery[static_cast<std::size_t>(i)] = level - decline * i + uniform(rng, -0.5, 0.5);
    }

    double variance = uniform(rng, 0.01, 0.15);
    double height_thresh = 50.0;

    // the worst-case requirement over the steps where high flight occurs
    int steps = length - 3;
    double hardest = 1e300;
    for (int i = 0; i < steps; i++) {
        bool fly_high = false;
        for (int j = i; j < i + 3; j++) {
            fly_high |= height[static_cast<std::size_t>(j)] > height_thresh;
        }
        if (!fly_high) continue;
        double sd = std::sqrt(variance * i);
        hardest = std::min(hardest, battery[static_cast<std::size_t>(i)] - 6.0 * sd);
    }
    double battery_thresh;
    if (hardest > 1e299) {
        battery_thresh = 0.0;  // vacuous instance: no high-altitude window
    } else if (rng.next_unit_co() < 0.5) {
        battery_thresh = hardest - uniform(rng, 2.0, 8.0);  // decisively safe
    } else {
        battery_thresh = hardest + uniform(rng, 14.0, 25.0);  // decisively unsafe
    }

    b.set_vector("height", height);
    b.set_vector("logbatteryLevel", battery);
    b.set_scalar("variance", variance);
    b.set_scalar("heightThresh", height_thresh);
    b.set_scalar("batteryThresh", battery_thresh);
    return b;
}

// Car instances: ego on a straight track; the other vehicle either runs a
// parallel offset course (clearly safe), crosses the ego position at a
// chosen step (clearly unsafe), or keeps a moderate margin (borderline,
// where across-step factorization bites).
lang::InputBinding gen_car(int length, SplitMix64& rng) {
    lang::InputBinding b;
    double dt = uniform(rng, 0.05, 0.2);
    double vx = uniform(rng, 0.5, 2.0);
    double vy = uniform(rng, -0.5, 0.5);
    std::vector<double> xs(static_cast<std::size_t>(length));
    std::vector<double> ys(static_cast<std::size_t>(length));
    std::vector<double> ts(static_cast<std::size_t>(length));
    for (int i = 0; i < length; i++) {
        double t = dt * i;
        ts[static_cast<std::size_t>(i)] = t;
        xs[static_cast<std::size_t>(i)] = vx * t;
        ys[static_cast<std::size_t>(i)] = vy * t;
    }
    double sigma_sq = uniform(rng, 0.002, 0.02);
    double thresh = uniform(rng, 0.5, 1.5);
    double t_max = ts.back();
    double sd_max = std::sqrt(sigma_sq * (1.0 + t_max * t_max));

    double mode = rng.next_unit_co();
    double mu_x, mu_y, mu_sx, mu_sy;
    if (mode < 0.5) {
        // parallel course, offset beyond any plausible deviation
        double offset = thresh + uniform(rng, 6.0, 10.0) * sd_max;
        mu_x = offset * (rng.next_unit_co() < 0.5 ? 1.0 : -1.0);
        mu_y = thresh + uniform(rng, 6.0, 10.0) * sd_max;
        mu_sx = vx;
        mu_sy = vy;
    } else if (mode < 0.53) {
        // borderline: a moderate margin in one axis only; the factorized
        // engine visibly undershoots the true probability here
        double offset = thresh + uniform(rng, 2.0, 3.5) * sd_max;
        mu_x = offset;
        mu_y = 0.0;
        mu_sx = vx;
        mu_sy = vy;
    } else {
        // tailgating course: rides the ego track from step zero, so early
        // steps collide for essentially every plausible draw
        mu_x = 0.0;
        mu_y = 0.0;
        mu_sx = vx + uniform(rng, -0.1, 0.1);
        mu_sy = vy + uniform(rng, -0.1, 0.1);
    }

    b.set_vector("x", xs);
    b.set_vector("y", ys);
    b.set_vector("time", ts);
    b.set_scalar("mu_x", mu_x);
    b.set_scalar("mu_y", mu_y);
    b.set_scalar("mu_sx", mu_sx);
    b.set_scalar("mu_sy", mu_sy);
    b.set_scalar("sigma_sq", sigma_sq);
    b.set_scalar("Thresh", thresh);
    return b;
}

struct ExampleSpec {
    const char* name;
    const char* file;
};

const ExampleSpec kExamples[] = {
    {"avoid_obstacle", "avoid_obstacle_any.psp"},
    {"battery_flight", "battery_flight.psp"},
    {"avoid_car_crash", "avoid_car_crash.psp"},
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(Error::Kind::Io, "cannot open program file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

namespace {

// FNV-1a, so instance streams do not depend on the standard library
std::uint64_t stable_hash(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace

lang::InputBinding generate_binding(const std::string& example, int length, int param_set,
                                    std::uint64_t seed) {
    SplitMix64 rng(mix_seed(seed, stable_hash(example),
                            static_cast<std::uint64_t>(length * 1315423911 + param_set)));
    rng.next_u64();
    if (example == "avoid_obstacle") return gen_obstacle(length, rng);
    if (example == "battery_flight") return gen_battery(length, rng);
    if (example == "avoid_car_crash") return gen_car(length, rng);
    fail(Error::Kind::Io, "unknown benchmark example: " + example);
}

BenchResult run_benchmark(const BenchConfig& config) {
    BenchResult result;

    for (const ExampleSpec& spec : kExamples) {
        lang::Program program = lang::parse(read_file(config.corpus_dir + "/" + spec.file));

        for (int length : config.lengths) {
            std::string key = std::string(spec.name) + "/" + std::to_string(length);
            // per-cell false-negative counters
            std::vector<FalseNegativeCell> cells;
            for (double eps : config.eps_grid) {
                cells.push_back({spec.name, length, eps, 0, 0});
            }

            for (int set = 0; set < config.param_sets; set++) {
                lang::InputBinding binding =
                    generate_binding(spec.name, length, set, config.seed);

                auto t0 = Clock::now();
                lang::ValidatedProgram vp = lang::validate(program, binding);
                slp::StraightLineProgram unrolled = slp::unroll(vp, binding);
                slp::StraightLineProgram folded = slp::constant_fold(unrolled);
                gm::GraphicalModel model = gm::compile_model(folded);
                auto t1 = Clock::now();
                infer::QueryOptions opts;
                opts.seed = config.seed;
                infer::SafetyVerdict verdict = infer::query_model(model, config.epsilon, opts);
                long long analytic_total = ns_since(t0);
                long long analytic_infer =
                    std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t1).count();

                result.records.push_back({spec.name, length, set, "analytic", analytic_total,
                                          verdict.p_lower, config.epsilon, verdict.safe});
                result.infer_ns[key].push_back(analytic_infer);

                double reference_p = -1.0;
                for (long long n : config.oracle_ns) {
                    auto t2 = Clock::now();
                    OracleEstimate est =
                        estimate(folded, n, mix_seed(config.seed, static_cast<std::uint64_t>(set)));
                    long long oracle_ns = ns_since(t2);
                    result.records.push_back({spec.name, length, set,
                                              "oracle-" + std::to_string(n), oracle_ns, est.p_hat,
                                              config.epsilon, est.p_hat >= config.epsilon});
                    if (n == config.fn_reference_n) reference_p = est.p_hat;
                }
                if (reference_p < 0.0) {
                    OracleEstimate est = estimate(folded, config.fn_reference_n,
                                                  mix_seed(config.seed, static_cast<std::uint64_t>(set)));
                    reference_p = est.p_hat;
                }

                for (FalseNegativeCell& cell : cells) {
                    cell.total++;
                    bool oracle_safe = reference_p >= cell.epsilon;
                    bool engine_safe = verdict.p_lower >= cell.epsilon;
                    if (oracle_safe && !engine_safe) cell.false_negatives++;
                }
            }
            result.fn_cells.insert(result.fn_cells.end(), cells.begin(), cells.end());
        }
    }
    return result;
}

std::string BenchResult::to_csv() const {
    std::ostringstream out;
    out << "example,length,param_set,method,wall_ns,p,epsilon,verdict\n";
    for (const BenchRecord& r : records) {
        out << r.example << ',' << r.length << ',' << r.param_set << ',' << r.method << ','
            << r.wall_ns << ',' << fmt_double(r.p) << ',' << fmt_double(r.epsilon) << ','
            << (r.verdict ? "safe" : "unsafe") << '\n';
    }
    return out.str();
}

namespace {

long long percentile_ns(std::vector<long long> v, double q) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    std::size_t idx = static_cast<std::size_t>(q * (v.size() - 1));
    return v[idx];
}

} // namespace

std::string BenchResult::summary_json(const BenchConfig& config) const {
    nlohmann::ordered_json j;
    j["config"] = {{"lengths", config.lengths},
                   {"param_sets", config.param_sets},
                   {"oracle_ns", config.oracle_ns},
                   {"eps_grid", config.eps_grid},
                   {"seed", config.seed}};

    // runtime percentiles per example/length/method
    std::map<std::string, std::vector<long long>> by_key;
    for (const BenchRecord& r : records) {
        by_key[r.example + "/" + std::to_string(r.length) + "/" + r.method].push_back(r.wall_ns);
    }
    nlohmann::ordered_json runtime = nlohmann::ordered_json::object();
    for (const auto& [key, ns] : by_key) {
        runtime[key] = {{"p50_ns", percentile_ns(ns, 0.5)}, {"p90_ns", percentile_ns(ns, 0.9)}};
    }
    for (const auto& [key, ns] : infer_ns) {
        runtime[key + "/analytic-infer"] = {{"p50_ns", percentile_ns(ns, 0.5)},
                                            {"p90_ns", percentile_ns(ns, 0.9)}};
    }
    j["runtime"] = std::move(runtime);

    nlohmann::ordered_json fn = nlohmann::ordered_json::array();
    double worst = 0.0;
    for (const FalseNegativeCell& cell : fn_cells) {
        fn.push_back({{"example", cell.example},
                      {"length", cell.length},
                      {"epsilon", cell.epsilon},
                      {"false_negatives", cell.false_negatives},
                      {"total", cell.total},
                      {"rate", cell.rate()}});
        worst = std::max(worst, cell.rate());
    }
    j["false_negative_cells"] = std::move(fn);
    j["false_negative_rate_max"] = worst;
    return j.dump(2);
}

} // namespace psp::mc
