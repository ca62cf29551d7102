// psp: compile probabilistic safety programs, answer safety queries,
// benchmark the analytic engine against the sampling oracle, and run the
// planner experiment.
//
// Exit codes: 0 ok/safe, 1 compile error, 2 io/usage error, 3 unsafe,
// 4 mission failure.

#include "psp/benchmark.hpp"
#include "psp/graph.hpp"
#include "psp/inference.hpp"
#include "psp/mission.hpp"
#include "psp/oracle.hpp"
#include "psp/parser.hpp"
#include "psp/unroll.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        psp::fail(psp::Error::Kind::Io, "cannot open file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) {
        psp::fail(psp::Error::Kind::Io, "cannot write file: " + path);
    }
    out << content;
}

int exit_code_for(const psp::Error& err) {
    switch (err.kind()) {
        case psp::Error::Kind::Io: return 2;
        default: return 1;
    }
}

struct CompiledQuery {
    psp::lang::Program program;
    psp::lang::InputBinding binding;
    psp::slp::StraightLineProgram unrolled;
    psp::slp::StraightLineProgram folded;
    psp::gm::GraphicalModel model;
};

CompiledQuery compile_pipeline(const std::string& program_path, const std::string& binding_path) {
    CompiledQuery out;
    out.program = psp::lang::parse(read_file(program_path));
    out.binding = psp::lang::InputBinding::from_file(binding_path);
    psp::lang::ValidatedProgram vp = psp::lang::validate(out.program, out.binding);
    out.unrolled = psp::slp::unroll(vp, out.binding);
    out.folded = psp::slp::constant_fold(out.unrolled);
    out.model = psp::gm::compile_model(out.folded);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"probabilistic safety program toolchain"};
    app.require_subcommand(1);

    std::string program_path, binding_path, out_dir = "out";
    double epsilon = 0.5;
    std::uint64_t seed = 0;
    long long oracle_samples = 100000;

    auto* compile = app.add_subcommand("compile", "compile a program and dump SLP + DOT artifacts");
    compile->add_option("--program", program_path, "program source (.psp)")->required();
    compile->add_option("--binding", binding_path, "input binding (.json)")->required();
    compile->add_option("--out", out_dir, "output directory");

    auto* query = app.add_subcommand("query", "evaluate Pr(program = true) against a threshold");
    query->add_option("--program", program_path)->required();
    query->add_option("--binding", binding_path)->required();
    query->add_option("--epsilon", epsilon, "safety threshold");
    query->add_option("--seed", seed, "seed for any sampled leaves");
    query->add_option("--oracle-samples", oracle_samples, "samples per sampled leaf");

    std::string corpus_dir = "corpus";
    int param_sets = 50;
    std::vector<int> lengths{10, 50, 100, 300};
    auto* bench = app.add_subcommand("bench", "run the engine-vs-oracle benchmark");
    bench->add_option("--corpus", corpus_dir, "corpus directory with the example programs");
    bench->add_option("--param-sets", param_sets, "random parameter sets per example");
    bench->add_option("--lengths", lengths, "trajectory lengths");
    bench->add_option("--seed", seed);
    bench->add_option("--out", out_dir, "output directory");

    std::string world_path, plan_config_path;
    bool svg = false;
    int missions = 1;
    auto* plan = app.add_subcommand("plan", "fly the gated course with PSP edge checks");
    plan->add_option("--world", world_path, "world file (.json)")->required();
    plan->add_option("--config", plan_config_path, "planner config (.json)");
    plan->add_option("--program", program_path, "belief-classifier program (.psp)")->required();
    plan->add_option("--seed", seed);
    plan->add_option("--missions", missions, "number of seeded missions");
    plan->add_flag("--svg", svg, "write per-cycle SVG snapshots");
    plan->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*compile) {
            CompiledQuery c = compile_pipeline(program_path, binding_path);
            std::filesystem::create_directories(out_dir);
            write_file(out_dir + "/slp.txt", psp::slp::dump(c.unrolled));
            write_file(out_dir + "/slp_folded.txt", psp::slp::dump(c.folded));
            write_file(out_dir + "/model.dot", psp::gm::to_dot(c.model));
            std::cout << "wrote " << out_dir << "/slp.txt, slp_folded.txt, model.dot\n";
            return 0;
        }
        if (*query) {
            CompiledQuery c = compile_pipeline(program_path, binding_path);
            psp::infer::QueryOptions opts;
            opts.seed = seed;
            opts.mc_samples = oracle_samples;
            psp::infer::SafetyVerdict verdict = psp::infer::query_model(c.model, epsilon, opts);
            std::cout << verdict.to_json_text() << "\n";
            return verdict.safe ? 0 : 3;
        }
        if (*bench) {
            psp::mc::BenchConfig config;
            config.corpus_dir = corpus_dir;
            config.param_sets = param_sets;
            config.lengths = lengths;
            config.seed = seed == 0 ? 1 : seed;
            psp::mc::BenchResult result = psp::mc::run_benchmark(config);
            std::filesystem::create_directories(out_dir);
            write_file(out_dir + "/bench.csv", result.to_csv());
            write_file(out_dir + "/bench_summary.json", result.summary_json(config));
            std::cout << "wrote " << out_dir << "/bench.csv and bench_summary.json\n";
            return 0;
        }
        if (*plan) {
            psp::plan::World world = psp::plan::World::from_file(world_path);
            psp::plan::MissionConfig config;
            if (!plan_config_path.empty()) {
                config.plan = psp::plan::PlanConfig::from_file(plan_config_path);
            }
            psp::lang::Program program = psp::lang::parse(read_file(program_path));
            std::filesystem::create_directories(out_dir);
            if (svg) {
                config.svg_dir = out_dir;
            }

            std::ofstream summary(out_dir + "/missions.csv");
            summary << psp::plan::mission_summary_csv_header() << "\n";
            bool all_ok = true;
            for (int m = 0; m < missions; m++) {
                std::uint64_t mission_seed = seed + static_cast<std::uint64_t>(m);
                psp::plan::MissionResult result =
                    psp::plan::run_mission(world, program, config, mission_seed);
                summary << result.summary_csv_row() << "\n";
                write_file(out_dir + "/mission_" + std::to_string(mission_seed) + ".jsonl",
                           result.log_jsonl());
                all_ok = all_ok && result.completed && result.collisions == 0;
                std::cout << "seed " << mission_seed << ": "
                          << (result.completed ? "completed" : "failed") << " in " << result.cycles
                          << " cycles, collisions " << result.collisions << "\n";
            }
            return all_ok ? 0 : 4;
        }
    } catch (const psp::Error& err) {
        std::cerr << "psp: " << err.what() << "\n";
        return exit_code_for(err);
    } catch (const std::exception& err) {
        std::cerr << "psp: " << err.what() << "\n";
        return 1;
    }
    return 2;
}
