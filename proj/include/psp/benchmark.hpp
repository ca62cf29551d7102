#pragma once

#include "psp/binding.hpp"
#include "psp/parser.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace psp::mc {

struct BenchConfig {
    std::string corpus_dir = "corpus";
    std::vector<int> lengths{10, 50, 100, 300};
    int param_sets = 50;
    std::vector<long long> oracle_ns{100, 1000, 10000};
    std::vector<double> eps_grid{0.1, 0.3, 0.5, 0.7, 0.9};
    double epsilon = 0.5;             // verdict column in the CSV
    long long fn_reference_n = 10000; // oracle used to classify safety
    std::uint64_t seed = 1;
};

struct BenchRecord {
    std::string example;
    int length = 0;
    int param_set = 0;
    std::string method;  // "analytic" or "oracle-<n>"
    long long wall_ns = 0;
    double p = 0.0;
    double epsilon = 0.5;
    bool verdict = false;
};

struct FalseNegativeCell {
    std::string example;
    int length = 0;
    double epsilon = 0.5;
    int false_negatives = 0;
    int total = 0;

    double rate() const { return total ? static_cast<double>(false_negatives) / total : 0.0; }
};

struct BenchResult {
    std::vector<BenchRecord> records;
    std::vector<FalseNegativeCell> fn_cells;
    // inference-only nanoseconds (model already compiled), keyed by
    // "example/length"; the runtime comparison excludes compilation on
    // both sides
    std::map<std::string, std::vector<long long>> infer_ns;

    std::string to_csv() const;
    std::string summary_json(const BenchConfig& config) const;
};

// Deterministic binding generator for one benchmark instance; exposed so
// the acceptance suite can reuse exactly the benchmark's distribution.
lang::InputBinding generate_binding(const std::string& example, int length, int param_set,
                                    std::uint64_t seed);

// The three bundled example programs swept over trajectory lengths and
// random parameter sets, timed against the sampling oracle.
BenchResult run_benchmark(const BenchConfig& config);

} // namespace psp::mc
