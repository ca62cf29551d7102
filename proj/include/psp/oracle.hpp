#pragma once

#include "psp/sim.hpp"

#include <cstdint>

namespace psp::mc {

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

// Wilson score interval for k successes out of n at the given two-sided
// confidence; stable at extreme proportions.
WilsonInterval wilson_interval(long long k, long long n, double confidence);

struct OracleEstimate {
    double p_hat = 0.0;
    long long n = 0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    std::uint64_t seed = 0;
};

// Ground truth by forward simulation of the straight-line program. Work
// is split into fixed-size chunks with per-chunk derived seeds, so the
// result is bit-identical for a given seed regardless of the worker
// count (capped by the PSP_THREADS environment variable).
OracleEstimate estimate(const slp::StraightLineProgram& slp, long long n, std::uint64_t seed,
                        double confidence = 0.99);

// Worker count used by estimate(): min(hardware, PSP_THREADS if set).
int worker_count();

} // namespace psp::mc
