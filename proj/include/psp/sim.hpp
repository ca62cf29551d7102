#pragma once

#include "psp/rng.hpp"
#include "psp/slp.hpp"

namespace psp::slp {

// One forward execution of the program. Draw values are a pure function
// of (seed, sample_index, draw instruction id), so pre- and post-fold
// programs see identical randomness and chunked runs are reproducible
// regardless of evaluation order.
bool simulate(const StraightLineProgram& slp, std::uint64_t seed, std::uint64_t sample_index);

// Reusable workspace to keep per-sample allocations out of hot loops.
struct Simulator {
    explicit Simulator(const StraightLineProgram& slp);

    bool run(std::uint64_t seed, std::uint64_t sample_index);

    const StraightLineProgram& slp;
    std::vector<std::uint32_t> slot_of;  // instruction -> first value slot
    std::vector<double> slots;
};

} // namespace psp::slp
