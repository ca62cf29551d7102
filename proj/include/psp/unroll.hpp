#pragma once

#include "psp/binding.hpp"
#include "psp/slp.hpp"
#include "psp/validator.hpp"

namespace psp::slp {

// Expands loops, decomposes expressions into single operations, evaluates
// every deterministic leaf (inputs, loop counters, distribution
// parameters) against the binding. Fails on out-of-range indices and on
// invalid distribution parameters (negative variance etc.).
StraightLineProgram unroll(const lang::ValidatedProgram& vp, const lang::InputBinding& binding);

// Replaces every instruction whose value does not depend on a draw with a
// ConstLoad, and collapses boolean operations with a dominating constant
// operand (false && x, true || x). Output distribution is unchanged.
StraightLineProgram constant_fold(const StraightLineProgram& slp);

} // namespace psp::slp
