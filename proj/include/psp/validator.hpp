#pragma once

#include "psp/ast.hpp"
#include "psp/binding.hpp"

#include <map>
#include <optional>

namespace psp::lang {

// Static type of an expression or variable.
struct Type {
    enum class Kind { Int, Real, Bool, Array, RandVec };
    Kind kind = Kind::Real;
    int rank = 0;    // Array
    int dim = 0;     // RandVec (multivariate draw result)
    bool random = false;  // value depends on some draw

    bool numeric() const { return kind == Kind::Int || kind == Kind::Real; }
};

struct LoopFacts {
    // iteration count when both bounds fold to index-free affine forms
    std::optional<long long> trip_count;
};

// A program checked against concrete array shapes: loop bounds fold, all
// names resolve, types line up, distributions are on the whitelist.
struct ValidatedProgram {
    const Program* program = nullptr;
    ParamShapes shapes;
    std::map<const Stmt*, LoopFacts> loops;

    const Program& ast() const { return *program; }
};

// Shapes must cover every array parameter (from the declaration literals
// and/or a binding); validation fails on mismatch.
ValidatedProgram validate(const Program& program, const ParamShapes& shapes);

// Convenience: derive shapes from a binding, cross-check declared dims.
ValidatedProgram validate(const Program& program, const InputBinding& binding);

} // namespace psp::lang
