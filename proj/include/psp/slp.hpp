#pragma once

#include "psp/ast.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace psp::slp {

using InstrId = std::uint32_t;

// An instruction operand: either an immediate constant (deterministic
// leaf reads are evaluated against the binding at unroll time) or a
// reference to an earlier instruction. Elem picks one component of a
// multivariate draw.
struct Operand {
    enum class Kind { Imm, BoolImm, Ref, Elem };
    Kind kind = Kind::Imm;
    double value = 0.0;     // Imm
    bool flag = false;      // BoolImm
    InstrId id = 0;         // Ref / Elem
    int comp = 0;           // Elem component index

    static Operand imm(double v) { return {Kind::Imm, v, false, 0, 0}; }
    static Operand imm_bool(bool v) { return {Kind::BoolImm, 0.0, v, 0, 0}; }
    static Operand ref(InstrId id) { return {Kind::Ref, 0.0, false, id, 0}; }
    static Operand elem(InstrId id, int k) { return {Kind::Elem, 0.0, false, id, k}; }

    bool is_const() const { return kind == Kind::Imm || kind == Kind::BoolImm; }
};

enum class OpCode : std::uint8_t {
    // unary
    Neg, Not,
    // binary
    Add, Sub, Mul, Div,
    Lt, Le, Gt, Ge, Eq, Ne,
    And, Or,
};

const char* opcode_name(OpCode op);
bool opcode_is_unary(OpCode op);
bool opcode_is_comparison(OpCode op);
bool opcode_is_boolean(OpCode op);

// Fully evaluated distribution: parameters are numbers by the time an
// instruction exists. Multivariate Gaussians carry mean vector, row-major
// covariance, and its (pivot-tolerant) Cholesky factor.
struct DrawSpec {
    lang::DistFamily family = lang::DistFamily::Gaussian;
    int dim = 1;
    std::vector<double> mean;        // Gaussian: length dim
    std::vector<double> cov;         // Gaussian: dim*dim row-major (scalar: {variance})
    std::vector<double> chol;        // lower-triangular factor of cov
    double a = 0.0, b = 0.0;         // Gamma(shape, rate), Beta(a, b), Bernoulli(p in a)
};

struct Instruction {
    enum class Kind { ConstLoad, InputLoad, Draw, Unary, Binary };
    Kind kind = Kind::ConstLoad;

    // ConstLoad / InputLoad payloads
    double value = 0.0;
    bool flag = false;
    bool is_bool = false;
    std::string input_name;   // InputLoad provenance
    long long input_flat = 0;

    DrawSpec draw;            // Draw

    OpCode op = OpCode::Add;  // Unary / Binary
    Operand a, b;

    bool result_is_bool() const {
        if (kind == Kind::ConstLoad || kind == Kind::InputLoad) return is_bool;
        if (kind == Kind::Draw) return false;
        if (kind == Kind::Unary) return op == OpCode::Not;
        return opcode_is_comparison(op) || opcode_is_boolean(op);
    }
};

// Fully unrolled single-assignment form: one draw / unary / binary
// operation per instruction, operands either earlier instructions or
// constants, topologically ordered by construction.
struct StraightLineProgram {
    std::vector<Instruction> instructions;
    InstrId output = 0;

    const Instruction& at(InstrId id) const { return instructions[id]; }
    std::size_t size() const { return instructions.size(); }
};

// Line-numbered text form for golden tests and debugging.
std::string dump(const StraightLineProgram& slp);

// True where the instruction's value depends on some draw.
std::vector<bool> random_mask(const StraightLineProgram& slp);

} // namespace psp::slp
