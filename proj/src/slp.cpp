#include "psp/slp.hpp"

#include "psp/numfmt.hpp"

#include <sstream>

namespace psp::slp {

const char* opcode_name(OpCode op) {
    switch (op) {
        case OpCode::Neg: return "neg";
        case OpCode::Not: return "not";
        case OpCode::Add: return "add";
        case OpCode::Sub: return "sub";
        case OpCode::Mul: return "mul";
        case OpCode::Div: return "div";
        case OpCode::Lt: return "lt";
        case OpCode::Le: return "le";
        case OpCode::Gt: return "gt";
        case OpCode::Ge: return "ge";
        case OpCode::Eq: return "eq";
        case OpCode::Ne: return "ne";
        case OpCode::And: return "and";
        case OpCode::Or: return "or";
    }
    return "?";
}

bool opcode_is_unary(OpCode op) { return op == OpCode::Neg || op == OpCode::Not; }

bool opcode_is_comparison(OpCode op) {
    switch (op) {
        case OpCode::Lt:
        case OpCode::Le:
        case OpCode::Gt:
        case OpCode::Ge:
        case OpCode::Eq:
        case OpCode::Ne: return true;
        default: return false;
    }
}

bool opcode_is_boolean(OpCode op) { return op == OpCode::And || op == OpCode::Or; }

namespace {

std::string operand_text(const Operand& o) {
    switch (o.kind) {
        case Operand::Kind::Imm: return fmt_double(o.value);
        case Operand::Kind::BoolImm: return o.flag ? "true" : "false";
        case Operand::Kind::Ref: return "%" + std::to_string(o.id);
        case Operand::Kind::Elem:
            return "%" + std::to_string(o.id) + "[" + std::to_string(o.comp) + "]";
    }
    return "?";
}

std::string draw_text(const DrawSpec& d) {
    std::ostringstream out;
    switch (d.family) {
        case lang::DistFamily::Gaussian:
            if (d.dim == 1) {
                out << "gaussian(" << fmt_double(d.mean[0]) << ", " << fmt_double(d.cov[0]) << ")";
            } else {
                out << "gaussian(mean=[";
                for (int i = 0; i < d.dim; i++) {
                    if (i) out << ", ";
                    out << fmt_double(d.mean[static_cast<std::size_t>(i)]);
                }
                out << "], cov=[";
                for (int r = 0; r < d.dim; r++) {
                    if (r) out << "; ";
                    for (int c = 0; c < d.dim; c++) {
                        if (c) out << ", ";
                        out << fmt_double(d.cov[static_cast<std::size_t>(r * d.dim + c)]);
                    }
                }
                out << "])";
            }
            break;
        case lang::DistFamily::Gamma:
            out << "gamma(" << fmt_double(d.a) << ", " << fmt_double(d.b) << ")";
            break;
        case lang::DistFamily::Beta:
            out << "beta(" << fmt_double(d.a) << ", " << fmt_double(d.b) << ")";
            break;
        case lang::DistFamily::Bernoulli:
            out << "bernoulli(" << fmt_double(d.a) << ")";
            break;
    }
    return out.str();
}

} // namespace

std::string dump(const StraightLineProgram& slp) {
    std::ostringstream out;
    for (InstrId id = 0; id < slp.size(); id++) {
        const Instruction& ins = slp.at(id);
        out << "%" << id << " = ";
        switch (ins.kind) {
            case Instruction::Kind::ConstLoad:
                out << "const " << (ins.is_bool ? (ins.flag ? "true" : "false") : fmt_double(ins.value));
                break;
            case Instruction::Kind::InputLoad:
                out << "input " << ins.input_name << "#" << ins.input_flat;
                break;
            case Instruction::Kind::Draw:
                out << "draw " << draw_text(ins.draw);
                break;
            case Instruction::Kind::Unary:
                out << opcode_name(ins.op) << " " << operand_text(ins.a);
                break;
            case Instruction::Kind::Binary:
                out << opcode_name(ins.op) << " " << operand_text(ins.a) << ", "
                    << operand_text(ins.b);
                break;
        }
        out << "\n";
    }
    out << "output %" << slp.output << "\n";
    return out.str();
}

std::vector<bool> random_mask(const StraightLineProgram& slp) {
    std::vector<bool> random(slp.size(), false);
    for (InstrId id = 0; id < slp.size(); id++) {
        const Instruction& ins = slp.at(id);
        if (ins.kind == Instruction::Kind::Draw) {
            random[id] = true;
        } else if (ins.kind == Instruction::Kind::Unary) {
            random[id] = !ins.a.is_const() && random[ins.a.id];
        } else if (ins.kind == Instruction::Kind::Binary) {
            random[id] = (!ins.a.is_const() && random[ins.a.id]) ||
                         (!ins.b.is_const() && random[ins.b.id]);
        }
    }
    return random;
}

} // namespace psp::slp
