#include "psp/sim.hpp"

namespace psp::slp {

Simulator::Simulator(const StraightLineProgram& program) : slp(program) {
    slot_of.resize(slp.size());
    std::uint32_t next = 0;
    for (InstrId id = 0; id < slp.size(); id++) {
        slot_of[id] = next;
        const Instruction& ins = slp.at(id);
        next += ins.kind == Instruction::Kind::Draw ? static_cast<std::uint32_t>(ins.draw.dim) : 1;
    }
    slots.resize(next);
}

bool Simulator::run(std::uint64_t seed, std::uint64_t sample_index) {
    // booleans are carried as 0.0 / 1.0
    for (InstrId id = 0; id < slp.size(); id++) {
        const Instruction& ins = slp.at(id);
        double* slot = &slots[slot_of[id]];
        auto operand = [&](const Operand& o) -> double {
            switch (o.kind) {
                case Operand::Kind::Imm: return o.value;
                case Operand::Kind::BoolImm: return o.flag ? 1.0 : 0.0;
                case Operand::Kind::Ref: return slots[slot_of[o.id]];
                case Operand::Kind::Elem: return slots[slot_of[o.id] + static_cast<std::uint32_t>(o.comp)];
            }
            return 0.0;
        };
        switch (ins.kind) {
            case Instruction::Kind::ConstLoad:
                *slot = ins.is_bool ? (ins.flag ? 1.0 : 0.0) : ins.value;
                break;
            case Instruction::Kind::InputLoad:
                *slot = ins.is_bool ? (ins.flag ? 1.0 : 0.0) : ins.value;
                break;
            case Instruction::Kind::Draw: {
                const DrawSpec& d = ins.draw;
                SplitMix64 rng(mix_seed(seed, sample_index, id));
                switch (d.family) {
                    case lang::DistFamily::Gaussian: {
                        if (d.dim == 1) {
                            *slot = d.mean[0] + d.chol[0] * rng.next_normal();
                        } else {
                            // z ~ N(0, I); value = mean + L z
                            double z[16];
                            for (int k = 0; k < d.dim; k++) z[k] = rng.next_normal();
                            for (int r = 0; r < d.dim; r++) {
                                double v = d.mean[static_cast<std::size_t>(r)];
                                for (int c = 0; c <= r; c++) {
                                    v += d.chol[static_cast<std::size_t>(r * d.dim + c)] * z[c];
                                }
                                slot[r] = v;
                            }
                        }
                        break;
                    }
                    case lang::DistFamily::Gamma:
                        *slot = rng.next_gamma(d.a, d.b);
                        break;
                    case lang::DistFamily::Beta:
                        *slot = rng.next_beta(d.a, d.b);
                        break;
                    case lang::DistFamily::Bernoulli:
                        *slot = rng.next_unit_co() < d.a ? 1.0 : 0.0;
                        break;
                }
                break;
            }
            case Instruction::Kind::Unary: {
                double a = operand(ins.a);
                *slot = ins.op == OpCode::Neg ? -a : (a != 0.0 ? 0.0 : 1.0);
                break;
            }
            case Instruction::Kind::Binary: {
                double a = operand(ins.a);
                double b = operand(ins.b);
                switch (ins.op) {
                    case OpCode::Add: *slot = a + b; break;
                    case OpCode::Sub: *slot = a - b; break;
                    case OpCode::Mul: *slot = a * b; break;
                    case OpCode::Div: *slot = a / b; break;
                    case OpCode::Lt: *slot = a < b ? 1.0 : 0.0; break;
                    case OpCode::Le: *slot = a <= b ? 1.0 : 0.0; break;
                    case OpCode::Gt: *slot = a > b ? 1.0 : 0.0; break;
                    case OpCode::Ge: *slot = a >= b ? 1.0 : 0.0; break;
                    case OpCode::Eq: *slot = a == b ? 1.0 : 0.0; break;
                    case OpCode::Ne: *slot = a != b ? 1.0 : 0.0; break;
                    case OpCode::And: *slot = (a != 0.0 && b != 0.0) ? 1.0 : 0.0; break;
                    case OpCode::Or: *slot = (a != 0.0 || b != 0.0) ? 1.0 : 0.0; break;
                    default: *slot = 0.0; break;
                }
                break;
            }
        }
    }
    return slots[slot_of[slp.output]] != 0.0;
}

bool simulate(const StraightLineProgram& slp, std::uint64_t seed, std::uint64_t sample_index) {
    Simulator sim(slp);
    return sim.run(seed, sample_index);
}

} // namespace psp::slp
