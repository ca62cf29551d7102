#include "psp/unroll.hpp"

#include "psp/linalg.hpp"
#include "psp/numfmt.hpp"

#include <cmath>
#include <unordered_map>

namespace psp::slp {

using lang::BoundValue;
using lang::DistFamily;
using lang::Expr;
using lang::Stmt;

namespace {

// Environment value: an operand, possibly tagged as a whole vector draw
// (which only supports indexing).
struct EnvValue {
    Operand op;
    bool is_vec = false;
    int dim = 1;
};

struct Unroller {
    const lang::ValidatedProgram& vp;
    const lang::InputBinding& binding;
    StraightLineProgram out;

    std::unordered_map<std::string, EnvValue> env;
    std::unordered_map<std::string, long long> counters;
    // statically known numeric value per emitted instruction, so that a
    // deterministic variable can still feed a later static context
    // (distribution parameters, loop bounds)
    std::vector<double> instr_value;
    std::vector<bool> instr_known;

    [[noreturn]] void error(const std::string& message, SourceLoc loc) {
        fail(Error::Kind::Unroll, message, loc);
    }

    InstrId push(Instruction ins) {
        out.instructions.push_back(std::move(ins));
        InstrId id = static_cast<InstrId>(out.instructions.size() - 1);
        instr_value.push_back(0.0);
        instr_known.push_back(false);
        const Instruction& stored = out.instructions[id];
        if (stored.kind == Instruction::Kind::Unary || stored.kind == Instruction::Kind::Binary) {
            double a, b = 0.0;
            bool known = operand_value(stored.a, a);
            if (stored.kind == Instruction::Kind::Binary) {
                known = known && operand_value(stored.b, b);
            }
            if (known) {
                bool ok = true;
                double v = 0.0;
                switch (stored.op) {
                    case OpCode::Neg: v = -a; break;
                    case OpCode::Add: v = a + b; break;
                    case OpCode::Sub: v = a - b; break;
                    case OpCode::Mul: v = a * b; break;
                    case OpCode::Div: v = a / b; break;
                    default: ok = false; break;  // boolean results are not
                                                 // needed in static contexts
                }
                if (ok) {
                    instr_value[id] = v;
                    instr_known[id] = true;
                }
            }
        }
        return id;
    }

    bool operand_value(const Operand& o, double& v) const {
        if (o.kind == Operand::Kind::Imm) {
            v = o.value;
            return true;
        }
        if (o.kind == Operand::Kind::Ref && instr_known[o.id]) {
            v = instr_value[o.id];
            return true;
        }
        return false;
    }

    // ---- static (deterministic) evaluation: loop bounds, indices,
    // ---- distribution parameters
    double eval_static(const Expr& e) {
        return std::visit(
            [&](const auto& node) -> double {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Expr::IntLit>) {
                    return static_cast<double>(node.value);
                } else if constexpr (std::is_same_v<T, Expr::RealLit>) {
                    return node.value;
                } else if constexpr (std::is_same_v<T, Expr::BoolLit>) {
                    error("boolean value in a numeric position", e.loc);
                } else if constexpr (std::is_same_v<T, Expr::Var>) {
                    auto counter = counters.find(node.name);
                    if (counter != counters.end()) return static_cast<double>(counter->second);
                    auto it = env.find(node.name);
                    if (it != env.end()) {
                        double v;
                        if (operand_value(it->second.op, v)) return v;
                    }
                    if (it == env.end() && binding.has(node.name) &&
                        binding.get(node.name).kind == BoundValue::Kind::Scalar) {
                        return binding.get(node.name).scalar;
                    }
                    error("'" + node.name + "' is not deterministic here", e.loc);
                } else if constexpr (std::is_same_v<T, Expr::Index>) {
                    return input_element(node, e.loc);
                } else if constexpr (std::is_same_v<T, Expr::Length>) {
                    return static_cast<double>(
                        binding.get(node.array).dim(node.axis));
                } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                    double v = eval_static(*node.operand);
                    if (node.op == lang::UnOp::Neg) return -v;
                    error("'!' in a numeric position", e.loc);
                } else {
                    double l = eval_static(*node.lhs);
                    double r = eval_static(*node.rhs);
                    switch (node.op) {
                        case lang::BinOp::Add: return l + r;
                        case lang::BinOp::Sub: return l - r;
                        case lang::BinOp::Mul: return l * r;
                        case lang::BinOp::Div: return l / r;
                        default: error("comparison in a numeric position", e.loc);
                    }
                }
            },
            e.node);
    }

    double eval_static(const lang::ExprPtr& e) { return eval_static(*e); }

    long long eval_static_int(const Expr& e, const char* what) {
        double v = eval_static(e);
        double rounded = std::nearbyint(v);
        if (std::abs(v - rounded) > 1e-9) {
            error(std::string(what) + " does not evaluate to an integer", e.loc);
        }
        return static_cast<long long>(rounded);
    }

    double input_element(const Expr::Index& node, SourceLoc loc) {
        const BoundValue& value = binding.get(node.array);
        if (value.kind != BoundValue::Kind::Array) {
            error("'" + node.array + "' is not an array", loc);
        }
        std::vector<long long> idx;
        idx.reserve(node.indices.size());
        for (const auto& i : node.indices) idx.push_back(eval_static_int(*i, "array index"));
        return value.at(idx);
    }

    // ---- value emission
    Operand emit(const Expr& e) {
        return std::visit(
            [&](const auto& node) -> Operand {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Expr::IntLit>) {
                    return Operand::imm(static_cast<double>(node.value));
                } else if constexpr (std::is_same_v<T, Expr::RealLit>) {
                    return Operand::imm(node.value);
                } else if constexpr (std::is_same_v<T, Expr::BoolLit>) {
                    return Operand::imm_bool(node.value);
                } else if constexpr (std::is_same_v<T, Expr::Var>) {
                    auto counter = counters.find(node.name);
                    if (counter != counters.end()) {
                        return Operand::imm(static_cast<double>(counter->second));
                    }
                    auto it = env.find(node.name);
                    if (it != env.end()) {
                        if (it->second.is_vec) {
                            error("vector draw '" + node.name + "' must be indexed", e.loc);
                        }
                        return it->second.op;
                    }
                    const BoundValue& value = binding.get(node.name);
                    if (value.kind == BoundValue::Kind::Scalar) return Operand::imm(value.scalar);
                    if (value.kind == BoundValue::Kind::Bool) return Operand::imm_bool(value.flag);
                    error("array '" + node.name + "' must be indexed", e.loc);
                } else if constexpr (std::is_same_v<T, Expr::Index>) {
                    auto it = env.find(node.array);
                    if (it != env.end() && it->second.is_vec) {
                        long long k = eval_static_int(*node.indices[0], "draw component index");
                        if (k < 0 || k >= it->second.dim) {
                            error("component index " + std::to_string(k) + " out of range for '" +
                                      node.array + "'",
                                  e.loc);
                        }
                        return Operand::elem(it->second.op.id, static_cast<int>(k));
                    }
                    return Operand::imm(input_element(node, e.loc));
                } else if constexpr (std::is_same_v<T, Expr::Length>) {
                    return Operand::imm(static_cast<double>(binding.get(node.array).dim(node.axis)));
                } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                    Instruction ins;
                    ins.kind = Instruction::Kind::Unary;
                    ins.op = node.op == lang::UnOp::Neg ? OpCode::Neg : OpCode::Not;
                    ins.a = emit(*node.operand);
                    return Operand::ref(push(std::move(ins)));
                } else {
                    Instruction ins;
                    ins.kind = Instruction::Kind::Binary;
                    ins.op = binop_code(node.op);
                    ins.a = emit(*node.lhs);
                    ins.b = emit(*node.rhs);
                    return Operand::ref(push(std::move(ins)));
                }
            },
            e.node);
    }

    static OpCode binop_code(lang::BinOp op) {
        switch (op) {
            case lang::BinOp::Add: return OpCode::Add;
            case lang::BinOp::Sub: return OpCode::Sub;
            case lang::BinOp::Mul: return OpCode::Mul;
            case lang::BinOp::Div: return OpCode::Div;
            case lang::BinOp::Lt: return OpCode::Lt;
            case lang::BinOp::Le: return OpCode::Le;
            case lang::BinOp::Gt: return OpCode::Gt;
            case lang::BinOp::Ge: return OpCode::Ge;
            case lang::BinOp::Eq: return OpCode::Eq;
            case lang::BinOp::Ne: return OpCode::Ne;
            case lang::BinOp::And: return OpCode::And;
            case lang::BinOp::Or: return OpCode::Or;
        }
        return OpCode::Add;
    }

    // ---- distribution lowering
    void lower_draw(const Stmt::Draw& node, SourceLoc loc) {
        const lang::DistCall& dist = node.dist;
        Instruction ins;
        ins.kind = Instruction::Kind::Draw;
        ins.draw.family = dist.family;
        bool is_vec = false;
        switch (dist.family) {
            case DistFamily::Gaussian: {
                const auto* mean_var = std::get_if<Expr::Var>(&dist.args[0]->node);
                bool multivariate = mean_var != nullptr && binding.has(mean_var->name) &&
                                    binding.get(mean_var->name).kind == BoundValue::Kind::Array;
                if (multivariate) {
                    const auto* cov_var = std::get_if<Expr::Var>(&dist.args[1]->node);
                    const BoundValue& mean = binding.get(mean_var->name);
                    const BoundValue& cov = binding.get(cov_var->name);
                    int k = static_cast<int>(mean.dim(0));
                    if (k > 16) {
                        error("multivariate Gaussian dimension " + std::to_string(k) +
                                  " exceeds the supported maximum (16)",
                              loc);
                    }
                    ins.draw.dim = k;
                    ins.draw.mean = mean.data;
                    ins.draw.cov = cov.data;
                    Mat sigma(k, k);
                    sigma.a = cov.data;
                    if (!is_symmetric(sigma, 1e-9)) {
                        error("covariance matrix '" + cov_var->name + "' is not symmetric", loc);
                    }
                    Mat lower;
                    if (!cholesky_psd(sigma, lower)) {
                        error("covariance matrix '" + cov_var->name +
                                  "' is not positive semidefinite",
                              loc);
                    }
                    ins.draw.chol = lower.a;
                    is_vec = k > 1;
                    if (k == 1) {
                        ins.draw.dim = 1;
                    }
                } else {
                    double mean = eval_static(dist.args[0]);
                    double variance = eval_static(dist.args[1]);
                    if (variance < 0.0) {
                        error("Gaussian variance evaluates to " + fmt_double(variance) +
                                  " (must be >= 0)",
                              loc);
                    }
                    ins.draw.dim = 1;
                    ins.draw.mean = {mean};
                    ins.draw.cov = {variance};
                    ins.draw.chol = {std::sqrt(variance)};
                }
                break;
            }
            case DistFamily::Gamma:
            case DistFamily::Beta: {
                double a = eval_static(dist.args[0]);
                double b = eval_static(dist.args[1]);
                if (a <= 0.0 || b <= 0.0) {
                    error(std::string(dist_family_name(dist.family)) +
                              " parameters must be positive",
                          loc);
                }
                ins.draw.a = a;
                ins.draw.b = b;
                break;
            }
            case DistFamily::Bernoulli: {
                double p = eval_static(dist.args[0]);
                if (p < 0.0 || p > 1.0) {
                    error("Bernoulli parameter must lie in [0, 1]", loc);
                }
                ins.draw.a = p;
                break;
            }
        }
        int dim = ins.draw.dim;
        InstrId id = push(std::move(ins));
        EnvValue value;
        value.op = Operand::ref(id);
        if (is_vec) {
            // a 1-element "vector" behaves like a scalar and never lands here
            value.is_vec = true;
            value.dim = dim;
        }
        env[node.name] = value;
    }

    void run_stmt(const Stmt& stmt) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Stmt::Assign>) {
                    EnvValue value;
                    value.op = emit(*node.value);
                    env[node.name] = value;
                } else if constexpr (std::is_same_v<T, Stmt::Draw>) {
                    lower_draw(node, stmt.loc);
                } else {
                    long long lo = eval_static_int(*node.init, "loop initializer");
                    long long hi = eval_static_int(*node.bound, "loop bound");
                    if (node.inclusive) hi += 1;
                    for (long long i = lo; i < hi; i++) {
                        counters[node.var] = i;
                        for (const auto& s : node.body) run_stmt(*s);
                    }
                    counters.erase(node.var);
                }
            },
            stmt.node);
    }

    StraightLineProgram run() {
        for (const auto& stmt : vp.ast().body) run_stmt(*stmt);
        const Expr& ret = *vp.ast().return_expr;
        Operand result = emit(ret);
        if (result.is_const()) {
            // a bare parameter keeps its provenance as an input load; any
            // other constant return materializes as a const load
            const auto* var = std::get_if<Expr::Var>(&ret.node);
            Instruction ins;
            if (var != nullptr && binding.has(var->name) && env.count(var->name) == 0) {
                ins.kind = Instruction::Kind::InputLoad;
                ins.input_name = var->name;
            } else {
                ins.kind = Instruction::Kind::ConstLoad;
            }
            ins.is_bool = true;
            ins.flag = result.kind == Operand::Kind::BoolImm ? result.flag : result.value != 0.0;
            out.output = push(std::move(ins));
        } else {
            out.output = result.id;
        }
        return std::move(out);
    }
};

} // namespace

StraightLineProgram unroll(const lang::ValidatedProgram& vp, const lang::InputBinding& binding) {
    // re-validate against the binding's shapes so stale ValidatedPrograms
    // cannot smuggle mismatched dimensions through
    for (const lang::ParamDecl& param : vp.ast().params) {
        if (!binding.has(param.name)) {
            fail(Error::Kind::Unroll, "parameter '" + param.name + "' is not bound", param.loc);
        }
    }
    Unroller u{vp, binding, {}, {}, {}, {}, {}};
    return u.run();
}

namespace {

struct FoldedValue {
    bool known = false;
    bool is_bool = false;
    double value = 0.0;
    bool flag = false;
};

} // namespace

StraightLineProgram constant_fold(const StraightLineProgram& slp) {
    StraightLineProgram out = slp;
    std::vector<FoldedValue> folded(out.size());

    auto operand_value = [&](const Operand& o, FoldedValue& v) -> bool {
        if (o.kind == Operand::Kind::Imm) {
            v = {true, false, o.value, false};
            return true;
        }
        if (o.kind == Operand::Kind::BoolImm) {
            v = {true, true, 0.0, o.flag};
            return true;
        }
        if (o.kind == Operand::Kind::Ref && folded[o.id].known) {
            v = folded[o.id];
            return true;
        }
        return false;
    };

    auto to_const_operand = [](const FoldedValue& v) {
        return v.is_bool ? Operand::imm_bool(v.flag) : Operand::imm(v.value);
    };

    for (InstrId id = 0; id < out.size(); id++) {
        Instruction& ins = out.instructions[id];
        FoldedValue result;
        switch (ins.kind) {
            case Instruction::Kind::ConstLoad:
                result = {true, ins.is_bool, ins.value, ins.flag};
                break;
            case Instruction::Kind::InputLoad:
                result = {true, ins.is_bool, ins.value, ins.flag};
                break;
            case Instruction::Kind::Draw:
                continue;
            case Instruction::Kind::Unary: {
                FoldedValue a;
                if (!operand_value(ins.a, a)) {
                    continue;
                }
                if (ins.op == OpCode::Neg) {
                    result = {true, false, -a.value, false};
                } else {
                    result = {true, true, 0.0, !a.flag};
                }
                break;
            }
            case Instruction::Kind::Binary: {
                FoldedValue a, b;
                bool ka = operand_value(ins.a, a);
                bool kb = operand_value(ins.b, b);
                if (ka && !kb) ins.a = to_const_operand(a);
                if (kb && !ka) ins.b = to_const_operand(b);
                if (!ka || !kb) {
                    // dominating boolean constant: true || x, false && x
                    if (ins.op == OpCode::Or && ((ka && a.flag) || (kb && b.flag))) {
                        result = {true, true, 0.0, true};
                        break;
                    }
                    if (ins.op == OpCode::And && ((ka && !a.flag) || (kb && !b.flag))) {
                        result = {true, true, 0.0, false};
                        break;
                    }
                    continue;
                }
                switch (ins.op) {
                    case OpCode::Add: result = {true, false, a.value + b.value, false}; break;
                    case OpCode::Sub: result = {true, false, a.value - b.value, false}; break;
                    case OpCode::Mul: result = {true, false, a.value * b.value, false}; break;
                    case OpCode::Div: result = {true, false, a.value / b.value, false}; break;
                    case OpCode::Lt: result = {true, true, 0.0, a.value < b.value}; break;
                    case OpCode::Le: result = {true, true, 0.0, a.value <= b.value}; break;
                    case OpCode::Gt: result = {true, true, 0.0, a.value > b.value}; break;
                    case OpCode::Ge: result = {true, true, 0.0, a.value >= b.value}; break;
                    case OpCode::Eq: result = {true, true, 0.0, a.value == b.value}; break;
                    case OpCode::Ne: result = {true, true, 0.0, a.value != b.value}; break;
                    case OpCode::And: result = {true, true, 0.0, a.flag && b.flag}; break;
                    case OpCode::Or: result = {true, true, 0.0, a.flag || b.flag}; break;
                    default: continue;
                }
                break;
            }
        }
        if (!result.known) continue;
        folded[id] = result;
        Instruction replacement;
        replacement.kind = Instruction::Kind::ConstLoad;
        replacement.is_bool = result.is_bool;
        replacement.value = result.value;
        replacement.flag = result.flag;
        ins = std::move(replacement);
    }

    // rewrite references to folded instructions into immediates
    for (InstrId id = 0; id < out.size(); id++) {
        Instruction& ins = out.instructions[id];
        if (ins.kind != Instruction::Kind::Unary && ins.kind != Instruction::Kind::Binary) continue;
        FoldedValue v;
        if (ins.a.kind == Operand::Kind::Ref && folded[ins.a.id].known) {
            v = folded[ins.a.id];
            ins.a = to_const_operand(v);
        }
        if (ins.kind == Instruction::Kind::Binary && ins.b.kind == Operand::Kind::Ref &&
            folded[ins.b.id].known) {
            v = folded[ins.b.id];
            ins.b = to_const_operand(v);
        }
    }
    return out;
}

} // namespace psp::slp
