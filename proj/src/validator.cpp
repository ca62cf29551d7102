#include "psp/validator.hpp"

#include <set>

namespace psp::lang {

namespace {

// Affine function of the enclosing loop counters, used to fold loop trip
// counts at validation time. Anything else (products of counters, etc.)
// is still legal (the unroller evaluates bounds per iteration), but its
// trip count is not reported.
struct IndexAffine {
    bool affine = true;
    long long constant = 0;
    std::map<std::string, long long> coeffs;

    static IndexAffine non_affine() {
        IndexAffine a;
        a.affine = false;
        return a;
    }
};

IndexAffine aff_add(const IndexAffine& a, const IndexAffine& b, long long sign) {
    if (!a.affine || !b.affine) return IndexAffine::non_affine();
    IndexAffine out = a;
    out.constant += sign * b.constant;
    for (const auto& [k, v] : b.coeffs) {
        out.coeffs[k] += sign * v;
        if (out.coeffs[k] == 0) out.coeffs.erase(k);
    }
    return out;
}

IndexAffine aff_mul(const IndexAffine& a, const IndexAffine& b) {
    if (!a.affine || !b.affine) return IndexAffine::non_affine();
    if (a.coeffs.empty()) {
        IndexAffine out = b;
        out.constant *= a.constant;
        for (auto& [k, v] : out.coeffs) v *= a.constant;
        if (a.constant == 0) out.coeffs.clear();
        return out;
    }
    if (b.coeffs.empty()) return aff_mul(b, a);
    return IndexAffine::non_affine();
}

struct Checker {
    const Program& program;
    const ParamShapes& shapes;
    std::map<const Stmt*, LoopFacts> loops;

    // variable environment; loop counters are scoped
    std::map<std::string, Type> vars;
    std::set<std::string> loop_counters;
    std::set<std::string> param_names;

    explicit Checker(const Program& p, const ParamShapes& s) : program(p), shapes(s) {}

    [[noreturn]] void error(const std::string& message, SourceLoc loc) {
        fail(Error::Kind::Validate, message, loc);
    }

    const std::vector<long long>& array_dims(const std::string& name, SourceLoc loc) {
        auto it = shapes.find(name);
        if (it == shapes.end()) {
            error("no concrete dimensions known for array parameter '" + name + "'", loc);
        }
        return it->second;
    }

    void check_params() {
        for (const ParamDecl& param : program.params) {
            if (!param_names.insert(param.name).second) {
                error("duplicate parameter '" + param.name + "'", param.loc);
            }
            Type t;
            if (param.is_bool) {
                t.kind = Type::Kind::Bool;
            } else if (param.rank() == 0) {
                t.kind = Type::Kind::Real;
            } else {
                t.kind = Type::Kind::Array;
                t.rank = param.rank();
                const auto& dims = array_dims(param.name, param.loc);
                if (static_cast<int>(dims.size()) != param.rank()) {
                    error("array parameter '" + param.name + "' is declared with rank " +
                              std::to_string(param.rank()) + " but bound with rank " +
                              std::to_string(dims.size()),
                          param.loc);
                }
                for (int axis = 0; axis < param.rank(); axis++) {
                    if (param.dims[axis] && *param.dims[axis] != dims[axis]) {
                        error("array parameter '" + param.name + "' declares extent " +
                                  std::to_string(*param.dims[axis]) + " on axis " +
                                  std::to_string(axis) + " but is bound with extent " +
                                  std::to_string(dims[axis]),
                              param.loc);
                    }
                }
            }
            vars[param.name] = t;
        }
    }

    Type check_expr(const Expr& e) {
        return std::visit(
            [&](const auto& node) -> Type {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Expr::IntLit>) {
                    return Type{Type::Kind::Int};
                } else if constexpr (std::is_same_v<T, Expr::RealLit>) {
                    return Type{Type::Kind::Real};
                } else if constexpr (std::is_same_v<T, Expr::BoolLit>) {
                    return Type{Type::Kind::Bool};
                } else if constexpr (std::is_same_v<T, Expr::Var>) {
                    auto it = vars.find(node.name);
                    if (it == vars.end()) {
                        error("use of undefined variable '" + node.name + "'", e.loc);
                    }
                    if (it->second.kind == Type::Kind::Array) {
                        error("array '" + node.name + "' must be indexed (or passed whole to Gaussian)",
                              e.loc);
                    }
                    if (it->second.kind == Type::Kind::RandVec) {
                        error("vector draw '" + node.name + "' must be indexed", e.loc);
                    }
                    return it->second;
                } else if constexpr (std::is_same_v<T, Expr::Index>) {
                    return check_index(node, e.loc);
                } else if constexpr (std::is_same_v<T, Expr::Length>) {
                    const auto& dims = array_dims_checked(node.array, node.axis, e.loc);
                    (void)dims;
                    return Type{Type::Kind::Int};
                } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                    Type inner = check_expr(*node.operand);
                    if (node.op == UnOp::Not) {
                        if (inner.kind != Type::Kind::Bool) {
                            error("'!' needs a boolean operand", e.loc);
                        }
                        return inner;
                    }
                    if (!inner.numeric()) {
                        error("unary '-' needs a numeric operand", e.loc);
                    }
                    return inner;
                } else {
                    return check_binary(node, e.loc);
                }
            },
            e.node);
    }

    const std::vector<long long>& array_dims_checked(const std::string& name, int axis,
                                                     SourceLoc loc) {
        auto it = vars.find(name);
        if (it == vars.end()) {
            error("use of undefined variable '" + name + "'", loc);
        }
        if (it->second.kind != Type::Kind::Array) {
            error("'" + name + "' is not an array parameter", loc);
        }
        const auto& dims = array_dims(name, loc);
        if (axis < 0 || axis >= static_cast<int>(dims.size())) {
            error("GetLength axis " + std::to_string(axis) + " out of range for '" + name + "'", loc);
        }
        return dims;
    }

    Type check_index(const Expr::Index& node, SourceLoc loc) {
        auto it = vars.find(node.array);
        if (it == vars.end()) {
            error("use of undefined variable '" + node.array + "'", loc);
        }
        const Type& base = it->second;
        int expected_rank;
        if (base.kind == Type::Kind::Array) {
            expected_rank = base.rank;
        } else if (base.kind == Type::Kind::RandVec) {
            expected_rank = 1;
        } else {
            error("'" + node.array + "' is not indexable", loc);
        }
        if (static_cast<int>(node.indices.size()) != expected_rank) {
            error("'" + node.array + "' has rank " + std::to_string(expected_rank) + " but is indexed with " +
                      std::to_string(node.indices.size()) + " indices",
                  loc);
        }
        for (const auto& idx : node.indices) {
            Type t = check_expr(*idx);
            if (t.kind != Type::Kind::Int) {
                error("array indices must be compile-time integers (literals, loop counters, GetLength)",
                      idx->loc);
            }
        }
        Type out{Type::Kind::Real};
        out.random = base.kind == Type::Kind::RandVec;
        return out;
    }

    Type check_binary(const Expr::Binary& node, SourceLoc loc) {
        Type lhs = check_expr(*node.lhs);
        Type rhs = check_expr(*node.rhs);
        bool random = lhs.random || rhs.random;
        switch (node.op) {
            case BinOp::And:
            case BinOp::Or: {
                if (lhs.kind != Type::Kind::Bool || rhs.kind != Type::Kind::Bool) {
                    error(std::string("'") + binop_name(node.op) + "' needs boolean operands", loc);
                }
                Type out{Type::Kind::Bool};
                out.random = random;
                return out;
            }
            case BinOp::Lt:
            case BinOp::Le:
            case BinOp::Gt:
            case BinOp::Ge:
            case BinOp::Eq:
            case BinOp::Ne: {
                if (!lhs.numeric() || !rhs.numeric()) {
                    error(std::string("'") + binop_name(node.op) + "' needs numeric operands", loc);
                }
                Type out{Type::Kind::Bool};
                out.random = random;
                return out;
            }
            default: {
                if (!lhs.numeric() || !rhs.numeric()) {
                    error(std::string("'") + binop_name(node.op) + "' needs numeric operands", loc);
                }
                Type out;
                // '/' always divides as reals; ints stay ints under + - *
                out.kind = (lhs.kind == Type::Kind::Int && rhs.kind == Type::Kind::Int &&
                            node.op != BinOp::Div)
                               ? Type::Kind::Int
                               : Type::Kind::Real;
                out.random = random;
                return out;
            }
        }
    }

    IndexAffine fold_index_expr(const Expr& e) {
        return std::visit(
            [&](const auto& node) -> IndexAffine {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Expr::IntLit>) {
                    IndexAffine a;
                    a.constant = node.value;
                    return a;
                } else if constexpr (std::is_same_v<T, Expr::Var>) {
                    IndexAffine a;
                    a.coeffs[node.name] = 1;
                    return a;
                } else if constexpr (std::is_same_v<T, Expr::Length>) {
                    IndexAffine a;
                    a.constant = array_dims(node.array, e.loc)[static_cast<std::size_t>(node.axis)];
                    return a;
                } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                    return aff_add(IndexAffine{}, fold_index_expr(*node.operand), -1);
                } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                    IndexAffine l = fold_index_expr(*node.lhs);
                    IndexAffine r = fold_index_expr(*node.rhs);
                    switch (node.op) {
                        case BinOp::Add: return aff_add(l, r, 1);
                        case BinOp::Sub: return aff_add(l, r, -1);
                        case BinOp::Mul: return aff_mul(l, r);
                        default: return IndexAffine::non_affine();
                    }
                } else {
                    return IndexAffine::non_affine();
                }
            },
            e.node);
    }

    // A draw may not be parameterized by another draw: distribution
    // arguments must be deterministic given the inputs and loop counters.
    void check_dist_arg_deterministic(const Expr& e, DistFamily family) {
        Type t = check_expr(e);
        if (t.random) {
            error(std::string("parameters of ") + dist_family_name(family) +
                      " must be deterministic: a draw cannot be parameterized by another draw",
                  e.loc);
        }
    }

    void check_dist(const DistCall& dist, SourceLoc loc, bool& vector_result, int& dim) {
        vector_result = false;
        dim = 1;
        switch (dist.family) {
            case DistFamily::Gaussian: {
                if (dist.args.size() != 2) {
                    error("Gaussian takes (mean, variance) or (mean vector, covariance matrix)", loc);
                }
                // multivariate form: both args are whole array parameters
                const auto* mean_var = std::get_if<Expr::Var>(&dist.args[0]->node);
                if (mean_var != nullptr && vars.count(mean_var->name) &&
                    vars[mean_var->name].kind == Type::Kind::Array) {
                    const auto* cov_var = std::get_if<Expr::Var>(&dist.args[1]->node);
                    if (cov_var == nullptr || !vars.count(cov_var->name) ||
                        vars[cov_var->name].kind != Type::Kind::Array) {
                        error("Gaussian with a mean vector needs a covariance matrix parameter", loc);
                    }
                    const auto& mean_dims = array_dims(mean_var->name, loc);
                    const auto& cov_dims = array_dims(cov_var->name, loc);
                    if (mean_dims.size() != 1 || cov_dims.size() != 2 ||
                        cov_dims[0] != cov_dims[1] || cov_dims[0] != mean_dims[0]) {
                        error("Gaussian(mean, cov) needs a length-k vector and a k-by-k matrix", loc);
                    }
                    vector_result = true;
                    dim = static_cast<int>(mean_dims[0]);
                    return;
                }
                for (const auto& arg : dist.args) check_dist_arg_deterministic(*arg, dist.family);
                return;
            }
            case DistFamily::Gamma:
            case DistFamily::Beta: {
                if (dist.args.size() != 2) {
                    error(std::string(dist_family_name(dist.family)) + " takes exactly two parameters",
                          loc);
                }
                for (const auto& arg : dist.args) check_dist_arg_deterministic(*arg, dist.family);
                return;
            }
            case DistFamily::Bernoulli: {
                if (dist.args.size() != 1) {
                    error("Bernoulli takes exactly one parameter", loc);
                }
                check_dist_arg_deterministic(*dist.args[0], dist.family);
                return;
            }
        }
    }

    void check_assign_target(const std::string& name, DeclType decl, Type value, SourceLoc loc) {
        if (param_names.count(name)) {
            error("cannot assign to parameter '" + name + "'", loc);
        }
        if (loop_counters.count(name)) {
            error("cannot assign to loop counter '" + name + "'", loc);
        }
        auto it = vars.find(name);
        if (decl != DeclType::None && it != vars.end()) {
            error("redeclaration of '" + name + "'", loc);
        }
        if (decl == DeclType::Bool && value.kind != Type::Kind::Bool) {
            error("'" + name + "' is declared bool but assigned a non-boolean value", loc);
        }
        if (decl == DeclType::Double && !value.numeric()) {
            error("'" + name + "' is declared double but assigned a non-numeric value", loc);
        }
        if (it != vars.end()) {
            bool same = it->second.kind == value.kind ||
                        (it->second.numeric() && value.numeric());
            if (!same) {
                error("'" + name + "' changes type on reassignment", loc);
            }
        }
        Type stored = value;
        if (decl == DeclType::Double || (it != vars.end() && it->second.kind == Type::Kind::Real)) {
            if (stored.kind == Type::Kind::Int) stored.kind = Type::Kind::Real;
        }
        vars[name] = stored;
    }

    void check_stmt(const Stmt& stmt) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Stmt::Assign>) {
                    Type value = check_expr(*node.value);
                    check_assign_target(node.name, node.decl, value, stmt.loc);
                } else if constexpr (std::is_same_v<T, Stmt::Draw>) {
                    bool vector_result = false;
                    int dim = 1;
                    check_dist(node.dist, stmt.loc, vector_result, dim);
                    Type value;
                    if (vector_result) {
                        value.kind = Type::Kind::RandVec;
                        value.dim = dim;
                    } else {
                        value.kind = Type::Kind::Real;
                    }
                    value.random = true;
                    if (node.decl == DeclType::Bool) {
                        error("a draw produces a real value; it cannot be declared bool", stmt.loc);
                    }
                    check_assign_target(node.name, node.decl, value, stmt.loc);
                    vars[node.name] = value;  // keep randomness/vector info exact
                } else {
                    check_for(stmt, node);
                }
            },
            stmt.node);
    }

    void check_for(const Stmt& stmt, const Stmt::For& loop) {
        Type init_t = check_expr(*loop.init);
        Type bound_t = check_expr(*loop.bound);
        if (init_t.kind != Type::Kind::Int || bound_t.kind != Type::Kind::Int) {
            error("loop bounds must be compile-time integers (literals, loop counters, "
                  "array dimensions); runtime values cannot bound a loop",
                  stmt.loc);
        }
        if (vars.count(loop.var)) {
            error("loop counter '" + loop.var + "' shadows an existing name", stmt.loc);
        }

        LoopFacts facts;
        IndexAffine lo = fold_index_expr(*loop.init);
        IndexAffine hi = fold_index_expr(*loop.bound);
        IndexAffine span = aff_add(hi, lo, -1);
        if (span.affine && span.coeffs.empty()) {
            long long n = span.constant + (loop.inclusive ? 1 : 0);
            facts.trip_count = n < 0 ? 0 : n;
        }
        loops[&stmt] = facts;

        Type counter{Type::Kind::Int};
        vars[loop.var] = counter;
        loop_counters.insert(loop.var);
        std::set<std::string> outer_names;
        for (const auto& [name, t] : vars) {
            (void)t;
            outer_names.insert(name);
        }
        // two passes so taint carried across iterations reaches a fixpoint;
        // names declared inside the body are scoped to one iteration
        for (int pass = 0; pass < 2; pass++) {
            for (const auto& s : loop.body) check_stmt(*s);
            for (auto it = vars.begin(); it != vars.end();) {
                it = outer_names.count(it->first) ? std::next(it) : vars.erase(it);
            }
        }
        loop_counters.erase(loop.var);
        vars.erase(loop.var);
    }

    void run() {
        check_params();
        for (const auto& stmt : program.body) check_stmt(*stmt);
        Type ret = check_expr(*program.return_expr);
        if (ret.kind != Type::Kind::Bool) {
            error("program must return a boolean safety value", program.return_expr->loc);
        }
    }
};

} // namespace

ValidatedProgram validate(const Program& program, const ParamShapes& shapes) {
    Checker checker(program, shapes);
    checker.run();
    ValidatedProgram vp;
    vp.program = &program;
    vp.shapes = shapes;
    vp.loops = std::move(checker.loops);
    return vp;
}

ValidatedProgram validate(const Program& program, const InputBinding& binding) {
    // every parameter must be bound exactly once, with matching kind
    for (const ParamDecl& param : program.params) {
        if (!binding.has(param.name)) {
            fail(Error::Kind::Validate, "parameter '" + param.name + "' is not bound", param.loc);
        }
        const BoundValue& value = binding.get(param.name);
        if (param.is_bool && value.kind != BoundValue::Kind::Bool) {
            fail(Error::Kind::Validate, "parameter '" + param.name + "' needs a boolean value",
                 param.loc);
        }
        if (!param.is_bool && param.rank() == 0 && value.kind != BoundValue::Kind::Scalar) {
            fail(Error::Kind::Validate, "parameter '" + param.name + "' needs a scalar value",
                 param.loc);
        }
        if (param.rank() > 0 && value.kind != BoundValue::Kind::Array) {
            fail(Error::Kind::Validate, "parameter '" + param.name + "' needs an array value",
                 param.loc);
        }
    }
    for (const auto& [name, value] : binding.params) {
        (void)value;
        bool known = false;
        for (const ParamDecl& param : program.params) known |= param.name == name;
        if (!known) {
            fail(Error::Kind::Validate, "binding provides unknown parameter '" + name + "'");
        }
    }
    return validate(program, shapes_of(binding));
}

} // namespace psp::lang
