#pragma once

#include "psp/binding.hpp"
#include "psp/parser.hpp"
#include "psp/rng.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace testutil {

inline std::string source_dir() { return PSP_SOURCE_DIR; }

inline std::string corpus_path(const std::string& name) {
    return source_dir() + "/corpus/" + name;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline psp::lang::Program load_program(const std::string& corpus_name) {
    return psp::lang::parse(slurp(corpus_path(corpus_name)));
}

inline psp::lang::InputBinding load_binding(const std::string& corpus_name) {
    return psp::lang::InputBinding::from_file(corpus_path(corpus_name));
}

// ---------------------------------------------------------------------
// Random well-typed program generator for property tests. Programs use a
// couple of scalar parameters, one array parameter, draws, loops, and
// boolean combinations; distribution parameters only ever reference
// deterministic values, mirroring the language rules by construction.
struct ProgramGen {
    psp::SplitMix64 rng;
    int fresh = 0;
    explicit ProgramGen(std::uint64_t seed) : rng(seed) {}

    struct Env {
        std::vector<std::string> reals;       // deterministic real vars/params
        std::vector<std::string> random_reals;
        std::vector<std::string> bools;
        std::vector<std::string> loop_vars;
        long long array_len = 3;
        std::string array_name = "arr";
    };

    double unit() { return rng.next_unit_co(); }
    int pick(int n) { return static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n)); }
    std::string fresh_name(const char* prefix) { return prefix + std::to_string(fresh++); }

    psp::lang::ExprPtr literal_real() {
        double v = std::floor((unit() * 8.0 - 4.0) * 16.0) / 16.0;
        if (v < 0) {
            return psp::lang::make_expr(psp::lang::Expr::Unary{
                psp::lang::UnOp::Neg,
                psp::lang::make_expr(psp::lang::Expr::RealLit{-v})});
        }
        return psp::lang::make_expr(psp::lang::Expr::RealLit{v});
    }

    // deterministic real expression (usable as a distribution parameter)
    psp::lang::ExprPtr static_real(const Env& env, int depth) {
        int choice = pick(depth > 2 ? 3 : 5);
        using E = psp::lang::Expr;
        switch (choice) {
            case 0:
                return literal_real();
            case 1:
                if (!env.reals.empty()) {
                    return psp::lang::make_expr(E::Var{env.reals[static_cast<std::size_t>(
                        pick(static_cast<int>(env.reals.size())))]});
                }
                return literal_real();
            case 2:
                if (!env.loop_vars.empty()) {
                    return psp::lang::make_expr(E::Var{env.loop_vars.back()});
                }
                return literal_real();
            case 3: {
                auto op = pick(3) == 0   ? psp::lang::BinOp::Add
                          : pick(2) == 0 ? psp::lang::BinOp::Sub
                                         : psp::lang::BinOp::Mul;
                return psp::lang::make_expr(
                    E::Binary{op, static_real(env, depth + 1), static_real(env, depth + 1)});
            }
            default: {
                // array read with an in-bounds index
                psp::lang::ExprPtr idx;
                if (!env.loop_vars.empty() && unit() < 0.6) {
                    idx = psp::lang::make_expr(E::Var{env.loop_vars.back()});
                } else {
                    idx = psp::lang::make_expr(
                        E::IntLit{pick(static_cast<int>(env.array_len))});
                }
                E::Index node;
                node.array = env.array_name;
                node.indices.push_back(std::move(idx));
                return psp::lang::make_expr(std::move(node));
            }
        }
    }

    // real expression that may reference draws
    psp::lang::ExprPtr any_real(const Env& env, int depth) {
        using E = psp::lang::Expr;
        if (!env.random_reals.empty() && unit() < 0.5) {
            if (depth < 3 && unit() < 0.45) {
                auto op = unit() < 0.5 ? psp::lang::BinOp::Add : psp::lang::BinOp::Mul;
                return psp::lang::make_expr(
                    E::Binary{op, any_real(env, depth + 1), any_real(env, depth + 1)});
            }
            return psp::lang::make_expr(E::Var{env.random_reals[static_cast<std::size_t>(
                pick(static_cast<int>(env.random_reals.size())))]});
        }
        return static_real(env, depth);
    }

    psp::lang::ExprPtr bool_expr(const Env& env, int depth) {
        using E = psp::lang::Expr;
        int choice = pick(depth > 2 ? 2 : 4);
        switch (choice) {
            case 0: {
                static const psp::lang::BinOp cmps[] = {
                    psp::lang::BinOp::Lt, psp::lang::BinOp::Le, psp::lang::BinOp::Gt,
                    psp::lang::BinOp::Ge};
                return psp::lang::make_expr(E::Binary{cmps[pick(4)], any_real(env, depth + 1),
                                                      any_real(env, depth + 1)});
            }
            case 1:
                if (!env.bools.empty()) {
                    return psp::lang::make_expr(E::Var{env.bools[static_cast<std::size_t>(
                        pick(static_cast<int>(env.bools.size())))]});
                }
                return psp::lang::make_expr(E::BoolLit{unit() < 0.5});
            case 2:
                return psp::lang::make_expr(
                    E::Unary{psp::lang::UnOp::Not, bool_expr(env, depth + 1)});
            default: {
                auto op = unit() < 0.5 ? psp::lang::BinOp::And : psp::lang::BinOp::Or;
                return psp::lang::make_expr(
                    E::Binary{op, bool_expr(env, depth + 1), bool_expr(env, depth + 1)});
            }
        }
    }

    psp::lang::StmtPtr statement(Env& env, int depth);

    void fill_block(Env& env, std::vector<psp::lang::StmtPtr>& out, int count, int depth) {
        for (int i = 0; i < count; i++) out.push_back(statement(env, depth));
    }

    psp::lang::Program program() {
        using namespace psp::lang;
        Program prog;
        prog.name = "Generated";
        fresh = 0;

        Env env;
        env.array_len = 2 + pick(3);
        ParamDecl arr;
        arr.name = env.array_name;
        arr.dims = {env.array_len};
        prog.params.push_back(std::move(arr));
        ParamDecl s1;
        s1.name = "p0";
        prog.params.push_back(std::move(s1));
        env.reals.push_back("p0");
        ParamDecl flag;
        flag.name = "flag";
        flag.is_bool = true;
        prog.params.push_back(std::move(flag));
        env.bools.push_back("flag");

        fill_block(env, prog.body, 2 + pick(4), 0);

        // make sure at least one draw exists
        bool has_draw = !env.random_reals.empty();
        if (!has_draw) {
            Stmt::Draw draw;
            draw.decl = DeclType::None;
            draw.name = fresh_name("w");
            draw.dist.family = DistFamily::Gaussian;
            draw.dist.args.push_back(static_real(env, 1));
            draw.dist.args.push_back(make_expr(Expr::RealLit{0.25 + unit()}));
            env.random_reals.push_back(draw.name);
            auto stmt = std::make_unique<Stmt>();
            stmt->node = std::move(draw);
            prog.body.push_back(std::move(stmt));
        }

        Stmt::Assign result;
        result.decl = DeclType::Bool;
        result.name = "result";
        result.value = bool_expr(env, 0);
        auto stmt = std::make_unique<Stmt>();
        stmt->node = std::move(result);
        prog.body.push_back(std::move(stmt));

        prog.return_expr = make_expr(Expr::Var{"result"});
        return prog;
    }

    psp::lang::InputBinding binding_for(const psp::lang::Program& prog) {
        psp::lang::InputBinding binding;
        for (const psp::lang::ParamDecl& param : prog.params) {
            if (param.is_bool) {
                binding.set_bool(param.name, unit() < 0.5);
            } else if (param.rank() == 0) {
                binding.set_scalar(param.name, unit() * 6.0 - 3.0);
            } else {
                std::vector<double> data;
                long long len = param.dims[0].value_or(3);
                for (long long i = 0; i < len; i++) data.push_back(unit() * 6.0 - 3.0);
                binding.set_array(param.name, {len}, std::move(data));
            }
        }
        return binding;
    }
};

inline psp::lang::StmtPtr ProgramGen::statement(Env& env, int depth) {
    using namespace psp::lang;
    auto stmt = std::make_unique<Stmt>();
    int choice = pick(depth > 0 ? 4 : 5);
    switch (choice) {
        case 0: {  // deterministic real assignment
            Stmt::Assign assign;
            assign.decl = DeclType::None;
            assign.name = fresh_name("r");
            assign.value = any_real(env, 1);
            bool random = !env.random_reals.empty();  // conservative
            (random ? env.random_reals : env.reals).push_back(assign.name);
            stmt->node = std::move(assign);
            break;
        }
        case 1: {  // boolean assignment
            Stmt::Assign assign;
            assign.decl = DeclType::Bool;
            assign.name = fresh_name("b");
            assign.value = bool_expr(env, 1);
            env.bools.push_back(assign.name);
            stmt->node = std::move(assign);
            break;
        }
        case 2: {  // draw
            Stmt::Draw draw;
            draw.decl = DeclType::None;
            draw.name = fresh_name("w");
            int family = pick(4);
            if (family == 0) {
                draw.dist.family = DistFamily::Gamma;
                draw.dist.args.push_back(make_expr(Expr::RealLit{0.5 + unit() * 3.0}));
                draw.dist.args.push_back(make_expr(Expr::RealLit{0.5 + unit() * 2.0}));
            } else if (family == 1) {
                draw.dist.family = DistFamily::Bernoulli;
                draw.dist.args.push_back(make_expr(Expr::RealLit{unit()}));
            } else {
                draw.dist.family = DistFamily::Gaussian;
                draw.dist.args.push_back(static_real(env, 1));
                draw.dist.args.push_back(make_expr(Expr::RealLit{0.0625 + unit()}));
            }
            env.random_reals.push_back(draw.name);
            stmt->node = std::move(draw);
            break;
        }
        case 3: {  // reassignment of an existing bool
            Stmt::Assign assign;
            assign.value = bool_expr(env, 1);
            assign.decl = DeclType::None;
            assign.name = env.bools.empty() ? "flag"
                                            : env.bools[static_cast<std::size_t>(
                                                  pick(static_cast<int>(env.bools.size())))];
            if (assign.name == "flag") {
                // parameters are read-only: declare a fresh bool instead
                assign.decl = DeclType::Bool;
                assign.name = fresh_name("b");
                env.bools.push_back(assign.name);
            }
            stmt->node = std::move(assign);
            break;
        }
        default: {  // loop over the array
            Stmt::For loop;
            loop.var = fresh_name("i");
            loop.init = make_expr(Expr::IntLit{0});
            loop.bound = make_expr(Expr::Length{env.array_name, 0});
            loop.inclusive = false;
            Env inner = env;  // body names are scoped
            inner.loop_vars.push_back(loop.var);
            fill_block(inner, loop.body, 1 + pick(2), depth + 1);
            // reassign an outer bool so the loop has an observable effect
            if (!env.bools.empty()) {
                Stmt::Assign assign;
                assign.decl = DeclType::None;
                assign.name = env.bools[static_cast<std::size_t>(
                    pick(static_cast<int>(env.bools.size())))];
                if (assign.name != "flag") {
                    assign.value = bool_expr(inner, 1);
                    auto inner_stmt = std::make_unique<Stmt>();
                    inner_stmt->node = std::move(assign);
                    loop.body.push_back(std::move(inner_stmt));
                }
            }
            stmt->node = std::move(loop);
            break;
        }
    }
    return stmt;
}

} // namespace testutil
