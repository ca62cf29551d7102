#include <doctest.h>

#include "psp/parser.hpp"
#include "psp/validator.hpp"

#include "helpers.hpp"

#include <algorithm>

using namespace psp;
using namespace psp::lang;

namespace {

const Stmt::For* first_loop(const Program& prog) {
    for (const auto& stmt : prog.body) {
        if (const auto* loop = std::get_if<Stmt::For>(&stmt->node)) return loop;
    }
    return nullptr;
}

} // namespace

TEST_SUITE("frontend") {

TEST_CASE("tokenize a simple assignment") {
    auto tokens = tokenize("isSafe = isSafe && ClearOfObstacles;");
    std::vector<TokenKind> kinds;
    for (const auto& t : tokens) kinds.push_back(t.kind);
    std::vector<TokenKind> expected{TokenKind::Ident,  TokenKind::Assign, TokenKind::Ident,
                                    TokenKind::AndAnd, TokenKind::Ident,  TokenKind::Semicolon,
                                    TokenKind::End};
    CHECK(kinds == expected);
}

TEST_CASE("obstacle program tokenizes with exactly one Gaussian keyword") {
    auto tokens = tokenize(testutil::slurp(testutil::corpus_path("avoid_obstacle.psp")));
    int gaussians = 0;
    for (const auto& t : tokens) gaussians += t.kind == TokenKind::KwGaussian;
    CHECK(gaussians == 1);
}

TEST_CASE("lexer does not enforce grammar on while") {
    CHECK_NOTHROW(tokenize("while (true)"));
}

TEST_CASE("lexer reports line and column for unknown characters") {
    try {
        tokenize("x = 1;\ny = @;");
        FAIL("expected a lex error");
    } catch (const Error& err) {
        CHECK(err.kind() == Error::Kind::Lex);
        CHECK(err.loc().line == 2);
        CHECK(err.loc().col == 5);
    }
}

TEST_CASE("obstacle program parses to the documented shape") {
    Program prog = testutil::load_program("avoid_obstacle.psp");
    CHECK(prog.name == "AvoidObstacle");
    REQUIRE(prog.params.size() == 3);
    CHECK(prog.params[0].dims == std::vector<std::optional<long long>>{10, 2});

    int draws = 0, loops = 0;
    for (const auto& stmt : prog.body) {
        draws += std::holds_alternative<Stmt::Draw>(stmt->node);
        loops += std::holds_alternative<Stmt::For>(stmt->node);
    }
    CHECK(draws == 1);
    CHECK(loops == 1);
    const Stmt::For* loop = first_loop(prog);
    REQUIRE(loop != nullptr);
    CHECK(loop->body.size() == 2);  // declaration + conjunction update
    CHECK(std::holds_alternative<Expr::Var>(prog.return_expr->node));
}

TEST_CASE("car program has four draws before the loop") {
    Program prog = testutil::load_program("avoid_car_crash.psp");
    int draws_before_loop = 0;
    for (const auto& stmt : prog.body) {
        if (std::holds_alternative<Stmt::For>(stmt->node)) break;
        draws_before_loop += std::holds_alternative<Stmt::Draw>(stmt->node);
    }
    CHECK(draws_before_loop == 4);
}

TEST_CASE("if and while are rejected with targeted messages") {
    CHECK_THROWS_WITH_AS(parse("bool F() { if (a) then b; return true; }"),
                         doctest::Contains("'if'"), Error);
    CHECK_THROWS_WITH_AS(parse("bool F() { while (a) x = 1; return true; }"),
                         doctest::Contains("'while'"), Error);
    CHECK_THROWS_WITH_AS(parse("bool F() { x = Uniform(0, 1); return true; }"),
                         doctest::Contains("Uniform"), Error);
}

TEST_CASE("array writes are rejected") {
    CHECK_THROWS_WITH_AS(parse("bool F(double[2] a) { a[0] = 1; return true; }"),
                         doctest::Contains("read-only"), Error);
}

TEST_CASE("battery loop bounds fold against the binding dimensions") {
    Program prog = testutil::load_program("battery_flight.psp");
    InputBinding binding = testutil::load_binding("bindings/battery_flight_default.json");
    ValidatedProgram vp = validate(prog, binding);

    const Stmt* outer_stmt = nullptr;
    for (const auto& stmt : prog.body) {
        if (std::holds_alternative<Stmt::For>(stmt->node)) outer_stmt = stmt.get();
    }
    REQUIRE(outer_stmt != nullptr);
    REQUIRE(vp.loops.count(outer_stmt) == 1);
    CHECK(vp.loops.at(outer_stmt).trip_count == 7);  // height length 10, bound len-3

    const auto& outer = std::get<Stmt::For>(outer_stmt->node);
    const Stmt* inner_stmt = nullptr;
    for (const auto& stmt : outer.body) {
        if (std::holds_alternative<Stmt::For>(stmt->node)) inner_stmt = stmt.get();
    }
    REQUIRE(inner_stmt != nullptr);
    CHECK(vp.loops.at(inner_stmt).trip_count == 3);  // j = i .. i+3
}

TEST_CASE("runtime-valued loop bounds fail validation") {
    Program prog = parse(
        "bool F(double n) { bool ok = true; for (int i = 0; i < n; i++) ok = ok && true; "
        "return ok; }");
    CHECK_THROWS_WITH_AS(validate(prog, ParamShapes{}), doctest::Contains("compile-time"), Error);
}

TEST_CASE("use before define and non-boolean returns fail validation") {
    CHECK_THROWS_WITH_AS(validate(parse("bool F() { x = y + 1; return true; }"), ParamShapes{}),
                         doctest::Contains("undefined"), Error);
    CHECK_THROWS_AS(validate(parse("bool F(double a) { x = a; return x; }"), ParamShapes{}),
                    Error);
}

TEST_CASE("a draw cannot parameterize another draw") {
    Program prog = parse("bool F() { w = Gaussian(0, 1); v = Gaussian(w, 1); return v > 0; }");
    CHECK_THROWS_WITH_AS(validate(prog, ParamShapes{}), doctest::Contains("deterministic"),
                         Error);
}

TEST_CASE("loop-carried randomness in a draw parameter is caught") {
    Program prog = parse(
        "bool F(double[3] a) { m = 0; for (int i = 0; i < a.GetLength(0); i++) { "
        "v = Gaussian(m, 1); m = m + v; } return m > 0; }");
    ParamShapes shapes{{"a", {3}}};
    CHECK_THROWS_WITH_AS(validate(prog, shapes), doctest::Contains("deterministic"), Error);
}

TEST_CASE("obstacle program validates with a boolean return") {
    Program prog = testutil::load_program("avoid_obstacle.psp");
    InputBinding binding = testutil::load_binding("bindings/avoid_obstacle_default.json");
    CHECK_NOTHROW(validate(prog, binding));
}

TEST_CASE("binding dimension mismatches are rejected") {
    Program prog = testutil::load_program("avoid_obstacle.psp");
    InputBinding binding = testutil::load_binding("bindings/avoid_obstacle_default.json");
    binding.set_vector("Mu", {1.0, 2.0, 3.0});
    CHECK_THROWS_AS(validate(prog, binding), Error);
}

TEST_CASE("bindings must cover the parameters exactly") {
    Program prog = testutil::load_program("avoid_obstacle.psp");
    InputBinding missing = testutil::load_binding("bindings/avoid_obstacle_default.json");
    missing.params.erase("Sigma");
    CHECK_THROWS_WITH_AS(validate(prog, missing), doctest::Contains("not bound"), Error);

    InputBinding extra = testutil::load_binding("bindings/avoid_obstacle_default.json");
    extra.set_scalar("stray", 1.0);
    CHECK_THROWS_WITH_AS(validate(prog, extra), doctest::Contains("unknown parameter"), Error);
}

TEST_CASE("pretty-print then parse is a fixpoint on the corpus") {
    for (const char* name : {"avoid_obstacle.psp", "avoid_obstacle_any.psp",
                             "avoid_obstacle_belief.psp", "battery_flight.psp",
                             "avoid_car_crash.psp"}) {
        CAPTURE(name);
        Program first = testutil::load_program(name);
        Program second = parse(pretty(first));
        CHECK(ast_equal(first, second));
        CHECK(pretty(first) == pretty(second));
    }
}

TEST_CASE("pretty-print then parse is a fixpoint on generated programs") {
    for (std::uint64_t seed = 0; seed < 60; seed++) {
        testutil::ProgramGen gen(seed);
        Program prog = gen.program();
        CAPTURE(seed);
        Program reparsed = parse(pretty(prog));
        CHECK(ast_equal(prog, reparsed));
    }
}

TEST_CASE("injected banned constructs are rejected everywhere") {
    int rejected = 0;
    for (std::uint64_t seed = 0; seed < 60; seed++) {
        testutil::ProgramGen gen(seed + 1000);
        std::string source = pretty(gen.program());
        // inject after a statement boundary chosen by the seed
        std::vector<std::size_t> spots;
        for (std::size_t i = 0; i < source.size(); i++) {
            if (source[i] == ';') spots.push_back(i + 1);
        }
        REQUIRE(!spots.empty());
        std::size_t at = spots[seed % spots.size()];
        const char* inject = seed % 2 == 0 ? " while (q < 1) q = 1; " : " if (q) q = 1; ";
        std::string bad = source.substr(0, at) + inject + source.substr(at);
        try {
            parse(bad);
        } catch (const Error& err) {
            CHECK(err.kind() == Error::Kind::Parse);
            rejected++;
        }
    }
    CHECK(rejected == 60);
}

TEST_CASE("validation is deterministic") {
    Program prog = testutil::load_program("battery_flight.psp");
    InputBinding binding = testutil::load_binding("bindings/battery_flight_default.json");
    ValidatedProgram a = validate(prog, binding);
    ValidatedProgram b = validate(prog, binding);
    CHECK(a.shapes == b.shapes);
    REQUIRE(a.loops.size() == b.loops.size());
    for (const auto& [stmt, facts] : a.loops) {
        CHECK(facts.trip_count == b.loops.at(stmt).trip_count);
    }
}

} // TEST_SUITE
