#include <doctest.h>

#include "psp/sim.hpp"
#include "psp/unroll.hpp"

#include "helpers.hpp"

using namespace psp;
using namespace psp::slp;

namespace {

struct Counts {
    int draws = 0, muls = 0, adds = 0, cmps = 0, ands = 0, consts = 0;
};

Counts count_instructions(const StraightLineProgram& slp) {
    Counts c;
    for (InstrId id = 0; id < slp.size(); id++) {
        const Instruction& ins = slp.at(id);
        switch (ins.kind) {
            case Instruction::Kind::Draw: c.draws++; break;
            case Instruction::Kind::ConstLoad: c.consts++; break;
            case Instruction::Kind::Binary:
                if (ins.op == OpCode::Mul) c.muls++;
                if (ins.op == OpCode::Add) c.adds++;
                if (opcode_is_comparison(ins.op)) c.cmps++;
                if (ins.op == OpCode::And) c.ands++;
                break;
            default: break;
        }
    }
    return c;
}

StraightLineProgram unroll_corpus(const char* program, const char* binding_name) {
    lang::Program prog = testutil::load_program(program);
    lang::InputBinding binding = testutil::load_binding(binding_name);
    lang::ValidatedProgram vp = lang::validate(prog, binding);
    return unroll(vp, binding);
}

} // namespace

TEST_SUITE("unroller") {

TEST_CASE("obstacle program with 10 waypoints unrolls to 51 instructions") {
    StraightLineProgram slp =
        unroll_corpus("avoid_obstacle.psp", "bindings/avoid_obstacle_default.json");
    // one draw, then per waypoint: two multiplies, one add, one compare,
    // one conjunction; leaf reads are operand immediates
    Counts c = count_instructions(slp);
    CHECK(slp.size() == 51);
    CHECK(c.draws == 1);
    CHECK(c.muls == 20);
    CHECK(c.adds == 10);
    CHECK(c.cmps == 10);
    CHECK(c.ands == 10);
    CHECK(slp.at(0).draw.dim == 2);
}

TEST_CASE("battery program draws with linearly growing variances") {
    StraightLineProgram slp =
        unroll_corpus("battery_flight.psp", "bindings/battery_flight_default.json");
    std::vector<double> variances;
    for (InstrId id = 0; id < slp.size(); id++) {
        if (slp.at(id).kind == Instruction::Kind::Draw) {
            variances.push_back(slp.at(id).draw.cov[0]);
        }
    }
    // 7 steps (length 10 minus the 3-step window), variance = i * 4.0
    CHECK(variances == std::vector<double>{0.0, 4.0, 8.0, 12.0, 16.0, 20.0, 24.0});
}

TEST_CASE("a bare boolean parameter returns as an input load") {
    lang::Program prog = lang::parse("bool F(bool ok) { return ok; }");
    lang::InputBinding binding;
    binding.set_bool("ok", true);
    lang::ValidatedProgram vp = lang::validate(prog, binding);
    StraightLineProgram slp = unroll(vp, binding);
    REQUIRE(slp.size() == 1);
    CHECK(slp.at(0).kind == Instruction::Kind::InputLoad);
    CHECK(slp.at(0).input_name == "ok");
    CHECK(slp.at(0).flag == true);
    StraightLineProgram folded = constant_fold(slp);
    CHECK(folded.at(folded.output).kind == Instruction::Kind::ConstLoad);
}

TEST_CASE("constant program unrolls to a single const load") {
    lang::Program prog = lang::parse("bool F() { return true; }");
    lang::InputBinding binding;
    lang::ValidatedProgram vp = lang::validate(prog, binding);
    StraightLineProgram slp = unroll(vp, binding);
    REQUIRE(slp.size() == 1);
    CHECK(slp.at(0).kind == Instruction::Kind::ConstLoad);
    CHECK(slp.at(slp.output).flag == true);
}

TEST_CASE("out-of-bounds indices during expansion are unroll errors") {
    lang::Program prog = lang::parse(
        "bool F(double[] a) { bool ok = true; "
        "for (int i = 0; i < a.GetLength(0); i++) ok = ok && (a[i + 1] > 0); return ok; }");
    lang::InputBinding binding;
    binding.set_vector("a", {1.0, 2.0, 3.0});
    lang::ValidatedProgram vp = lang::validate(prog, binding);
    CHECK_THROWS_WITH_AS(unroll(vp, binding), doctest::Contains("out of bounds"), Error);
}

TEST_CASE("negative variance after parameter evaluation is an unroll error") {
    lang::Program prog = lang::parse(
        "bool F(double v) { w = Gaussian(0, v); return w > 0; }");
    lang::InputBinding binding;
    binding.set_scalar("v", -1.0);
    lang::ValidatedProgram vp = lang::validate(prog, binding);
    CHECK_THROWS_WITH_AS(unroll(vp, binding), doctest::Contains("variance"), Error);
}

TEST_CASE("vacuous battery instance folds to constant true") {
    lang::Program prog = testutil::load_program("battery_flight.psp");
    lang::InputBinding binding = testutil::load_binding("bindings/battery_flight_default.json");
    binding.set_vector("height", {10, 10, 10, 10, 10, 10, 10, 10, 10, 10});  // never high
    lang::ValidatedProgram vp = lang::validate(prog, binding);
    StraightLineProgram folded = constant_fold(unroll(vp, binding));
    const Instruction& out = folded.at(folded.output);
    CHECK(out.kind == Instruction::Kind::ConstLoad);
    CHECK(out.is_bool);
    CHECK(out.flag == true);
}

TEST_CASE("deterministic comparisons fold to constants") {
    StraightLineProgram slp =
        unroll_corpus("battery_flight.psp", "bindings/battery_flight_default.json");
    StraightLineProgram folded = constant_fold(slp);
    // flyHigh chains compare bound inputs only; they must all be folded
    int live_cmps = 0;
    std::vector<bool> random = random_mask(folded);
    for (InstrId id = 0; id < folded.size(); id++) {
        const Instruction& ins = folded.at(id);
        if (ins.kind == Instruction::Kind::Binary && opcode_is_comparison(ins.op) && !random[id]) {
            live_cmps++;
        }
    }
    CHECK(live_cmps == 0);
    CHECK(folded.size() == slp.size());  // folding replaces, never deletes
}

TEST_CASE("boolean identity keeps the operand; domination folds") {
    lang::Program prog = lang::parse(
        "bool F() { w = Gaussian(0, 1); bool c = w > 0; bool keep = true && c; "
        "bool gone = true || c; bool r = keep && gone; return r; }");
    lang::InputBinding binding;
    lang::ValidatedProgram vp = lang::validate(prog, binding);
    StraightLineProgram folded = constant_fold(unroll(vp, binding));
    // 'true || c' folds to const true; 'true && c' stays an instruction
    int const_true = 0, live_ands = 0;
    std::vector<bool> random = random_mask(folded);
    for (InstrId id = 0; id < folded.size(); id++) {
        const Instruction& ins = folded.at(id);
        if (ins.kind == Instruction::Kind::ConstLoad && ins.is_bool && ins.flag) const_true++;
        if (ins.kind == Instruction::Kind::Binary && ins.op == OpCode::And && random[id]) {
            live_ands++;
        }
    }
    CHECK(const_true == 1);
    CHECK(live_ands == 2);  // keep = true && c, r = keep && true
}

TEST_CASE("folding preserves semantics on generated programs") {
    // the pre- and post-fold programs share per-draw streams, so outputs
    // must agree sample by sample
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 1000; seed++) {
        testutil::ProgramGen gen(seed * 977 + 3);
        lang::Program prog = gen.program();
        lang::InputBinding binding = gen.binding_for(prog);
        lang::ValidatedProgram vp = lang::validate(prog, binding);
        StraightLineProgram slp = unroll(vp, binding);
        StraightLineProgram folded = constant_fold(slp);
        Simulator sim_pre(slp);
        Simulator sim_post(folded);
        for (std::uint64_t sample = 0; sample < 8; sample++) {
            bool a = sim_pre.run(seed, sample);
            bool b = sim_post.run(seed, sample);
            if (a != b) {
                CAPTURE(seed);
                CAPTURE(sample);
                REQUIRE(a == b);
            }
            checked++;
        }
    }
    CHECK(checked == 8000);
}

TEST_CASE("instruction count is a deterministic function of program and binding") {
    for (std::uint64_t seed = 0; seed < 50; seed++) {
        testutil::ProgramGen gen(seed + 555);
        lang::Program prog = gen.program();
        lang::InputBinding binding = gen.binding_for(prog);
        lang::ValidatedProgram vp = lang::validate(prog, binding);
        StraightLineProgram a = unroll(vp, binding);
        StraightLineProgram b = unroll(vp, binding);
        CHECK(dump(a) == dump(b));
    }
}

} // TEST_SUITE
