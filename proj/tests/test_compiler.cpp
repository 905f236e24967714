#include "chkbox/compiler.hpp"
#include "chkbox/gen.hpp"
#include "doctest.h"
#include "fixture_util.hpp"

using namespace chkbox;

namespace {

const Mode all[] = {Mode::C, Mode::T, Mode::U};

// Expected deref lowering, rows = context c/t/u, columns = pointer c/t/u.
// 'c'/'u' is the region tag, '-' a rejected cell.
const char flagtable[3][4] = {"cu-", "uuu", "-uu"};

std::string compile_deref(Mode ctx, Mode ptr) {
    TypeEnv g{{"p", t_ptr(t_int(), ptr)}};
    Heap h;
    FunStore f;
    TcContext tc{&h, &f, nullptr};
    auto e = parse_expr_text("(deref (var p))");
    return corec::print_cexpr(compile(g, {}, {}, ctx, e, tc).target);
}

}  // namespace

TEST_CASE("lower_region table") {
    for (Mode c : all)
        for (Mode p : all) {
            char want = flagtable[static_cast<int>(c)][static_cast<int>(p)];
            auto got = lower_region(c, p);
            if (want == '-')
                CHECK_FALSE(got);
            else
                CHECK((got && mode_name(*got)[0] == want));
        }
}

TEST_CASE("deref lowering by context and pointer mode") {
    CHECK(compile_deref(Mode::C, Mode::C) == "(assertnn p (deref c p))");
    CHECK(compile_deref(Mode::C, Mode::T).find("(deref u p)") != std::string::npos);
    CHECK(compile_deref(Mode::C, Mode::T).find("verify u p") != std::string::npos);
    CHECK(compile_deref(Mode::U, Mode::U).find("(deref u p)") != std::string::npos);
    CHECK(compile_deref(Mode::U, Mode::T).find("(deref u p)") != std::string::npos);
    CHECK_THROWS_AS(compile_deref(Mode::C, Mode::U), TypeError);
    CHECK_THROWS_AS(compile_deref(Mode::U, Mode::C), TypeError);
}

TEST_CASE("shadow names") {
    CHECK(shadow_lo("p") == "p#lo");
    CHECK(shadow_hi("p") == "p#hi");
    CHECK(is_temp_name("t#3"));
    CHECK_FALSE(is_temp_name("t3"));
}

TEST_CASE("anf names every intermediate") {
    auto e = anf(parse_expr_text("(add (add (lit 1 int) (lit 2 int)) (lit 3 int))"));
    REQUIRE(e->kind == ExprKind::Let);
    CHECK(is_temp_name(e->x));
}

TEST_CASE("anf preserves results") {
    GenConfig cfg;
    for (uint64_t i = 0; i < 200; ++i) {
        auto p = gen_program(cfg, i);
        REQUIRE(p);
        Program q = *p;
        q.main = anf(p->main);
        Outcome a = eval(*p, 5000), b = eval(q, 5000);
        CHECK(a.kind == b.kind);
        if (a.kind == OutcomeKind::Value && b.kind == OutcomeKind::Value) CHECK(a.value.n == b.value.n);
    }
}

TEST_CASE("compiled programs agree with the source") {
    GenConfig cfg;
    cfg.seed = 5;
    for (uint64_t i = 0; i < 300; ++i) {
        auto p = gen_program(cfg, i);
        REQUIRE(p);
        Outcome src = eval(*p, 5000);
        corec::COutcome tgt = corec::eval_corec(compile_program(*p), 50000);
        if (src.kind == OutcomeKind::OutOfFuel) continue;
        CHECK_MESSAGE(src.kind == tgt.kind, print_program(*p));
        if (src.kind == OutcomeKind::Value && tgt.kind == OutcomeKind::Value) CHECK(src.value.n == tgt.value);
    }
}

TEST_CASE("deref_array golden") {
    Program p = parse_program(fixtures::slurp(FIXTURE_DIR "/deref_array.chk"));
    check_program(p);
    auto got = corec::parse_cprogram(corec::print_cprogram(compile_program(p)));
    auto want = corec::parse_cprogram(fixtures::slurp(GOLDEN_DIR "/deref_array.corec"));
    CHECK(cexpr_equal(got.main, want.main));
    REQUIRE(want.funs.c.count(1));
    CHECK(cexpr_equal(got.funs.c.at(1).body, want.funs.c.at(1).body));
    CHECK(got.funs.c.at(1).params == std::vector<std::string>{"n", "p", "q"});
}
