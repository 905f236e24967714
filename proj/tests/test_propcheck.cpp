#include "chkbox/compiler.hpp"
#include "chkbox/propcheck.hpp"
#include "doctest.h"

using namespace chkbox;

namespace {

const char* kHeap = "(heap (c (1 (lit 7 int)) (2 (lit 8 int))) (u (1 (lit 5 int))))\n";

Program prog(const std::string& main) { return parse_program(kHeap + main); }

}  // namespace

TEST_CASE("progress flags a stuck ill-typed program") {
    auto r = check_progress(prog("(main (deref (lit 9 (ptr int c))))"), 100);
    CHECK(r.verdict == Verdict::Fail);
    CHECK(check_progress(prog("(main (add (lit 1 int) (lit 2 int)))"), 100).verdict == Verdict::Pass);
}

TEST_CASE("non-exposure flags a checked value in unchecked code") {
    auto r = check_non_exposure(prog("(main (unchecked () (deref (lit 1 (ptr int c)))))"), 100, {});
    CHECK(r.verdict == Verdict::Fail);
    Stack s{{"x", {1, t_ptr(t_int(), Mode::C)}}};
    CHECK(exposes_checked(s, parse_expr_text("(deref (var x))")));
    CHECK_FALSE(exposes_checked({}, parse_expr_text("(add (lit 1 int) (lit 2 int))")));
}

TEST_CASE("unchecked preservation flags writes to the checked region") {
    auto r = check_unchecked_preservation(prog("(main (unchecked () (assign (lit 1 (ptr int c)) (lit 0 int))))"), 100,
                                          {});
    CHECK(r.verdict == Verdict::Fail);
}

TEST_CASE("checked heap consistency") {
    Heap h;
    FunStore f;
    h.put(Mode::C, 1, {1, t_ptr(t_int(), Mode::C)});
    CHECK(checked_heap_consistent(h, f));
    h.put(Mode::C, 2, {9, t_ptr(t_int(), Mode::C)});
    CHECK_FALSE(checked_heap_consistent(h, f));
}

TEST_CASE("join is reflexive and symmetric") {
    GenConfig cfg;
    for (uint64_t i = 0; i < 40; ++i) {
        auto p = gen_program(cfg, i);
        REQUIRE(p);
        corec::CProgram cp = compile_program(*p);
        corec::CConfig a{{}, cp.heap, cp.main};
        CHECK(joinable(a, a, cp.funs, 64) == JoinResult::Joined);
        auto s = corec::step_corec(a, cp.funs);
        if (s.kind != corec::CStepKind::Stepped) continue;
        CHECK(joinable(a, s.next, cp.funs, 256) == joinable(s.next, a, cp.funs, 256));
    }
}

TEST_CASE("join detects different heaps") {
    auto e = corec::parse_cexpr_text("0");
    corec::CConfig a{{}, {}, e}, b{{}, {}, e};
    a.heap.c[1] = 1;
    b.heap.c[1] = 2;
    CHECK(joinable(a, b, {}, 16) == JoinResult::Mismatch);
    CHECK(join_key(a) != join_key(b));
}

TEST_CASE("simulation on hand programs") {
    CHECK(check_simulation(prog("(main (let x (malloc c (array (0 2) int)) (deref (add (var x) (lit 1 int)))))"),
                           500, 256)
              .verdict == Verdict::Pass);
    CHECK(check_simulation(prog("(main (deref (lit 0 (ptr int c))))"), 500, 256).verdict == Verdict::Pass);
}

TEST_CASE("reports are deterministic") {
    SuiteOptions opt;
    opt.gen.count = 30;
    opt.gen.seed = 4;
    opt.threads = 2;
    auto a = run_property("progress", opt), b = run_property("progress", opt);
    CHECK(a.cases == 30);
    CHECK(a.failures.empty());
    a.seconds = b.seconds = 0;
    CHECK(report_json({a}, opt) == report_json({b}, opt));
}

TEST_CASE("bound_le soundness harness") {
    auto s = check_bound_le_soundness(1, 500);
    CHECK(s.instances == 500);
    CHECK(s.violations == 0);
    CHECK(s.deduced > 0);
}
