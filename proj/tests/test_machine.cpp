#include "chkbox/machine.hpp"
#include "doctest.h"

using namespace chkbox;

namespace {

const char* kHeap = "(heap (c (1 (lit 7 int)) (2 (lit 8 int)) (3 (lit 0 int))) (u (1 (lit 5 int))))\n";

Outcome run_text(const std::string& main, FaultPolicy fp = {}) {
    return eval(parse_program(kHeap + main), 1000, fp);
}

}  // namespace

TEST_CASE("eval outcomes") {
    auto o = run_text("(main (add (lit 2 int) (lit 5 int)))");
    CHECK(o.kind == OutcomeKind::Value);
    CHECK(o.value.n == 7);
    CHECK(run_text("(main (deref (lit 0 (ptr int c))))").kind == OutcomeKind::Null);
    CHECK(run_text("(main (deref (add (lit 1 (ptr (array (0 2) int) c)) (lit 5 int))))").kind ==
          OutcomeKind::Bounds);
    auto s = run_text("(main (let x (lit 2 int) (add (var x) (var x))))");
    CHECK(s.value.n == 4);
    CHECK(s.final_cfg.stack.empty());
}

TEST_CASE("assignment writes the heap") {
    auto o = run_text("(main (let p (lit 2 (ptr int c)) (let z (assign (var p) (lit 9 int)) (deref (var p)))))");
    REQUIRE(o.kind == OutcomeKind::Value);
    CHECK(o.value.n == 9);
    CHECK(o.final_cfg.heap.get(Mode::C, 2)->n == 9);
}

TEST_CASE("strlen scans to the terminator") {
    auto o = run_text("(main (let s (lit 1 (ptr (array nt (0 0) int) c)) (strlen s)))");
    REQUIRE(o.kind == OutcomeKind::Value);
    CHECK(o.value.n == 2);
}

TEST_CASE("decompose finds the leftmost redex") {
    Config cfg = initial_config(parse_program(std::string(kHeap) +
                                              "(main (add (add (lit 1 int) (lit 2 int)) (add (lit 3 int) (lit 4 int))))"));
    auto d = decompose(cfg);
    REQUIRE(d);
    CHECK(print_expr(d->redex) == "(add (lit 1 int) (lit 2 int))");
    CHECK(print_expr(plug(*d, parse_expr_text("(lit 3 int)"))) ==
          "(add (lit 3 int) (add (lit 3 int) (lit 4 int)))");
    CHECK(d->mode == Mode::C);
}

TEST_CASE("context mode inside unchecked") {
    Config cfg = initial_config(parse_program(std::string(kHeap) +
                                              "(main (unchecked () (add (lit 1 int) (lit 2 int))))"));
    auto d = decompose(cfg);
    REQUIRE(d);
    CHECK(d->mode == Mode::U);
}

TEST_CASE("fault injection only fires in unchecked code") {
    auto checked = run_text("(main (add (lit 1 int) (lit 2 int)))", {1.0, 3});
    CHECK(checked.kind == OutcomeKind::Value);
    auto u = run_text("(main (unchecked () (add (lit 1 int) (lit 2 int))))", {1.0, 3});
    CHECK(u.kind != OutcomeKind::Stuck);
}

TEST_CASE("fault source is deterministic") {
    FaultSource a({0.5, 42}), b({0.5, 42});
    for (int i = 0; i < 100; ++i) CHECK(a.fire() == b.fire());
    FaultSource never({0.0, 1});
    for (int i = 0; i < 100; ++i) CHECK_FALSE(never.fire());
}

TEST_CASE("fuel") {
    auto o = eval(parse_program(std::string(kHeap) + "(main (add (add (lit 1 int) (lit 1 int)) (lit 1 int)))"), 1);
    CHECK(o.kind == OutcomeKind::OutOfFuel);
}

TEST_CASE("type_of_config matches the program type") {
    Program p = parse_program(std::string(kHeap) + "(main (let n (lit 2 int) (malloc c (array (0 (+ n 0)) int))))");
    FunStore funs = funs_of(p);
    Config cfg = initial_config(p);
    TypeP t0 = check_program(p);
    for (int i = 0; i < 10; ++i) {
        Step s = step(cfg, funs, nullptr);
        if (s.kind != StepKind::Stepped) break;
        cfg = s.next;
        CHECK(subtype(runtime_view(cfg).theta, type_of_config(cfg, funs), t0));
    }
}
