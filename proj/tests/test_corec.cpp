#include "chkbox/corec.hpp"
#include "doctest.h"

using namespace chkbox;
using namespace chkbox::corec;

namespace {

COutcome run_c(const std::string& main, const std::string& heap = "(heap (c (1 7) (2 8) (3 0)) (u (1 5)))") {
    return eval_corec(parse_cprogram(heap + "\n(main " + main + ")"), 1000);
}

}  // namespace

TEST_CASE("arithmetic and let") {
    auto o = run_c("(let x 3 (let y (add x 4) (sub y 1)))");
    REQUIRE(o.kind == OutcomeKind::Value);
    CHECK(o.value == 6);
}

TEST_CASE("memory primitives") {
    CHECK(run_c("(deref c 2)").value == 8);
    CHECK(run_c("(deref u 1)").value == 5);
    auto o = run_c("(let z (assign c 3 4) (deref c 3))");
    CHECK(o.value == 4);
    CHECK(o.final_cfg.heap.c.at(3) == 4);
}

TEST_CASE("assertions") {
    CHECK(run_c("(assertnn 0 (deref c 1))").kind == OutcomeKind::Null);
    CHECK(run_c("(assertnn 1 (deref c 1))").value == 7);
    CHECK(run_c("(assert-bounds arr 0 2 (deref c 1))").value == 7);
    CHECK(run_c("(assert-bounds arr 0 0 (deref c 1))").kind == OutcomeKind::Bounds);
    CHECK(run_c("(assert-bounds nt 0 0 (deref c 1))").value == 7);
}

TEST_CASE("if") {
    CHECK(run_c("(if 1 2 3)").value == 2);
    CHECK(run_c("(if 0 2 3)").value == 3);
}

TEST_CASE("cexpr print/parse roundtrip") {
    const char* src = "(let x (malloc c (array 0 2)) (assertnn x (deref c x)))";
    auto e = parse_cexpr_text(src);
    CHECK(print_cexpr(e) == src);
    CHECK(cexpr_equal(parse_cexpr_text(print_cexpr(e)), e));
}

TEST_CASE("eval_atom") {
    CStack s{{"x", 4}};
    CHECK(eval_atom(s, c_var("x")) == 4);
    CHECK(eval_atom(s, c_lit(9)) == 9);
    CHECK_FALSE(eval_atom(s, c_var("y")));
}
