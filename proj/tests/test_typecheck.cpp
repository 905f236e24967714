#include "chkbox/typecheck.hpp"
#include "doctest.h"

using namespace chkbox;

namespace {

Heap small_heap() {
    Heap h;
    h.put(Mode::C, 1, {7, t_int()});
    h.put(Mode::C, 2, {8, t_int()});
    h.put(Mode::C, 3, {0, t_int()});
    h.put(Mode::U, 1, {5, t_int()});
    return h;
}

std::string rule_of(const std::string& text) {
    try {
        check_program(parse_program(text));
    } catch (const TypeError& e) {
        return e.rule;
    }
    return "";
}

}  // namespace

TEST_CASE("const_valid on checked constants") {
    Heap h = small_heap();
    FunStore f;
    auto arr = [](int lo, int hi, bool nt = false) {
        return t_ptr(t_array(nt, Bound::lit(lo), Bound::lit(hi), t_int()), Mode::C);
    };
    CHECK(const_valid(h, f, Mode::C, 0, arr(0, 5)));
    CHECK(const_valid(h, f, Mode::C, 1, arr(0, 3)));
    CHECK_FALSE(const_valid(h, f, Mode::C, 2, arr(0, 3)));
    CHECK_FALSE(const_valid(h, f, Mode::C, 9, t_ptr(t_int(), Mode::C)));
    CHECK(const_valid(h, f, Mode::C, 1, arr(0, 2, true)));
    CHECK(const_valid(h, f, Mode::C, 4, t_int()));
}

TEST_CASE("const_valid for tainted and unchecked pointers") {
    Heap h = small_heap();
    FunStore f;
    CHECK(const_valid(h, f, Mode::C, 77, t_ptr(t_int(), Mode::T)));
    CHECK(const_valid(h, f, Mode::U, 77, t_ptr(t_int(), Mode::U)));
    CHECK(const_valid(h, f, Mode::C, 77, t_ptr(t_int(), Mode::U)));
    CHECK_FALSE(const_valid(h, f, Mode::U, 77, t_ptr(t_int(), Mode::T)));
}

TEST_CASE("size_of") {
    CHECK(size_of(t_int()) == 1);
    CHECK(size_of(t_array(false, Bound::lit(0), Bound::lit(4), t_int())) == 4);
    CHECK(size_of(t_array(true, Bound::lit(0), Bound::lit(4), t_int())) == 5);
    CHECK_THROWS_AS(size_of(t_array(false, Bound::lit(0), Bound::of("n"), t_int())), std::invalid_argument);
}

TEST_CASE("as_bound_expr") {
    CHECK(as_bound_expr(parse_expr_text("(lit 3 int)")) == Bound::lit(3));
    CHECK(as_bound_expr(parse_expr_text("(var n)")) == Bound::of("n"));
    CHECK(as_bound_expr(parse_expr_text("(add (var n) (lit 2 int))")) == Bound::of("n", 2));
    CHECK_FALSE(as_bound_expr(parse_expr_text("(add (lit 1 int) (lit 2 int))")));
}

TEST_CASE("typecheck reports the failing rule") {
    const char* heap = "(heap (c (1 (lit 7 int))))\n";
    CHECK(rule_of(std::string(heap) + "(main (deref (lit 1 (ptr int u))))") == "T-Def");
    CHECK(rule_of(std::string(heap) + "(main (var q))") == "T-Var");
    CHECK(rule_of(std::string(heap) + "(main (lit 4 (ptr int c)))") == "T-ConstC");
    CHECK(rule_of(std::string(heap) + "(main (deref (lit 1 (ptr int c))))") == "");
}

TEST_CASE("dependent let substitutes the bound") {
    Program p = parse_program(
        "(heap (c (1 (lit 7 int))))\n(main (let n (lit 3 int) (malloc c (array (0 (+ n 0)) int))))");
    CHECK(print_type(check_program(p)) == "(ptr (array (0 3) int) c)");
}
