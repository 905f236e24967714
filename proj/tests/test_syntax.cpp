#include "chkbox/ast.hpp"
#include "chkbox/gen.hpp"
#include "doctest.h"

using namespace chkbox;

TEST_CASE("sexpr reader") {
    auto xs = read_sexprs("(a (b 1) -2) ; comment\nfoo");
    REQUIRE(xs.size() == 2);
    CHECK(xs[0].is_list);
    CHECK(xs[0].items.size() == 3);
    CHECK(xs[0].items[2].is_int());
    CHECK(xs[0].items[2].as_int() == -2);
    CHECK(xs[1].atom == "foo");
    CHECK(xs[1].line == 2);
    CHECK_THROWS_AS(read_sexprs("(a"), ParseError);
    CHECK_THROWS_AS(read_sexprs(")"), ParseError);
}

TEST_CASE("identifiers") {
    CHECK(is_identifier("x1"));
    CHECK(is_identifier("n_2"));
    CHECK_FALSE(is_identifier("1x"));
    CHECK_FALSE(is_identifier("t#1"));
}

TEST_CASE("type printing") {
    CHECK(print_type(t_int()) == "int");
    auto t = parse_type_text("(ptr (array nt (0 (+ n 1)) int) t)");
    CHECK(is_nt_array_ptr(t));
    CHECK(t->mode == Mode::T);
    CHECK(print_type(t) == "(ptr (array nt (0 (+ n 1)) int) t)");
    CHECK_THROWS(parse_type_text("(ptr int q)"));
}

TEST_CASE("expression parse/print roundtrip") {
    const char* src = "(let x (malloc c (array (0 2) int)) (assign (add (var x) (lit 1 int)) (lit 3 int)))";
    auto e = parse_expr_text(src);
    CHECK(print_expr(e) == src);
    CHECK(expr_equal(parse_expr_text(print_expr(e)), e));
    CHECK(free_vars(parse_expr_text("(let x (var y) (add (var x) (var z)))")) == std::set<std::string>{"y", "z"});
}

TEST_CASE("generated programs roundtrip") {
    GenConfig cfg;
    cfg.unchecked = true;
    for (uint64_t i = 0; i < 200; ++i) {
        auto p = gen_program(cfg, i);
        REQUIRE(p);
        std::string text = print_program(*p);
        Program q = parse_program(text);
        CHECK(print_program(q) == text);
        CHECK(expr_equal(q.main, p->main));
    }
}
