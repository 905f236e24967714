#include "chkbox/gen.hpp"
#include "chkbox/typecheck.hpp"
#include "doctest.h"

using namespace chkbox;

TEST_CASE("generated programs typecheck") {
    GenConfig cfg;
    cfg.unchecked = true;
    for (uint64_t i = 0; i < 300; ++i) {
        auto p = gen_program(cfg, i);
        REQUIRE(p);
        CHECK_NOTHROW(check_program(*p));
    }
}

TEST_CASE("generation is deterministic") {
    GenConfig cfg;
    cfg.seed = 17;
    for (uint64_t i = 0; i < 50; ++i) CHECK(print_program(*gen_program(cfg, i)) == print_program(*gen_program(cfg, i)));
    CHECK(case_seed(1, 2) == case_seed(1, 2));
    CHECK(case_seed(1, 2) != case_seed(2, 1));
}

TEST_CASE("form coverage") {
    GenConfig cfg;
    cfg.unchecked = true;
    cfg.max_depth = 6;
    std::map<std::string, size_t> programs;
    size_t malloc_deref = 0;
    const size_t n = 500;
    for (size_t i = 0; i < n; ++i) {
        auto c = form_counts(*gen_program(cfg, i));
        for (auto& [k, v] : c)
            if (v) ++programs[k];
        if (c["malloc"] && c["deref"]) ++malloc_deref;
    }
    for (const char* f : {"lit", "var", "add", "cast", "dyncast", "strlen", "malloc", "deref", "assign", "let", "if",
                          "call", "unchecked", "checked"}) {
        CAPTURE(f);
        CHECK(programs[f] * 100 >= n);
    }
    CHECK(malloc_deref * 100 >= n);
}
