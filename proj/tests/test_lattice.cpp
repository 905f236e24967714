#include <random>

#include "chkbox/lattice.hpp"
#include "doctest.h"

using namespace chkbox;

namespace {

const Mode C = Mode::C, T = Mode::T, U = Mode::U;
const Mode all[] = {C, T, U};

// Rows and columns ordered c, t, u.
const bool le_table[3][3] = {
    {true, false, false},
    {true, true, true},
    {false, false, true},
};
const Mode meet_table[3][3] = {
    {C, U, U},
    {U, T, U},
    {U, U, U},
};

int idx(Mode m) { return static_cast<int>(m); }

TypeP arr(int lo, int hi, Mode m = C, bool nt = false) {
    return t_ptr(t_array(nt, Bound::lit(lo), Bound::lit(hi), t_int()), m);
}

}  // namespace

TEST_CASE("mode_le truth table") {
    for (Mode a : all)
        for (Mode b : all) CHECK(mode_le(a, b) == le_table[idx(a)][idx(b)]);
}

TEST_CASE("mode_meet truth table and algebra") {
    for (Mode a : all) {
        CHECK(mode_meet(a, a) == a);
        for (Mode b : all) {
            CHECK(mode_meet(a, b) == meet_table[idx(a)][idx(b)]);
            CHECK(mode_meet(a, b) == mode_meet(b, a));
            for (Mode c : all) CHECK(mode_meet(mode_meet(a, b), c) == mode_meet(a, mode_meet(b, c)));
        }
    }
}

TEST_CASE("mode_le is a partial order") {
    for (Mode a : all) {
        CHECK(mode_le(a, a));
        for (Mode b : all) {
            if (mode_le(a, b) && mode_le(b, a)) CHECK(a == b);
            for (Mode c : all)
                if (mode_le(a, b) && mode_le(b, c)) CHECK(mode_le(a, c));
        }
    }
}

TEST_CASE("bound_le hand cases") {
    PredEnv th;
    CHECK(bound_le(th, Bound::lit(1), Bound::lit(2)));
    CHECK_FALSE(bound_le(th, Bound::lit(3), Bound::lit(2)));
    CHECK(bound_le(th, Bound::of("x", 0), Bound::of("x", 1)));
    CHECK_FALSE(bound_le(th, Bound::of("x", 2), Bound::of("x", 1)));
    CHECK_FALSE(bound_le(th, Bound::lit(0), Bound::of("x")));
    th["x"] = Pred::ge_zero();
    CHECK(bound_le(th, Bound::lit(0), Bound::of("x")));
    CHECK_FALSE(bound_le(th, Bound::lit(1), Bound::of("x")));
    th["y"] = Pred::equals(Bound::lit(4));
    CHECK(bound_le(th, Bound::of("y", -1), Bound::lit(3)));
    CHECK(bound_eq(th, Bound::of("y"), Bound::lit(4)));
}

TEST_CASE("bound_le agrees with brute force") {
    std::mt19937_64 rng(99);
    const char* vars[] = {"a", "b", "c"};
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto bound = [&]() {
        int k = pick(0, 3);
        return k == 3 ? Bound::lit(pick(-4, 4)) : Bound::of(vars[k], pick(-3, 3));
    };
    for (int i = 0; i < 2000; ++i) {
        PredEnv th;
        for (const char* v : vars) {
            int k = pick(0, 2);
            if (k == 1) th[v] = Pred::ge_zero();
            if (k == 2) th[v] = Pred::equals(Bound::lit(pick(-4, 4)));
        }
        Bound x = bound(), y = bound();
        bool holds = true;
        for (int a = -8; a <= 8 && holds; ++a)
            for (int b = -8; b <= 8 && holds; ++b)
                for (int c = -8; c <= 8 && holds; ++c) {
                    std::map<std::string, int> val{{"a", a}, {"b", b}, {"c", c}};
                    bool sat = true;
                    for (auto& [v, p] : th) {
                        if (p.ge0 && val[v] < 0) sat = false;
                        if (!p.ge0 && val[v] != p.eq.off) sat = false;
                    }
                    if (!sat) continue;
                    auto ev = [&](const Bound& bd) { return (bd.var.empty() ? 0 : val[bd.var]) + bd.off; };
                    holds = ev(x) <= ev(y);
                }
        if (bound_le(th, x, y)) CHECK_MESSAGE(holds, print_bound(x) << " <= " << print_bound(y));
    }
}

TEST_CASE("subtype on array pointers") {
    PredEnv th;
    CHECK(subtype(th, arr(0, 3), arr(0, 2)));
    CHECK(subtype(th, arr(0, 3), arr(1, 3)));
    CHECK_FALSE(subtype(th, arr(0, 2), arr(0, 3)));
    CHECK_FALSE(subtype(th, arr(0, 3, C), arr(0, 3, T)));
    CHECK(subtype(th, arr(0, 3, C, true), arr(0, 3, C, false)));
    CHECK_FALSE(subtype(th, arr(0, 3, C, false), arr(0, 3, C, true)));
    CHECK(subtype(th, arr(0, 1), t_ptr(t_int(), C)));
    CHECK(subtype(th, t_int(), t_int()));
    CHECK_FALSE(subtype(th, t_int(), t_ptr(t_int(), C)));
}

TEST_CASE("nested pointer well-formedness") {
    CHECK(wf_nested(C, t_ptr(t_ptr(t_int(), C), C)));
    CHECK_FALSE(wf_nested(C, t_ptr(t_ptr(t_int(), U), C)));
    CHECK(wf_nested(U, t_ptr(t_ptr(t_int(), U), U)));
}
