// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when
// any line fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>

#include "chkbox/compiler.hpp"
#include "chkbox/propcheck.hpp"
#include "fixture_util.hpp"

using namespace chkbox;

namespace {

const Mode all_modes[] = {Mode::C, Mode::T, Mode::U};

struct Line {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int n, const char* name, const std::function<Line()>& f) {
    auto t0 = std::chrono::steady_clock::now();
    Line l;
    try {
        l = f();
    } catch (const std::exception& e) {
        l = {false, std::string("exception: ") + e.what()};
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!l.pass) ++failures;
    std::printf("%s %d %s: %s (%.2fs)\n", l.pass ? "PASS" : "FAIL", n, name, l.detail.c_str(), s);
    std::fflush(stdout);
}

std::string report_failures(const CheckReport& r) {
    std::string s;
    for (auto& f : r.failures) s += "\n    " + r.property + " case " + std::to_string(f.index) + ": " + f.detail;
    return s;
}

// Region tag of the deref lowering, "x" when the cell is rejected. Context
// t lowers like a sandbox: always region u.
const char* expected_cell[3][3] = {{"c", "u", "x"}, {"u", "u", "u"}, {"x", "u", "u"}};

Line flagtable() {
    int lowered = 0, rejected = 0, wrong = 0;
    std::string bad;
    for (Mode m : all_modes)
        for (Mode xi : all_modes) {
            std::string want = expected_cell[static_cast<int>(m)][static_cast<int>(xi)];
            std::string got = "x";
            if (auto r = lower_region(m, xi)) got = mode_name(*r);
            // Contexts c and u also go through the typechecker and compiler.
            if (m != Mode::T) {
                TypeEnv g{{"p", t_ptr(t_int(), xi)}};
                Heap h;
                FunStore f;
                TcContext tc{&h, &f, nullptr};
                std::string via = "x";
                try {
                    auto out = compile(g, {}, {}, m, parse_expr_text("(deref (var p))"), tc);
                    std::string text = corec::print_cexpr(out.target);
                    via = text.find("(deref c p)") != std::string::npos   ? "c"
                          : text.find("(deref u p)") != std::string::npos ? "u"
                                                                          : "?";
                } catch (const TypeError&) {
                }
                if (via != got) got = "mismatch(" + got + "/" + via + ")";
            }
            if (got != want) {
                ++wrong;
                bad += std::string(" ") + mode_name(m) + mode_name(xi) + "=" + got;
            }
            (got == "x" ? rejected : lowered)++;
        }
    return {wrong == 0 && lowered == 7 && rejected == 2,
            std::to_string(lowered) + " lowered, " + std::to_string(rejected) + " rejected" + bad};
}

Line mode_algebra() {
    // Independent tables, rows and columns ordered c, t, u.
    const bool le[3][3] = {{true, false, false}, {true, true, true}, {false, false, true}};
    const Mode meet[3][3] = {
        {Mode::C, Mode::U, Mode::U}, {Mode::U, Mode::T, Mode::U}, {Mode::U, Mode::U, Mode::U}};
    int checks = 0, bad = 0;
    for (Mode a : all_modes)
        for (Mode b : all_modes) {
            int i = static_cast<int>(a), j = static_cast<int>(b);
            bad += mode_le(a, b) != le[i][j];
            bad += mode_meet(a, b) != meet[i][j];
            bad += mode_meet(a, b) != mode_meet(b, a);
            checks += 3;
            for (Mode c : all_modes) {
                bad += mode_meet(mode_meet(a, b), c) != mode_meet(a, mode_meet(b, c));
                bad += (mode_le(a, b) && mode_le(b, c)) && !mode_le(a, c);
                checks += 2;
            }
        }
    return {bad == 0, std::to_string(checks) + " checks, " + std::to_string(bad) + " wrong"};
}

Line rule_goldens() {
    const char* s_rules[] = {"S-Var",     "S-Add",       "S-AddArr",      "S-AddArrNull",   "S-Cast",
                             "S-DefC",    "S-DefT",      "S-DefNull",     "S-DefArrayC",    "S-DefArrayBound",
                             "S-DefNTArrayBound",        "S-AssignC",     "S-AssignT",      "S-AssignArrC",
                             "S-AssignNull",             "S-AssignArrBound",                "S-Malloc",
                             "S-MallocBound",            "S-Let",         "S-Ret",          "S-IfT",
                             "S-IfF",     "S-IfNTNotC",  "S-Unchecked",   "S-Checked",      "S-FunC",
                             "S-FunT"};
    const char* t_rules[] = {"T-Var",    "T-Add",    "T-CastPtr", "T-DynCast", "T-Strlen",    "T-Mac",
                             "T-ConstU", "T-ConstC", "T-Def",     "T-Ind",     "T-Assign",    "T-AssignArr",
                             "T-IndAssign",          "T-Let",     "T-LetInt",  "T-If",        "T-Fun",
                             "T-Checked",            "T-Unchecked",            "T-RetInt"};
    std::map<std::string, int> step_ok, accept_ok, reject_ok;
    int total = 0, passed = 0;
    std::string bad;
    for (auto& f : fixtures::files(FIXTURE_DIR "/steps")) {
        auto r = fixtures::check_step_fixture(f);
        ++total;
        if (r.ok) ++passed, ++step_ok[r.rule];
        else bad += "\n    " + f.filename().string() + ": " + r.message;
    }
    for (auto& f : fixtures::files(FIXTURE_DIR "/typing")) {
        auto r = fixtures::check_typing_fixture(f);
        ++total;
        if (r.ok) ++passed, ++(r.accept ? accept_ok : reject_ok)[r.rule];
        else bad += "\n    " + f.filename().string() + ": " + r.message;
    }
    std::string missing;
    for (auto* r : s_rules)
        if (!step_ok[r]) missing += std::string(" ") + r;
    for (auto* r : t_rules) {
        if (!accept_ok[r]) missing += std::string(" accept:") + r;
        if (!reject_ok[r]) missing += std::string(" reject:") + r;
    }
    std::string d = std::to_string(passed) + "/" + std::to_string(total) + " fixtures";
    if (!missing.empty()) d += ", missing" + missing;
    return {passed == total && missing.empty(), d + bad};
}

SuiteOptions suite(size_t count) {
    SuiteOptions opt;
    opt.gen.count = count;
    opt.gen.max_depth = 8;
    opt.gen.seed = 1;
    return opt;
}

Line progress_preservation() {
    auto opt = suite(5000);
    auto a = run_property("progress", opt);
    auto b = run_property("preservation", opt);
    size_t f = a.failures.size() + b.failures.size();
    return {f == 0, std::to_string(a.cases) + " programs, " + std::to_string(a.failures.size()) + " stuck, " +
                        std::to_string(b.failures.size()) + " preservation violations" + report_failures(a) +
                        report_failures(b)};
}

Line simulation() {
    auto opt = suite(2000);
    opt.join_budget = 256;
    auto r = run_property("simulation", opt);
    double rate = static_cast<double>(r.inconclusive) / static_cast<double>(r.cases);
    std::string d = std::to_string(r.cases) + " programs, " + std::to_string(r.failures.size()) + " mismatches, " +
                    std::to_string(r.inconclusive) + " budget exceeded";
    for (auto i : r.inconclusive_cases) d += "\n    budget exceeded: case " + std::to_string(i);
    return {r.failures.empty() && rate < 0.005, d + report_failures(r)};
}

SuiteOptions fault_suite() {
    auto opt = suite(1000);
    opt.crash_rates = {0.25, 1.0};
    return opt;
}

Line unchecked_corpus() {
    GenConfig g = fault_suite().gen;
    g.unchecked = true;
    size_t with = 0;
    for (uint64_t i = 0; i < g.count; ++i)
        if (auto p = gen_program(g, i); p && contains_unchecked(p->main)) ++with;
    return {with == g.count, std::to_string(with) + "/" + std::to_string(g.count) + " with unchecked blocks"};
}

Line non_crash() {
    auto corpus = unchecked_corpus();
    auto r = run_property("noncrash", fault_suite());
    return {corpus.pass && r.failures.empty(), std::to_string(r.cases) + " programs x 2 rates, " +
                                                   std::to_string(r.failures.size()) + " stuck; " + corpus.detail +
                                                   report_failures(r)};
}

Line unchecked_pres_nonexposure() {
    auto a = run_property("uncheckedpres", fault_suite());
    auto b = run_property("nonexposure", fault_suite());
    return {a.failures.empty() && b.failures.empty(),
            std::to_string(a.cases) + " programs, " + std::to_string(a.failures.size()) + " region-c mutations, " +
                std::to_string(b.failures.size()) + " exposures" + report_failures(a) + report_failures(b)};
}

Line bound_le_sound() {
    auto s = check_bound_le_soundness(2024, 10000);
    std::string d = std::to_string(s.instances) + " instances, " + std::to_string(s.deduced) + " deduced, " +
                    std::to_string(s.violations) + " violations";
    for (auto& e : s.examples) d += "\n    " + e;
    return {s.instances == 10000 && s.violations == 0, d};
}

Line compile_golden() {
    Program p = parse_program(fixtures::slurp(FIXTURE_DIR "/deref_array.chk"));
    check_program(p);
    auto got = compile_program(p);
    auto want = corec::parse_cprogram(fixtures::slurp(GOLDEN_DIR "/deref_array.corec"));
    bool same = cexpr_equal(got.main, want.main) && got.funs.c.size() == want.funs.c.size() &&
                got.funs.u.size() == want.funs.u.size();
    for (auto& [a, f] : want.funs.c)
        same = same && got.funs.c.count(a) && got.funs.c.at(a).params == f.params &&
               cexpr_equal(got.funs.c.at(a).body, f.body);
    same = same && corec::print_cprogram(got) == fixtures::slurp(GOLDEN_DIR "/deref_array.corec");
    return {same, same ? "exact match" : "differs:\n" + corec::print_cprogram(got)};
}

}  // namespace

int main() {
    report(1, "flagtable", flagtable);
    report(2, "mode algebra", mode_algebra);
    report(3, "rule goldens", rule_goldens);
    report(4, "progress + preservation", progress_preservation);
    report(5, "simulation", simulation);
    report(6, "non-crashing under faults", non_crash);
    report(7, "unchecked preservation + non-exposure", unchecked_pres_nonexposure);
    report(8, "bound_le soundness", bound_le_sound);
    report(9, "compilation golden", compile_golden);
    return failures == 0 ? 0 : 1;
}
