#include "chkbox/propcheck.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <random>
#include <thread>
#include <unordered_set>

#include "chkbox/compiler.hpp"
#include "json.hpp"

namespace chkbox {

using namespace corec;

namespace {

CheckResult fail(std::string detail, size_t steps, std::vector<std::string> trace) {
    return {Verdict::Fail, std::move(detail), steps, std::move(trace)};
}

bool same_cells(const std::map<int64_t, Value>& a, const std::map<int64_t, Value>& b) {
    if (a.size() != b.size()) return false;
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib)
        if (ia->first != ib->first || ia->second.n != ib->second.n ||
            !type_equal_syntax(ia->second.type, ib->second.type))
            return false;
    return true;
}

// Drives the machine and hands every step to visit; visit returns a
// non-empty string to stop with a failure.
CheckResult walk(const Program& p, size_t fuel, FaultPolicy policy,
                 const std::function<std::string(const Config&, const Step&)>& visit) {
    FunStore funs = funs_of(p);
    Config cfg = initial_config(p);
    FaultSource faults(policy);
    std::vector<std::string> trace;
    for (size_t i = 0; i < fuel; ++i) {
        Step s = step(cfg, funs, &faults);
        if (s.kind == StepKind::Value) return {Verdict::Pass, "", i, {}};
        trace.push_back(s.rule.empty() ? "stuck" : s.rule);
        if (std::string why = visit(cfg, s); !why.empty()) return fail(why, i + 1, trace);
        if (s.kind == StepKind::Stepped || s.kind == StepKind::Fault) {
            cfg = std::move(s.next);
            continue;
        }
        return {Verdict::Pass, "", i + 1, {}};
    }
    return {Verdict::Pass, "out of fuel", fuel, {}};
}

std::string stuck_detail(const Step& s) {
    return "stuck on " + (s.redex ? print_expr(s.redex) : std::string("?")) + ": " + s.detail;
}

bool mentions_checked(const Stack& stack, const ExprP& e) {
    if (e->kind == ExprKind::Checked) return false;
    if (e->kind == ExprKind::Lit && is_checked(e->type) && e->n != 0) return true;
    if (e->kind == ExprKind::Var || e->kind == ExprKind::Strlen) {
        auto it = stack.find(e->x);
        if (it != stack.end() && is_checked(it->second.type) && it->second.n != 0) return true;
    }
    if (e->kind == ExprKind::Ret && e->saved && is_checked(e->saved->type) && e->saved->n != 0) return true;
    for (auto& k : e->kids)
        if (mentions_checked(stack, k)) return true;
    return false;
}

}  // namespace

bool exposes_checked(const Stack& stack, const ExprP& redex) {
    if (redex->kind == ExprKind::Checked || redex->kind == ExprKind::Unchecked) return false;
    return mentions_checked(stack, redex);
}

bool checked_heap_consistent(const Heap& h, const FunStore& funs) {
    for (auto& [a, v] : h.c)
        if (is_checked(v.type) && !const_valid(h, funs, Mode::C, v.n, v.type)) return false;
    return true;
}

CheckResult check_progress(const Program& p, size_t fuel) {
    return walk(p, fuel, {}, [](const Config&, const Step& s) {
        return s.kind == StepKind::Stuck ? stuck_detail(s) : std::string();
    });
}

CheckResult check_non_crashing(const Program& p, size_t fuel, FaultPolicy policy) {
    return walk(p, fuel, policy, [](const Config&, const Step& s) {
        return s.kind == StepKind::Stuck ? stuck_detail(s) : std::string();
    });
}

CheckResult check_preservation(const Program& p, size_t fuel) {
    FunStore funs = funs_of(p);
    TypeP cur;
    try {
        cur = type_of_config(initial_config(p), funs);
    } catch (const TypeError& e) {
        return fail(std::string("initial state does not type: ") + e.what(), 0, {});
    }
    return walk(p, fuel, {}, [&](const Config&, const Step& s) -> std::string {
        if (s.kind == StepKind::Stuck) return stuck_detail(s);
        if (s.kind != StepKind::Stepped || s.mode != Mode::C) return "";
        TypeP next;
        try {
            next = type_of_config(s.next, funs);
        } catch (const TypeError& e) {
            return s.rule + " broke typing: " + e.what();
        }
        RuntimeView rv = runtime_view(s.next);
        if (!subtype(rv.theta, next, cur))
            return s.rule + " changed type " + print_type(cur) + " to " + print_type(next);
        if (!checked_heap_consistent(s.next.heap, funs)) return s.rule + " left the checked heap inconsistent";
        cur = next;
        return "";
    });
}

CheckResult check_unchecked_preservation(const Program& p, size_t fuel, FaultPolicy policy) {
    return walk(p, fuel, policy, [](const Config& cfg, const Step& s) -> std::string {
        if (s.kind == StepKind::Stuck) return stuck_detail(s);
        if (s.mode != Mode::U || (s.kind != StepKind::Stepped && s.kind != StepKind::Fault)) return "";
        if (!same_cells(cfg.heap.c, s.next.heap.c)) return s.rule + " in u mode changed the checked region";
        return "";
    });
}

CheckResult check_non_exposure(const Program& p, size_t fuel, FaultPolicy policy) {
    return walk(p, fuel, policy, [](const Config& cfg, const Step& s) -> std::string {
        if (s.kind == StepKind::Stuck) return stuck_detail(s);
        if (s.mode == Mode::U && s.redex && exposes_checked(cfg.stack, s.redex))
            return "u-mode redex observes a checked value: " + print_expr(s.redex);
        return "";
    });
}

// ---- join ----

namespace {

void names_in(const CExprP& e, std::set<std::string>& out) {
    switch (e->kind) {
        case K::Var:
        case K::Let:
        case K::Ret:
        case K::Widen:
        case K::Strlen: out.insert(e->x); break;
        default: break;
    }
    for (auto& k : e->kids) names_in(k, out);
}

std::string temp_base(const std::string& x) {
    auto pos = x.find('#', 2);
    return pos == std::string::npos ? x : x.substr(0, pos);
}

CExprP rebuild(const CExprP& e, std::vector<CExprP> kids) {
    auto c = std::make_shared<CExpr>(*e);
    c->kids = std::move(kids);
    return c;
}

CExprP subst_temps(const CExprP& e, const CStack& s) {
    if (e->kind == K::Var && is_temp_name(e->x)) {
        auto it = s.find(e->x);
        return it == s.end() ? e : c_lit(it->second);
    }
    if (e->kids.empty()) return e;
    std::vector<CExprP> kids;
    for (auto& k : e->kids) kids.push_back(subst_temps(k, s));
    return rebuild(e, std::move(kids));
}

CExprP strip_rets(const CExprP& e) {
    std::vector<CExprP> kids;
    for (auto& k : e->kids) kids.push_back(strip_rets(k));
    if (e->kind == K::Ret && (!e->saved || is_temp_name(e->x))) {
        std::set<std::string> used;
        names_in(kids[0], used);
        if (!used.count(e->x)) return kids[0];
    }
    return e->kids.empty() ? e : rebuild(e, std::move(kids));
}

CExprP sort_rets(const CExprP& e) {
    if (e->kind == K::Ret) {
        std::vector<CExprP> chain;
        CExprP cur = e;
        while (cur->kind == K::Ret) {
            chain.push_back(cur);
            cur = cur->kids[0];
        }
        CExprP body = sort_rets(cur);
        std::stable_sort(chain.begin(), chain.end(), [](const CExprP& a, const CExprP& b) { return a->x < b->x; });
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) body = rebuild(*it, {body});
        return body;
    }
    if (e->kids.empty()) return e;
    std::vector<CExprP> kids;
    for (auto& k : e->kids) kids.push_back(sort_rets(k));
    return rebuild(e, std::move(kids));
}

struct Renamer {
    std::map<std::string, std::string> map;

    std::string name(const std::string& x) {
        if (!is_temp_name(x)) return x;
        std::string base = temp_base(x);
        auto it = map.find(base);
        if (it == map.end()) it = map.emplace(base, "t#" + std::to_string(map.size())).first;
        return it->second + x.substr(base.size());
    }

    CExprP operator()(const CExprP& e) {
        auto c = std::make_shared<CExpr>(*e);
        if (!c->x.empty()) c->x = name(c->x);
        for (auto& k : c->kids) k = (*this)(k);
        return c;
    }
};

std::string heap_key(const CHeap& h) {
    std::string s;
    for (auto* m : {&h.c, &h.u}) {
        s += "[";
        for (auto& [a, v] : *m) s += std::to_string(a) + ":" + std::to_string(v) + ",";
        s += "]";
    }
    return s;
}

}  // namespace

std::string join_key(const CConfig& cfg) {
    CExprP e = subst_temps(cfg.expr, cfg.stack);
    e = sort_rets(strip_rets(e));
    Renamer r;
    e = r(e);
    std::set<std::string> used;
    names_in(e, used);
    std::string s = print_cexpr(e) + "|";
    for (auto& [x, v] : cfg.stack)
        if (used.count(x)) s += x + "=" + std::to_string(v) + ",";
    return s + "|" + heap_key(cfg.heap);
}

namespace {

struct Orbit {
    CConfig cur;
    bool done = false;
    std::unordered_set<std::string> seen;

    // Advances one step; terminal failures become a pseudo-state.
    std::string advance(const CFunStore& funs) {
        CStep s = step_corec(cur, funs);
        if (s.kind == CStepKind::Stepped) {
            cur = std::move(s.next);
            return join_key(cur);
        }
        done = true;
        if (s.kind == CStepKind::Null) return "!null|" + heap_key(cur.heap);
        if (s.kind == CStepKind::Bounds) return "!bounds|" + heap_key(cur.heap);
        if (s.kind == CStepKind::Stuck) return "!stuck";
        return "";
    }
};

}  // namespace

JoinResult joinable(const CConfig& a, const CConfig& b, const CFunStore& funs, size_t budget) {
    Orbit oa{a, false, {}}, ob{b, false, {}};
    std::string ka = join_key(a), kb = join_key(b);
    if (ka == kb) return JoinResult::Joined;
    oa.seen.insert(ka);
    ob.seen.insert(kb);
    for (size_t i = 0; i < budget && !(oa.done && ob.done); ++i) {
        for (auto [self, other] : {std::pair{&oa, &ob}, std::pair{&ob, &oa}}) {
            if (self->done) continue;
            std::string k = self->advance(funs);
            if (k.empty()) continue;
            if (other->seen.count(k)) return JoinResult::Joined;
            self->seen.insert(k);
        }
    }
    return oa.done && ob.done ? JoinResult::Mismatch : JoinResult::BudgetExceeded;
}

CheckResult check_simulation(const Program& p, size_t fuel, size_t join_budget) {
    FunStore funs = funs_of(p);
    Heap heap0 = heap_of(p);
    Config cfg = initial_config(p);
    std::vector<std::string> trace;
    CFunStore cfuns;
    CConfig prev;
    try {
        cfuns = compile_funs(funs, heap0);
        prev = compile_config(cfg, funs);
    } catch (const std::exception& e) {
        return fail(std::string("compile: ") + e.what(), 0, {});
    }
    bool budget_hit = false;
    for (size_t i = 0; i < fuel; ++i) {
        Step s = step(cfg, funs, nullptr);
        if (s.kind == StepKind::Value) break;
        trace.push_back(s.rule.empty() ? "stuck" : s.rule);
        if (s.kind == StepKind::Stuck) return fail(stuck_detail(s), i + 1, trace);
        if (s.kind == StepKind::Null || s.kind == StepKind::Bounds) {
            COutcome o = run_corec(prev, cfuns, join_budget);
            OutcomeKind want = s.kind == StepKind::Null ? OutcomeKind::Null : OutcomeKind::Bounds;
            if (o.kind == OutcomeKind::OutOfFuel) return {Verdict::Inconclusive, "join budget exceeded", i + 1, trace};
            if (o.kind != want)
                return fail(std::string("source fails with ") + outcome_name(want) + ", target ends " +
                                outcome_name(o.kind) + " " + o.detail,
                            i + 1, trace);
            if (!(o.final_cfg.heap == erase_heap(cfg.heap))) return fail("failure heaps differ", i + 1, trace);
            return {Verdict::Pass, "", i + 1, {}};
        }
        CConfig next;
        try {
            next = compile_config(s.next, funs);
        } catch (const std::exception& e) {
            return fail(s.rule + ": compile: " + e.what(), i + 1, trace);
        }
        JoinResult j = joinable(prev, next, cfuns, join_budget);
        if (j == JoinResult::Mismatch)
            return fail(s.rule + ": no common state\n  " + join_key(prev) + "\n  " + join_key(next), i + 1, trace);
        if (j == JoinResult::BudgetExceeded) budget_hit = true;
        prev = std::move(next);
        cfg = std::move(s.next);
    }
    if (budget_hit) return {Verdict::Inconclusive, "join budget exceeded", trace.size(), trace};
    return {Verdict::Pass, "", trace.size(), {}};
}

// ---- suites ----

std::vector<std::string> all_properties() {
    return {"progress", "preservation", "uncheckedpres", "nonexposure", "noncrash", "simulation"};
}

namespace {

bool wants_unchecked(const std::string& prop) {
    return prop == "uncheckedpres" || prop == "nonexposure" || prop == "noncrash";
}

CheckResult run_case(const std::string& prop, const Program& p, const SuiteOptions& opt, uint64_t index) {
    if (prop == "progress") return check_progress(p, opt.fuel);
    if (prop == "preservation") return check_preservation(p, opt.fuel);
    if (prop == "simulation") return check_simulation(p, opt.fuel, opt.join_budget);
    // fault-injected suites run once per crash rate
    CheckResult last;
    for (size_t r = 0; r < opt.crash_rates.size(); ++r) {
        FaultPolicy pol{opt.crash_rates[r], case_seed(opt.fault_seed + r, index)};
        if (prop == "uncheckedpres")
            last = check_unchecked_preservation(p, opt.fuel, pol);
        else if (prop == "nonexposure")
            last = check_non_exposure(p, opt.fuel, pol);
        else
            last = check_non_crashing(p, opt.fuel, pol);
        if (last.verdict != Verdict::Pass) {
            last.detail = "rate " + std::to_string(opt.crash_rates[r]) + ": " + last.detail;
            return last;
        }
    }
    return last;
}

}  // namespace

CheckReport run_property(const std::string& prop, const SuiteOptions& opt) {
    auto t0 = std::chrono::steady_clock::now();
    GenConfig g = opt.gen;
    g.unchecked = wants_unchecked(prop);
    size_t n = g.count;
    std::vector<std::optional<CheckResult>> results(n);
    std::vector<std::string> texts(n);
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (size_t i; (i = next.fetch_add(1)) < n;) {
            auto p = gen_program(g, i);
            if (!p) {
                results[i] = CheckResult{Verdict::Fail, "generator gave up", 0, {}};
                continue;
            }
            CheckResult r;
            try {
                r = run_case(prop, *p, opt, i);
            } catch (const std::exception& e) {
                r = CheckResult{Verdict::Fail, std::string("exception: ") + e.what(), 0, {}};
            }
            if (r.verdict != Verdict::Pass) texts[i] = print_program(*p);
            results[i] = std::move(r);
        }
    };
    unsigned nt = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    CheckReport rep;
    rep.property = prop;
    rep.cases = n;
    for (size_t i = 0; i < n; ++i) {
        const CheckResult& r = *results[i];
        if (r.verdict == Verdict::Fail) rep.failures.push_back({i, texts[i], r.detail, r.trace});
        if (r.verdict == Verdict::Inconclusive) {
            ++rep.inconclusive;
            rep.inconclusive_cases.push_back(i);
        }
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

std::string report_json(const std::vector<CheckReport>& reports, const SuiteOptions& opt) {
    nlohmann::ordered_json j;
    j["seed"] = opt.gen.seed;
    j["max_depth"] = opt.gen.max_depth;
    j["count"] = opt.gen.count;
    j["fuel"] = opt.fuel;
    j["join_budget"] = opt.join_budget;
    j["crash_rates"] = opt.crash_rates;
    j["fault_seed"] = opt.fault_seed;
    j["properties"] = nlohmann::ordered_json::array();
    for (auto& r : reports) {
        nlohmann::ordered_json pj;
        pj["property"] = r.property;
        pj["count"] = r.cases;
        pj["passed"] = r.failures.empty();
        pj["inconclusive"] = r.inconclusive;
        pj["inconclusive_cases"] = r.inconclusive_cases;
        pj["failures"] = nlohmann::ordered_json::array();
        for (auto& f : r.failures) {
            nlohmann::ordered_json fj;
            fj["index"] = f.index;
            fj["detail"] = f.detail;
            fj["trace"] = f.trace;
            fj["program"] = f.program;
            pj["failures"].push_back(fj);
        }
        j["properties"].push_back(pj);
    }
    return j.dump(2);
}

// ---- bound_le against brute force ----

namespace {

// Every assignment of [-8, 8] to vars satisfying theta, checked for a <= b.
bool semantic_le(const PredEnv& theta, const std::vector<std::string>& vars, const Bound& a, const Bound& b) {
    std::map<std::string, int64_t> val;
    std::function<bool(size_t)> go = [&](size_t i) -> bool {
        if (i == vars.size()) {
            auto ev = [&](const Bound& x) { return x.off + (x.is_lit() ? 0 : val.at(x.var)); };
            for (auto& [x, p] : theta) {
                if (p.ge0 && val.at(x) < 0) return true;
                if (!p.ge0 && val.at(x) != ev(p.eq)) return true;
            }
            return ev(a) <= ev(b);
        }
        for (int64_t v = -8; v <= 8; ++v) {
            val[vars[i]] = v;
            if (!go(i + 1)) return false;
        }
        return true;
    };
    return go(0);
}

}  // namespace

BoundLeStats check_bound_le_soundness(uint64_t seed, size_t count) {
    std::mt19937_64 rng(seed);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const std::vector<std::string> names{"a", "b", "c"};
    BoundLeStats st;
    for (size_t i = 0; i < count; ++i) {
        size_t nv = static_cast<size_t>(pick(1, 3));
        std::vector<std::string> vars(names.begin(), names.begin() + static_cast<long>(nv));
        auto bound = [&]() {
            if (pick(0, 3) == 0) return Bound::lit(pick(-4, 4));
            return Bound::of(vars[static_cast<size_t>(pick(0, static_cast<int>(nv) - 1))], pick(-3, 3));
        };
        PredEnv theta;
        for (auto& x : vars) {
            int r = pick(0, 2);
            if (r == 0) theta[x] = Pred::ge_zero();
            if (r == 1) {
                Bound b = bound();
                if (b.var != x) theta[x] = Pred::equals(b);
            }
        }
        Bound a = bound(), b = bound();
        ++st.instances;
        if (!bound_le(theta, a, b)) continue;
        ++st.deduced;
        if (!semantic_le(theta, vars, a, b)) {
            ++st.violations;
            if (st.examples.size() < 5) st.examples.push_back(print_bound(a) + " <= " + print_bound(b));
        }
    }
    return st;
}

}  // namespace chkbox
