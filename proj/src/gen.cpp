#include "chkbox/gen.hpp"

#include <random>

#include "chkbox/typecheck.hpp"

namespace chkbox {

// splitmix64 over the pair
uint64_t case_seed(uint64_t seed, uint64_t index) {
    uint64_t z = seed * 0x9e3779b97f4a7c15ULL + index + 0x632be59bd9b4e019ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

struct Retry {};

struct Scope {
    std::vector<std::pair<std::string, TypeP>> vars;
    PredEnv th;

    const TypeP* find(const std::string& x) const {
        for (auto& [y, t] : vars)
            if (y == x) return &t;
        return nullptr;
    }
};

struct Fn {
    int64_t addr;
    Mode region;
    FunDef def;
    TypeP ptr;
};

class Gen {
public:
    Gen(const GenConfig& c, uint64_t seed) : cfg(c), rng(seed) {}

    Program program() {
        if (cfg.fun_ptrs) {
            int n = pick(4);
            for (int i = 0; i < n; ++i) function();
        }
        Scope s;
        TypeP goal = coin(0.7) ? t_int() : word_type(s, Mode::C, 1);
        prog.main = gen(s, Mode::C, goal, cfg.max_depth);
        if (cfg.unchecked && !contains_unchecked(prog.main)) throw Retry{};
        return prog;
    }

private:
    const GenConfig& cfg;
    std::mt19937_64 rng;
    Program prog;
    int64_t next_c = 1, next_u = 1;
    int names = 0;
    std::vector<Fn> fns;
    bool in_fun = false;
    bool t_only = false;  // body of a t-mode function: checked at both modes

    int pick(int n) { return n <= 1 ? 0 : std::uniform_int_distribution<int>(0, n - 1)(rng); }
    int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
    bool coin(double p) { return std::bernoulli_distribution(p)(rng); }
    std::string fresh(const char* base) { return base + std::to_string(names++); }

    // ---- types ----

    Mode ptr_mode(Mode ctx) {
        if (t_only) return Mode::T;
        if (ctx == Mode::C) return cfg.tainted_ptrs && coin(0.35) ? Mode::T : Mode::C;
        return coin(0.5) ? Mode::T : Mode::U;
    }

    // Mode for a pointer stored inside an object reached with mode outer.
    Mode nested_mode(Mode ctx, Mode outer) {
        Mode inner = mode_meet(outer, ctx);
        if (inner == Mode::C) return ptr_mode(Mode::C);
        return coin(0.5) || t_only ? Mode::T : Mode::U;
    }

    Bound upper(const Scope& s) {
        if (coin(0.25)) {
            std::vector<std::string> ints;
            for (auto& [x, t] : s.vars)
                if (t->is_int()) ints.push_back(x);
            if (!ints.empty()) return Bound::of(ints[static_cast<size_t>(pick(static_cast<int>(ints.size())))]);
        }
        return Bound::lit(range(1, 4));
    }

    TypeP elem_type(Mode ctx, Mode outer, int d) {
        if (d <= 0 || coin(0.8)) return t_int();
        return t_ptr(t_int(), nested_mode(ctx, outer));
    }

    TypeP array_ptr(const Scope& s, Mode ctx, int d) {
        Mode m = ptr_mode(ctx);
        bool nt = cfg.nt_arrays && coin(0.4);
        return t_ptr(t_array(nt, Bound::lit(0), upper(s), elem_type(ctx, m, d - 1)), m);
    }

    TypeP word_type(const Scope& s, Mode ctx, int d) {
        int r = pick(10);
        if (r < 4 || d <= 0) return t_int();
        if (r < 6) {
            Mode m = ptr_mode(ctx);
            return t_ptr(elem_type(ctx, m, d - 1), m);
        }
        if (r < 9 && cfg.arrays) return array_ptr(s, ctx, d);
        if (auto f = callable(ctx)) return f->ptr;
        return t_int();
    }

    const Fn* callable(Mode ctx) {
        std::vector<const Fn*> ok;
        for (auto& f : fns)
            if (mode_le(f.ptr->mode, ctx) && !(t_only && f.ptr->mode != Mode::T)) ok.push_back(&f);
        if (ok.empty()) return nullptr;
        return ok[static_cast<size_t>(pick(static_cast<int>(ok.size())))];
    }

    // ---- heap objects ----

    int64_t cell_value(const TypeP& t, int d) {
        if (t->is_int()) return coin(0.3) ? 0 : range(1, 9);
        return object(t, d - 1);
    }

    // Allocates a valid object for pointer type t (closed); returns its address.
    int64_t object(const TypeP& t, int d) {
        if (d <= 0 || coin(0.1)) return 0;
        Mode r = region_of(t->mode);
        if (t->mode != Mode::C && coin(0.1)) return 900 + range(0, 50);
        const TypeP& w = t->pointee;
        if (w->is_fun()) return 0;
        int64_t n = size_of(w);
        TypeP elem = w->is_array() ? w->elem : w;
        std::vector<int64_t> vals;
        for (int64_t i = 0; i < n; ++i) vals.push_back(cell_value(elem, d));
        if (w->is_array() && w->nt && n > 0 && coin(0.85)) vals.back() = 0;
        int64_t& next = r == Mode::C ? next_c : next_u;
        int64_t base = next;
        next += std::max<int64_t>(n, 1);
        for (int64_t i = 0; i < n; ++i) prog.heap.push_back(HeapEntry{r, base + i, Value{vals[static_cast<size_t>(i)], elem}});
        return base;
    }

    ExprP literal(const Scope& s, Mode ctx, const TypeP& goal) {
        if (goal->is_int()) return e_lit(range(-2, 6), t_int());
        if (ctx == Mode::U && goal->mode == Mode::C) throw Retry{};
        if (goal->pointee->is_fun()) {
            for (auto& f : fns)
                if (type_eq({}, f.ptr, goal)) return e_lit(f.addr, f.ptr);
            return e_lit(0, goal);
        }
        TypeP closed = resolve_type(s.th, goal);
        if (!type_free_vars(closed).empty()) return e_lit(0, goal);
        int64_t lo = 0;
        if (closed->pointee->is_array()) lo = closed->pointee->lo.off;
        if (lo != 0 || size_of(closed->pointee) > 8) return e_lit(0, closed);
        return e_lit(object(closed, 3), closed);
    }

    // ---- expressions ----

    std::vector<std::string> vars_of(const Scope& s, const TypeP& goal) {
        std::vector<std::string> out;
        for (auto& [x, t] : s.vars)
            if (subtype(s.th, t, goal)) out.push_back(x);
        return out;
    }

    ExprP leaf(Scope& s, Mode ctx, const TypeP& goal) {
        auto vs = vars_of(s, goal);
        if (!vs.empty() && coin(0.6)) return e_var(vs[static_cast<size_t>(pick(static_cast<int>(vs.size())))]);
        if (goal->is_ptr() && !goal->pointee->is_fun() && mode_le(goal->mode, ctx) && coin(0.4))
            return e_malloc(goal->mode, goal->pointee);
        return literal(s, ctx, goal);
    }

    ExprP gen(Scope& s, Mode ctx, const TypeP& goal, int d) {
        if (d <= 0 || coin(0.05)) return leaf(s, ctx, goal);
        for (int attempt = 0; attempt < 4; ++attempt) {
            try {
                if (auto e = production(s, ctx, goal, d)) return e;
            } catch (const Retry&) {
            }
        }
        return leaf(s, ctx, goal);
    }

    ExprP production(Scope& s, Mode ctx, const TypeP& goal, int d) {
        bool is_int = goal->is_int();
        bool arr = is_array_ptr(goal);
        switch (pick(12)) {
            case 0:
            case 1: return let(s, ctx, goal, d);
            case 2:
                if (arr) return nullptr;
                if (is_int && ctx == Mode::C && coin(0.5)) return widen_if(s, ctx, d);
                return e_if(gen(s, ctx, t_int(), d - 1), gen(s, ctx, goal, d - 1), gen(s, ctx, goal, d - 1));
            case 3:
                if (!is_int) return nullptr;
                if (coin(0.3)) return strlen_(s, ctx);
                return e_add(gen(s, ctx, t_int(), d - 1), gen(s, ctx, t_int(), d - 1));
            case 4:
            case 5: return access(s, ctx, goal, d, false);
            case 6: return access(s, ctx, goal, d, true);
            case 7: return cast(s, ctx, goal, d);
            case 8: return dyncast(s, ctx, goal, d);
            case 9: return call(s, ctx, goal, d);
            case 10: return block(s, ctx, goal, d);
            default: return leaf(s, ctx, goal);
        }
    }

    ExprP let(Scope& s, Mode ctx, const TypeP& goal, int d) {
        TypeP sigma = word_type(s, ctx, 2);
        std::string x = fresh("x");
        ExprP rhs = gen(s, ctx, sigma, d - 1);
        Scope inner = s;
        inner.vars.push_back({x, sigma});
        if (sigma->is_int())
            if (auto b = as_bound_expr(rhs)) inner.th[x] = Pred::equals(*b);
        return e_let(x, rhs, gen(inner, ctx, goal, d - 1));
    }

    ExprP widen_if(Scope& s, Mode ctx, int d) {
        std::vector<std::string> xs;
        for (auto& [x, t] : s.vars)
            if (is_nt_array_ptr(t) && t->mode == Mode::C && t->pointee->elem->is_int()) xs.push_back(x);
        if (xs.empty()) throw Retry{};
        std::string x = xs[static_cast<size_t>(pick(static_cast<int>(xs.size())))];
        return e_if(e_deref(e_var(x)), gen(s, ctx, t_int(), d - 1), gen(s, ctx, t_int(), d - 1));
    }

    ExprP strlen_(Scope& s, Mode ctx) {
        std::vector<std::string> xs;
        for (auto& [x, t] : s.vars)
            if (is_nt_array_ptr(t) && mode_le(t->mode, ctx)) xs.push_back(x);
        if (xs.empty()) throw Retry{};
        return e_strlen(xs[static_cast<size_t>(pick(static_cast<int>(xs.size())))]);
    }

    // Deref (write=false) or assign through a pointer whose target is goal.
    ExprP access(Scope& s, Mode ctx, const TypeP& goal, int d, bool write) {
        if (goal->is_ptr() && goal->pointee->is_fun()) throw Retry{};
        if (goal->is_ptr() && goal->pointee->is_array()) throw Retry{};
        auto value = [&]() { return gen(s, ctx, goal, d - 1); };
        // indexed form through an array variable
        if (cfg.arrays && coin(0.35)) {
            std::vector<std::pair<std::string, TypeP>> xs;
            for (auto& [x, t] : s.vars)
                if (is_array_ptr(t) && mode_le(t->mode, ctx) && type_eq(s.th, t->pointee->elem, goal))
                    xs.push_back({x, t});
            if (!xs.empty()) {
                auto& [x, t] = xs[static_cast<size_t>(pick(static_cast<int>(xs.size())))];
                ExprP i = coin(0.7) ? e_lit(range(0, 3), t_int()) : gen(s, ctx, t_int(), d - 2);
                ExprP p = e_add(e_var(x), i);
                return write ? e_assign(p, value()) : e_deref(p);
            }
        }
        Mode m = ptr_mode(ctx);
        if (goal->is_ptr() && !wf_nested(mode_meet(m, ctx), goal)) throw Retry{};
        TypeP pt;
        if (cfg.arrays && coin(0.5))
            pt = t_ptr(t_array(cfg.nt_arrays && !write && coin(0.3), Bound::lit(0), upper(s), goal), m);
        else
            pt = t_ptr(goal, m);
        ExprP p = gen(s, ctx, pt, d - 1);
        return write ? e_assign(p, value()) : e_deref(p);
    }

    ExprP cast(Scope& s, Mode ctx, const TypeP& goal, int d) {
        if (is_array_ptr(goal)) {
            const TypeP& w = goal->pointee;
            TypeP src = t_ptr(t_array(w->nt, w->lo, w->hi.plus(range(0, 2)), w->elem), goal->mode);
            return e_cast(goal, gen(s, ctx, src, d - 1));
        }
        return e_cast(goal, gen(s, ctx, goal, d - 1));
    }

    ExprP dyncast(Scope& s, Mode ctx, const TypeP& goal, int d) {
        if (!cfg.arrays || !goal->is_ptr() || goal->pointee->is_fun()) throw Retry{};
        const TypeP& w = goal->pointee;
        TypeP elem = w->is_array() ? w->elem : w;
        if (!elem->is_word()) throw Retry{};
        bool nt = w->is_array() ? w->nt : false;
        if (!nt && cfg.nt_arrays) nt = coin(0.2);
        TypeP src = t_ptr(t_array(nt, Bound::lit(0), Bound::lit(range(0, 4)), elem), goal->mode);
        return e_dyncast(goal, gen(s, ctx, src, d - 1));
    }

    ExprP call(Scope& s, Mode ctx, const TypeP& goal, int d) {
        if (in_fun) throw Retry{};
        const Fn* f = callable(ctx);
        if (!f) throw Retry{};
        const TypeP& ft = f->ptr->pointee;
        std::map<std::string, Bound> sigma;
        std::vector<ExprP> args;
        size_t k = 0;
        for (auto& p : ft->params) {
            if (!p->is_int()) continue;
            ExprP a = e_lit(range(0, 4), t_int());
            std::vector<std::string> ints;
            for (auto& [x, t] : s.vars)
                if (t->is_int()) ints.push_back(x);
            if (!ints.empty() && coin(0.3)) a = e_var(ints[static_cast<size_t>(pick(static_cast<int>(ints.size())))]);
            sigma[ft->binders[k++]] = *as_bound_expr(a);
            args.push_back(a);
        }
        TypeP ret = subst_type(ft->ret, sigma);
        if (!subtype(s.th, ret, goal)) throw Retry{};
        std::vector<ExprP> all;
        size_t ai = 0;
        for (auto& p : ft->params)
            all.push_back(p->is_int() ? args[ai++] : gen(s, ctx, subst_type(p, sigma), d - 1));
        ExprP callee = coin(0.8) ? e_lit(f->addr, f->ptr) : gen(s, ctx, f->ptr, d - 1);
        return e_call(callee, all);
    }

    ExprP block(Scope& s, Mode ctx, const TypeP& goal, int d) {
        if (in_fun || !cfg.unchecked || is_checked(goal)) throw Retry{};
        Mode inner = ctx == Mode::C ? Mode::U : Mode::C;
        if (inner == Mode::U && !wf_value_type(Mode::U, goal)) throw Retry{};
        Scope s2;
        std::vector<std::string> xs;
        for (auto& [x, t] : s.vars)
            if (!is_checked(t)) {
                xs.push_back(x);
                s2.vars.push_back({x, t});
            }
        s2.th = s.th;
        ExprP body = gen(s2, inner, goal, d - 1);
        return inner == Mode::U ? e_unchecked(xs, body) : e_checked(xs, body);
    }

    // ---- functions ----

    void function() {
        int kind = pick(cfg.tainted_ptrs ? 3 : 1);
        Mode mode = kind == 0 ? Mode::C : kind == 1 ? Mode::T : Mode::U;
        Mode region = mode == Mode::C ? Mode::C : Mode::U;
        FunDef def;
        def.mode = mode;
        def.ret = t_int();
        std::string n = fresh("n");
        def.params.push_back({n, t_int()});
        Mode pm = mode == Mode::U ? (coin(0.5) ? Mode::T : Mode::U) : mode;
        int shape = pick(3);
        if (shape >= 1 && cfg.arrays)
            def.params.push_back(
                {fresh("p"), t_ptr(t_array(cfg.nt_arrays && coin(0.4), Bound::lit(0), Bound::of(n), t_int()), pm)});
        if (shape == 2) def.params.push_back({fresh("q"), t_ptr(t_int(), pm)});
        Scope s;
        for (auto& [x, t] : def.params) s.vars.push_back({x, t});
        in_fun = true;
        t_only = mode == Mode::T;
        def.body = gen(s, mode == Mode::U ? Mode::U : Mode::C, t_int(), std::min(cfg.max_depth, 4));
        in_fun = false;
        t_only = false;
        int64_t& next = region == Mode::C ? next_fc : next_fu;
        Fn f{next++, region, def, t_ptr(fun_type_of(def), mode)};
        prog.funs.push_back(FunEntry{f.addr, region, def});
        fns.push_back(std::move(f));
    }

    int64_t next_fc = 1, next_fu = 1;
};

void count_forms(const ExprP& e, std::map<std::string, size_t>& out) {
    static const char* names[] = {"lit",  "var",    "add", "cast", "dyncast", "ret",  "strlen",   "malloc",
                                  "deref", "assign", "let", "if",   "call",    "unchecked", "checked"};
    out[names[static_cast<int>(e->kind)]]++;
    for (auto& k : e->kids) count_forms(k, out);
}

}  // namespace

std::optional<Program> gen_program(const GenConfig& cfg, uint64_t index) {
    uint64_t seed = case_seed(cfg.seed, index);
    for (int attempt = 0; attempt < cfg.retries; ++attempt) {
        Gen g(cfg, seed + static_cast<uint64_t>(attempt) * 0x9e3779b97f4a7c15ULL);
        Program p;
        try {
            p = g.program();
            check_program(p);
        } catch (const Retry&) {
            continue;
        } catch (const TypeError&) {
            continue;
        }
        return p;
    }
    return std::nullopt;
}

std::map<std::string, size_t> form_counts(const Program& p) {
    std::map<std::string, size_t> out;
    for (auto& f : p.funs) count_forms(f.def.body, out);
    count_forms(p.main, out);
    return out;
}

}  // namespace chkbox
