#include "chkbox/machine.hpp"

#include <algorithm>

namespace chkbox {

const char* outcome_name(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::Value: return "value";
        case OutcomeKind::Null: return "null";
        case OutcomeKind::Bounds: return "bounds";
        case OutcomeKind::Stuck: return "stuck";
        case OutcomeKind::OutOfFuel: return "out-of-fuel";
    }
    return "?";
}

TypeP close_type(const Stack& stack, const TypeP& t) {
    std::map<std::string, Bound> sigma;
    for (auto& x : type_free_vars(t)) {
        auto it = stack.find(x);
        if (it != stack.end() && it->second.type->is_int()) sigma[x] = Bound::lit(it->second.n);
    }
    return subst_type(t, sigma);
}

// ---- decomposition ----

namespace {

const Value* lookup(const Stack& s, const std::string& x) {
    auto it = s.find(x);
    return it == s.end() ? nullptr : &it->second;
}

// S-IfNTNotC premises for a guard Deref(Var x).
bool nt_widen_applies(const Config& cfg, const ExprP& guard) {
    if (guard->kind != ExprKind::Deref || guard->kids[0]->kind != ExprKind::Var) return false;
    const Value* v = lookup(cfg.stack, guard->kids[0]->x);
    if (!v || !is_nt_array_ptr(v->type) || v->type->mode != Mode::C || v->n == 0) return false;
    const TypeP& a = v->type->pointee;
    if (!a->lo.is_lit() || !a->hi.is_lit()) return false;
    if (a->lo.off > 0 || a->hi.off < 0) return false;
    const Value* cell = cfg.heap.get(Mode::C, v->n);
    return cell && cell->n != 0;
}

}  // namespace

std::optional<Decomp> decompose(const Config& cfg) {
    if (cfg.expr->is_value()) return std::nullopt;
    Decomp d;
    ExprP e = cfg.expr;
    for (;;) {
        int next = -1;
        switch (e->kind) {
            case ExprKind::Add:
            case ExprKind::Assign:
            case ExprKind::Call:
                for (size_t i = 0; i < e->kids.size(); ++i)
                    if (!e->kids[i]->is_value()) {
                        next = static_cast<int>(i);
                        break;
                    }
                break;
            case ExprKind::If:
                if (nt_widen_applies(cfg, e->kids[0])) break;
                if (!e->kids[0]->is_value()) next = 0;
                break;
            case ExprKind::Cast:
            case ExprKind::DynCast:
            case ExprKind::Deref:
            case ExprKind::Let:
            case ExprKind::Ret:
            case ExprKind::Checked:
            case ExprKind::Unchecked:
                if (!e->kids[0]->is_value()) next = 0;
                break;
            default: break;
        }
        if (next < 0) break;
        d.path.push_back({e, static_cast<size_t>(next)});
        e = e->kids[static_cast<size_t>(next)];
    }
    d.redex = e;
    d.mode = context_mode(d.path);
    return d;
}

Mode context_mode(const std::vector<std::pair<ExprP, size_t>>& path) {
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        if (it->first->kind == ExprKind::Checked) return Mode::C;
        if (it->first->kind == ExprKind::Unchecked) return Mode::U;
    }
    return Mode::C;
}

ExprP plug(const Decomp& d, ExprP filler) {
    ExprP cur = std::move(filler);
    for (auto it = d.path.rbegin(); it != d.path.rend(); ++it) {
        auto copy = std::make_shared<Expr>(*it->first);
        copy->kids[it->second] = cur;
        cur = copy;
    }
    return cur;
}

// ---- single rules ----

namespace {

RedexResult ok(ExprP e, std::string rule) { return {RedexKind::Expr, std::move(e), std::move(rule), {}}; }
RedexResult fail_null(std::string rule) { return {RedexKind::Null, nullptr, std::move(rule), {}}; }
RedexResult fail_bounds(std::string rule) { return {RedexKind::Bounds, nullptr, std::move(rule), {}}; }
RedexResult no_rule(std::string why) { return {RedexKind::NoRule, nullptr, "", std::move(why)}; }

std::string suffix(Mode xi) { return xi == Mode::C ? "C" : xi == Mode::T ? "T" : "U"; }

struct ArrayBounds {
    int64_t lo = 0, hi = 0;
};

std::optional<ArrayBounds> literal_bounds(const TypeP& arr) {
    if (!arr->lo.is_lit() || !arr->hi.is_lit()) return std::nullopt;
    return ArrayBounds{arr->lo.off, arr->hi.off};
}

// Tainted read verification: the cell must be valid at mode u.
bool verify_cell(const Heap& h, const FunStore& funs, const Value& cell, const TypeP& t) {
    return const_valid(h, funs, Mode::U, cell.n, t);
}

RedexResult deref(Config& cfg, const FunStore& funs, const Value& p) {
    const TypeP& t = p.type;
    if (!t->is_ptr()) return no_rule("deref of non-pointer");
    Mode xi = t->mode;
    const TypeP& w = t->pointee;
    if (w->is_fun()) return no_rule("deref of function pointer");
    TypeP res = w;
    std::string base = "S-Def";
    if (w->is_array()) {
        auto b = literal_bounds(w);
        if (!b) return no_rule("open array bounds");
        bool in = w->nt ? (b->lo <= 0 && 0 <= b->hi) : (b->lo <= 0 && 0 < b->hi);
        if (!in) return fail_bounds(w->nt ? "S-DefNTArrayBound" : "S-DefArrayBound");
        res = w->elem;
        base = "S-DefArray";
    }
    if (p.n == 0) return fail_null("S-DefNull");
    const Value* cell = cfg.heap.get(region_of(xi), p.n);
    if (!cell) {
        if (xi == Mode::C) return no_rule("undefined checked heap cell");
        return fail_bounds(base + suffix(xi));
    }
    if (xi == Mode::T && !verify_cell(cfg.heap, funs, *cell, res)) return fail_bounds(base + "T");
    return ok(e_lit(cell->n, res), base + suffix(xi));
}

RedexResult assign(Config& cfg, const FunStore& funs, const Value& p, const Value& v) {
    const TypeP& t = p.type;
    if (!t->is_ptr()) return no_rule("assign through non-pointer");
    Mode xi = t->mode;
    const TypeP& w = t->pointee;
    if (w->is_fun()) return no_rule("assign through function pointer");
    TypeP res = w;
    std::string base = "S-Assign";
    if (w->is_array()) {
        auto b = literal_bounds(w);
        if (!b) return no_rule("open array bounds");
        if (!(b->lo <= 0 && 0 < b->hi)) return fail_bounds("S-AssignArrBound");
        res = w->elem;
        base = "S-AssignArr";
    }
    if (p.n == 0) return fail_null("S-AssignNull");
    Mode r = region_of(xi);
    const Value* cell = cfg.heap.get(r, p.n);
    if (!cell) {
        if (xi == Mode::C) return no_rule("undefined checked heap cell");
        return fail_bounds(base + suffix(xi));
    }
    if (xi == Mode::T && !verify_cell(cfg.heap, funs, *cell, res)) return fail_bounds(base + "T");
    TypeP stored = cell->type;
    cfg.heap.put(r, p.n, Value{v.n, stored});
    return ok(e_lit(v.n, res), base + suffix(xi));
}

RedexResult add(const Value& a, const Value& b) {
    if (!b.type->is_int()) return no_rule("add with non-int right operand");
    if (a.type->is_int()) return ok(e_lit(a.n + b.n, t_int()), "S-Add");
    if (!is_array_ptr(a.type)) return no_rule("arithmetic on non-array pointer");
    if (a.n == 0) return fail_null("S-AddArrNull");
    const TypeP& w = a.type->pointee;
    TypeP shifted = t_array(w->nt, w->lo.plus(-b.n), w->hi.plus(-b.n), w->elem);
    return ok(e_lit(a.n + b.n, t_ptr(shifted, a.type->mode)), "S-AddArr");
}

RedexResult malloc_(Config& cfg, Mode xi, const TypeP& omega) {
    TypeP w = close_type(cfg.stack, omega);
    if (w->is_fun()) return no_rule("malloc of function type");
    std::vector<Value> block;
    if (w->is_array()) {
        auto b = literal_bounds(w);
        if (!b) return no_rule("open array bounds");
        if (b->lo != 0 || b->hi <= 0) return fail_bounds("S-MallocBound");
        int64_t n = size_of(w);
        block.assign(static_cast<size_t>(n), Value{0, w->elem});
    } else {
        block.push_back(Value{0, w});
    }
    int64_t base = cfg.heap.alloc(region_of(xi), block);
    return ok(e_lit(base, t_ptr(w, xi)), "S-Malloc");
}

RedexResult dyncast(const Config& cfg, const TypeP& target, const Value& v) {
    TypeP dst = close_type(cfg.stack, target);
    const TypeP& src = v.type;
    if (is_array_ptr(src) && dst->is_ptr() && v.n != 0) {
        auto sb = literal_bounds(src->pointee);
        if (!sb) return no_rule("open array bounds");
        if (dst->pointee->is_array()) {
            auto db = literal_bounds(dst->pointee);
            if (!db) return no_rule("open array bounds");
            if (!(sb->lo <= db->lo && db->hi <= sb->hi)) return fail_bounds("S-DynCastBound");
        } else if (!(sb->lo <= 0 && 1 <= sb->hi)) {
            return fail_bounds("S-DynCastBound");
        }
    }
    return ok(e_lit(v.n, dst), "S-DynCast");
}

RedexResult strlen_(Config& cfg, const std::string& x) {
    auto it = cfg.stack.find(x);
    if (it == cfg.stack.end()) return no_rule("unbound variable " + x);
    Value& v = it->second;
    if (!is_nt_array_ptr(v.type)) return no_rule("strlen of non-NT pointer");
    const TypeP& w = v.type->pointee;
    auto b = literal_bounds(w);
    if (!b) return no_rule("open array bounds");
    if (v.n == 0) return fail_null("S-StrlenNull");
    if (!(b->lo <= 0 && 0 <= b->hi)) return fail_bounds("S-StrlenBound");
    Mode r = region_of(v.type->mode);
    int64_t k = 0;
    for (;; ++k) {
        const Value* c = cfg.heap.get(r, v.n + k);
        if (!c) return fail_bounds("S-StrlenBound");
        if (c->n == 0) break;
    }
    if (k > b->hi) v.type = t_ptr(t_array(true, w->lo, Bound::lit(k), w->elem), v.type->mode);
    return ok(e_lit(k, t_int()), "S-Strlen");
}

RedexResult call(Config& cfg, const FunStore& funs, const ExprP& redex) {
    const ExprP& fe = redex->kids[0];
    if (!is_fun_ptr(fe->type)) return no_rule("call of non-function pointer");
    Mode xi = fe->type->mode;
    std::string rule = "S-Fun" + suffix(xi);
    if (fe->n == 0) return fail_null("S-FunNull");
    const FunDef* f = funs.get(region_of(xi), fe->n);
    size_t nargs = redex->kids.size() - 1;
    if (xi == Mode::C) {
        if (!f || f->mode != Mode::C) return no_rule("no checked function at address");
        if (f->params.size() != nargs) return no_rule("arity mismatch");
    } else if (xi == Mode::T) {
        if (!const_valid(cfg.heap, funs, Mode::U, fe->n, fe->type)) return fail_bounds(rule);
        if (!f || f->params.size() != nargs) return fail_bounds(rule);
    } else {
        if (!f || f->mode == Mode::C || f->params.size() != nargs) return fail_bounds(rule);
    }
    std::map<std::string, Bound> sigma;
    for (size_t i = 0; i < nargs; ++i)
        if (f->params[i].second->is_int()) sigma[f->params[i].first] = Bound::lit(redex->kids[i + 1]->n);
    ExprP body = e_cast(subst_type(f->ret, sigma), f->body);
    for (size_t i = nargs; i-- > 0;) {
        auto& [x, t] = f->params[i];
        body = e_let(x, e_lit(redex->kids[i + 1]->n, subst_type(t, sigma)), body);
    }
    (void)cfg;
    return ok(body, rule);
}

}  // namespace

RedexResult compute_step(Config& cfg, const FunStore& funs, const ExprP& e) {
    auto val = [&](size_t i) { return Value{e->kids[i]->n, close_type(cfg.stack, e->kids[i]->type)}; };
    switch (e->kind) {
        case ExprKind::Lit: return no_rule("value");
        case ExprKind::Var: {
            const Value* v = lookup(cfg.stack, e->x);
            if (!v) return no_rule("unbound variable " + e->x);
            return ok(e_value(*v), "S-Var");
        }
        case ExprKind::Add: return add(val(0), val(1));
        case ExprKind::Cast: return ok(e_lit(e->kids[0]->n, close_type(cfg.stack, e->type)), "S-Cast");
        case ExprKind::DynCast: return dyncast(cfg, e->type, val(0));
        case ExprKind::Deref: return deref(cfg, funs, val(0));
        case ExprKind::Assign: return assign(cfg, funs, val(0), val(1));
        case ExprKind::Malloc: return malloc_(cfg, e->mode, e->type);
        case ExprKind::Strlen: return strlen_(cfg, e->x);
        case ExprKind::Let: {
            std::optional<Value> old;
            if (const Value* v = lookup(cfg.stack, e->x)) old = *v;
            cfg.stack[e->x] = val(0);
            return ok(e_ret(e->x, old, e->kids[1]), "S-Let");
        }
        case ExprKind::Ret: {
            TypeP t = e->kids[0]->type;
            if (const Value* inner = lookup(cfg.stack, e->x); inner && inner->type->is_int())
                t = subst_type(t, {{e->x, Bound::lit(inner->n)}});
            if (e->saved)
                cfg.stack[e->x] = *e->saved;
            else
                cfg.stack.erase(e->x);
            return ok(e_lit(e->kids[0]->n, t), "S-Ret");
        }
        case ExprKind::If: {
            const ExprP& g = e->kids[0];
            if (!g->is_value()) {
                // S-IfNTNotC: decompose only selects this shape when its premises hold.
                Value& x = cfg.stack[g->kids[0]->x];
                const TypeP& w = x.type->pointee;
                if (w->hi.off < 1) x.type = t_ptr(t_array(true, w->lo, Bound::lit(1), w->elem), Mode::C);
                return ok(e->kids[1], "S-IfNTNotC");
            }
            return g->n != 0 ? ok(e->kids[1], "S-IfT") : ok(e->kids[2], "S-IfF");
        }
        case ExprKind::Call: return call(cfg, funs, e);
        case ExprKind::Unchecked: return ok(e->kids[0], "S-Unchecked");
        case ExprKind::Checked: return ok(e->kids[0], "S-Checked");
    }
    return no_rule("unknown expression");
}

// ---- machine ----

Step step(const Config& cfg, const FunStore& funs, FaultSource* faults) {
    Step s;
    auto d = decompose(cfg);
    if (!d) {
        s.kind = StepKind::Value;
        return s;
    }
    s.mode = d->mode;
    s.redex = d->redex;
    s.next = cfg;
    if (d->mode == Mode::U && faults && d->redex->kind != ExprKind::Ret && faults->fire()) {
        TypeEnv g;
        PredEnv th;
        for (auto& [x, v] : cfg.stack) {
            g[x] = v.type;
            if (v.type->is_int()) th[x] = Pred::equals(Bound::lit(v.n));
        }
        TcContext ctx{&cfg.heap, &funs, nullptr};
        try {
            TypeP t = close_type(cfg.stack, typecheck(g, th, Mode::U, d->redex, ctx));
            s.kind = StepKind::Fault;
            s.rule = "Crash";
            s.next.expr = plug(*d, e_lit(0, t));
            return s;
        } catch (const TypeError&) {
            // ill-typed redex: fall through to the ordinary rules
        }
    }
    RedexResult r = compute_step(s.next, funs, d->redex);
    s.rule = r.rule;
    switch (r.kind) {
        case RedexKind::Expr:
            s.kind = StepKind::Stepped;
            s.next.expr = plug(*d, r.expr);
            break;
        case RedexKind::Null: s.kind = StepKind::Null; break;
        case RedexKind::Bounds: s.kind = StepKind::Bounds; break;
        case RedexKind::NoRule:
            s.kind = StepKind::Stuck;
            s.detail = r.detail;
            break;
    }
    return s;
}

Config initial_config(const Program& p) { return Config{{}, heap_of(p), p.main}; }

Outcome run(Config cfg, const FunStore& funs, size_t fuel, FaultPolicy policy, bool record_trace) {
    FaultSource faults(policy);
    Outcome out;
    for (size_t i = 0;; ++i) {
        if (cfg.expr->is_value()) {
            out.kind = OutcomeKind::Value;
            out.value = Value{cfg.expr->n, cfg.expr->type};
            break;
        }
        if (i >= fuel) {
            out.kind = OutcomeKind::OutOfFuel;
            break;
        }
        Step s = step(cfg, funs, &faults);
        if (record_trace) out.trace.push_back({i, s.mode, s.rule.empty() ? "stuck" : s.rule, s.redex});
        ++out.steps;
        if (s.kind == StepKind::Stepped || s.kind == StepKind::Fault) {
            cfg = std::move(s.next);
            continue;
        }
        if (s.kind == StepKind::Null) out.kind = OutcomeKind::Null;
        if (s.kind == StepKind::Bounds) out.kind = OutcomeKind::Bounds;
        if (s.kind == StepKind::Stuck) {
            out.kind = OutcomeKind::Stuck;
            out.detail = s.detail;
        }
        break;
    }
    out.final_cfg = std::move(cfg);
    return out;
}

Outcome eval(const Program& p, size_t fuel, FaultPolicy policy, bool record_trace) {
    return run(initial_config(p), funs_of(p), fuel, policy, record_trace);
}

// ---- runtime typing ----

RuntimeView runtime_view(const Config& cfg) {
    RuntimeView rv;
    std::vector<const Expr*> rets;
    if (auto d = decompose(cfg)) {
        for (auto& [e, i] : d->path)
            if (e->kind == ExprKind::Ret) rets.push_back(e.get());
        if (d->redex->kind == ExprKind::Ret) rets.push_back(d->redex.get());
    }
    for (size_t i = 0; i < rets.size(); ++i) {
        const Expr* r = rets[i];
        // x inside r is whatever the next inner ret on x saved, else the live stack
        std::optional<Value> inner;
        size_t j = i + 1;
        while (j < rets.size() && rets[j]->x != r->x) ++j;
        if (j < rets.size()) {
            inner = rets[j]->saved;
        } else if (auto it = cfg.stack.find(r->x); it != cfg.stack.end()) {
            inner = it->second;
        }
        if (inner) rv.views[r] = *inner;
    }
    Stack top = cfg.stack;
    for (size_t i = rets.size(); i-- > 0;) {
        if (rets[i]->saved)
            top[rets[i]->x] = *rets[i]->saved;
        else
            top.erase(rets[i]->x);
    }
    for (auto& [x, v] : top) {
        rv.gamma[x] = v.type;
        if (v.type->is_int()) rv.theta[x] = Pred::equals(Bound::lit(v.n));
    }
    return rv;
}

TypeP type_of_config(const Config& cfg, const FunStore& funs) {
    RuntimeView rv = runtime_view(cfg);
    TcContext ctx{&cfg.heap, &funs, &rv.views};
    return typecheck(rv.gamma, rv.theta, Mode::C, cfg.expr, ctx);
}

}  // namespace chkbox
