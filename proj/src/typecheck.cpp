#include "chkbox/typecheck.hpp"

#include <algorithm>

namespace chkbox {

TypeError::TypeError(std::string rule, std::string path, const std::string& msg)
    : std::runtime_error(rule + " at " + (path.empty() ? std::string("/") : path) + ": " + msg),
      rule(std::move(rule)),
      path(std::move(path)) {}

Heap heap_of(const Program& p) {
    Heap h;
    for (auto& e : p.heap) h.put(e.region, e.addr, e.val);
    return h;
}

FunStore funs_of(const Program& p) {
    FunStore s;
    for (auto& f : p.funs) (f.region == Mode::C ? s.c : s.u)[f.addr] = f.def;
    return s;
}

bool is_checked(const TypeP& t) { return t->is_ptr() && t->mode == Mode::C; }

int64_t size_of(const TypeP& w) {
    switch (w->kind) {
        case TypeKind::Int:
        case TypeKind::Ptr: return 1;
        case TypeKind::Array:
            if (!w->lo.is_lit() || !w->hi.is_lit()) throw std::invalid_argument("size of array with variable bounds");
            return std::max<int64_t>(0, w->hi.off - w->lo.off) + (w->nt ? 1 : 0);
        case TypeKind::Fun: throw std::invalid_argument("size of a function type");
    }
    return 0;
}

bool wf_value_type(Mode m, const TypeP& t) {
    if (!t->is_ptr()) return true;
    Mode inner = mode_meet(t->mode, m);
    const TypeP& w = t->pointee;
    if (w->is_array()) return wf_nested(inner, w->elem);
    if (w->is_fun()) {
        if (!type_free_vars(w).empty()) return false;
        for (auto& p : w->params)
            if (!wf_nested(inner, p)) return false;
        return wf_nested(inner, w->ret);
    }
    return wf_nested(inner, w);
}

std::optional<Bound> as_bound_expr(const ExprP& e) {
    if (e->kind == ExprKind::Lit && e->type->is_int()) return Bound::lit(e->n);
    if (e->kind == ExprKind::Var) return Bound::of(e->x);
    if (e->kind == ExprKind::Add && e->kids[0]->kind == ExprKind::Var && e->kids[1]->kind == ExprKind::Lit &&
        e->kids[1]->type->is_int())
        return Bound::of(e->kids[0]->x, e->kids[1]->n);
    return std::nullopt;
}

static Bound resolve_bound(const PredEnv& theta, Bound b) {
    for (size_t guard = 0; guard <= theta.size() && !b.is_lit(); ++guard) {
        auto it = theta.find(b.var);
        if (it == theta.end() || it->second.ge0) break;
        b = it->second.eq.plus(b.off);
    }
    return b;
}

TypeP resolve_type(const PredEnv& theta, const TypeP& t) {
    std::map<std::string, Bound> sigma;
    for (auto& x : type_free_vars(t)) {
        Bound b = resolve_bound(theta, Bound::of(x));
        if (!(b == Bound::of(x))) sigma[x] = b;
    }
    return subst_type(t, sigma);
}

// ---- constant validity ----

bool const_valid(const PredEnv& theta, const Heap& heap, const FunStore& funs, Scope& scope, Mode m, int64_t n,
                 const TypeP& t) {
    if (t->is_int()) return true;
    if (n == 0) return true;
    Mode xi = t->mode;
    // Non-checked pointers in a checked context, and unchecked pointers in an
    // unchecked context, carry no static obligation.
    if ((m == Mode::C && xi != Mode::C) || (m == Mode::U && xi == Mode::U)) return true;
    for (auto& [a, s] : scope)
        if (a == n && type_equal_syntax(s, t)) return true;
    if (!mode_le(xi, m)) return false;
    const TypeP& w = t->pointee;
    if (w->is_fun()) {
        const FunDef* f = funs.get(region_of(xi), n);
        if (!f || f->mode != xi) return false;
        return subtype(theta, t_ptr(fun_type_of(*f), xi), t);
    }
    TypeP rw = resolve_type(theta, w);
    int64_t lo = 0, hi = 1;
    TypeP elem = rw;
    if (rw->is_array()) {
        if (!rw->lo.is_lit() || !rw->hi.is_lit()) return false;
        lo = rw->lo.off;
        hi = rw->hi.off + (rw->nt ? 1 : 0);
        elem = rw->elem;
    }
    scope.push_back({n, t});
    bool ok = true;
    for (int64_t i = lo; ok && i < hi; ++i) {
        const Value* cell = heap.get(region_of(xi), n + i);
        ok = cell && const_valid(theta, heap, funs, scope, m, cell->n, elem);
    }
    scope.pop_back();
    return ok;
}

bool const_valid(const Heap& heap, const FunStore& funs, Mode m, int64_t n, const TypeP& t) {
    Scope s;
    return const_valid({}, heap, funs, s, m, n, t);
}

// ---- typing ----

namespace {

struct Checker {
    const TcContext& ctx;
    std::vector<std::string> path;

    std::string where() const {
        std::string s;
        for (auto& p : path) s += "/" + p;
        return s;
    }

    [[noreturn]] void fail(const std::string& rule, const std::string& msg) const {
        throw TypeError(rule, where(), msg);
    }

    static std::set<std::string> int_vars(const TypeEnv& g) {
        std::set<std::string> out;
        for (auto& [x, t] : g)
            if (t->is_int()) out.insert(x);
        return out;
    }

    void check_type_wf(const TypeEnv& g, Mode m, const TypeP& t, const char* rule) const {
        if (!wf_bounds(int_vars(g), t)) fail(rule, "type " + print_type(t) + " mentions an unbound bound variable");
        if (!wf_value_type(m, t)) fail(rule, "type " + print_type(t) + " nests pointer modes illegally");
    }

    TypeP sub(const TypeEnv& g, const PredEnv& th, Mode m, const ExprP& e, const std::string& label) {
        path.push_back(label);
        TypeP t = tc(g, th, m, e);
        path.pop_back();
        return t;
    }

    TypeP tc(const TypeEnv& g, const PredEnv& th, Mode m, const ExprP& e) {
        switch (e->kind) {
            case ExprKind::Lit: return lit(g, th, m, e);
            case ExprKind::Var: {
                auto it = g.find(e->x);
                if (it == g.end()) fail("T-Var", "unbound variable " + e->x);
                return it->second;
            }
            case ExprKind::Add: {
                TypeP a = sub(g, th, m, e->kids[0], "0");
                TypeP b = sub(g, th, m, e->kids[1], "1");
                if (!a->is_int() || !b->is_int())
                    fail("T-Add", "operands must be int (pointer arithmetic only under deref/assign)");
                return t_int();
            }
            case ExprKind::Cast: {
                TypeP src = sub(g, th, m, e->kids[0], "0");
                check_type_wf(g, m, e->type, "T-CastPtr");
                if (!subtype(th, src, e->type))
                    fail("T-CastPtr", print_type(src) + " is not a subtype of " + print_type(e->type));
                return e->type;
            }
            case ExprKind::DynCast: return dyncast(g, th, m, e);
            case ExprKind::Ret: return ret(g, th, m, e);
            case ExprKind::Strlen: {
                auto it = g.find(e->x);
                if (it == g.end()) fail("T-Strlen", "unbound variable " + e->x);
                if (!is_nt_array_ptr(it->second)) fail("T-Strlen", e->x + " is not an NT-array pointer");
                if (!mode_le(it->second->mode, m)) fail("T-Strlen", "pointer mode not allowed in this context");
                return t_int();
            }
            case ExprKind::Malloc: {
                if (!mode_le(e->mode, m)) fail("T-Mac", std::string("mode ") + mode_name(e->mode) + " not <= context");
                if (e->type->is_fun()) fail("T-Mac", "cannot allocate a function type");
                TypeP r = t_ptr(e->type, e->mode);
                check_type_wf(g, m, r, "T-Mac");
                return r;
            }
            case ExprKind::Deref: return deref(g, th, m, e);
            case ExprKind::Assign: return assign(g, th, m, e);
            case ExprKind::Let: return let(g, th, m, e);
            case ExprKind::If: {
                sub(g, th, m, e->kids[0], "0");
                TypeP a = sub(g, th, m, e->kids[1], "1");
                TypeP b = sub(g, th, m, e->kids[2], "2");
                if (!type_eq(th, a, b)) fail("T-If", "branches disagree: " + print_type(a) + " vs " + print_type(b));
                return a;
            }
            case ExprKind::Call: return call(g, th, m, e);
            case ExprKind::Unchecked:
            case ExprKind::Checked: return block(g, th, m, e);
        }
        fail("T-?", "unknown expression");
    }

    TypeP lit(const TypeEnv& g, const PredEnv& th, Mode m, const ExprP& e) {
        const TypeP& t = e->type;
        if (m == Mode::U) {
            check_type_wf(g, m, t, "T-ConstU");
            if (is_checked(t)) fail("T-ConstU", "checked literal in unchecked context");
            return t;
        }
        check_type_wf(g, m, t, "T-ConstC");
        if (!ctx.heap || !ctx.funs) fail("T-ConstC", "no heap to validate literal");
        Scope s;
        if (!const_valid(th, *ctx.heap, *ctx.funs, s, Mode::C, e->n, t))
            fail("T-ConstC", "literal " + std::to_string(e->n) + " : " + print_type(t) + " is not valid in the heap");
        return t;
    }

    TypeP dyncast(const TypeEnv& g, const PredEnv& th, Mode m, const ExprP& e) {
        TypeP src = sub(g, th, m, e->kids[0], "0");
        const TypeP& dst = e->type;
        check_type_wf(g, m, dst, "T-DynCast");
        if (subtype(th, src, dst)) return dst;
        bool ok = src->is_ptr() && dst->is_ptr() && src->mode == dst->mode && is_array_ptr(src);
        if (ok) {
            const TypeP& a = src->pointee;
            const TypeP& b = dst->pointee;
            if (b->is_array())
                ok = (a->nt || !b->nt) && type_eq(th, a->elem, b->elem);
            else
                ok = b->is_word() && type_eq(th, a->elem, b);
        }
        if (!ok) fail("T-DynCast", "cannot cast " + print_type(src) + " to " + print_type(dst));
        return dst;
    }

    TypeP ret(const TypeEnv& g, const PredEnv& th, Mode m, const ExprP& e) {
        if (!ctx.views) fail("T-RetInt", "ret outside of a machine state");
        auto it = ctx.views->find(e.get());
        if (it == ctx.views->end()) fail("T-RetInt", "no stack binding for ret " + e->x);
        const Value& v = it->second;
        TypeEnv g2 = g;
        g2[e->x] = v.type;
        PredEnv th2 = th;
        th2.erase(e->x);
        if (v.type->is_int()) th2[e->x] = Pred::equals(Bound::lit(v.n));
        TypeP t = sub(g2, th2, m, e->kids[0], "0");
        if (v.type->is_int() && type_free_vars(t).count(e->x)) t = subst_type(t, {{e->x, Bound::lit(v.n)}});
        return t;
    }

    TypeP deref(const TypeEnv& g, const PredEnv& th, Mode m, const ExprP& e) {
        const ExprP& p = e->kids[0];
        if (p->kind == ExprKind::Add) {
            path.push_back("0");
            TypeP base = sub(g, th, m, p->kids[0], "0");
            if (is_array_ptr(base)) {
                TypeP off = sub(g, th, m, p->kids[1], "1");
                path.pop_back();
                if (!off->is_int()) fail("T-Ind", "offset must be int");
                if (!mode_le(base->mode, m)) fail("T-Ind", "pointer mode not allowed in this context");
                return base->pointee->elem;
            }
            path.pop_back();
        }
        TypeP t = sub(g, th, m, p, "0");
        if (!t->is_ptr()) fail("T-Def", "dereferencing a non-pointer");
        if (!mode_le(t->mode, m))
            fail("T-Def", std::string("pointer mode ") + mode_name(t->mode) + " not <= context " + mode_name(m));
        if (t->pointee->is_fun()) fail("T-Def", "dereferencing a function pointer");
        return t->pointee->is_array() ? t->pointee->elem : t->pointee;
    }

    TypeP assign(const TypeEnv& g, const PredEnv& th, Mode m, const ExprP& e) {
        const ExprP& p = e->kids[0];
        TypeP target;
        const char* rule = "T-Assign";
        if (p->kind == ExprKind::Add) {
            path.push_back("0");
            TypeP base = sub(g, th, m, p->kids[0], "0");
            if (is_array_ptr(base)) {
                TypeP off = sub(g, th, m, p->kids[1], "1");
                path.pop_back();
                rule = "T-IndAssign";
                if (!off->is_int()) fail(rule, "offset must be int");
                if (!mode_le(base->mode, m)) fail(rule, "pointer mode not allowed in this context");
                target = base->pointee->elem;
            } else {
                path.pop_back();
            }
        }
        if (!target) {
            TypeP t = sub(g, th, m, p, "0");
            if (!t->is_ptr()) fail(rule, "assigning through a non-pointer");
            if (t->pointee->is_array()) rule = "T-AssignArr";
            if (!mode_le(t->mode, m))
                fail(rule, std::string("pointer mode ") + mode_name(t->mode) + " not <= context " + mode_name(m));
            if (t->pointee->is_fun()) fail(rule, "assigning through a function pointer");
            target = t->pointee->is_array() ? t->pointee->elem : t->pointee;
        }
        TypeP v = sub(g, th, m, e->kids[1], "1");
        if (!subtype(th, v, target)) fail(rule, print_type(v) + " is not a subtype of " + print_type(target));
        return target;
    }

    TypeP let(const TypeEnv& g, const PredEnv& th, Mode m, const ExprP& e) {
        for (auto& [y, t] : g)
            if (y != e->x && type_free_vars(t).count(e->x))
                fail("T-Let", "binding " + e->x + " would capture a bound in the type of " + y);
        TypeP t1 = sub(g, th, m, e->kids[0], "0");
        TypeEnv g2 = g;
        g2[e->x] = t1;
        PredEnv th2 = th;
        th2.erase(e->x);
        if (t1->is_int()) {
            auto b = as_bound_expr(e->kids[0]);
            if (b && b->var == e->x) b.reset();
            if (b) th2[e->x] = Pred::equals(*b);
            TypeP t2 = sub(g2, th2, m, e->kids[1], "1");
            if (type_free_vars(t2).count(e->x)) {
                if (!b) fail("T-LetInt", "result type depends on " + e->x + " but its definition is not a bound");
                t2 = subst_type(t2, {{e->x, *b}});
            }
            return t2;
        }
        TypeP t2 = sub(g2, th2, m, e->kids[1], "1");
        if (type_free_vars(t2).count(e->x)) fail("T-Let", "result type mentions " + e->x);
        return t2;
    }

    TypeP call(const TypeEnv& g, const PredEnv& th, Mode m, const ExprP& e) {
        TypeP ft = sub(g, th, m, e->kids[0], "0");
        if (!is_fun_ptr(ft)) fail("T-Fun", "callee is not a function pointer");
        if (!mode_le(ft->mode, m)) fail("T-Fun", "function pointer mode not allowed in this context");
        const TypeP& f = ft->pointee;
        size_t nargs = e->kids.size() - 1;
        if (nargs != f->params.size()) fail("T-Fun", "arity mismatch");
        std::vector<TypeP> actual;
        for (size_t i = 0; i < nargs; ++i) actual.push_back(sub(g, th, m, e->kids[i + 1], std::to_string(i + 1)));
        std::map<std::string, Bound> sigma;
        size_t k = 0;
        for (size_t i = 0; i < nargs; ++i) {
            if (!f->params[i]->is_int()) continue;
            auto b = as_bound_expr(e->kids[i + 1]);
            if (!b) fail("T-Fun", "int argument " + std::to_string(i) + " is not a bound expression");
            if (k < f->binders.size()) sigma[f->binders[k]] = *b;
            ++k;
        }
        for (size_t i = 0; i < nargs; ++i) {
            TypeP want = subst_type(f->params[i], sigma);
            if (!subtype(th, actual[i], want))
                fail("T-Fun", "argument " + std::to_string(i) + ": " + print_type(actual[i]) + " is not a subtype of " +
                                  print_type(want));
        }
        return subst_type(f->ret, sigma);
    }

    TypeP block(const TypeEnv& g, const PredEnv& th, Mode m, const ExprP& e) {
        bool unchecked = e->kind == ExprKind::Unchecked;
        const char* rule = unchecked ? "T-Unchecked" : "T-Checked";
        for (auto& x : e->vars) {
            auto it = g.find(x);
            if (it == g.end()) fail(rule, "interface variable " + x + " is unbound");
            if (is_checked(it->second)) fail(rule, "interface variable " + x + " has a checked type");
        }
        for (auto& x : free_vars(e->kids[0]))
            if (std::find(e->vars.begin(), e->vars.end(), x) == e->vars.end())
                fail(rule, "free variable " + x + " is not in the interface");
        TypeP t = sub(g, th, unchecked ? Mode::U : Mode::C, e->kids[0], "0");
        if (is_checked(t)) fail(rule, "block result has a checked type");
        (void)m;
        return t;
    }
};

}  // namespace

TypeP typecheck(const TypeEnv& gamma, const PredEnv& theta, Mode m, const ExprP& e, const TcContext& ctx) {
    Checker c{ctx, {}};
    return c.tc(gamma, theta, m, e);
}

TypeP check_program(const Program& p) {
    Heap heap = heap_of(p);
    FunStore funs = funs_of(p);
    TcContext ctx{&heap, &funs, nullptr};
    for (auto& h : p.heap)
        if (!type_free_vars(h.val.type).empty())
            throw TypeError("Heap", "heap/" + std::to_string(h.addr), "heap cell type must be closed");
    for (auto& f : p.funs) {
        std::string where = std::string("fun/") + mode_name(f.region) + "/" + std::to_string(f.addr);
        if (f.region == Mode::C && f.def.mode != Mode::C)
            throw TypeError("FunStore", where, "checked region holds only mode-c functions");
        if (f.region == Mode::U && f.def.mode == Mode::C)
            throw TypeError("FunStore", where, "unchecked region cannot hold mode-c functions");
        TypeP ft = fun_type_of(f.def);
        std::vector<Mode> modes;
        if (f.def.mode == Mode::T)
            modes = {Mode::C, Mode::U};
        else
            modes = {f.def.mode};
        TypeEnv g;
        for (auto& [x, t] : f.def.params) g[x] = t;
        for (Mode m : modes) {
            if (!wf_nested(m, t_ptr(ft, f.def.mode == Mode::T ? Mode::T : m)))
                throw TypeError("FunStore", where, "signature is not well formed");
            std::set<std::string> ints;
            for (auto& [x, t] : f.def.params)
                if (t->is_int()) ints.insert(x);
            if (!wf_bounds({}, ft)) throw TypeError("FunStore", where, "signature mentions unbound variables");
            TypeP bt;
            try {
                bt = typecheck(g, {}, m, f.def.body, ctx);
            } catch (const TypeError& err) {
                throw TypeError(err.rule, where + err.path, err.what());
            }
            if (!subtype({}, bt, f.def.ret))
                throw TypeError("FunStore", where, "body type " + print_type(bt) + " does not match return type");
        }
    }
    try {
        return typecheck({}, {}, Mode::C, p.main, ctx);
    } catch (const TypeError& err) {
        throw TypeError(err.rule, "main" + err.path, err.what());
    }
}

}  // namespace chkbox
