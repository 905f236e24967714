#include "chkbox/compiler.hpp"

#include <functional>

namespace chkbox {

using namespace corec;

std::string shadow_lo(const std::string& x) { return x + "#lo"; }
std::string shadow_hi(const std::string& x) { return x + "#hi"; }
bool is_temp_name(const std::string& x) { return x.rfind("t#", 0) == 0; }

std::optional<Mode> lower_region(Mode context, Mode pointer) {
    if ((context == Mode::C && pointer == Mode::U) || (context == Mode::U && pointer == Mode::C)) return std::nullopt;
    return mode_meet(pointer, context) == Mode::C ? Mode::C : Mode::U;
}

namespace {

CExprP bound_atom(const Bound& b) {
    if (b.is_lit()) return c_lit(b.off);
    if (b.off == 0) return c_var(b.var);
    return c_add(c_var(b.var), c_lit(b.off));
}

ShapeP shape_of(const TypeP& t) {
    if (t->is_int()) return s_int();
    if (!t->is_ptr()) return s_any();
    if (t->mode == Mode::C) return s_cptr();
    if (t->mode == Mode::U) return s_uptr();
    const TypeP& w = t->pointee;
    if (w->is_fun()) return s_tfun(w->params.size());
    if (w->is_array()) return s_tarray(w->nt, bound_atom(w->lo), bound_atom(w->hi), shape_of(w->elem));
    return s_tword(shape_of(w));
}

struct Env {
    TypeEnv g;
    PredEnv th;
};

// A compiled operand: an atom plus, for array pointers, atoms for its bounds.
struct Operand {
    CExprP atom;
    CExprP lo, hi;
    TypeP type;
};

using Kont = std::function<CExprP(const Operand&)>;

struct Compiler {
    const TcContext& ctx;
    int next = 0;

    std::string fresh() { return "t#" + std::to_string(next++); }

    TypeP type_of(const Env& env, Mode m, const ExprP& e) { return typecheck(env.g, env.th, m, e, ctx); }

    Mode region(Mode m, Mode xi) {
        auto r = lower_region(m, xi);
        if (!r)
            throw CompileError(std::string("no lowering for a ") + mode_name(xi) + " pointer in a " + mode_name(m) +
                               " context");
        return *r;
    }

    // Bounds of the value produced by e, for array pointer types.
    static std::pair<CExprP, CExprP> bounds_of(const ExprP& e, const TypeP& t) {
        if (e->kind == ExprKind::Var) return {c_var(shadow_lo(e->x)), c_var(shadow_hi(e->x))};
        const TypeP& w = (e->kind == ExprKind::Lit ? e->type : t)->pointee;
        return {bound_atom(w->lo), bound_atom(w->hi)};
    }

    static CExprP with_shadows(const std::string& x, std::pair<CExprP, CExprP> b, CExprP body) {
        return c_let(shadow_lo(x), b.first, c_let(shadow_hi(x), b.second, std::move(body)));
    }

    static bool atomic(const ExprP& e) { return e->kind == ExprKind::Lit || e->kind == ExprKind::Var; }

    // snapshot: copy an array variable and its shadows into a temporary so
    // later operands cannot move the bounds it was read with.
    CExprP operand(const Env& env, Mode m, const ExprP& e, const Kont& k, bool snapshot = false) {
        if (snapshot && e->kind == ExprKind::Var) {
            TypeP t = type_of(env, m, e);
            if (is_array_ptr(t)) {
                std::string tmp = fresh();
                Operand o{c_var(tmp), c_var(shadow_lo(tmp)), c_var(shadow_hi(tmp)), t};
                CExprP body = with_shadows(tmp, bounds_of(e, t), k(o));
                return c_let(tmp, c_var(e->x), body);
            }
        }
        if (atomic(e)) {
            TypeP t = e->kind == ExprKind::Lit ? e->type : type_of(env, m, e);
            Operand o{e->kind == ExprKind::Lit ? c_lit(e->n) : c_var(e->x), nullptr, nullptr, t};
            if (is_array_ptr(t)) std::tie(o.lo, o.hi) = bounds_of(e, t);
            return k(o);
        }
        TypeP t = type_of(env, m, e);
        std::string tmp = fresh();
        CExprP rhs = value(env, m, e);
        Operand o{c_var(tmp), nullptr, nullptr, t};
        if (is_array_ptr(t)) {
            o.lo = c_var(shadow_lo(tmp));
            o.hi = c_var(shadow_hi(tmp));
        }
        CExprP body = k(o);
        if (is_array_ptr(t)) body = with_shadows(tmp, bounds_of(e, t), body);
        return c_let(tmp, rhs, body);
    }

    CExprP operands(const Env& env, Mode m, const std::vector<ExprP>& es, size_t i, std::vector<Operand>& acc,
                    const std::function<CExprP(const std::vector<Operand>&)>& k) {
        if (i == es.size()) return k(acc);
        return operand(env, m, es[i], [&](const Operand& o) {
            acc.push_back(o);
            CExprP r = operands(env, m, es, i + 1, acc, k);
            acc.pop_back();
            return r;
        });
    }

    // Pointer arithmetic under deref/assign: null check on the base, then
    // shifted bounds for the temporary.
    CExprP shifted(const Env& env, Mode m, const ExprP& add, const Kont& k) {
        bool later = !atomic(add->kids[1]);
        return operand(env, m, add->kids[0], [&](const Operand& p) {
            return operand(env, m, add->kids[1], [&](const Operand& i) {
                std::string tmp = fresh();
                Operand o{c_var(tmp), c_var(shadow_lo(tmp)), c_var(shadow_hi(tmp)), p.type};
                CExprP body = k(o);
                body = with_shadows(tmp, {c_sub(p.lo, i.atom), c_sub(p.hi, i.atom)}, body);
                return c_let(tmp, c_assertnn(p.atom, c_add(p.atom, i.atom)), body);
            });
        }, later);
    }

    bool is_indexed(const Env& env, Mode m, const ExprP& p) {
        return p->kind == ExprKind::Add && is_array_ptr(type_of(env, m, p->kids[0]));
    }

    // Checked read (v == nullptr) or write of v through pointer operand p.
    CExprP access(Mode m, const Operand& p, const CExprP& v) {
        const TypeP& t = p.type;
        Mode r = region(m, t->mode);
        const TypeP& w = t->pointee;
        bool arr = w->is_array();
        TypeP elem = arr ? w->elem : w;
        CExprP op = v ? c_assign(r, p.atom, v) : c_deref(r, p.atom);
        Range range = !arr ? Range::Word : (w->nt && !v) ? Range::Nt : Range::Arr;
        if (t->mode == Mode::C) {
            CExprP body = c_assertnn(p.atom, op);
            return arr ? c_assert_bounds(range, p.lo, p.hi, body) : body;
        }
        ShapeP s = t->mode == Mode::T ? shape_of(elem) : s_any();
        return c_verify(r, p.atom, range, p.lo, p.hi, s, op);
    }

    CExprP value(const Env& env, Mode m, const ExprP& e) {
        switch (e->kind) {
            case ExprKind::Lit: return c_lit(e->n);
            case ExprKind::Var: return c_var(e->x);
            case ExprKind::Add:
                return operand(env, m, e->kids[0], [&](const Operand& a) {
                    return operand(env, m, e->kids[1], [&](const Operand& b) { return c_add(a.atom, b.atom); });
                });
            case ExprKind::Cast: return value(env, m, e->kids[0]);
            case ExprKind::DynCast:
                return operand(env, m, e->kids[0], [&](const Operand& p) -> CExprP {
                    const TypeP& d = e->type;
                    if (!is_array_ptr(p.type) || !d->is_ptr()) return p.atom;
                    if (d->pointee->is_array())
                        return c_dyncheck(p.atom, p.lo, p.hi, bound_atom(d->pointee->lo), bound_atom(d->pointee->hi),
                                          p.atom);
                    return c_dyncheck(p.atom, p.lo, p.hi, c_lit(0), c_lit(1), p.atom);
                });
            case ExprKind::Ret: return ret(env, m, e);
            case ExprKind::Strlen: {
                TypeP t = type_of(env, m, e_var(e->x));
                return c_strlen(region(m, t->mode), c_var(e->x), c_var(shadow_lo(e->x)), c_var(shadow_hi(e->x)),
                                shadow_hi(e->x));
            }
            case ExprKind::Malloc: {
                Mode r = region(m, e->mode);
                const TypeP& w = e->type;
                if (w->is_array()) return c_malloc_array(r, w->nt, bound_atom(w->lo), bound_atom(w->hi));
                return c_malloc_word(r);
            }
            case ExprKind::Deref: {
                const ExprP& p = e->kids[0];
                Kont k = [&](const Operand& o) { return access(m, o, nullptr); };
                return is_indexed(env, m, p) ? shifted(env, m, p, k) : operand(env, m, p, k);
            }
            case ExprKind::Assign: {
                const ExprP& p = e->kids[0];
                Kont k = [&](const Operand& o) {
                    return operand(env, m, e->kids[1], [&](const Operand& v) { return access(m, o, v.atom); });
                };
                return is_indexed(env, m, p) ? shifted(env, m, p, k) : operand(env, m, p, k, !atomic(e->kids[1]));
            }
            case ExprKind::Let: return let(env, m, e);
            case ExprKind::If: return if_(env, m, e);
            case ExprKind::Call: return call(env, m, e);
            case ExprKind::Checked: return c_scope(Mode::C, value(env, Mode::C, e->kids[0]));
            case ExprKind::Unchecked: return c_scope(Mode::U, value(env, Mode::U, e->kids[0]));
        }
        throw CompileError("unknown expression");
    }

    CExprP let(const Env& env, Mode m, const ExprP& e) {
        const ExprP& rhs = e->kids[0];
        TypeP t1 = type_of(env, m, rhs);
        CExprP r = value(env, m, rhs);
        Env inner = env;
        inner.g[e->x] = t1;
        inner.th.erase(e->x);
        if (t1->is_int())
            if (auto b = as_bound_expr(rhs); b && b->var != e->x) inner.th[e->x] = Pred::equals(*b);
        CExprP body = value(inner, m, e->kids[1]);
        if (is_array_ptr(t1)) body = with_shadows(e->x, bounds_of(rhs, t1), body);
        return c_let(e->x, r, body);
    }

    CExprP ret(const Env& env, Mode m, const ExprP& e) {
        if (!ctx.views || !ctx.views->count(e.get())) throw CompileError("ret without a stack binding");
        const Value& v = ctx.views->at(e.get());
        Env inner = env;
        inner.g[e->x] = v.type;
        inner.th.erase(e->x);
        if (v.type->is_int()) inner.th[e->x] = Pred::equals(Bound::lit(v.n));
        CExprP body = value(inner, m, e->kids[0]);
        std::optional<int64_t> saved;
        if (e->saved) saved = e->saved->n;
        if (is_array_ptr(v.type)) {
            std::optional<int64_t> lo, hi;
            if (e->saved && is_array_ptr(e->saved->type)) {
                const TypeP& w = e->saved->type->pointee;
                lo = w->lo.off;
                hi = w->hi.off;
            }
            body = c_ret(shadow_lo(e->x), lo, c_ret(shadow_hi(e->x), hi, body));
        }
        return c_ret(e->x, saved, body);
    }

    CExprP if_(const Env& env, Mode m, const ExprP& e) {
        const ExprP& g = e->kids[0];
        if (m == Mode::C && g->kind == ExprKind::Deref && g->kids[0]->kind == ExprKind::Var) {
            TypeP t = type_of(env, m, g->kids[0]);
            if (is_nt_array_ptr(t) && t->mode == Mode::C) {
                // widening guard: a nonzero read at the upper bound extends it by one
                const std::string& x = g->kids[0]->x;
                Operand p{c_var(x), c_var(shadow_lo(x)), c_var(shadow_hi(x)), t};
                std::string tmp = fresh();
                CExprP then = c_widen(shadow_hi(x), c_lit(1), value(env, m, e->kids[1]));
                return c_let(tmp, access(m, p, nullptr), c_if(c_var(tmp), then, value(env, m, e->kids[2])));
            }
        }
        return operand(env, m, g, [&](const Operand& c) {
            return c_if(c.atom, value(env, m, e->kids[1]), value(env, m, e->kids[2]));
        });
    }

    CExprP call(const Env& env, Mode m, const ExprP& e) {
        std::vector<ExprP> all(e->kids.begin(), e->kids.end());
        std::vector<Operand> acc;
        return operands(env, m, all, 0, acc, [&](const std::vector<Operand>& ops) {
            const TypeP& ft = ops[0].type;
            Mode r = region(m, ft->mode);
            std::vector<CExprP> args;
            for (size_t i = 1; i < ops.size(); ++i) args.push_back(ops[i].atom);
            CExprP c = c_call(r, ops[0].atom, args);
            if (ft->mode == Mode::C) return c_assertnn(ops[0].atom, c);
            return c_verify_fun(r, ops[0].atom, args.size(), c);
        });
    }
};

}  // namespace

CompileOutput compile(const TypeEnv& gamma, const PredEnv& theta, const ShadowEnv& rho, Mode m, const ExprP& e,
                      const TcContext& ctx) {
    (void)rho;
    Compiler c{ctx};
    Env env{gamma, theta};
    TypeP t = c.type_of(env, m, e);
    return {c.value(env, m, e), t};
}

// ---- source-level ANF ----

namespace {

struct Anf {
    int next = 0;

    static bool atomic(const ExprP& e) { return e->kind == ExprKind::Lit || e->kind == ExprKind::Var; }

    ExprP atom(const ExprP& e, const std::function<ExprP(ExprP)>& k) {
        if (atomic(e)) return k(e);
        std::string t = "t#" + std::to_string(next++);
        ExprP rhs = value(e);
        return e_let(t, rhs, k(e_var(t)));
    }

    ExprP atoms(const std::vector<ExprP>& es, size_t i, std::vector<ExprP>& acc,
                const std::function<ExprP(const std::vector<ExprP>&)>& k) {
        if (i == es.size()) return k(acc);
        return atom(es[i], [&](ExprP a) {
            acc.push_back(a);
            ExprP r = atoms(es, i + 1, acc, k);
            acc.pop_back();
            return r;
        });
    }

    ExprP index_or_atom(const ExprP& p, const std::function<ExprP(ExprP)>& k) {
        if (p->kind == ExprKind::Add)
            return atom(p->kids[0], [&](ExprP a) { return atom(p->kids[1], [&](ExprP b) { return k(e_add(a, b)); }); });
        return atom(p, k);
    }

    ExprP value(const ExprP& e) {
        switch (e->kind) {
            case ExprKind::Lit:
            case ExprKind::Var:
            case ExprKind::Strlen:
            case ExprKind::Malloc: return e;
            case ExprKind::Add:
                return atom(e->kids[0], [&](ExprP a) { return atom(e->kids[1], [&](ExprP b) { return e_add(a, b); }); });
            case ExprKind::Cast: return atom(e->kids[0], [&](ExprP a) { return e_cast(e->type, a); });
            case ExprKind::DynCast: return atom(e->kids[0], [&](ExprP a) { return e_dyncast(e->type, a); });
            case ExprKind::Ret: return e_ret(e->x, e->saved, value(e->kids[0]));
            case ExprKind::Deref: return index_or_atom(e->kids[0], [&](ExprP p) { return e_deref(p); });
            case ExprKind::Assign:
                return index_or_atom(e->kids[0],
                                     [&](ExprP p) { return atom(e->kids[1], [&](ExprP v) { return e_assign(p, v); }); });
            case ExprKind::Let: return e_let(e->x, value(e->kids[0]), value(e->kids[1]));
            case ExprKind::If: {
                const ExprP& g = e->kids[0];
                if (g->kind == ExprKind::Deref && g->kids[0]->kind == ExprKind::Var)
                    return e_if(g, value(e->kids[1]), value(e->kids[2]));
                return atom(g, [&](ExprP c) { return e_if(c, value(e->kids[1]), value(e->kids[2])); });
            }
            case ExprKind::Call: {
                std::vector<ExprP> acc;
                return atoms(e->kids, 0, acc, [&](const std::vector<ExprP>& xs) {
                    return e_call(xs[0], std::vector<ExprP>(xs.begin() + 1, xs.end()));
                });
            }
            case ExprKind::Checked: return e_checked(e->vars, value(e->kids[0]));
            case ExprKind::Unchecked: return e_unchecked(e->vars, value(e->kids[0]));
        }
        return e;
    }
};

}  // namespace

ExprP anf(const ExprP& e) {
    Anf a;
    return a.value(e);
}

// ---- programs and states ----

CFunStore compile_funs(const FunStore& funs, const Heap& heap) {
    CFunStore out;
    TcContext ctx{&heap, &funs, nullptr};
    for (Mode r : {Mode::C, Mode::U})
        for (auto& [addr, f] : (r == Mode::C ? funs.c : funs.u)) {
            Compiler c{ctx};
            Env env;
            for (auto& [x, t] : f.params) env.g[x] = t;
            Mode m = f.mode == Mode::U ? Mode::U : Mode::C;
            CExprP body = c.value(env, m, f.body);
            CFun cf;
            // bounds come from the parameter types, not from the caller
            for (size_t i = f.params.size(); i-- > 0;) {
                auto& [x, t] = f.params[i];
                if (is_array_ptr(t))
                    body = Compiler::with_shadows(x, {bound_atom(t->pointee->lo), bound_atom(t->pointee->hi)}, body);
            }
            for (auto& [x, t] : f.params) cf.params.push_back(x);
            cf.body = body;
            (r == Mode::C ? out.c : out.u)[addr] = std::move(cf);
        }
    return out;
}

CProgram compile_program(const Program& p) {
    Heap heap = heap_of(p);
    FunStore funs = funs_of(p);
    CProgram out;
    out.funs = compile_funs(funs, heap);
    out.heap = erase_heap(heap);
    TcContext ctx{&heap, &funs, nullptr};
    out.main = compile({}, {}, {}, Mode::C, p.main, ctx).target;
    return out;
}

CConfig compile_config(const Config& cfg, const FunStore& funs) {
    RuntimeView rv = runtime_view(cfg);
    TcContext ctx{&cfg.heap, &funs, &rv.views};
    CConfig out;
    out.heap = erase_heap(cfg.heap);
    out.stack = erase_stack(cfg.stack);
    for (auto& [x, v] : cfg.stack)
        if (is_array_ptr(v.type) && v.type->pointee->lo.is_lit() && v.type->pointee->hi.is_lit()) {
            out.stack[shadow_lo(x)] = v.type->pointee->lo.off;
            out.stack[shadow_hi(x)] = v.type->pointee->hi.off;
        }
    Compiler c{ctx};
    out.expr = c.value(Env{rv.gamma, rv.theta}, Mode::C, cfg.expr);
    return out;
}

}  // namespace chkbox
