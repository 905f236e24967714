#include "chkbox/lattice.hpp"

namespace chkbox {

bool mode_le(Mode a, Mode b) { return a == Mode::T || a == b; }

Mode mode_meet(Mode a, Mode b) {
    if (a == Mode::U || b == Mode::U) return Mode::U;
    if (a == b) return a;
    // c and t in either order
    return Mode::U;
}

namespace {

int eq_budget(const PredEnv& theta) {
    int n = 0;
    for (auto& [x, p] : theta)
        if (!p.ge0) ++n;
    return n;
}

const Pred* lookup(const PredEnv& theta, const std::string& x) {
    auto it = theta.find(x);
    return it == theta.end() ? nullptr : &it->second;
}

bool le(const PredEnv& theta, const Bound& a, const Bound& b, int fuel) {
    if (a.var == b.var && a.off <= b.off) return true;
    if (a.is_lit() && !b.is_lit()) {
        const Pred* p = lookup(theta, b.var);
        if (p && p->ge0 && a.off <= b.off) return true;
    }
    if (fuel <= 0) return false;
    if (!a.is_lit()) {
        const Pred* p = lookup(theta, a.var);
        if (p && !p->ge0 && le(theta, p->eq.plus(a.off), b, fuel - 1)) return true;
    }
    if (!b.is_lit()) {
        const Pred* p = lookup(theta, b.var);
        if (p && !p->ge0 && le(theta, a, p->eq.plus(b.off), fuel - 1)) return true;
    }
    return false;
}

}  // namespace

bool bound_le(const PredEnv& theta, const Bound& a, const Bound& b) {
    return le(theta, a, b, eq_budget(theta));
}

bool bound_eq(const PredEnv& theta, const Bound& a, const Bound& b) {
    return bound_le(theta, a, b) && bound_le(theta, b, a);
}

namespace {

// Both funs renamed to one fresh binder list so bodies compare directly.
std::pair<TypeP, TypeP> align_funs(const TypeP& a, const TypeP& b) {
    std::vector<std::string> fresh;
    for (auto& x : a->binders) fresh.push_back(fresh_name(x));
    return {rename_binders(a, fresh), rename_binders(b, fresh)};
}

PredEnv without(const PredEnv& theta, const std::vector<std::string>& xs) {
    PredEnv out = theta;
    for (auto& x : xs) out.erase(x);
    return out;
}

bool same_binders(const TypeP& a, const TypeP& b) { return a->binders.size() == b->binders.size(); }

}  // namespace

bool type_eq(const PredEnv& theta, const TypeP& a, const TypeP& b) {
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case TypeKind::Int: return true;
        case TypeKind::Ptr: return a->mode == b->mode && type_eq(theta, a->pointee, b->pointee);
        case TypeKind::Array:
            return a->nt == b->nt && bound_eq(theta, a->lo, b->lo) && bound_eq(theta, a->hi, b->hi) &&
                   type_eq(theta, a->elem, b->elem);
        case TypeKind::Fun: {
            if (!same_binders(a, b) || a->params.size() != b->params.size()) return false;
            auto [fa, fb] = align_funs(a, b);
            PredEnv th = without(theta, fa->binders);
            for (size_t i = 0; i < fa->params.size(); ++i)
                if (!type_eq(th, fa->params[i], fb->params[i])) return false;
            return type_eq(th, fa->ret, fb->ret);
        }
    }
    return false;
}

namespace {

// Pointee relation for ptr w1 m <= ptr w2 m, closed so that the
// pointer relation is transitive on literal bounds.
bool pointee_sub(const PredEnv& theta, const TypeP& a, const TypeP& b) {
    if (type_eq(theta, a, b)) return true;
    Bound zero = Bound::lit(0), one = Bound::lit(1);
    if (a->is_word() && b->is_array() && !b->nt)
        return type_eq(theta, a, b->elem) && bound_le(theta, zero, b->lo) && bound_le(theta, b->hi, one);
    if (a->is_array() && b->is_word())
        return type_eq(theta, a->elem, b) && bound_le(theta, a->lo, zero) && bound_le(theta, one, a->hi);
    if (a->is_array() && b->is_array()) {
        if (!a->nt && b->nt) return false;
        return type_eq(theta, a->elem, b->elem) && bound_le(theta, a->lo, b->lo) && bound_le(theta, b->hi, a->hi);
    }
    if (a->is_fun() && b->is_fun()) {
        if (!same_binders(a, b) || a->params.size() != b->params.size()) return false;
        auto [fa, fb] = align_funs(a, b);
        PredEnv th = without(theta, fa->binders);
        for (size_t i = 0; i < fa->params.size(); ++i)
            if (!subtype(th, fb->params[i], fa->params[i])) return false;
        return subtype(th, fa->ret, fb->ret);
    }
    return false;
}

}  // namespace

bool subtype(const PredEnv& theta, const TypeP& a, const TypeP& b) {
    if (a->is_int() || b->is_int()) return a->is_int() && b->is_int();
    if (!a->is_ptr() || !b->is_ptr()) return type_eq(theta, a, b);
    bool modes_ok = a->mode == b->mode || (a->mode == Mode::T && b->mode == Mode::U);
    return modes_ok && pointee_sub(theta, a->pointee, b->pointee);
}

bool wf_nested(Mode m, const TypeP& t) {
    switch (t->kind) {
        case TypeKind::Int: return true;
        case TypeKind::Array: return wf_nested(m, t->elem);
        case TypeKind::Fun: {
            if (!type_free_vars(t).empty()) return false;
            for (auto& p : t->params)
                if (!wf_nested(m, p)) return false;
            return wf_nested(m, t->ret);
        }
        case TypeKind::Ptr: {
            if (!mode_le(t->mode, m)) return false;
            Mode inner = mode_meet(t->mode, m);
            const TypeP& w = t->pointee;
            if (w->is_fun()) {
                // free variables of a fun type are those not covered by its binders
                if (!type_free_vars(w).empty()) return false;
                for (auto& p : w->params)
                    if (!wf_nested(inner, p)) return false;
                return wf_nested(inner, w->ret);
            }
            return wf_nested(inner, w);
        }
    }
    return false;
}

namespace {

bool bound_ok(const std::set<std::string>& vars, const Bound& b) { return b.is_lit() || vars.count(b.var); }

}  // namespace

bool wf_bounds(const std::set<std::string>& int_vars, const TypeP& t) {
    switch (t->kind) {
        case TypeKind::Int: return true;
        case TypeKind::Ptr: return wf_bounds(int_vars, t->pointee);
        case TypeKind::Array:
            return bound_ok(int_vars, t->lo) && bound_ok(int_vars, t->hi) && wf_bounds(int_vars, t->elem);
        case TypeKind::Fun: {
            auto inner = int_vars;
            inner.insert(t->binders.begin(), t->binders.end());
            for (auto& p : t->params)
                if (!wf_bounds(inner, p)) return false;
            return wf_bounds(inner, t->ret);
        }
    }
    return false;
}

}  // namespace chkbox
