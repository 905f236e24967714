#include "chkbox/ast.hpp"

#include <atomic>
#include <sstream>

namespace chkbox {

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::C: return "c";
        case Mode::T: return "t";
        case Mode::U: return "u";
    }
    return "?";
}

std::optional<Mode> mode_from_name(const std::string& s) {
    if (s == "c") return Mode::C;
    if (s == "t") return Mode::T;
    if (s == "u") return Mode::U;
    return std::nullopt;
}

std::string print_bound(const Bound& b) {
    if (b.is_lit()) return std::to_string(b.off);
    return "(+ " + b.var + " " + std::to_string(b.off) + ")";
}

// ---- types ----

TypeP t_int() {
    static const TypeP k = std::make_shared<Type>();
    return k;
}

TypeP t_ptr(TypeP pointee, Mode m) {
    auto t = std::make_shared<Type>();
    t->kind = TypeKind::Ptr;
    t->pointee = std::move(pointee);
    t->mode = m;
    return t;
}

TypeP t_array(bool nt, Bound lo, Bound hi, TypeP elem) {
    auto t = std::make_shared<Type>();
    t->kind = TypeKind::Array;
    t->nt = nt;
    t->lo = std::move(lo);
    t->hi = std::move(hi);
    t->elem = std::move(elem);
    return t;
}

TypeP t_fun(std::vector<std::string> binders, std::vector<TypeP> params, TypeP ret) {
    auto t = std::make_shared<Type>();
    t->kind = TypeKind::Fun;
    t->binders = std::move(binders);
    t->params = std::move(params);
    t->ret = std::move(ret);
    return t;
}

bool is_array_ptr(const TypeP& t) { return t && t->is_ptr() && t->pointee->is_array(); }
bool is_nt_array_ptr(const TypeP& t) { return is_array_ptr(t) && t->pointee->nt; }
bool is_fun_ptr(const TypeP& t) { return t && t->is_ptr() && t->pointee->is_fun(); }

bool type_equal_syntax(const TypeP& a, const TypeP& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
        case TypeKind::Int: return true;
        case TypeKind::Ptr: return a->mode == b->mode && type_equal_syntax(a->pointee, b->pointee);
        case TypeKind::Array:
            return a->nt == b->nt && a->lo == b->lo && a->hi == b->hi && type_equal_syntax(a->elem, b->elem);
        case TypeKind::Fun:
            if (a->binders != b->binders || a->params.size() != b->params.size()) return false;
            for (size_t i = 0; i < a->params.size(); ++i)
                if (!type_equal_syntax(a->params[i], b->params[i])) return false;
            return type_equal_syntax(a->ret, b->ret);
    }
    return false;
}

static void collect_fv(const TypeP& t, std::set<std::string>& out) {
    switch (t->kind) {
        case TypeKind::Int: return;
        case TypeKind::Ptr: collect_fv(t->pointee, out); return;
        case TypeKind::Array:
            if (!t->lo.is_lit()) out.insert(t->lo.var);
            if (!t->hi.is_lit()) out.insert(t->hi.var);
            collect_fv(t->elem, out);
            return;
        case TypeKind::Fun: {
            std::set<std::string> inner;
            for (auto& p : t->params) collect_fv(p, inner);
            collect_fv(t->ret, inner);
            for (auto& b : t->binders) inner.erase(b);
            out.insert(inner.begin(), inner.end());
            return;
        }
    }
}

std::set<std::string> type_free_vars(const TypeP& t) {
    std::set<std::string> out;
    collect_fv(t, out);
    return out;
}

std::string fresh_name(const std::string& base) {
    static std::atomic<uint64_t> counter{0};
    return base + "#" + std::to_string(counter.fetch_add(1));
}

static Bound subst_bound(const Bound& b, const std::map<std::string, Bound>& sigma) {
    if (b.is_lit()) return b;
    auto it = sigma.find(b.var);
    if (it == sigma.end()) return b;
    return it->second.plus(b.off);
}

TypeP rename_binders(const TypeP& fun, const std::vector<std::string>& fresh) {
    std::map<std::string, Bound> ren;
    for (size_t i = 0; i < fun->binders.size(); ++i) ren[fun->binders[i]] = Bound::of(fresh[i]);
    std::vector<TypeP> ps;
    for (auto& p : fun->params) ps.push_back(subst_type(p, ren));
    return t_fun(fresh, std::move(ps), subst_type(fun->ret, ren));
}

TypeP subst_type(const TypeP& t, const std::map<std::string, Bound>& sigma) {
    if (sigma.empty()) return t;
    switch (t->kind) {
        case TypeKind::Int: return t;
        case TypeKind::Ptr: {
            auto p = subst_type(t->pointee, sigma);
            return p == t->pointee ? t : t_ptr(p, t->mode);
        }
        case TypeKind::Array: {
            Bound lo = subst_bound(t->lo, sigma), hi = subst_bound(t->hi, sigma);
            auto el = subst_type(t->elem, sigma);
            if (lo == t->lo && hi == t->hi && el == t->elem) return t;
            return t_array(t->nt, lo, hi, el);
        }
        case TypeKind::Fun: {
            auto inner = sigma;
            for (auto& b : t->binders) inner.erase(b);
            if (inner.empty()) return t;
            bool capture = false;
            for (auto& [k, v] : inner)
                for (auto& b : t->binders)
                    if (v.var == b) capture = true;
            TypeP f = t;
            if (capture) {
                std::vector<std::string> fresh;
                for (auto& b : t->binders) fresh.push_back(fresh_name(b));
                f = rename_binders(t, fresh);
            }
            std::vector<TypeP> ps;
            for (auto& p : f->params) ps.push_back(subst_type(p, inner));
            return t_fun(f->binders, std::move(ps), subst_type(f->ret, inner));
        }
    }
    return t;
}

TypeP fun_type_of(const FunDef& f) {
    std::vector<std::string> binders;
    std::vector<TypeP> ps;
    for (auto& [x, t] : f.params) {
        if (t->is_int()) binders.push_back(x);
        ps.push_back(t);
    }
    return t_fun(std::move(binders), std::move(ps), f.ret);
}

// ---- expressions ----

static std::shared_ptr<Expr> mk(ExprKind k, std::vector<ExprP> kids = {}) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->kids = std::move(kids);
    return e;
}

ExprP e_lit(int64_t n, TypeP t) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Lit;
    e->n = n;
    e->type = std::move(t);
    return e;
}

ExprP e_var(std::string x) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Var;
    e->x = std::move(x);
    return e;
}

ExprP e_add(ExprP a, ExprP b) { return mk(ExprKind::Add, {std::move(a), std::move(b)}); }

ExprP e_cast(TypeP t, ExprP e) {
    auto r = std::make_shared<Expr>();
    r->kind = ExprKind::Cast;
    r->type = std::move(t);
    r->kids = {std::move(e)};
    return r;
}

ExprP e_dyncast(TypeP t, ExprP e) {
    auto r = std::make_shared<Expr>();
    r->kind = ExprKind::DynCast;
    r->type = std::move(t);
    r->kids = {std::move(e)};
    return r;
}

ExprP e_ret(std::string x, std::optional<Value> saved, ExprP e) {
    auto r = std::make_shared<Expr>();
    r->kind = ExprKind::Ret;
    r->x = std::move(x);
    r->saved = std::move(saved);
    r->kids = {std::move(e)};
    return r;
}

ExprP e_strlen(std::string x) {
    auto r = std::make_shared<Expr>();
    r->kind = ExprKind::Strlen;
    r->x = std::move(x);
    return r;
}

ExprP e_malloc(Mode m, TypeP omega) {
    auto r = std::make_shared<Expr>();
    r->kind = ExprKind::Malloc;
    r->mode = m;
    r->type = std::move(omega);
    return r;
}

ExprP e_deref(ExprP e) { return mk(ExprKind::Deref, {std::move(e)}); }
ExprP e_assign(ExprP a, ExprP b) { return mk(ExprKind::Assign, {std::move(a), std::move(b)}); }

ExprP e_let(std::string x, ExprP a, ExprP b) {
    auto r = mk(ExprKind::Let, {std::move(a), std::move(b)});
    r->x = std::move(x);
    return r;
}

ExprP e_if(ExprP c, ExprP a, ExprP b) { return mk(ExprKind::If, {std::move(c), std::move(a), std::move(b)}); }

ExprP e_call(ExprP f, std::vector<ExprP> args) {
    std::vector<ExprP> kids{std::move(f)};
    for (auto& a : args) kids.push_back(std::move(a));
    return mk(ExprKind::Call, std::move(kids));
}

ExprP e_unchecked(std::vector<std::string> xs, ExprP e) {
    auto r = mk(ExprKind::Unchecked, {std::move(e)});
    r->vars = std::move(xs);
    return r;
}

ExprP e_checked(std::vector<std::string> xs, ExprP e) {
    auto r = mk(ExprKind::Checked, {std::move(e)});
    r->vars = std::move(xs);
    return r;
}

ExprP e_value(const Value& v) { return e_lit(v.n, v.type); }

bool expr_equal(const ExprP& a, const ExprP& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    if (a->n != b->n || a->x != b->x || a->vars != b->vars || a->kids.size() != b->kids.size()) return false;
    if ((a->type == nullptr) != (b->type == nullptr)) return false;
    if (a->type && !type_equal_syntax(a->type, b->type)) return false;
    if (a->kind == ExprKind::Malloc && a->mode != b->mode) return false;
    if (a->saved.has_value() != b->saved.has_value()) return false;
    if (a->saved && (a->saved->n != b->saved->n || !type_equal_syntax(a->saved->type, b->saved->type)))
        return false;
    for (size_t i = 0; i < a->kids.size(); ++i)
        if (!expr_equal(a->kids[i], b->kids[i])) return false;
    return true;
}

static void fv(const ExprP& e, std::set<std::string>& bound, std::set<std::string>& out) {
    switch (e->kind) {
        case ExprKind::Var:
        case ExprKind::Strlen:
            if (!bound.count(e->x)) out.insert(e->x);
            return;
        case ExprKind::Let: {
            fv(e->kids[0], bound, out);
            bool had = bound.count(e->x);
            bound.insert(e->x);
            fv(e->kids[1], bound, out);
            if (!had) bound.erase(e->x);
            return;
        }
        case ExprKind::Ret: {
            bool had = bound.count(e->x);
            bound.insert(e->x);
            fv(e->kids[0], bound, out);
            if (!had) bound.erase(e->x);
            return;
        }
        default:
            for (auto& k : e->kids) fv(k, bound, out);
    }
}

std::set<std::string> free_vars(const ExprP& e) {
    std::set<std::string> bound, out;
    fv(e, bound, out);
    return out;
}

size_t expr_size(const ExprP& e) {
    size_t n = 1;
    for (auto& k : e->kids) n += expr_size(k);
    return n;
}

bool contains_unchecked(const ExprP& e) {
    if (e->kind == ExprKind::Unchecked) return true;
    for (auto& k : e->kids)
        if (contains_unchecked(k)) return true;
    return false;
}

// ---- printing ----

std::string print_type(const TypeP& t) {
    switch (t->kind) {
        case TypeKind::Int: return "int";
        case TypeKind::Ptr: return "(ptr " + print_type(t->pointee) + " " + mode_name(t->mode) + ")";
        case TypeKind::Array:
            return std::string("(array ") + (t->nt ? "nt " : "") + "(" + print_bound(t->lo) + " " +
                   print_bound(t->hi) + ") " + print_type(t->elem) + ")";
        case TypeKind::Fun: {
            std::string s = "(fun (";
            for (size_t i = 0; i < t->binders.size(); ++i) s += (i ? " " : "") + t->binders[i];
            s += ") (";
            for (size_t i = 0; i < t->params.size(); ++i) s += (i ? " " : "") + print_type(t->params[i]);
            return s + ") " + print_type(t->ret) + ")";
        }
    }
    return "?";
}

static std::string join_vars(const std::vector<std::string>& xs) {
    std::string s = "(";
    for (size_t i = 0; i < xs.size(); ++i) s += (i ? " " : "") + xs[i];
    return s + ")";
}

std::string print_expr(const ExprP& e) {
    auto k = [&](size_t i) { return print_expr(e->kids[i]); };
    switch (e->kind) {
        case ExprKind::Lit: return "(lit " + std::to_string(e->n) + " " + print_type(e->type) + ")";
        case ExprKind::Var: return "(var " + e->x + ")";
        case ExprKind::Add: return "(add " + k(0) + " " + k(1) + ")";
        case ExprKind::Cast: return "(cast " + print_type(e->type) + " " + k(0) + ")";
        case ExprKind::DynCast: return "(dyncast " + print_type(e->type) + " " + k(0) + ")";
        case ExprKind::Ret:
            return "(ret " + e->x + " " + (e->saved ? print_expr(e_value(*e->saved)) : std::string("none")) +
                   " " + k(0) + ")";
        case ExprKind::Strlen: return "(strlen " + e->x + ")";
        case ExprKind::Malloc:
            return std::string("(malloc ") + mode_name(e->mode) + " " + print_type(e->type) + ")";
        case ExprKind::Deref: return "(deref " + k(0) + ")";
        case ExprKind::Assign: return "(assign " + k(0) + " " + k(1) + ")";
        case ExprKind::Let: return "(let " + e->x + " " + k(0) + " " + k(1) + ")";
        case ExprKind::If: return "(if " + k(0) + " " + k(1) + " " + k(2) + ")";
        case ExprKind::Call: {
            std::string s = "(call";
            for (auto& c : e->kids) s += " " + print_expr(c);
            return s + ")";
        }
        case ExprKind::Unchecked: return "(unchecked " + join_vars(e->vars) + " " + k(0) + ")";
        case ExprKind::Checked: return "(checked " + join_vars(e->vars) + " " + k(0) + ")";
    }
    return "?";
}

std::string print_program(const Program& p) {
    std::ostringstream os;
    for (auto& f : p.funs) {
        os << "(fundef (addr " << f.addr << ") (region " << mode_name(f.region) << ") (mode "
           << mode_name(f.def.mode) << ") (ret " << print_type(f.def.ret) << ")\n  (params";
        for (auto& [x, t] : f.def.params) os << " (" << x << " " << print_type(t) << ")";
        os << ")\n  (body " << print_expr(f.def.body) << "))\n";
    }
    if (!p.heap.empty()) {
        os << "(heap";
        for (Mode r : {Mode::C, Mode::U}) {
            bool any = false;
            for (auto& h : p.heap)
                if (h.region == r) any = true;
            if (!any) continue;
            os << "\n  (" << mode_name(r);
            for (auto& h : p.heap)
                if (h.region == r) os << " (" << h.addr << " " << print_expr(e_value(h.val)) << ")";
            os << ")";
        }
        os << ")\n";
    }
    os << "(main " << print_expr(p.main) << ")\n";
    return os.str();
}

// ---- parsing ----

static std::string ident(const SExpr& s) {
    if (!s.is_symbol() || !is_identifier(s.atom)) s.fail("expected identifier");
    return s.atom;
}

static Mode parse_mode(const SExpr& s) {
    if (s.is_atom())
        if (auto m = mode_from_name(s.atom)) return *m;
    s.fail("expected mode c, t or u");
}

static Bound parse_bound(const SExpr& s) {
    if (s.is_int()) return Bound::lit(s.as_int());
    if (s.head_is("+") && s.items.size() == 3) return Bound::of(ident(s.items[1]), s.items[2].as_int());
    s.fail("expected bound: integer or (+ x N)");
}

static void arity(const SExpr& s, size_t n, const char* form) {
    if (s.items.size() != n) s.fail(std::string("wrong number of operands for '") + form + "'");
}

TypeP parse_type(const SExpr& s) {
    if (s.is_atom()) {
        if (s.atom == "int") return t_int();
        s.fail("expected type");
    }
    if (s.head_is("ptr")) {
        arity(s, 3, "ptr");
        return t_ptr(parse_type(s.items[1]), parse_mode(s.items[2]));
    }
    if (s.head_is("array")) {
        size_t i = 1;
        bool nt = false;
        if (s.items.size() == 4 && s.items[1].is_atom() && s.items[1].atom == "nt") {
            nt = true;
            i = 2;
        } else {
            arity(s, 3, "array");
        }
        const SExpr& bp = s.items[i];
        if (!bp.is_list || bp.items.size() != 2) bp.fail("expected bound pair (LB UB)");
        auto elem = parse_type(s.items[i + 1]);
        if (!elem->is_word()) s.items[i + 1].fail("array element must be a word type");
        return t_array(nt, parse_bound(bp.items[0]), parse_bound(bp.items[1]), elem);
    }
    if (s.head_is("fun")) {
        arity(s, 4, "fun");
        if (!s.items[1].is_list) s.items[1].fail("expected binder list");
        if (!s.items[2].is_list) s.items[2].fail("expected parameter type list");
        std::vector<std::string> bs;
        for (auto& b : s.items[1].items) bs.push_back(ident(b));
        std::vector<TypeP> ps;
        for (auto& p : s.items[2].items) {
            auto t = parse_type(p);
            if (!t->is_word()) p.fail("parameter type must be a word type");
            ps.push_back(t);
        }
        auto r = parse_type(s.items[3]);
        if (!r->is_word()) s.items[3].fail("return type must be a word type");
        return t_fun(std::move(bs), std::move(ps), r);
    }
    s.fail("expected type");
}

static TypeP word_type(const SExpr& s) {
    auto t = parse_type(s);
    if (!t->is_word()) s.fail("expected word type (int or ptr)");
    return t;
}

static std::vector<std::string> var_list(const SExpr& s) {
    if (!s.is_list) s.fail("expected variable list");
    std::vector<std::string> xs;
    for (auto& v : s.items) xs.push_back(ident(v));
    return xs;
}

ExprP parse_expr(const SExpr& s) {
    if (!s.is_list || s.items.empty() || !s.items[0].is_symbol()) s.fail("expected expression");
    const std::string& h = s.items[0].atom;
    auto sub = [&](size_t i) { return parse_expr(s.items[i]); };
    if (h == "lit") {
        arity(s, 3, "lit");
        return e_lit(s.items[1].as_int(), word_type(s.items[2]));
    }
    if (h == "var") {
        arity(s, 2, "var");
        return e_var(ident(s.items[1]));
    }
    if (h == "add") {
        arity(s, 3, "add");
        return e_add(sub(1), sub(2));
    }
    if (h == "cast" || h == "dyncast") {
        arity(s, 3, h.c_str());
        auto t = word_type(s.items[1]);
        return h == "cast" ? e_cast(t, sub(2)) : e_dyncast(t, sub(2));
    }
    if (h == "ret") s.fail("'ret' is internal to the machine and not allowed in programs");
    if (h == "strlen") {
        arity(s, 2, "strlen");
        return e_strlen(ident(s.items[1]));
    }
    if (h == "malloc") {
        arity(s, 3, "malloc");
        auto m = parse_mode(s.items[1]);
        auto w = parse_type(s.items[2]);
        if (w->is_fun()) s.items[2].fail("malloc of a function type");
        return e_malloc(m, w);
    }
    if (h == "deref") {
        arity(s, 2, "deref");
        return e_deref(sub(1));
    }
    if (h == "assign") {
        arity(s, 3, "assign");
        return e_assign(sub(1), sub(2));
    }
    if (h == "let") {
        arity(s, 4, "let");
        return e_let(ident(s.items[1]), sub(2), sub(3));
    }
    if (h == "if") {
        arity(s, 4, "if");
        return e_if(sub(1), sub(2), sub(3));
    }
    if (h == "call") {
        if (s.items.size() < 2) s.fail("call needs a callee");
        std::vector<ExprP> args;
        for (size_t i = 2; i < s.items.size(); ++i) args.push_back(sub(i));
        return e_call(sub(1), std::move(args));
    }
    if (h == "unchecked" || h == "checked") {
        arity(s, 3, h.c_str());
        auto xs = var_list(s.items[1]);
        return h == "unchecked" ? e_unchecked(xs, sub(2)) : e_checked(xs, sub(2));
    }
    s.items[0].fail("unknown expression form '" + h + "'");
}

static const SExpr& field(const SExpr& form, const char* name) {
    for (size_t i = 1; i < form.items.size(); ++i)
        if (form.items[i].head_is(name)) return form.items[i];
    form.fail(std::string("fundef is missing (") + name + " ...)");
}

static FunEntry parse_fundef(const SExpr& s) {
    FunEntry f;
    const SExpr& a = field(s, "addr");
    arity(a, 2, "addr");
    f.addr = a.items[1].as_int();
    if (f.addr <= 0) a.fail("function address must be positive");
    const SExpr& r = field(s, "region");
    arity(r, 2, "region");
    f.region = parse_mode(r.items[1]);
    if (f.region == Mode::T) r.fail("region must be c or u");
    const SExpr& m = field(s, "mode");
    arity(m, 2, "mode");
    f.def.mode = parse_mode(m.items[1]);
    const SExpr& rt = field(s, "ret");
    arity(rt, 2, "ret");
    f.def.ret = word_type(rt.items[1]);
    const SExpr& ps = field(s, "params");
    std::set<std::string> seen;
    for (size_t i = 1; i < ps.items.size(); ++i) {
        const SExpr& p = ps.items[i];
        if (!p.is_list || p.items.size() != 2) p.fail("expected (x TYPE)");
        auto x = ident(p.items[0]);
        if (!seen.insert(x).second) p.fail("duplicate parameter " + x);
        f.def.params.push_back({x, word_type(p.items[1])});
    }
    const SExpr& b = field(s, "body");
    arity(b, 2, "body");
    f.def.body = parse_expr(b.items[1]);
    return f;
}

static void parse_heap(const SExpr& s, Program& p) {
    for (size_t i = 1; i < s.items.size(); ++i) {
        const SExpr& reg = s.items[i];
        if (!reg.is_list || reg.items.empty()) reg.fail("expected (REGION (ADDR VALUE)...)");
        Mode r = parse_mode(reg.items[0]);
        if (r == Mode::T) reg.items[0].fail("heap region must be c or u");
        for (size_t j = 1; j < reg.items.size(); ++j) {
            const SExpr& cell = reg.items[j];
            if (!cell.is_list || cell.items.size() != 2) cell.fail("expected (ADDR (lit N TYPE))");
            int64_t addr = cell.items[0].as_int();
            if (addr <= 0) cell.items[0].fail("heap address must be positive");
            for (auto& h : p.heap)
                if (h.region == r && h.addr == addr) cell.fail("duplicate heap address");
            auto v = parse_expr(cell.items[1]);
            if (v->kind != ExprKind::Lit) cell.items[1].fail("heap cell must hold a literal");
            p.heap.push_back({r, addr, Value{v->n, v->type}});
        }
    }
}

Program parse_program(const std::string& text) {
    Program p;
    bool has_main = false;
    for (auto& form : read_sexprs(text)) {
        if (form.head_is("fundef")) {
            auto f = parse_fundef(form);
            for (auto& g : p.funs)
                if (g.region == f.region && g.addr == f.addr) form.fail("duplicate function address");
            p.funs.push_back(std::move(f));
        } else if (form.head_is("heap")) {
            parse_heap(form, p);
        } else if (form.head_is("main")) {
            if (has_main) form.fail("duplicate main");
            arity(form, 2, "main");
            p.main = parse_expr(form.items[1]);
            has_main = true;
        } else {
            form.fail("expected fundef, heap or main");
        }
    }
    if (!has_main) throw ParseError(1, 1, "program has no (main ...)");
    return p;
}

ExprP parse_expr_text(const std::string& text) {
    auto forms = read_sexprs(text);
    if (forms.size() != 1) throw ParseError(1, 1, "expected exactly one expression");
    return parse_expr(forms[0]);
}

TypeP parse_type_text(const std::string& text) {
    auto forms = read_sexprs(text);
    if (forms.size() != 1) throw ParseError(1, 1, "expected exactly one type");
    return parse_type(forms[0]);
}

}  // namespace chkbox
