#include "chkbox/corec.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace chkbox::corec {

// ---- construction ----

namespace {

std::shared_ptr<CExpr> mk(K k, std::vector<CExprP> kids = {}) {
    auto e = std::make_shared<CExpr>();
    e->kind = k;
    e->kids = std::move(kids);
    return e;
}

std::shared_ptr<Shape> mks(Shape::Kind k) {
    auto s = std::make_shared<Shape>();
    s->kind = k;
    return s;
}

}  // namespace

CExprP c_lit(int64_t n) {
    auto e = mk(K::Lit);
    e->n = n;
    return e;
}

CExprP c_var(std::string x) {
    auto e = mk(K::Var);
    e->x = std::move(x);
    return e;
}

CExprP c_add(CExprP a, CExprP b) { return mk(K::Add, {std::move(a), std::move(b)}); }
CExprP c_sub(CExprP a, CExprP b) { return mk(K::Sub, {std::move(a), std::move(b)}); }

CExprP c_let(std::string x, CExprP rhs, CExprP body) {
    auto e = mk(K::Let, {std::move(rhs), std::move(body)});
    e->x = std::move(x);
    return e;
}

CExprP c_ret(std::string x, std::optional<int64_t> saved, CExprP body) {
    auto e = mk(K::Ret, {std::move(body)});
    e->x = std::move(x);
    e->saved = saved;
    return e;
}

CExprP c_if(CExprP g, CExprP a, CExprP b) { return mk(K::If, {std::move(g), std::move(a), std::move(b)}); }

CExprP c_deref(Mode r, CExprP p) {
    auto e = mk(K::Deref, {std::move(p)});
    e->region = r;
    return e;
}

CExprP c_assign(Mode r, CExprP p, CExprP v) {
    auto e = mk(K::Assign, {std::move(p), std::move(v)});
    e->region = r;
    return e;
}

CExprP c_malloc_word(Mode r) {
    auto e = mk(K::Malloc);
    e->region = r;
    e->range = Range::Word;
    return e;
}

CExprP c_malloc_array(Mode r, bool nt, CExprP lo, CExprP hi) {
    auto e = mk(K::Malloc, {std::move(lo), std::move(hi)});
    e->region = r;
    e->range = nt ? Range::Nt : Range::Arr;
    return e;
}

CExprP c_call(Mode r, CExprP f, std::vector<CExprP> args) {
    std::vector<CExprP> kids{std::move(f)};
    for (auto& a : args) kids.push_back(std::move(a));
    auto e = mk(K::Call, std::move(kids));
    e->region = r;
    return e;
}

CExprP c_assert_bounds(Range k, CExprP lo, CExprP hi, CExprP body) {
    auto e = mk(K::AssertBounds, {std::move(lo), std::move(hi), std::move(body)});
    e->range = k;
    return e;
}

CExprP c_assertnn(CExprP a, CExprP body) { return mk(K::AssertNN, {std::move(a), std::move(body)}); }

CExprP c_verify(Mode r, CExprP a, Range k, CExprP lo, CExprP hi, ShapeP s, CExprP body) {
    std::shared_ptr<CExpr> e;
    if (k == Range::Word)
        e = mk(K::Verify, {std::move(a), std::move(body)});
    else
        e = mk(K::Verify, {std::move(a), std::move(lo), std::move(hi), std::move(body)});
    e->region = r;
    e->range = k;
    e->shape = std::move(s);
    return e;
}

CExprP c_verify_fun(Mode r, CExprP f, size_t arity, CExprP body) {
    auto e = mk(K::VerifyFun, {std::move(f), std::move(body)});
    e->region = r;
    e->arity = arity;
    return e;
}

CExprP c_dyncheck(CExprP p, CExprP lo, CExprP hi, CExprP dlo, CExprP dhi, CExprP body) {
    return mk(K::DynCheck, {std::move(p), std::move(lo), std::move(hi), std::move(dlo), std::move(dhi), std::move(body)});
}

CExprP c_widen(std::string v, CExprP a, CExprP body) {
    auto e = mk(K::Widen, {std::move(a), std::move(body)});
    e->x = std::move(v);
    return e;
}

CExprP c_strlen(Mode r, CExprP x, CExprP lo, CExprP hi, std::string widen) {
    auto e = mk(K::Strlen, {std::move(x), std::move(lo), std::move(hi)});
    e->region = r;
    e->x = std::move(widen);
    return e;
}

CExprP c_scope(Mode m, CExprP body) {
    auto e = mk(K::Scope, {std::move(body)});
    e->region = m;
    return e;
}

ShapeP s_any() { return mks(Shape::Any); }
ShapeP s_int() { return mks(Shape::Int); }
ShapeP s_cptr() { return mks(Shape::CPtr); }
ShapeP s_uptr() { return mks(Shape::UPtr); }

ShapeP s_tword(ShapeP elem) {
    auto s = mks(Shape::TWord);
    s->elem = std::move(elem);
    return s;
}

ShapeP s_tarray(bool nt, CExprP lo, CExprP hi, ShapeP elem) {
    auto s = mks(Shape::TArray);
    s->nt = nt;
    s->lo = std::move(lo);
    s->hi = std::move(hi);
    s->elem = std::move(elem);
    return s;
}

ShapeP s_tfun(size_t arity) {
    auto s = mks(Shape::TFun);
    s->arity = arity;
    return s;
}

// ---- equality and printing ----

static bool shape_equal(const ShapeP& a, const ShapeP& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind || a->nt != b->nt || a->arity != b->arity) return false;
    if (!cexpr_equal(a->lo, b->lo) || !cexpr_equal(a->hi, b->hi)) return false;
    return shape_equal(a->elem, b->elem);
}

bool cexpr_equal(const CExprP& a, const CExprP& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind || a->n != b->n || a->x != b->x || a->region != b->region || a->range != b->range ||
        a->saved != b->saved || a->arity != b->arity || a->kids.size() != b->kids.size())
        return false;
    if (!shape_equal(a->shape, b->shape)) return false;
    for (size_t i = 0; i < a->kids.size(); ++i)
        if (!cexpr_equal(a->kids[i], b->kids[i])) return false;
    return true;
}

static const char* rname(Mode r) { return mode_name(r); }

std::string print_shape(const ShapeP& s) {
    switch (s->kind) {
        case Shape::Any: return "any";
        case Shape::Int: return "int";
        case Shape::CPtr: return "c";
        case Shape::UPtr: return "u";
        case Shape::TWord: return "(t " + print_shape(s->elem) + ")";
        case Shape::TArray:
            return std::string("(t-array ") + (s->nt ? "nt " : "") + print_cexpr(s->lo) + " " + print_cexpr(s->hi) +
                   " " + print_shape(s->elem) + ")";
        case Shape::TFun: return "(t-fun " + std::to_string(s->arity) + ")";
    }
    return "?";
}

static std::string range_name(Range r) { return r == Range::Nt ? "nt" : r == Range::Arr ? "arr" : "word"; }

std::string print_cexpr(const CExprP& e) {
    auto k = [&](size_t i) { return print_cexpr(e->kids[i]); };
    switch (e->kind) {
        case K::Lit: return std::to_string(e->n);
        case K::Var: return e->x;
        case K::Add: return "(add " + k(0) + " " + k(1) + ")";
        case K::Sub: return "(sub " + k(0) + " " + k(1) + ")";
        case K::Let: return "(let " + e->x + " " + k(0) + " " + k(1) + ")";
        case K::Ret:
            return "(ret " + e->x + " " + (e->saved ? std::to_string(*e->saved) : std::string("none")) + " " + k(0) +
                   ")";
        case K::If: return "(if " + k(0) + " " + k(1) + " " + k(2) + ")";
        case K::Deref: return std::string("(deref ") + rname(e->region) + " " + k(0) + ")";
        case K::Assign: return std::string("(assign ") + rname(e->region) + " " + k(0) + " " + k(1) + ")";
        case K::Malloc:
            if (e->range == Range::Word) return std::string("(malloc ") + rname(e->region) + " word)";
            return std::string("(malloc ") + rname(e->region) + " (array " + (e->range == Range::Nt ? "nt " : "") +
                   k(0) + " " + k(1) + "))";
        case K::Call: {
            std::string s = std::string("(call ") + rname(e->region);
            for (auto& c : e->kids) s += " " + print_cexpr(c);
            return s + ")";
        }
        case K::AssertBounds: return "(assert-bounds " + range_name(e->range) + " " + k(0) + " " + k(1) + " " + k(2) + ")";
        case K::AssertNN: return "(assertnn " + k(0) + " " + k(1) + ")";
        case K::Verify: {
            std::string r = e->range == Range::Word ? "word" : "(" + range_name(e->range) + " " + k(1) + " " + k(2) + ")";
            return std::string("(verify ") + rname(e->region) + " " + k(0) + " " + r + " " + print_shape(e->shape) +
                   " " + print_cexpr(e->kids.back()) + ")";
        }
        case K::VerifyFun:
            return std::string("(verify-fun ") + rname(e->region) + " " + k(0) + " " + std::to_string(e->arity) + " " +
                   k(1) + ")";
        case K::DynCheck:
            return "(dyncheck " + k(0) + " " + k(1) + " " + k(2) + " " + k(3) + " " + k(4) + " " + k(5) + ")";
        case K::Widen: return "(widen " + e->x + " " + k(0) + " " + k(1) + ")";
        case K::Strlen:
            return std::string("(strlen ") + rname(e->region) + " " + k(0) + " " + k(1) + " " + k(2) + " " + e->x + ")";
        case K::Scope: return std::string("(scope ") + rname(e->region) + " " + k(0) + ")";
    }
    return "?";
}

// ---- parsing ----

namespace {

std::string name(const SExpr& s) {
    if (!s.is_symbol()) s.fail("expected a variable name");
    return s.atom;
}

Mode region(const SExpr& s) {
    auto m = s.is_symbol() ? mode_from_name(s.atom) : std::nullopt;
    if (!m || *m == Mode::T) s.fail("expected region c or u");
    return *m;
}

void need(const SExpr& s, size_t n, const char* form) {
    if (s.items.size() != n) s.fail(std::string("wrong number of operands for ") + form);
}

Range range_kind(const SExpr& s) {
    if (s.is_symbol() && s.atom == "arr") return Range::Arr;
    if (s.is_symbol() && s.atom == "nt") return Range::Nt;
    s.fail("expected arr or nt");
}

ShapeP parse_shape(const SExpr& s) {
    if (s.is_symbol()) {
        if (s.atom == "any") return s_any();
        if (s.atom == "int") return s_int();
        if (s.atom == "c") return s_cptr();
        if (s.atom == "u") return s_uptr();
        s.fail("unknown shape");
    }
    if (s.head_is("t")) {
        need(s, 2, "t");
        return s_tword(parse_shape(s.items[1]));
    }
    if (s.head_is("t-array")) {
        bool nt = s.items.size() == 5;
        if (nt && !(s.items[1].is_symbol() && s.items[1].atom == "nt")) s.items[1].fail("expected nt");
        if (!nt) need(s, 4, "t-array");
        size_t o = nt ? 2 : 1;
        return s_tarray(nt, parse_cexpr(s.items[o]), parse_cexpr(s.items[o + 1]), parse_shape(s.items[o + 2]));
    }
    if (s.head_is("t-fun")) {
        need(s, 2, "t-fun");
        return s_tfun(static_cast<size_t>(s.items[1].as_int()));
    }
    s.fail("unknown shape");
}

}  // namespace

CExprP parse_cexpr(const SExpr& s) {
    if (s.is_atom()) {
        if (s.is_int()) return c_lit(s.as_int());
        return c_var(name(s));
    }
    if (s.items.empty() || !s.items[0].is_symbol()) s.fail("expected a form");
    const std::string& h = s.items[0].atom;
    auto sub = [&](size_t i) { return parse_cexpr(s.items[i]); };
    if (h == "add") return need(s, 3, "add"), c_add(sub(1), sub(2));
    if (h == "sub") return need(s, 3, "sub"), c_sub(sub(1), sub(2));
    if (h == "let") return need(s, 4, "let"), c_let(name(s.items[1]), sub(2), sub(3));
    if (h == "ret") {
        need(s, 4, "ret");
        std::optional<int64_t> saved;
        if (!(s.items[2].is_symbol() && s.items[2].atom == "none")) saved = s.items[2].as_int();
        return c_ret(name(s.items[1]), saved, sub(3));
    }
    if (h == "if") return need(s, 4, "if"), c_if(sub(1), sub(2), sub(3));
    if (h == "deref") return need(s, 3, "deref"), c_deref(region(s.items[1]), sub(2));
    if (h == "assign") return need(s, 4, "assign"), c_assign(region(s.items[1]), sub(2), sub(3));
    if (h == "malloc") {
        need(s, 3, "malloc");
        const SExpr& sh = s.items[2];
        if (sh.is_symbol() && sh.atom == "word") return c_malloc_word(region(s.items[1]));
        if (!sh.head_is("array")) sh.fail("expected word or (array ...)");
        bool nt = sh.items.size() == 4;
        if (!nt && sh.items.size() != 3) sh.fail("malformed array shape");
        size_t o = nt ? 2 : 1;
        return c_malloc_array(region(s.items[1]), nt, parse_cexpr(sh.items[o]), parse_cexpr(sh.items[o + 1]));
    }
    if (h == "call") {
        if (s.items.size() < 3) s.fail("call needs a region and a callee");
        std::vector<CExprP> args;
        for (size_t i = 3; i < s.items.size(); ++i) args.push_back(sub(i));
        return c_call(region(s.items[1]), sub(2), std::move(args));
    }
    if (h == "assert-bounds") return need(s, 5, "assert-bounds"), c_assert_bounds(range_kind(s.items[1]), sub(2), sub(3), sub(4));
    if (h == "assertnn") return need(s, 3, "assertnn"), c_assertnn(sub(1), sub(2));
    if (h == "verify") {
        need(s, 6, "verify");
        const SExpr& r = s.items[3];
        if (r.is_symbol() && r.atom == "word")
            return c_verify(region(s.items[1]), sub(2), Range::Word, nullptr, nullptr, parse_shape(s.items[4]), sub(5));
        if (!r.is_list || r.items.size() != 3) r.fail("expected word, (arr LO HI) or (nt LO HI)");
        return c_verify(region(s.items[1]), sub(2), range_kind(r.items[0]), parse_cexpr(r.items[1]),
                        parse_cexpr(r.items[2]), parse_shape(s.items[4]), sub(5));
    }
    if (h == "verify-fun")
        return need(s, 5, "verify-fun"),
               c_verify_fun(region(s.items[1]), sub(2), static_cast<size_t>(s.items[3].as_int()), sub(4));
    if (h == "dyncheck") return need(s, 7, "dyncheck"), c_dyncheck(sub(1), sub(2), sub(3), sub(4), sub(5), sub(6));
    if (h == "widen") return need(s, 4, "widen"), c_widen(name(s.items[1]), sub(2), sub(3));
    if (h == "strlen") return need(s, 6, "strlen"), c_strlen(region(s.items[1]), sub(2), sub(3), sub(4), name(s.items[5]));
    if (h == "scope") return need(s, 3, "scope"), c_scope(region(s.items[1]), sub(2));
    s.items[0].fail("unknown form '" + h + "'");
}

CExprP parse_cexpr_text(const std::string& text) {
    auto forms = read_sexprs(text);
    if (forms.size() != 1) throw ParseError(1, 1, "expected exactly one expression");
    return parse_cexpr(forms[0]);
}

std::string print_cprogram(const CProgram& p) {
    std::ostringstream os;
    for (Mode r : {Mode::C, Mode::U})
        for (auto& [addr, f] : (r == Mode::C ? p.funs.c : p.funs.u)) {
            os << "(fun (addr " << addr << ") (region " << rname(r) << ") (params";
            for (auto& x : f.params) os << " " << x;
            os << ")\n  (body " << print_cexpr(f.body) << "))\n";
        }
    if (!p.heap.c.empty() || !p.heap.u.empty()) {
        os << "(heap";
        for (Mode r : {Mode::C, Mode::U}) {
            if (p.heap.cells(r).empty()) continue;
            os << "\n  (" << rname(r);
            for (auto& [a, v] : p.heap.cells(r)) os << " (" << a << " " << v << ")";
            os << ")";
        }
        os << ")\n";
    }
    os << "(main " << print_cexpr(p.main) << ")\n";
    return os.str();
}

CProgram parse_cprogram(const std::string& text) {
    CProgram p;
    bool have_main = false;
    for (auto& f : read_sexprs(text)) {
        if (f.head_is("fun")) {
            need(f, 5, "fun");
            for (size_t i = 1; i < 5; ++i)
                if (!f.items[i].is_list || f.items[i].items.empty()) f.items[i].fail("expected a field");
            auto field = [&](const char* nm) -> const SExpr& {
                for (size_t i = 1; i < f.items.size(); ++i)
                    if (f.items[i].head_is(nm)) return f.items[i];
                f.fail(std::string("missing field ") + nm);
            };
            const SExpr& a = field("addr");
            need(a, 2, "addr");
            int64_t addr = a.items[1].as_int();
            if (addr <= 0) a.fail("function address must be positive");
            const SExpr& r = field("region");
            need(r, 2, "region");
            CFun fn;
            const SExpr& ps = field("params");
            for (size_t i = 1; i < ps.items.size(); ++i) fn.params.push_back(name(ps.items[i]));
            const SExpr& b = field("body");
            need(b, 2, "body");
            fn.body = parse_cexpr(b.items[1]);
            auto& store = region(r.items[1]) == Mode::C ? p.funs.c : p.funs.u;
            if (store.count(addr)) a.fail("duplicate function address");
            store[addr] = std::move(fn);
        } else if (f.head_is("heap")) {
            for (size_t i = 1; i < f.items.size(); ++i) {
                const SExpr& rg = f.items[i];
                if (!rg.is_list || rg.items.empty()) rg.fail("expected (REGION (ADDR N)...)");
                Mode r = region(rg.items[0]);
                for (size_t j = 1; j < rg.items.size(); ++j) {
                    const SExpr& cell = rg.items[j];
                    if (!cell.is_list || cell.items.size() != 2) cell.fail("expected (ADDR N)");
                    int64_t addr = cell.items[0].as_int();
                    if (addr <= 0) cell.fail("heap address must be positive");
                    p.heap.cells(r)[addr] = cell.items[1].as_int();
                    int64_t& next = r == Mode::C ? p.heap.next_c : p.heap.next_u;
                    next = std::max(next, addr + 1);
                }
            }
        } else if (f.head_is("main")) {
            need(f, 2, "main");
            if (have_main) f.fail("duplicate main");
            p.main = parse_cexpr(f.items[1]);
            have_main = true;
        } else {
            f.fail("expected fun, heap or main");
        }
    }
    if (!have_main) throw ParseError(1, 1, "missing main");
    return p;
}

// ---- erasure ----

CHeap erase_heap(const Heap& h) {
    CHeap out;
    for (auto& [a, v] : h.c) out.c[a] = v.n;
    for (auto& [a, v] : h.u) out.u[a] = v.n;
    out.next_c = h.next_c;
    out.next_u = h.next_u;
    return out;
}

CStack erase_stack(const Stack& s) {
    CStack out;
    for (auto& [x, v] : s) out[x] = v.n;
    return out;
}

// ---- evaluation ----

std::optional<int64_t> eval_atom(const CStack& s, const CExprP& a) {
    switch (a->kind) {
        case K::Lit: return a->n;
        case K::Var: {
            auto it = s.find(a->x);
            if (it == s.end()) return std::nullopt;
            return it->second;
        }
        case K::Add:
        case K::Sub: {
            auto l = eval_atom(s, a->kids[0]), r = eval_atom(s, a->kids[1]);
            if (!l || !r) return std::nullopt;
            return a->kind == K::Add ? *l + *r : *l - *r;
        }
        default: return std::nullopt;
    }
}

namespace {

struct R {
    CStepKind kind;
    CExprP e;
    std::string detail;
};

R stepped(CExprP e) { return {CStepKind::Stepped, std::move(e), {}}; }
R stuck(std::string why) { return {CStepKind::Stuck, nullptr, std::move(why)}; }
R null_() { return {CStepKind::Null, nullptr, {}}; }
R bounds() { return {CStepKind::Bounds, nullptr, {}}; }

using Scope = std::set<std::pair<int64_t, const Shape*>>;

bool shape_ok(const CConfig& cfg, const CFunStore& funs, Scope& scope, int64_t v, const ShapeP& s) {
    switch (s->kind) {
        case Shape::Any:
        case Shape::Int:
        case Shape::UPtr: return true;
        case Shape::CPtr: return v == 0;
        case Shape::TFun: {
            if (v == 0) return true;
            const CFun* f = funs.get(Mode::U, v);
            return f && f->params.size() == s->arity;
        }
        case Shape::TWord:
        case Shape::TArray: {
            if (v == 0 || scope.count({v, s.get()})) return true;
            int64_t lo = 0, hi = 1;
            if (s->kind == Shape::TArray) {
                auto l = eval_atom(cfg.stack, s->lo), h = eval_atom(cfg.stack, s->hi);
                if (!l || !h) return false;
                lo = *l;
                hi = *h + (s->nt ? 1 : 0);
            }
            scope.insert({v, s.get()});
            bool ok = true;
            for (int64_t i = lo; ok && i < hi; ++i) {
                auto it = cfg.heap.u.find(v + i);
                ok = it != cfg.heap.u.end() && shape_ok(cfg, funs, scope, it->second, s->elem);
            }
            scope.erase({v, s.get()});
            return ok;
        }
    }
    return false;
}

bool eval_positions(K k, size_t i, size_t nkids) {
    switch (k) {
        case K::Add:
        case K::Sub:
        case K::Assign:
        case K::Call: return i < nkids;
        case K::Let:
        case K::Ret:
        case K::If:
        case K::Deref:
        case K::Scope: return i == 0;
        default: return false;
    }
}

R rule(CConfig& cfg, const CFunStore& funs, const CExprP& e) {
    auto atom = [&](size_t i) { return eval_atom(cfg.stack, e->kids[i]); };
    switch (e->kind) {
        case K::Lit: return stuck("value");
        case K::Var: {
            auto it = cfg.stack.find(e->x);
            if (it == cfg.stack.end()) return stuck("unbound variable " + e->x);
            return stepped(c_lit(it->second));
        }
        case K::Add: return stepped(c_lit(e->kids[0]->n + e->kids[1]->n));
        case K::Sub: return stepped(c_lit(e->kids[0]->n - e->kids[1]->n));
        case K::Let: {
            std::optional<int64_t> old;
            if (auto it = cfg.stack.find(e->x); it != cfg.stack.end()) old = it->second;
            cfg.stack[e->x] = e->kids[0]->n;
            return stepped(c_ret(e->x, old, e->kids[1]));
        }
        case K::Ret:
            if (e->saved)
                cfg.stack[e->x] = *e->saved;
            else
                cfg.stack.erase(e->x);
            return stepped(e->kids[0]);
        case K::If: return stepped(e->kids[0]->n != 0 ? e->kids[1] : e->kids[2]);
        case K::Deref: {
            auto& cells = cfg.heap.cells(e->region);
            auto it = cells.find(e->kids[0]->n);
            if (it == cells.end()) return stuck("undefined heap cell");
            return stepped(c_lit(it->second));
        }
        case K::Assign: {
            auto& cells = cfg.heap.cells(e->region);
            auto it = cells.find(e->kids[0]->n);
            if (it == cells.end()) return stuck("undefined heap cell");
            it->second = e->kids[1]->n;
            return stepped(c_lit(e->kids[1]->n));
        }
        case K::Malloc: {
            int64_t size = 1;
            if (e->range != Range::Word) {
                auto lo = atom(0), hi = atom(1);
                if (!lo || !hi) return stuck("unbound variable in malloc bounds");
                if (*lo != 0 || *hi <= 0) return bounds();
                size = *hi - *lo + (e->range == Range::Nt ? 1 : 0);
            }
            int64_t& next = e->region == Mode::C ? cfg.heap.next_c : cfg.heap.next_u;
            int64_t base = next;
            for (int64_t i = 0; i < size; ++i) cfg.heap.cells(e->region)[base + i] = 0;
            next = base + size;
            return stepped(c_lit(base));
        }
        case K::Call: {
            const CFun* f = funs.get(e->region, e->kids[0]->n);
            if (!f) return stuck("no function at address");
            if (f->params.size() + 1 != e->kids.size()) return stuck("arity mismatch");
            CExprP body = f->body;
            for (size_t i = f->params.size(); i-- > 0;) body = c_let(f->params[i], e->kids[i + 1], body);
            return stepped(body);
        }
        case K::AssertBounds: {
            auto lo = atom(0), hi = atom(1);
            if (!lo || !hi) return stuck("unbound bound variable");
            bool in = *lo <= 0 && (e->range == Range::Nt ? 0 <= *hi : 0 < *hi);
            return in ? stepped(e->kids[2]) : bounds();
        }
        case K::AssertNN: {
            auto a = atom(0);
            if (!a) return stuck("unbound variable");
            return *a == 0 ? null_() : stepped(e->kids[1]);
        }
        case K::Verify: {
            auto a = atom(0);
            if (!a) return stuck("unbound variable");
            if (e->range != Range::Word) {
                auto lo = atom(1), hi = atom(2);
                if (!lo || !hi) return stuck("unbound bound variable");
                bool in = *lo <= 0 && (e->range == Range::Nt ? 0 <= *hi : 0 < *hi);
                if (!in) return bounds();
            }
            if (*a == 0) return null_();
            auto& cells = cfg.heap.cells(e->region);
            auto it = cells.find(*a);
            if (it == cells.end()) return bounds();
            Scope scope;
            if (!shape_ok(cfg, funs, scope, it->second, e->shape)) return bounds();
            return stepped(e->kids.back());
        }
        case K::VerifyFun: {
            auto a = atom(0);
            if (!a) return stuck("unbound variable");
            if (*a == 0) return null_();
            const CFun* f = funs.get(e->region, *a);
            if (!f || f->params.size() != e->arity) return bounds();
            return stepped(e->kids[1]);
        }
        case K::DynCheck: {
            auto p = atom(0), lo = atom(1), hi = atom(2), dlo = atom(3), dhi = atom(4);
            if (!p || !lo || !hi || !dlo || !dhi) return stuck("unbound variable");
            if (*p != 0 && !(*lo <= *dlo && *dhi <= *hi)) return bounds();
            return stepped(e->kids[5]);
        }
        case K::Widen: {
            auto a = atom(0);
            auto it = cfg.stack.find(e->x);
            if (!a || it == cfg.stack.end()) return stuck("unbound variable");
            it->second = std::max(it->second, *a);
            return stepped(e->kids[1]);
        }
        case K::Strlen: {
            auto x = atom(0), lo = atom(1), hi = atom(2);
            if (!x || !lo || !hi) return stuck("unbound variable");
            if (*x == 0) return null_();
            if (!(*lo <= 0 && 0 <= *hi)) return bounds();
            auto& cells = cfg.heap.cells(e->region);
            int64_t k = 0;
            for (;; ++k) {
                auto it = cells.find(*x + k);
                if (it == cells.end()) return bounds();
                if (it->second == 0) break;
            }
            auto w = cfg.stack.find(e->x);
            if (w == cfg.stack.end()) return stuck("unbound variable " + e->x);
            w->second = std::max(*hi, k);
            return stepped(c_lit(k));
        }
        case K::Scope: return stepped(e->kids[0]);
    }
    return stuck("unknown form");
}

R step_in(CConfig& cfg, const CFunStore& funs, const CExprP& e) {
    for (size_t i = 0; i < e->kids.size(); ++i) {
        if (!eval_positions(e->kind, i, e->kids.size())) break;
        if (e->kids[i]->is_value()) continue;
        R r = step_in(cfg, funs, e->kids[i]);
        if (r.kind != CStepKind::Stepped) return r;
        auto copy = std::make_shared<CExpr>(*e);
        copy->kids[i] = r.e;
        return stepped(copy);
    }
    return rule(cfg, funs, e);
}

}  // namespace

CStep step_corec(const CConfig& cfg, const CFunStore& funs) {
    CStep s;
    if (cfg.expr->is_value()) {
        s.kind = CStepKind::Value;
        return s;
    }
    s.next = cfg;
    R r = step_in(s.next, funs, cfg.expr);
    s.kind = r.kind;
    s.detail = r.detail;
    if (r.kind == CStepKind::Stepped) s.next.expr = r.e;
    return s;
}

COutcome run_corec(CConfig cfg, const CFunStore& funs, size_t fuel) {
    COutcome out;
    for (size_t i = 0;; ++i) {
        if (cfg.expr->is_value()) {
            out.kind = OutcomeKind::Value;
            out.value = cfg.expr->n;
            break;
        }
        if (i >= fuel) {
            out.kind = OutcomeKind::OutOfFuel;
            break;
        }
        CStep s = step_corec(cfg, funs);
        ++out.steps;
        if (s.kind == CStepKind::Stepped) {
            cfg = std::move(s.next);
            continue;
        }
        out.kind = s.kind == CStepKind::Null ? OutcomeKind::Null
                   : s.kind == CStepKind::Bounds ? OutcomeKind::Bounds
                                                 : OutcomeKind::Stuck;
        out.detail = s.detail;
        if (s.kind != CStepKind::Stuck) cfg = std::move(s.next);
        break;
    }
    out.final_cfg = std::move(cfg);
    return out;
}

COutcome eval_corec(const CProgram& p, size_t fuel) { return run_corec(CConfig{{}, p.heap, p.main}, p.funs, fuel); }

}  // namespace chkbox::corec
