#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chkbox/ast.hpp"
#include "chkbox/machine.hpp"
#include "chkbox/sexpr.hpp"

namespace chkbox::corec {

enum class K {
    Lit, Var, Add, Sub, Let, Ret, If,
    Deref, Assign, Malloc, Call,
    AssertBounds, AssertNN, Verify, VerifyFun, DynCheck, Widen, Strlen,
    Scope
};

// Range test flavour for checked accesses.
enum class Range { Word, Arr, Nt };

struct Shape;
using ShapeP = std::shared_ptr<const Shape>;
struct CExpr;
using CExprP = std::shared_ptr<const CExpr>;

// Deep validity test applied to a cell read through a tainted pointer.
struct Shape {
    enum Kind { Any, Int, CPtr, UPtr, TWord, TArray, TFun } kind = Any;
    ShapeP elem;
    bool nt = false;
    CExprP lo, hi;
    size_t arity = 0;
};

// Operand positions of check primitives and malloc bounds hold atoms:
// literals, variables, or add/sub of atoms.
struct CExpr {
    K kind = K::Lit;
    int64_t n = 0;
    std::string x;
    Mode region = Mode::C;
    Range range = Range::Word;
    ShapeP shape;
    std::optional<int64_t> saved;
    size_t arity = 0;
    std::vector<CExprP> kids;

    bool is_value() const { return kind == K::Lit; }
};

CExprP c_lit(int64_t n);
CExprP c_var(std::string x);
CExprP c_add(CExprP a, CExprP b);
CExprP c_sub(CExprP a, CExprP b);
CExprP c_let(std::string x, CExprP rhs, CExprP body);
CExprP c_ret(std::string x, std::optional<int64_t> saved, CExprP body);
CExprP c_if(CExprP g, CExprP a, CExprP b);
CExprP c_deref(Mode r, CExprP p);
CExprP c_assign(Mode r, CExprP p, CExprP v);
CExprP c_malloc_word(Mode r);
CExprP c_malloc_array(Mode r, bool nt, CExprP lo, CExprP hi);
CExprP c_call(Mode r, CExprP f, std::vector<CExprP> args);
CExprP c_assert_bounds(Range k, CExprP lo, CExprP hi, CExprP body);
CExprP c_assertnn(CExprP a, CExprP body);
CExprP c_verify(Mode r, CExprP a, Range k, CExprP lo, CExprP hi, ShapeP s, CExprP body);
CExprP c_verify_fun(Mode r, CExprP f, size_t arity, CExprP body);
CExprP c_dyncheck(CExprP p, CExprP lo, CExprP hi, CExprP dlo, CExprP dhi, CExprP body);
CExprP c_widen(std::string v, CExprP a, CExprP body);
CExprP c_strlen(Mode r, CExprP x, CExprP lo, CExprP hi, std::string widen);
CExprP c_scope(Mode m, CExprP body);

ShapeP s_any();
ShapeP s_int();
ShapeP s_cptr();
ShapeP s_uptr();
ShapeP s_tword(ShapeP elem);
ShapeP s_tarray(bool nt, CExprP lo, CExprP hi, ShapeP elem);
ShapeP s_tfun(size_t arity);

bool cexpr_equal(const CExprP& a, const CExprP& b);
std::string print_cexpr(const CExprP& e);
std::string print_shape(const ShapeP& s);
CExprP parse_cexpr(const SExpr& s);
CExprP parse_cexpr_text(const std::string& text);

struct CFun {
    std::vector<std::string> params;
    CExprP body;
};

struct CFunStore {
    std::map<int64_t, CFun> c, u;
    const CFun* get(Mode r, int64_t a) const {
        auto& m = r == Mode::C ? c : u;
        auto it = m.find(a);
        return it == m.end() ? nullptr : &it->second;
    }
};

struct CHeap {
    std::map<int64_t, int64_t> c, u;
    int64_t next_c = 1, next_u = 1;
    std::map<int64_t, int64_t>& cells(Mode r) { return r == Mode::C ? c : u; }
    const std::map<int64_t, int64_t>& cells(Mode r) const { return r == Mode::C ? c : u; }
    bool operator==(const CHeap& o) const { return c == o.c && u == o.u; }
};

using CStack = std::map<std::string, int64_t>;

struct CConfig {
    CStack stack;
    CHeap heap;
    CExprP expr;
};

struct CProgram {
    CFunStore funs;
    CHeap heap;
    CExprP main;
};

std::string print_cprogram(const CProgram& p);
CProgram parse_cprogram(const std::string& text);

CHeap erase_heap(const Heap& h);
CStack erase_stack(const Stack& s);

enum class CStepKind { Stepped, Value, Null, Bounds, Stuck };

struct CStep {
    CStepKind kind = CStepKind::Stuck;
    CConfig next;
    std::string detail;
};

CStep step_corec(const CConfig& cfg, const CFunStore& funs);

struct COutcome {
    OutcomeKind kind = OutcomeKind::Stuck;
    int64_t value = 0;
    CConfig final_cfg;
    size_t steps = 0;
    std::string detail;
};

COutcome run_corec(CConfig cfg, const CFunStore& funs, size_t fuel);
COutcome eval_corec(const CProgram& p, size_t fuel);

// Evaluates an atom against a stack; nullopt on an unbound variable.
std::optional<int64_t> eval_atom(const CStack& s, const CExprP& a);

}  // namespace chkbox::corec
