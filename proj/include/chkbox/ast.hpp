#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chkbox/sexpr.hpp"

namespace chkbox {

// Pointer modes. Context modes use only C and U.
enum class Mode { C, T, U };

const char* mode_name(Mode m);
std::optional<Mode> mode_from_name(const std::string& s);

// n when var is empty, otherwise var + off.
struct Bound {
    std::string var;
    int64_t off = 0;

    static Bound lit(int64_t n) { return {"", n}; }
    static Bound of(std::string x, int64_t n = 0) { return {std::move(x), n}; }
    bool is_lit() const { return var.empty(); }
    Bound plus(int64_t n) const { return {var, off + n}; }
    bool operator==(const Bound&) const = default;
};

std::string print_bound(const Bound& b);

enum class TypeKind { Int, Ptr, Array, Fun };

struct Type;
using TypeP = std::shared_ptr<const Type>;

// One node type covers both word types (Int, Ptr) and object types
// (any word type, Array, Fun).
struct Type {
    TypeKind kind = TypeKind::Int;
    // Ptr
    TypeP pointee;
    Mode mode = Mode::C;
    // Array
    bool nt = false;
    Bound lo, hi;
    TypeP elem;
    // Fun
    std::vector<std::string> binders;
    std::vector<TypeP> params;
    TypeP ret;

    bool is_int() const { return kind == TypeKind::Int; }
    bool is_ptr() const { return kind == TypeKind::Ptr; }
    bool is_word() const { return kind == TypeKind::Int || kind == TypeKind::Ptr; }
    bool is_array() const { return kind == TypeKind::Array; }
    bool is_fun() const { return kind == TypeKind::Fun; }
};

TypeP t_int();
TypeP t_ptr(TypeP pointee, Mode m);
TypeP t_array(bool nt, Bound lo, Bound hi, TypeP elem);
TypeP t_fun(std::vector<std::string> binders, std::vector<TypeP> params, TypeP ret);

// Ptr(Array ...) / Ptr(Fun ...)
bool is_array_ptr(const TypeP& t);
bool is_nt_array_ptr(const TypeP& t);
bool is_fun_ptr(const TypeP& t);

bool type_equal_syntax(const TypeP& a, const TypeP& b);
std::set<std::string> type_free_vars(const TypeP& t);
// Replaces bound variables; Fun binders are renamed apart first when they
// would capture or are themselves in the domain.
TypeP subst_type(const TypeP& t, const std::map<std::string, Bound>& sigma);
TypeP rename_binders(const TypeP& fun, const std::vector<std::string>& fresh);
std::string fresh_name(const std::string& base);

struct Value {
    int64_t n = 0;
    TypeP type;
};

enum class ExprKind {
    Lit, Var, Add, Cast, DynCast, Ret, Strlen, Malloc, Deref, Assign, Let, If, Call, Unchecked, Checked
};

struct Expr;
using ExprP = std::shared_ptr<const Expr>;

struct Expr {
    ExprKind kind = ExprKind::Lit;
    int64_t n = 0;                  // Lit
    TypeP type;                     // Lit, Cast, DynCast, Malloc (omega)
    Mode mode = Mode::C;            // Malloc
    std::string x;                  // Var, Ret, Strlen, Let
    std::vector<std::string> vars;  // Checked, Unchecked
    std::optional<Value> saved;     // Ret: binding to restore, none if x was unbound
    std::vector<ExprP> kids;

    bool is_value() const { return kind == ExprKind::Lit; }
};

ExprP e_lit(int64_t n, TypeP t);
ExprP e_var(std::string x);
ExprP e_add(ExprP a, ExprP b);
ExprP e_cast(TypeP t, ExprP e);
ExprP e_dyncast(TypeP t, ExprP e);
ExprP e_ret(std::string x, std::optional<Value> saved, ExprP e);
ExprP e_strlen(std::string x);
ExprP e_malloc(Mode m, TypeP omega);
ExprP e_deref(ExprP e);
ExprP e_assign(ExprP a, ExprP b);
ExprP e_let(std::string x, ExprP a, ExprP b);
ExprP e_if(ExprP c, ExprP a, ExprP b);
ExprP e_call(ExprP f, std::vector<ExprP> args);
ExprP e_unchecked(std::vector<std::string> xs, ExprP e);
ExprP e_checked(std::vector<std::string> xs, ExprP e);
ExprP e_value(const Value& v);

bool expr_equal(const ExprP& a, const ExprP& b);
std::set<std::string> free_vars(const ExprP& e);
size_t expr_size(const ExprP& e);
bool contains_unchecked(const ExprP& e);

struct FunDef {
    TypeP ret;
    std::vector<std::pair<std::string, TypeP>> params;
    Mode mode = Mode::C;
    ExprP body;
};

// The Fun object type assembled from a definition: binders are the
// Int-typed parameters.
TypeP fun_type_of(const FunDef& f);

struct FunEntry {
    int64_t addr = 0;
    Mode region = Mode::C;
    FunDef def;
};

struct HeapEntry {
    Mode region = Mode::C;
    int64_t addr = 0;
    Value val;
};

struct Program {
    std::vector<FunEntry> funs;
    std::vector<HeapEntry> heap;
    ExprP main;
};

std::string print_type(const TypeP& t);
std::string print_expr(const ExprP& e);
std::string print_program(const Program& p);

TypeP parse_type(const SExpr& s);
ExprP parse_expr(const SExpr& s);
Program parse_program(const std::string& text);
// Parses a single expression form (used by tests).
ExprP parse_expr_text(const std::string& text);
TypeP parse_type_text(const std::string& text);

}  // namespace chkbox
