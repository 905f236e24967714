#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "chkbox/ast.hpp"
#include "chkbox/lattice.hpp"
#include "chkbox/store.hpp"

namespace chkbox {

using TypeEnv = std::map<std::string, TypeP>;

struct TypeError : std::runtime_error {
    std::string rule;
    std::string path;
    TypeError(std::string rule, std::string path, const std::string& msg);
};

// Binding of x inside each live Ret(x, ...) node of a machine state.
using RetViews = std::map<const Expr*, Value>;

struct TcContext {
    const Heap* heap = nullptr;
    const FunStore* funs = nullptr;
    const RetViews* views = nullptr;
};

TypeP typecheck(const TypeEnv& gamma, const PredEnv& theta, Mode m, const ExprP& e, const TcContext& ctx);

// Checks the function store and main; returns the type of main.
TypeP check_program(const Program& p);

bool is_checked(const TypeP& t);

using Scope = std::vector<std::pair<int64_t, TypeP>>;

bool const_valid(const PredEnv& theta, const Heap& heap, const FunStore& funs, Scope& scope, Mode m, int64_t n,
                 const TypeP& t);
bool const_valid(const Heap& heap, const FunStore& funs, Mode m, int64_t n, const TypeP& t);

// Throws std::invalid_argument for Fun types and non-literal bounds.
int64_t size_of(const TypeP& omega);

// Nested-pointer well-formedness without the outermost mode restriction.
bool wf_value_type(Mode m, const TypeP& t);

// Lit n:int, Var x, or Add(Var x, Lit n:int) as a bound; nullopt otherwise.
std::optional<Bound> as_bound_expr(const ExprP& e);

// Replaces variables with the literal values they are pinned to by Eq chains.
TypeP resolve_type(const PredEnv& theta, const TypeP& t);

}  // namespace chkbox
