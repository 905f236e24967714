#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "chkbox/ast.hpp"
#include "chkbox/corec.hpp"
#include "chkbox/machine.hpp"
#include "chkbox/typecheck.hpp"

namespace chkbox {

// Raised when lowering reaches a cell the type system should have ruled out.
struct CompileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Shadow {
    std::string lo, hi;
    Mode mode = Mode::C;
};

using ShadowEnv = std::map<std::string, Shadow>;

std::string shadow_lo(const std::string& x);
std::string shadow_hi(const std::string& x);
bool is_temp_name(const std::string& x);

// Region of a lowered memory operation; nullopt for the two rejected cells.
std::optional<Mode> lower_region(Mode context, Mode pointer);

struct CompileOutput {
    corec::CExprP target;
    TypeP type;
};

// rho may be empty: shadows of array pointers in gamma follow the x#lo/x#hi scheme.
CompileOutput compile(const TypeEnv& gamma, const PredEnv& theta, const ShadowEnv& rho, Mode m, const ExprP& e,
                      const TcContext& ctx);

// Source-level A-normal form with t#k temporaries.
ExprP anf(const ExprP& e);

corec::CFunStore compile_funs(const FunStore& funs, const Heap& heap);
corec::CProgram compile_program(const Program& p);

// Erasure plus compilation of a machine state, with shadow entries for array
// pointers on the stack.
corec::CConfig compile_config(const Config& cfg, const FunStore& funs);

}  // namespace chkbox
