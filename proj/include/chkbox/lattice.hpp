#pragma once

#include <map>
#include <set>
#include <string>

#include "chkbox/ast.hpp"

namespace chkbox {

bool mode_le(Mode a, Mode b);
Mode mode_meet(Mode a, Mode b);

struct Pred {
    bool ge0 = false;  // x >= 0; otherwise x = eq
    Bound eq;

    static Pred ge_zero() { return {true, {}}; }
    static Pred equals(Bound b) { return {false, std::move(b)}; }
};

using PredEnv = std::map<std::string, Pred>;

bool bound_le(const PredEnv& theta, const Bound& a, const Bound& b);
bool bound_eq(const PredEnv& theta, const Bound& a, const Bound& b);

bool type_eq(const PredEnv& theta, const TypeP& a, const TypeP& b);
bool subtype(const PredEnv& theta, const TypeP& a, const TypeP& b);

bool wf_nested(Mode m, const TypeP& t);
// int_vars: variables typed int in the ambient environment.
bool wf_bounds(const std::set<std::string>& int_vars, const TypeP& t);

}  // namespace chkbox
