#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "chkbox/ast.hpp"
#include "chkbox/store.hpp"
#include "chkbox/typecheck.hpp"

namespace chkbox {

using Stack = std::map<std::string, Value>;

struct Config {
    Stack stack;
    Heap heap;
    ExprP expr;
};

struct FaultPolicy {
    double rate = 0.0;
    uint64_t seed = 0;
};

class FaultSource {
public:
    explicit FaultSource(FaultPolicy p) : rate_(p.rate), rng_(p.seed) {}
    bool fire() { return rate_ > 0 && std::bernoulli_distribution(rate_)(rng_); }

private:
    double rate_;
    std::mt19937_64 rng_;
};

// Hole position: the chain of (ancestor, child index) from the root.
struct Decomp {
    std::vector<std::pair<ExprP, size_t>> path;
    ExprP redex;
    Mode mode = Mode::C;
};

// nullopt when the expression is already a value.
std::optional<Decomp> decompose(const Config& cfg);
ExprP plug(const Decomp& d, ExprP filler);
Mode context_mode(const std::vector<std::pair<ExprP, size_t>>& path);

// Substitutes integer stack bindings into the bounds of t.
TypeP close_type(const Stack& stack, const TypeP& t);

enum class RedexKind { Expr, Null, Bounds, NoRule };

struct RedexResult {
    RedexKind kind = RedexKind::NoRule;
    ExprP expr;
    std::string rule;
    std::string detail;
};

// Applies one S-rule to a redex. May update cfg.stack and cfg.heap.
RedexResult compute_step(Config& cfg, const FunStore& funs, const ExprP& redex);

enum class StepKind { Stepped, Fault, Value, Null, Bounds, Stuck };

struct Step {
    StepKind kind = StepKind::Stuck;
    Config next;
    Mode mode = Mode::C;
    std::string rule;
    ExprP redex;
    std::string detail;
};

Step step(const Config& cfg, const FunStore& funs, FaultSource* faults);

enum class OutcomeKind { Value, Null, Bounds, Stuck, OutOfFuel };
const char* outcome_name(OutcomeKind k);

struct TraceEntry {
    size_t index = 0;
    Mode mode = Mode::C;
    std::string rule;
    ExprP redex;
};

struct Outcome {
    OutcomeKind kind = OutcomeKind::Stuck;
    Value value;
    Config final_cfg;
    size_t steps = 0;
    std::string detail;
    std::vector<TraceEntry> trace;
};

Config initial_config(const Program& p);
Outcome run(Config cfg, const FunStore& funs, size_t fuel, FaultPolicy policy, bool record_trace = false);
Outcome eval(const Program& p, size_t fuel, FaultPolicy policy = {}, bool record_trace = false);

// Typing environments reconstructed from a machine state.
struct RuntimeView {
    TypeEnv gamma;
    PredEnv theta;
    RetViews views;
};

RuntimeView runtime_view(const Config& cfg);
// Types a machine expression at mode c. Throws TypeError.
TypeP type_of_config(const Config& cfg, const FunStore& funs);

}  // namespace chkbox
