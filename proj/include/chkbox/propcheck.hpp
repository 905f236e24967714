#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chkbox/ast.hpp"
#include "chkbox/corec.hpp"
#include "chkbox/gen.hpp"
#include "chkbox/machine.hpp"

namespace chkbox {

enum class Verdict { Pass, Fail, Inconclusive };

struct CheckResult {
    Verdict verdict = Verdict::Pass;
    std::string detail;
    size_t steps = 0;
    std::vector<std::string> trace;  // rule names up to the failure
};

// Typechecking is not repeated here; callers that want a negative control
// pass ill-typed programs directly.
CheckResult check_progress(const Program& p, size_t fuel);
CheckResult check_preservation(const Program& p, size_t fuel);
CheckResult check_unchecked_preservation(const Program& p, size_t fuel, FaultPolicy policy);
CheckResult check_non_exposure(const Program& p, size_t fuel, FaultPolicy policy);
CheckResult check_non_crashing(const Program& p, size_t fuel, FaultPolicy policy);
CheckResult check_simulation(const Program& p, size_t fuel, size_t join_budget);

// Single non-exposure test for one U-mode redex against a stack.
bool exposes_checked(const Stack& stack, const ExprP& redex);

// Heap-wide checked consistency: every region-c cell of checked pointer
// type is const-valid at c.
bool checked_heap_consistent(const Heap& h, const FunStore& funs);

// Normalized key of a CoreC state for join comparison.
std::string join_key(const corec::CConfig& cfg);

enum class JoinResult { Joined, Mismatch, BudgetExceeded };
JoinResult joinable(const corec::CConfig& a, const corec::CConfig& b, const corec::CFunStore& funs, size_t budget);

struct Failure {
    uint64_t index = 0;
    std::string program;
    std::string detail;
    std::vector<std::string> trace;
};

struct CheckReport {
    std::string property;
    size_t cases = 0;
    size_t inconclusive = 0;
    std::vector<Failure> failures;
    std::vector<uint64_t> inconclusive_cases;
    double seconds = 0;
};

struct SuiteOptions {
    GenConfig gen;
    size_t fuel = 2000;
    size_t join_budget = 256;
    std::vector<double> crash_rates{0.25, 1.0};
    uint64_t fault_seed = 7;
    unsigned threads = 0;  // 0: hardware concurrency
};

// Property names: progress, preservation, uncheckedpres, nonexposure,
// noncrash, simulation.
std::vector<std::string> all_properties();
CheckReport run_property(const std::string& property, const SuiteOptions& opt);

std::string report_json(const std::vector<CheckReport>& reports, const SuiteOptions& opt);

// Deductive bound_le against brute force over valuations in [-8, 8].
struct BoundLeStats {
    size_t instances = 0;
    size_t deduced = 0;
    size_t violations = 0;
    std::vector<std::string> examples;
};
BoundLeStats check_bound_le_soundness(uint64_t seed, size_t count);

}  // namespace chkbox
