#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "chkbox/ast.hpp"

namespace chkbox {

struct GenConfig {
    uint64_t seed = 1;
    int max_depth = 8;
    size_t count = 100;
    bool arrays = true;
    bool nt_arrays = true;
    bool fun_ptrs = true;
    bool tainted_ptrs = true;
    bool unchecked = false;  // unchecked blocks in main
    int retries = 64;
};

// Generates one well-typed program for case `index`. The result depends only
// on (cfg.seed, index). nullopt when the retry budget runs out.
std::optional<Program> gen_program(const GenConfig& cfg, uint64_t index);

// Per-form node counts, keyed by form name ("let", "deref", ...).
std::map<std::string, size_t> form_counts(const Program& p);

uint64_t case_seed(uint64_t seed, uint64_t index);

}  // namespace chkbox
