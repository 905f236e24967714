#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "chkbox/ast.hpp"

namespace chkbox {

// Region holding data reached through a pointer of mode m.
inline Mode region_of(Mode m) { return m == Mode::C ? Mode::C : Mode::U; }

// Two-region heap with a bump allocator per region. Address 0 is never used.
struct Heap {
    std::map<int64_t, Value> c, u;
    int64_t next_c = 1, next_u = 1;

    std::map<int64_t, Value>& cells(Mode r) { return r == Mode::C ? c : u; }
    const std::map<int64_t, Value>& cells(Mode r) const { return r == Mode::C ? c : u; }

    const Value* get(Mode r, int64_t addr) const {
        auto& m = cells(r);
        auto it = m.find(addr);
        return it == m.end() ? nullptr : &it->second;
    }

    void put(Mode r, int64_t addr, Value v) {
        cells(r)[addr] = std::move(v);
        int64_t& next = r == Mode::C ? next_c : next_u;
        if (addr >= next) next = addr + 1;
    }

    int64_t alloc(Mode r, const std::vector<Value>& block) {
        int64_t& next = r == Mode::C ? next_c : next_u;
        int64_t base = next;
        for (size_t i = 0; i < block.size(); ++i) cells(r)[base + static_cast<int64_t>(i)] = block[i];
        next = base + static_cast<int64_t>(block.size());
        return base;
    }
};

struct FunStore {
    std::map<int64_t, FunDef> c, u;

    const FunDef* get(Mode r, int64_t addr) const {
        auto& m = r == Mode::C ? c : u;
        auto it = m.find(addr);
        return it == m.end() ? nullptr : &it->second;
    }
};

Heap heap_of(const Program& p);
FunStore funs_of(const Program& p);

}  // namespace chkbox
