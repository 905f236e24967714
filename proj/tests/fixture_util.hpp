#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "chkbox/machine.hpp"
#include "chkbox/typecheck.hpp"

namespace fixtures {

namespace fs = std::filesystem;

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Leading "; key: value" comment lines.
inline std::map<std::string, std::string> header(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("; ", 0) != 0) break;
        auto colon = line.find(": ");
        if (colon == std::string::npos) continue;
        out[line.substr(2, colon - 2)] = line.substr(colon + 2);
    }
    return out;
}

inline std::vector<fs::path> files(const fs::path& dir) {
    std::vector<fs::path> out;
    for (auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".chk") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

struct StepCheck {
    std::string rule;
    bool ok = false;
    std::string message;
};

// Runs until the named rule fires; compares the step result with the
// fixture's `after` expression or `result` failure kind.
inline StepCheck check_step_fixture(const fs::path& path) {
    using namespace chkbox;
    std::string text = slurp(path);
    auto h = header(text);
    StepCheck r;
    r.rule = h["rule"];
    Program p;
    try {
        p = parse_program(text);
        check_program(p);
    } catch (const std::exception& e) {
        r.message = std::string("fixture does not typecheck: ") + e.what();
        return r;
    }
    double rate = h.count("crash-rate") ? std::stod(h["crash-rate"]) : 0.0;
    FunStore funs = funs_of(p);
    Config cfg = initial_config(p);
    FaultSource faults(FaultPolicy{rate, 0});
    for (int i = 0; i < 200; ++i) {
        Step s = step(cfg, funs, &faults);
        if (s.kind == StepKind::Value) break;
        if (s.rule == r.rule) {
            std::string got;
            switch (s.kind) {
                case StepKind::Stepped:
                case StepKind::Fault: got = print_expr(s.next.expr); break;
                case StepKind::Null: got = "null"; break;
                case StepKind::Bounds: got = "bounds"; break;
                default: got = "stuck"; break;
            }
            std::string want = h.count("result") ? h["result"] : h["after"];
            r.ok = got == want;
            if (!r.ok) r.message = "expected " + want + ", got " + got;
            return r;
        }
        if (s.kind != StepKind::Stepped && s.kind != StepKind::Fault) break;
        cfg = std::move(s.next);
    }
    r.message = "rule " + r.rule + " never fired";
    return r;
}

struct TypingCheck {
    std::string rule;
    bool accept = false;
    bool ok = false;
    std::string message;
};

inline TypingCheck check_typing_fixture(const fs::path& path) {
    using namespace chkbox;
    std::string text = slurp(path);
    auto h = header(text);
    TypingCheck r;
    r.accept = h.count("accept") > 0;
    r.rule = r.accept ? h["accept"] : h["reject"];
    try {
        Program p = parse_program(text);
        TypeP t = check_program(p);
        // Machine-state fixtures: step, optionally drop a stack binding, retype.
        if (h.count("steps")) {
            FunStore funs = funs_of(p);
            Config cfg = initial_config(p);
            for (int i = std::stoi(h["steps"]); i > 0; --i) {
                Step s = step(cfg, funs, nullptr);
                if (s.kind != StepKind::Stepped) throw std::runtime_error("fixture stopped early");
                cfg = std::move(s.next);
            }
            if (h.count("drop")) cfg.stack.erase(h["drop"]);
            t = type_of_config(cfg, funs);
        }
        if (!r.accept) {
            r.message = "accepted with type " + print_type(t);
            return r;
        }
        r.ok = !h.count("type") || print_type(t) == h["type"];
        if (!r.ok) r.message = "type " + print_type(t) + ", expected " + h["type"];
    } catch (const TypeError& e) {
        r.ok = !r.accept && e.rule == r.rule;
        if (!r.ok) r.message = e.what();
    } catch (const std::exception& e) {
        r.message = e.what();
    }
    return r;
}

}  // namespace fixtures
