#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "chkbox/compiler.hpp"
#include "chkbox/propcheck.hpp"

using namespace chkbox;

namespace {

enum Exit { Ok = 0, TypeFail = 1, PropertyFail = 2, Internal = 3 };

bool color() {
    const char* v = std::getenv("CHKBOX_COLOR");
    if (v && std::string(v) == "0") return false;
    return isatty(STDOUT_FILENO);
}

std::string paint(const std::string& s, const char* code) {
    return color() ? std::string("\x1b[") + code + "m" + s + "\x1b[0m" : s;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Parses and typechecks; prints the error and returns nullopt on failure.
std::optional<std::pair<Program, TypeP>> load(const std::string& path) {
    try {
        Program p = parse_program(slurp(path));
        TypeP t = check_program(p);
        return std::make_pair(std::move(p), t);
    } catch (const ParseError& e) {
        std::cerr << path << ":" << e.line << ":" << e.col << ": parse error: " << e.what() << "\n";
    } catch (const TypeError& e) {
        std::cerr << paint("type error", "31") << ": " << e.what() << "\n";
    }
    return std::nullopt;
}

int print_outcome(OutcomeKind k, const std::string& value, const std::string& detail) {
    switch (k) {
        case OutcomeKind::Value: std::cout << "value " << value << "\n"; return Ok;
        case OutcomeKind::Null: std::cout << "null\n"; return Ok;
        case OutcomeKind::Bounds: std::cout << "bounds\n"; return Ok;
        case OutcomeKind::OutOfFuel: std::cout << "out-of-fuel\n"; return Ok;
        case OutcomeKind::Stuck: std::cout << paint("stuck", "31") << ": " << detail << "\n"; return PropertyFail;
    }
    return Internal;
}

int cmd_typecheck(const std::string& file) {
    auto r = load(file);
    if (!r) return TypeFail;
    std::cout << "ok: " << print_type(r->second) << "\n";
    return Ok;
}

int cmd_run(const std::string& file, size_t fuel, double rate, uint64_t seed, bool trace) {
    auto r = load(file);
    if (!r) return TypeFail;
    Outcome o = eval(r->first, fuel, FaultPolicy{rate, seed}, trace);
    for (auto& t : o.trace)
        std::cout << t.index << "\t" << mode_name(t.mode) << "\t" << t.rule << "\t"
                  << (t.redex ? print_expr(t.redex) : "") << "\n";
    std::string v;
    if (o.kind == OutcomeKind::Value) v = std::to_string(o.value.n) + " : " + print_type(o.value.type);
    return print_outcome(o.kind, v, o.detail);
}

int cmd_compile(const std::string& file, const std::string& out) {
    auto r = load(file);
    if (!r) return TypeFail;
    std::string text;
    try {
        text = corec::print_cprogram(compile_program(r->first));
    } catch (const CompileError& e) {
        std::cerr << "compile error: " << e.what() << "\n";
        return TypeFail;
    }
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream o(out);
        o << text;
    }
    return Ok;
}

int cmd_runc(const std::string& file, size_t fuel) {
    corec::CProgram p;
    try {
        p = corec::parse_cprogram(slurp(file));
    } catch (const ParseError& e) {
        std::cerr << file << ":" << e.line << ":" << e.col << ": parse error: " << e.what() << "\n";
        return TypeFail;
    }
    corec::COutcome o = corec::eval_corec(p, fuel);
    return print_outcome(o.kind, std::to_string(o.value), o.detail);
}

int cmd_fuzz(SuiteOptions opt, const std::string& check, const std::string& report) {
    std::vector<std::string> props;
    if (check == "all")
        props = all_properties();
    else
        props = {check};
    std::vector<CheckReport> reps;
    bool ok = true;
    for (auto& p : props) {
        CheckReport r = run_property(p, opt);
        bool pass = r.failures.empty();
        ok = ok && pass;
        std::cout << (pass ? paint("PASS", "32") : paint("FAIL", "31")) << " " << p << ": " << r.cases << " cases, "
                  << r.failures.size() << " failures, " << r.inconclusive << " inconclusive\n";
        for (auto& f : r.failures) std::cout << "  case " << f.index << ": " << f.detail << "\n";
        reps.push_back(std::move(r));
    }
    if (!report.empty()) {
        std::ofstream o(report);
        o << report_json(reps, opt) << "\n";
    }
    return ok ? Ok : PropertyFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chkbox: checked/tainted/unchecked pointer calculus toolkit"};
    app.require_subcommand(1);

    std::string file, out, check = "all", report;
    size_t fuel = 10000;
    double rate = 0;
    uint64_t fault_seed = 0;
    bool trace = false;

    auto* tc = app.add_subcommand("typecheck", "print the type of main");
    tc->add_option("file", file)->required();

    auto* run = app.add_subcommand("run", "evaluate a program");
    run->add_option("file", file)->required();
    run->add_option("--fuel", fuel);
    run->add_option("--crash-rate", rate)->check(CLI::Range(0.0, 1.0));
    run->add_option("--fault-seed", fault_seed);
    run->add_flag("--trace", trace);

    auto* comp = app.add_subcommand("compile", "lower to the target language");
    comp->add_option("file", file)->required();
    comp->add_option("-o", out);

    auto* runc = app.add_subcommand("runc", "evaluate a compiled program");
    runc->add_option("file", file)->required();
    runc->add_option("--fuel", fuel);

    SuiteOptions opt;
    auto* fuzz = app.add_subcommand("fuzz", "randomized property checks");
    fuzz->add_option("--count", opt.gen.count);
    fuzz->add_option("--max-depth", opt.gen.max_depth);
    fuzz->add_option("--seed", opt.gen.seed);
    fuzz->add_option("--check", check)
        ->check(CLI::IsMember({"progress", "preservation", "uncheckedpres", "nonexposure", "noncrash", "simulation",
                               "all"}));
    fuzz->add_option("--report", report);
    fuzz->add_option("--fuel", opt.fuel);
    fuzz->add_option("--join-budget", opt.join_budget);
    fuzz->add_option("--crash-rates", opt.crash_rates);
    fuzz->add_option("--fault-seed", opt.fault_seed);
    fuzz->add_option("--threads", opt.threads);

    CLI11_PARSE(app, argc, argv);

    try {
        if (tc->parsed()) return cmd_typecheck(file);
        if (run->parsed()) return cmd_run(file, fuel, rate, fault_seed, trace);
        if (comp->parsed()) return cmd_compile(file, out);
        if (runc->parsed()) return cmd_runc(file, fuel);
        if (fuzz->parsed()) return cmd_fuzz(opt, check, report);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return Internal;
    }
    return Internal;
}
