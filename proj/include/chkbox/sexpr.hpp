#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace chkbox {

struct ParseError : std::runtime_error {
    int line;
    int col;
    ParseError(int line, int col, const std::string& msg);
};

// A parenthesized term. Atoms keep their source text; lists keep children.
struct SExpr {
    bool is_list = false;
    std::string atom;
    std::vector<SExpr> items;
    int line = 0;
    int col = 0;

    bool is_atom() const { return !is_list; }
    bool is_int() const;
    int64_t as_int() const;
    bool is_symbol() const;
    bool head_is(const char* name) const;
    [[noreturn]] void fail(const std::string& msg) const;
};

// Reads every top-level form in text. ';' starts a line comment.
std::vector<SExpr> read_sexprs(const std::string& text);

bool is_identifier(const std::string& s);

}  // namespace chkbox
