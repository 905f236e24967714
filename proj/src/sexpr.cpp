#include "chkbox/sexpr.hpp"

#include <cctype>
#include <charconv>

namespace chkbox {

ParseError::ParseError(int line, int col, const std::string& msg)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
      line(line),
      col(col) {}

bool SExpr::is_int() const {
    if (is_list || atom.empty()) return false;
    size_t i = (atom[0] == '-' || atom[0] == '+') ? 1 : 0;
    if (i == atom.size()) return false;
    for (; i < atom.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(atom[i]))) return false;
    return true;
}

int64_t SExpr::as_int() const {
    if (!is_int()) fail("expected integer, got '" + (is_list ? std::string("(...)") : atom) + "'");
    int64_t v = 0;
    const char* b = atom.data() + (atom[0] == '+' ? 1 : 0);
    auto [p, ec] = std::from_chars(b, atom.data() + atom.size(), v);
    if (ec != std::errc() || p != atom.data() + atom.size())
        fail("integer out of 64-bit range: " + atom);
    return v;
}

bool SExpr::is_symbol() const { return !is_list && !atom.empty() && !is_int(); }

bool SExpr::head_is(const char* name) const {
    return is_list && !items.empty() && items[0].is_atom() && items[0].atom == name;
}

void SExpr::fail(const std::string& msg) const { throw ParseError(line, col, msg); }

bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

namespace {

struct Reader {
    const std::string& src;
    size_t pos = 0;
    int line = 1;
    int col = 1;

    void advance() {
        if (src[pos] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        ++pos;
    }

    void skip_space() {
        while (pos < src.size()) {
            char c = src[pos];
            if (c == ';') {
                while (pos < src.size() && src[pos] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    SExpr read() {
        skip_space();
        if (pos >= src.size()) throw ParseError(line, col, "unexpected end of input");
        SExpr e;
        e.line = line;
        e.col = col;
        char c = src[pos];
        if (c == ')') throw ParseError(line, col, "unexpected ')'");
        if (c == '(') {
            advance();
            e.is_list = true;
            for (;;) {
                skip_space();
                if (pos >= src.size()) throw ParseError(e.line, e.col, "unclosed '('");
                if (src[pos] == ')') {
                    advance();
                    break;
                }
                e.items.push_back(read());
            }
            return e;
        }
        while (pos < src.size()) {
            char d = src[pos];
            if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';') break;
            e.atom.push_back(d);
            advance();
        }
        return e;
    }
};

}  // namespace

std::vector<SExpr> read_sexprs(const std::string& text) {
    Reader r{text};
    std::vector<SExpr> out;
    for (;;) {
        r.skip_space();
        if (r.pos >= text.size()) break;
        out.push_back(r.read());
    }
    return out;
}

}  // namespace chkbox
