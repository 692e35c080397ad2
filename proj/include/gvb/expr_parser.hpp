#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>

#include "gvb/error.hpp"
#include "gvb/rational.hpp"

namespace gvb {

/// Recursive-descent parser for the arithmetic grammar
///   expr   := ['-'] term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := base ('^' nonneg-int)?
///   base   := rational | identifier | '(' expr ')'
///   rational := int ('/' positive-int)?
/// The value type is supplied by an Algebra with number, ident, add, sub, mul,
/// div, pow and neg members.
template <class Algebra>
class ExprParser {
public:
    using Value = typename Algebra::Value;

    ExprParser(std::string_view text, Algebra& alg) : s_(text), alg_(alg) {}

    Value parse() {
        Value v = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError("syntax error: " + msg, pos_); }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip();
        return pos_ < s_.size() && s_[pos_] == c;
    }

    bool accept(char c) {
        if (!peek(c)) return false;
        ++pos_;
        return true;
    }

    bool peek_digit() {
        skip();
        return pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]));
    }

    std::string digits() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        return std::string(s_.substr(start, pos_ - start));
    }

    Value expr() {
        Value v = accept('-') ? alg_.neg(term()) : term();
        while (true) {
            if (accept('+')) v = alg_.add(v, term());
            else if (accept('-')) v = alg_.sub(v, term());
            else return v;
        }
    }

    Value term() {
        Value v = factor();
        while (true) {
            if (accept('*')) {
                v = alg_.mul(v, factor());
            } else if (peek('/')) {
                std::size_t at = pos_++;
                Value d = factor();
                v = alg_.div(v, d, at);
            } else {
                return v;
            }
        }
    }

    Value factor() {
        Value b = base();
        if (accept('^')) {
            if (!peek_digit()) fail("expected nonnegative integer exponent");
            std::string e = digits();
            if (e.size() > 6) fail("exponent too large");
            b = alg_.pow(b, static_cast<unsigned>(std::stoul(e)));
        }
        return b;
    }

    Value base() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string num = digits();
            std::size_t save = pos_;
            if (accept('/') && peek_digit()) {
                std::size_t dpos = pos_;
                std::string den = digits();
                Integer d(den);
                if (d == 0) {
                    pos_ = dpos;
                    fail("zero denominator in rational literal");
                }
                Rational q{Integer(num), d};
                q.canonicalize();
                return alg_.number(q);
            }
            pos_ = save;
            return alg_.number(Rational(Integer(num)));
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            return alg_.ident(s_.substr(start, pos_ - start), start);
        }
        if (c == '(') {
            ++pos_;
            Value v = expr();
            if (!accept(')')) fail("expected ')'");
            return v;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    std::string_view s_;
    Algebra& alg_;
    std::size_t pos_ = 0;
};

}  // namespace gvb
