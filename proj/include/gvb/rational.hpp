#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>

#include "gvb/error.hpp"

namespace gvb {

using Rational = mpq_class;
using Integer = mpz_class;

inline Rational make_rational(long num, long den = 1) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

// Accepts "n" or "n/d" with an optional leading '-'.
inline Rational parse_rational(std::string_view text) {
    Rational q;
    std::string s(text);
    if (s.empty() || q.set_str(s, 10) != 0) throw Error("malformed rational '" + s + "'");
    if (q.get_den() == 0) throw DomainError("zero denominator in '" + s + "'");
    q.canonicalize();
    return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(10); }

inline bool is_integer(const Rational& q) { return q.get_den() == 1; }

inline int sign(const Rational& q) { return sgn(q); }

}  // namespace gvb
