#pragma once

#include <algorithm>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gvb/error.hpp"
#include "gvb/rational.hpp"

namespace gvb {

/// Interned identifier. Ordering is by name so canonical forms do not depend
/// on interning order.
class Symbol {
public:
    Symbol() : name_(intern("")) {}
    explicit Symbol(std::string_view name) : name_(intern(name)) {}

    const std::string& name() const { return *name_; }

    friend bool operator==(Symbol a, Symbol b) { return a.name_ == b.name_; }
    friend bool operator!=(Symbol a, Symbol b) { return a.name_ != b.name_; }
    friend bool operator<(Symbol a, Symbol b) { return a.name_ != b.name_ && *a.name_ < *b.name_; }

private:
    static const std::string* intern(std::string_view s) {
        static std::mutex mu;
        static std::unordered_set<std::string> table;
        std::lock_guard<std::mutex> lock(mu);
        return &*table.emplace(s).first;
    }

    const std::string* name_;
};

/// Sparse monomial: (symbol, exponent) pairs sorted by symbol, exponents > 0.
class Monomial {
public:
    using Entry = std::pair<Symbol, unsigned>;

    Monomial() = default;
    static Monomial of(Symbol s, unsigned e = 1) {
        Monomial m;
        if (e > 0) m.powers_.push_back({s, e});
        return m;
    }

    const std::vector<Entry>& powers() const { return powers_; }
    bool is_one() const { return powers_.empty(); }

    unsigned total_degree() const {
        unsigned d = 0;
        for (auto& [s, e] : powers_) d += e;
        return d;
    }

    unsigned exponent(Symbol s) const {
        for (auto& [t, e] : powers_)
            if (t == s) return e;
        return 0;
    }

    friend Monomial operator*(const Monomial& a, const Monomial& b) {
        Monomial out;
        out.powers_.reserve(a.powers_.size() + b.powers_.size());
        auto i = a.powers_.begin(), j = b.powers_.begin();
        while (i != a.powers_.end() && j != b.powers_.end()) {
            if (i->first == j->first) {
                out.powers_.push_back({i->first, i->second + j->second});
                ++i, ++j;
            } else if (i->first < j->first) {
                out.powers_.push_back(*i++);
            } else {
                out.powers_.push_back(*j++);
            }
        }
        out.powers_.insert(out.powers_.end(), i, a.powers_.end());
        out.powers_.insert(out.powers_.end(), j, b.powers_.end());
        return out;
    }

    bool divides(const Monomial& b) const {
        for (auto& [s, e] : powers_)
            if (b.exponent(s) < e) return false;
        return true;
    }

    /// b / this, assuming divides(b).
    Monomial quotient_of(const Monomial& b) const {
        Monomial out;
        for (auto& [s, e] : b.powers_) {
            unsigned d = e - exponent(s);
            if (d > 0) out.powers_.push_back({s, d});
        }
        return out;
    }

    Monomial without(Symbol s) const {
        Monomial out;
        for (auto& p : powers_)
            if (p.first != s) out.powers_.push_back(p);
        return out;
    }

    friend bool operator==(const Monomial& a, const Monomial& b) { return a.powers_ == b.powers_; }

    std::string to_string() const {
        std::string out;
        for (auto& [s, e] : powers_) {
            if (!out.empty()) out += "*";
            out += s.name();
            if (e > 1) out += "^" + std::to_string(e);
        }
        return out;
    }

private:
    std::vector<Entry> powers_;
};

/// Graded-lex comparison; the alphabetically first symbol is the largest variable.
inline int grlex_cmp(const Monomial& a, const Monomial& b) {
    unsigned da = a.total_degree(), db = b.total_degree();
    if (da != db) return da < db ? -1 : 1;
    auto& pa = a.powers();
    auto& pb = b.powers();
    std::size_t i = 0;
    for (; i < pa.size() && i < pb.size(); ++i) {
        if (pa[i].first == pb[i].first) {
            if (pa[i].second != pb[i].second) return pa[i].second < pb[i].second ? -1 : 1;
        } else {
            return pa[i].first < pb[i].first ? 1 : -1;
        }
    }
    if (i < pa.size()) return 1;
    if (i < pb.size()) return -1;
    return 0;
}

struct GrlexGreater {
    bool operator()(const Monomial& a, const Monomial& b) const { return grlex_cmp(a, b) > 0; }
};

/// Sparse multivariate polynomial over Q, terms sorted by descending grlex.
class Poly {
public:
    struct Term {
        Monomial mono;
        Rational coeff;
        friend bool operator==(const Term&, const Term&) = default;
    };

    Poly() = default;
    static Poly constant(const Rational& c) {
        Poly p;
        if (c != 0) p.terms_.push_back({Monomial(), c});
        return p;
    }
    static Poly variable(Symbol s) {
        Poly p;
        p.terms_.push_back({Monomial::of(s), Rational(1)});
        return p;
    }
    static Poly term(const Monomial& m, const Rational& c) {
        Poly p;
        if (c != 0) p.terms_.push_back({m, c});
        return p;
    }
    static Poly from_map(std::map<Monomial, Rational, GrlexGreater>&& acc) {
        Poly p;
        p.terms_.reserve(acc.size());
        for (auto& [m, c] : acc)
            if (c != 0) p.terms_.push_back({m, std::move(c)});
        return p;
    }

    const std::vector<Term>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_[0].mono.is_one()); }
    Rational constant_value() const { return terms_.empty() ? Rational(0) : terms_.back().mono.is_one() ? terms_.back().coeff : Rational(0); }
    const Term& leading() const { return terms_.front(); }
    Rational leading_coeff() const { return terms_.empty() ? Rational(0) : terms_.front().coeff; }

    unsigned total_degree() const { return terms_.empty() ? 0 : terms_.front().mono.total_degree(); }

    std::set<Symbol> variables() const {
        std::set<Symbol> out;
        for (auto& t : terms_)
            for (auto& [s, e] : t.mono.powers()) out.insert(s);
        return out;
    }

    unsigned degree_in(Symbol s) const {
        unsigned d = 0;
        for (auto& t : terms_) d = std::max(d, t.mono.exponent(s));
        return d;
    }

    /// Coefficient of s^k, as a polynomial free of s.
    Poly coeff_in(Symbol s, unsigned k) const {
        std::map<Monomial, Rational, GrlexGreater> acc;
        for (auto& t : terms_)
            if (t.mono.exponent(s) == k) acc[t.mono.without(s)] += t.coeff;
        return from_map(std::move(acc));
    }

    std::map<unsigned, Poly> split(Symbol s) const {
        std::map<unsigned, std::map<Monomial, Rational, GrlexGreater>> acc;
        for (auto& t : terms_) acc[t.mono.exponent(s)][t.mono.without(s)] += t.coeff;
        std::map<unsigned, Poly> out;
        for (auto& [k, m] : acc) out.emplace(k, from_map(std::move(m)));
        return out;
    }

    Poly operator-() const {
        Poly p = *this;
        for (auto& t : p.terms_) t.coeff = -t.coeff;
        return p;
    }

    Poly scaled(const Rational& c) const {
        if (c == 0) return Poly();
        Poly p = *this;
        for (auto& t : p.terms_) t.coeff *= c;
        return p;
    }

    friend Poly operator+(const Poly& a, const Poly& b) { return merge(a, b, false); }
    friend Poly operator-(const Poly& a, const Poly& b) { return merge(a, b, true); }

    friend Poly operator*(const Poly& a, const Poly& b) {
        if (a.is_zero() || b.is_zero()) return Poly();
        if (a.is_constant()) return b.scaled(a.constant_value());
        if (b.is_constant()) return a.scaled(b.constant_value());
        std::map<Monomial, Rational, GrlexGreater> acc;
        for (auto& s : a.terms_)
            for (auto& t : b.terms_) acc[s.mono * t.mono] += s.coeff * t.coeff;
        return from_map(std::move(acc));
    }

    Poly times_term(const Monomial& m, const Rational& c) const {
        Poly p;
        if (c == 0) return p;
        p.terms_.reserve(terms_.size());
        for (auto& t : terms_) p.terms_.push_back({t.mono * m, t.coeff * c});
        return p;
    }

    Poly pow(unsigned n) const {
        Poly result = constant(1), base = *this;
        while (n) {
            if (n & 1) result = result * base;
            n >>= 1;
            if (n) base = base * base;
        }
        return result;
    }

    Poly derivative(Symbol s) const {
        std::map<Monomial, Rational, GrlexGreater> acc;
        for (auto& t : terms_) {
            unsigned e = t.mono.exponent(s);
            if (e == 0) continue;
            acc[Monomial::of(s).quotient_of(t.mono)] += t.coeff * e;
        }
        return from_map(std::move(acc));
    }

    template <class Lookup>
    Rational evaluate_with(Lookup&& value_of) const {
        Rational total = 0;
        for (auto& t : terms_) {
            Rational v = t.coeff;
            for (auto& [s, e] : t.mono.powers()) {
                Rational x = value_of(s);
                Rational p = 1;
                for (unsigned i = 0; i < e; ++i) p *= x;
                v *= p;
            }
            total += v;
        }
        return total;
    }

    friend bool operator==(const Poly& a, const Poly& b) { return a.terms_ == b.terms_; }

    std::string to_string() const {
        if (terms_.empty()) return "0";
        std::string out;
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            std::string t = term_string(terms_[i]);
            if (i == 0) out = t;
            else if (t[0] == '-') out += " - " + t.substr(1);
            else out += " + " + t;
        }
        return out;
    }

    static std::string term_string(const Term& t) {
        if (t.mono.is_one()) return gvb::to_string(t.coeff);
        if (t.coeff == 1) return t.mono.to_string();
        if (t.coeff == -1) return "-" + t.mono.to_string();
        return gvb::to_string(t.coeff) + "*" + t.mono.to_string();
    }

private:
    static Poly merge(const Poly& a, const Poly& b, bool subtract) {
        Poly out;
        out.terms_.reserve(a.terms_.size() + b.terms_.size());
        auto i = a.terms_.begin(), j = b.terms_.begin();
        while (i != a.terms_.end() || j != b.terms_.end()) {
            int c;
            if (i == a.terms_.end()) c = -1;
            else if (j == b.terms_.end()) c = 1;
            else c = grlex_cmp(i->mono, j->mono);
            if (c > 0) {
                out.terms_.push_back(*i++);
            } else if (c < 0) {
                out.terms_.push_back({j->mono, subtract ? Rational(-j->coeff) : j->coeff});
                ++j;
            } else {
                Rational s = subtract ? Rational(i->coeff - j->coeff) : Rational(i->coeff + j->coeff);
                if (s != 0) out.terms_.push_back({i->mono, s});
                ++i, ++j;
            }
        }
        return out;
    }

    std::vector<Term> terms_;
};

inline Poly monic(const Poly& p) {
    if (p.is_zero()) return p;
    return p.scaled(1 / p.leading_coeff());
}

/// a / b when b divides a exactly; throws otherwise.
inline Poly exact_div(const Poly& a, const Poly& b) {
    if (b.is_zero()) throw DomainError("division by zero polynomial");
    if (b.is_constant()) return a.scaled(1 / b.constant_value());
    Poly q, r = a;
    const auto& lb = b.leading();
    while (!r.is_zero()) {
        const auto& lr = r.leading();
        if (!lb.mono.divides(lr.mono)) throw Error("inexact polynomial division");
        Monomial m = lb.mono.quotient_of(lr.mono);
        Rational c = lr.coeff / lb.coeff;
        q = q + Poly::term(m, c);
        r = r - b.times_term(m, c);
    }
    return q;
}

/// Pseudo-remainder of p by q with respect to the main variable v.
inline Poly pseudo_rem(const Poly& p, const Poly& q, Symbol v) {
    unsigned n = q.degree_in(v);
    Poly lcq = q.coeff_in(v, n);
    Poly r = p;
    while (!r.is_zero()) {
        unsigned d = r.degree_in(v);
        if (d < n) break;
        Poly lcr = r.coeff_in(v, d);
        r = r * lcq - (lcr * q).times_term(Monomial::of(v, d - n), 1);
    }
    return r;
}

inline Poly poly_gcd(const Poly& a, const Poly& b);

inline Poly content_in(const Poly& p, Symbol v) {
    Poly g;
    for (auto& [k, c] : p.split(v)) {
        g = poly_gcd(g, c);
        if (g.is_constant()) break;
    }
    return g;
}

inline Poly primitive_part(const Poly& p, Symbol v) {
    if (p.is_zero()) return p;
    return exact_div(p, content_in(p, v));
}

/// Monic gcd over Q via recursive content and primitive pseudo-remainder sequences.
inline Poly poly_gcd(const Poly& a, const Poly& b) {
    if (a.is_zero()) return monic(b);
    if (b.is_zero()) return monic(a);
    if (a.is_constant() || b.is_constant()) return Poly::constant(1);
    if (a == b) return monic(a);
    auto va = a.variables(), vb = b.variables();
    Symbol v = std::min(*va.begin(), *vb.begin());
    if (!va.count(v)) return poly_gcd(a, content_in(b, v));
    if (!vb.count(v)) return poly_gcd(content_in(a, v), b);
    Poly ca = content_in(a, v), cb = content_in(b, v);
    Poly c = poly_gcd(ca, cb);
    Poly p = exact_div(a, ca), q = exact_div(b, cb);
    if (p.degree_in(v) < q.degree_in(v)) std::swap(p, q);
    while (true) {
        Poly r = pseudo_rem(p, q, v);
        if (r.is_zero()) break;
        if (r.degree_in(v) == 0) {
            q = Poly::constant(1);
            break;
        }
        p = std::move(q);
        q = primitive_part(r, v);
    }
    return monic(c * q);
}

}  // namespace gvb
