#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gvb/error.hpp"
#include "gvb/expr_parser.hpp"
#include "gvb/poly.hpp"
#include "gvb/rational.hpp"

namespace gvb {

/// Rational assignment to degree-zero symbols, keyed by name.
using Point = std::map<std::string, Rational>;

inline std::string point_to_string(const Point& p) {
    std::string out;
    for (auto& [k, v] : p) {
        if (!out.empty()) out += ", ";
        out += k + "=" + to_string(v);
    }
    return out;
}

/// Reduced fraction num/den of polynomials over Q. The denominator is monic in
/// grlex order and coprime to the numerator; zero is 0/1.
class CoeffExpr {
public:
    CoeffExpr() : den_(Poly::constant(1)) {}
    CoeffExpr(const Rational& c) : num_(Poly::constant(c)), den_(Poly::constant(1)) {}
    CoeffExpr(long c) : CoeffExpr(Rational(c)) {}
    CoeffExpr(int c) : CoeffExpr(Rational(c)) {}
    explicit CoeffExpr(const Poly& p) : num_(p), den_(Poly::constant(1)) {}

    static CoeffExpr symbol(Symbol s) { return CoeffExpr(Poly::variable(s)); }
    static CoeffExpr symbol(std::string_view name) { return symbol(Symbol(name)); }

    static CoeffExpr fraction(Poly n, Poly d) {
        if (d.is_zero()) throw DomainError("division by zero");
        CoeffExpr e;
        if (n.is_zero()) return e;
        if (d.is_constant()) {
            e.num_ = n.scaled(1 / d.constant_value());
            return e;
        }
        Poly g = poly_gcd(n, d);
        if (!g.is_constant()) {
            n = exact_div(n, g);
            d = exact_div(d, g);
        }
        Rational lc = d.leading_coeff();
        e.num_ = n.scaled(1 / lc);
        e.den_ = d.scaled(1 / lc);
        return e;
    }

    const Poly& num() const { return num_; }
    const Poly& den() const { return den_; }

    bool is_zero() const { return num_.is_zero(); }
    bool is_constant() const { return num_.is_constant() && den_.is_constant(); }
    bool is_polynomial() const { return den_.is_constant(); }
    bool is_one() const { return is_constant() && num_.constant_value() == 1; }
    Rational constant_value() const {
        if (!is_constant()) throw Error("coefficient is not constant: " + to_string());
        return num_.constant_value();
    }

    std::set<Symbol> symbols() const {
        auto s = num_.variables();
        auto d = den_.variables();
        s.insert(d.begin(), d.end());
        return s;
    }

    CoeffExpr operator-() const {
        CoeffExpr e = *this;
        e.num_ = -e.num_;
        return e;
    }

    friend CoeffExpr operator+(const CoeffExpr& a, const CoeffExpr& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        if (a.is_polynomial() && b.is_polynomial()) return CoeffExpr(a.num_ + b.num_);
        if (a.den_ == b.den_) return fraction(a.num_ + b.num_, a.den_);
        return fraction(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend CoeffExpr operator-(const CoeffExpr& a, const CoeffExpr& b) { return a + (-b); }

    friend CoeffExpr operator*(const CoeffExpr& a, const CoeffExpr& b) {
        if (a.is_zero() || b.is_zero()) return CoeffExpr();
        if (a.is_polynomial() && b.is_polynomial()) return CoeffExpr(a.num_ * b.num_);
        if (a.is_constant()) return b.scaled(a.constant_value());
        if (b.is_constant()) return a.scaled(b.constant_value());
        // cross-cancel so the result is reduced without a full gcd of the products
        Poly g1 = poly_gcd(a.num_, b.den_), g2 = poly_gcd(b.num_, a.den_);
        Poly n = exact_div(a.num_, g1) * exact_div(b.num_, g2);
        Poly d = exact_div(a.den_, g2) * exact_div(b.den_, g1);
        CoeffExpr e;
        Rational lc = d.leading_coeff();
        e.num_ = n.scaled(1 / lc);
        e.den_ = d.scaled(1 / lc);
        return e;
    }

    CoeffExpr inverse() const {
        if (is_zero()) throw DomainError("division by zero");
        return fraction(den_, num_);
    }

    friend CoeffExpr operator/(const CoeffExpr& a, const CoeffExpr& b) {
        if (b.is_zero()) throw DomainError("division by zero");
        if (b.is_constant()) return a.scaled(1 / b.constant_value());
        return a * b.inverse();
    }

    CoeffExpr& operator+=(const CoeffExpr& o) { return *this = *this + o; }
    CoeffExpr& operator-=(const CoeffExpr& o) { return *this = *this - o; }
    CoeffExpr& operator*=(const CoeffExpr& o) { return *this = *this * o; }

    CoeffExpr scaled(const Rational& c) const {
        if (c == 0) return CoeffExpr();
        CoeffExpr e = *this;
        e.num_ = e.num_.scaled(c);
        return e;
    }

    CoeffExpr pow(unsigned n) const {
        CoeffExpr e;
        e.num_ = num_.pow(n);
        e.den_ = den_.pow(n);
        return e;
    }

    /// Partial derivative by the quotient rule.
    CoeffExpr derivative(Symbol s) const {
        Poly dn = num_.derivative(s);
        if (is_polynomial()) return CoeffExpr(dn.scaled(1 / den_.constant_value()));
        Poly dd = den_.derivative(s);
        return fraction(dn * den_ - num_ * dd, den_ * den_);
    }
    CoeffExpr derivative(std::string_view s) const { return derivative(Symbol(s)); }

    Rational evaluate(const Point& p) const {
        auto lookup = [&](Symbol s) -> Rational {
            auto it = p.find(s.name());
            if (it == p.end()) throw DomainError("symbol '" + s.name() + "' not assigned at point");
            return it->second;
        };
        Rational d = den_.evaluate_with(lookup);
        if (d == 0) throw DomainError("division by zero: denominator " + den_.to_string() + " vanishes at (" + point_to_string(p) + ")");
        return num_.evaluate_with(lookup) / d;
    }

    /// Replace symbols by expressions; symbols absent from the map are kept.
    CoeffExpr substitute(const std::map<Symbol, CoeffExpr>& images) const {
        if (images.empty()) return *this;
        std::map<std::pair<Symbol, unsigned>, CoeffExpr> powers;
        auto eval = [&](const Poly& p) {
            CoeffExpr total;
            for (auto& t : p.terms()) {
                CoeffExpr term(t.coeff);
                Poly kept = Poly::constant(1);
                for (auto& [s, e] : t.mono.powers()) {
                    auto it = images.find(s);
                    if (it == images.end()) {
                        kept = kept.times_term(Monomial::of(s, e), 1);
                        continue;
                    }
                    auto key = std::make_pair(s, e);
                    auto pw = powers.find(key);
                    if (pw == powers.end()) pw = powers.emplace(key, it->second.pow(e)).first;
                    term = term * pw->second;
                }
                total = total + term * CoeffExpr(kept);
            }
            return total;
        };
        return eval(num_) / eval(den_);
    }

    /// Polynomial obtained by translating every symbol s to s + p[s].
    static Poly translate(const Poly& poly, const Point& p) {
        Poly out;
        for (auto& t : poly.terms()) {
            Poly term = Poly::constant(t.coeff);
            for (auto& [s, e] : t.mono.powers()) {
                auto it = p.find(s.name());
                Poly base = Poly::variable(s);
                if (it != p.end()) base = base + Poly::constant(it->second);
                term = term * base.pow(e);
            }
            out = out + term;
        }
        return out;
    }

    /// Order of vanishing at p is greater than `order`, i.e. every Taylor
    /// coefficient of total degree <= order is zero.
    bool vanishes_to_order(const Point& p, int order) const {
        if (is_zero()) return true;
        if (order < 0) return true;
        evaluate_den_nonzero(p);
        Poly shifted = translate(num_, p);
        for (auto& t : shifted.terms())
            if (static_cast<int>(t.mono.total_degree()) <= order) return false;
        return true;
    }

    /// Taylor polynomial at p of total order <= n, written in the original symbols.
    CoeffExpr taylor(const Point& p, int n) const {
        if (is_zero() || n < 0) return CoeffExpr();
        evaluate_den_nonzero(p);
        Point back;
        for (auto& [k, v] : p) back[k] = -v;
        Poly num = truncate_degree(translate(num_, p), n);
        if (is_polynomial()) return CoeffExpr(translate(num, back).scaled(1 / den_.constant_value()));
        Poly d = translate(den_, p);
        Rational d0 = 0;
        for (auto& t : d.terms())
            if (t.mono.is_one()) d0 = t.coeff;
        Poly minus_e = Poly::constant(1) - d.scaled(1 / d0);
        Poly inv = Poly::constant(1), power = Poly::constant(1);
        for (int k = 1; k <= n; ++k) {
            power = truncate_degree(power * minus_e, n);
            if (power.is_zero()) break;
            inv = inv + power;
        }
        Poly q = truncate_degree(num * inv, n).scaled(1 / d0);
        return CoeffExpr(translate(q, back));
    }

    static Poly truncate_degree(const Poly& p, int n) {
        std::map<Monomial, Rational, GrlexGreater> acc;
        for (auto& t : p.terms())
            if (static_cast<int>(t.mono.total_degree()) <= n) acc.emplace(t.mono, t.coeff);
        return Poly::from_map(std::move(acc));
    }

    friend bool operator==(const CoeffExpr& a, const CoeffExpr& b) { return a.num_ == b.num_ && a.den_ == b.den_; }
    friend bool operator!=(const CoeffExpr& a, const CoeffExpr& b) { return !(a == b); }

    /// Single monomial term over a unit denominator.
    bool is_monomial() const { return is_polynomial() && num_.terms().size() == 1; }

    std::string to_string() const {
        if (is_polynomial()) return num_.to_string();
        std::string n = num_.terms().size() == 1 ? num_.to_string() : "(" + num_.to_string() + ")";
        const auto& dt = den_.terms();
        bool simple_den = dt.size() == 1 && dt[0].coeff == 1 && dt[0].mono.powers().size() == 1;
        std::string d = simple_den ? den_.to_string() : "(" + den_.to_string() + ")";
        return n + "/" + d;
    }

private:
    void evaluate_den_nonzero(const Point& p) const {
        auto lookup = [&](Symbol s) -> Rational {
            auto it = p.find(s.name());
            if (it == p.end()) throw DomainError("symbol '" + s.name() + "' not assigned at point");
            return it->second;
        };
        if (den_.evaluate_with(lookup) == 0) throw DomainError("denominator vanishes at (" + point_to_string(p) + ")");
    }

    Poly num_;
    Poly den_;
};

struct CoeffAlgebra {
    using Value = CoeffExpr;
    std::set<std::string> declared;

    Value number(const Rational& q) { return CoeffExpr(q); }
    Value ident(std::string_view name, std::size_t) {
        if (!declared.count(std::string(name))) throw UndeclaredSymbol(std::string(name));
        return CoeffExpr::symbol(name);
    }
    Value add(const Value& a, const Value& b) { return a + b; }
    Value sub(const Value& a, const Value& b) { return a - b; }
    Value mul(const Value& a, const Value& b) { return a * b; }
    Value div(const Value& a, const Value& b, std::size_t pos) {
        if (b.is_zero()) throw ParseError("division by zero", pos);
        return a / b;
    }
    Value pow(const Value& a, unsigned n) { return a.pow(n); }
    Value neg(const Value& a) { return -a; }
};

inline CoeffExpr parse_coeff(std::string_view text, const std::vector<std::string>& symbols) {
    CoeffAlgebra alg{std::set<std::string>(symbols.begin(), symbols.end())};
    return ExprParser<CoeffAlgebra>(text, alg).parse();
}

}  // namespace gvb
