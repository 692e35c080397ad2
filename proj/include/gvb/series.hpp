#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gvb/coeff.hpp"
#include "gvb/error.hpp"
#include "gvb/expr_parser.hpp"
#include "gvb/grading.hpp"

namespace gvb {

struct Generator {
    std::string name;
    int degree = 0;
    bool fiber = false;
    friend bool operator==(const Generator&, const Generator&) = default;
};

/// Ordered generators plus the degree-zero coefficient symbols.
class Signature {
public:
    Signature(std::vector<Generator> gens, std::vector<std::string> symbols)
        : gens_(std::move(gens)), symbols_(std::move(symbols)) {
        std::set<std::string> seen;
        for (auto& g : gens_) {
            if (!seen.insert(g.name).second) throw Error("duplicate generator name '" + g.name + "'");
            if (!g.fiber && g.degree == 0)
                throw DegreeError("base generator '" + g.name + "' has degree 0; declare it as a base symbol");
        }
        for (auto& s : symbols_)
            if (!seen.insert(s).second) throw Error("duplicate symbol name '" + s + "'");
        for (std::size_t i = 0; i < gens_.size(); ++i) index_[gens_[i].name] = static_cast<int>(i);
    }

    std::size_t size() const { return gens_.size(); }
    const Generator& gen(std::size_t i) const { return gens_[i]; }
    const std::vector<Generator>& generators() const { return gens_; }
    const std::vector<std::string>& symbols() const { return symbols_; }
    bool odd(std::size_t i) const { return parity(gens_[i].degree) != 0; }

    int index_of(const std::string& name) const {
        auto it = index_.find(name);
        return it == index_.end() ? -1 : it->second;
    }
    bool has_symbol(const std::string& name) const {
        return std::find(symbols_.begin(), symbols_.end(), name) != symbols_.end();
    }

    friend bool operator==(const Signature& a, const Signature& b) {
        return a.gens_ == b.gens_ && a.symbols_ == b.symbols_;
    }

    std::string to_string() const {
        std::string out = "(";
        for (std::size_t i = 0; i < gens_.size(); ++i) {
            if (i) out += ", ";
            out += gens_[i].name + ":" + std::to_string(gens_[i].degree) + (gens_[i].fiber ? "f" : "");
        }
        out += " | ";
        for (std::size_t i = 0; i < symbols_.size(); ++i) out += (i ? ", " : "") + symbols_[i];
        return out + ")";
    }

private:
    std::vector<Generator> gens_;
    std::vector<std::string> symbols_;
    std::map<std::string, int> index_;
};

using SigPtr = std::shared_ptr<const Signature>;

inline SigPtr make_signature(std::vector<Generator> gens, std::vector<std::string> symbols = {}) {
    return std::make_shared<const Signature>(std::move(gens), std::move(symbols));
}

inline bool same_signature(const SigPtr& a, const SigPtr& b) { return a == b || *a == *b; }

using MultiIndex = std::vector<unsigned>;

inline int mi_degree(const Signature& sig, const MultiIndex& p) {
    int d = 0;
    for (std::size_t i = 0; i < p.size(); ++i) d += static_cast<int>(p[i]) * sig.gen(i).degree;
    return d;
}

inline int mi_weight(const MultiIndex& p) {
    int w = 0;
    for (unsigned e : p) w += static_cast<int>(e);
    return w;
}

inline int mi_fiber_weight(const Signature& sig, const MultiIndex& p) {
    int w = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (sig.gen(i).fiber) w += static_cast<int>(p[i]);
    return w;
}

/// Weight first, then lexicographic with earlier generators first.
struct MiOrder {
    bool operator()(const MultiIndex& a, const MultiIndex& b) const {
        int wa = mi_weight(a), wb = mi_weight(b);
        if (wa != wb) return wa < wb;
        return b < a;
    }
};

/// Multi-indices of degree k and weight <= W with odd exponents <= 1.
inline std::vector<MultiIndex> enumerate_multiindices(const Signature& sig, int k, int W) {
    std::vector<MultiIndex> out;
    MultiIndex p(sig.size(), 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int budget) {
        if (i == sig.size()) {
            if (mi_degree(sig, p) == k) out.push_back(p);
            return;
        }
        int cap = sig.odd(i) ? std::min(1, budget) : budget;
        for (int e = 0; e <= cap; ++e) {
            p[i] = static_cast<unsigned>(e);
            rec(i + 1, budget - e);
        }
        p[i] = 0;
    };
    if (W >= 0) rec(0, W);
    std::sort(out.begin(), out.end(), MiOrder());
    return out;
}

/// Sign of reordering xi^r xi^s into xi^(r+s): prod_{i<j} (-1)^{deg_i deg_j s_i r_j}.
inline int koszul_sign(const Signature& sig, const MultiIndex& r, const MultiIndex& s) {
    int flips = 0, odd_s_before = 0;
    for (std::size_t j = 0; j < sig.size(); ++j) {
        if (!sig.odd(j)) continue;
        if (r[j] & 1u) flips += odd_s_before;
        if (s[j] & 1u) ++odd_s_before;
    }
    return (flips & 1) ? -1 : 1;
}

/// Degree-homogeneous series truncated at weight W.
class GradedFunction {
public:
    using Terms = std::map<MultiIndex, CoeffExpr, MiOrder>;

    GradedFunction(SigPtr sig, int degree, int max_weight)
        : sig_(std::move(sig)), degree_(degree), W_(max_weight) {}

    static GradedFunction constant(SigPtr sig, const CoeffExpr& c, int W) {
        GradedFunction f(sig, 0, W);
        f.add_term(MultiIndex(f.sig_->size(), 0), c);
        return f;
    }

    static GradedFunction generator(SigPtr sig, const std::string& name, int W) {
        int i = sig->index_of(name);
        if (i < 0) throw Error("unknown generator '" + name + "'");
        GradedFunction f(sig, sig->gen(i).degree, W);
        MultiIndex p(sig->size(), 0);
        p[i] = 1;
        f.add_term(p, CoeffExpr(1));
        return f;
    }

    static GradedFunction monomial(SigPtr sig, const MultiIndex& p, const CoeffExpr& c, int W) {
        GradedFunction f(sig, mi_degree(*sig, p), W);
        f.add_term(p, c);
        return f;
    }

    const SigPtr& sig() const { return sig_; }
    const Signature& signature() const { return *sig_; }
    int degree() const { return degree_; }
    int max_weight() const { return W_; }
    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    CoeffExpr coeff(const MultiIndex& p) const {
        auto it = terms_.find(p);
        return it == terms_.end() ? CoeffExpr() : it->second;
    }

    /// Coefficient of the empty multi-index.
    CoeffExpr body() const { return degree_ == 0 ? coeff(MultiIndex(sig_->size(), 0)) : CoeffExpr(); }

    /// Adds c * xi^p. Terms above the truncation weight or with a repeated odd
    /// generator are dropped.
    void add_term(const MultiIndex& p, const CoeffExpr& c) {
        if (c.is_zero() || mi_weight(p) > W_) return;
        for (std::size_t i = 0; i < p.size(); ++i)
            if (sig_->odd(i) && p[i] > 1) return;
        if (mi_degree(*sig_, p) != degree_)
            throw DegreeError("term of degree " + std::to_string(mi_degree(*sig_, p)) + " added to function of degree " +
                              std::to_string(degree_));
        auto [it, inserted] = terms_.emplace(p, c);
        if (!inserted) {
            it->second += c;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    /// Zero functions may be re-labelled with any degree.
    GradedFunction with_degree(int d) const {
        if (d == degree_) return *this;
        if (!is_zero()) throw DegreeError("cannot change the degree of a nonzero function");
        return GradedFunction(sig_, d, W_);
    }

    GradedFunction truncated(int W) const {
        GradedFunction f(sig_, degree_, std::min(W, W_));
        for (auto& [p, c] : terms_)
            if (mi_weight(p) <= f.W_) f.terms_.emplace(p, c);
        return f;
    }

    GradedFunction rebased(SigPtr sig) const {
        if (!same_signature(sig, sig_)) throw Error("signature mismatch on rebase");
        GradedFunction f = *this;
        f.sig_ = std::move(sig);
        return f;
    }

    friend bool operator==(const GradedFunction& a, const GradedFunction& b) {
        return a.degree_ == b.degree_ && a.terms_ == b.terms_ && same_signature(a.sig_, b.sig_);
    }
    friend bool operator!=(const GradedFunction& a, const GradedFunction& b) { return !(a == b); }

    std::string monomial_string(const MultiIndex& p) const {
        std::string out;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!p[i]) continue;
            if (!out.empty()) out += "*";
            out += sig_->gen(i).name;
            if (p[i] > 1) out += "^" + std::to_string(p[i]);
        }
        return out;
    }

    /// Sum of "coeff*gen^e*..." in enumeration order; parseable by parse_series.
    std::string to_string() const {
        if (terms_.empty()) return "0";
        std::string out;
        bool first = true;
        for (auto& [p, c] : terms_) {
            std::string mono = monomial_string(p);
            std::string t;
            if (mono.empty()) {
                t = c.to_string();
                if (!first && !c.is_monomial()) t = "(" + t + ")";
            } else if (c.is_monomial()) {
                const auto& pt = c.num().terms().front();
                std::string factors = pt.mono.is_one() ? mono : pt.mono.to_string() + "*" + mono;
                if (pt.coeff == 1) t = factors;
                else if (pt.coeff == -1) t = "-" + factors;
                else t = gvb::to_string(pt.coeff) + "*" + factors;
            } else {
                t = "(" + c.to_string() + ")*" + mono;
            }
            if (first) out = t;
            else if (t[0] == '-') out += " - " + t.substr(1);
            else out += " + " + t;
            first = false;
        }
        return out;
    }

private:
    SigPtr sig_;
    int degree_;
    int W_;
    Terms terms_;
};

inline void require_same_signature(const GradedFunction& f, const GradedFunction& g) {
    if (!same_signature(f.sig(), g.sig()))
        throw Error("signature mismatch: " + f.signature().to_string() + " vs " + g.signature().to_string());
}

inline GradedFunction series_scale(const CoeffExpr& c, const GradedFunction& f) {
    GradedFunction out(f.sig(), f.degree(), f.max_weight());
    if (c.is_zero()) return out;
    for (auto& [p, a] : f.terms()) out.add_term(p, c * a);
    return out;
}

inline GradedFunction series_add(const GradedFunction& f, const GradedFunction& g) {
    require_same_signature(f, g);
    if (f.degree() != g.degree())
        throw DegreeError("cannot add functions of degree " + std::to_string(f.degree()) + " and " +
                          std::to_string(g.degree()));
    GradedFunction out = f.truncated(std::min(f.max_weight(), g.max_weight()));
    for (auto& [p, c] : g.terms()) out.add_term(p, c);
    return out;
}

inline GradedFunction series_neg(const GradedFunction& f) { return series_scale(CoeffExpr(-1), f); }

inline GradedFunction series_sub(const GradedFunction& f, const GradedFunction& g) {
    return series_add(f, series_neg(g));
}

/// (fg)_p = sum_{r+s=p} eps(r,s) f_r g_s.
inline GradedFunction series_mul(const GradedFunction& f, const GradedFunction& g) {
    require_same_signature(f, g);
    const Signature& sig = f.signature();
    int W = std::min(f.max_weight(), g.max_weight());
    GradedFunction out(f.sig(), f.degree() + g.degree(), W);
    MultiIndex p(sig.size());
    for (auto& [r, fr] : f.terms()) {
        int wr = mi_weight(r);
        if (wr > W) continue;
        for (auto& [s, gs] : g.terms()) {
            if (wr + mi_weight(s) > W) continue;
            bool vanishes = false;
            for (std::size_t i = 0; i < p.size(); ++i) {
                p[i] = r[i] + s[i];
                if (sig.odd(i) && p[i] > 1) vanishes = true;
            }
            if (vanishes) continue;
            CoeffExpr c = fr * gs;
            out.add_term(p, koszul_sign(sig, r, s) < 0 ? -c : c);
        }
    }
    return out;
}

inline GradedFunction series_pow(const GradedFunction& f, unsigned n) {
    GradedFunction out = GradedFunction::constant(f.sig(), CoeffExpr(1), f.max_weight());
    for (unsigned i = 0; i < n; ++i) out = series_mul(out, f);
    return out;
}

inline GradedFunction operator+(const GradedFunction& f, const GradedFunction& g) { return series_add(f, g); }
inline GradedFunction operator-(const GradedFunction& f, const GradedFunction& g) { return series_sub(f, g); }
inline GradedFunction operator*(const GradedFunction& f, const GradedFunction& g) { return series_mul(f, g); }
inline GradedFunction operator-(const GradedFunction& f) { return series_neg(f); }

/// Value at a point: the body for degree 0, otherwise 0.
inline Rational body_value(const GradedFunction& f, const Point& point) {
    if (f.degree() != 0) return 0;
    CoeffExpr b = f.body();
    if (b.is_zero()) return 0;
    return b.evaluate(point);
}

/// Left derivative by a generator, or ordinary derivative by a coefficient symbol.
inline GradedFunction partial_derivative(const GradedFunction& f, const std::string& name) {
    const Signature& sig = f.signature();
    int mu = sig.index_of(name);
    if (mu < 0) {
        if (!sig.has_symbol(name)) throw Error("unknown generator '" + name + "'");
        GradedFunction out(f.sig(), f.degree(), f.max_weight());
        Symbol s(name);
        for (auto& [p, c] : f.terms()) out.add_term(p, c.derivative(s));
        return out;
    }
    int dmu = sig.gen(mu).degree;
    GradedFunction out(f.sig(), f.degree() - dmu, f.max_weight());
    for (auto& [p, c] : f.terms()) {
        if (p[mu] == 0) continue;
        int flips = 0;
        if (parity(dmu))
            for (int nu = 0; nu < mu; ++nu)
                if (sig.odd(nu) && (p[nu] & 1u)) ++flips;
        MultiIndex q = p;
        --q[mu];
        CoeffExpr v = c.scaled(Rational(static_cast<long>(p[mu])));
        out.add_term(q, (flips & 1) ? -v : v);
    }
    return out;
}

/// 1/f through weight W for degree-0 f with nonzero body c: (1/c) sum_n (-u)^n, f = c(1+u).
inline GradedFunction reciprocal(const GradedFunction& f, int W) {
    if (f.degree() != 0) throw DegreeError("reciprocal of a function of nonzero degree " + std::to_string(f.degree()));
    CoeffExpr c = f.body();
    if (c.is_zero()) throw DomainError("reciprocal of a function with zero body");
    int w = std::min(W, f.max_weight());
    GradedFunction base = f.truncated(w);
    CoeffExpr inv = c.inverse();
    GradedFunction one = GradedFunction::constant(f.sig(), CoeffExpr(1), w);
    GradedFunction minus_u = series_neg(series_sub(series_scale(inv, base), one));
    GradedFunction sum = one, term = one;
    for (int n = 1; n <= w; ++n) {
        term = series_mul(term, minus_u);
        if (term.is_zero()) break;
        sum = series_add(sum, term);
    }
    return series_scale(inv, sum);
}

/// Generator and coefficient-symbol images for substitute. Missing generators
/// map to the same-named generator of the target; missing symbols are kept.
struct Substitution {
    SigPtr target;
    std::map<std::string, GradedFunction> generators;
    std::map<std::string, GradedFunction> symbols;
};

namespace detail {

inline void enumerate_orders(std::size_t n, int budget, std::vector<int>& cur, std::size_t i,
                             std::vector<std::vector<int>>& out) {
    if (i == n) {
        out.push_back(cur);
        return;
    }
    for (int e = 0; e <= budget; ++e) {
        cur[i] = e;
        enumerate_orders(n, budget - e, cur, i + 1, out);
    }
    cur[i] = 0;
}

}  // namespace detail

/// Ring-homomorphic substitution. Coefficients whose symbols map to functions
/// with a nilpotent part are expanded by Taylor's formula through weight W.
inline GradedFunction substitute(const GradedFunction& f, const Substitution& s, int W = -1) {
    const Signature& src = f.signature();
    SigPtr tgt = s.target;
    int w = W < 0 ? f.max_weight() : std::min(W, f.max_weight());

    std::vector<GradedFunction> images;
    images.reserve(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        const auto& g = src.gen(i);
        auto it = s.generators.find(g.name);
        GradedFunction img = [&] {
            if (it != s.generators.end()) return it->second;
            int j = tgt->index_of(g.name);
            if (j < 0) throw Error("no image for generator '" + g.name + "'");
            return GradedFunction::generator(tgt, g.name, w);
        }();
        if (!same_signature(img.sig(), tgt)) throw Error("image of '" + g.name + "' has the wrong signature");
        if (img.degree() != g.degree)
            throw DegreeError("image of '" + g.name + "' has degree " + std::to_string(img.degree()) + ", expected " +
                              std::to_string(g.degree));
        if (!img.body().is_zero())
            throw DomainError("image of generator '" + g.name + "' has a nonzero body; truncation would not be exact");
        w = std::min(w, img.max_weight());
        images.push_back(img.rebased(tgt));
    }

    std::map<Symbol, CoeffExpr> bodies;
    std::vector<std::pair<Symbol, GradedFunction>> nilpotent;
    for (auto& [name, img] : s.symbols) {
        if (!same_signature(img.sig(), tgt)) throw Error("image of symbol '" + name + "' has the wrong signature");
        if (img.degree() != 0) throw DegreeError("image of symbol '" + name + "' must have degree 0");
        w = std::min(w, img.max_weight());
        CoeffExpr b = img.body();
        bodies[Symbol(name)] = b;
        GradedFunction rest = series_sub(img, GradedFunction::constant(tgt, b, img.max_weight()));
        if (!rest.is_zero()) nilpotent.emplace_back(Symbol(name), rest.rebased(tgt));
    }

    std::vector<std::vector<int>> orders;
    if (!nilpotent.empty()) {
        std::vector<int> cur(nilpotent.size(), 0);
        detail::enumerate_orders(nilpotent.size(), w, cur, 0, orders);
    }
    std::map<std::pair<std::size_t, int>, GradedFunction> nil_powers;
    auto nil_pow = [&](std::size_t i, int e) -> const GradedFunction& {
        auto key = std::make_pair(i, e);
        auto it = nil_powers.find(key);
        if (it == nil_powers.end()) it = nil_powers.emplace(key, series_pow(nilpotent[i].second.truncated(w), e)).first;
        return it->second;
    };

    auto coeff_image = [&](const CoeffExpr& c) {
        if (nilpotent.empty()) return GradedFunction::constant(tgt, c.substitute(bodies), w);
        GradedFunction acc(tgt, 0, w);
        for (auto& alpha : orders) {
            CoeffExpr d = c;
            Rational fact = 1;
            for (std::size_t i = 0; i < alpha.size(); ++i)
                for (int k = 1; k <= alpha[i]; ++k) {
                    d = d.derivative(nilpotent[i].first);
                    fact *= k;
                }
            if (d.is_zero()) continue;
            GradedFunction t = GradedFunction::constant(tgt, d.substitute(bodies).scaled(1 / fact), w);
            for (std::size_t i = 0; i < alpha.size(); ++i)
                if (alpha[i]) t = series_mul(t, nil_pow(i, alpha[i]));
            acc = series_add(acc, t);
        }
        return acc;
    };

    std::map<std::pair<std::size_t, unsigned>, GradedFunction> gen_powers;
    auto gen_pow = [&](std::size_t i, unsigned e) -> const GradedFunction& {
        auto key = std::make_pair(i, e);
        auto it = gen_powers.find(key);
        if (it == gen_powers.end()) it = gen_powers.emplace(key, series_pow(images[i].truncated(w), e)).first;
        return it->second;
    };

    GradedFunction out(tgt, f.degree(), w);
    for (auto& [p, c] : f.terms()) {
        if (mi_weight(p) > w) continue;
        GradedFunction t = coeff_image(c);
        for (std::size_t i = 0; i < p.size(); ++i)
            if (p[i]) t = series_mul(t, gen_pow(i, p[i]));
        out = series_add(out, t);
    }
    return out;
}

/// Terms grouped by fiber weight.
inline std::map<int, GradedFunction> fiber_weight_parts(const GradedFunction& f) {
    std::map<int, GradedFunction> parts;
    for (auto& [p, c] : f.terms()) {
        int w = mi_fiber_weight(f.signature(), p);
        auto it = parts.find(w);
        if (it == parts.end()) it = parts.emplace(w, GradedFunction(f.sig(), f.degree(), f.max_weight())).first;
        it->second.add_term(p, c);
    }
    return parts;
}

inline bool is_fiber_linear(const GradedFunction& f) {
    for (auto& [w, part] : fiber_weight_parts(f))
        if (w != 1 && !part.is_zero()) return false;
    return true;
}

/// Formal pullback by the homothety H_lambda: each fiber generator scaled by lambda.
inline GradedFunction homothety(const GradedFunction& f, const std::string& lambda) {
    GradedFunction out(f.sig(), f.degree(), f.max_weight());
    CoeffExpr l = CoeffExpr::symbol(lambda);
    for (auto& [p, c] : f.terms()) out.add_term(p, c * l.pow(static_cast<unsigned>(mi_fiber_weight(f.signature(), p))));
    return out;
}

/// Every coefficient of a - b vanishes, or, when a jet point is given, has a
/// Taylor expansion there vanishing through total order W - weight(p).
inline bool agrees_through(const GradedFunction& a, const GradedFunction& b, int W, const Point* jet = nullptr) {
    GradedFunction r = series_sub(a.with_degree(a.is_zero() ? b.degree() : a.degree()),
                                  b.with_degree(b.is_zero() ? a.degree() : b.degree()));
    for (auto& [p, c] : r.terms()) {
        int w = mi_weight(p);
        if (w > W) continue;
        if (!jet) return false;
        if (!c.vanishes_to_order(*jet, W - w)) return false;
    }
    return true;
}

/// Coefficients replaced by their Taylor polynomials of order W at a point.
/// Identities that only hold as jets there are unaffected.
inline GradedFunction jet_truncate(const GradedFunction& f, const Point& p, int W) {
    GradedFunction out(f.sig(), f.degree(), f.max_weight());
    for (auto& [m, c] : f.terms()) out.add_term(m, c.taylor(p, W));
    return out;
}

/// Parses a graded expression; identifiers are generators or coefficient symbols.
struct SeriesAlgebra {
    using Value = GradedFunction;
    SigPtr sig;
    int W;

    Value number(const Rational& q) { return GradedFunction::constant(sig, CoeffExpr(q), W); }
    Value ident(std::string_view name, std::size_t pos) {
        std::string n(name);
        if (sig->index_of(n) >= 0) return GradedFunction::generator(sig, n, W);
        if (sig->has_symbol(n)) return GradedFunction::constant(sig, CoeffExpr::symbol(n), W);
        (void)pos;
        throw UndeclaredSymbol(n);
    }
    static Value align(const Value& a, const Value& b) { return a.is_zero() ? a.with_degree(b.degree()) : a; }
    Value add(const Value& a, const Value& b) { return series_add(align(a, b), align(b, a)); }
    Value sub(const Value& a, const Value& b) { return series_sub(align(a, b), align(b, a)); }
    Value mul(const Value& a, const Value& b) { return series_mul(a, b); }
    Value div(const Value& a, const Value& b, std::size_t pos) {
        if (b.is_zero()) throw ParseError("division by zero", pos);
        if (b.degree() != 0) throw ParseError("division by a function of nonzero degree", pos);
        if (b.terms().size() == 1 && b.body() != CoeffExpr()) return series_scale(b.body().inverse(), a);
        try {
            return series_mul(a, reciprocal(b, W));
        } catch (const DomainError&) {
            throw ParseError("division by a function with zero body", pos);
        }
    }
    Value pow(const Value& a, unsigned n) { return series_pow(a, n); }
    Value neg(const Value& a) { return series_neg(a); }
};

inline GradedFunction parse_series(std::string_view text, SigPtr sig, int W) {
    SeriesAlgebra alg{std::move(sig), W};
    return ExprParser<SeriesAlgebra>(text, alg).parse();
}

}  // namespace gvb
