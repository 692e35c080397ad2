#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gvb/atlas.hpp"
#include "gvb/matrix.hpp"

namespace gvb {

struct FiberCoord {
    std::string name;
    int degree = 0;
    friend bool operator==(const FiberCoord&, const FiberCoord&) = default;
};

/// Graded vector bundle presented by transitions. For an ordered overlap
/// (a, b) the matrix T(a, b) has entries in chart-a variables and sends the
/// fiber coordinates over a to those over b: k_b = T(a, b) k_a.
class Bundle {
public:
    std::string name;
    ManifoldPtr base;
    std::vector<FiberCoord> fiber;
    std::map<ChartPair, GradedMatrix> transitions;

    int W() const { return base->W; }

    std::vector<int> degrees() const {
        std::vector<int> d;
        for (auto& f : fiber) d.push_back(f.degree);
        return d;
    }

    std::vector<std::string> fiber_names() const {
        std::vector<std::string> n;
        for (auto& f : fiber) n.push_back(f.name);
        return n;
    }

    /// Frame degrees: a fiber coordinate of degree q pairs with a frame element of degree -q.
    GradedDimension rank() const {
        GradedDimension d;
        for (auto& f : fiber) d.add(-f.degree, 1);
        return d;
    }

    bool has_transition(const std::string& a, const std::string& b) const { return a == b || transitions.count({a, b}); }

    GradedMatrix transition(const std::string& a, const std::string& b) const {
        if (a == b) return identity(base->chart(a).sig, degrees(), W());
        auto it = transitions.find({a, b});
        if (it == transitions.end()) throw Error("bundle '" + name + "' has no transition " + a + " " + b);
        return it->second;
    }

    /// Chart generators followed by the fiber coordinates as fiber generators.
    SigPtr total_signature(const std::string& chart) const {
        auto it = total_sigs_.find(chart);
        if (it != total_sigs_.end()) return it->second;
        const Chart& c = base->chart(chart);
        std::vector<Generator> gens = c.coords;
        for (auto& f : fiber) gens.push_back({f.name, f.degree, true});
        SigPtr s = make_signature(gens, c.base);
        total_sigs_.emplace(chart, s);
        return s;
    }

private:
    mutable std::map<std::string, SigPtr> total_sigs_;
};

using BundlePtr = std::shared_ptr<const Bundle>;

/// Copy of f in a signature that contains f's generators in the same relative
/// order and f's coefficient symbols.
inline GradedFunction embed(const GradedFunction& f, const SigPtr& target, int W) {
    const Signature& src = f.signature();
    std::vector<std::size_t> to(src.size());
    int last = -1;
    for (std::size_t i = 0; i < src.size(); ++i) {
        int j = target->index_of(src.gen(i).name);
        if (j < 0 || target->gen(j).degree != src.gen(i).degree)
            throw Error("embed: generator '" + src.gen(i).name + "' missing from target");
        if (j <= last) throw Error("embed: generator order differs");
        last = j;
        to[i] = static_cast<std::size_t>(j);
    }
    for (auto& s : src.symbols())
        if (!target->has_symbol(s)) throw Error("embed: symbol '" + s + "' missing from target");
    GradedFunction out(target, f.degree(), W);
    for (auto& [p, c] : f.terms()) {
        MultiIndex q(target->size(), 0);
        for (std::size_t i = 0; i < p.size(); ++i) q[to[i]] = p[i];
        out.add_term(q, c);
    }
    return out;
}

/// Coefficient of the fiber monomial `pattern` (exponents on the trailing
/// generators of f's signature) as a function over the leading `base` signature.
inline GradedFunction fiber_coefficient(const GradedFunction& f, const SigPtr& base, const MultiIndex& pattern, int W) {
    const Signature& sig = f.signature();
    std::size_t nb = base->size();
    int pdeg = 0;
    for (std::size_t i = 0; i < pattern.size(); ++i) pdeg += static_cast<int>(pattern[i]) * sig.gen(nb + i).degree;
    GradedFunction out(base, f.degree() - pdeg, W);
    for (auto& [p, c] : f.terms()) {
        if (!std::equal(pattern.begin(), pattern.end(), p.begin() + static_cast<std::ptrdiff_t>(nb))) continue;
        out.add_term(MultiIndex(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(nb)), c);
    }
    return out;
}

/// Fills in T(b, a) as the inverse of T(a, b) re-expressed in chart-b variables
/// wherever only one direction is given.
inline void complete_transitions(Bundle& e) {
    const Manifold& m = *e.base;
    std::vector<std::pair<ChartPair, GradedMatrix>> added;
    for (auto& [key, t] : e.transitions) {
        ChartPair rev{key.second, key.first};
        if (e.transitions.count(rev) || !m.has_overlap(rev.first, rev.second)) continue;
        GradedMatrix inv = invert(t, e.W());
        added.emplace_back(rev, substitute(inv, m.substitution(rev.first, rev.second), e.W()));
    }
    for (auto& [k, t] : added) e.transitions.emplace(k, t);
}

inline GradedMatrix localize(const Manifold& m, const GradedMatrix& t, const std::string& a) {
    if (!m.jet(a)) return t;
    GradedMatrix out(t.sig(), t.max_weight(), t.row_degrees(), t.col_degrees());
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t k = 0; k < t.cols(); ++k) out.set(i, k, localize(m, t.at(i, k), a));
    return out;
}

/// Entrywise pull_back of a matrix on chart b to chart a.
inline GradedMatrix pull_back(const Manifold& m, const GradedMatrix& t, const std::string& a, const std::string& b) {
    GradedMatrix out(m.chart(a).sig, std::min(t.max_weight(), m.W), t.row_degrees(), t.col_degrees());
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t k = 0; k < t.cols(); ++k)
            if (!t.at(i, k).is_zero()) out.set(i, k, pull_back(m, t.at(i, k), a, b));
    return out;
}

inline GradedMatrix pull_along(const BaseMap& f, const GradedMatrix& t, const std::string& a) {
    GradedMatrix out(f.source->chart(a).sig, std::min(t.max_weight(), f.source->W), t.row_degrees(), t.col_degrees());
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t k = 0; k < t.cols(); ++k)
            if (!t.at(i, k).is_zero()) out.set(i, k, f.pull(t.at(i, k), a));
    return out;
}

namespace detail {

inline std::optional<std::string> first_residual(const GradedMatrix& a, const GradedMatrix& b, int W, const Point* jet) {
    auto r = matrix_residuals(a, b, W, jet);
    if (r.empty()) return std::nullopt;
    return r.front();
}

}  // namespace detail

/// Presence, pair conditions on every ordered overlap, and the cocycle identity
/// T(a, c) = T(b, c) T(a, b) in chart-a variables on the given triples (all
/// triples of mutually overlapping charts when none are given).
inline Report bundle_cocycle_check(const Bundle& e, std::vector<std::vector<std::string>> triples = {}) {
    Report r;
    const Manifold& m = *e.base;
    int W = e.W();
    for (auto& [key, ov] : m.overlaps) {
        auto& [a, b] = key;
        std::string name = "transition " + a + " " + b;
        if (!e.transitions.count(key)) r.fail(name, "missing");
        else r.pass(name);
    }
    if (!r.ok()) return r;
    for (auto& [key, ov] : m.overlaps) {
        auto& [a, b] = key;
        GradedMatrix tab = localize(m, e.transition(a, b), a);
        GradedMatrix tba = pull_back(m, e.transition(b, a), a, b);
        GradedMatrix I = identity(m.chart(a).sig, e.degrees(), W);
        auto res = detail::first_residual(mat_mul(tba, tab), I, W, m.jet(a));
        if (!res) res = detail::first_residual(mat_mul(tab, tba), I, W, m.jet(a));
        r.add("pair " + a + " " + b, !res, res);
    }
    if (triples.empty()) triples = m.triples();
    for (auto& t : triples) {
        if (t.size() != 3) throw Error("cocycle triple must name three charts");
        const std::string &a = t[0], &b = t[1], &c = t[2];
        for (auto& [x, y] : {ChartPair{a, b}, ChartPair{b, c}, ChartPair{a, c}})
            if (x != y && !m.has_overlap(x, y)) throw Error("no overlap " + x + " " + y + " for cocycle triple");
        GradedMatrix tbc = pull_back(m, e.transition(b, c), a, b);
        GradedMatrix lhs = localize(m, e.transition(a, c), a);
        auto res = detail::first_residual(lhs, mat_mul(tbc, localize(m, e.transition(a, b), a)), W, m.jet(a));
        r.add("cocycle " + a + " " + b + " " + c, !res, res);
    }
    return r;
}

/// Fiber coordinates v_<coord> of degree |coord| with signed Jacobian transitions
/// T(a, b)^j_i = (-1)^{q_j (q_j - q_i)} d_i (x_b^j).
inline Bundle tangent_bundle(const ManifoldPtr& m, const std::string& name = "") {
    Bundle e;
    e.name = name.empty() ? "T" + m->name : name;
    e.base = m;
    if (m->charts.empty()) throw Error("manifold '" + m->name + "' has no charts");
    const Chart& first = m->charts.front();
    std::vector<int> q = first.coordinate_degrees();
    for (auto& c : m->charts)
        if (c.coordinate_degrees() != q)
            throw DegreeError("charts '" + first.name + "' and '" + c.name + "' list coordinate degrees in different orders");
    auto names = first.coordinate_names();
    for (std::size_t i = 0; i < names.size(); ++i) e.fiber.push_back({"v_" + names[i], q[i]});
    int W = m->W;
    for (auto& [key, ov] : m->overlaps) {
        auto& [a, b] = key;
        const Chart &ca = m->chart(a), &cb = m->chart(b);
        auto an = ca.coordinate_names(), bn = cb.coordinate_names();
        GradedMatrix t(ca.sig, W, q, q);
        for (std::size_t j = 0; j < bn.size(); ++j) {
            auto it = ov.images.find(bn[j]);
            if (it == ov.images.end()) throw Error("overlap " + a + " " + b + " gives no image for '" + bn[j] + "'");
            for (std::size_t i = 0; i < an.size(); ++i) {
                GradedFunction d = partial_derivative(it->second, an[i]);
                if (parity(q[j] * (q[j] - q[i]))) d = series_neg(d);
                t.set(j, i, d);
            }
        }
        e.transitions.emplace(key, t);
    }
    return e;
}

inline std::string dual_name(const std::string& n) {
    const std::string suffix = "_dual";
    if (n.size() > suffix.size() && n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0)
        return n.substr(0, n.size() - suffix.size());
    return n + suffix;
}

/// Dual bundle: fiber degrees negated, transitions replaced by the signed
/// transpose of their inverses.
inline Bundle dual_bundle(const Bundle& e, const std::string& name = "") {
    Bundle d;
    d.name = name.empty() ? dual_name(e.name) : name;
    d.base = e.base;
    for (auto& f : e.fiber) d.fiber.push_back({dual_name(f.name), -f.degree});
    for (auto& [key, t] : e.transitions) d.transitions.emplace(key, dual_transpose(t, e.W()));
    return d;
}

/// Same transitions, fiber degrees raised by l.
inline Bundle shift_bundle(const Bundle& e, int l, const std::string& name = "") {
    Bundle s;
    s.name = name.empty() ? e.name + "[" + std::to_string(l) + "]" : name;
    s.base = e.base;
    for (auto& f : e.fiber) s.fiber.push_back({f.name, f.degree + l});
    auto degs = s.degrees();
    for (auto& [key, t] : e.transitions) s.transitions.emplace(key, t.with_degrees(degs, degs));
    return s;
}

inline void require_same_base(const Bundle& e, const Bundle& f) {
    if (e.base != f.base && e.base->name != f.base->name)
        throw Error("bundles '" + e.name + "' and '" + f.name + "' live over different manifolds");
}

/// Block-diagonal transitions; clashing fiber names of the second summand get a suffix.
inline Bundle direct_sum(const Bundle& e, const Bundle& f, const std::string& name = "") {
    require_same_base(e, f);
    Bundle s;
    s.name = name.empty() ? e.name + "+" + f.name : name;
    s.base = e.base;
    s.fiber = e.fiber;
    std::set<std::string> used;
    for (auto& c : e.fiber) used.insert(c.name);
    for (auto c : f.fiber) {
        while (used.count(c.name)) c.name += "_2";
        used.insert(c.name);
        s.fiber.push_back(c);
    }
    auto degs = s.degrees();
    std::size_t n = e.fiber.size();
    for (auto& [key, ov] : e.base->overlaps) {
        GradedMatrix te = e.transition(key.first, key.second), tf = f.transition(key.first, key.second);
        GradedMatrix t(e.base->chart(key.first).sig, e.W(), degs, degs);
        for (std::size_t i = 0; i < te.rows(); ++i)
            for (std::size_t k = 0; k < te.cols(); ++k) t.set(i, k, te.at(i, k));
        for (std::size_t i = 0; i < tf.rows(); ++i)
            for (std::size_t k = 0; k < tf.cols(); ++k) t.set(n + i, n + k, tf.at(i, k).rebased(t.sig()));
        s.transitions.emplace(key, t);
    }
    return s;
}

/// Fiber coordinates k^a l^B (a outer). Entries are read off from the product
/// (T k)^a (S l)^B expanded with series_mul, so every sign comes from the
/// multiplication rule.
inline Bundle tensor_bundle(const Bundle& e, const Bundle& f, const std::string& name = "") {
    require_same_base(e, f);
    Bundle t;
    t.name = name.empty() ? e.name + "*" + f.name : name;
    t.base = e.base;
    for (auto& a : e.fiber)
        for (auto& b : f.fiber) t.fiber.push_back({a.name + "_" + b.name, a.degree + b.degree});
    auto degs = t.degrees();
    int W = e.W();
    std::size_t ne = e.fiber.size(), nf = f.fiber.size();
    for (auto& [key, ov] : e.base->overlaps) {
        const Chart& c = e.base->chart(key.first);
        std::vector<Generator> gens = c.coords;
        for (std::size_t i = 0; i < ne; ++i) gens.push_back({"__e" + std::to_string(i), e.fiber[i].degree, true});
        for (std::size_t i = 0; i < nf; ++i) gens.push_back({"__f" + std::to_string(i), f.fiber[i].degree, true});
        SigPtr big = make_signature(gens, c.base);
        GradedMatrix te = e.transition(key.first, key.second), tf = f.transition(key.first, key.second);
        auto image = [&](const GradedMatrix& m, std::size_t row, const std::string& prefix) {
            GradedFunction u(big, m.row_degrees()[row], W + 2);
            for (std::size_t k = 0; k < m.cols(); ++k) {
                if (m.at(row, k).is_zero()) continue;
                GradedFunction g = GradedFunction::generator(big, prefix + std::to_string(k), W + 2);
                u = series_add(u, series_mul(embed(m.at(row, k), big, W + 2), g));
            }
            return u;
        };
        std::vector<GradedFunction> ue, uf;
        for (std::size_t i = 0; i < ne; ++i) ue.push_back(image(te, i, "__e"));
        for (std::size_t i = 0; i < nf; ++i) uf.push_back(image(tf, i, "__f"));
        GradedMatrix m(c.sig, W, degs, degs);
        for (std::size_t a = 0; a < ne; ++a)
            for (std::size_t b = 0; b < nf; ++b) {
                GradedFunction prod = series_mul(ue[a], uf[b]);
                for (std::size_t ci = 0; ci < ne; ++ci)
                    for (std::size_t di = 0; di < nf; ++di) {
                        MultiIndex pattern(ne + nf, 0);
                        pattern[ci] = 1;
                        pattern[ne + di] = 1;
                        GradedFunction entry = fiber_coefficient(prod, c.sig, pattern, W);
                        m.set(a * nf + b, ci * nf + di, entry);
                    }
            }
        t.transitions.emplace(key, m);
    }
    return t;
}

/// Bundle over phi's source with transitions phi^* T(phi(a), phi(b)).
inline Bundle pullback_bundle(const Bundle& e, const BaseMap& phi, const std::string& name = "") {
    if (phi.target != e.base && phi.target->name != e.base->name)
        throw Error("map '" + phi.name + "' does not land in the base of '" + e.name + "'");
    Bundle p;
    p.name = name.empty() ? phi.name + "^*" + e.name : name;
    p.base = phi.source;
    p.fiber = e.fiber;
    int W = phi.source->W;
    for (auto& [key, ov] : phi.source->overlaps) {
        auto& [a, b] = key;
        const std::string &ta = phi.target_chart(a), &tb = phi.target_chart(b);
        if (ta != tb && !e.has_transition(ta, tb))
            throw Error("chart-assignment gap: '" + e.name + "' has no transition " + ta + " " + tb + " for overlap " + a +
                        " " + b);
        GradedMatrix t = ta == tb ? identity(phi.source->chart(a).sig, e.degrees(), W)
                                  : substitute(e.transition(ta, tb), phi.substitution(a), W);
        p.transitions.emplace(key, t);
    }
    return p;
}

/// Per-chart matrices over a base map, rows indexed by the target fiber and
/// columns by the source fiber. Compatibility on an overlap (a, b):
/// Phi_b T(a, b) = phi^* T'(phi(a), phi(b)) Phi_a in chart-a variables.
struct BundleMorphism {
    std::string name;
    BundlePtr source, target;
    BaseMap over;
    std::map<std::string, GradedMatrix> charts;

    const GradedMatrix& at(const std::string& chart) const {
        auto it = charts.find(chart);
        if (it == charts.end()) throw Error("morphism '" + name + "' has no matrix on chart '" + chart + "'");
        return it->second;
    }
};

inline Report morphism_check(const BundleMorphism& phi) {
    Report r;
    const Bundle &E = *phi.source, &F = *phi.target;
    const Manifold& M = *E.base;
    int W = E.W();
    for (auto& c : M.charts) {
        std::string name = "matrix " + phi.name + " " + c.name;
        auto it = phi.charts.find(c.name);
        if (it == phi.charts.end()) r.fail(name, "missing");
        else if (it->second.row_degrees() != F.degrees() || it->second.col_degrees() != E.degrees())
            r.fail(name, "degrees do not match the fiber coordinates");
        else r.pass(name);
    }
    if (!r.ok()) return r;
    for (auto& [key, ov] : M.overlaps) {
        auto& [a, b] = key;
        const std::string &ta = phi.over.target_chart(a), &tb = phi.over.target_chart(b);
        GradedMatrix lhs = mat_mul(pull_back(M, phi.at(b), a, b), localize(M, E.transition(a, b), a));
        GradedMatrix tf = ta == tb ? identity(M.chart(a).sig, F.degrees(), W) : pull_along(phi.over, F.transition(ta, tb), a);
        auto res = detail::first_residual(lhs, mat_mul(tf, localize(M, phi.at(a), a)), W, M.jet(a));
        r.add("compatibility " + phi.name + " " + a + " " + b, !res, res);
    }
    return r;
}

inline NumericBlockMatrix fiber_map(const BundleMorphism& phi, const std::string& chart, const Point& m) {
    return evaluate_at(phi.at(chart), m);
}

struct Classification {
    FiberClass fiber;
    std::vector<std::string> warnings;
};

/// Fiber criteria at a point. When the fiber map is bijective the local
/// inverse must exist; when the symbolic matrix does not split off a block
/// of the fiber rank, the image is not a subbundle near the point.
inline Classification classify_at(const BundleMorphism& phi, const std::string& chart, const Point& m) {
    Classification c;
    const GradedMatrix& a = phi.at(chart);
    c.fiber = classify_blocks(evaluate_at(a, m));
    int W = phi.source->W();
    if (c.fiber.iso()) invert(a, W, {m});
    auto rest = schur_after_unit_pivots(a, m, c.fiber.rank.total());
    if (!rest) throw Error("internal: fewer unit pivots than the fiber rank");
    if (!rest->is_zero())
        c.warnings.push_back("image is not a subbundle: fiber rank " + c.fiber.rank.to_string() + " at (" +
                             point_to_string(m) + ") but the matrix does not reduce to that rank nearby");
    return c;
}

/// Warning when the fiber rank differs between sample points; the image of
/// such a morphism is not a subbundle of constant rank.
inline std::optional<std::string> rank_variation(const std::vector<std::pair<Point, GradedDimension>>& ranks) {
    for (std::size_t i = 1; i < ranks.size(); ++i)
        if (ranks[i].second != ranks[0].second)
            return "fiber rank is not constant: " + ranks[0].second.to_string() + " at (" + point_to_string(ranks[0].first) + ") but " +
                   ranks[i].second.to_string() + " at (" + point_to_string(ranks[i].first) + ")";
    return std::nullopt;
}

/// Composition Phi after Psi over the identity of a common base.
inline BundleMorphism compose(const BundleMorphism& phi, const BundleMorphism& psi) {
    if (psi.target != phi.source && psi.target->name != phi.source->name)
        throw Error("cannot compose '" + phi.name + "' after '" + psi.name + "'");
    BundleMorphism out{phi.name + "*" + psi.name, psi.source, phi.target, psi.over, {}};
    for (auto& [chart, m] : psi.charts) out.charts.emplace(chart, mat_mul(phi.at(chart), m));
    return out;
}

}  // namespace gvb
