#pragma once

#include <map>
#include <string>
#include <vector>

#include "gvb/bundle.hpp"

namespace gvb {

/// Function on a manifold given chart by chart.
struct ChartFunction {
    ManifoldPtr base;
    std::map<std::string, GradedFunction> charts;

    const GradedFunction& at(const std::string& chart) const {
        auto it = charts.find(chart);
        if (it == charts.end()) throw Error("function has no expression on chart '" + chart + "'");
        return it->second;
    }
    int degree() const { return charts.empty() ? 0 : charts.begin()->second.degree(); }
};

/// Agreement on every overlap where both charts carry an expression.
inline Report function_check(const ChartFunction& f, const std::string& label = "function") {
    Report r;
    const Manifold& m = *f.base;
    for (auto& [key, ov] : m.overlaps) {
        auto& [a, b] = key;
        if (!f.charts.count(a) || !f.charts.count(b)) continue;
        GradedFunction lhs = pull_back(m, f.at(b), a, b), rhs = localize(m, f.at(a), a);
        std::string name = label + " " + a + " " + b;
        if (agrees_through(lhs, rhs, m.W, m.jet(a))) r.pass(name);
        else r.fail(name, detail::residual_string(lhs, rhs, m.W));
    }
    return r;
}

/// Degree-l section: per chart, components sigma^a of degree |k^a| + l with
/// sigma_b = T(a, b) sigma_a on overlaps. Charts may be omitted for local sections.
struct Section {
    BundlePtr bundle;
    int shift = 0;
    std::map<std::string, std::vector<GradedFunction>> charts;

    const std::vector<GradedFunction>& at(const std::string& chart) const {
        auto it = charts.find(chart);
        if (it == charts.end()) throw Error("section has no components on chart '" + chart + "'");
        return it->second;
    }
};

namespace detail {

inline int u(int d) { return (d > 0 && parity(d)) ? 1 : 0; }

inline GradedFunction with_sign(const GradedFunction& f, int exponent) { return parity(exponent) ? series_neg(f) : f; }

inline std::vector<GradedFunction> apply(const GradedMatrix& t, const std::vector<GradedFunction>& v, int l) {
    if (t.cols() != v.size()) throw ShapeError("matrix and component vector sizes differ");
    std::vector<GradedFunction> out;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        GradedFunction acc(t.sig(), t.row_degrees()[i] + l, t.max_weight());
        for (std::size_t k = 0; k < t.cols(); ++k)
            if (!t.at(i, k).is_zero() && !v[k].is_zero()) acc = series_add(acc, series_mul(t.at(i, k), v[k]));
        out.push_back(acc);
    }
    return out;
}

}  // namespace detail

inline Section zero_section(const BundlePtr& e, int shift = 0) {
    Section s{e, shift, {}};
    for (auto& c : e->base->charts) {
        std::vector<GradedFunction> comps;
        for (auto& f : e->fiber) comps.emplace_back(c.sig, f.degree + shift, e->W());
        s.charts.emplace(c.name, comps);
    }
    return s;
}

/// Frame element delta_j on one chart; its degree is -|k^j|.
inline Section frame_section(const BundlePtr& e, const std::string& chart, std::size_t j) {
    int l = -e->fiber.at(j).degree;
    Section s{e, l, {}};
    const Chart& c = e->base->chart(chart);
    std::vector<GradedFunction> comps;
    for (std::size_t a = 0; a < e->fiber.size(); ++a)
        comps.push_back(a == j ? GradedFunction::constant(c.sig, CoeffExpr(1), e->W())
                               : GradedFunction(c.sig, e->fiber[a].degree + l, e->W()));
    s.charts.emplace(chart, comps);
    return s;
}

/// Components of a section over chart a moved to chart b: T(a, b) sigma_a
/// rewritten in chart-b variables.
inline std::vector<GradedFunction> transport(const Section& s, const std::string& a, const std::string& b) {
    const Bundle& e = *s.bundle;
    auto moved = detail::apply(e.transition(a, b), s.at(a), s.shift);
    std::vector<GradedFunction> out;
    for (auto& f : moved) out.push_back(pull_back(*e.base, f, b, a));
    return out;
}

/// Component degrees and sigma_b = T(a, b) sigma_a on every overlap, in chart-a variables.
/// On overlaps known only as jets the comparison uses jet_order when it is
/// given; a derivative of a W-jet is only determined through order W - 1.
inline Report section_check(const Section& s, const std::string& label = "section", std::optional<int> jet_order = std::nullopt) {
    Report r;
    const Bundle& e = *s.bundle;
    const Manifold& m = *e.base;
    for (auto& [chart, comps] : s.charts) {
        std::string name = label + " degrees " + chart;
        bool ok = comps.size() == e.fiber.size();
        for (std::size_t a = 0; ok && a < comps.size(); ++a)
            ok = comps[a].is_zero() || comps[a].degree() == e.fiber[a].degree + s.shift;
        if (ok) r.pass(name);
        else r.fail(name, "component degrees do not match the fiber coordinates shifted by " + std::to_string(s.shift));
    }
    if (!r.ok()) return r;
    for (auto& [key, ov] : m.overlaps) {
        auto& [a, b] = key;
        if (!s.charts.count(a) || !s.charts.count(b)) continue;
        auto lhs = detail::apply(localize(m, e.transition(a, b), a), s.at(a), s.shift);
        std::optional<std::string> res;
        for (std::size_t j = 0; j < lhs.size() && !res; ++j) {
            GradedFunction rhs = pull_back(m, s.at(b)[j], a, b);
            int order = m.jet(a) && jet_order ? *jet_order : m.W;
            if (!agrees_through(lhs[j], rhs, order, m.jet(a)))
                res = e.fiber[j].name + ": " + detail::residual_string(rhs, lhs[j], m.W);
        }
        r.add(label + " " + a + " " + b, !res, res);
    }
    return r;
}

/// (f.sigma)^a = (-1)^{|f| l} sigma^a f; the result has shift l + |f|.
inline Section module_action(const ChartFunction& f, const Section& s) {
    Section out{s.bundle, s.shift + f.degree(), {}};
    for (auto& [chart, comps] : s.charts) {
        const GradedFunction& fc = f.at(chart);
        std::vector<GradedFunction> v;
        for (std::size_t a = 0; a < comps.size(); ++a) {
            GradedFunction p = series_mul(comps[a], fc);
            if (p.is_zero()) p = p.with_degree(s.bundle->fiber[a].degree + out.shift);
            v.push_back(detail::with_sign(p, fc.degree() * s.shift));
        }
        out.charts.emplace(chart, v);
    }
    return out;
}

inline Section section_add(const Section& s, const Section& t) {
    if (s.bundle != t.bundle) throw Error("section_add: sections of different bundles");
    if (s.shift != t.shift) throw DegreeError("section_add: shifts " + std::to_string(s.shift) + " and " + std::to_string(t.shift));
    Section out{s.bundle, s.shift, {}};
    for (auto& [chart, comps] : s.charts) {
        auto it = t.charts.find(chart);
        if (it == t.charts.end()) continue;
        std::vector<GradedFunction> v;
        for (std::size_t a = 0; a < comps.size(); ++a) v.push_back(series_add(comps[a], it->second[a]));
        out.charts.emplace(chart, v);
    }
    return out;
}

/// Body values of the components at a point of the chart.
inline std::vector<Rational> section_value(const Section& s, const std::string& chart, const Point& m) {
    std::vector<Rational> out;
    for (auto& c : s.at(chart)) out.push_back(body_value(c, m));
    return out;
}

/// The value read in chart b at the image point equals the fiber map of
/// T(a, b) applied to the value read in chart a.
inline Report section_value_check(const Section& s, const std::string& a, const std::string& b, const Point& m,
                                  const std::string& label = "value") {
    Report r;
    const Bundle& e = *s.bundle;
    Point mb = map_point(*e.base, a, b, m);
    auto va = section_value(s, a, m), vb = section_value(s, b, mb);
    GradedMatrix t = e.transition(a, b);
    std::string name = label + " " + a + " " + b + " at (" + point_to_string(m) + ")";
    for (std::size_t j = 0; j < t.rows(); ++j) {
        Rational acc = 0;
        for (std::size_t k = 0; k < t.cols(); ++k) acc += body_value(t.at(j, k), m) * va[k];
        if (acc != vb[j]) {
            r.fail(name, e.fiber[j].name + ": " + to_string(vb[j]) + " vs " + to_string(acc));
            return r;
        }
    }
    r.pass(name);
    return r;
}

/// Chartwise matrix action of a morphism over the identity.
inline Section apply_morphism(const BundleMorphism& phi, const Section& s) {
    if (s.bundle != phi.source && s.bundle->name != phi.source->name)
        throw Error("morphism '" + phi.name + "' does not act on sections of '" + s.bundle->name + "'");
    if (phi.source->base != phi.target->base && phi.source->base->name != phi.target->base->name)
        throw Error("apply_morphism needs a morphism over the identity");
    Section out{phi.target, s.shift, {}};
    for (auto& [chart, comps] : s.charts) out.charts.emplace(chart, detail::apply(phi.at(chart), comps, s.shift));
    return out;
}

/// <omega, sigma> = sum_a (-1)^{l' q_a + u(q_a)} omega_a sigma^a for omega a
/// section of the dual bundle with shift l'; u(q) = 1 for odd positive q.
inline ChartFunction pair(const Section& omega, const Section& sigma) {
    const Bundle& e = *sigma.bundle;
    const Bundle& d = *omega.bundle;
    if (d.fiber.size() != e.fiber.size()) throw ShapeError("pair: ranks differ");
    for (std::size_t a = 0; a < e.fiber.size(); ++a)
        if (d.fiber[a].degree != -e.fiber[a].degree) throw DegreeError("pair: first argument is not a dual section");
    ChartFunction out{e.base, {}};
    int lp = omega.shift;
    for (auto& [chart, comps] : sigma.charts) {
        auto it = omega.charts.find(chart);
        if (it == omega.charts.end()) continue;
        GradedFunction acc(e.base->chart(chart).sig, lp + sigma.shift, e.W());
        for (std::size_t a = 0; a < comps.size(); ++a) {
            int q = e.fiber[a].degree;
            GradedFunction t = series_mul(it->second[a], comps[a]);
            if (!t.is_zero()) acc = series_add(acc, detail::with_sign(t, lp * q + detail::u(q)));
        }
        out.charts.emplace(chart, acc);
    }
    return out;
}

/// Dual frame element s^i on one chart: shift |k^i|, pairing to delta with frame_section.
inline Section dual_frame_section(const BundlePtr& dual, const std::string& chart, std::size_t i) {
    int q = -dual->fiber.at(i).degree;
    Section s{dual, q, {}};
    const Chart& c = dual->base->chart(chart);
    std::vector<GradedFunction> comps;
    for (std::size_t a = 0; a < dual->fiber.size(); ++a)
        comps.push_back(a == i ? GradedFunction::constant(c.sig, CoeffExpr(parity(q + detail::u(q)) ? -1 : 1), dual->W())
                               : GradedFunction(c.sig, dual->fiber[a].degree + q, dual->W()));
    s.charts.emplace(chart, comps);
    return s;
}

/// Function on a bundle's total space, chart by chart, in the bundle's total signature.
struct BundleFunction {
    BundlePtr bundle;
    std::map<std::string, GradedFunction> charts;
};

/// f = (-1)^{l'} sum_a (-1)^{l' q_a + u(q_a)} omega_a k^a; the dual frame
/// element s^i becomes (-1)^{q_i} k^i.
inline BundleFunction linear_function_of(const Section& omega, const BundlePtr& e) {
    BundleFunction out{e, {}};
    int lp = omega.shift;
    for (auto& [chart, comps] : omega.charts) {
        SigPtr tot = e->total_signature(chart);
        int W = e->W() + 1;
        GradedFunction acc(tot, lp, W);
        for (std::size_t a = 0; a < comps.size(); ++a) {
            if (comps[a].is_zero()) continue;
            int q = e->fiber[a].degree;
            GradedFunction term = series_mul(embed(comps[a], tot, W), GradedFunction::generator(tot, e->fiber[a].name, W));
            acc = series_add(acc, detail::with_sign(term, lp + lp * q + detail::u(q)));
        }
        out.charts.emplace(chart, acc);
    }
    return out;
}

/// Inverse of linear_function_of for fiber-linear functions.
inline Section dual_section_of(const BundleFunction& f, const BundlePtr& dual) {
    const Bundle& e = *f.bundle;
    if (f.charts.empty()) throw Error("dual_section_of: empty function");
    int lp = f.charts.begin()->second.degree();
    Section out{dual, lp, {}};
    for (auto& [chart, g] : f.charts) {
        if (!is_fiber_linear(g)) throw Error("function on chart '" + chart + "' is not linear in the fibers");
        SigPtr base = e.base->chart(chart).sig;
        std::vector<GradedFunction> comps;
        for (std::size_t a = 0; a < e.fiber.size(); ++a) {
            MultiIndex pattern(e.fiber.size(), 0);
            pattern[a] = 1;
            int q = e.fiber[a].degree;
            GradedFunction c = fiber_coefficient(g, base, pattern, e.W());
            comps.push_back(detail::with_sign(c, lp + lp * q + detail::u(q)));
        }
        out.charts.emplace(chart, comps);
    }
    return out;
}

/// Pulls a function on E over chart b back to E over chart a: base
/// coordinates through the overlap, fiber coordinates k_b = T(a, b) k_a.
inline GradedFunction pull_back_total(const Bundle& e, const GradedFunction& f, const std::string& a, const std::string& b) {
    const Manifold& m = *e.base;
    SigPtr ta = e.total_signature(a);
    int W = f.max_weight();
    Substitution s{ta, {}, {}};
    Substitution base = localize(m, m.substitution(a, b), a);
    for (auto& [name, g] : base.generators) s.generators.emplace(name, embed(g, ta, W));
    for (auto& [name, g] : base.symbols) s.symbols.emplace(name, embed(g, ta, W));
    GradedMatrix t = localize(m, e.transition(a, b), a);
    for (std::size_t j = 0; j < e.fiber.size(); ++j) {
        GradedFunction acc(ta, e.fiber[j].degree, W);
        for (std::size_t i = 0; i < e.fiber.size(); ++i)
            if (!t.at(j, i).is_zero())
                acc = series_add(acc, series_mul(embed(t.at(j, i), ta, W), GradedFunction::generator(ta, e.fiber[i].name, W)));
        s.generators.emplace(e.fiber[j].name, acc);
    }
    const Point* jet = m.jet(a);
    GradedFunction g = jet ? jet_truncate(f, map_point(m, a, b, *jet), m.W) : f;
    return substitute(g, s, W);
}

/// Agreement of a total-space function across overlaps.
inline Report bundle_function_check(const BundleFunction& f, const std::string& label = "function") {
    Report r;
    const Bundle& e = *f.bundle;
    const Manifold& m = *e.base;
    for (auto& [key, ov] : m.overlaps) {
        auto& [a, b] = key;
        if (!f.charts.count(a) || !f.charts.count(b)) continue;
        GradedFunction lhs = pull_back_total(e, f.charts.at(b), a, b);
        const Point* jet = m.jet(a);
        GradedFunction rhs = jet ? jet_truncate(f.charts.at(a), *jet, m.W) : f.charts.at(a);
        std::string name = label + " " + a + " " + b;
        int W = std::min(lhs.max_weight(), rhs.max_weight());
        if (agrees_through(lhs, rhs, W, jet)) r.pass(name);
        else r.fail(name, detail::residual_string(lhs, rhs, W));
    }
    return r;
}

/// Per chart: the homothety identity H_lambda^* f = sum_w lambda^w part_w
/// over fiber-weight parts, and linearity, i.e. H_lambda^* f = lambda f.
inline Report euler_check(const BundleFunction& f, const std::string& label = "function") {
    Report r;
    const std::string lam = "lambda__";
    for (auto& [chart, g] : f.charts) {
        SigPtr sig = g.sig();
        std::vector<std::string> syms = sig->symbols();
        syms.push_back(lam);
        SigPtr ext = make_signature(sig->generators(), syms);
        GradedFunction h = embed(g, ext, g.max_weight());
        GradedFunction scaled = homothety(h, lam);
        GradedFunction parts(ext, g.degree(), g.max_weight());
        std::string weights;
        for (auto& [w, part] : fiber_weight_parts(h)) {
            parts = series_add(parts, series_scale(CoeffExpr::symbol(lam).pow(static_cast<unsigned>(w)), part));
            weights += (weights.empty() ? "" : ",") + std::to_string(w);
        }
        bool hom = scaled == parts;
        r.add(label + " homothety " + chart, hom,
              hom ? std::nullopt : std::optional<std::string>(series_sub(scaled, parts).to_string()));
        GradedFunction lf = series_scale(CoeffExpr::symbol(lam), h);
        bool lin = scaled == lf;
        if (lin != is_fiber_linear(g)) throw Error("internal: Euler criterion disagrees with the weight decomposition");
        r.add(label + " linear " + chart, lin,
              lin ? std::nullopt : std::optional<std::string>("fiber weights " + (weights.empty() ? std::string("none") : weights)));
    }
    return r;
}

/// Components (-1)^{u(q_i)} d_i f with shift |f|, a section of the dual of the tangent bundle.
inline Section exterior_derivative(const ChartFunction& f, const BundlePtr& cotangent) {
    Section out{cotangent, f.degree(), {}};
    for (auto& [chart, g] : f.charts) {
        const Chart& c = f.base->chart(chart);
        auto names = c.coordinate_names();
        auto q = c.coordinate_degrees();
        std::vector<GradedFunction> comps;
        for (std::size_t i = 0; i < names.size(); ++i) {
            GradedFunction d = partial_derivative(g, names[i]);
            if (d.is_zero()) d = d.with_degree(g.degree() - q[i]);
            comps.push_back(detail::with_sign(d, detail::u(q[i])));
        }
        out.charts.emplace(chart, comps);
    }
    return out;
}

/// Section of the tangent bundle for a vector field X of degree l given by
/// its values X(x^a): sigma^a = (-1)^{(l+1) q_a} X(x^a).
inline Section vector_field_section(const BundlePtr& tangent, const std::string& chart,
                                    const std::vector<GradedFunction>& values, int l) {
    Section s{tangent, l, {}};
    std::vector<GradedFunction> comps;
    for (std::size_t a = 0; a < values.size(); ++a) {
        int q = tangent->fiber.at(a).degree;
        GradedFunction v = values[a].is_zero() ? values[a].with_degree(q + l) : values[a];
        comps.push_back(detail::with_sign(v, (l + 1) * q));
    }
    s.charts.emplace(chart, comps);
    return s;
}

}  // namespace gvb
