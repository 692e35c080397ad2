#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gvb/error.hpp"
#include "gvb/grading.hpp"
#include "gvb/report.hpp"
#include "gvb/series.hpp"

namespace gvb {

/// Chart of a graded manifold: degree-0 base coordinates (coefficient symbols)
/// and nonzero-degree generators. Coordinates are listed base first.
struct Chart {
    std::string name;
    std::vector<std::string> base;
    std::vector<Generator> coords;
    SigPtr sig;

    std::vector<std::string> coordinate_names() const {
        std::vector<std::string> out = base;
        for (auto& g : coords) out.push_back(g.name);
        return out;
    }

    std::vector<int> coordinate_degrees() const {
        std::vector<int> out(base.size(), 0);
        for (auto& g : coords) out.push_back(g.degree);
        return out;
    }

    int degree_of(const std::string& coord) const {
        for (auto& g : coords)
            if (g.name == coord) return g.degree;
        return 0;
    }

    bool has_coordinate(const std::string& coord) const {
        if (std::find(base.begin(), base.end(), coord) != base.end()) return true;
        return sig->index_of(coord) >= 0;
    }

    GradedFunction coordinate(const std::string& coord, int W) const {
        if (sig->index_of(coord) >= 0) return GradedFunction::generator(sig, coord, W);
        if (sig->has_symbol(coord)) return GradedFunction::constant(sig, CoeffExpr::symbol(coord), W);
        throw Error("chart '" + name + "' has no coordinate '" + coord + "'");
    }

    GradedDimension dimension() const {
        GradedDimension d;
        for (int q : coordinate_degrees()) d.add(q, 1);
        return d;
    }
};

inline Chart make_chart(std::string name, std::vector<std::string> base, std::vector<Generator> coords) {
    for (auto& g : coords) {
        if (g.degree == 0) throw DegreeError("coordinate '" + g.name + "' of chart '" + name + "' has degree 0; list it under base");
        g.fiber = false;
    }
    SigPtr sig = make_signature(coords, base);
    return Chart{std::move(name), std::move(base), std::move(coords), std::move(sig)};
}

/// Ordered overlap (from, to): each coordinate of `to` expressed in `from` variables.
struct Overlap {
    std::string from, to;
    std::map<std::string, GradedFunction> images;
    std::optional<Point> jet;
};

using ChartPair = std::pair<std::string, std::string>;

class Manifold {
public:
    std::string name;
    int W = 8;
    std::vector<Chart> charts;
    std::map<ChartPair, Overlap> overlaps;
    std::map<std::string, std::pair<std::string, Point>> points;

    const Chart& chart(const std::string& c) const {
        for (auto& ch : charts)
            if (ch.name == c) return ch;
        throw Error("manifold '" + name + "' has no chart '" + c + "'");
    }
    bool has_chart(const std::string& c) const {
        for (auto& ch : charts)
            if (ch.name == c) return true;
        return false;
    }

    bool has_overlap(const std::string& a, const std::string& b) const { return overlaps.count({a, b}) > 0; }

    const Overlap& overlap(const std::string& a, const std::string& b) const {
        auto it = overlaps.find({a, b});
        if (it == overlaps.end()) throw Error("manifold '" + name + "' has no overlap " + a + " " + b);
        return it->second;
    }

    /// Pulls functions of chart b back to chart a along the overlap map.
    Substitution substitution(const std::string& a, const std::string& b) const {
        const Overlap& ov = overlap(a, b);
        const Chart& cb = chart(b);
        Substitution s{chart(a).sig, {}, {}};
        for (auto& c : cb.coordinate_names()) {
            auto it = ov.images.find(c);
            if (it == ov.images.end()) throw Error("overlap " + a + " " + b + " gives no image for '" + c + "'");
            if (cb.sig->index_of(c) >= 0) s.generators.emplace(c, it->second);
            else s.symbols.emplace(c, it->second);
        }
        return s;
    }

    /// Point around which identities in chart-a variables hold only as jets.
    const Point* jet(const std::string& a) const {
        for (auto& [key, ov] : overlaps)
            if (key.first == a && ov.jet) return &*ov.jet;
        return nullptr;
    }

    GradedDimension dimension() const { return charts.empty() ? GradedDimension{} : charts.front().dimension(); }

    /// Ordered overlaps (a, b) with a != b, in key order.
    std::vector<ChartPair> overlap_pairs() const {
        std::vector<ChartPair> out;
        for (auto& [key, ov] : overlaps) out.push_back(key);
        return out;
    }

    /// Triples (a, b, c) of distinct charts with all three ordered overlaps present.
    std::vector<std::vector<std::string>> triples() const {
        std::vector<std::vector<std::string>> out;
        for (auto& a : charts)
            for (auto& b : charts)
                for (auto& c : charts) {
                    if (a.name == b.name || b.name == c.name || a.name == c.name) continue;
                    if (has_overlap(a.name, b.name) && has_overlap(b.name, c.name) && has_overlap(a.name, c.name))
                        out.push_back({a.name, b.name, c.name});
                }
        return out;
    }
};

using ManifoldPtr = std::shared_ptr<const Manifold>;

/// Images of a point under the bodies of an overlap map.
inline Point map_point(const Manifold& m, const std::string& a, const std::string& b, const Point& p) {
    Point out;
    const Overlap& ov = m.overlap(a, b);
    for (auto& s : m.chart(b).base) {
        auto it = ov.images.find(s);
        if (it == ov.images.end()) throw Error("overlap " + a + " " + b + " gives no image for '" + s + "'");
        out[s] = body_value(it->second, p);
    }
    return out;
}

/// f cut to Taylor polynomials at chart a's jet point, if it has one.
inline GradedFunction localize(const Manifold& m, const GradedFunction& f, const std::string& a) {
    const Point* j = m.jet(a);
    return j ? jet_truncate(f, *j, m.W) : f;
}

inline Substitution localize(const Manifold& m, Substitution s, const std::string& a) {
    if (!m.jet(a)) return s;
    for (auto& [k, g] : s.generators) g = localize(m, g, a);
    for (auto& [k, g] : s.symbols) g = localize(m, g, a);
    return s;
}

/// Pulls f on chart b back to chart a. Where chart-a identities are only jets,
/// inputs are first cut to Taylor polynomials, which keeps the result polynomial.
inline GradedFunction pull_back(const Manifold& m, const GradedFunction& f, const std::string& a, const std::string& b) {
    if (a == b) return localize(m, f, a);
    Substitution s = localize(m, m.substitution(a, b), a);
    const Point* j = m.jet(a);
    GradedFunction g = j ? jet_truncate(f, map_point(m, a, b, *j), m.W) : f;
    return substitute(g, s, m.W);
}

namespace detail {

inline std::string residual_string(const GradedFunction& a, const GradedFunction& b, int W) {
    GradedFunction x = a.truncated(W), y = b.truncated(W);
    if (x.is_zero()) x = x.with_degree(y.degree());
    if (y.is_zero()) y = y.with_degree(x.degree());
    if (x.degree() != y.degree()) return "degree " + std::to_string(x.degree()) + " vs " + std::to_string(y.degree());
    return series_sub(x, y).to_string();
}

}  // namespace detail

/// Chart dimensions, image degrees, mutual inverses and transitivity on triples.
inline Report atlas_check(const Manifold& m) {
    Report r;
    int W = m.W;
    GradedDimension dim = m.dimension();
    for (auto& c : m.charts) {
        std::string name = "dimension " + c.name;
        if (c.dimension() == dim) r.pass(name);
        else r.fail(name, c.dimension().to_string() + " vs " + dim.to_string());
    }
    std::set<ChartPair> valid;
    for (auto& [key, ov] : m.overlaps) {
        auto& [a, b] = key;
        const Chart& cb = m.chart(b);
        bool complete = true;
        for (auto& coord : cb.coordinate_names()) {
            std::string name = "degree " + a + " " + b + ": " + coord;
            auto it = ov.images.find(coord);
            if (it == ov.images.end()) {
                r.fail(name, "missing image");
                complete = false;
                continue;
            }
            int want = cb.degree_of(coord);
            if (it->second.is_zero() || it->second.degree() == want) r.pass(name);
            else {
                r.fail(name, "image has degree " + std::to_string(it->second.degree()) + ", expected " + std::to_string(want));
                complete = false;
            }
        }
        if (complete) valid.insert(key);
    }
    for (auto& [key, ov] : m.overlaps) {
        auto& [a, b] = key;
        if (!m.has_overlap(b, a)) {
            r.fail("inverse " + a + " " + b, "no overlap " + b + " " + a);
            continue;
        }
        if (!valid.count(key) || !valid.count({b, a})) continue;
        const Chart& ca = m.chart(a);
        const Overlap& back = m.overlap(b, a);
        for (auto& coord : ca.coordinate_names()) {
            std::string name = "inverse " + a + " " + b + ": " + coord;
            GradedFunction round = pull_back(m, back.images.at(coord), a, b);
            GradedFunction want = ca.coordinate(coord, W);
            if (agrees_through(round, want, W, m.jet(a))) r.pass(name);
            else r.fail(name, detail::residual_string(round, want, W));
        }
    }
    for (auto& t : m.triples()) {
        const std::string &a = t[0], &b = t[1], &c = t[2];
        if (!valid.count({a, b}) || !valid.count({b, c}) || !valid.count({a, c})) continue;
        for (auto& coord : m.chart(c).coordinate_names()) {
            std::string name = "transitivity " + a + " " + b + " " + c + ": " + coord;
            GradedFunction via = pull_back(m, m.overlap(b, c).images.at(coord), a, b);
            GradedFunction direct = localize(m, m.overlap(a, c).images.at(coord), a);
            if (agrees_through(via, direct, W, m.jet(a))) r.pass(name);
            else r.fail(name, detail::residual_string(via, direct, W));
        }
    }
    return r;
}

/// Smooth map between graded manifolds, given per source chart by the images
/// of the assigned target chart's coordinates.
struct BaseMap {
    std::string name;
    ManifoldPtr source, target;
    std::map<std::string, std::string> assign;
    std::map<std::string, std::map<std::string, GradedFunction>> images;

    const std::string& target_chart(const std::string& src) const {
        auto it = assign.find(src);
        if (it == assign.end()) throw Error("map '" + name + "' assigns no target chart to '" + src + "'");
        return it->second;
    }

    /// Pulls functions on the assigned target chart back to source chart src.
    Substitution substitution(const std::string& src) const {
        const Chart& tc = target->chart(target_chart(src));
        auto it = images.find(src);
        if (it == images.end()) throw Error("map '" + name + "' has no images on chart '" + src + "'");
        Substitution s{source->chart(src).sig, {}, {}};
        for (auto& c : tc.coordinate_names()) {
            auto im = it->second.find(c);
            if (im == it->second.end()) throw Error("map '" + name + "' gives no image for '" + c + "' on chart '" + src + "'");
            if (tc.sig->index_of(c) >= 0) s.generators.emplace(c, im->second);
            else s.symbols.emplace(c, im->second);
        }
        return s;
    }

    Point map_point(const std::string& src, const Point& p) const {
        Point out;
        const Chart& tc = target->chart(target_chart(src));
        for (auto& s : tc.base) out[s] = body_value(images.at(src).at(s), p);
        return out;
    }

    /// Pulls g on the assigned target chart back to source chart src, cut to
    /// Taylor polynomials when src carries a jet point.
    GradedFunction pull(const GradedFunction& g, const std::string& src) const {
        const Manifold& M = *source;
        Substitution s = localize(M, substitution(src), src);
        const Point* j = M.jet(src);
        GradedFunction h = j ? jet_truncate(g, map_point(src, *j), M.W) : g;
        return substitute(h, s, M.W);
    }
};

/// Identity map of a manifold onto itself.
inline BaseMap identity_map(const ManifoldPtr& m) {
    BaseMap f{"id", m, m, {}, {}};
    for (auto& c : m->charts) {
        f.assign[c.name] = c.name;
        for (auto& coord : c.coordinate_names()) f.images[c.name].emplace(coord, c.coordinate(coord, m->W));
    }
    return f;
}

/// Degrees of images and compatibility with both atlases on source overlaps.
inline Report map_check(const BaseMap& f) {
    Report r;
    const Manifold& M = *f.source;
    const Manifold& N = *f.target;
    int W = std::min(M.W, N.W);
    for (auto& c : M.charts) {
        std::string name = "assignment " + f.name + " " + c.name;
        if (!f.assign.count(c.name) || !f.images.count(c.name)) {
            r.fail(name, "chart '" + c.name + "' is not assigned a target chart");
            continue;
        }
        r.pass(name);
        const Chart& tc = N.chart(f.target_chart(c.name));
        for (auto& coord : tc.coordinate_names()) {
            std::string dn = "degree " + f.name + " " + c.name + ": " + coord;
            auto it = f.images.at(c.name).find(coord);
            if (it == f.images.at(c.name).end()) r.fail(dn, "missing image");
            else if (!it->second.is_zero() && it->second.degree() != tc.degree_of(coord))
                r.fail(dn, "image has degree " + std::to_string(it->second.degree()));
            else r.pass(dn);
        }
    }
    if (!r.ok()) return r;
    for (auto& [key, ov] : M.overlaps) {
        auto& [a, b] = key;
        const std::string &ta = f.target_chart(a), &tb = f.target_chart(b);
        if (ta != tb && !N.has_overlap(ta, tb)) {
            r.fail("compatibility " + f.name + " " + a + " " + b, "target charts " + ta + " and " + tb + " do not overlap");
            continue;
        }
        for (auto& coord : N.chart(tb).coordinate_names()) {
            std::string name = "compatibility " + f.name + " " + a + " " + b + ": " + coord;
            GradedFunction via_b = pull_back(M, f.images.at(b).at(coord), a, b);
            GradedFunction via_a = ta == tb ? localize(M, f.images.at(a).at(coord), a)
                                            : f.pull(N.overlap(ta, tb).images.at(coord), a);
            if (agrees_through(via_b, via_a, W, M.jet(a))) r.pass(name);
            else r.fail(name, detail::residual_string(via_b, via_a, W));
        }
    }
    return r;
}

}  // namespace gvb
