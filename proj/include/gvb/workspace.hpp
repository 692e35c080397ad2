#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gvb/dsl.hpp"
#include "gvb/sections.hpp"

namespace gvb {

struct MatrixEntry {
    ManifoldPtr manifold;
    std::string chart;
    GradedMatrix matrix;
};

/// Declarations resolved against each other at a fixed truncation weight.
struct Workspace {
    int W = 8;
    dsl::Document doc;
    std::map<std::string, ManifoldPtr> manifolds;
    std::map<std::string, BundlePtr> bundles;
    std::map<std::string, std::string> bundle_kind;
    std::map<std::string, BaseMap> maps;
    std::map<std::string, BundleMorphism> morphisms;
    std::map<std::string, Section> sections;
    std::map<std::string, ChartFunction> functions;
    std::map<std::string, BundleFunction> bundle_functions;
    std::map<std::string, MatrixEntry> matrices;

    const ManifoldPtr& manifold(const std::string& name, const std::string& user) const {
        auto it = manifolds.find(name);
        if (it == manifolds.end()) throw Error(user + " refers to unknown manifold '" + name + "'");
        return it->second;
    }
    const BundlePtr& bundle(const std::string& name, const std::string& user) const {
        auto it = bundles.find(name);
        if (it == bundles.end()) throw Error(user + " refers to unknown bundle '" + name + "'");
        return it->second;
    }
    const BaseMap& map(const std::string& name, const std::string& user) const {
        auto it = maps.find(name);
        if (it == maps.end()) throw Error(user + " refers to unknown map '" + name + "'");
        return it->second;
    }
};

namespace detail {

inline GradedFunction parse_at(const dsl::Expr& e, const SigPtr& sig, int W, const std::string& where) {
    try {
        return parse_series(e.text, sig, W);
    } catch (const ParseError& err) {
        throw dsl::InputError(e.loc, where + ": " + err.what() + " in '" + e.text + "'");
    } catch (const Error& err) {
        throw dsl::InputError(e.loc, where + ": " + err.what());
    }
}

inline Rational rational_at(const dsl::Expr& e, const std::string& where) {
    CoeffExpr c;
    try {
        c = parse_coeff(e.text, {});
    } catch (const Error& err) {
        throw dsl::InputError(e.loc, where + ": " + err.what());
    }
    if (!c.is_constant()) throw dsl::InputError(e.loc, where + ": '" + e.text + "' is not a rational number");
    return c.constant_value();
}

inline Point point_from(const std::vector<dsl::Assign>& values, const std::string& where) {
    Point p;
    for (auto& [name, e] : values) p[name] = rational_at(e, where);
    return p;
}

inline GradedMatrix matrix_at(const dsl::MatrixText& text, const SigPtr& sig, int W, const std::vector<int>& rows,
                              const std::vector<int>& cols, const std::string& where) {
    if (text.size() != rows.size())
        throw Error(where + ": expected " + std::to_string(rows.size()) + " rows, found " + std::to_string(text.size()));
    GradedMatrix out(sig, W, rows, cols);
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i].size() != cols.size())
            throw dsl::InputError(text[i].empty() ? dsl::Loc{} : text[i][0].loc,
                                  where + ": row " + std::to_string(i) + " has " + std::to_string(text[i].size()) +
                                      " entries, expected " + std::to_string(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) {
            GradedFunction f = parse_at(text[i][k], sig, W, where);
            if (!f.is_zero() && f.degree() != rows[i] - cols[k])
                throw dsl::InputError(text[i][k].loc, where + ": entry (" + std::to_string(i) + "," + std::to_string(k) +
                                                          ") has degree " + std::to_string(f.degree()) + ", expected " +
                                                          std::to_string(rows[i] - cols[k]));
            out.set(i, k, f.is_zero() ? f.with_degree(rows[i] - cols[k]) : f);
        }
    }
    return out;
}

inline ManifoldPtr build_manifold(const dsl::ManifoldDecl& d, int W) {
    auto m = std::make_shared<Manifold>();
    m->name = d.name;
    m->W = W;
    for (auto& c : d.charts) {
        std::vector<Generator> gens;
        for (auto& [n, q] : c.coords) gens.push_back({n, q, false});
        try {
            m->charts.push_back(make_chart(c.name, c.base, gens));
        } catch (const Error& e) {
            throw dsl::InputError(d.loc, "manifold '" + d.name + "': " + e.what());
        }
    }
    auto images = [&](const std::vector<dsl::Assign>& as, const std::string& a, const std::string& b) {
        std::map<std::string, GradedFunction> out;
        const Chart& ca = m->chart(a);
        for (auto& [coord, e] : as) {
            if (!m->chart(b).has_coordinate(coord))
                throw dsl::InputError(e.loc, "overlap " + a + " " + b + ": chart '" + b + "' has no coordinate '" + coord + "'");
            out.emplace(coord, parse_at(e, ca.sig, W, "overlap " + a + " " + b));
        }
        return out;
    };
    std::vector<std::pair<ChartPair, Point>> derived_jets;
    for (auto& o : d.overlaps) {
        std::string where = "manifold '" + d.name + "' overlap " + o.from + " " + o.to;
        if (!m->has_chart(o.from) || !m->has_chart(o.to)) throw dsl::InputError(d.loc, where + ": unknown chart");
        Overlap fwd{o.from, o.to, images(o.images, o.from, o.to), std::nullopt};
        if (!o.at.empty()) fwd.jet = point_from(o.at, where);
        m->overlaps[{o.from, o.to}] = fwd;
        if (!o.inverse.empty()) {
            Overlap back{o.to, o.from, images(o.inverse, o.to, o.from), std::nullopt};
            m->overlaps[{o.to, o.from}] = back;
            if (fwd.jet) derived_jets.push_back({{o.to, o.from}, *fwd.jet});
        }
    }
    // The reverse direction of a jet overlap is a jet at the image point.
    for (auto& [key, p] : derived_jets) {
        Point image = map_point(*m, key.second, key.first, p);
        m->overlaps.at(key).jet = image;
    }
    for (auto& p : d.points) {
        std::string where = "point '" + p.name + "'";
        if (!m->has_chart(p.chart)) throw dsl::InputError(d.loc, where + ": unknown chart '" + p.chart + "'");
        m->points[p.name] = {p.chart, point_from(p.values, where)};
    }
    return m;
}

}  // namespace detail

inline Workspace build_workspace(const dsl::Document& doc, int W = 8) {
    using namespace detail;
    Workspace ws;
    ws.W = W;
    ws.doc = doc;
    auto fresh = [&](const std::string& name, const dsl::Loc& loc) {
        if (ws.manifolds.count(name) || ws.bundles.count(name) || ws.maps.count(name) || ws.morphisms.count(name) ||
            ws.sections.count(name) || ws.functions.count(name) || ws.bundle_functions.count(name) || ws.matrices.count(name))
            throw dsl::InputError(loc, "name '" + name + "' is declared twice");
    };
    for (auto& [kind, i] : doc.order) {
        if (kind == "manifold") {
            auto& d = doc.manifolds[i];
            fresh(d.name, d.loc);
            ws.manifolds[d.name] = build_manifold(d, W);
        } else if (kind == "bundle") {
            auto& d = doc.bundles[i];
            fresh(d.name, d.loc);
            std::string who = "bundle '" + d.name + "'";
            try {
                Bundle b;
                if (d.kind == "explicit") {
                    b.name = d.name;
                    b.base = ws.manifold(d.base, who);
                    for (auto& [n, q] : d.fiber) b.fiber.push_back({n, q});
                    for (auto& t : d.transitions) {
                        std::string where = who + " transition " + t.from + " " + t.to;
                        if (!b.base->has_overlap(t.from, t.to)) throw dsl::InputError(d.loc, where + ": no such overlap");
                        b.transitions.emplace(ChartPair{t.from, t.to},
                                              matrix_at(t.rows, b.base->chart(t.from).sig, W, b.degrees(), b.degrees(), where));
                    }
                    complete_transitions(b);
                } else if (d.kind == "tangent") {
                    b = tangent_bundle(ws.manifold(d.operands[0], who), d.name);
                } else if (d.kind == "dual") {
                    b = dual_bundle(*ws.bundle(d.operands[0], who), d.name);
                } else if (d.kind == "shift") {
                    b = shift_bundle(*ws.bundle(d.operands[0], who), d.shift, d.name);
                } else if (d.kind == "tensor") {
                    b = tensor_bundle(*ws.bundle(d.operands[0], who), *ws.bundle(d.operands[1], who), d.name);
                } else if (d.kind == "sum") {
                    b = direct_sum(*ws.bundle(d.operands[0], who), *ws.bundle(d.operands[1], who), d.name);
                } else {
                    b = pullback_bundle(*ws.bundle(d.operands[0], who), ws.map(d.operands[1], who), d.name);
                }
                ws.bundles[d.name] = std::make_shared<const Bundle>(std::move(b));
                ws.bundle_kind[d.name] = d.kind;
            } catch (const dsl::InputError&) {
                throw;
            } catch (const Error& e) {
                throw dsl::InputError(d.loc, who + ": " + e.what());
            }
        } else if (kind == "map") {
            auto& d = doc.maps[i];
            fresh(d.name, d.loc);
            std::string who = "map '" + d.name + "'";
            try {
                BaseMap f{d.name, ws.manifold(d.source, who), ws.manifold(d.target, who), {}, {}};
                for (auto& c : d.charts) {
                    if (!f.source->has_chart(c.source) || !f.target->has_chart(c.target))
                        throw dsl::InputError(d.loc, who + ": unknown chart in '" + c.source + " -> " + c.target + "'");
                    f.assign[c.source] = c.target;
                    auto& im = f.images[c.source];
                    for (auto& [coord, e] : c.images) {
                        if (!f.target->chart(c.target).has_coordinate(coord))
                            throw dsl::InputError(e.loc, who + ": chart '" + c.target + "' has no coordinate '" + coord + "'");
                        im.emplace(coord, parse_at(e, f.source->chart(c.source).sig, W, who));
                    }
                }
                ws.maps.emplace(d.name, f);
            } catch (const dsl::InputError&) {
                throw;
            } catch (const Error& e) {
                throw dsl::InputError(d.loc, who + ": " + e.what());
            }
        } else if (kind == "morphism") {
            auto& d = doc.morphisms[i];
            fresh(d.name, d.loc);
            std::string who = "morphism '" + d.name + "'";
            try {
                BundleMorphism phi{d.name, ws.bundle(d.source, who), ws.bundle(d.target, who), {}, {}};
                if (d.over.empty()) {
                    if (phi.source->base != phi.target->base)
                        throw Error("source and target have different bases; name the base map with 'over'");
                    phi.over = identity_map(phi.source->base);
                } else {
                    phi.over = ws.map(d.over, who);
                }
                for (auto& [c, text] : d.charts)
                    phi.charts.emplace(c, matrix_at(text, phi.source->base->chart(c).sig, W, phi.target->degrees(),
                                                    phi.source->degrees(), who + " chart " + c));
                ws.morphisms.emplace(d.name, phi);
            } catch (const dsl::InputError&) {
                throw;
            } catch (const Error& e) {
                throw dsl::InputError(d.loc, who + ": " + e.what());
            }
        } else if (kind == "section") {
            auto& d = doc.sections[i];
            fresh(d.name, d.loc);
            std::string who = "section '" + d.name + "'";
            try {
                Section s{ws.bundle(d.bundle, who), d.shift, {}};
                for (auto& [c, v] : d.charts) {
                    if (v.size() != s.bundle->fiber.size())
                        throw dsl::InputError(d.loc, who + " chart " + c + ": expected " + std::to_string(s.bundle->fiber.size()) +
                                                         " components");
                    std::vector<GradedFunction> comps;
                    const SigPtr& sig = s.bundle->base->chart(c).sig;
                    for (std::size_t a = 0; a < v.size(); ++a) {
                        GradedFunction f = parse_at(v[a], sig, W, who);
                        comps.push_back(f.is_zero() ? f.with_degree(s.bundle->fiber[a].degree + d.shift) : f);
                    }
                    s.charts.emplace(c, comps);
                }
                ws.sections.emplace(d.name, s);
            } catch (const dsl::InputError&) {
                throw;
            } catch (const Error& e) {
                throw dsl::InputError(d.loc, who + ": " + e.what());
            }
        } else if (kind == "function") {
            auto& d = doc.functions[i];
            fresh(d.name, d.loc);
            std::string who = "function '" + d.name + "'";
            try {
                if (ws.manifolds.count(d.on)) {
                    ChartFunction f{ws.manifolds.at(d.on), {}};
                    for (auto& [c, e] : d.charts) f.charts.emplace(c, parse_at(e, f.base->chart(c).sig, W, who));
                    ws.functions.emplace(d.name, f);
                } else {
                    BundleFunction f{ws.bundle(d.on, who), {}};
                    for (auto& [c, e] : d.charts) f.charts.emplace(c, parse_at(e, f.bundle->total_signature(c), W, who));
                    ws.bundle_functions.emplace(d.name, f);
                }
            } catch (const dsl::InputError&) {
                throw;
            } catch (const Error& e) {
                throw dsl::InputError(d.loc, who + ": " + e.what());
            }
        } else {
            auto& d = doc.matrices[i];
            fresh(d.name, d.loc);
            std::string who = "matrix '" + d.name + "'";
            try {
                ManifoldPtr m = ws.manifold(d.manifold, who);
                ws.matrices.emplace(d.name, MatrixEntry{m, d.chart, matrix_at(d.entries, m->chart(d.chart).sig, W, d.rows, d.cols, who)});
            } catch (const dsl::InputError&) {
                throw;
            } catch (const Error& e) {
                throw dsl::InputError(d.loc, who + ": " + e.what());
            }
        }
    }
    return ws;
}

}  // namespace gvb
