#pragma once

#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gvb/workspace.hpp"

namespace gvb::cli {

using json = nlohmann::json;

struct Options {
    std::string command;
    std::vector<std::string> files;
    int weight = 8;
    std::string format = "json";
    std::vector<std::string> points, bundles, names;
    int shift = 1;
};

/// Collected output of one command.
struct Result {
    Report report;
    json data = json::object();
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> all{"check-atlas", "check-cocycle", "tangent", "dual", "tensor",
                                              "shift", "pullback", "invert", "check-morphism", "classify",
                                              "check-section", "value", "euler-check", "derive"};
    return all;
}

namespace detail {

inline void prefixed(Report& into, const Report& from, const std::string& prefix) {
    for (auto& c : from.checks) into.add(prefix + ": " + c.name, c.pass, c.residual);
    for (auto& w : from.warnings) into.warnings.push_back(prefix + ": " + w);
}

inline json matrix_json(const GradedMatrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < m.cols(); ++k) row.push_back(m.at(i, k).to_string());
        rows.push_back(row);
    }
    return rows;
}

inline json bundle_json(const Bundle& e) {
    json fiber = json::array();
    for (auto& f : e.fiber) fiber.push_back({{"name", f.name}, {"degree", f.degree}});
    json transitions = json::object();
    for (auto& [key, t] : e.transitions) transitions[key.first + " " + key.second] = matrix_json(t);
    return {{"base", e.base->name}, {"fiber", fiber}, {"rank", e.rank().to_string()}, {"transitions", transitions}};
}

inline json point_json(const Point& p) {
    json out = json::object();
    for (auto& [k, v] : p) out[k] = to_string(v);
    return out;
}

/// Entrywise equality of transition matrices, ignoring degree labels.
inline bool same_transitions(const Bundle& a, const Bundle& b) {
    if (a.transitions.size() != b.transitions.size()) return false;
    for (auto& [key, t] : a.transitions) {
        auto it = b.transitions.find(key);
        if (it == b.transitions.end() || it->second.rows() != t.rows() || it->second.cols() != t.cols()) return false;
        for (std::size_t i = 0; i < t.rows(); ++i)
            for (std::size_t k = 0; k < t.cols(); ++k)
                if (it->second.at(i, k).terms() != t.at(i, k).terms()) return false;
    }
    return true;
}

/// "p" (a declared point), "A:x=0,y=1/2", or "x=0" (first chart with exactly these base coordinates).
inline std::pair<std::string, Point> resolve_point(const Manifold& m, const std::string& spec) {
    auto named = m.points.find(spec);
    if (named != m.points.end()) return named->second;
    std::string body = spec, chart;
    if (auto colon = spec.find(':'); colon != std::string::npos) {
        chart = spec.substr(0, colon);
        body = spec.substr(colon + 1);
    }
    Point p;
    std::size_t start = 0;
    while (start < body.size()) {
        std::size_t comma = body.find(',', start);
        std::string part = body.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        auto eq = part.find('=');
        if (eq == std::string::npos) throw Error("point '" + spec + "': expected name=value");
        std::string key = dsl::detail::squeeze(part.substr(0, eq));
        CoeffExpr v = parse_coeff(part.substr(eq + 1), {});
        if (!v.is_constant()) throw Error("point '" + spec + "': value of '" + key + "' is not rational");
        p[key] = v.constant_value();
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (!chart.empty()) {
        if (!m.has_chart(chart)) throw Error("point '" + spec + "': manifold '" + m.name + "' has no chart '" + chart + "'");
    } else {
        for (auto& c : m.charts) {
            std::set<std::string> base(c.base.begin(), c.base.end()), keys;
            for (auto& [k, v] : p) keys.insert(k);
            if (base == keys) {
                chart = c.name;
                break;
            }
        }
        if (chart.empty()) throw Error("point '" + spec + "' matches no chart of manifold '" + m.name + "'");
    }
    for (auto& s : m.chart(chart).base)
        if (!p.count(s)) throw Error("point '" + spec + "' gives no value for '" + s + "' in chart '" + chart + "'");
    return {chart, p};
}

/// Points given on the command line, or the manifold's declared points.
inline std::vector<std::pair<std::string, Point>> points_for(const Manifold& m, const Options& o) {
    std::vector<std::pair<std::string, Point>> out;
    for (auto& spec : o.points) out.push_back(resolve_point(m, spec));
    if (out.empty())
        for (auto& [name, p] : m.points) out.push_back(p);
    return out;
}

template <class Map>
std::vector<std::string> selected(const Map& all, const std::vector<std::string>& wanted, const std::string& what) {
    std::vector<std::string> out;
    if (wanted.empty()) {
        for (auto& [name, v] : all) out.push_back(name);
        return out;
    }
    for (auto& n : wanted) {
        if (!all.count(n)) throw Error("no " + what + " named '" + n + "'");
        out.push_back(n);
    }
    return out;
}

inline std::vector<std::string> wanted_bundles(const Options& o) {
    std::vector<std::string> out = o.bundles;
    out.insert(out.end(), o.names.begin(), o.names.end());
    return out;
}

inline std::string matrix_residual(const GradedMatrix& a, const GradedMatrix& b, int W, const Point* jet) {
    auto r = matrix_residuals(a, b, W, jet);
    return r.empty() ? std::string() : r.front();
}

}  // namespace detail

inline Result execute(const Workspace& ws, const Options& o) {
    using namespace detail;
    Result res;
    Report& r = res.report;
    json& data = res.data;
    const std::string& cmd = o.command;

    if (cmd == "check-atlas") {
        for (auto& name : selected(ws.manifolds, o.names, "manifold")) {
            const Manifold& m = *ws.manifolds.at(name);
            prefixed(r, atlas_check(m), name);
            json charts = json::array();
            for (auto& c : m.charts) charts.push_back(c.name);
            data["manifolds"][name] = {{"charts", charts}, {"dimension", m.dimension().to_string()}};
        }
        for (auto& [name, f] : ws.maps) prefixed(r, map_check(f), name);
    } else if (cmd == "check-cocycle") {
        for (auto& name : selected(ws.bundles, wanted_bundles(o), "bundle")) {
            const Bundle& e = *ws.bundles.at(name);
            prefixed(r, bundle_cocycle_check(e), name);
            data["bundles"][name] = {{"rank", e.rank().to_string()}, {"kind", ws.bundle_kind.at(name)}};
        }
    } else if (cmd == "tangent") {
        for (auto& name : selected(ws.manifolds, o.names, "manifold")) {
            Bundle t = tangent_bundle(ws.manifolds.at(name));
            prefixed(r, bundle_cocycle_check(t), t.name);
            Bundle td = dual_bundle(t);
            prefixed(r, bundle_cocycle_check(td), td.name);
            r.add(t.name + ": double dual", same_transitions(dual_bundle(td), t));
            data["bundles"][t.name] = bundle_json(t);
        }
    } else if (cmd == "dual") {
        for (auto& name : selected(ws.bundles, wanted_bundles(o), "bundle")) {
            const Bundle& e = *ws.bundles.at(name);
            Bundle d = dual_bundle(e);
            prefixed(r, bundle_cocycle_check(d), d.name);
            r.add(name + ": involution", same_transitions(dual_bundle(d), e));
            bool rank = d.rank() == gdim_dual(e.rank());
            r.add(name + ": dual rank", rank, rank ? std::nullopt : std::optional<std::string>(d.rank().to_string()));
            data["bundles"][d.name] = bundle_json(d);
        }
    } else if (cmd == "shift") {
        for (auto& name : selected(ws.bundles, wanted_bundles(o), "bundle")) {
            const Bundle& e = *ws.bundles.at(name);
            Bundle s = shift_bundle(e, o.shift);
            r.add(s.name + ": same transitions", same_transitions(s, e));
            Bundle back = shift_bundle(s, -o.shift);
            r.add(s.name + ": round trip", back.degrees() == e.degrees() && same_transitions(back, e));
            bool rank = s.rank() == gdim_shift(e.rank(), o.shift);
            r.add(s.name + ": rank", rank, rank ? std::nullopt : std::optional<std::string>(s.rank().to_string()));
            prefixed(r, bundle_cocycle_check(s), s.name);
            data["bundles"][s.name] = bundle_json(s);
        }
    } else if (cmd == "tensor") {
        std::vector<std::pair<std::string, std::string>> pairs;
        auto want = wanted_bundles(o);
        if (want.size() == 2) pairs.push_back({want[0], want[1]});
        else if (!want.empty()) throw Error("tensor takes exactly two --bundle names");
        else
            for (auto& d : ws.doc.bundles)
                if (d.kind == "tensor") pairs.push_back({d.operands[0], d.operands[1]});
        if (pairs.empty()) throw Error("no tensor products to build; declare one or pass two --bundle names");
        for (auto& [a, b] : pairs) {
            const Bundle &e = *ws.bundle(a, "tensor"), &f = *ws.bundle(b, "tensor");
            Bundle t = tensor_bundle(e, f);
            prefixed(r, bundle_cocycle_check(t), t.name);
            bool rank = t.rank() == gdim_convolve(e.rank(), f.rank());
            r.add(t.name + ": rank", rank, rank ? std::nullopt : std::optional<std::string>(t.rank().to_string()));
            data["bundles"][t.name] = bundle_json(t);
        }
    } else if (cmd == "pullback") {
        int n = 0;
        for (auto& d : ws.doc.bundles) {
            if (d.kind != "pullback") continue;
            auto want = wanted_bundles(o);
            if (!want.empty() && std::find(want.begin(), want.end(), d.name) == want.end()) continue;
            ++n;
            const Bundle& p = *ws.bundles.at(d.name);
            const Bundle& e = *ws.bundles.at(d.operands[0]);
            prefixed(r, map_check(ws.maps.at(d.operands[1])), d.operands[1]);
            prefixed(r, bundle_cocycle_check(p), d.name);
            bool rank = p.rank() == e.rank();
            r.add(d.name + ": rank", rank, rank ? std::nullopt : std::optional<std::string>(p.rank().to_string()));
            data["bundles"][d.name] = bundle_json(p);
        }
        if (n == 0) throw Error("no pullback bundles declared");
    } else if (cmd == "invert") {
        for (auto& name : selected(ws.matrices, o.names, "matrix")) {
            const MatrixEntry& me = ws.matrices.at(name);
            const Manifold& m = *me.manifold;
            std::vector<Point> samples;
            for (auto& spec : o.points) {
                auto [chart, p] = resolve_point(m, spec);
                if (chart == me.chart) samples.push_back(p);
            }
            const Point* jet = m.jet(me.chart);
            try {
                GradedMatrix g = invert(me.matrix, ws.W, samples);
                GradedMatrix id_rows = identity(me.matrix.sig(), me.matrix.row_degrees(), ws.W);
                GradedMatrix id_cols = identity(me.matrix.sig(), me.matrix.col_degrees(), ws.W);
                GradedMatrix fg = mat_mul(me.matrix, g), gf = mat_mul(g, me.matrix);
                bool right = matrices_agree(fg, id_rows, ws.W, jet), left = matrices_agree(gf, id_cols, ws.W, jet);
                r.add(name + ": F G = I", right, right ? std::nullopt : std::optional<std::string>(matrix_residual(fg, id_rows, ws.W, jet)));
                r.add(name + ": G F = I", left, left ? std::nullopt : std::optional<std::string>(matrix_residual(gf, id_cols, ws.W, jet)));
                data["inverses"][name] = matrix_json(g);
            } catch (const SingularError& e) {
                r.fail(name + ": invertible", e.what());
            }
        }
    } else if (cmd == "check-morphism") {
        for (auto& name : selected(ws.morphisms, o.names, "morphism")) {
            prefixed(r, morphism_check(ws.morphisms.at(name)), name);
            data["morphisms"][name] = {{"source", ws.morphisms.at(name).source->name},
                                       {"target", ws.morphisms.at(name).target->name}};
        }
    } else if (cmd == "classify") {
        json warnings = json::array();
        for (auto& name : selected(ws.morphisms, o.names, "morphism")) {
            const BundleMorphism& phi = ws.morphisms.at(name);
            prefixed(r, morphism_check(phi), name);
            auto pts = points_for(*phi.source->base, o);
            if (pts.empty()) throw Error("classify needs --point or declared points on '" + phi.source->base->name + "'");
            json rows = json::array();
            std::vector<std::pair<Point, GradedDimension>> ranks;
            for (auto& [chart, p] : pts) {
                Classification c = classify_at(phi, chart, p);
                ranks.emplace_back(p, c.fiber.rank);
                json w = json::array();
                for (auto& s : c.warnings) {
                    w.push_back(s);
                    warnings.push_back(name + ": " + s);
                }
                rows.push_back({{"chart", chart},
                                {"point", point_json(p)},
                                {"rank", c.fiber.rank.to_string()},
                                {"injective", c.fiber.injective},
                                {"surjective", c.fiber.surjective},
                                {"iso", c.fiber.iso()},
                                {"warnings", w}});
            }
            data["morphisms"][name] = rows;
            if (auto w = rank_variation(ranks)) warnings.push_back(name + ": " + *w);
        }
        data["warnings"] = warnings;
    } else if (cmd == "check-section") {
        for (auto& name : selected(ws.sections, o.names, "section")) {
            const Section& s = ws.sections.at(name);
            prefixed(r, section_check(s), name);
            data["sections"][name] = {{"bundle", s.bundle->name}, {"shift", s.shift}};
        }
    } else if (cmd == "value") {
        for (auto& name : selected(ws.sections, o.names, "section")) {
            const Section& s = ws.sections.at(name);
            const Manifold& m = *s.bundle->base;
            json rows = json::array();
            for (auto& [chart, p] : points_for(m, o)) {
                if (!s.charts.count(chart)) continue;
                auto vals = section_value(s, chart, p);
                json v = json::object();
                for (std::size_t a = 0; a < vals.size(); ++a) v[s.bundle->fiber[a].name] = to_string(vals[a]);
                rows.push_back({{"chart", chart}, {"point", point_json(p)}, {"value", v}});
                for (auto& [key, ov] : m.overlaps) {
                    if (key.first != chart || !s.charts.count(key.second)) continue;
                    const Point* jet = m.jet(chart);
                    if (jet && *jet != p) continue;
                    prefixed(r, section_value_check(s, key.first, key.second, p), name);
                }
            }
            data["sections"][name] = rows;
        }
    } else if (cmd == "euler-check") {
        for (auto& name : selected(ws.bundle_functions, o.names, "bundle function")) {
            const BundleFunction& f = ws.bundle_functions.at(name);
            Report e = euler_check(f);
            bool linear = true;
            json weights = json::array();
            std::set<int> ws_seen;
            for (auto& c : e.checks) {
                if (c.name.find(" linear ") != std::string::npos) linear = linear && c.pass;
                else r.add(name + ": " + c.name.substr(c.name.find(' ') + 1), c.pass, c.residual);
            }
            for (auto& [chart, g] : f.charts)
                for (auto& [w, part] : fiber_weight_parts(g)) ws_seen.insert(w);
            for (int w : ws_seen) weights.push_back(w);
            prefixed(r, bundle_function_check(f), name);
            data["functions"][name] = {{"bundle", f.bundle->name}, {"linear", linear}, {"fiber_weights", weights}};
        }
    } else if (cmd == "derive") {
        std::map<std::string, BundlePtr> cotangent;
        for (auto& name : selected(ws.functions, o.names, "function")) {
            const ChartFunction& f = ws.functions.at(name);
            const std::string& mn = f.base->name;
            if (!cotangent.count(mn)) cotangent[mn] = std::make_shared<const Bundle>(dual_bundle(tangent_bundle(f.base)));
            prefixed(r, function_check(f), name);
            Section df = exterior_derivative(f, cotangent[mn]);
            prefixed(r, section_check(df, "section", f.base->W - 1), "d" + name);
            json comps = json::object();
            for (auto& [chart, v] : df.charts)
                for (std::size_t a = 0; a < v.size(); ++a) comps[chart][cotangent[mn]->fiber[a].name] = v[a].to_string();
            data["differentials"][name] = {{"bundle", cotangent[mn]->name}, {"shift", df.shift}, {"components", comps}};
        }
    } else {
        throw Error("unknown command '" + cmd + "'");
    }
    return res;
}

inline json to_json(const Options& o, const Result& res) {
    json checks = json::array();
    for (auto& c : res.report.checks)
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"residual", c.residual ? json(*c.residual) : json(nullptr)}});
    return {{"command", o.command}, {"weight", o.weight}, {"checks", checks}, {"data", res.data}};
}

inline std::string to_text(const Options& o, const Result& res) {
    std::string out = o.command + " (W = " + std::to_string(o.weight) + ")\n";
    for (auto& c : res.report.checks) {
        out += (c.pass ? "PASS " : "FAIL ") + c.name;
        if (c.residual) out += ": " + *c.residual;
        out += "\n";
    }
    out += "data: " + res.data.dump(2) + "\n";
    return out;
}

/// Full command line without the program name. Exit codes: 0 all checks
/// pass, 1 some check fails, 2 input error.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Graded vector bundle checks", "gvb"};
    std::string cmd_help = "one of:";
    for (auto& c : commands()) cmd_help += " " + c;
    app.add_option("command", o.command, cmd_help)->required();
    app.add_option("files", o.files, ".gvb declaration files")->required();
    app.add_option("--weight", o.weight, "truncation weight W")->check(CLI::NonNegativeNumber);
    app.add_option("--format", o.format, "json or text")->check(CLI::IsMember({"json", "text"}));
    app.add_option("--point", o.points, "sample point: declared name, chart:x=0 or x=0");
    app.add_option("--bundle", o.bundles, "restrict to these bundles");
    app.add_option("--name", o.names, "restrict to these declarations");
    app.add_option("--shift", o.shift, "degree shift for the shift command");
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "gvb: " << e.what() << "\n";
        return 2;
    }
    if (std::find(commands().begin(), commands().end(), o.command) == commands().end()) {
        err << "gvb: unknown command '" << o.command << "'\n";
        return 2;
    }
    Result res;
    try {
        dsl::Document doc;
        for (auto& f : o.files) doc.append(dsl::parse_file(f));
        Workspace ws = build_workspace(doc, o.weight);
        res = execute(ws, o);
    } catch (const Error& e) {
        err << "gvb: " << e.what() << "\n";
        return 2;
    }
    if (o.format == "json") out << to_json(o, res).dump(2) << "\n";
    else out << to_text(o, res);
    return res.report.ok() ? 0 : 1;
}

}  // namespace gvb::cli
