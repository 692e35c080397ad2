#pragma once

// Small manifolds and bundles built directly through the library API.

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gvb/bundle.hpp"
#include "support.hpp"

namespace gvb::testing {

struct OverlapSpec {
    std::string from, to;
    std::vector<std::pair<std::string, std::string>> images;
    std::optional<Point> jet;
};

inline std::shared_ptr<Manifold> build_manifold(const std::string& name, int W, std::vector<Chart> charts,
                                                const std::vector<OverlapSpec>& overlaps) {
    auto m = std::make_shared<Manifold>();
    m->name = name;
    m->W = W;
    m->charts = std::move(charts);
    for (auto& o : overlaps) {
        Overlap ov{o.from, o.to, {}, o.jet};
        for (auto& [coord, text] : o.images) ov.images.emplace(coord, parse_series(text, m->chart(o.from).sig, W));
        m->overlaps.emplace(ChartPair{o.from, o.to}, std::move(ov));
    }
    return m;
}

/// Lines with y = 2x.
inline ManifoldPtr doubling_line(int W = 8) {
    return build_manifold("L", W, {make_chart("A", {"x"}, {}), make_chart("B", {"y"}, {})},
                          {{"A", "B", {{"y", "2*x"}}, {}}, {"B", "A", {{"x", "y/2"}}, {}}});
}

/// The graded line (x, xi) with y = x + x^3, eta = (1 + x^2) xi. The inverse
/// x = y - y^3 + 3y^5 - 12y^7 + 55y^9 is only a jet at y = 0.
inline std::string cubic_inverse(const std::string& y) {
    return y + " - " + y + "^3 + 3*" + y + "^5 - 12*" + y + "^7 + 55*" + y + "^9";
}

inline ManifoldPtr cubic_line(int W = 8, const std::string& inverse = cubic_inverse("y")) {
    return build_manifold("M", W, {make_chart("A", {"x"}, {{"xi", 1}}), make_chart("B", {"y"}, {{"eta", 1}})},
                          {{"A", "B", {{"y", "x + x^3"}, {"eta", "(1 + x^2)*xi"}}, Point{{"x", 0}}},
                           {"B", "A", {{"x", inverse}, {"xi", "eta/(1 + (" + inverse + ")^2)"}}, Point{{"y", 0}}}});
}

/// Two charts with generators g_i / h_i of the given degrees related by
/// y = x + 1, h_i = (1 + x)^i g_i; everything is rational so identities are exact.
inline ManifoldPtr shifted_plane(const std::vector<int>& degs, int W) {
    std::vector<Generator> ga, gb;
    std::vector<std::pair<std::string, std::string>> fwd{{"y", "x + 1"}}, back{{"x", "y - 1"}};
    for (std::size_t i = 0; i < degs.size(); ++i) {
        std::string g = "g" + std::to_string(i), h = "h" + std::to_string(i);
        ga.push_back({g, degs[i], false});
        gb.push_back({h, degs[i], false});
        fwd.push_back({h, "(1 + x)^" + std::to_string(i) + "*" + g});
        back.push_back({g, h + "/y^" + std::to_string(i)});
    }
    return build_manifold("P", W, {make_chart("A", {"x"}, ga), make_chart("B", {"y"}, gb)},
                          {{"A", "B", fwd, {}}, {"B", "A", back, {}}});
}

/// (x; xi1, xi2) with |xi1| = 1, |xi2| = -1 and y = x + xi1 xi2, eta1 = xi1,
/// eta2 = (1 + x) xi2. Since eta1 eta2 squares to zero the inverse is rational.
inline ManifoldPtr super_plane(int W = 6) {
    return build_manifold("Q", W, {make_chart("A", {"x"}, {{"xi1", 1}, {"xi2", -1}}), make_chart("B", {"y"}, {{"eta1", 1}, {"eta2", -1}})},
                          {{"A", "B", {{"y", "x + xi1*xi2"}, {"eta1", "xi1"}, {"eta2", "(1 + x)*xi2"}}, {}},
                           {"B", "A", {{"x", "y - eta1*eta2/(1 + y)"}, {"xi1", "eta1"}, {"xi2", "eta2/(1 + y)"}}, {}}});
}

inline SigPtr signature_over(const ManifoldPtr& m, const std::string& chart) { return m->chart(chart).sig; }

/// Random bundle over a two-chart manifold: T(A, B) random with unit-body
/// degree-zero block, T(B, A) derived.
inline Bundle random_bundle(Rng& rng, const ManifoldPtr& m, const std::vector<int>& fiber_degs, const std::string& name) {
    Bundle e;
    e.name = name;
    e.base = m;
    for (std::size_t i = 0; i < fiber_degs.size(); ++i) e.fiber.push_back({name + "k" + std::to_string(i), fiber_degs[i]});
    GradedMatrix t = random_unipotent_matrix(rng, m->chart("A").sig, fiber_degs, m->W);
    e.transitions.emplace(ChartPair{"A", "B"}, t);
    complete_transitions(e);
    return e;
}

inline Bundle trivial_bundle(const ManifoldPtr& m, const std::vector<FiberCoord>& fiber, const std::string& name) {
    Bundle e;
    e.name = name;
    e.base = m;
    e.fiber = fiber;
    for (auto& [key, ov] : m->overlaps) e.transitions.emplace(key, identity(m->chart(key.first).sig, e.degrees(), m->W));
    return e;
}

inline GradedMatrix matrix_of(const SigPtr& sig, int W, const std::vector<int>& rows, const std::vector<int>& cols,
                              const std::vector<std::vector<std::string>>& entries) {
    GradedMatrix out(sig, W, rows, cols);
    for (std::size_t i = 0; i < entries.size(); ++i)
        for (std::size_t k = 0; k < entries[i].size(); ++k)
            out.set(i, k, parse_series(entries[i][k], sig, W).with_degree(rows[i] - cols[k]));
    return out;
}

}  // namespace gvb::testing
