// Acceptance run: one PASS/FAIL line per criterion. All algebra is exact, so
// every identity is compared with zero tolerance; only runtimes have budgets.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "gvb/cli.hpp"
#include "gvb/sections.hpp"

using namespace gvb;
using namespace gvb::testing;

namespace {

constexpr double kSignLawBudgetSeconds = 30.0;
constexpr double kInverseBudgetSeconds = 60.0;
constexpr int kSignLawCases = 1000;
constexpr int kInverseCases = 200;
constexpr int kRandomInstances = 10;
constexpr int kModuleCases = 200;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

GradedFunction S(const std::string& text, const SigPtr& sig, int W) { return parse_series(text, sig, W); }

BundlePtr share(Bundle b) { return std::make_shared<const Bundle>(std::move(b)); }

bool same_entries(const GradedMatrix& a, const GradedMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k)
            if (a.at(i, k).terms() != b.at(i, k).terms()) return false;
    return true;
}

bool same_transitions(const Bundle& a, const Bundle& b) {
    if (a.transitions.size() != b.transitions.size()) return false;
    for (auto& [key, t] : a.transitions) {
        auto it = b.transitions.find(key);
        if (it == b.transitions.end() || !same_entries(it->second, t)) return false;
    }
    return true;
}

bool equal_components(const std::vector<GradedFunction>& a, const std::vector<GradedFunction>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].terms() != b[i].terms()) return false;
    return true;
}

std::vector<int> nonzero_degrees(Rng& rng, int n, int lo, int hi) {
    std::vector<int> out;
    while (static_cast<int>(out.size()) < n) {
        int d = uniform(rng, lo, hi);
        if (d != 0) out.push_back(d);
    }
    return out;
}

int koszul_by_bubble_sort(const Signature& sig, const MultiIndex& r, const MultiIndex& s) {
    std::vector<std::size_t> word;
    for (std::size_t i = 0; i < r.size(); ++i) word.insert(word.end(), r[i], i);
    for (std::size_t i = 0; i < s.size(); ++i) word.insert(word.end(), s[i], i);
    int sign = 1;
    for (std::size_t pass = 0; pass < word.size(); ++pass)
        for (std::size_t j = 0; j + 1 < word.size(); ++j)
            if (word[j] > word[j + 1]) {
                if (sig.odd(word[j]) && sig.odd(word[j + 1])) sign = -sign;
                std::swap(word[j], word[j + 1]);
            }
    return sign;
}

Outcome sign_laws() {
    Outcome o;
    auto t0 = Clock::now();
    Rng rng(1001);
    int W = 6;
    for (int i = 0; i < kSignLawCases && o.pass; ++i) {
        auto sig = random_signature(rng, 5, -3, 3);
        auto f = random_function(rng, sig, random_degree(rng, sig, W), W);
        auto g = random_function(rng, sig, random_degree(rng, sig, W), W);
        auto h = random_function(rng, sig, random_degree(rng, sig, W), W);
        auto fg = series_mul(f, g), gf = series_mul(g, f);
        o.require(fg == (koszul(f.degree(), g.degree()) < 0 ? series_neg(gf) : gf), "commutativity, case " + std::to_string(i));
        o.require(series_mul(fg, h) == series_mul(f, series_mul(g, h)), "associativity, case " + std::to_string(i));
    }
    long pairs = 0;
    for (int t = 0; t < 40 && o.pass; ++t) {
        auto sig = random_signature(rng, 4, -3, 3, false);
        std::vector<MultiIndex> all;
        for (int k = -15; k <= 15; ++k)
            for (auto& p : enumerate_multiindices(*sig, k, 5)) all.push_back(p);
        for (auto& r : all)
            for (auto& s : all) {
                if (mi_weight(r) + mi_weight(s) > 5) continue;
                bool valid = true;
                for (std::size_t i = 0; i < r.size(); ++i)
                    if (sig->odd(i) && r[i] + s[i] > 1) valid = false;
                if (!valid) continue;
                ++pairs;
                o.require(koszul_sign(*sig, r, s) == koszul_by_bubble_sort(*sig, r, s), "koszul_sign vs oracle");
            }
    }
    double secs = seconds_since(t0);
    o.require(secs < kSignLawBudgetSeconds, "runtime " + std::to_string(secs) + " s");
    if (o.pass) o.detail = std::to_string(kSignLawCases) + " triples, " + std::to_string(pairs) + " sign pairs, " + std::to_string(secs) + " s";
    return o;
}

Outcome matrix_inverse() {
    Outcome o;
    auto t0 = Clock::now();
    Rng rng(2002);
    int W = 6;
    for (int i = 0; i < kInverseCases && o.pass; ++i) {
        auto sig = random_signature(rng, 4, -2, 2);
        auto degs = random_degrees(rng, uniform(rng, 1, 4), -2, 2);
        GradedMatrix f = random_unipotent_matrix(rng, sig, degs, W);
        GradedMatrix g = invert(f, W);
        GradedMatrix id = identity(sig, degs, W);
        o.require(matrices_agree(mat_mul(f, g), id, W) && matrices_agree(mat_mul(g, f), id, W), "FG = GF = I, case " + std::to_string(i));
    }
    auto sig = make_signature({{"theta", -1}, {"xi", 1}});
    GradedMatrix f = matrix_of(sig, W, {0, 1}, {0, 1}, {{"1", "theta"}, {"xi", "1"}});
    GradedMatrix expect = matrix_of(sig, W, {0, 1}, {0, 1}, {{"1 + theta*xi", "-theta"}, {"-xi", "1 + xi*theta"}});
    o.require(invert(f, W) == expect, "2x2 witness");
    double secs = seconds_since(t0);
    o.require(secs < kInverseBudgetSeconds, "runtime " + std::to_string(secs) + " s");
    if (o.pass) o.detail = std::to_string(kInverseCases) + " matrices and the 2x2 witness, " + std::to_string(secs) + " s";
    return o;
}

Outcome euler_homogeneity() {
    Outcome o;
    Rng rng(3003);
    int W = 5, accepted = 0, rejected = 0;
    for (int t = 0; t < 300 && o.pass; ++t) {
        std::vector<Generator> gens;
        int nb = uniform(rng, 0, 2), nf = uniform(rng, 1, 3);
        for (int i = 0; i < nb; ++i) gens.push_back({"g" + std::to_string(i), nonzero_degrees(rng, 1, -2, 2)[0], false});
        std::vector<int> fdeg = random_degrees(rng, nf, -2, 2);
        for (int i = 0; i < nf; ++i) gens.push_back({"k" + std::to_string(i), fdeg[i], true});
        auto sig = make_signature(gens, {"x"});
        auto base = make_signature(std::vector<Generator>(gens.begin(), gens.begin() + nb), {"x"});

        // f_a k^a with random base coefficients is linear.
        int deg = uniform(rng, -2, 2);
        GradedFunction lin(sig, deg, W);
        for (int a = 0; a < nf; ++a) {
            GradedFunction c = embed(random_function(rng, base, deg - fdeg[a], W, 2), sig, W);
            GradedFunction term = series_mul(c, GradedFunction::generator(sig, "k" + std::to_string(a), W));
            if (!term.is_zero()) lin = series_add(lin, term);
        }
        if (!lin.is_zero()) {
            o.require(is_fiber_linear(lin), "f_a k^a rejected");
            ++accepted;
        }

        // Arbitrary expressions: linear exactly when every part has fiber weight 1.
        GradedFunction f = random_function(rng, sig, random_degree(rng, sig, W), W, 6);
        auto parts = fiber_weight_parts(f);
        std::set<int> weights;
        for (auto& [w, p] : parts) weights.insert(w);
        if (f.is_zero()) continue;
        bool expect = weights == std::set<int>{1};
        o.require(is_fiber_linear(f) == expect, "is_fiber_linear on " + f.to_string());
        if (!expect) ++rejected;

        std::vector<std::string> syms = sig->symbols();
        syms.push_back("lambda");
        auto ext = make_signature(gens, syms);
        GradedFunction h = embed(f, ext, W);
        GradedFunction sum(ext, f.degree(), W);
        for (auto& [w, p] : fiber_weight_parts(h))
            sum = series_add(sum, series_scale(CoeffExpr::symbol("lambda").pow(static_cast<unsigned>(w)), p));
        o.require(homothety(h, "lambda") == sum, "homothety identity on " + f.to_string());
    }
    if (o.pass) o.detail = std::to_string(accepted) + " linear forms accepted, " + std::to_string(rejected) + " non-linear rejected";
    return o;
}

Outcome tangent_cocycle() {
    Outcome o;
    auto m = cubic_line(8);
    Bundle tm = tangent_bundle(m);
    Report r = bundle_cocycle_check(tm);
    for (auto& c : r.checks) o.require(c.pass, c.name + ": " + c.residual.value_or(""));
    o.require(r.find("pair A B") && r.find("pair B A"), "pair identities not checked");
    for (auto& [key, t] : tm.transitions)
        o.require(dual_transpose(dual_transpose(t, 8), 8) == t, "double dual transpose " + key.first + " " + key.second);
    Report d = bundle_cocycle_check(dual_bundle(tm));
    o.require(d.ok(), "dual cocycle");
    if (o.pass) o.detail = std::to_string(r.checks.size()) + " identities through W = 8";
    return o;
}

Outcome constructions() {
    Outcome o;
    Rng rng(5005);
    for (int t = 0; t < kRandomInstances && o.pass; ++t) {
        auto m = shifted_plane(nonzero_degrees(rng, uniform(rng, 1, 2), -2, 2), 5);
        Bundle e = random_bundle(rng, m, random_degrees(rng, uniform(rng, 1, 3), -2, 2), "E");
        Bundle f = random_bundle(rng, m, random_degrees(rng, uniform(rng, 1, 2), -2, 2), "F");
        Bundle dd = dual_bundle(dual_bundle(e));
        o.require(dd.degrees() == e.degrees() && same_transitions(dd, e), "dual involution");
        int l = uniform(rng, -3, 3);
        Bundle s = shift_bundle(e, l);
        o.require(same_transitions(s, e), "shift changed transitions");
        Bundle back = shift_bundle(s, -l);
        o.require(back.degrees() == e.degrees() && same_transitions(back, e), "shift round trip");
        Bundle ef = tensor_bundle(e, f);
        o.require(ef.rank() == gdim_convolve(e.rank(), f.rank()), "tensor rank");
        o.require(bundle_cocycle_check(ef).ok(), "tensor cocycle");
    }
    for (int t = 0; t < kRandomInstances && o.pass; ++t) {
        auto n = shifted_plane({1}, 4);
        Bundle e = random_bundle(rng, n, random_degrees(rng, uniform(rng, 1, 3), -1, 1), "E");
        auto m = shifted_plane({1}, 4);
        int c0 = uniform(rng, -2, 2), a0 = uniform(rng, 1, 3);
        BaseMap phi{"phi", m, n, {{"A", "A"}, {"B", "B"}}, {}};
        auto sa = m->chart("A").sig;
        phi.images["A"].emplace("x", S("x + (" + std::to_string(c0) + ")", sa, 4));
        phi.images["A"].emplace("g0", S("(" + std::to_string(a0) + " + x)*g0", sa, 4));
        Substitution pa = phi.substitution("A");
        Substitution ba = m->substitution("B", "A");
        for (auto& coord : n->chart("B").coordinate_names())
            phi.images["B"].emplace(coord, substitute(substitute(n->overlap("A", "B").images.at(coord), pa, 4), ba, 4));
        o.require(map_check(phi).ok(), "base map compatibility");
        Bundle p = pullback_bundle(e, phi);
        o.require(p.rank() == e.rank(), "pullback rank");
        o.require(bundle_cocycle_check(p).ok(), "pullback cocycle");
    }
    if (o.pass) o.detail = std::to_string(kRandomInstances) + " instances each of dual, shift, tensor, pullback";
    return o;
}

Outcome counterexamples() {
    Outcome o;
    {
        auto m = build_manifold("R", 8, {make_chart("A", {"x"}, {})}, {});
        auto e = share(trivial_bundle(m, {{"k", 0}}, "E"));
        BundleMorphism f{"f", e, e, identity_map(m), {}};
        f.charts.emplace("A", matrix_of(m->chart("A").sig, 8, {0}, {0}, {{"x"}}));
        o.require(morphism_check(f).ok(), "[[x]] compatibility");
        std::vector<std::pair<Point, GradedDimension>> ranks;
        for (int x : {-1, 0, 1}) ranks.emplace_back(Point{{"x", x}}, classify_at(f, "A", {{"x", x}}).fiber.rank);
        o.require(ranks[1].second.total() == 0, "[[x]] rank at 0");
        o.require(ranks[0].second == GradedDimension{{0, 1}} && ranks[2].second == GradedDimension{{0, 1}}, "[[x]] rank at +-1");
        o.require(rank_variation(ranks).has_value(), "non-constant rank not detected");
    }
    {
        auto m = build_manifold("X", 8, {make_chart("A", {"x"}, {{"xi", 1}})}, {});
        auto tm = share(tangent_bundle(m));
        BundleMorphism f{"f", tm, tm, identity_map(m), {}};
        f.charts.emplace("A", matrix_of(m->chart("A").sig, 8, {0, 1}, {0, 1}, {{"0", "0"}, {"-xi", "0"}}));
        o.require(!f.at("A").is_zero(), "symbolic matrix is zero");
        for (Rational x : {Rational(-2), Rational(-1), Rational(0), Rational(1, 2), Rational(3)}) {
            auto c = classify_at(f, "A", {{"x", x}});
            o.require(c.fiber.rank.total() == 0, "xi d/dxi rank at " + to_string(x));
            o.require(c.warnings.size() == 1 && c.warnings[0].find("image is not a subbundle") != std::string::npos,
                      "missing subbundle warning at " + to_string(x));
        }
    }
    if (o.pass) o.detail = "rank drop of [[x]] at 0; xi d/dxi rank 0 with warning at 5 points";
    return o;
}

Outcome section_suite() {
    Outcome o;
    // Coordinate fields of the cubic line.
    auto m = cubic_line(8);
    auto tm = share(tangent_bundle(m));
    for (std::size_t j = 0; j < tm->fiber.size(); ++j) {
        Section s = frame_section(tm, "A", j);
        s.charts.emplace("B", transport(s, "A", "B"));
        o.require(section_check(s).ok(), "coordinate field " + tm->fiber[j].name);
        o.require(section_value_check(s, "A", "B", {{"x", 0}}).ok(), "value chart independence for " + tm->fiber[j].name);
    }
    // Module associativity.
    Rng rng(7007);
    for (int t = 0; t < kModuleCases && o.pass; ++t) {
        auto p = shifted_plane(nonzero_degrees(rng, uniform(rng, 1, 3), -2, 2), 5);
        auto e = share(random_bundle(rng, p, random_degrees(rng, uniform(rng, 1, 3), -2, 2), "E"));
        auto sig = p->chart("A").sig;
        Section s{e, uniform(rng, -2, 2), {}};
        std::vector<GradedFunction> comps;
        for (auto& fc : e->fiber) comps.push_back(random_function(rng, sig, fc.degree + s.shift, 5, 3));
        s.charts.emplace("A", comps);
        ChartFunction f{p, {{"A", random_function(rng, sig, random_degree(rng, sig, 5), 5, 3)}}};
        ChartFunction g{p, {{"A", random_function(rng, sig, random_degree(rng, sig, 5), 5, 3)}}};
        GradedFunction prod = series_mul(f.at("A"), g.at("A"));
        ChartFunction fg{p, {{"A", prod.is_zero() ? prod.with_degree(f.degree() + g.degree()) : prod}}};
        o.require(equal_components(module_action(f, module_action(g, s)).at("A"), module_action(fg, s).at("A")),
                  "associativity, case " + std::to_string(t));
        // Values at points agree across charts.
        Section gs = s;
        gs.charts.emplace("B", transport(s, "A", "B"));
        o.require(section_value_check(gs, "A", "B", {{"x", uniform(rng, 1, 4)}}).ok(), "value chart independence");
    }
    // Dual frame pairing.
    {
        auto q = build_manifold("P", 6, {make_chart("A", {"x"}, {{"a", 1}, {"b", -1}})}, {});
        Bundle eb;
        eb.name = "E";
        eb.base = q;
        eb.fiber = {{"k0", 0}, {"k1", 1}, {"k2", 2}, {"k3", -1}, {"k4", 3}};
        auto e = share(eb);
        auto d = share(dual_bundle(*e));
        for (std::size_t i = 0; i < eb.fiber.size(); ++i) {
            Section si = dual_frame_section(d, "A", i);
            o.require(si.shift == -frame_section(e, "A", i).shift, "dual frame degree");
            for (std::size_t j = 0; j < eb.fiber.size(); ++j) {
                GradedFunction v = pair(si, frame_section(e, "A", j)).at("A");
                o.require(v.to_string() == (i == j ? "1" : "0"), "pairing s^" + std::to_string(i) + "(s_" + std::to_string(j) + ")");
            }
        }
    }
    // Exterior derivative is a cotangent section.
    {
        auto ctm = share(dual_bundle(*tm));
        auto sa = m->chart("A").sig;
        // d loses one order of a jet, so the B chart is pulled back one order higher.
        auto m9 = cubic_line(9);
        for (std::string text : {"x", "x^2", "x^3 + x"}) {
            GradedFunction fa = S(text, sa, 8);
            GradedFunction fb = embed(pull_back(*m9, S(text, m9->chart("A").sig, 9), "B", "A"), m->chart("B").sig, 8);
            ChartFunction f{m, {{"A", fa}, {"B", fb}}};
            o.require(section_check(exterior_derivative(f, ctm)).ok(), "d(" + text + ") on the cubic line");
        }
        auto sp = super_plane();
        auto ctp = share(dual_bundle(tangent_bundle(sp)));
        for (std::string text : {"x*xi2", "xi1*xi2 + x^3", "x^2*xi1"}) {
            GradedFunction fa = S(text, sp->chart("A").sig, sp->W);
            ChartFunction f{sp, {{"A", fa}, {"B", pull_back(*sp, fa, "B", "A")}}};
            o.require(section_check(exterior_derivative(f, ctp)).ok(), "d(" + text + ") on the super plane");
        }
    }
    if (o.pass) o.detail = "coordinate fields, " + std::to_string(kModuleCases) + " associativity cases, dual frame, values, d";
    return o;
}

std::string shell(const std::string& cmd, int& status) {
    std::string out;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) {
        status = -1;
        return out;
    }
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    status = pclose(p);
    return out;
}

Outcome cli_determinism() {
    Outcome o;
    std::vector<std::string> files;
    for (auto& e : std::filesystem::directory_iterator(GVB_CORPUS_DIR))
        if (e.path().extension() == ".gvb") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    o.require(!files.empty(), "empty corpus");
    int runs = 0;
    for (auto& f : files) {
        dsl::Document d = dsl::parse_file(f);
        dsl::Document again = dsl::parse(dsl::print(d), f);
        o.require(d == again, "round trip of " + f);
        for (auto cmd : {"check-atlas", "check-cocycle", "dual", "shift", "check-morphism", "classify", "check-section", "value",
                         "euler-check", "derive", "invert"}) {
            std::string line = std::string(GVB_CLI_PATH) + " " + cmd + " " + f + " 2>/dev/null";
            int s1 = 0, s2 = 0;
            std::string a = shell(line, s1), b = shell(line, s2);
            o.require(a == b && s1 == s2, std::string(cmd) + " on " + f + " is not deterministic");
            ++runs;
        }
    }
    if (o.pass) o.detail = std::to_string(files.size()) + " files round-trip, " + std::to_string(runs) + " commands run twice";
    return o;
}

}  // namespace

int main() {
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"sign laws of the series product", sign_laws},
        {"graded matrix inverse", matrix_inverse},
        {"Euler criterion for fiber-linear functions", euler_homogeneity},
        {"tangent bundle cocycle of the cubic line", tangent_cocycle},
        {"dual, shift, tensor and pullback constructions", constructions},
        {"fiber-rank counterexamples", counterexamples},
        {"sections", section_suite},
        {"CLI determinism and round trip", cli_determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
