#pragma once

// Declaration language for atlases, bundles, maps, morphisms, sections and
// functions. Expressions are kept as text and parsed against chart signatures
// when the workspace is built.

#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gvb/error.hpp"

namespace gvb::dsl {

struct Loc {
    std::string file;
    int line = 1, col = 1;
    std::string to_string() const { return file + ":" + std::to_string(line) + ":" + std::to_string(col); }
};

struct InputError : Error {
    Loc loc;
    InputError(const Loc& l, const std::string& msg) : Error(l.to_string() + ": " + msg), loc(l) {}
};

struct Expr {
    std::string text;
    Loc loc;
    friend bool operator==(const Expr& a, const Expr& b) { return a.text == b.text; }
};

using Assign = std::pair<std::string, Expr>;
using Degreed = std::pair<std::string, int>;
using MatrixText = std::vector<std::vector<Expr>>;

struct ChartDecl {
    std::string name;
    std::vector<Degreed> coords;
    std::vector<std::string> base;
    friend bool operator==(const ChartDecl&, const ChartDecl&) = default;
};

struct OverlapDecl {
    std::string from, to;
    std::vector<Assign> images, inverse, at;
    friend bool operator==(const OverlapDecl&, const OverlapDecl&) = default;
};

struct PointDecl {
    std::string name, chart;
    std::vector<Assign> values;
    friend bool operator==(const PointDecl&, const PointDecl&) = default;
};

struct ManifoldDecl {
    std::string name;
    std::vector<ChartDecl> charts;
    std::vector<OverlapDecl> overlaps;
    std::vector<PointDecl> points;
    Loc loc;
    friend bool operator==(const ManifoldDecl& a, const ManifoldDecl& b) {
        return a.name == b.name && a.charts == b.charts && a.overlaps == b.overlaps && a.points == b.points;
    }
};

struct TransitionDecl {
    std::string from, to;
    MatrixText rows;
    friend bool operator==(const TransitionDecl&, const TransitionDecl&) = default;
};

/// kind is "explicit" or one of tangent, dual, shift, tensor, sum, pullback.
struct BundleDecl {
    std::string name, kind = "explicit";
    std::string base;
    std::vector<std::string> operands;
    int shift = 0;
    std::vector<Degreed> fiber;
    std::vector<TransitionDecl> transitions;
    Loc loc;
    friend bool operator==(const BundleDecl& a, const BundleDecl& b) {
        return a.name == b.name && a.kind == b.kind && a.base == b.base && a.operands == b.operands &&
               a.shift == b.shift && a.fiber == b.fiber && a.transitions == b.transitions;
    }
};

struct MapChartDecl {
    std::string source, target;
    std::vector<Assign> images;
    friend bool operator==(const MapChartDecl&, const MapChartDecl&) = default;
};

struct MapDecl {
    std::string name, source, target;
    std::vector<MapChartDecl> charts;
    Loc loc;
    friend bool operator==(const MapDecl& a, const MapDecl& b) {
        return a.name == b.name && a.source == b.source && a.target == b.target && a.charts == b.charts;
    }
};

struct MorphismDecl {
    std::string name, source, target, over;
    std::vector<std::pair<std::string, MatrixText>> charts;
    Loc loc;
    friend bool operator==(const MorphismDecl& a, const MorphismDecl& b) {
        return a.name == b.name && a.source == b.source && a.target == b.target && a.over == b.over && a.charts == b.charts;
    }
};

struct SectionDecl {
    std::string name, bundle;
    int shift = 0;
    std::vector<std::pair<std::string, std::vector<Expr>>> charts;
    Loc loc;
    friend bool operator==(const SectionDecl& a, const SectionDecl& b) {
        return a.name == b.name && a.bundle == b.bundle && a.shift == b.shift && a.charts == b.charts;
    }
};

/// Function on a manifold or, when `on` names a bundle, on its total space.
struct FunctionDecl {
    std::string name, on;
    std::vector<Assign> charts;
    Loc loc;
    friend bool operator==(const FunctionDecl& a, const FunctionDecl& b) {
        return a.name == b.name && a.on == b.on && a.charts == b.charts;
    }
};

struct MatrixDecl {
    std::string name, manifold, chart;
    std::vector<int> rows, cols;
    MatrixText entries;
    Loc loc;
    friend bool operator==(const MatrixDecl& a, const MatrixDecl& b) {
        return a.name == b.name && a.manifold == b.manifold && a.chart == b.chart && a.rows == b.rows &&
               a.cols == b.cols && a.entries == b.entries;
    }
};

struct Document {
    std::vector<ManifoldDecl> manifolds;
    std::vector<BundleDecl> bundles;
    std::vector<MapDecl> maps;
    std::vector<MorphismDecl> morphisms;
    std::vector<SectionDecl> sections;
    std::vector<FunctionDecl> functions;
    std::vector<MatrixDecl> matrices;
    /// Declaration kinds in source order, for printing.
    std::vector<std::pair<std::string, std::size_t>> order;

    friend bool operator==(const Document& a, const Document& b) {
        return a.manifolds == b.manifolds && a.bundles == b.bundles && a.maps == b.maps && a.morphisms == b.morphisms &&
               a.sections == b.sections && a.functions == b.functions && a.matrices == b.matrices && a.order == b.order;
    }

    void append(const Document& other) {
        auto shift = [&](const std::string& kind) -> std::size_t {
            if (kind == "manifold") return manifolds.size();
            if (kind == "bundle") return bundles.size();
            if (kind == "map") return maps.size();
            if (kind == "morphism") return morphisms.size();
            if (kind == "section") return sections.size();
            if (kind == "function") return functions.size();
            return matrices.size();
        };
        std::vector<std::pair<std::string, std::size_t>> added;
        for (auto& [kind, i] : other.order) added.emplace_back(kind, i + shift(kind));
        manifolds.insert(manifolds.end(), other.manifolds.begin(), other.manifolds.end());
        bundles.insert(bundles.end(), other.bundles.begin(), other.bundles.end());
        maps.insert(maps.end(), other.maps.begin(), other.maps.end());
        morphisms.insert(morphisms.end(), other.morphisms.begin(), other.morphisms.end());
        sections.insert(sections.end(), other.sections.begin(), other.sections.end());
        functions.insert(functions.end(), other.functions.begin(), other.functions.end());
        matrices.insert(matrices.end(), other.matrices.begin(), other.matrices.end());
        order.insert(order.end(), added.begin(), added.end());
    }
};

namespace detail {

inline std::string squeeze(const std::string& s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = !out.empty();
            continue;
        }
        if (space) out += ' ';
        space = false;
        out += c;
    }
    return out;
}

class Parser {
public:
    Parser(std::string text, std::string file) : s_(std::move(text)) { loc_.file = std::move(file); }

    Document document() {
        Document doc;
        skip();
        while (!done()) {
            Loc at = loc_;
            std::string kw = ident();
            if (kw == "manifold") {
                doc.order.emplace_back(kw, doc.manifolds.size());
                doc.manifolds.push_back(manifold(at));
            } else if (kw == "bundle") {
                doc.order.emplace_back(kw, doc.bundles.size());
                doc.bundles.push_back(bundle(at));
            } else if (kw == "map") {
                doc.order.emplace_back(kw, doc.maps.size());
                doc.maps.push_back(map(at));
            } else if (kw == "morphism") {
                doc.order.emplace_back(kw, doc.morphisms.size());
                doc.morphisms.push_back(morphism(at));
            } else if (kw == "section") {
                doc.order.emplace_back(kw, doc.sections.size());
                doc.sections.push_back(section(at));
            } else if (kw == "function") {
                doc.order.emplace_back(kw, doc.functions.size());
                doc.functions.push_back(function(at));
            } else if (kw == "matrix") {
                doc.order.emplace_back(kw, doc.matrices.size());
                doc.matrices.push_back(matrix(at));
            } else {
                fail(at, "unknown declaration '" + kw + "'");
            }
            skip();
        }
        return doc;
    }

private:
    std::string s_;
    std::size_t pos_ = 0;
    Loc loc_;

    [[noreturn]] void fail(const Loc& at, const std::string& msg) const { throw InputError(at, msg); }
    [[noreturn]] void fail(const std::string& msg) const { throw InputError(loc_, msg); }

    bool done() const { return pos_ >= s_.size(); }

    Loc here() {
        skip();
        return loc_;
    }
    char peek() const { return done() ? '\0' : s_[pos_]; }

    void advance() {
        if (s_[pos_] == '\n') {
            ++loc_.line;
            loc_.col = 1;
        } else {
            ++loc_.col;
        }
        ++pos_;
    }

    void skip() {
        while (!done()) {
            if (std::isspace(static_cast<unsigned char>(peek()))) advance();
            else if (peek() == '#') while (!done() && peek() != '\n') advance();
            else break;
        }
    }

    bool accept(const std::string& tok) {
        skip();
        if (s_.compare(pos_, tok.size(), tok) != 0) return false;
        if (std::isalpha(static_cast<unsigned char>(tok[0]))) {
            std::size_t end = pos_ + tok.size();
            if (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_')) return false;
        }
        for (std::size_t i = 0; i < tok.size(); ++i) advance();
        return true;
    }

    void expect(const std::string& tok) {
        if (!accept(tok)) fail(std::string("expected '") + tok + "'" + (done() ? " before end of input" : " near '" + std::string(1, peek()) + "'"));
    }

    std::string ident() {
        skip();
        if (done() || !(std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_'))
            fail(done() ? "expected a name before end of input" : "expected a name near '" + std::string(1, peek()) + "'");
        std::string out;
        while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
            out += peek();
            advance();
        }
        return out;
    }

    int integer() {
        skip();
        std::string digits;
        if (peek() == '-' || peek() == '+') {
            digits += peek();
            advance();
        }
        while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) {
            digits += peek();
            advance();
        }
        if (digits.empty() || digits == "-" || digits == "+") fail("expected an integer");
        return std::stoi(digits);
    }

    /// Raw text up to a depth-0 terminator.
    Expr expr(const std::string& stops) {
        skip();
        Expr e;
        e.loc = loc_;
        int depth = 0;
        std::string raw;
        while (!done()) {
            char c = peek();
            if (depth == 0 && stops.find(c) != std::string::npos) break;
            if (c == '(' || c == '[') ++depth;
            if (c == ')' || c == ']') {
                if (depth == 0) break;
                --depth;
            }
            if (c == '#') {
                skip();
                raw += ' ';
                continue;
            }
            raw += c;
            advance();
        }
        e.text = squeeze(raw);
        if (e.text.empty()) fail(e.loc, "expected an expression");
        return e;
    }

    std::vector<Assign> assigns(const std::string& stops) {
        std::vector<Assign> out;
        skip();
        while (!done() && stops.find(peek()) == std::string::npos) {
            std::string name = ident();
            expect("=");
            out.emplace_back(name, expr(";" + stops));
            if (!accept(";")) break;
            skip();
        }
        return out;
    }

    std::vector<Degreed> degreed_list() {
        std::vector<Degreed> out;
        skip();
        if (peek() == ';' || peek() == '}') return out;
        do {
            std::string name = ident();
            expect(":");
            out.emplace_back(name, integer());
        } while (accept(","));
        return out;
    }

    std::vector<int> int_list() {
        std::vector<int> out;
        do out.push_back(integer());
        while (accept(","));
        return out;
    }

    std::vector<Expr> vector() {
        expect("[");
        std::vector<Expr> out;
        if (accept("]")) return out;
        do out.push_back(expr(",]"));
        while (accept(","));
        expect("]");
        return out;
    }

    MatrixText matrix_text() {
        expect("[");
        MatrixText out;
        if (accept("]")) return out;
        do out.push_back(vector());
        while (accept(","));
        expect("]");
        return out;
    }

    ChartDecl chart() {
        ChartDecl c;
        c.name = ident();
        expect("{");
        while (!accept("}")) {
            Loc at = here();
            std::string kw = ident();
            expect(":");
            if (kw == "coords") {
                c.coords = degreed_list();
            } else if (kw == "base") {
                skip();
                if (peek() != ';' && peek() != '}') {
                    do c.base.push_back(ident());
                    while (accept(","));
                }
            } else {
                fail(at, "unknown chart clause '" + kw + "'");
            }
            accept(";");
        }
        return c;
    }

    OverlapDecl overlap() {
        OverlapDecl o;
        o.from = ident();
        o.to = ident();
        expect("{");
        o.images = assigns("|}");
        while (accept("|")) {
            Loc at = here();
            std::string kw = ident();
            expect(":");
            if (kw == "inverse") o.inverse = assigns("|}");
            else if (kw == "at") o.at = assigns("|}");
            else fail(at, "unknown overlap clause '" + kw + "'");
        }
        expect("}");
        return o;
    }

    ManifoldDecl manifold(const Loc& at) {
        ManifoldDecl m;
        m.loc = at;
        m.name = ident();
        expect("{");
        while (!accept("}")) {
            Loc at = here();
            std::string kw = ident();
            if (kw == "chart") m.charts.push_back(chart());
            else if (kw == "overlap") m.overlaps.push_back(overlap());
            else if (kw == "point") {
                PointDecl p;
                p.name = ident();
                p.chart = ident();
                expect("{");
                p.values = assigns("}");
                expect("}");
                m.points.push_back(p);
            } else fail(at, "unknown manifold clause '" + kw + "'");
        }
        return m;
    }

    BundleDecl bundle(const Loc& at) {
        BundleDecl b;
        b.loc = at;
        b.name = ident();
        if (accept("=")) {
            Loc at = here();
            b.kind = ident();
            if (b.kind == "tangent" || b.kind == "dual") {
                b.operands.push_back(ident());
            } else if (b.kind == "shift") {
                b.operands.push_back(ident());
                b.shift = integer();
            } else if (b.kind == "tensor" || b.kind == "sum") {
                b.operands.push_back(ident());
                b.operands.push_back(ident());
            } else if (b.kind == "pullback") {
                b.operands.push_back(ident());
                expect("along");
                b.operands.push_back(ident());
            } else {
                fail(at, "unknown bundle construction '" + b.kind + "'");
            }
            accept(";");
            return b;
        }
        expect("over");
        b.base = ident();
        expect("{");
        while (!accept("}")) {
            Loc at = here();
            std::string kw = ident();
            if (kw == "fiber") {
                expect(":");
                b.fiber = degreed_list();
            } else if (kw == "transition") {
                TransitionDecl t;
                t.from = ident();
                t.to = ident();
                expect("=");
                t.rows = matrix_text();
                b.transitions.push_back(t);
            } else {
                fail(at, "unknown bundle clause '" + kw + "'");
            }
            accept(";");
        }
        return b;
    }

    MapDecl map(const Loc& at) {
        MapDecl m;
        m.loc = at;
        m.name = ident();
        expect(":");
        m.source = ident();
        expect("->");
        m.target = ident();
        expect("{");
        while (!accept("}")) {
            expect("chart");
            MapChartDecl c;
            c.source = ident();
            expect("->");
            c.target = ident();
            expect("{");
            c.images = assigns("}");
            expect("}");
            m.charts.push_back(c);
        }
        return m;
    }

    MorphismDecl morphism(const Loc& at) {
        MorphismDecl m;
        m.loc = at;
        m.name = ident();
        expect(":");
        m.source = ident();
        expect("->");
        m.target = ident();
        if (accept("over")) m.over = ident();
        expect("{");
        while (!accept("}")) {
            expect("chart");
            std::string c = ident();
            expect("=");
            m.charts.emplace_back(c, matrix_text());
            accept(";");
        }
        return m;
    }

    SectionDecl section(const Loc& at) {
        SectionDecl s;
        s.loc = at;
        s.name = ident();
        expect("of");
        s.bundle = ident();
        if (accept("shift")) s.shift = integer();
        expect("{");
        while (!accept("}")) {
            expect("chart");
            std::string c = ident();
            expect("=");
            s.charts.emplace_back(c, vector());
            accept(";");
        }
        return s;
    }

    FunctionDecl function(const Loc& at) {
        FunctionDecl f;
        f.loc = at;
        f.name = ident();
        expect("on");
        f.on = ident();
        expect("{");
        while (!accept("}")) {
            expect("chart");
            std::string c = ident();
            expect("=");
            f.charts.emplace_back(c, expr(";}"));
            accept(";");
        }
        return f;
    }

    MatrixDecl matrix(const Loc& at) {
        MatrixDecl m;
        m.loc = at;
        m.name = ident();
        expect("on");
        m.manifold = ident();
        expect("chart");
        m.chart = ident();
        expect("{");
        while (!accept("}")) {
            Loc at = here();
            std::string kw = ident();
            expect(":");
            if (kw == "rows") m.rows = int_list();
            else if (kw == "cols") m.cols = int_list();
            else if (kw == "entries") m.entries = matrix_text();
            else fail(at, "unknown matrix clause '" + kw + "'");
            accept(";");
        }
        return m;
    }
};

inline std::string join_assigns(const std::vector<Assign>& a) {
    std::string out;
    for (std::size_t i = 0; i < a.size(); ++i) out += (i ? "; " : "") + a[i].first + " = " + a[i].second.text;
    return out;
}

inline std::string join_degreed(const std::vector<Degreed>& a) {
    std::string out;
    for (std::size_t i = 0; i < a.size(); ++i) out += (i ? ", " : "") + a[i].first + ":" + std::to_string(a[i].second);
    return out;
}

inline std::string vector_text(const std::vector<Expr>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i].text;
    return out + "]";
}

inline std::string matrix_string(const MatrixText& m) {
    std::string out = "[";
    for (std::size_t i = 0; i < m.size(); ++i) out += (i ? ", " : "") + vector_text(m[i]);
    return out + "]";
}

inline std::string ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
    return out;
}

}  // namespace detail

inline Document parse(const std::string& text, const std::string& file = "<input>") {
    return detail::Parser(text, file).document();
}

inline Document parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(Loc{path, 0, 0}, "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

/// Canonical text; parse(print(d)) == d.
inline std::string print(const Document& doc) {
    using namespace detail;
    std::ostringstream out;
    bool first = true;
    for (auto& [kind, i] : doc.order) {
        if (!first) out << "\n";
        first = false;
        if (kind == "manifold") {
            auto& m = doc.manifolds[i];
            out << "manifold " << m.name << " {\n";
            for (auto& c : m.charts) {
                out << "  chart " << c.name << " { coords: " << join_degreed(c.coords) << "; base: ";
                for (std::size_t k = 0; k < c.base.size(); ++k) out << (k ? ", " : "") << c.base[k];
                out << " }\n";
            }
            for (auto& o : m.overlaps) {
                out << "  overlap " << o.from << " " << o.to << " { " << join_assigns(o.images);
                if (!o.inverse.empty()) out << " | inverse: " << join_assigns(o.inverse);
                if (!o.at.empty()) out << " | at: " << join_assigns(o.at);
                out << " }\n";
            }
            for (auto& p : m.points) out << "  point " << p.name << " " << p.chart << " { " << join_assigns(p.values) << " }\n";
            out << "}\n";
        } else if (kind == "bundle") {
            auto& b = doc.bundles[i];
            if (b.kind != "explicit") {
                out << "bundle " << b.name << " = " << b.kind << " " << b.operands[0];
                if (b.kind == "shift") out << " " << b.shift;
                if (b.kind == "tensor" || b.kind == "sum") out << " " << b.operands[1];
                if (b.kind == "pullback") out << " along " << b.operands[1];
                out << "\n";
                continue;
            }
            out << "bundle " << b.name << " over " << b.base << " {\n  fiber: " << join_degreed(b.fiber) << ";\n";
            for (auto& t : b.transitions) out << "  transition " << t.from << " " << t.to << " = " << matrix_string(t.rows) << ";\n";
            out << "}\n";
        } else if (kind == "map") {
            auto& m = doc.maps[i];
            out << "map " << m.name << " : " << m.source << " -> " << m.target << " {\n";
            for (auto& c : m.charts) out << "  chart " << c.source << " -> " << c.target << " { " << join_assigns(c.images) << " }\n";
            out << "}\n";
        } else if (kind == "morphism") {
            auto& m = doc.morphisms[i];
            out << "morphism " << m.name << " : " << m.source << " -> " << m.target;
            if (!m.over.empty()) out << " over " << m.over;
            out << " {\n";
            for (auto& [c, mt] : m.charts) out << "  chart " << c << " = " << matrix_string(mt) << ";\n";
            out << "}\n";
        } else if (kind == "section") {
            auto& s = doc.sections[i];
            out << "section " << s.name << " of " << s.bundle;
            if (s.shift) out << " shift " << s.shift;
            out << " {\n";
            for (auto& [c, v] : s.charts) out << "  chart " << c << " = " << vector_text(v) << ";\n";
            out << "}\n";
        } else if (kind == "function") {
            auto& f = doc.functions[i];
            out << "function " << f.name << " on " << f.on << " {\n";
            for (auto& [c, e] : f.charts) out << "  chart " << c << " = " << e.text << ";\n";
            out << "}\n";
        } else {
            auto& m = doc.matrices[i];
            out << "matrix " << m.name << " on " << m.manifold << " chart " << m.chart << " {\n  rows: " << ints(m.rows)
                << ";\n  cols: " << ints(m.cols) << ";\n  entries: " << matrix_string(m.entries) << ";\n}\n";
        }
    }
    return out.str();
}

}  // namespace gvb::dsl
