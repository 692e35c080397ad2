#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gvb/cli.hpp"

using namespace gvb;
using json = nlohmann::json;

namespace {

const std::string corpus = GVB_CORPUS_DIR;

std::vector<std::string> corpus_files() {
    std::vector<std::string> out;
    for (auto& e : std::filesystem::directory_iterator(corpus))
        if (e.path().extension() == ".gvb") out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

json run_json(const std::vector<std::string>& args, int expect_code = 0) {
    Outcome r = run(args);
    EXPECT_EQ(r.code, expect_code) << r.err << r.out;
    return r.code == 2 ? json() : json::parse(r.out);
}

std::string shell(const std::string& cmd) {
    std::string out;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return out;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    pclose(p);
    return out;
}

}  // namespace

TEST(Dsl, CorpusRoundTrips) {
    auto files = corpus_files();
    ASSERT_GE(files.size(), 6u);
    for (auto& f : files) {
        dsl::Document d = dsl::parse_file(f);
        std::string printed = dsl::print(d);
        dsl::Document again = dsl::parse(printed, f + " (printed)");
        EXPECT_TRUE(d == again) << f;
        EXPECT_EQ(dsl::print(again), printed) << f;
    }
}

TEST(Dsl, CommentsAndWhitespaceIgnored) {
    auto a = dsl::parse("manifold L { chart A { base: x } }\nbundle E over L { fiber: k:0; }");
    auto b = dsl::parse("# line\nmanifold   L{chart A{base:x}}  # trailing\n\nbundle E over L {\n fiber : k : 0 ;\n}\n");
    EXPECT_TRUE(a == b);
}

TEST(Dsl, SyntaxErrorHasLocation) {
    try {
        dsl::parse("manifold M {\n  chart A { coords: xi:1; base: x }\n  overlap A A { x = x }\n  junk\n}", "bad.gvb");
        FAIL() << "expected an error";
    } catch (const dsl::InputError& e) {
        EXPECT_EQ(e.loc.line, 4);
        EXPECT_EQ(e.loc.col, 3);
        EXPECT_NE(std::string(e.what()).find("bad.gvb:4:3"), std::string::npos) << e.what();
    }
}

TEST(Dsl, ExpressionErrorHasLocation) {
    auto doc = dsl::parse("manifold M {\n  chart A { base: x }\n  chart B { base: y }\n  overlap A B { y = x + * 2 }\n}", "expr.gvb");
    try {
        build_workspace(doc);
        FAIL() << "expected an error";
    } catch (const dsl::InputError& e) {
        EXPECT_EQ(e.loc.line, 4);
        EXPECT_NE(std::string(e.what()).find("syntax error"), std::string::npos) << e.what();
    }
}

TEST(Dsl, SemanticErrorsNameEntities) {
    auto expect_message = [](const std::string& text, const std::vector<std::string>& parts) {
        try {
            build_workspace(dsl::parse(text));
            ADD_FAILURE() << "expected an error for: " << text;
        } catch (const Error& e) {
            for (auto& p : parts) EXPECT_NE(std::string(e.what()).find(p), std::string::npos) << e.what();
        }
    };
    expect_message("bundle E over Q { fiber: k:0; }", {"bundle 'E'", "unknown manifold 'Q'"});
    expect_message("manifold L { chart A { base: x } }\nbundle E over L { fiber: k:0; transition A B = [[1]]; }",
                   {"bundle 'E'", "A B"});
    expect_message("manifold L { chart A { base: x } }\nmanifold L { chart A { base: x } }", {"'L'", "twice"});
    expect_message("manifold L { chart A { coords: xi:1; base: x } }\nbundle E over L { fiber: k:0, kappa:1; }\n"
                   "section s of E { chart A = [x]; }",
                   {"section 's'", "2 components"});
    expect_message("manifold L { chart A { coords: xi:1; base: x } }\nbundle E over L { fiber: k:0; }\n"
                   "morphism m : E -> E { chart A = [[xi]]; }",
                   {"morphism 'm'", "degree 1, expected 0"});
}

TEST(Dsl, ReverseJetIsImagePoint) {
    auto ws = build_workspace(dsl::parse_file(corpus + "/tangent_line.gvb"));
    const Manifold& m = *ws.manifolds.at("M");
    ASSERT_TRUE(m.overlap("B", "A").jet);
    EXPECT_EQ(*m.overlap("B", "A").jet, (Point{{"y", 0}}));
}

TEST(Cli, CocycleOnTangentLine) {
    json j = run_json({"check-cocycle", corpus + "/tangent_line.gvb"});
    EXPECT_EQ(j["command"], "check-cocycle");
    EXPECT_EQ(j["weight"], 8);
    int pairs = 0;
    for (auto& c : j["checks"]) {
        EXPECT_TRUE(c["pass"].get<bool>()) << c.dump();
        if (c["name"].get<std::string>().find("pair") != std::string::npos) ++pairs;
    }
    EXPECT_GE(pairs, 2);
}

TEST(Cli, ClassifyXiDxi) {
    json j = run_json({"classify", corpus + "/xi_dxi.gvb", "--point", "x=0"});
    auto& rows = j["data"]["morphisms"]["xidxi"];
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0]["rank"], "{}");
    ASSERT_EQ(j["data"]["warnings"].size(), 1u);
    EXPECT_NE(j["data"]["warnings"][0].get<std::string>().find("image is not a subbundle"), std::string::npos);

    json all = run_json({"classify", corpus + "/xi_dxi.gvb"});
    EXPECT_EQ(all["data"]["morphisms"]["xidxi"].size(), 5u);
    for (auto& row : all["data"]["morphisms"]["xidxi"]) EXPECT_EQ(row["rank"], "{}");
}

TEST(Cli, ClassifyLineX) {
    json j = run_json({"classify", corpus + "/line_x.gvb", "--point", "x=-1", "--point", "x=0", "--point", "x=1"});
    auto& rows = j["data"]["morphisms"]["mx"];
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0]["rank"], "{0:1}");
    EXPECT_EQ(rows[1]["rank"], "{}");
    EXPECT_EQ(rows[2]["rank"], "{0:1}");
    EXPECT_TRUE(rows[0]["iso"].get<bool>());
    EXPECT_FALSE(rows[1]["injective"].get<bool>());
    int rank_warnings = 0;
    for (auto& w : j["data"]["warnings"])
        if (w.get<std::string>().find("fiber rank is not constant") != std::string::npos) ++rank_warnings;
    EXPECT_EQ(rank_warnings, 1);
    json one = run_json({"classify", corpus + "/line_x.gvb", "--point", "x=1", "--point", "x=2"});
    EXPECT_TRUE(one["data"]["warnings"].empty());
}

TEST(Cli, EulerCheck) {
    json j = run_json({"euler-check", corpus + "/trivial.gvb"});
    EXPECT_TRUE(j["data"]["functions"]["lin"]["linear"].get<bool>());
    EXPECT_FALSE(j["data"]["functions"]["quad"]["linear"].get<bool>());
    EXPECT_EQ(j["data"]["functions"]["quad"]["fiber_weights"], json::array({1, 2}));
}

TEST(Cli, InvertWitness) {
    json j = run_json({"invert", corpus + "/battery.gvb"});
    json expect = json::array({json::array({"1 - g*h", "-h"}), json::array({"-g", "1 + g*h"})});
    EXPECT_EQ(j["data"]["inverses"]["witness"], expect);
}

TEST(Cli, ValueAndDerive) {
    json v = run_json({"value", corpus + "/trivial.gvb", "--point", "x=3"});
    EXPECT_EQ(v["data"]["sections"]["s"][0]["value"]["k"], "3");
    EXPECT_GE(v["checks"].size(), 1u);
    json d = run_json({"derive", corpus + "/tangent_line.gvb"});
    EXPECT_EQ(d["data"]["differentials"]["f"]["components"]["A"]["v_x_dual"], "2*x");
}

TEST(Cli, DeriveOnJetOverlap) {
    auto path = std::filesystem::temp_directory_path() / "gvb_jet_derive.gvb";
    {
        std::ofstream f(path);
        f << "manifold M {\n  chart A { base: x }\n  chart B { base: y }\n"
             "  overlap A B { y = x + x^3 | inverse: x = y - y^3 + 3*y^5 - 12*y^7 | at: x = 0 }\n}\n"
             "function f on M { chart A = x; chart B = y - y^3 + 3*y^5 - 12*y^7; }\n";
    }
    json j = run_json({"derive", path.string()});
    EXPECT_EQ(j["data"]["differentials"]["f"]["components"]["B"]["v_x_dual"], "-84*y^6 + 15*y^4 - 3*y^2 + 1");
    std::filesystem::remove(path);
}

TEST(Cli, ConstructionsPassOnCorpus) {
    for (auto cmd : {"dual", "shift", "tensor", "check-cocycle", "check-morphism", "check-atlas"})
        run_json({cmd, corpus + "/battery.gvb"});
    run_json({"shift", corpus + "/battery.gvb", "--shift", "-3", "--bundle", "E"});
    run_json({"tensor", corpus + "/battery.gvb", "--bundle", "E", "--bundle", "Ed"});
    run_json({"pullback", corpus + "/pullback.gvb"});
    run_json({"tangent", corpus + "/tangent_line.gvb"});
    run_json({"check-section", corpus + "/tangent_line.gvb"});
}

TEST(Cli, FailingCheckExitsOne) {
    auto path = std::filesystem::temp_directory_path() / "gvb_bad_cocycle.gvb";
    {
        std::ofstream f(path);
        f << "manifold L { chart A { base: x } chart B { base: y } overlap A B { y = 2*x | inverse: x = y/2 } }\n"
             "bundle E over L { fiber: k:0; transition A B = [[2]]; transition B A = [[1]]; }\n";
    }
    json j = run_json({"check-cocycle", path.string()}, 1);
    bool failed = false;
    for (auto& c : j["checks"])
        if (!c["pass"].get<bool>()) {
            failed = true;
            EXPECT_FALSE(c["residual"].is_null());
        }
    EXPECT_TRUE(failed);
    std::filesystem::remove(path);
}

TEST(Cli, InputErrorsExitTwo) {
    EXPECT_EQ(run({"nope", corpus + "/trivial.gvb"}).code, 2);
    EXPECT_EQ(run({"check-atlas", corpus + "/missing.gvb"}).code, 2);
    EXPECT_EQ(run({"check-atlas"}).code, 2);
    EXPECT_EQ(run({"classify", corpus + "/line_x.gvb", "--point", "z=0"}).code, 2);
    EXPECT_EQ(run({"check-atlas", corpus + "/trivial.gvb", "--format", "xml"}).code, 2);
}

TEST(Cli, TextFormat) {
    Outcome r = run({"check-atlas", corpus + "/trivial.gvb", "--format", "text"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("check-atlas (W = 8)", 0), 0u);
    EXPECT_NE(r.out.find("PASS "), std::string::npos);
}

TEST(Cli, WeightIsRecorded) {
    json j = run_json({"check-cocycle", corpus + "/trivial.gvb", "--weight", "5"});
    EXPECT_EQ(j["weight"], 5);
}

TEST(Cli, RepeatedRunsAreIdentical) {
    for (auto& f : corpus_files()) {
        Outcome a = run({"check-cocycle", f}), b = run({"check-cocycle", f});
        EXPECT_EQ(a.out, b.out) << f;
    }
}

#ifdef GVB_CLI_PATH
TEST(Cli, BinaryRunsAreByteIdentical) {
    std::string cmd = std::string(GVB_CLI_PATH) + " check-cocycle " + corpus + "/tangent_line.gvb";
    std::string a = shell(cmd), b = shell(cmd);
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(a, b);
}
#endif
