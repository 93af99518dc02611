#include "sstokes/dsl.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

using namespace sstokes;
using namespace sstokes::dsl;

namespace {

constexpr double pi = std::numbers::pi;

std::string golden(const std::string& name) {
    std::ifstream in(std::string(SSTOKES_GOLDEN_DIR) + "/" + name);
    if (!in) throw std::runtime_error("missing golden file " + name);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> codes(const std::vector<Diagnostic>& d) {
    std::vector<std::string> out;
    for (const auto& x : d) out.push_back(x.code);
    return out;
}

bool has_code(const std::vector<Diagnostic>& d, const std::string& code) {
    const auto c = codes(d);
    return std::find(c.begin(), c.end(), code) != c.end();
}

// Parse, compile and run; fails the test on any diagnostic.
json run_text(const std::string& text, RunOptions opt = {}) {
    const auto p = parse(text);
    EXPECT_TRUE(p.diagnostics.empty()) << (p.diagnostics.empty() ? "" : p.diagnostics[0].format());
    const auto c = compile(p.ir, text);
    EXPECT_TRUE(c.ok()) << (c.diagnostics.empty() ? "" : c.diagnostics[0].format());
    const auto r = run(c.plan, opt);
    EXPECT_FALSE(r.failure.has_value()) << (r.failure ? r.failure->format() : "");
    return r.report;
}

}  // namespace

TEST(Parse, EmptyInputGivesEmptyProgram) {
    for (const char* text : {"", "\n\n", "# only a comment\n", "   \t\n"}) {
        const auto r = parse(text);
        EXPECT_TRUE(r.ir.statements.empty());
        EXPECT_TRUE(r.diagnostics.empty());
    }
}

TEST(Parse, EntanglementGoldenCounts) {
    const auto r = parse(golden("fig4_entanglement.circ"));
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(r.ir.count<BeamDecl>(), 4u);
    EXPECT_EQ(r.ir.count<SourceStmt>(), 4u);  // two squeezers and two local oscillators
    EXPECT_EQ(r.ir.count_elements(ElementKind::phase), 1u);
    EXPECT_EQ(r.ir.count_elements(ElementKind::bs), 1u);
    EXPECT_EQ(r.ir.count_elements(ElementKind::mode_combiner), 2u);
    EXPECT_EQ(r.ir.count_detectors(DetectKind::stokes), 2u);
    EXPECT_EQ(r.ir.count_detectors(DetectKind::insep), 1u);
}

TEST(Parse, SelfAliasReportedAtSecondName) {
    const auto r = parse("beam x\nelement bs x x t=0.5\n");
    ASSERT_EQ(r.diagnostics.size(), 1u);
    EXPECT_EQ(r.diagnostics[0].code, "R304");
    EXPECT_EQ(r.diagnostics[0].message, "beam aliased with itself");
    EXPECT_EQ(r.diagnostics[0].span.line, 2);
    EXPECT_EQ(r.diagnostics[0].span.column, 14);
}

TEST(Parse, DiagnosticCodes) {
    struct Case {
        const char* text;
        const char* code;
    };
    const Case cases[] = {
        {"frobnicate b\n", "P200"},
        {"beam\n", "P201"},
        {"beam b\nsource b tem 1 0 laser alpha=1\n", "P202"},
        {"beam b\nsource b tem 1 0 coherent beta=1\n", "P203"},
        {"beam b\nsource b tem 1 0 coherent alpha=1 alpha=2\n", "P204"},
        {"beam b\nsource b tem 1 0 coherent alpha=\n", "P206"},
        {"beam b\nsource b tem 1 0 squeezed vsq=2i\n", "P207"},
        {"beam b\nsource b tem 1 0 squeezed alpha=1\n", "P208"},
        {"beam b\nbeam b\n", "R301"},
        {"source q tem 1 0 coherent alpha=1\n", "R302"},
        {"beam b\nelement mode_separator b -> o e\nelement phase b phi=1\n", "R303"},
        {"beam a\nbeam b\nelement bs a b t=0.5\nsource a tem 1 0 coherent alpha=1\n", "R305"},
        {"beam b\nsource b tem 1 0 coherent alpha=1\nsource b tem 1 0 coherent alpha=2\n", "R306"},
        {"beam b\nbeam c\ndetect stokes S1 b\nelement bs b c t=0.5\n", "R307"},
        {"beam b\nbeam o\nelement mode_separator b -> o e\n", "R308"},
        {"beam b\x01\n", "L101"},
        {"beam b\xff\n", "L102"},
        {"beam \xc3\xa9\n", "L103"},
        {"beam b$\n", "L104"},
    };
    for (const auto& c : cases) {
        const auto r = parse(c.text);
        EXPECT_TRUE(has_code(r.diagnostics, c.code)) << c.code << " for: " << c.text;
        EXPECT_FALSE(r.ok());
    }
}

TEST(Parse, CommentsMayHoldUtf8) {
    EXPECT_TRUE(parse("# r\xc3\xa9sum\xc3\xa9\nbeam b # ok\n").diagnostics.empty());
}

TEST(Parse, DiagnosticFormatNamesFileLineAndColumn) {
    const auto r = parse("beam b\nsource q tem 1 0 coherent alpha=1\n");
    ASSERT_FALSE(r.diagnostics.empty());
    const auto text = r.diagnostics[0].format("x.circ");
    EXPECT_NE(text.find("x.circ:2:8"), std::string::npos) << text;
    EXPECT_NE(text.find("R302"), std::string::npos);
}

TEST(Values, Expressions) {
    EXPECT_NEAR(parse_value("pi/2")->number.real(), pi / 2.0, 1e-15);
    EXPECT_NEAR(parse_value("-2*pi")->number.real(), -2.0 * pi, 1e-15);
    EXPECT_EQ(parse_value("3i")->number, (complex{0.0, 3.0}));
    EXPECT_EQ(parse_value("1+2i")->number, (complex{1.0, 2.0}));
    const auto d = parse_value("sqrt2f");
    ASSERT_TRUE(d);
    EXPECT_TRUE(d->times_f);
    EXPECT_NEAR(d->number.real(), std::numbers::sqrt2, 1e-15);
    EXPECT_FALSE(parse_value(""));
    EXPECT_FALSE(parse_value("pi pi"));
    EXPECT_FALSE(parse_value("1e999"));
}

TEST(Parse, AnglesWrapped) {
    const auto r = parse("beam b\nsource b tem 1 0 coherent alpha=1\nelement phase b phi=-pi/2\n");
    ASSERT_TRUE(r.ok());
    const auto& e = std::get<ElementStmt>(r.ir.statements[2]);
    EXPECT_NEAR(find_param(e.params, "phi")->value.number.real(), 1.5 * pi, 1e-15);
}

TEST(Compile, LensPairSettings) {
    const auto two = compile(parse("beam b\nelement modal_phase b lens d=2f f=1\n").ir);
    ASSERT_TRUE(two.ok());
    const auto& m = std::get<op::ModalPhase>(two.plan.steps[0].operation);
    EXPECT_NEAR(m.psi_x - m.psi_y, pi, 1e-15);
    const auto root = compile(parse("beam b\nelement modal_phase b lens d=sqrt2f f=0.5\n").ir);
    ASSERT_TRUE(root.ok());
    const auto& q = std::get<op::ModalPhase>(root.plan.steps[0].operation);
    EXPECT_NEAR(q.psi_x - q.psi_y, pi / 2.0, 1e-15);
}

TEST(Compile, SemanticCodes) {
    struct Case {
        const char* text;
        const char* code;
    };
    const Case cases[] = {
        {"beam b\nsource b tem 4 3 coherent alpha=1\n", "S401"},
        {"beam b\nsource b tem 1 0 squeezed vsq=0.5 vanti=1.5\n", "S402"},
        {"beam a\nbeam b\nelement bs a b t=1.5\n", "S403"},
        {"beam b\nelement modal_phase b lens d=1.5f f=1\n", "S404"},
        {"beam b\nelement modal_phase b lens d=2f f=-1\n", "S404"},
        {"beam b\nelement mode_separator b -> o e eta=2\n", "S405"},
        {"beam b\ndetect stokes S1 b p=1 q=1\n", "S406"},
    };
    for (const auto& c : cases) {
        const auto p = parse(c.text);
        ASSERT_TRUE(p.ok()) << c.text;
        EXPECT_TRUE(has_code(compile(p.ir, c.text).diagnostics, c.code)) << c.code << " for: " << c.text;
    }
}

TEST(RoundTrip, PrintedProgramReparsesEquivalently) {
    for (const char* name : {"fig3a_s0.circ", "fig3b_s1.circ", "fig3c_s2.circ", "fig3d_s3.circ",
                             "fig4_entanglement.circ", "sec4_amplitude_theta0.circ"}) {
        const auto first = parse(golden(name));
        ASSERT_TRUE(first.ok()) << name;
        const auto printed = print(first.ir);
        const auto second = parse(printed);
        ASSERT_TRUE(second.ok()) << printed;
        EXPECT_TRUE(equivalent(first.ir, second.ir)) << name;
        EXPECT_EQ(print(second.ir), printed);
    }
}

TEST(Run, SeparatorReadsMatchSingleBeamValues) {
    const auto s0 = run_text(golden("fig3a_s0.circ"))["detectors"][0];
    EXPECT_NEAR(s0["mean"].get<double>(), 18.0, 1e-12);
    EXPECT_EQ(s0["class"], "shot-noise");
    EXPECT_TRUE(s0["split_ports"].get<bool>());
    const auto s1 = run_text(golden("fig3b_s1.circ"))["detectors"][0];
    EXPECT_NEAR(s1["mean"].get<double>(), 12.0, 1e-12);
    EXPECT_NEAR(s1["variance"].get<double>(), 20.0, 1e-12);
}

TEST(Run, ModalPhaseShiftersMapStokesComponents) {
    const auto c = run_text(golden("fig3c_s2.circ"))["detectors"][0];
    EXPECT_NEAR(c["mean"].get<double>(), -18.0, 1e-12);
    const auto d = run_text(golden("fig3d_s3.circ"))["detectors"];
    // The input has S3 = 18 and S2 = 0.
    EXPECT_NEAR(d[0]["mean"].get<double>(), -18.0, 1e-12);
    EXPECT_NEAR(d[1]["mean"].get<double>(), 0.0, 1e-10);
}

TEST(Run, CoherentStokesOneIsShotNoise) {
    for (double a : {1.0, 3.5, 10.0}) {
        const auto text = "beam b\nsource b tem 1 0 coherent alpha=" + format_number(a) + "\ndetect stokes S1 b\n";
        const auto d = run_text(text)["detectors"][0];
        EXPECT_NEAR(d["mean"].get<double>(), a * a, 1e-12);
        EXPECT_NEAR(d["variance"].get<double>(), a * a, 1e-12);
    }
}

TEST(Run, AmplitudeSqueezedInPhaseSqueezesThreeComponents) {
    const auto d = run_text(golden("sec4_amplitude_theta0.circ"))["detectors"][0];
    EXPECT_EQ(d["report"]["squeezed"], (json{"S0", "S1", "S2"}));
}

TEST(Run, EntanglementGoldenGivesSqueezingLevel) {
    const auto det = run_text(golden("fig4_entanglement.circ"))["detectors"];
    ASSERT_EQ(det.size(), 3u);
    EXPECT_TRUE(det[0].contains("conditional_variance"));
    EXPECT_NEAR(det[2]["I"].get<double>(), 0.25, 1e-9);
    EXPECT_FALSE(det[2]["separable"].get<bool>());
}

TEST(Run, MonteCarloEstimateIsSeededAndClose) {
    RunOptions opt;
    opt.monte_carlo_samples = 100000;
    const auto text = golden("sec4_amplitude_theta0.circ");
    const auto a = run_text(text, opt)["detectors"][0];
    const auto b = run_text(text, opt)["detectors"][0];
    EXPECT_EQ(a["sampled_variance"], b["sampled_variance"]);
    EXPECT_NEAR(a["sampled_variance"].get<double>() / a["variance"].get<double>(), 1.0, 0.02);
}

TEST(Run, NumericalFailureNamesStatement) {
    // I(S1,S2) needs <S3> != 0; two bare TEM01 beams leave it undefined.
    const std::string text =
        "beam x\nbeam y\nsource x tem 0 1 coherent alpha=3\nsource y tem 0 1 coherent alpha=3\n"
        "detect insep S1 S2 x y\n";
    const auto c = compile(parse(text).ir, text);
    ASSERT_TRUE(c.ok());
    const auto r = run(c.plan);
    ASSERT_TRUE(r.failure.has_value());
    EXPECT_EQ(r.failure->code, "N501");
    EXPECT_EQ(r.failure->span.line, 5);
}

TEST(Run, Deterministic) {
    const auto text = golden("fig4_entanglement.circ");
    EXPECT_EQ(emit_json(run_text(text)), emit_json(run_text(text)));
}

TEST(Fuzz, RandomBytesNeverCrash) {
    std::mt19937_64 rng(99);
    const std::string seed_text = golden("fig4_entanglement.circ");
    for (int k = 0; k < 10000; ++k) {
        std::string text;
        if (k % 2 == 0) {
            const auto len = static_cast<std::size_t>(rng() % 200);
            for (std::size_t i = 0; i < len; ++i) text.push_back(static_cast<char>(rng() & 0xff));
        } else {
            text = seed_text;
            const int flips = 1 + static_cast<int>(rng() % 8);
            for (int f = 0; f < flips; ++f) text[rng() % text.size()] = static_cast<char>(rng() & 0xff);
        }
        ParseResult r;
        ASSERT_NO_THROW(r = parse(text));
        for (const auto& d : r.diagnostics) ASSERT_NE(d.code, "P299") << d.message;
        if (r.ok()) {
            const auto c = compile(r.ir, text);
            if (c.ok()) {
                ASSERT_NO_THROW((void)run(c.plan));
            }
        }
    }
}

TEST(Sweep, SubstituteByKeyAndLine) {
    const auto ir = parse(golden("sec4_amplitude_theta0.circ")).ir;
    EXPECT_TRUE(substitute(ir, "vsq", 0.3).error.has_value());  // ambiguous
    const auto s = substitute(ir, "3:vsq", 0.3);
    ASSERT_FALSE(s.error.has_value());
    EXPECT_NE(print(s.ir).find("vsq=0.3"), std::string::npos);
    EXPECT_TRUE(substitute(ir, "nokey", 1.0).error.has_value());
    EXPECT_TRUE(substitute(ir, "x:vsq", 1.0).error.has_value());
}

TEST(Sweep, Ranges) {
    EXPECT_EQ(*parse_range("0:1:3"), (std::vector<double>{0.0, 0.5, 1.0}));
    EXPECT_EQ(*parse_range("2:5:1"), (std::vector<double>{2.0}));
    EXPECT_TRUE(parse_range("0:1:0")->empty());
    EXPECT_NEAR(parse_range("0:pi:5")->back(), pi, 1e-15);
    EXPECT_FALSE(parse_range("0:1"));
    EXPECT_FALSE(parse_range("0:1:-2"));
    EXPECT_FALSE(parse_range("0:1i:2"));
}
