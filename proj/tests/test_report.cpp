#include "sstokes/dsl.hpp"
#include "sstokes/report.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace sstokes;
using namespace sstokes::dsl;

namespace {

json run_text(const std::string& text) {
    const auto p = parse(text);
    const auto c = compile(p.ir, text);
    EXPECT_TRUE(p.ok() && c.ok());
    return run(c.plan).report;
}

// Header line and numeric rows of a PGM image.
struct Pgm {
    int width = 0, height = 0, maxval = 0;
    std::vector<int> pixels;
};

Pgm read_pgm(const std::string& bytes) {
    std::istringstream in(bytes);
    std::string magic, comment;
    in >> magic;
    EXPECT_EQ(magic, "P5");
    in.get();
    std::getline(in, comment);
    EXPECT_EQ(comment, "# linear intensity scaling, no gamma");
    Pgm p;
    in >> p.width >> p.height >> p.maxval;
    in.get();
    const int bytes_per = p.maxval > 255 ? 2 : 1;
    for (int k = 0; k < p.width * p.height; ++k) {
        int v = 0;
        for (int b = 0; b < bytes_per; ++b) v = (v << 8) | static_cast<unsigned char>(in.get());
        p.pixels.push_back(v);
    }
    EXPECT_TRUE(in.good());
    EXPECT_EQ(in.get(), std::char_traits<char>::eof());
    return p;
}

const std::string kSqueezedPair =
    "beam b\nsource b tem 1 0 squeezed vsq=0.5 alpha=10\nsource b tem 0 1 squeezed vsq=0.5 alpha=10\n"
    "detect stokes S2 b theta=0\n";

}  // namespace

TEST(Json, ByteIdenticalAcrossRuns) {
    const auto a = emit_json(run_text(kSqueezedPair));
    const auto b = emit_json(run_text(kSqueezedPair));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.back(), '\n');
    EXPECT_EQ(json::parse(a)["schema_version"], kSchemaVersion);
}

TEST(Json, CoherentS1EqualsS0) {
    const auto d = run_text("beam b\nsource b tem 1 0 coherent alpha=3\ndetect stokes S1 b\n")["detectors"][0];
    const auto& means = d["report"]["means"];
    EXPECT_DOUBLE_EQ(means[0].get<double>(), means[1].get<double>());
    EXPECT_DOUBLE_EQ(d["report"]["variances_raw"][1].get<double>(), 9.0);
    EXPECT_FALSE(d["report"]["poincare"].is_null());
}

TEST(Json, InseparabilityFields) {
    const auto sc = build_fig4_symmetric(0.25, 1.0, 100.0, 0.0);
    const auto j = to_json(inseparability(sc.state, StokesComponent::S2, StokesComponent::S3, sc.pair_x, sc.pair_y));
    for (const char* key :
         {"pair", "numerator", "denominator", "I", "separable", "sign_choices", "conditional_variances", "regime"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_EQ(j["pair"], "S2,S3");
    EXPECT_EQ(j["regime"], "exact");
}

TEST(Json, StateSerialization) {
    auto s = vacuum_state({{"a", {1, 0}}});
    s = add_source(s, {"a", {1, 0}}, SqueezerConfig::coherent(complex{1.0, -2.0}));
    const auto j = to_json(s);
    EXPECT_EQ(j["dimension"], 2);
    EXPECT_EQ(j["means"][0], (json{1.0, -2.0}));
    EXPECT_EQ(j["cov"].size(), 4u);
}

TEST(Csv, SweepOfThetaTracesCosAndSin) {
    SweepTable t;
    t.parameter = "psiy";
    t.values = *parse_range("0:pi:5");
    // A common phase keeps theta; the modal phase moves it.
    const std::string text = "beam b\nsource b tem 1 0 coherent alpha=2\nsource b tem 0 1 coherent alpha=2\n"
                             "element modal_phase b psix=0 psiy=0\ndetect stokes S2 b\ndetect stokes S3 b\n";
    const auto ir = parse(text).ir;
    for (double v : t.values) {
        const auto sub = substitute(ir, "psiy", v);
        ASSERT_FALSE(sub.error.has_value()) << *sub.error;
        const auto c = compile(sub.ir);
        ASSERT_TRUE(c.ok());
        const auto rep = run(c.plan).report;
        std::vector<std::pair<std::string, double>> flat;
        flatten_scalars(rep["detectors"][0]["mean"], "S2", flat);
        flatten_scalars(rep["detectors"][1]["mean"], "S3", flat);
        if (t.columns.empty()) {
            for (const auto& [k, x] : flat) t.columns.push_back(k);
        }
        std::vector<double> row;
        for (const auto& [k, x] : flat) row.push_back(x);
        t.rows.push_back(row);
    }
    const auto csv = emit_csv(t);
    const auto back = read_csv(csv);
    ASSERT_EQ(back.size(), 6u);
    EXPECT_EQ(back[0], (std::vector<std::string>{"psiy", "S2", "S3"}));
    for (std::size_t k = 0; k < 5; ++k) {
        const double psi = t.values[k];
        // psiy advances TEM01 against TEM10 by psiy.
        const double theta = psi;
        EXPECT_NEAR(std::stod(back[k + 1][1]), 8.0 * std::cos(theta), 1e-12);
        EXPECT_NEAR(std::stod(back[k + 1][2]), 8.0 * std::sin(theta), 1e-12);
    }
}

TEST(Csv, SinglePointAndEmptyRange) {
    SweepTable one{"t", {0.5}, {"x"}, {{1.25}}};
    EXPECT_EQ(emit_csv(one), "t,x\n0.5,1.25\n");
    SweepTable none{"t", {}, {"x", "y"}, {}};
    EXPECT_EQ(emit_csv(none), "t,x,y\n");
    SweepTable bad{"t", {1.0}, {"x"}, {}};
    EXPECT_THROW(emit_csv(bad), std::invalid_argument);
}

TEST(Csv, QuotingRoundTrip) {
    SweepTable t{"p", {1.0, 2.0}, {"a,b", "say \"hi\"", "plain"}, {{0.1, 0.2, 0.3}, {1e-300, -4.0, 5e10}}};
    const auto rows = read_csv(emit_csv(t));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0][1], "a,b");
    EXPECT_EQ(rows[0][2], "say \"hi\"");
    EXPECT_EQ(std::stod(rows[2][1]), 1e-300);
    EXPECT_EQ(std::stod(rows[1][3]), 0.3);
}

TEST(Pgm, DonutHasDarkCentreAndScalesLinearly) {
    const GridConfig g{3.0, 65};
    const auto donut = intensity_grid(synthesize(Superposition::laguerre_positive(1), g));
    const auto img = read_pgm(emit_pgm(donut));
    EXPECT_EQ(img.width, 65);
    EXPECT_EQ(img.maxval, 65535);
    EXPECT_EQ(img.pixels[32 * 65 + 32], 0);
    EXPECT_EQ(*std::max_element(img.pixels.begin(), img.pixels.end()), 65535);
    // Doubling the intensity gives the same image.
    auto brighter = donut;
    for (auto& v : brighter.values) v *= 2.0;
    EXPECT_EQ(emit_pgm(brighter), emit_pgm(donut));
    // Linear, not gamma-corrected.
    const std::size_t k = 20 * 65 + 40;
    EXPECT_NEAR(img.pixels[k] / 65535.0, donut.values[k] / *std::max_element(donut.values.begin(), donut.values.end()),
                1.0 / 65535.0);
}

TEST(Pgm, ConstantAndZeroGrids) {
    std::ostringstream a, b;
    emit_pgm(std::vector<double>(9, 3.0), 3, 3, a, 8);
    emit_pgm(std::vector<double>(9, 0.0), 3, 3, b, 8);
    const auto ia = read_pgm(a.str()), ib = read_pgm(b.str());
    EXPECT_EQ(ia.pixels, std::vector<int>(9, 255));
    EXPECT_EQ(ib.pixels, std::vector<int>(9, 0));
    std::ostringstream c;
    EXPECT_THROW(emit_pgm(std::vector<double>(8, 1.0), 3, 3, c), std::invalid_argument);
    EXPECT_THROW(emit_pgm(std::vector<double>(9, 1.0), 3, 3, c, 12), std::invalid_argument);
}

TEST(Poincare, PlotOutputs) {
    std::vector<PoincarePlotData> pts{{"s2", {0.0, 1.0, 0.0}, {0.05, 0.05, 0.05}}};
    std::ostringstream csv, pgm;
    emit_poincare_csv(pts, csv);
    EXPECT_EQ(csv.str(), "label,s1,s2,s3,r1,r2,r3\ns2,0,1,0,0.05,0.05,0.05\n");
    emit_poincare_pgm(pts, pgm, 64);
    EXPECT_EQ(read_pgm(pgm.str()).width, 64);
    pts[0].vector = {1.0, 1.0, 0.0};
    EXPECT_THROW(emit_poincare_csv(pts, csv), std::invalid_argument);
}
