#include "sstokes/entanglement.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace sstokes;

namespace {

constexpr double pi = std::numbers::pi;
const ModeIndex k10{1, 0}, k01{0, 1};

// Closed form of the linearized pipeline for the symmetric scheme at theta = 0.
double exact_i23(double v, double a10, double a01) { return (a10 * a10 + v * a01 * a01) / (a01 * a01 - a10 * a10); }

GaussianBeamState coherent_beam(const std::string& beam, complex a10, complex a01) {
    auto s = vacuum_state({{beam, k10}, {beam, k01}});
    s = add_source(s, {beam, k10}, SqueezerConfig::coherent(a10));
    return add_source(s, {beam, k01}, SqueezerConfig::coherent(a01));
}

}  // namespace

TEST(EntanglementScheme, SymmetricOutputsHaveEqualRealAmplitudes) {
    const auto sc = build_fig4_symmetric(0.25, 2.0, 50.0, 0.0);
    for (const auto& p : {sc.pair_x, sc.pair_y}) {
        EXPECT_NEAR(std::abs(sc.state.mean(p.low)), 2.0, 1e-12);
        EXPECT_NEAR(std::abs(sc.state.mean(p.high)), 50.0, 1e-12);
        EXPECT_NEAR(resolved_theta(sc.state, p), 0.0, 1e-12);
    }
    EXPECT_TRUE(sc.warnings.empty());
    EXPECT_GE(uncertainty_margin(sc.state), -1e-10);
}

TEST(EntanglementScheme, RatioWarning) {
    EXPECT_FALSE(build_fig4_symmetric(0.5, 1.0, 5.0, 0.0).warnings.empty());
}

TEST(EntanglementScheme, SqueezedVacuumGivesVsq) {
    for (double v : {0.25, 0.5, 1.0}) {
        const auto sc = build_fig4_symmetric(v, 0.0, 100.0, 0.0);
        const auto r = inseparability(sc.state, StokesComponent::S2, StokesComponent::S3, sc.pair_x, sc.pair_y);
        EXPECT_NEAR(r.value, v, 1e-12) << "V = " << v;
        if (v < 1.0) {
            EXPECT_FALSE(r.separable);
        }
        EXPECT_NEAR(r.denominator, 4.0 * 100.0 * 100.0, 1e-8);
    }
}

TEST(EntanglementScheme, FiniteRatioClosedForm) {
    for (double ratio : {3.0, 10.0, 100.0}) {
        const auto sc = build_fig4_symmetric(0.25, 1.0, ratio, 0.0);
        const auto r = inseparability(sc.state, StokesComponent::S2, StokesComponent::S3, sc.pair_x, sc.pair_y);
        EXPECT_NEAR(r.value, exact_i23(0.25, 1.0, ratio), 1e-12) << "ratio " << ratio;
    }
}

TEST(EntanglementScheme, AsymptoticMatchesQuadratureForm) {
    const auto sc = build_fig4_symmetric(0.25, 1.0, 1000.0, 0.0);
    const auto a = asymptotic_inseparability(sc.state, sc.pair_x, sc.pair_y);
    ASSERT_TRUE(a.s2_s3.has_value());
    EXPECT_NEAR(*a.s2_s3, 0.25, 1e-12);
    EXPECT_NEAR(a.d_x10_theta.value, 0.5, 1e-12);
    EXPECT_NEAR(a.d_x10_theta_minus_half_pi.value, 0.5, 1e-12);
    EXPECT_FALSE(a.s1_s2.has_value());  // sin(0) = 0
    EXPECT_TRUE(a.s3_s1.has_value());
}

TEST(EntanglementScheme, AsymptoticRejectsSmallRatio) {
    const auto sc = build_fig4_symmetric(0.25, 1.0, 5.0, 0.0);
    EXPECT_THROW(asymptotic_inseparability(sc.state, sc.pair_x, sc.pair_y), std::domain_error);
}

TEST(EntanglementScheme, S1S2GrowsLinearlyWithRatio) {
    std::vector<double> values;
    for (double ratio : {10.0, 30.0, 100.0}) {
        const auto sc = build_fig4_symmetric(0.25, 1.0, ratio, pi / 4.0);
        const auto r = inseparability(sc.state, StokesComponent::S1, StokesComponent::S2, sc.pair_x, sc.pair_y);
        const auto a = asymptotic_inseparability(sc.state, sc.pair_x, sc.pair_y);
        EXPECT_GT(r.value, 1.0);
        values.push_back(*a.s1_s2 / ratio);
    }
    // Asymptotic I / ratio is constant.
    EXPECT_NEAR(values[0], values[2], 1e-9);
}

TEST(Conditional, RequiresDistinctBeams) {
    const auto s = coherent_beam("x", 2.0, 3.0);
    const auto p = ModePair::in_beam("x");
    EXPECT_THROW(conditional_variance(s, Observable::stokes(StokesComponent::S1), p, p), std::invalid_argument);
}

TEST(Conditional, IndependentCoherentBeamsAddNoise) {
    auto s = GaussianBeamState::product(coherent_beam("x", 4.0, 3.0), coherent_beam("y", 4.0, 3.0));
    const auto cv = conditional_variance(s, Observable::stokes(StokesComponent::S2), ModePair::in_beam("x"),
                                         ModePair::in_beam("y"));
    EXPECT_NEAR(cv.value, 2.0 * 25.0, 1e-10);
    EXPECT_NEAR(cv.other_value, cv.value, 1e-10);
}

TEST(Inseparability, ProductStatesNeverBelowOne) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const StokesComponent pairs[3][2] = {{StokesComponent::S1, StokesComponent::S2},
                                         {StokesComponent::S3, StokesComponent::S1},
                                         {StokesComponent::S2, StokesComponent::S3}};
    for (int k = 0; k < 50; ++k) {
        GaussianBeamState s;
        for (const char* beam : {"x", "y"}) {
            auto b = vacuum_state({{beam, k10}, {beam, k01}});
            for (auto m : {k10, k01}) {
                const double v = std::pow(10.0, -0.6 * u(rng));
                b = add_source(b, {beam, m}, SqueezerConfig::pure(v, 2 * pi * u(rng), std::polar(1.0 + 9 * u(rng), 2 * pi * u(rng))));
            }
            s = s.size() == 0 ? b : GaussianBeamState::product(s, b);
        }
        for (const auto& pr : pairs) {
            const auto r = inseparability(s, pr[0], pr[1], ModePair::in_beam("x"), ModePair::in_beam("y"));
            EXPECT_GE(r.value, 1.0 - 1e-9);
        }
    }
}

TEST(Inseparability, UndefinedWhenCommutatorVanishes) {
    // S1 = S2 = S3 = 0 only when both amplitudes vanish; use a TEM01-only beam
    // pair where <S3> = 0 so I(S1,S2) is undefined.
    auto s = GaussianBeamState::product(coherent_beam("x", 0.0, 5.0), coherent_beam("y", 0.0, 5.0));
    EXPECT_THROW(inseparability(s, StokesComponent::S1, StokesComponent::S2, ModePair::in_beam("x"),
                                ModePair::in_beam("y")),
                 std::domain_error);
    EXPECT_THROW(inseparability(s, StokesComponent::S1, StokesComponent::S1, ModePair::in_beam("x"),
                                ModePair::in_beam("y")),
                 std::invalid_argument);
}

TEST(Inseparability, AsymmetryWarning) {
    auto s = GaussianBeamState::product(coherent_beam("x", 1.0, 5.0), coherent_beam("y", 2.0, 5.0));
    const auto r = inseparability(s, StokesComponent::S2, StokesComponent::S3, ModePair::in_beam("x"),
                                  ModePair::in_beam("y"));
    EXPECT_TRUE(r.asymmetry_warning);
    EXPECT_EQ(r.pair_label(), "S2,S3");
}

TEST(Inseparability, SignChoiceIsPerObservable) {
    const auto sc = build_fig4_symmetric(0.25, 0.0, 100.0, 0.0);
    const auto r = inseparability(sc.state, StokesComponent::S2, StokesComponent::S3, sc.pair_x, sc.pair_y);
    // The beamsplitter correlates one quadrature and anti-correlates the other.
    EXPECT_NE(r.delta_a.sign, r.delta_b.sign);
}
