#include "sstokes/gaussian.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace sstokes;

namespace {

const ModeIndex k10{1, 0}, k01{0, 1};
constexpr double pi = std::numbers::pi;

GaussianBeamState two_beams() { return vacuum_state({{"a", k10}, {"b", k10}}); }

}  // namespace

TEST(Vacuum, UnitCovarianceZeroMean) {
    const auto s = vacuum_state({{"a", k10}, {"a", k01}});
    EXPECT_TRUE(s.cov().isApprox(Eigen::MatrixXd::Identity(4, 4)));
    EXPECT_EQ(s.mean({"a", k01}), complex{});
    EXPECT_THROW(vacuum_state({}), std::invalid_argument);
    EXPECT_THROW(vacuum_state({{"a", k10}, {"a", k10}}), std::invalid_argument);
}

TEST(Source, SqueezedBlockOrientation) {
    auto s = add_source(vacuum_state({{"a", k10}}), {"a", k10}, SqueezerConfig{0.25, 4.0, pi / 2.0, 3.0});
    // Squeezed along X^{pi/2} = X-: the X- variance is 0.25.
    EXPECT_NEAR(s.block(0, 0)(1, 1), 0.25, 1e-15);
    EXPECT_NEAR(s.block(0, 0)(0, 0), 4.0, 1e-14);
    EXPECT_NEAR(quadrature_variance(s, {"a", k10}, pi / 2.0), 0.25, 1e-14);
    EXPECT_EQ(s.mean({"a", k10}), complex(3.0));
    EXPECT_THROW(add_source(s, {"a", k10}, SqueezerConfig::coherent(1.0)), std::invalid_argument);
}

TEST(Source, RejectsUnphysicalSqueezer) {
    const auto s = vacuum_state({{"a", k10}});
    EXPECT_THROW(add_source(s, {"a", k10}, SqueezerConfig{0.5, 1.5, 0.0, 0.0}), std::invalid_argument);
    EXPECT_THROW(add_source(s, {"a", k10}, SqueezerConfig{0.0, 1.0, 0.0, 0.0}), std::invalid_argument);
    EXPECT_NO_THROW(add_source(s, {"a", k10}, SqueezerConfig{0.5, 3.0, 0.0, 0.0}));
}

TEST(Phase, RotatesMeanAndQuadratures) {
    auto s = add_source(vacuum_state({{"a", k10}}), {"a", k10}, SqueezerConfig::pure(0.5, 0.0, 2.0));
    s = apply_phase(s, {"a", k10}, pi / 2.0);
    EXPECT_NEAR(std::abs(s.mean({"a", k10}) - complex(0.0, 2.0)), 0.0, 1e-15);
    // The squeezed quadrature follows the mean.
    EXPECT_NEAR(quadrature_variance(s, {"a", k10}, pi / 2.0), 0.5, 1e-14);
    EXPECT_NEAR(quadrature_variance(s, {"a", k10}, 0.0), 2.0, 1e-14);
}

TEST(BeamSplitter, BalancedMixingOfCoherentBeams) {
    auto s = two_beams();
    s = add_source(s, {"a", k10}, SqueezerConfig::coherent(2.0));
    s = apply_beamsplitter(s, {"a", k10}, {"b", k10}, 0.5);
    EXPECT_NEAR(s.mean({"a", k10}).real(), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(s.mean({"b", k10}).real(), std::sqrt(2.0), 1e-15);
    EXPECT_TRUE(s.cov().isApprox(Eigen::MatrixXd::Identity(4, 4), 1e-14));
    EXPECT_NEAR(total_photon_number(s), 4.0, 1e-14);
}

TEST(BeamSplitter, SqueezedInputsBecomeCorrelated) {
    auto s = two_beams();
    s = add_source(s, {"a", k10}, SqueezerConfig::pure(0.25));
    s = add_source(s, {"b", k10}, SqueezerConfig::pure(0.25));
    s = apply_phase(s, {"b", k10}, pi / 2.0);
    s = apply_beamsplitter(s, {"a", k10}, {"b", k10}, 0.5);
    // X+_a +/- X+_b and X-_a -/+ X-_b carry the squeezing.
    const QuadratureSpec xa{{"a", k10}, 0.0}, xb{{"b", k10}, 0.0};
    const double sum = quadrature_covariance(s, xa, xa) + quadrature_covariance(s, xb, xb);
    const double cross = 2.0 * quadrature_covariance(s, xa, xb);
    EXPECT_NEAR(std::min(sum + cross, sum - cross), 2.0 * 0.25, 1e-12);
    EXPECT_GE(uncertainty_margin(s), -1e-12);
}

TEST(BeamSplitter, AliasingAndRangeErrors) {
    auto s = two_beams();
    EXPECT_THROW(apply_beamsplitter(s, {"a", k10}, {"a", k10}, 0.5), std::invalid_argument);
    EXPECT_THROW(apply_beamsplitter(s, {"a", k10}, {"b", k10}, 1.5), std::invalid_argument);
    EXPECT_THROW(apply_beam_beamsplitter(s, "a", "a", 0.5), std::invalid_argument);
}

TEST(BeamSplitter, BeamLevelPadsMissingModesWithVacuum) {
    auto s = vacuum_state({{"a", k10}, {"a", k01}, {"b", k10}});
    s = add_source(s, {"a", k01}, SqueezerConfig::coherent(2.0));
    s = apply_beam_beamsplitter(s, "a", "b", 0.5);
    EXPECT_TRUE(s.contains({"b", k01}));
    EXPECT_NEAR(std::abs(s.mean({"b", k01})), std::sqrt(2.0), 1e-14);
}

TEST(ModalPhase, LensSettings) {
    EXPECT_NEAR(lens_pair_phase(2.0, 1.0).relative(), pi, 1e-15);
    EXPECT_NEAR(lens_pair_phase(std::numbers::sqrt2 * 0.5, 0.5).relative(), pi / 2.0, 1e-15);
    EXPECT_THROW(lens_pair_phase(1.5, 1.0), std::invalid_argument);
    EXPECT_THROW(lens_pair_phase(2.0, 0.0), std::invalid_argument);
}

TEST(ModalPhase, RelativePhaseBetweenPairModes) {
    auto s = vacuum_state({{"a", k10}, {"a", k01}});
    s = add_source(s, {"a", k10}, SqueezerConfig::coherent(1.0));
    s = add_source(s, {"a", k01}, SqueezerConfig::coherent(1.0));
    s = apply_modal_phase(s, "a", pi, 0.0);
    const double rel = std::arg(s.mean({"a", k10})) - std::arg(s.mean({"a", k01}));
    EXPECT_NEAR(std::abs(std::remainder(rel - pi, 2.0 * pi)), 0.0, 1e-14);
    EXPECT_EQ(modal_phase_for({2, 2}, 1.0, 0.3), 0.0);
}

TEST(Separator, RoutesByParityAndCombinerInverts) {
    auto s = vacuum_state({{"a", k10}, {"a", k01}});
    s = add_source(s, {"a", k10}, SqueezerConfig::coherent(3.0));
    s = add_source(s, {"a", k01}, SqueezerConfig::pure(0.5, 0.0, 1.0));
    const auto split = mode_separator(s, "a", "odd", "even");
    EXPECT_TRUE(split.contains({"odd", k10}));
    EXPECT_TRUE(split.contains({"even", k01}));
    EXPECT_FALSE(split.has_beam("a"));
    const auto back = mode_combiner(split, "odd", "even", "a");
    EXPECT_TRUE(back.cov().isApprox(s.cov()));
    EXPECT_EQ(back.mean({"a", k10}), s.mean({"a", k10}));
    EXPECT_THROW(mode_combiner(split, "even", "odd", "c"), std::invalid_argument);
}

TEST(Separator, LossMovesTowardsVacuum) {
    auto s = vacuum_state({{"a", k10}});
    s = add_source(s, {"a", k10}, SqueezerConfig::pure(0.25, 0.0, 2.0));
    const auto out = mode_separator(s, "a", "o", "e", 0.5);
    EXPECT_NEAR(quadrature_variance(out, {"o", k10}, 0.0), 0.5 * 0.25 + 0.5, 1e-14);
    EXPECT_NEAR(std::abs(out.mean({"o", k10})), 2.0 * std::sqrt(0.5), 1e-14);
}

TEST(Sampling, DeterministicAndMatchingCovariance) {
    auto s = two_beams();
    s = add_source(s, {"a", k10}, SqueezerConfig::pure(0.25));
    s = apply_beamsplitter(s, {"a", k10}, {"b", k10}, 0.5);
    const auto x = sample_fluctuations(s, 200000, 7);
    const auto y = sample_fluctuations(s, 200000, 7);
    EXPECT_EQ(x.data, y.data);
    Eigen::MatrixXd est = Eigen::MatrixXd::Zero(4, 4);
    for (std::size_t k = 0; k < x.count; ++k) {
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) est(i, j) += x.at(k, static_cast<std::size_t>(i)) * x.at(k, static_cast<std::size_t>(j));
        }
    }
    est /= static_cast<double>(x.count);
    EXPECT_LT((est - s.cov()).cwiseAbs().maxCoeff(), 0.03);
}

TEST(Uncertainty, ThermalOkUnphysicalNegative) {
    auto s = vacuum_state({{"a", k10}});
    EXPECT_NEAR(uncertainty_margin(s), 0.0, 1e-14);
    s = add_source(s, {"a", k10}, SqueezerConfig{0.5, 3.0, 0.0, 0.0});
    EXPECT_GT(uncertainty_margin(s), 0.0);
}

TEST(Angles, WrapStaysInRange) {
    EXPECT_EQ(wrap_angle(-1e-300), 0.0);
    EXPECT_NEAR(wrap_angle(-pi / 2.0), 1.5 * pi, 1e-15);
    EXPECT_EQ(wrap_angle(2.0 * pi), 0.0);
}
