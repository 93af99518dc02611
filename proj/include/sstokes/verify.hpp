// verify.hpp
// Quick self-checks of the linearized engine against its independent
// references (grid quadrature, truncated Fock space, sampling).

#pragma once

#include "sstokes/entanglement.hpp"
#include "sstokes/gaussian.hpp"
#include "sstokes/modes.hpp"
#include "sstokes/oracle.hpp"
#include "sstokes/stokes.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace sstokes {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline CheckResult check(std::string name, const std::function<std::pair<bool, std::string>()>& body) {
    try {
        auto [ok, detail] = body();
        return {std::move(name), ok, std::move(detail)};
    } catch (const std::exception& e) {
        return {std::move(name), false, std::string("exception: ") + e.what()};
    }
}

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

}  // namespace detail

inline std::vector<CheckResult> run_self_checks(std::uint64_t seed = 20240607) {
    std::vector<CheckResult> out;

    out.push_back(detail::check("HG modes orthonormal up to order 2", [] {
        double worst = 0.0;
        for (int a = 0; a < 9; ++a) {
            for (int b = 0; b < 9; ++b) {
                const ModeIndex m{a / 3, a % 3}, n{b / 3, b % 3};
                const double want = m == n ? 1.0 : 0.0;
                worst = std::max(worst, std::abs(overlap(m, n).value - want));
            }
        }
        return std::pair{worst <= 1e-9, "max deviation " + detail::sci(worst)};
    }));

    out.push_back(detail::check("Stokes commutators in Fock space", [] {
        double worst = 0.0;
        for (auto [i, j, k] : {std::tuple{1, 2, 3}, std::tuple{2, 3, 1}, std::tuple{3, 1, 2}}) {
            worst = std::max(worst, fock::commutator_residual(i, j, k, 10));
        }
        return std::pair{worst <= 1e-10, "max residual " + detail::sci(worst)};
    }));

    out.push_back(detail::check("coherent shot noise, linearized vs Fock", [] {
        const auto c = SqueezerConfig::coherent(2.0);
        GaussianBeamState s = vacuum_state({{"b", {1, 0}}, {"b", {0, 1}}});
        s = add_source(s, {"b", {1, 0}}, c);
        s = add_source(s, {"b", {0, 1}}, c);
        const auto v = stokes_variances_general(s, ModePair::in_beam("b"));
        const auto state = fock::coherent_squeezed_state(40, c, c);
        const auto ex = fock::exact_moments(state, fock::stokes_matrices(40));
        double worst = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            worst = std::max({worst, std::abs(v.raw[i] - 8.0), std::abs(ex.variances[i] - 8.0)});
        }
        return std::pair{worst <= 1e-9, "max deviation from N=8: " + detail::sci(worst)};
    }));

    out.push_back(detail::check("sampled Stokes variances", [seed] {
        GaussianBeamState s = vacuum_state({{"b", {1, 0}}, {"b", {0, 1}}});
        s = add_source(s, {"b", {1, 0}}, SqueezerConfig::pure(0.5, 0.0, 8.0));
        s = add_source(s, {"b", {0, 1}}, SqueezerConfig::pure(0.5, 0.0, 8.0));
        const auto pair = ModePair::in_beam("b");
        const auto v = stokes_variances_general(s, pair);
        const auto samples = sample_fluctuations(s, 200000, seed);
        double worst = 0.0;
        for (int c = 0; c < 4; ++c) {
            const auto g = stokes_gradient(s, pair, static_cast<StokesComponent>(c));
            double sum2 = 0.0;
            for (std::size_t k = 0; k < samples.count; ++k) {
                double x = 0.0;
                for (std::size_t d = 0; d < samples.dimension; ++d) x += g(static_cast<Eigen::Index>(d)) * samples.at(k, d);
                sum2 += x * x;
            }
            const double est = sum2 / static_cast<double>(samples.count);
            worst = std::max(worst, std::abs(est / v[c] - 1.0));
        }
        return std::pair{worst <= 0.02, "max relative deviation " + detail::sci(worst)};
    }));

    out.push_back(detail::check("squeezed-vacuum entanglement I(S2,S3) = V", [] {
        const auto sc = build_fig4_symmetric(0.25, 0.0, 100.0, 0.0);
        const auto r = inseparability(sc.state, StokesComponent::S2, StokesComponent::S3, sc.pair_x, sc.pair_y);
        return std::pair{std::abs(r.value - 0.25) <= 1e-10, "I = " + detail::sci(r.value)};
    }));

    out.push_back(detail::check("uncertainty principle for generated states", [] {
        const auto sc = build_fig4_symmetric(0.25, 1.0, 100.0, 0.3);
        const double m = uncertainty_margin(sc.state);
        return std::pair{m >= -1e-9, "min eigenvalue of V + i Omega: " + detail::sci(m)};
    }));
    return out;
}

}  // namespace sstokes
