// Copyright 2026 The nlom Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "nlom/pulsed.hpp"
#include "nlom/pulsed_sweep.hpp"

namespace nlom {
namespace {

SystemParams pulse(double x_alpha, double zeta, double sigma2, double mu_sigma) {
    SystemParams p;
    p.X_alpha = x_alpha;
    p.zeta = zeta;
    return at_mu_sigma(p, sigma2, mu_sigma);
}

// Direct triple sum: prior grid in x, tensor grid of outcomes, posterior
// moments per outcome. Shares no code with the node-scatter quadrature.
struct BruteForce {
    double averaged_variance = 0.0;
    double outcome_mass = 0.0;
};

BruteForce brute_force_average(double sigma2, const SystemParams& p, double outcome_step = 0.12) {
    const double sigma = std::sqrt(sigma2);
    const std::size_t nx = 2001;
    const double x_lo = -9.0 * sigma, hx = 18.0 * sigma / double(nx - 1);
    const double ax = std::sqrt(1.0 - p.zeta * p.zeta) * p.X_alpha, ap = p.zeta * p.X_alpha;
    std::vector<double> xs(nx), prior(nx), cx(nx), cp(nx);
    for (std::size_t j = 0; j < nx; ++j) {
        xs[j] = x_lo + hx * double(j);
        prior[j] = std::exp(-0.5 * xs[j] * xs[j] / sigma2) / std::sqrt(2.0 * std::numbers::pi * sigma2) * hx;
        const double u = 0.5 * p.mu * xs[j];
        cx[j] = ax * (1.0 - u * u) / (1.0 + u * u);
        cp[j] = ap * 2.0 * u / (1.0 + u * u);
    }
    const double reach = p.X_alpha + 7.0;
    const auto no = static_cast<std::size_t>(2.0 * reach / outcome_step) + 1;
    std::vector<double> ex(no * nx), ep(no * nx);
    for (std::size_t i = 0; i < no; ++i) {
        const double o = -reach + outcome_step * double(i);
        for (std::size_t j = 0; j < nx; ++j) {
            ex[i * nx + j] = std::exp(-(o - cx[j]) * (o - cx[j]));
            ep[i * nx + j] = std::exp(-(o - cp[j]) * (o - cp[j]));
        }
    }
    BruteForce out;
    const double cell = outcome_step * outcome_step / std::numbers::pi;
    for (std::size_t i = 0; i < no; ++i) {
        for (std::size_t k = 0; k < no; ++k) {
            double s0 = 0.0, s1 = 0.0, s2 = 0.0;
            for (std::size_t j = 0; j < nx; ++j) {
                const double w = prior[j] * ex[i * nx + j] * ep[k * nx + j];
                s0 += w;
                s1 += w * xs[j];
                s2 += w * xs[j] * xs[j];
            }
            if (s0 <= 0.0) continue;
            out.outcome_mass += s0 * cell;
            out.averaged_variance += (s2 - s1 * s1 / s0) * cell;
        }
    }
    return out;
}

TEST(Pulsed, FilterIsACompletePovm) {
    // For every x_m the filter integrates to one over the outcome plane.
    const auto p = pulse(8.0, 0.6, 2.0, 1.5);
    const double h = 0.05, reach = 16.0;
    for (double x : {-3.0, 0.0, 0.7, 4.0}) {
        double s = 0.0;
        for (double xl = -reach; xl <= reach; xl += h) {
            for (double pl = -reach; pl <= reach; pl += h) s += filter_value(x, {xl, pl}, p);
        }
        EXPECT_NEAR(s * h * h, 1.0, 1e-9) << x;
    }
}

TEST(Pulsed, AveragedVarianceMatchesBruteForce) {
    for (double zeta : {0.3, 0.7, 1.0}) {
        for (double ms : {0.3, 1.0, 3.0}) {
            const auto p = pulse(6.0, zeta, 2.0, ms);
            const auto bf = brute_force_average(2.0, p);
            const auto a = averaged_posterior_variance(GaussianPrior{2.0}, p);
            EXPECT_TRUE(a.converged);
            EXPECT_NEAR(bf.outcome_mass, 1.0, 1e-6);
            EXPECT_NEAR(a.outcome_mass, 1.0, 1e-6);
            EXPECT_NEAR(a.value, bf.averaged_variance, 2e-3 * bf.averaged_variance) << "zeta " << zeta << " mu sigma " << ms;
        }
    }
}

TEST(Pulsed, ZeroCouplingLeavesPriorUntouched) {
    SystemParams p;
    p.X_alpha = 50.0;
    p.mu = 0.0;
    const auto a = averaged_posterior_variance(GaussianPrior{3.0}, p);
    EXPECT_NEAR(a.value, 3.0, 3e-3);
    const auto prior = PositionDistribution::gaussian(3.0);
    const auto post = posterior(prior, {30.0, 20.0}, p);
    EXPECT_NEAR(post.distribution.variance(), prior.variance(), 1e-12);
    EXPECT_NEAR(post.distribution.mean(), prior.mean(), 1e-12);
}

TEST(Pulsed, PosteriorMatchesDirectBayes) {
    const auto p = pulse(20.0, 0.8, 5.0, 0.9);
    const auto prior = PositionDistribution::gaussian(5.0, 6001);
    const GeneralDyneOutcome o{5.0, 13.0};
    const auto post = posterior(prior, o, p);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < prior.size(); ++i) {
        const double x = prior.x(i);
        const double w = std::exp(-0.5 * x * x / 5.0) * filter_value(x, o, p);
        s0 += w;
        s1 += w * x;
        s2 += w * x * x;
    }
    EXPECT_NEAR(post.distribution.mean(), s1 / s0, 1e-8);
    EXPECT_NEAR(post.distribution.variance(), s2 / s0 - (s1 / s0) * (s1 / s0), 1e-8);
    EXPECT_FALSE(post.zero_probability);
}

TEST(Pulsed, UnreachableOutcomeIsFlagged) {
    const auto p = pulse(20.0, 0.8, 5.0, 0.9);
    const auto post = posterior(PositionDistribution::gaussian(5.0), {400.0, -400.0}, p);
    EXPECT_TRUE(post.zero_probability);
    EXPECT_EQ(post.heralding, 0.0);
}

TEST(Pulsed, LinearizedLimit) {
    for (double ms : {0.005, 0.01, 0.02}) {
        const auto p = pulse(200.0, 1.0, 500.0, ms);
        const double lin = linearized_variance(500.0, p);
        const auto a = averaged_posterior_variance(GaussianPrior{500.0}, p);
        EXPECT_NEAR(a.value, lin, 2e-3 * lin) << ms;
    }
}

TEST(Pulsed, LinearizedFormula) {
    const auto p = pulse(10.0, 0.5, 4.0, 0.2);
    EXPECT_NEAR(linearized_variance(4.0, p), 4.0 / (1.0 + 2.0 * 25.0 * 0.01 * 4.0), 1e-12);
}

TEST(Pulsed, MeasurementAveragedPosteriorIsPrior) {
    // Averaging posteriors over outcomes returns the prior (Bayes), while a
    // single outcome moves it substantially.
    for (double ms : {0.5, 5.0, 40.0}) {
        const auto p = pulse(30.0, 0.7, 50.0, ms);
        const auto d = posterior_average_distance(GaussianPrior{50.0}, p);
        EXPECT_LT(d.averaged_posterior_l1, 0.02) << ms;
        EXPECT_NEAR(d.outcome_mass, 1.0, 1e-6);
        EXPECT_GT(d.expected_l1, 0.5) << ms;
    }
}

TEST(Pulsed, HusimiQIsNormalizedAndNonNegative) {
    const auto p = pulse(5.0, 0.7, 2.0, 1.0);
    const auto axis = default_beta_axis(p, 0.1);
    const auto q = husimi_q(axis, axis, GaussianPrior{2.0}, p);
    EXPECT_NEAR(q.integral, 1.0, 1e-6);
    for (double v : q.values) EXPECT_GE(v, 0.0);
}

TEST(Pulsed, HusimiQOfUncoupledPulseIsCoherentState) {
    SystemParams p;
    p.X_alpha = 4.0;
    p.mu = 0.0;
    const auto axis = default_beta_axis(p, 0.25);
    const auto q = husimi_q(axis, axis, GaussianPrior{1.0}, p);
    for (std::size_t i = 0; i < axis.size(); i += 7) {
        for (std::size_t k = 0; k < axis.size(); k += 5) {
            const double dx = axis[i] - 4.0, dp = axis[k];
            const double expected = std::exp(-0.5 * (dx * dx + dp * dp)) / (2.0 * std::numbers::pi);
            EXPECT_NEAR(q.at(i, k), expected, 1e-12);
        }
    }
}

TEST(Pulsed, GoldenSectionFindsParabolaMinimum) {
    int calls = 0;
    const auto m = golden_section_minimize(
        [&](double t) {
            ++calls;
            return (t - 0.3141) * (t - 0.3141);
        },
        0.0, 1.0, 21, 1e-6);
    EXPECT_NEAR(m.argument, 0.3141, 1e-6);
    EXPECT_EQ(m.evaluations, calls);
}

TEST(Pulsed, GoldenSectionKeepsBoundaryMinimum) {
    const auto m = golden_section_minimize([](double t) { return -t; }, 0.0, 1.0, 21, 1e-4);
    EXPECT_NEAR(m.argument, 1.0, 1e-3);
}

TEST(Pulsed, OptimalZetaBeatsEndpoints) {
    const auto p = pulse(50.0, 0.5, 50.0, 1.0);
    const GaussianPrior g{50.0};
    const auto opt = optimal_zeta(g, p);
    for (double z : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        SystemParams q = p;
        q.zeta = z;
        EXPECT_LE(opt.average.value, averaged_posterior_variance(g, q).value * (1.0 + 2e-3)) << z;
    }
}

TEST(Pulsed, LossShrinksOnlyTheAmplitude) {
    SystemParams p;
    p.X_alpha = 10.0;
    p.mu = 0.1;
    const auto l = apply_loss(p, 0.5);
    EXPECT_DOUBLE_EQ(l.X_alpha, 5.0);
    EXPECT_DOUBLE_EQ(l.mu, 0.1);
    EXPECT_THROW(apply_loss(p, 0.0), std::invalid_argument);
    EXPECT_THROW(apply_loss(p, 1.2), std::invalid_argument);
}

TEST(PulsedSweep, LogSpaceEndpointsExact) {
    const auto v = log_space(0.01, 10.0, 40);
    ASSERT_EQ(v.size(), 40u);
    EXPECT_EQ(v.front(), 0.01);
    EXPECT_EQ(v.back(), 10.0);
    for (std::size_t i = 1; i < v.size(); ++i) EXPECT_NEAR(v[i] / v[i - 1], v[1] / v[0], 1e-12);
    EXPECT_THROW(log_space(0.0, 1.0, 5), std::invalid_argument);
}

TEST(PulsedSweep, SmallSweepRowsAreConsistent) {
    PulsedSweepSettings s;
    s.sigma2 = 20.0;
    s.X_alpha = 20.0;
    s.mu_sigma_min = 0.05;
    s.mu_sigma_max = 2.0;
    s.points = 4;
    const auto rows = pulsed_sweep(s, 2);
    ASSERT_EQ(rows.size(), 4u);
    for (const auto& r : rows) {
        EXPECT_NEAR(r.mu * std::sqrt(s.sigma2), r.mu_sigma, 1e-12);
        EXPECT_LE(r.optimal.value, r.phase_homodyne.value * (1.0 + 2e-3));
        EXPECT_GE(r.zeta_opt, 0.0);
        EXPECT_LE(r.zeta_opt, 1.0);
        EXPECT_LT(r.optimal.value, s.sigma2);
    }
}

}  // namespace
}  // namespace nlom
