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

#include "nlom/pulsed_gaussian.hpp"

namespace nlom {
namespace {

SystemParams pulse(double x_alpha, double zeta, double sigma2, double mu_sigma) {
    SystemParams p;
    p.X_alpha = x_alpha;
    p.zeta = zeta;
    return at_mu_sigma(p, sigma2, mu_sigma);
}

TEST(PulsedGaussian, JacobianMatchesFiniteDifferences) {
    const auto p = pulse(40.0, 0.6, 30.0, 1.2);
    for (double z : {-0.5, -0.1, 0.0, 0.2, 0.9}) {
        for (double d : {-2.0, 0.0, 1.5}) {
            const double h = 1e-6;
            const auto oz1 = coords_to_outcome({z + h, d}, p), oz0 = coords_to_outcome({z - h, d}, p);
            const auto od1 = coords_to_outcome({z, d + h}, p), od0 = coords_to_outcome({z, d - h}, p);
            const double a = (oz1.x_l - oz0.x_l) / (2 * h), b = (od1.x_l - od0.x_l) / (2 * h);
            const double c = (oz1.p_l - oz0.p_l) / (2 * h), e = (od1.p_l - od0.p_l) / (2 * h);
            EXPECT_NEAR(std::abs(jacobian_det({z, d}, p)), std::abs(a * e - b * c), 1e-5 * std::abs(a * e - b * c) + 1e-8);
        }
    }
}

TEST(PulsedGaussian, DeltaIsUnitNormalDistance) {
    // Moving along delta leaves z fixed and travels at unit speed.
    const auto p = pulse(40.0, 0.6, 30.0, 1.2);
    const auto a = coords_to_outcome({0.3, 0.0}, p), b = coords_to_outcome({0.3, 1.0}, p);
    EXPECT_NEAR(std::hypot(b.x_l - a.x_l, b.p_l - a.p_l), 1.0, 1e-12);
}

TEST(PulsedGaussian, ResonantDriveOnly) {
    auto p = pulse(40.0, 0.6, 30.0, 1.2);
    p.delta_over_kappa = 0.1;
    EXPECT_THROW(gaussian_averaged_variance(30.0, p), std::invalid_argument);
}

TEST(PulsedGaussian, IncludedMassIsOne) {
    for (double zeta : {0.3, 0.7, 0.999}) {
        for (double ms : {0.01, 0.3, 1.0}) {
            const auto g = gaussian_averaged_variance(500.0, pulse(200.0, zeta, 500.0, ms));
            EXPECT_NEAR(g.included_mass, 1.0, 5e-3) << zeta << " " << ms;
        }
    }
    // Phase homodyne: once |u| reaches 1 two filter peaks share an outcome and
    // both are counted, so the mass exceeds one slightly.
    for (double ms : {0.01, 0.3}) {
        const auto g = gaussian_averaged_variance(500.0, pulse(200.0, 1.0, 500.0, ms));
        EXPECT_NEAR(g.included_mass, 1.0, 1e-2) << ms;
    }
}

TEST(PulsedGaussian, AgreesWithExactPathInItsRegime) {
    // Phase homodyne is left out above mu sigma ~ 0.1: its filter is multimodal
    // in x_m there, which the single-peak expansion cannot represent.
    const GaussianPrior prior{500.0};
    for (double zeta : {0.5, 0.7, 0.8}) {
        for (double ms : {0.05, 0.5, 1.0}) {
            const auto p = pulse(200.0, zeta, 500.0, ms);
            const double exact = averaged_posterior_variance(prior, p).value;
            const double gauss = gaussian_averaged_variance(500.0, p).value;
            EXPECT_NEAR(gauss, exact, 0.03 * exact) << zeta << " " << ms;
        }
    }
}

TEST(PulsedGaussian, PhaseHomodyneAgreesInLinearRegime) {
    const auto p = pulse(200.0, 1.0, 500.0, 0.05);
    const double exact = averaged_posterior_variance(GaussianPrior{500.0}, p).value;
    EXPECT_NEAR(gaussian_averaged_variance(500.0, p).value, exact, 0.01 * exact);
}

TEST(PulsedGaussian, PosteriorIsNarrowerThanPrior) {
    const auto p = pulse(50.0, 0.7, 20.0, 0.8);
    for (double z : {-0.3, 0.0, 0.4}) {
        const auto st = gaussian_posterior_stats({z, 0.5}, 20.0, p);
        ASSERT_TRUE(st.valid);
        EXPECT_LT(st.sigma_f2, 20.0);
        EXPECT_GT(st.sigma_f2, 0.0);
        EXPECT_GT(st.heralding_density, 0.0);
    }
}

TEST(PulsedGaussian, NegativeCurvatureIsExcluded) {
    const auto p = pulse(50.0, 0.7, 20.0, 0.8);
    const auto st = gaussian_posterior_stats({0.0, min_delta(p) * 1.5}, 20.0, p);
    EXPECT_FALSE(st.valid);
}

TEST(PulsedGaussian, SinglePortSettingCoversBothSides) {
    EXPECT_TRUE(std::isinf(min_delta(pulse(10.0, 1.0, 1.0, 1.0))));
    EXPECT_NEAR(min_delta(pulse(10.0, 0.6, 1.0, 1.0)), -6.0, 1e-12);
}

}  // namespace
}  // namespace nlom
