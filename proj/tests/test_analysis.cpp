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

#include <algorithm>
#include <numbers>
#include <random>

#include "nlom/analysis.hpp"

namespace nlom {
namespace {

constexpr double kPi = std::numbers::pi;

// Steady-state gain of the filter for a unit sinusoid, by projection.
double simulated_gain(double omega, double cutoff, double dt) {
    Butterworth3 f(cutoff, dt);
    const double period = 2.0 * kPi / omega;
    const auto settle = static_cast<std::size_t>(40.0 * 2.0 * kPi / cutoff / dt);
    const auto span = static_cast<std::size_t>(std::llround(20.0 * period / dt));
    double c = 0.0, s = 0.0;
    for (std::size_t n = 0; n < settle + span; ++n) {
        const double t = dt * double(n);
        const double y = f.step(std::sin(omega * t));
        if (n >= settle) {
            c += y * std::cos(omega * t);
            s += y * std::sin(omega * t);
        }
    }
    return 2.0 * std::hypot(c, s) / double(span);
}

double analytic_gain(double omega, double cutoff) { return 1.0 / std::sqrt(1.0 + std::pow(omega / cutoff, 6)); }

TEST(Butterworth, UnitDcGain) {
    Butterworth3 f(0.5, 2.0 * kPi / 2000.0);
    EXPECT_NEAR(std::abs(f.response(0.0)), 1.0, 1e-9);  // coefficient rounding
    double y = 0.0;
    for (int i = 0; i < 200000; ++i) y = butterworth_step(f, 3.25);
    EXPECT_NEAR(y, 3.25, 1e-9);
}

TEST(Butterworth, HalfPowerAtCutoff) {
    const double dt = 2.0 * kPi / 2000.0;
    const double g = simulated_gain(0.5, 0.5, dt);
    EXPECT_NEAR(g, 1.0 / std::sqrt(2.0), 0.02 / std::sqrt(2.0));
    EXPECT_NEAR(std::abs(Butterworth3(0.5, dt).response(0.5)), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(Butterworth, ThirdOrderRolloff) {
    const double dt = 2.0 * kPi / 2000.0;
    const double g = simulated_gain(2.0, 0.5, dt);
    EXPECT_LE(20.0 * std::log10(g), -34.0);
    EXPECT_NEAR(g, analytic_gain(2.0, 0.5), 0.02 * analytic_gain(2.0, 0.5));
}

TEST(Butterworth, MatchesAnalyticMagnitudeAcrossBand) {
    const double dt = 2.0 * kPi / 2000.0;
    const Butterworth3 f(0.5, dt);
    for (double w : {0.05, 0.2, 0.4, 0.7, 1.0, 3.0}) {
        EXPECT_NEAR(std::abs(f.response(w)), analytic_gain(w, 0.5), 1e-3 * analytic_gain(w, 0.5) + 1e-9) << w;
    }
}

TEST(Butterworth, StableAndCausal) {
    Butterworth3 f(0.5, 2.0 * kPi / 2000.0);
    EXPECT_LT(f.max_pole_radius(), 1.0);
    // Output before an impulse is zero; the impulse response decays.
    for (int i = 0; i < 10; ++i) EXPECT_EQ(f.step(0.0), 0.0);
    const double first = f.step(1.0);
    EXPECT_GT(first, 0.0);
    double tail = 0.0;
    for (int i = 0; i < 200000; ++i) tail = f.step(0.0);
    EXPECT_LT(std::abs(tail), 1e-12);
    EXPECT_THROW(Butterworth3(0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(Butterworth3(4.0, 1.0), std::invalid_argument);
}

TEST(Butterworth, Reproducible) {
    Butterworth3 a(0.5, 0.01), b(0.5, 0.01);
    std::mt19937_64 g(1);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 1000; ++i) {
        const double x = n01(g);
        EXPECT_EQ(a.step(x), b.step(x));
    }
}

TEST(Spectrum, PureCosinePeaksAtReference) {
    const double omega = 3.0, dt = 2.0 * kPi / omega / 200.0;
    std::vector<double> x(200 * 50);
    for (std::size_t n = 0; n < x.size(); ++n) x[n] = 0.7 * std::cos(omega * dt * double(n));
    const auto s = real_fft(x, dt, 0, omega);
    EXPECT_EQ(s.frequency.size(), x.size() / 2 + 1);
    const auto k = s.peak_index(0.1);
    EXPECT_NEAR(s.frequency[k], 1.0, 1e-12);
    EXPECT_NEAR(s.magnitude[k], 0.7, 1e-9);
    EXPECT_NEAR(s.bin_width(), 1.0 / 50.0, 1e-12);
}

TEST(Spectrum, DiscardDropsLeadingSamples) {
    std::vector<double> x(1000, 0.0);
    for (std::size_t n = 0; n < 100; ++n) x[n] = 1e6;
    const auto s = real_fft(x, 0.1, 100);
    for (double m : s.magnitude) EXPECT_EQ(m, 0.0);
    EXPECT_THROW(real_fft(x, 0.1, 999), std::invalid_argument);
    EXPECT_THROW(real_fft(x, 0.0, 0), std::invalid_argument);
}

TEST(Histogram, SingleSample) {
    const auto h = histogram2d({1.0}, {2.0}, 5, 5);
    double total = 0.0, peak = 0.0;
    for (double m : h.mass) {
        total += m;
        peak = std::max(peak, m);
    }
    EXPECT_DOUBLE_EQ(total, 1.0);
    EXPECT_DOUBLE_EQ(peak, 1.0);
}

TEST(Histogram, PermutationInvariantAndNormalized) {
    std::mt19937_64 g(3);
    std::normal_distribution<double> n01;
    std::vector<double> x(5000), y(5000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = n01(g);
        y[i] = n01(g);
    }
    const auto a = histogram2d(x, y, 30, 30);
    std::vector<std::size_t> idx(x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), g);
    std::vector<double> xs(x.size()), ys(y.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        xs[i] = x[idx[i]];
        ys[i] = y[idx[i]];
    }
    const auto b = histogram2d(xs, ys, 30, 30);
    double total = 0.0;
    for (std::size_t i = 0; i < a.mass.size(); ++i) {
        EXPECT_NEAR(a.mass[i], b.mass[i], 1e-15);
        total += a.mass[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Histogram, IsotropicSamplesGiveCircularLevelSets) {
    // Second moments of the binned mass about the centre agree along both
    // axes and the cross moment vanishes, within Monte Carlo error.
    std::mt19937_64 g(8);
    std::normal_distribution<double> n01;
    const std::size_t n = 200000;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = n01(g);
        y[i] = n01(g);
    }
    const auto h = histogram2d(x, y, 40, 40, std::array<double, 4>{-5, 5, -5, 5});
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < h.nx; ++i) {
        for (std::size_t j = 0; j < h.ny; ++j) {
            const double m = h.at(i, j);
            sxx += m * h.x_center(i) * h.x_center(i);
            syy += m * h.y_center(j) * h.y_center(j);
            sxy += m * h.x_center(i) * h.y_center(j);
        }
    }
    EXPECT_NEAR(sxx / syy, 1.0, 0.02);
    EXPECT_NEAR(sxy, 0.0, 0.01);
}

TEST(Statistics, QuantileAndStandardError) {
    std::vector<double> v{4, 1, 3, 2};
    EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile(v, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(quantile(v, 0.5), 2.5);
    const auto m = mean_and_error({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(m.mean, 2.5);
    EXPECT_NEAR(m.std_error, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
}

TEST(Statistics, EnsembleMeansOfMinima) {
    const auto s = ensemble_stats({{0.2, 0.4, 0.1}, {0.4, 0.6, 0.3}}, {{1, 2, 3}, {3, 2, 1, 0}});
    EXPECT_DOUBLE_EQ(s.mean_of_minima.v_x, 0.3);
    EXPECT_DOUBLE_EQ(s.mean_of_minima.v_p, 0.5);
    EXPECT_DOUBLE_EQ(s.mean_of_minima.v_min, 0.2);
    ASSERT_EQ(s.neff_mean.size(), 3u);
    EXPECT_DOUBLE_EQ(s.neff_mean[0], 2.0);
    EXPECT_DOUBLE_EQ(s.min_neff_mean(), 2.0);
    EXPECT_THROW(ensemble_stats({{0.2, 0.4, 0.1}}, {}), std::invalid_argument);
}

TEST(Statistics, IdenticalRecordsHaveZeroWidthBand) {
    const std::vector<double> series{5.0, 3.0, 1.0, 0.5};
    const auto s = ensemble_stats({{0.2, 0.4, 0.1}, {0.2, 0.4, 0.1}, {0.2, 0.4, 0.1}}, {series, series, series});
    for (std::size_t t = 0; t < series.size(); ++t) {
        EXPECT_DOUBLE_EQ(s.neff_lower_quartile[t], s.neff_upper_quartile[t]);
        EXPECT_DOUBLE_EQ(s.neff_mean[t], series[t]);
    }
}

}  // namespace
}  // namespace nlom
