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

#include <random>

#include "nlom/continuous.hpp"
#include "nlom/ensemble.hpp"

namespace nlom {
namespace {

// omega_m = 1 keeps the algebra readable; theta = 3 thermal quanta scale.
SystemParams unit_params(double mu2k, double gamma, double zeta, double eta) {
    SystemParams p;
    p.omega_m = 1.0;
    p.mu = 0.01;
    p.k = mu2k / (p.mu * p.mu);
    p.gamma = gamma;
    p.T_bath = 3.0 * constants::hbar / constants::k_B;
    p.zeta = zeta;
    p.set_eta(eta);
    return p;
}

// Stationary Riccati residual, assembled from C in the test.
Eigen::Vector3d riccati_residual(const Eigen::Vector3d& v, const CMat32& C, const Eigen::Vector3d& eta, double omega) {
    Mat2 V;
    V << v(0), v(1), v(1), v(2);
    Mat2 O;
    O << 0, 1, -1, 0;
    const Eigen::Matrix2cd ctc = C.adjoint() * C;
    const Mat2 M = O * (omega * Mat2::Identity() + ctc.imag());
    const Mat2 D = -O * ctc.real() * O;
    const Mat23 N = 2.0 * V * C.transpose().real() - O * C.transpose().imag();
    const Mat2 F = M * V + V * M.transpose() + D - N * eta.asDiagonal() * N.transpose();
    return {F(0, 0), F(0, 1), F(1, 1)};
}

Eigen::Vector3d newton_riccati(Eigen::Vector3d v, const CMat32& C, const Eigen::Vector3d& eta, double omega) {
    for (int it = 0; it < 100; ++it) {
        const Eigen::Vector3d f = riccati_residual(v, C, eta, omega);
        if (f.norm() < 1e-14) break;
        Eigen::Matrix3d J;
        for (int j = 0; j < 3; ++j) {
            Eigen::Vector3d h = Eigen::Vector3d::Zero();
            h(j) = 1e-7 * std::max(1.0, std::abs(v(j)));
            J.col(j) = (riccati_residual(v + h, C, eta, omega) - riccati_residual(v - h, C, eta, omega)) / (2.0 * h(j));
        }
        v -= J.fullPivLu().solve(f);
    }
    return v;
}

TEST(Continuous, ZeroMeanRemovesOpticalDrift) {
    // At mu <X> = 0 and resonance the optical rows add nothing to M.
    auto p = unit_params(0.3, 0.0, 0.6, 0.8);
    const auto m = build_matrices(0.0, Mat2::Identity(), p);
    EXPECT_NEAR((m.M - symplectic_form()).norm(), 0.0, 1e-15);
}

TEST(Continuous, LinearizedMeasurementRate) {
    // Conditioning of V_X at u = 0 is 8 eta_P zeta^2 mu^2 k V_X^2.
    auto p = unit_params(0.3, 0.0, 0.6, 0.8);
    Mat2 V;
    V << 2.0, 0.0, 0.0, 3.0;
    const auto m = build_matrices(0.0, V, p);
    const Mat2 cond = m.N * m.eta.asDiagonal() * m.N.transpose();
    EXPECT_NEAR(cond(0, 0), 8.0 * 0.8 * 0.36 * 0.3 * 4.0, 1e-12);
}

TEST(Continuous, RiccatiFixedPointMatchesAlgebraicSolution) {
    const auto p = unit_params(0.3, 0.05, 0.6, 0.8);
    const auto m0 = build_matrices(0.0, Mat2::Identity(), p);
    const Eigen::Vector3d exact = newton_riccati({1.0, 0.0, 1.0}, m0.C, m0.eta, p.omega_m);
    ASSERT_LT(riccati_residual(exact, m0.C, m0.eta, p.omega_m).norm(), 1e-12);

    GaussianState s;
    s.cov = Mat2::Identity() * 4.0;
    const double dt = 2e-3;
    for (int n = 0; n < 200000; ++n) s = em_step(s, build_matrices(0.0, s.cov, p), Vec2::Zero(), dt);
    EXPECT_NEAR(s.v_x(), exact(0), 1e-6);
    EXPECT_NEAR(s.v_xp(), exact(1), 1e-6);
    EXPECT_NEAR(s.v_p(), exact(2), 1e-6);
    EXPECT_GE(s.det(), 0.25);
}

TEST(Continuous, MomentumKickVanishesOffResonance) {
    auto p = unit_params(0.3, 0.0, 0.6, 0.8);
    p.mu = 0.05;
    p.k = 0.3 / (p.mu * p.mu);
    double prev = std::numeric_limits<double>::infinity();
    for (double x : {0.0, 100.0, 1e3, 1e5, 1e7}) {
        const auto m = build_matrices(x, Mat2::Identity(), p);
        const double kick = m.d(1) + p.omega_m * x;
        EXPECT_LT(kick, prev);
        prev = kick;
    }
    EXPECT_LT(prev, 1e-6);
    EXPECT_NEAR(build_matrices(0.0, Mat2::Identity(), p).d(1), 2.0 * p.mu * p.k, 1e-9);
}

TEST(Continuous, FreeRotationIsExactInRotatingScheme) {
    auto p = unit_params(0.0, 0.0, 0.6, 0.8);
    p.k = 0.0;
    GaussianState s;
    s.mean = Vec2(3.0, -1.0);
    const double dt = 0.01;
    const int n = 628;
    for (int i = 0; i < n; ++i) s = rotating_em_step(s, build_matrices(s.mean(0), s.cov, p), Vec2::Zero(), dt, p.omega_m);
    const double t = n * dt;
    EXPECT_NEAR(s.mean(0), 3.0 * std::cos(t) - 1.0 * std::sin(t), 1e-12);
    EXPECT_NEAR(s.mean(1), -3.0 * std::sin(t) - 1.0 * std::cos(t), 1e-12);
}

TEST(Continuous, PlainEulerGainsEnergyOnRotation) {
    // The reason rotating_euler is the default: (1 + w^2 dt^2) per step.
    auto p = unit_params(0.0, 0.0, 0.6, 0.8);
    p.k = 0.0;
    GaussianState s;
    s.mean = Vec2(1.0, 0.0);
    const double dt = 0.01;
    for (int i = 0; i < 1000; ++i) s = em_step(s, build_matrices(s.mean(0), s.cov, p), Vec2::Zero(), dt);
    EXPECT_NEAR(s.mean.squaredNorm(), std::pow(1.0 + dt * dt, 1000), 1e-9);
}

TEST(Continuous, NoDetectionDecouplesConditioning) {
    // eta = 0: V ignores the noise and relaxes monotonically toward the
    // unconditional steady state (rotation-averaged trace).
    auto p = unit_params(0.3, 0.05, 0.6, 0.8);
    std::mt19937_64 g(1);
    std::normal_distribution<double> n01;
    GaussianState a, b;
    const double dt = 1e-3;
    double prev_trace = a.cov.trace();
    for (int i = 0; i < 20000; ++i) {
        auto ma = build_matrices(a.mean(0), a.cov, p);
        auto mb = build_matrices(b.mean(0), b.cov, p);
        ma.eta.setZero();
        mb.eta.setZero();
        a = rotating_em_step(a, ma, Vec2(n01(g), n01(g)) * std::sqrt(dt), dt, p.omega_m);
        b = rotating_em_step(b, mb, Vec2::Zero(), dt, p.omega_m);
        EXPECT_EQ(a.cov, b.cov);
        EXPECT_GE(a.cov.trace(), prev_trace - 1e-12);
        prev_trace = a.cov.trace();
    }
}

TEST(Continuous, PureConditioningKeepsStatePure) {
    for (double zeta : {0.0, 1.0}) {
        auto p = unit_params(0.3, 0.0, zeta, 1.0);
        p.mu = 0.05;
        p.k = 0.3 / (p.mu * p.mu);
        std::mt19937_64 g(2);
        std::normal_distribution<double> n01;
        GaussianState s;
        const double dt = 1e-4;
        double prev = s.purity();
        for (int i = 0; i < 50000; ++i) {
            s = rotating_em_step(s, build_matrices(s.mean(0), s.cov, p), Vec2(n01(g), n01(g)) * std::sqrt(dt), dt, p.omega_m);
            EXPECT_GE(s.purity(), prev - 1e-6) << "zeta " << zeta << " step " << i;
            prev = std::min(prev, s.purity());
        }
        EXPECT_NEAR(s.purity(), 1.0, 1e-3);
    }
}

TEST(Continuous, RecordChannelsFollowZeta) {
    auto p = unit_params(0.3, 0.0, 1.0, 0.8);
    EXPECT_FALSE(record_scales(p).has_x);
    EXPECT_TRUE(record_scales(p).has_p);
    p.zeta = 0.0;
    EXPECT_TRUE(record_scales(p).has_x);
    EXPECT_FALSE(record_scales(p).has_p);
}

TEST(Continuous, StreamingCurrentsMatchBatch) {
    auto p = device_params("deviceA");
    std::mt19937_64 g(4);
    std::normal_distribution<double> n01;
    const double dt = 5e-11;
    std::vector<double> dx(500), dp(500);
    for (std::size_t i = 0; i < dx.size(); ++i) {
        const auto r = measurement_record(1.0, p, Vec2(n01(g), n01(g)) * std::sqrt(dt), dt);
        dx[i] = r.dy_x;
        dp[i] = r.dy_p;
    }
    const std::size_t w = 20;
    const auto batch = windowed_currents(dx, dp, w, dt, p);
    CurrentWindow win(w, current_scales(p, double(w) * dt));
    for (std::size_t i = 0; i < dx.size(); ++i) {
        win.push(dx[i], dp[i]);
        if (i + 1 < w) {
            EXPECT_TRUE(std::isnan(batch.x_l[i]));
            EXPECT_FALSE(win.full());
        } else {
            EXPECT_NEAR(win.x_l(), batch.x_l[i], 1e-9 * std::abs(batch.x_l[i]) + 1e-12);
            EXPECT_NEAR(win.p_l(), batch.p_l[i], 1e-9);
        }
    }
}

TEST(Continuous, CurrentNormalizationAtZeroCoupling) {
    auto p = device_params("deviceA");
    p.mu = 0.0;
    p.g0_over_kappa.reset();
    TrajectoryOptions o;
    o.lock = false;
    o.periods = 20.0;
    o.discard_periods = 0.0;
    const std::size_t w = window_steps_for(p, trajectory_dt(p, o));
    o.current_stride = w;
    const auto r = run_trajectory(p, 3, 0, o);
    ASSERT_TRUE(r.ok);
    const auto mx = mean_and_error(r.x_l_samples), mp = mean_and_error(r.p_l_samples);
    double vx = 0.0, vp = 0.0;
    for (double v : r.x_l_samples) vx += (v - mx.mean) * (v - mx.mean);
    for (double v : r.p_l_samples) vp += (v - mp.mean) * (v - mp.mean);
    const double n = double(r.x_l_samples.size());
    EXPECT_GT(n, 1900.0);
    EXPECT_NEAR(vx / (n - 1), 0.5, 0.05);
    EXPECT_NEAR(vp / (n - 1), 0.5, 0.05);
    EXPECT_NEAR(mp.mean, 0.0, 0.05);
    EXPECT_NEAR(mx.mean, p.X_alpha * std::sqrt(p.eta_X * (1.0 - p.zeta * p.zeta)), 0.01 * mx.mean);
}

TEST(Continuous, DriveLockCancelsStaticOffset) {
    DriveLock lock(0.05, 0.5, 1e-3);
    double delta = 0.0;
    for (int i = 0; i < 200000; ++i) delta = lock.update(4.0);
    EXPECT_NEAR(delta, -0.5 * 0.05 * 4.0, 1e-9);
}

TEST(Continuous, TrajectoryIsDeterministicAndPhysical) {
    const auto p = device_params("deviceA");
    TrajectoryOptions o;
    o.periods = 3.0;
    o.discard_periods = 1.0;
    o.record_stride = 50;
    const auto a = run_trajectory(p, 11, 2, o);
    const auto b = run_trajectory(p, 11, 2, o);
    const auto c = run_trajectory(p, 11, 3, o);
    ASSERT_TRUE(a.ok);
    EXPECT_EQ(a.final_state.mean, b.final_state.mean);
    EXPECT_EQ(a.final_state.cov, b.final_state.cov);
    EXPECT_EQ(a.record.v_x, b.record.v_x);
    EXPECT_NE(a.final_state.mean, c.final_state.mean);
    EXPECT_GE(a.min_det, 0.25 - 1e-3);
    EXPECT_EQ(a.steps, 6000u);
    EXPECT_EQ(a.window_steps, 20u);
    EXPECT_EQ(a.record.size(), 120u);
}

TEST(Continuous, RefinedRunsConvergePathwise) {
    // Same Brownian paths at dt / 4 and dt / 16: the path-averaged error of the
    // minimum shrinks with refinement. Single paths need not be monotone.
    const auto p = device_params("deviceA");
    TrajectoryOptions o;
    o.periods = 5.0;
    o.discard_periods = 1.0;
    double coarse = 0.0, fine = 0.0;
    for (std::uint64_t seed = 5; seed < 9; ++seed) {
        auto at = [&](int level) {
            o.refine_level = level;
            return run_trajectory(p, seed, 0, o).minima.v_min;
        };
        const double ref = at(4);
        coarse += std::abs(at(0) - ref) / ref;
        fine += std::abs(at(2) - ref) / ref;
    }
    EXPECT_LT(fine, coarse);
    EXPECT_LT(fine / 4.0, 0.01);
}

TEST(Continuous, RejectsCoarseSteps) {
    const auto p = device_params("deviceA");
    TrajectoryOptions o;
    o.dt_divisor = 100;
    EXPECT_THROW(run_trajectory(p, 1, 0, o), std::invalid_argument);
}

TEST(Ensemble, ThreadCountDoesNotChangeResults) {
    const auto p = device_params("deviceA");
    EnsembleOptions o;
    o.trajectories = 4;
    o.seed = 9;
    o.trajectory.periods = 2.0;
    o.trajectory.discard_periods = 0.5;
    o.threads = 1;
    const auto a = run_ensemble(p, o);
    o.threads = 3;
    const auto b = run_ensemble(p, o);
    ASSERT_EQ(a.accepted, 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(a.minima[i].v_x, b.minima[i].v_x);
        EXPECT_EQ(a.trajectory_mean_p_l[i], b.trajectory_mean_p_l[i]);
    }
    EXPECT_EQ(a.summary.neff_mean, b.summary.neff_mean);
}

TEST(Ensemble, FailuresAreListedNotFatal) {
    const auto p = device_params("deviceA");
    EnsembleOptions o;
    o.trajectories = 3;
    o.trajectory.periods = 1.0;
    o.trajectory.max_substeps = 0;
    const auto e = run_ensemble(p, o);
    EXPECT_EQ(e.accepted, 0u);
    ASSERT_EQ(e.failures.size(), 3u);
    EXPECT_EQ(e.failures[1].index, 1u);
    EXPECT_NE(e.failures[0].cause.find("substep"), std::string::npos);
}

}  // namespace
}  // namespace nlom
