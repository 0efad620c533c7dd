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

// Continuous general-dyne measurement in the stochastic Gaussian regime.
//
// The conditional state is Gaussian; its covariance obeys a Riccati equation
// whose coefficients depend on the stochastic mean position through the
// cavity response. Integration is Euler-Maruyama with adaptive substeps.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlom/analysis.hpp"
#include "nlom/gaussian_state.hpp"
#include "nlom/params.hpp"
#include "nlom/response.hpp"
#include "nlom/rng.hpp"

namespace nlom {

using Mat23 = Eigen::Matrix<double, 2, 3>;
using CMat32 = Eigen::Matrix<std::complex<double>, 3, 2>;

struct PropagatorMatrices {
    Mat2 M = Mat2::Zero();
    Mat2 D = Mat2::Zero();
    Mat23 N = Mat23::Zero();
    Vec2 d = Vec2::Zero();
    /// Rows: amplitude port, phase port, thermal bath.
    CMat32 C = CMat32::Zero();
    /// Diagonal of the efficiency matrix; the bath row is never detected.
    Eigen::Vector3d eta = Eigen::Vector3d::Zero();
};

inline Mat2 symplectic_form() {
    Mat2 o;
    o << 0.0, 1.0, -1.0, 0.0;
    return o;
}

/// Drift, diffusion and noise matrices at the current mean position.
inline PropagatorMatrices build_matrices(double mean_x, const Mat2& V, const SystemParams& p) {
    using cd = std::complex<double>;
    const double u = response_argument(mean_x, p.mu, p.delta_over_kappa);
    const cd w = cd(1.0, -u);
    const cd w2 = w * w;
    const double mu2k = p.mu * p.mu * p.k;
    PropagatorMatrices m;
    m.C(0, 0) = cd(0.0, std::sqrt(2.0 * mu2k * (1.0 - p.zeta * p.zeta))) / w2;
    m.C(1, 0) = cd(std::sqrt(2.0 * mu2k * p.zeta * p.zeta), 0.0) / w2;
    if (p.gamma > 0.0) {
        const double theta = p.theta_bath();
        if (!(theta > 0.0)) throw std::invalid_argument("build_matrices: bath temperature must be positive when gamma > 0");
        m.C(2, 0) = cd(std::sqrt(4.0 * p.gamma * theta), 0.0);
        m.C(2, 1) = cd(0.0, std::sqrt(p.gamma / (4.0 * theta)));
    }
    const Eigen::Matrix2cd ctc = m.C.adjoint() * m.C;
    const Mat2 omega = symplectic_form();
    const Mat2 R = Mat2::Identity() * p.omega_m;
    m.M = omega * (R + ctc.imag());
    m.D = -omega * ctc.real() * omega;
    const Mat23 re_ct = m.C.transpose().real();
    const Mat23 im_ct = m.C.transpose().imag();
    m.N = 2.0 * V * re_ct - omega * im_ct;
    m.d = Vec2(-p.gamma * mean_x, -p.omega_m * mean_x + 2.0 * p.mu * p.k / (1.0 + u * u));
    m.eta = Eigen::Vector3d(p.eta_X, p.eta_P, 0.0);
    return m;
}

/// One Euler-Maruyama step. The mean is advanced in the displaced frame
/// r = (X - <X>, P), so M acts on (0, <P>); the position drift sits in d.
inline GaussianState em_step(const GaussianState& s, const PropagatorMatrices& m, const Vec2& dW, double dt) {
    const Eigen::Vector3d dw3(std::sqrt(m.eta(0)) * dW(0), std::sqrt(m.eta(1)) * dW(1), 0.0);
    const Vec2 r(0.0, s.mean(1));
    const Vec2 dr = (m.M * r + m.d) * dt + m.N * dw3;
    const Mat23 n_eta = m.N * m.eta.asDiagonal();
    const Mat2 dV = (m.M * s.cov + s.cov * m.M.transpose() + m.D - n_eta * m.N.transpose()) * dt;
    GaussianState out;
    out.mean = s.mean + dr;
    const Mat2 v = s.cov + dV;
    out.cov = 0.5 * (v + v.transpose());
    return out;
}

/// Time-stepping scheme for the mean and covariance.
enum class StepScheme {
    /// em_step applied to the full drift.
    euler,
    /// Free rotation at omega_m applied exactly; all other terms by em_step.
    /// Removes the (1 + omega_m^2 dt^2) per-step energy gain of explicit
    /// Euler on the harmonic part while keeping the same stochastic terms.
    rotating_euler,
};

/// em_step with the harmonic part split off and propagated exactly.
inline GaussianState rotating_em_step(const GaussianState& s, PropagatorMatrices m, const Vec2& dW, double dt,
                                      double omega_m) {
    m.M -= omega_m * symplectic_form();
    m.d(1) += omega_m * s.mean(0);
    GaussianState e = em_step(s, m, dW, dt);
    const double c = std::cos(omega_m * dt), sn = std::sin(omega_m * dt);
    Mat2 rot;
    rot << c, sn, -sn, c;
    e.mean = rot * e.mean;
    const Mat2 v = rot * e.cov * rot.transpose();
    e.cov = 0.5 * (v + v.transpose());
    return e;
}

inline GaussianState step_state(const GaussianState& s, const PropagatorMatrices& m, const Vec2& dW, double dt,
                                StepScheme scheme, double omega_m) {
    return scheme == StepScheme::euler ? em_step(s, m, dW, dt) : rotating_em_step(s, m, dW, dt, omega_m);
}

/// Largest local rate of the Riccati and mean dynamics; substeps keep rate * h small.
inline double stiffness_rate(const PropagatorMatrices& m, const Mat2& V) {
    const Mat23 re_ct = m.C.transpose().real();
    const Mat23 b = symplectic_form() * m.C.transpose().imag();
    const Mat2 q = re_ct * m.eta.asDiagonal() * re_ct.transpose();
    const Mat2 c = re_ct * m.eta.asDiagonal() * b.transpose();
    return 2.0 * m.M.norm() + 8.0 * q.norm() * V.norm() + 4.0 * c.norm();
}

/// Per-channel record increments; a channel with zero weight is absent.
struct MeasurementRecord {
    double dy_x = 0.0;
    double dy_p = 0.0;
    bool has_x = true;
    bool has_p = true;
};

/// Noise scale of each record: dy = f dt + dW * scale.
struct RecordScales {
    double x = 0.0;
    double p = 0.0;
    bool has_x = false;
    bool has_p = false;
};

inline RecordScales record_scales(const SystemParams& p) {
    RecordScales s;
    const double wx = 8.0 * p.eta_X * (1.0 - p.zeta * p.zeta) * p.k;
    const double wp = 8.0 * p.eta_P * p.zeta * p.zeta * p.k;
    s.has_x = wx > 0.0;
    s.has_p = wp > 0.0;
    s.x = s.has_x ? 1.0 / std::sqrt(wx) : 0.0;
    s.p = s.has_p ? 1.0 / std::sqrt(wp) : 0.0;
    return s;
}

/// dy_X = f_R dt + dW_X / sqrt(8 eta_X (1 - zeta^2) k), dy_P = f_I dt + dW_P / sqrt(8 eta_P zeta^2 k).
inline MeasurementRecord measurement_record(double mean_x, const SystemParams& p, const Vec2& dW, double dt) {
    const auto r = response(mean_x, p);
    const auto s = record_scales(p);
    MeasurementRecord m;
    m.has_x = s.has_x;
    m.has_p = s.has_p;
    m.dy_x = s.has_x ? r.f_R * dt + dW(0) * s.x : 0.0;
    m.dy_p = s.has_p ? r.f_I * dt + dW(1) * s.p : 0.0;
    return m;
}

/// Current prefactors sqrt(4 k eta (1 - zeta^2) / tau) and sqrt(4 k eta zeta^2 / tau).
struct CurrentScales {
    double x = 0.0;
    double p = 0.0;
};

inline CurrentScales current_scales(const SystemParams& p, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("current_scales: tau must be positive");
    return {std::sqrt(4.0 * p.k * p.eta_X * (1.0 - p.zeta * p.zeta) / tau),
            std::sqrt(4.0 * p.k * p.eta_P * p.zeta * p.zeta / tau)};
}

/// Window length tau = X_alpha^2 / (4 k), in whole steps (at least one).
inline std::size_t window_steps_for(const SystemParams& p, double dt) {
    if (!(p.k > 0.0) || !(p.X_alpha > 0.0)) return 50;
    const double tau = p.X_alpha * p.X_alpha / (4.0 * p.k);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(tau / dt)));
}

/// Windowed currents from complete record series. Entry i integrates records
/// i - n + 1 .. i; the first n - 1 entries are NaN.
struct Currents {
    std::vector<double> x_l;
    std::vector<double> p_l;
};

inline Currents windowed_currents(const std::vector<double>& dy_x, const std::vector<double>& dy_p,
                                  std::size_t window_steps, double dt, const SystemParams& p) {
    if (window_steps == 0) throw std::invalid_argument("windowed_currents: window must span at least one step");
    if (dy_x.size() != dy_p.size()) throw std::invalid_argument("windowed_currents: record lengths differ");
    if (window_steps > dy_x.size()) throw std::invalid_argument("windowed_currents: window longer than trajectory");
    const auto sc = current_scales(p, static_cast<double>(window_steps) * dt);
    Currents c;
    c.x_l.assign(dy_x.size(), std::numeric_limits<double>::quiet_NaN());
    c.p_l.assign(dy_p.size(), std::numeric_limits<double>::quiet_NaN());
    double sx = 0.0, sp = 0.0;
    for (std::size_t i = 0; i < dy_x.size(); ++i) {
        sx += dy_x[i];
        sp += dy_p[i];
        if (i >= window_steps) {
            sx -= dy_x[i - window_steps];
            sp -= dy_p[i - window_steps];
        }
        if (i + 1 >= window_steps) {
            c.x_l[i] = sc.x * sx;
            c.p_l[i] = sc.p * sp;
        }
    }
    return c;
}

/// Streaming version of windowed_currents. Sums are recomputed from the ring
/// buffer once per window to keep rounding drift bounded.
class CurrentWindow {
  public:
    CurrentWindow(std::size_t window_steps, CurrentScales scales)
        : n_(window_steps), scales_(scales), bx_(window_steps, 0.0), bp_(window_steps, 0.0) {
        if (n_ == 0) throw std::invalid_argument("CurrentWindow: window must span at least one step");
    }

    void push(double dy_x, double dy_p) {
        sx_ += dy_x - bx_[head_];
        sp_ += dy_p - bp_[head_];
        bx_[head_] = dy_x;
        bp_[head_] = dy_p;
        head_ = (head_ + 1) % n_;
        if (count_ < n_) ++count_;
        if (head_ == 0) {
            sx_ = sp_ = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                sx_ += bx_[i];
                sp_ += bp_[i];
            }
        }
    }

    bool full() const { return count_ == n_; }
    double x_l() const { return scales_.x * sx_; }
    double p_l() const { return scales_.p * sp_; }

  private:
    std::size_t n_;
    CurrentScales scales_;
    std::vector<double> bx_, bp_;
    std::size_t head_ = 0, count_ = 0;
    double sx_ = 0.0, sp_ = 0.0;
};

/// Detuning feedback Delta/kappa = -mu X_bar / 2 with X_bar a causal
/// low-pass of the mean position.
class DriveLock {
  public:
    DriveLock(double mu, double cutoff, double dt) : mu_(mu), filter_(cutoff, dt) {}

    /// Feeds the latest mean position; returns the detuning for the next step.
    double update(double mean_x) {
        filtered_ = filter_.step(mean_x);
        return -0.5 * mu_ * filtered_;
    }

    double filtered() const { return filtered_; }

  private:
    double mu_;
    Butterworth3 filter_;
    double filtered_ = 0.0;
};

/// Free function form of DriveLock::update.
inline double drive_lock_update(DriveLock& lock, double mean_x) { return lock.update(mean_x); }

struct TrajectoryOptions {
    double periods = 100.0;
    StepScheme scheme = StepScheme::rotating_euler;
    /// Steps per mechanical period at refinement level 0.
    int dt_divisor = 2000;
    /// Wiener-path refinement: dt = period / (dt_divisor * 2^level).
    int refine_level = 0;
    bool lock = true;
    /// Butterworth cutoff in units of omega_m.
    double lock_cutoff = 0.5;
    /// Current window in steps; default from tau = X_alpha^2 / (4 k).
    std::optional<std::size_t> window_steps;
    /// Periods excluded from time averages and spectra.
    double discard_periods = 10.0;
    /// Full-series sampling stride in steps; 0 keeps no series.
    std::size_t record_stride = 0;
    /// Stride of the n_eff series kept for ensemble statistics; 0 disables it.
    std::size_t neff_stride = 20;
    /// Stride of the post-discard <X_m> series kept for spectra; 0 disables it.
    std::size_t mean_stride = 0;
    /// Stride of post-discard (X_l, P_l) samples kept for histograms; 0 disables it.
    std::size_t current_stride = 0;
    /// Substeps keep stiffness_rate * h below this.
    double substep_tolerance = 0.05;
    std::size_t max_substeps = 200000;
    /// omega_m dt must not exceed this.
    double max_omega_dt = 0.01;
    /// Steps with mu^2 V_X above this are flagged.
    double validity_threshold = 0.01;
    /// Trajectories with det V < 1/4 - tol are aborted.
    double physicality_tol = 1e-3;
};

/// Sampled series of one trajectory (every record_stride steps).
struct TrajectoryRecord {
    std::vector<double> t, dy_x, dy_p, x_l, p_l, mean_x, mean_p, v_x, v_xp, v_p, n_eff, v_min, delta_over_kappa;

    std::size_t size() const { return t.size(); }
};

struct ValidityReport {
    double max_mu2_vx = 0.0;
    std::size_t violating_steps = 0;
    std::size_t total_steps = 0;
    /// Time of the last violating step, or -1 if none.
    double last_violation_time = -1.0;
    bool flagged() const { return violating_steps > 0; }
};

struct TrajectoryResult {
    std::uint64_t index = 0;
    bool ok = true;
    std::string abort_cause;
    std::size_t abort_step = 0;

    std::size_t steps = 0;
    double dt = 0.0;
    std::size_t window_steps = 0;
    std::size_t substeps = 0;
    std::size_t max_substeps_per_step = 0;

    /// Minima over the whole trajectory.
    VarianceMinima minima{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::infinity()};
    /// Minima after the discard window.
    VarianceMinima settled_minima{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                                  std::numeric_limits<double>::infinity()};
    double min_det = std::numeric_limits<double>::infinity();
    double min_neff = std::numeric_limits<double>::infinity();
    GaussianState final_state;

    /// Time averages of the currents after the discard window.
    double mean_x_l = 0.0;
    double mean_p_l = 0.0;
    std::size_t current_samples = 0;

    ValidityReport validity;

    std::vector<double> neff_series;
    std::vector<double> mean_x_series;
    std::vector<double> x_l_samples, p_l_samples;
    TrajectoryRecord record;
};

inline double mechanical_period(const SystemParams& p) { return 2.0 * std::numbers::pi / p.omega_m; }

inline double trajectory_dt(const SystemParams& p, const TrajectoryOptions& o) {
    return mechanical_period(p) / (static_cast<double>(o.dt_divisor) * std::ldexp(1.0, o.refine_level));
}

/// Integrates one conditional trajectory from the thermal state at T_init.
/// Deterministic in (seed, index); noise is shared across refinement levels.
inline TrajectoryResult run_trajectory(const SystemParams& params, std::uint64_t seed, std::uint64_t index,
                                       const TrajectoryOptions& o) {
    params.validate();
    if (o.dt_divisor <= 0) throw std::invalid_argument("run_trajectory: dt_divisor must be positive");
    TrajectoryResult res;
    res.index = index;
    const double period = mechanical_period(params);
    const double base_dt = period / static_cast<double>(o.dt_divisor);
    WienerPath path(seed, index, base_dt, o.refine_level);
    const double dt = path.dt();
    if (params.omega_m * dt > o.max_omega_dt) {
        throw std::invalid_argument("run_trajectory: omega_m dt exceeds " + std::to_string(o.max_omega_dt));
    }
    NoiseStream substep_noise(seed, index, 0x5000u + static_cast<std::uint32_t>(o.refine_level));
    const auto steps = static_cast<std::size_t>(std::llround(o.periods * period / dt));
    const auto discard = static_cast<std::size_t>(std::llround(o.discard_periods * period / dt));
    const std::size_t window = o.window_steps.value_or(window_steps_for(params, dt));
    res.dt = dt;
    res.steps = steps;
    res.window_steps = window;

    SystemParams p = params;
    GaussianState s = thermal_state(params.theta_init());
    std::optional<DriveLock> lock;
    if (o.lock) lock.emplace(params.mu, o.lock_cutoff * params.omega_m, dt);
    const auto rec_scale = record_scales(p);
    CurrentWindow currents(window, current_scales(p, static_cast<double>(window) * dt));
    double sum_xl = 0.0, sum_pl = 0.0;

    auto note_state = [&](const GaussianState& st) {
        res.minima.v_x = std::min(res.minima.v_x, st.v_x());
        res.minima.v_p = std::min(res.minima.v_p, st.v_p());
        res.minima.v_min = std::min(res.minima.v_min, st.v_min());
        res.min_det = std::min(res.min_det, st.det());
        res.min_neff = std::min(res.min_neff, st.n_eff());
    };
    note_state(s);
    if (o.neff_stride > 0) res.neff_series.push_back(s.n_eff());

    for (std::size_t n = 0; n < steps; ++n) {
        const auto w = path.next();
        double remaining = dt;
        Vec2 rest(w[0], w[1]);
        double dy_x = 0.0, dy_p = 0.0;
        std::size_t sub = 0;
        while (remaining > 0.0) {
            const auto m = build_matrices(s.mean(0), s.cov, p);
            const double rate = stiffness_rate(m, s.cov);
            double h = remaining;
            Vec2 dw = rest;
            if (rate * remaining > o.substep_tolerance) {
                h = o.substep_tolerance / rate;
                dw(0) = bridge_split(rest(0), remaining, h, substep_noise.normal());
                dw(1) = bridge_split(rest(1), remaining, h, substep_noise.normal());
            }
            const auto r = response(s.mean(0), p);
            dy_x += r.f_R * h + dw(0) * rec_scale.x;
            dy_p += r.f_I * h + dw(1) * rec_scale.p;
            s = step_state(s, m, dw, h, o.scheme, p.omega_m);
            rest -= dw;
            remaining = (h == remaining) ? 0.0 : remaining - h;
            if (++sub > o.max_substeps) {
                res.ok = false;
                res.abort_cause = "substep limit exceeded";
                res.abort_step = n;
                return res;
            }
        }
        res.substeps += sub;
        res.max_substeps_per_step = std::max(res.max_substeps_per_step, sub);
        if (!rec_scale.has_x) dy_x = 0.0;
        if (!rec_scale.has_p) dy_p = 0.0;

        if (!s.mean.allFinite() || !s.cov.allFinite()) {
            res.ok = false;
            res.abort_cause = "non-finite state";
            res.abort_step = n;
            return res;
        }
        if (!s.is_physical(o.physicality_tol) || !(s.v_x() > 0.0) || !(s.v_p() > 0.0)) {
            res.ok = false;
            res.abort_cause = "covariance violates det V >= 1/4 (det V = " + std::to_string(s.det()) + ")";
            res.abort_step = n;
            return res;
        }
        note_state(s);
        const double t = dt * static_cast<double>(n + 1);
        const double mu2vx = p.mu * p.mu * s.v_x();
        ++res.validity.total_steps;
        res.validity.max_mu2_vx = std::max(res.validity.max_mu2_vx, mu2vx);
        if (mu2vx > o.validity_threshold) {
            ++res.validity.violating_steps;
            res.validity.last_violation_time = t;
        }

        currents.push(dy_x, dy_p);
        const bool settled = n + 1 > discard;
        if (settled) {
            res.settled_minima.v_x = std::min(res.settled_minima.v_x, s.v_x());
            res.settled_minima.v_p = std::min(res.settled_minima.v_p, s.v_p());
            res.settled_minima.v_min = std::min(res.settled_minima.v_min, s.v_min());
        }
        if (settled && currents.full()) {
            sum_xl += currents.x_l();
            sum_pl += currents.p_l();
            ++res.current_samples;
            if (o.current_stride > 0 && (n + 1) % o.current_stride == 0) {
                res.x_l_samples.push_back(currents.x_l());
                res.p_l_samples.push_back(currents.p_l());
            }
        }
        if (settled && o.mean_stride > 0 && (n + 1) % o.mean_stride == 0) res.mean_x_series.push_back(s.mean(0));
        if (o.neff_stride > 0 && (n + 1) % o.neff_stride == 0) res.neff_series.push_back(s.n_eff());
        const double applied_delta = p.delta_over_kappa;
        if (lock) p.delta_over_kappa = lock->update(s.mean(0));
        if (o.record_stride > 0 && (n + 1) % o.record_stride == 0) {
            auto& R = res.record;
            const double nan = std::numeric_limits<double>::quiet_NaN();
            R.t.push_back(t);
            R.dy_x.push_back(rec_scale.has_x ? dy_x : nan);
            R.dy_p.push_back(rec_scale.has_p ? dy_p : nan);
            R.x_l.push_back(currents.full() ? currents.x_l() : nan);
            R.p_l.push_back(currents.full() ? currents.p_l() : nan);
            R.mean_x.push_back(s.mean(0));
            R.mean_p.push_back(s.mean(1));
            R.v_x.push_back(s.v_x());
            R.v_xp.push_back(s.v_xp());
            R.v_p.push_back(s.v_p());
            R.n_eff.push_back(s.n_eff());
            R.v_min.push_back(s.v_min());
            R.delta_over_kappa.push_back(applied_delta);
        }
    }
    res.final_state = s;
    if (res.current_samples > 0) {
        res.mean_x_l = sum_xl / static_cast<double>(res.current_samples);
        res.mean_p_l = sum_pl / static_cast<double>(res.current_samples);
    }
    return res;
}

}  // namespace nlom
