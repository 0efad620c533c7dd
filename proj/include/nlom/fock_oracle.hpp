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

// Brute-force check of the Gaussian regime: the full conditional master
// equation for the mechanical mode in a truncated number basis, driven by the
// same Wiener increments as the Gaussian propagator.
//
// Units: X = (b + b^dag)/sqrt(2), P = i(b^dag - b)/sqrt(2), [X, P] = i away
// from the truncation edge.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlom/continuous.hpp"
#include "nlom/gaussian_state.hpp"
#include "nlom/params.hpp"
#include "nlom/response.hpp"
#include "nlom/rng.hpp"

namespace nlom {

using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

inline void require_dim(std::size_t dim) {
    if (dim < 2) throw std::invalid_argument("Fock dimension must be at least 2");
}

/// Lowering operator, <n-1|b|n> = sqrt(n).
inline CMat annihilation_operator(std::size_t dim) {
    require_dim(dim);
    CMat b = CMat::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t n = 1; n < dim; ++n) b(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(n)) = std::sqrt(double(n));
    return b;
}

/// Tridiagonal, <n|X|n+1> = sqrt((n+1)/2).
inline CMat position_operator(std::size_t dim) {
    const CMat b = annihilation_operator(dim);
    return (b + b.adjoint()) / std::sqrt(2.0);
}

inline CMat momentum_operator(std::size_t dim) {
    const CMat b = annihilation_operator(dim);
    return cplx(0.0, 1.0) * (b.adjoint() - b) / std::sqrt(2.0);
}

inline CMat number_operator(std::size_t dim) {
    require_dim(dim);
    CMat n = CMat::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) n(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = double(i);
    return n;
}

/// U fn(Lambda) U^dag for Hermitian `op`.
inline CMat operator_function(const CMat& op, const std::function<cplx(double)>& fn) {
    if (!op.isApprox(op.adjoint(), 1e-12)) throw std::invalid_argument("operator_function: operator is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMat> es(op);
    if (es.info() != Eigen::Success) throw std::runtime_error("operator_function: eigendecomposition failed");
    const auto& lam = es.eigenvalues();
    Eigen::VectorXcd d(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) d(i) = fn(lam(i));
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

/// Density matrix in the number basis.
struct FockState {
    CMat rho;

    std::size_t dim() const { return static_cast<std::size_t>(rho.rows()); }
    cplx trace() const { return rho.trace(); }
    double expect(const CMat& op) const { return (op * rho).trace().real(); }
    double boundary_population() const { return rho(rho.rows() - 1, rho.cols() - 1).real(); }
    double purity() const { return (rho * rho).trace().real(); }
    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<CMat> es(rho, Eigen::EigenvaluesOnly);
        return es.eigenvalues()(0);
    }
};

/// Thermal state with occupation nbar, displaced to (x0, p0). Built in a
/// padded basis and truncated, so edge effects of the displacement stay small.
inline FockState displaced_thermal_state(std::size_t dim, double nbar, double x0, double p0, std::size_t padding = 40) {
    require_dim(dim);
    if (nbar < 0.0) throw std::invalid_argument("displaced_thermal_state: nbar must be non-negative");
    const std::size_t big = dim + padding;
    const auto nb = static_cast<Eigen::Index>(big);
    CMat th = CMat::Zero(nb, nb);
    const double ratio = nbar / (nbar + 1.0);
    double w = 1.0 / (nbar + 1.0);
    for (Eigen::Index n = 0; n < nb; ++n) {
        th(n, n) = w;
        w *= ratio;
    }
    // D(alpha) = exp(alpha b^dag - conj(alpha) b) = exp(-i G) with Hermitian G.
    const cplx alpha = cplx(x0, p0) / std::sqrt(2.0);
    const CMat b = annihilation_operator(big);
    const CMat g = cplx(0.0, 1.0) * (alpha * b.adjoint() - std::conj(alpha) * b);
    const CMat disp = operator_function(0.5 * (g + g.adjoint()), [](double v) { return std::exp(cplx(0.0, -v)); });
    const CMat full = disp * th * disp.adjoint();
    const auto nd = static_cast<Eigen::Index>(dim);
    FockState s{full.topLeftCorner(nd, nd)};
    s.rho = 0.5 * (s.rho + s.rho.adjoint()).eval();
    s.rho /= s.rho.trace();
    return s;
}

struct FockMoments {
    double mean_x = 0.0, mean_p = 0.0;
    double v_x = 0.0, v_xp = 0.0, v_p = 0.0;
};

/// Operators and channel couplings of the conditional master equation.
class FockModel {
  public:
    FockModel(const SystemParams& p, std::size_t dim) : p_(p), dim_(dim) {
        require_dim(dim);
        x_ = position_operator(dim);
        p_op_ = momentum_operator(dim);
        xx_ = x_ * x_;
        pp_ = p_op_ * p_op_;
        sym_xp_ = 0.5 * (x_ * p_op_ + p_op_ * x_);
        const double mu = p.mu, dk = p.delta_over_kappa;
        // f is unimodular, so f(X) is unitary and D[c] rho = 2k (f rho f^dag - rho).
        f_ = operator_function(x_, [mu, dk](double x) { return response_from_u(response_argument(x, mu, dk), mu).f(); });
        c_scale_ = std::sqrt(2.0 * p.k);
        if (p.gamma > 0.0) {
            const double theta = p.theta_bath();
            if (!(theta > 0.0)) throw std::invalid_argument("FockModel: bath temperature must be positive when gamma > 0");
            l_ = std::sqrt(4.0 * p.gamma * theta) * x_ + cplx(0.0, std::sqrt(p.gamma / (4.0 * theta))) * p_op_;
            ldl_ = l_.adjoint() * l_;
            has_bath_ = true;
        }
        phase_.resize(static_cast<Eigen::Index>(dim));
    }

    const SystemParams& params() const { return p_; }
    std::size_t dim() const { return dim_; }
    const CMat& position() const { return x_; }
    const CMat& momentum() const { return p_op_; }
    /// Optical output operator c = sqrt(2k) f(X).
    CMat output_operator() const { return c_scale_ * f_; }
    const CMat& bath_operator() const { return l_; }

    FockMoments moments(const FockState& s) const {
        FockMoments m;
        m.mean_x = s.expect(x_);
        m.mean_p = s.expect(p_op_);
        m.v_x = s.expect(xx_) - m.mean_x * m.mean_x;
        m.v_p = s.expect(pp_) - m.mean_p * m.mean_p;
        m.v_xp = s.expect(sym_xp_) - m.mean_x * m.mean_p;
        return m;
    }

    /// H[a] rho = a rho + rho a^dag - tr(a rho + rho a^dag) rho, from a rho.
    static CMat innovation(const CMat& a_rho, const CMat& rho) {
        const CMat h = a_rho + a_rho.adjoint();
        return h - h.trace() * rho;
    }

    /// Deterministic and stochastic increments of one Euler step, excluding
    /// the free Hamiltonian. Returned separately so tests can check each part.
    struct Increments {
        CMat dissipative;
        CMat amplitude_innovation;  ///< H[c] rho
        CMat phase_innovation;      ///< H[-i c] rho
    };

    Increments increments(const CMat& rho) const {
        Increments inc;
        const CMat f_rho = f_ * rho;
        inc.dissipative = 2.0 * p_.k * (f_rho * f_.adjoint() - rho);
        if (has_bath_) {
            const CMat ldl_rho = ldl_ * rho;
            inc.dissipative += l_ * rho * l_.adjoint() - 0.5 * (ldl_rho + ldl_rho.adjoint());
        }
        const CMat c_rho = c_scale_ * f_rho;
        inc.amplitude_innovation = innovation(c_rho, rho);
        inc.phase_innovation = innovation(cplx(0.0, -1.0) * c_rho, rho);
        return inc;
    }

    /// Exact free evolution exp(-i omega_m n dt).
    void rotate(CMat& rho, double dt) const {
        for (Eigen::Index n = 0; n < phase_.size(); ++n) phase_(n) = std::exp(cplx(0.0, -p_.omega_m * dt * double(n)));
        rho = (phase_.asDiagonal() * rho * phase_.conjugate().asDiagonal()).eval();
    }

    /// -i [omega_m b^dag b, rho], for the literal Euler scheme.
    CMat free_generator(const CMat& rho) const {
        CMat out(rho.rows(), rho.cols());
        for (Eigen::Index m = 0; m < rho.rows(); ++m) {
            for (Eigen::Index n = 0; n < rho.cols(); ++n) out(m, n) = cplx(0.0, -p_.omega_m * double(m - n)) * rho(m, n);
        }
        return out;
    }

  private:
    SystemParams p_;
    std::size_t dim_;
    CMat x_, p_op_, xx_, pp_, sym_xp_, f_, l_, ldl_;
    double c_scale_ = 0.0;
    bool has_bath_ = false;
    mutable Eigen::VectorXcd phase_;
};

class TruncationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct SmeStepInfo {
    /// |tr(rho') - 1| before renormalization.
    double trace_deviation = 0.0;
};

/// One step of the conditional master equation. dW = (dW_X, dW_P) are the
/// same innovations that drive em_step. Trace is renormalized and
/// Hermiticity re-imposed after the update.
inline FockState sme_step(const FockState& s, const FockModel& model, const Vec2& dW, double dt,
                          StepScheme scheme = StepScheme::rotating_euler, SmeStepInfo* info = nullptr,
                          double boundary_limit = 1e-4) {
    const auto& p = model.params();
    const auto inc = model.increments(s.rho);
    CMat next = s.rho + inc.dissipative * dt + std::sqrt((1.0 - p.zeta * p.zeta) * p.eta_X) * dW(0) * inc.amplitude_innovation +
                p.zeta * std::sqrt(p.eta_P) * dW(1) * inc.phase_innovation;
    if (scheme == StepScheme::euler) {
        next += model.free_generator(s.rho) * dt;
    } else {
        model.rotate(next, dt);
    }
    const cplx tr = next.trace();
    if (info) info->trace_deviation = std::abs(tr - 1.0);
    FockState out{0.5 * (next + next.adjoint())};
    out.rho /= out.rho.trace().real();
    if (!out.rho.allFinite()) throw std::runtime_error("sme_step: non-finite density matrix");
    if (out.boundary_population() > boundary_limit) {
        throw TruncationError("sme_step: truncation-edge population " + std::to_string(out.boundary_population()) +
                              " exceeds limit; increase dim");
    }
    return out;
}

struct OracleOptions {
    std::size_t dim = 60;
    /// Steps per mechanical period.
    int dt_divisor = 5000;
    /// Brownian-bridge refinement of the same noise path: dt halves per level.
    /// Pathwise Euler error is first order in dt; level 2 keeps it near 3%.
    int refine_level = 2;
    double periods = 3.0;
    std::uint64_t seed = 1;
    std::uint64_t index = 0;
    /// Initial thermal occupation and displacement of both models.
    double nbar = 2.0;
    double x0 = 0.0;
    double p0 = 0.0;
    StepScheme scheme = StepScheme::rotating_euler;
    /// Comparison samples per period.
    int samples_per_period = 50;
    double rel_tol = 0.05;
    double abs_var_tol = 0.02;
};

struct OracleSample {
    double t = 0.0;
    FockMoments gaussian;
    FockMoments fock;
    double boundary_population = 0.0;
    double min_eigenvalue = 0.0;
};

struct OracleComparison {
    std::vector<OracleSample> samples;
    /// max |<r>_G - <r>_F| / |<r>_F| over samples (phase-space vector norm).
    double max_mean_rel_error = 0.0;
    /// max over V_X, V_P of |V_G - V_F| / V_F, and the absolute version.
    double max_var_rel_error = 0.0;
    double max_var_abs_error = 0.0;
    double max_trace_deviation = 0.0;
    double max_boundary_population = 0.0;
    double min_eigenvalue = 0.0;
    /// max mu sqrt(V_X) along the Gaussian path.
    double max_mu_sqrt_vx = 0.0;
    bool means_agree = false;
    bool variances_agree = false;
    bool agree() const { return means_agree && variances_agree; }
};

/// Integrates both models from the same displaced thermal state with shared
/// noise and no lock; the drive detuning stays at params.delta_over_kappa.
inline OracleComparison compare_with_oracle(const SystemParams& params, const OracleOptions& o) {
    params.validate(params.gamma > 0.0);
    const double period = 2.0 * std::numbers::pi / params.omega_m;
    WienerPath path(o.seed, o.index, period / static_cast<double>(o.dt_divisor), o.refine_level);
    const double dt = path.dt();
    const std::size_t per_period = static_cast<std::size_t>(o.dt_divisor) << o.refine_level;
    const auto steps = static_cast<std::size_t>(std::llround(o.periods * static_cast<double>(per_period)));
    const std::size_t sample_every =
        std::max<std::size_t>(1, per_period / static_cast<std::size_t>(std::max(1, o.samples_per_period)));
    const FockModel model(params, o.dim);
    FockState rho = displaced_thermal_state(o.dim, o.nbar, o.x0, o.p0);
    GaussianState g;
    g.mean = Vec2(o.x0, o.p0);
    g.cov = Mat2::Identity() * (o.nbar + 0.5);

    OracleComparison out;
    out.min_eigenvalue = std::numeric_limits<double>::infinity();
    auto record = [&](double t) {
        OracleSample s;
        s.t = t;
        s.gaussian = {g.mean(0), g.mean(1), g.v_x(), g.v_xp(), g.v_p()};
        s.fock = model.moments(rho);
        s.boundary_population = rho.boundary_population();
        s.min_eigenvalue = rho.min_eigenvalue();
        const double dm = std::hypot(s.gaussian.mean_x - s.fock.mean_x, s.gaussian.mean_p - s.fock.mean_p);
        const double norm = std::hypot(s.fock.mean_x, s.fock.mean_p);
        if (norm > 0.0) out.max_mean_rel_error = std::max(out.max_mean_rel_error, dm / norm);
        for (const auto [vg, vf] : {std::pair{s.gaussian.v_x, s.fock.v_x}, std::pair{s.gaussian.v_p, s.fock.v_p}}) {
            out.max_var_rel_error = std::max(out.max_var_rel_error, std::abs(vg - vf) / vf);
            out.max_var_abs_error = std::max(out.max_var_abs_error, std::abs(vg - vf));
        }
        out.max_boundary_population = std::max(out.max_boundary_population, s.boundary_population);
        out.min_eigenvalue = std::min(out.min_eigenvalue, s.min_eigenvalue);
        out.samples.push_back(s);
    };
    record(0.0);
    SmeStepInfo info;
    for (std::size_t n = 0; n < steps; ++n) {
        const auto w = path.next();
        const Vec2 dw(w[0], w[1]);
        const auto m = build_matrices(g.mean(0), g.cov, params);
        g = step_state(g, m, dw, dt, o.scheme, params.omega_m);
        rho = sme_step(rho, model, dw, dt, o.scheme, &info);
        out.max_trace_deviation = std::max(out.max_trace_deviation, info.trace_deviation);
        out.max_mu_sqrt_vx = std::max(out.max_mu_sqrt_vx, params.mu * std::sqrt(g.v_x()));
        if ((n + 1) % sample_every == 0 || n + 1 == steps) record(dt * static_cast<double>(n + 1));
    }
    out.means_agree = out.max_mean_rel_error <= o.rel_tol;
    out.variances_agree = out.max_var_rel_error <= o.rel_tol || out.max_var_abs_error <= o.abs_var_tol;
    return out;
}

/// Oracle parameters: weak coupling (mu sqrt(V) <= 0.05 at nbar <= 2), cold
/// bath, resonant drive, heterodyne detection.
inline SystemParams oracle_params() {
    SystemParams p;
    p.omega_m = constants::two_pi * 10e6;
    p.mu = 0.02;
    p.k = 100.0 * p.omega_m;
    p.delta_over_kappa = 0.0;
    p.gamma = 1e-3 * p.omega_m;
    // Theta = 1 / ln(1.5) gives nbar = 2.
    p.T_bath = constants::hbar * p.omega_m / (constants::k_B * std::log(1.5));
    p.T_init = p.T_bath;
    p.zeta = 1.0 / std::sqrt(2.0);
    p.set_eta(1.0);
    return p;
}

/// Static displacement 2 mu k / omega_m of the resonant drive; starting there
/// keeps the Fock populations well inside the truncation.
inline double oracle_equilibrium_x(const SystemParams& p) {
    const double x = 2.0 * p.mu * p.k / p.omega_m;
    // Fixed point of omega x = 2 mu k / (1 + (mu x / 2)^2); a few iterations suffice.
    double y = x;
    for (int i = 0; i < 50; ++i) {
        const double u = response_argument(y, p.mu, p.delta_over_kappa);
        y = x / (1.0 + u * u);
    }
    return y;
}

}  // namespace nlom
