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

// Second-order expansion of the pulsed filter about its maximum.
//
// Outcomes are parametrized by z (the value of mu x_m where the filter peaks)
// and delta (signed distance from the outcome ellipse along its normal). Only
// the resonant drive is supported: the coordinates assume Delta = 0.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "nlom/pulsed.hpp"

namespace nlom {

struct GeneralDyneCoords {
    double z = 0.0;
    double delta = 0.0;
};

class DegenerateCoordinateError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

namespace detail {

struct EllipseFrame {
    double x_port, p_port;
    double f_R, f_I;
    double s2, s;  ///< s^2 = x_port^2 f_I^2 + p_port^2 f_R^2
    double conformal;  ///< 4 / (4 + z^2)
};

inline EllipseFrame ellipse_frame(double z, const SystemParams& p) {
    if (p.delta_over_kappa != 0.0) {
        throw std::invalid_argument("pulsed Gaussian approximation assumes a resonant drive (delta_over_kappa = 0)");
    }
    const auto amp = dyne_amplitudes(p);
    const auto r = response_from_u(0.5 * z, p.mu);
    EllipseFrame e{amp.x_port, amp.p_port, r.f_R, r.f_I, 0.0, 0.0, 4.0 / (4.0 + z * z)};
    e.s2 = amp.x_port * amp.x_port * r.f_I * r.f_I + amp.p_port * amp.p_port * r.f_R * r.f_R;
    e.s = std::sqrt(e.s2);
    return e;
}

inline void require_nondegenerate(const EllipseFrame& e) {
    if (!(e.s > 0.0)) throw DegenerateCoordinateError("general-dyne coordinates degenerate: ellipse normal undefined");
}

}  // namespace detail

/// Smallest admissible delta: the normal lines must not pass the ellipse centre.
/// A single-port setting collapses the ellipse to a segment whose two faces
/// coincide, so both signs of delta are needed to cover the outcome plane.
inline double min_delta(const SystemParams& p) {
    const auto amp = dyne_amplitudes(p);
    const double a = std::min(amp.x_port, amp.p_port);
    return a > 0.0 ? -a : -std::numeric_limits<double>::infinity();
}

inline GeneralDyneOutcome coords_to_outcome(const GeneralDyneCoords& c, const SystemParams& p) {
    const auto e = detail::ellipse_frame(c.z, p);
    detail::require_nondegenerate(e);
    return {e.x_port * e.f_R + c.delta * e.p_port * e.f_R / e.s, e.p_port * e.f_I + c.delta * e.x_port * e.f_I / e.s};
}

/// d(X_l, P_l) / d(z, delta).
inline double jacobian_det(const GeneralDyneCoords& c, const SystemParams& p) {
    const auto e = detail::ellipse_frame(c.z, p);
    detail::require_nondegenerate(e);
    return e.conformal * (e.s + c.delta * e.x_port * e.p_port / e.s2);
}

struct GaussianPosteriorStats {
    double sigma_f2 = 0.0;
    double x_bar = 0.0;
    /// Outcome density P(X_l, P_l) at these coordinates.
    double heralding_density = 0.0;
    /// Filter curvature in z; negative means no local maximum.
    double curvature = 0.0;
    bool valid = true;
};

/// Posterior of a zero-mean Gaussian prior under the expanded filter.
/// Invalid (curvature < 0) points carry no variance or density.
inline GaussianPosteriorStats gaussian_posterior_stats(const GeneralDyneCoords& c, double prior_sigma2,
                                                       const SystemParams& p) {
    const auto e = detail::ellipse_frame(c.z, p);
    detail::require_nondegenerate(e);
    GaussianPosteriorStats st;
    st.curvature = e.conformal * e.conformal * (e.s2 + c.delta * e.x_port * e.p_port / e.s);
    if (st.curvature < 0.0) {
        st.valid = false;
        return st;
    }
    const double gain = 2.0 * p.mu * p.mu * prior_sigma2 * st.curvature;
    st.sigma_f2 = prior_sigma2 / (1.0 + gain);
    st.x_bar = p.mu > 0.0 ? (c.z / p.mu) * gain / (1.0 + gain) : 0.0;
    st.heralding_density = std::exp(-c.delta * c.delta - st.curvature * c.z * c.z / (1.0 + gain)) /
                           (std::numbers::pi * std::sqrt(1.0 + gain));
    return st;
}

struct GaussianQuadratureOptions {
    std::size_t z_points = 801;
    std::size_t delta_points = 241;
    double delta_max = 6.0;
    /// |z| <= max(z_sigmas * mu sigma, z_floor_scale / X_alpha).
    double z_sigmas = 10.0;
    double z_floor_scale = 6.0;
};

struct GaussianAverage {
    double value = 0.0;
    /// Integral of P |det J| over included points.
    double included_mass = 0.0;
    /// 1 - included_mass, floored at zero: mass lost to curvature < 0 and to the domain cut.
    double excluded_mass = 0.0;
};

/// E[sigma_f^2] over the (z, delta) plane, normalized by the included mass.
inline GaussianAverage gaussian_averaged_variance(double prior_sigma2, const SystemParams& p,
                                                  const GaussianQuadratureOptions& opt = {}) {
    const double mu_sigma = p.mu * std::sqrt(prior_sigma2);
    const double z_max = std::max(opt.z_sigmas * mu_sigma, opt.z_floor_scale / std::max(1.0, p.X_alpha));
    const double d_lo = std::max(min_delta(p), -opt.delta_max);
    const double d_hi = opt.delta_max;
    const double hz = 2.0 * z_max / static_cast<double>(opt.z_points - 1);
    const double hd = (d_hi - d_lo) / static_cast<double>(opt.delta_points - 1);
    double mass = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < opt.z_points; ++i) {
        const double z = -z_max + hz * static_cast<double>(i);
        const double wz = (i == 0 || i + 1 == opt.z_points) ? 0.5 : 1.0;
        const auto e = detail::ellipse_frame(z, p);
        if (!(e.s > 0.0)) continue;  // measure-zero degenerate line
        for (std::size_t k = 0; k < opt.delta_points; ++k) {
            const double d = d_lo + hd * static_cast<double>(k);
            const double wd = (k == 0 || k + 1 == opt.delta_points) ? 0.5 : 1.0;
            const auto st = gaussian_posterior_stats({z, d}, prior_sigma2, p);
            if (!st.valid) continue;
            const double jac = e.conformal * (e.s + d * e.x_port * e.p_port / e.s2);
            const double w = wz * wd * st.heralding_density * std::abs(jac);
            mass += w;
            acc += w * st.sigma_f2;
        }
    }
    GaussianAverage out;
    out.included_mass = mass * hz * hd;
    out.excluded_mass = std::max(0.0, 1.0 - out.included_mass);
    out.value = mass > 0.0 ? acc / mass : prior_sigma2;
    return out;
}

struct GaussianZetaOptimum {
    double zeta = 1.0;
    GaussianAverage average;
    int evaluations = 0;
};

inline GaussianZetaOptimum optimal_zeta_gaussian(double prior_sigma2, const SystemParams& p,
                                                 const GaussianQuadratureOptions& quad = {},
                                                 const ZetaSearchOptions& search = {}) {
    auto objective = [&](double zeta) {
        SystemParams q = p;
        q.zeta = zeta;
        return gaussian_averaged_variance(prior_sigma2, q, quad).value;
    };
    const auto m = golden_section_minimize(objective, 0.0, 1.0, search.coarse_points, search.tol);
    SystemParams q = p;
    q.zeta = m.argument;
    return {m.argument, gaussian_averaged_variance(prior_sigma2, q, quad), m.evaluations};
}

}  // namespace nlom
