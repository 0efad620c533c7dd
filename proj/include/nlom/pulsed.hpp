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

// Exact pulsed general-dyne measurement of the mechanical position.
//
// A pulse with coherent amplitude X_alpha is rotated by phi(x_m) and split
// into an amplitude port (weight sqrt(1 - zeta^2)) and a phase port (weight
// zeta). The outcome (X_l, P_l) filters the position prior; everything here
// integrates that filter over x_m directly, with no Gaussian assumption.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nlom/params.hpp"
#include "nlom/response.hpp"

namespace nlom {

struct GeneralDyneOutcome {
    double x_l = 0.0;
    double p_l = 0.0;
};

/// Outcome-plane amplitudes of the two homodyne ports.
struct DyneAmplitudes {
    double x_port = 0.0;  ///< sqrt(1 - zeta^2) X_alpha
    double p_port = 0.0;  ///< zeta X_alpha
};

inline DyneAmplitudes dyne_amplitudes(const SystemParams& p) {
    return {std::sqrt(std::max(0.0, 1.0 - p.zeta * p.zeta)) * p.X_alpha, p.zeta * p.X_alpha};
}

/// Optical loss before detection. Only the pulse amplitude shrinks; the
/// position prior is untouched.
inline SystemParams apply_loss(SystemParams p, double eta_loss) {
    if (!(eta_loss > 0.0 && eta_loss <= 1.0)) throw std::invalid_argument("apply_loss: eta must lie in (0,1]");
    p.X_alpha *= eta_loss;
    return p;
}

/// log F(x_m; X_l, P_l). Finite for all finite inputs.
inline double log_filter(double x_m, const GeneralDyneOutcome& o, const SystemParams& p) {
    const auto amp = dyne_amplitudes(p);
    const auto r = response(x_m, p);
    const double dx = o.x_l - amp.x_port * r.f_R;
    const double dp = o.p_l - amp.p_port * r.f_I;
    return -std::log(std::numbers::pi) - dx * dx - dp * dp;
}

inline double filter_value(double x_m, const GeneralDyneOutcome& o, const SystemParams& p) {
    return std::exp(log_filter(x_m, o, p));
}

/// Sampled position density on a uniform grid, normalized by the trapezoid rule.
class PositionDistribution {
  public:
    PositionDistribution(double x0, double spacing, std::vector<double> density)
        : x0_(x0), spacing_(spacing), density_(std::move(density)) {
        if (density_.size() < 2) throw std::invalid_argument("PositionDistribution: need at least two samples");
        if (!(spacing_ > 0.0)) throw std::invalid_argument("PositionDistribution: spacing must be positive");
        for (double v : density_) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw std::invalid_argument("PositionDistribution: density must be finite and non-negative");
            }
        }
        const double z = integral();
        if (!(z > 0.0)) throw std::invalid_argument("PositionDistribution: zero total mass");
        for (double& v : density_) v /= z;
    }

    /// Gaussian density over mean +- half_width_sigmas * sigma. An even
    /// point count keeps x = mean off the grid.
    static PositionDistribution gaussian(double variance, std::size_t points = 4001, double half_width_sigmas = 8.0,
                                         double mean = 0.0) {
        if (!(variance > 0.0)) throw std::invalid_argument("PositionDistribution::gaussian: variance must be positive");
        const double sigma = std::sqrt(variance);
        const double lo = mean - half_width_sigmas * sigma;
        const double h = 2.0 * half_width_sigmas * sigma / static_cast<double>(points - 1);
        std::vector<double> d(points);
        for (std::size_t i = 0; i < points; ++i) {
            const double x = lo + h * static_cast<double>(i) - mean;
            d[i] = std::exp(-0.5 * x * x / variance);
        }
        return PositionDistribution(lo, h, std::move(d));
    }

    std::size_t size() const { return density_.size(); }
    double spacing() const { return spacing_; }
    double x(std::size_t i) const { return x0_ + spacing_ * static_cast<double>(i); }
    double front() const { return x0_; }
    double back() const { return x(size() - 1); }
    const std::vector<double>& density() const { return density_; }
    double density(std::size_t i) const { return density_[i]; }

    double integral() const { return trapezoid([](double, double d) { return d; }); }
    double mean() const { return trapezoid([](double x, double d) { return x * d; }); }
    double variance() const {
        const double m = mean();
        return trapezoid([m](double x, double d) { return (x - m) * (x - m) * d; });
    }

    /// Half-width of the grid about the mean, in standard deviations.
    double span_in_sigmas() const {
        const double m = mean();
        return std::min(m - front(), back() - m) / std::sqrt(variance());
    }

    /// Linear interpolation; zero outside the grid.
    double value_at(double xq) const {
        const double s = (xq - x0_) / spacing_;
        if (!(s >= 0.0) || s > static_cast<double>(size() - 1)) return 0.0;
        const std::size_t i = std::min(static_cast<std::size_t>(s), size() - 2);
        const double t = s - static_cast<double>(i);
        return (1.0 - t) * density_[i] + t * density_[i + 1];
    }

    /// Trapezoidal L1 distance. Grids must coincide.
    double l1_distance(const PositionDistribution& other) const {
        if (other.size() != size() || other.x0_ != x0_ || other.spacing_ != spacing_) {
            throw std::invalid_argument("PositionDistribution::l1_distance: grids differ");
        }
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) {
            const double w = (i == 0 || i + 1 == size()) ? 0.5 : 1.0;
            s += w * std::abs(density_[i] - other.density_[i]);
        }
        return s * spacing_;
    }

  private:
    template <class F>
    double trapezoid(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) {
            const double w = (i == 0 || i + 1 == size()) ? 0.5 : 1.0;
            s += w * f(x(i), density_[i]);
        }
        return s * spacing_;
    }

    double x0_;
    double spacing_;
    std::vector<double> density_;
};

/// Heraldings below this are reported as zero-probability outcomes.
inline constexpr double kHeraldingUnderflow = 1e-300;

struct PosteriorResult {
    PositionDistribution distribution;
    /// Outcome probability density P(X_l, P_l).
    double heralding = 0.0;
    bool zero_probability = false;
};

/// Bayesian update P_f = F P_i / heralding, accumulated in log space.
/// For an underflowing heralding the shape is still returned and the flag set.
inline PosteriorResult posterior(const PositionDistribution& prior, const GeneralDyneOutcome& o,
                                 const SystemParams& p) {
    const std::size_t n = prior.size();
    std::vector<double> logw(n);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double d = prior.density(i);
        logw[i] = d > 0.0 ? log_filter(prior.x(i), o, p) + std::log(d) : -std::numeric_limits<double>::infinity();
        peak = std::max(peak, logw[i]);
    }
    if (!std::isfinite(peak)) throw std::invalid_argument("posterior: prior has no mass");
    std::vector<double> w(n);
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::exp(logw[i] - peak);
        mass += ((i == 0 || i + 1 == n) ? 0.5 : 1.0) * w[i];
    }
    mass *= prior.spacing();
    const double log_heralding = peak + std::log(mass);
    const double heralding = std::exp(log_heralding);
    PosteriorResult out{PositionDistribution(prior.front(), prior.spacing(), std::move(w)), heralding, false};
    if (!(heralding >= kHeraldingUnderflow)) {
        out.zero_probability = true;
        out.heralding = 0.0;
    }
    return out;
}

/// Zero-mean-or-shifted Gaussian position prior.
struct GaussianPrior {
    double variance = 0.5;
    double mean = 0.0;
};

/// Grid and refinement settings of the outcome-plane quadrature.
///
/// Prior nodes are uniform in the optical phase, so the outcome image of
/// consecutive nodes is equally spaced along the ellipse regardless of how
/// nonlinear phi(x_m) is. Each node's filter is a unit-width Gaussian in the
/// outcome plane and is scattered onto a tensor grid within kernel_radius.
struct PulsedQuadratureOptions {
    /// Phase step times X_alpha at level 0.
    double phase_step_scale = 0.25;
    std::size_t min_nodes = 801;
    /// Outcome-grid spacing at level 0.
    double outcome_step = 0.5;
    double kernel_radius = 6.5;
    /// Prior support, in standard deviations about the mean.
    double prior_half_width = 8.0;
    /// Each level halves both the phase and outcome steps.
    int max_level = 3;
    double rel_tol = 1e-3;
    /// Evaluate exactly this level, skipping the refinement loop.
    std::optional<int> fixed_level;
};

/// Prior nodes x_j with normalized weights w_j.
struct PriorNodes {
    std::vector<double> x;
    std::vector<double> weight;
    std::vector<double> cos_phi;
    std::vector<double> sin_phi;
    /// Sum of unnormalized weights: the quadrature estimate of prior mass.
    double raw_mass = 0.0;
    double reference = 0.0;
};

namespace detail {

inline double level_scale(int level) { return std::ldexp(1.0, -level); }

inline PriorNodes make_prior_nodes(const std::function<double(double)>& density, double lo, double hi,
                                   double reference, const SystemParams& p, double phase_step,
                                   std::size_t min_nodes) {
    PriorNodes nodes;
    nodes.reference = reference;
    const bool flat = !(p.mu > 0.0);
    std::size_t n;
    double t_lo, t_hi;
    if (flat) {
        t_lo = lo;
        t_hi = hi;
        n = min_nodes;
    } else {
        t_lo = 2.0 * std::atan(response_argument(lo, p.mu, p.delta_over_kappa));
        t_hi = 2.0 * std::atan(response_argument(hi, p.mu, p.delta_over_kappa));
        n = std::max<std::size_t>(min_nodes, static_cast<std::size_t>(std::ceil((t_hi - t_lo) / phase_step)) + 1);
    }
    const double h = (t_hi - t_lo) / static_cast<double>(n - 1);
    nodes.x.reserve(n);
    nodes.weight.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double t = t_lo + h * static_cast<double>(j);
        double x, jac;
        if (flat) {
            x = t;
            jac = 1.0;
        } else {
            const double u = std::tan(0.5 * t);
            x = 2.0 * (u - p.delta_over_kappa) / p.mu;
            jac = (1.0 + u * u) / p.mu;
        }
        const double end = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
        const double w = density(x) * jac * h * end;
        if (!(w > 0.0)) continue;
        const auto r = response(x, p);
        nodes.x.push_back(x);
        nodes.weight.push_back(w);
        nodes.cos_phi.push_back(r.f_R);
        nodes.sin_phi.push_back(r.f_I);
        nodes.raw_mass += w;
    }
    if (nodes.x.empty()) throw std::invalid_argument("pulsed quadrature: prior has no mass on its support");
    for (double& w : nodes.weight) w /= nodes.raw_mass;
    return nodes;
}

/// Outcome-plane tensor grid holding the heralding moments
/// S_k(o) = sum_j w_j F_j(o) (x_j - reference)^k for k = 0, 1, 2.
struct OutcomeMoments {
    double x0 = 0.0;
    double p0 = 0.0;
    double step = 0.0;
    std::size_t nx = 0;
    std::size_t np = 0;
    std::vector<double> s0, s1, s2;

    double cell_area() const { return step * step; }
};

/// Index range [first, last) of grid points within radius of c.
inline std::pair<std::size_t, std::size_t> stencil(double c, double origin, double step, std::size_t count,
                                                   double radius) {
    const double lo = std::ceil((c - radius - origin) / step);
    const double hi = std::floor((c + radius - origin) / step);
    const auto first = static_cast<std::size_t>(std::max(0.0, lo));
    const auto last = static_cast<std::size_t>(std::clamp(hi + 1.0, 0.0, static_cast<double>(count)));
    return {first, std::max(first, last)};
}

inline OutcomeMoments accumulate_moments(const PriorNodes& nodes, const DyneAmplitudes& amp, double step,
                                         double radius, bool with_second_moment = true) {
    OutcomeMoments m;
    m.step = step;
    const double ex = amp.x_port + radius + step;
    const double ep = amp.p_port + radius + step;
    m.nx = static_cast<std::size_t>(std::ceil(2.0 * ex / step)) + 1;
    m.np = static_cast<std::size_t>(std::ceil(2.0 * ep / step)) + 1;
    m.x0 = -0.5 * step * static_cast<double>(m.nx - 1);
    m.p0 = -0.5 * step * static_cast<double>(m.np - 1);
    m.s0.assign(m.nx * m.np, 0.0);
    m.s1.assign(m.nx * m.np, 0.0);
    if (with_second_moment) m.s2.assign(m.nx * m.np, 0.0);
    std::vector<double> kx, kp;
    const double inv_pi = 1.0 / std::numbers::pi;
    for (std::size_t j = 0; j < nodes.x.size(); ++j) {
        const double cx = amp.x_port * nodes.cos_phi[j];
        const double cp = amp.p_port * nodes.sin_phi[j];
        const auto [ix0, ix1] = stencil(cx, m.x0, step, m.nx, radius);
        const auto [ip0, ip1] = stencil(cp, m.p0, step, m.np, radius);
        kx.resize(ix1 - ix0);
        kp.resize(ip1 - ip0);
        for (std::size_t i = ix0; i < ix1; ++i) {
            const double d = m.x0 + step * static_cast<double>(i) - cx;
            kx[i - ix0] = std::exp(-d * d);
        }
        for (std::size_t k = ip0; k < ip1; ++k) {
            const double d = m.p0 + step * static_cast<double>(k) - cp;
            kp[k - ip0] = std::exp(-d * d);
        }
        const double w = nodes.weight[j] * inv_pi;
        const double y = nodes.x[j] - nodes.reference;
        for (std::size_t i = ix0; i < ix1; ++i) {
            const double wx = w * kx[i - ix0];
            double* r0 = &m.s0[i * m.np];
            double* r1 = &m.s1[i * m.np];
            for (std::size_t k = ip0; k < ip1; ++k) {
                const double v = wx * kp[k - ip0];
                r0[k] += v;
                r1[k] += v * y;
            }
            if (with_second_moment) {
                double* r2 = &m.s2[i * m.np];
                for (std::size_t k = ip0; k < ip1; ++k) r2[k] += wx * kp[k - ip0] * y * y;
            }
        }
    }
    return m;
}

struct PriorSupport {
    std::function<double(double)> density;
    double lo;
    double hi;
    double reference;
};

inline PriorSupport support_of(const GaussianPrior& g, double half_width) {
    if (!(g.variance > 0.0)) throw std::invalid_argument("GaussianPrior: variance must be positive");
    const double s = std::sqrt(g.variance);
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * g.variance);
    return {[g, norm](double x) {
                const double d = x - g.mean;
                return norm * std::exp(-0.5 * d * d / g.variance);
            },
            g.mean - half_width * s, g.mean + half_width * s, g.mean};
}

inline PriorSupport support_of(const PositionDistribution& d, double) {
    return {[&d](double x) { return d.value_at(x); }, d.front(), d.back(), d.mean()};
}

}  // namespace detail

/// Outcome-averaged posterior variance and quadrature diagnostics.
struct PulsedAverage {
    double value = 0.0;
    /// Heralding mass captured by the outcome grid; 1 up to quadrature error.
    double outcome_mass = 0.0;
    int level = 0;
    /// Relative change against the previous level (0 when no refinement ran).
    double rel_change = 0.0;
    bool converged = true;
    std::size_t nodes = 0;
};

namespace detail {

template <class Prior>
PulsedAverage averaged_variance_at_level(const Prior& prior, const SystemParams& p,
                                         const PulsedQuadratureOptions& opt, int level) {
    const auto support = support_of(prior, opt.prior_half_width);
    const double scale = level_scale(level);
    const double phase_step = opt.phase_step_scale / std::max(1.0, p.X_alpha) * scale;
    const auto min_nodes = static_cast<std::size_t>(static_cast<double>(opt.min_nodes - 1) / scale) + 1;
    const auto nodes = make_prior_nodes(support.density, support.lo, support.hi, support.reference, p, phase_step,
                                        min_nodes);
    const auto m = accumulate_moments(nodes, dyne_amplitudes(p), opt.outcome_step * scale, opt.kernel_radius);
    double e = 0.0, mass = 0.0;
    for (std::size_t c = 0; c < m.s0.size(); ++c) {
        const double s0 = m.s0[c];
        if (!(s0 > kHeraldingUnderflow)) continue;
        mass += s0;
        e += std::max(0.0, m.s2[c] - m.s1[c] * m.s1[c] / s0);
    }
    PulsedAverage out;
    out.value = e * m.cell_area();
    out.outcome_mass = mass * m.cell_area();
    out.level = level;
    out.nodes = nodes.x.size();
    return out;
}

}  // namespace detail

/// E[sigma_f^2] = integral over outcomes of P(o) Var(x_m | o).
///
/// Refines until two consecutive levels agree to rel_tol; otherwise returns
/// the finest level with converged = false.
template <class Prior>
PulsedAverage averaged_posterior_variance(const Prior& prior, const SystemParams& p,
                                          const PulsedQuadratureOptions& opt = {}) {
    if (opt.fixed_level) return detail::averaged_variance_at_level(prior, p, opt, *opt.fixed_level);
    PulsedAverage prev = detail::averaged_variance_at_level(prior, p, opt, 0);
    for (int level = 1; level <= opt.max_level; ++level) {
        PulsedAverage cur = detail::averaged_variance_at_level(prior, p, opt, level);
        const double denom = std::max(std::abs(cur.value), std::numeric_limits<double>::min());
        cur.rel_change = std::abs(cur.value - prev.value) / denom;
        cur.converged = cur.rel_change <= opt.rel_tol;
        if (cur.converged) return cur;
        prev = cur;
    }
    prev.converged = false;
    return prev;
}

/// Linearized conditional variance sigma^2 / (1 + 2 zeta^2 X_alpha^2 mu^2 sigma^2).
/// X_alpha is taken after loss.
inline double linearized_variance(double sigma2, const SystemParams& p) {
    const double g = p.zeta * p.X_alpha * p.mu;
    return sigma2 / (1.0 + 2.0 * g * g * sigma2);
}

/// Returns params with mu set so that mu * sigma equals mu_sigma.
inline SystemParams at_mu_sigma(SystemParams p, double sigma2, double mu_sigma) {
    p.mu = mu_sigma / std::sqrt(sigma2);
    p.g0_over_kappa.reset();
    return p;
}

/// Prior against measurement-averaged posterior, both in the node measure.
struct PosteriorAverageDistance {
    /// || integral P(o) P_f(.|o) do - P_i ||_1.
    double averaged_posterior_l1 = 0.0;
    /// integral P(o) || P_f(.|o) - P_i ||_1 do: how much a typical outcome moves the prior.
    double expected_l1 = 0.0;
    double outcome_mass = 0.0;
};

template <class Prior>
PosteriorAverageDistance posterior_average_distance(const Prior& prior, const SystemParams& p,
                                                    const PulsedQuadratureOptions& opt = {}) {
    const int level = opt.fixed_level.value_or(0);
    const auto support = detail::support_of(prior, opt.prior_half_width);
    const double scale = detail::level_scale(level);
    const double phase_step = opt.phase_step_scale / std::max(1.0, p.X_alpha) * scale;
    const auto nodes = detail::make_prior_nodes(support.density, support.lo, support.hi, support.reference, p,
                                                phase_step, opt.min_nodes);
    const auto amp = dyne_amplitudes(p);
    const auto m = detail::accumulate_moments(nodes, amp, opt.outcome_step * scale, opt.kernel_radius, false);
    const double area = m.cell_area();
    double mass = 0.0;
    for (double v : m.s0) mass += v;
    mass *= area;

    PosteriorAverageDistance out;
    out.outcome_mass = mass;
    const double inv_pi = 1.0 / std::numbers::pi;
    for (std::size_t j = 0; j < nodes.x.size(); ++j) {
        const double cx = amp.x_port * nodes.cos_phi[j];
        const double cp = amp.p_port * nodes.sin_phi[j];
        const auto [ix0, ix1] = detail::stencil(cx, m.x0, m.step, m.nx, opt.kernel_radius);
        const auto [ip0, ip1] = detail::stencil(cp, m.p0, m.step, m.np, opt.kernel_radius);
        double kernel_mass = 0.0, abs_diff = 0.0, local_mass = 0.0;
        for (std::size_t i = ix0; i < ix1; ++i) {
            const double dx = m.x0 + m.step * static_cast<double>(i) - cx;
            const double ex = std::exp(-dx * dx) * inv_pi;
            for (std::size_t k = ip0; k < ip1; ++k) {
                const double dp = m.p0 + m.step * static_cast<double>(k) - cp;
                const double f = ex * std::exp(-dp * dp);
                const double s0 = m.s0[i * m.np + k];
                kernel_mass += f;
                abs_diff += std::abs(f - s0);
                local_mass += s0;
            }
        }
        const double w = nodes.weight[j];
        out.averaged_posterior_l1 += std::abs(w * kernel_mass * area - w);
        out.expected_l1 += w * (abs_diff * area + (mass - local_mass * area));
    }
    return out;
}

/// Husimi-Q function of the reflected pulse on a tensor beta grid.
struct QSurface {
    std::vector<double> x_beta;
    std::vector<double> p_beta;
    /// Row-major, values[i * p_beta.size() + k] at (x_beta[i], p_beta[k]).
    std::vector<double> values;
    /// Trapezoidal integral over the grid.
    double integral = 0.0;

    double at(std::size_t i, std::size_t k) const { return values[i * p_beta.size() + k]; }
};

/// Uniform grid covering the Q support, [-X_alpha - margin, X_alpha + margin].
inline std::vector<double> default_beta_axis(const SystemParams& p, double step = 0.1, double margin = 6.0) {
    const double e = p.X_alpha + margin;
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * e / step)) + 1;
    std::vector<double> axis(n);
    for (std::size_t i = 0; i < n; ++i) axis[i] = -e + step * static_cast<double>(i);
    return axis;
}

/// Q(X_b, P_b) = (1/2pi) integral P_i(x) exp[-(X_b - X_alpha f_R)^2/2 - (P_b - X_alpha f_I)^2/2] dx.
/// Both axes must be uniformly spaced.
template <class Prior>
QSurface husimi_q(const std::vector<double>& x_beta, const std::vector<double>& p_beta, const Prior& prior,
                  const SystemParams& p, const PulsedQuadratureOptions& opt = {}) {
    if (x_beta.size() < 2 || p_beta.size() < 2) throw std::invalid_argument("husimi_q: beta axes need two points");
    const auto support = detail::support_of(prior, opt.prior_half_width);
    const double phase_step = opt.phase_step_scale / std::max(1.0, p.X_alpha);
    const auto nodes = detail::make_prior_nodes(support.density, support.lo, support.hi, support.reference, p,
                                                phase_step, opt.min_nodes);
    QSurface q;
    q.x_beta = x_beta;
    q.p_beta = p_beta;
    const std::size_t nx = x_beta.size(), np = p_beta.size();
    q.values.assign(nx * np, 0.0);
    const double hx = x_beta[1] - x_beta[0];
    const double hp = p_beta[1] - p_beta[0];
    // Unit-variance kernel: exp(-r^2/2) < 1e-19 beyond r = 9.4.
    const double radius = 9.5;
    std::vector<double> kx, kp;
    for (std::size_t j = 0; j < nodes.x.size(); ++j) {
        const double cx = p.X_alpha * nodes.cos_phi[j];
        const double cp = p.X_alpha * nodes.sin_phi[j];
        const auto [ix0, ix1] = detail::stencil(cx, x_beta[0], hx, nx, radius);
        const auto [ip0, ip1] = detail::stencil(cp, p_beta[0], hp, np, radius);
        kx.resize(ix1 - ix0);
        kp.resize(ip1 - ip0);
        for (std::size_t i = ix0; i < ix1; ++i) {
            const double d = x_beta[i] - cx;
            kx[i - ix0] = std::exp(-0.5 * d * d);
        }
        for (std::size_t k = ip0; k < ip1; ++k) {
            const double d = p_beta[k] - cp;
            kp[k - ip0] = std::exp(-0.5 * d * d);
        }
        const double w = nodes.weight[j] / (2.0 * std::numbers::pi);
        for (std::size_t i = ix0; i < ix1; ++i) {
            double* row = &q.values[i * np];
            const double wx = w * kx[i - ix0];
            for (std::size_t k = ip0; k < ip1; ++k) row[k] += wx * kp[k - ip0];
        }
    }
    double s = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
        const double wi = (i == 0 || i + 1 == nx) ? 0.5 : 1.0;
        for (std::size_t k = 0; k < np; ++k) {
            const double wk = (k == 0 || k + 1 == np) ? 0.5 : 1.0;
            s += wi * wk * q.at(i, k);
        }
    }
    q.integral = s * hx * hp;
    return q;
}

/// Scalar minimizer over [lo, hi]: uniform coarse scan, then golden section on
/// the bracket around the best scan point. Ties resolve toward larger arguments.
struct ScalarMinimum {
    double argument = 0.0;
    double value = 0.0;
    int evaluations = 0;
};

template <class Objective>
ScalarMinimum golden_section_minimize(Objective&& f, double lo, double hi, int coarse_points = 21,
                                      double tol = 1e-3) {
    if (coarse_points < 3) throw std::invalid_argument("golden_section_minimize: need at least 3 scan points");
    int evals = 0;
    auto eval = [&](double t) {
        ++evals;
        return f(t);
    };
    const double step = (hi - lo) / static_cast<double>(coarse_points - 1);
    std::vector<double> scan(static_cast<std::size_t>(coarse_points));
    std::size_t best = 0;
    for (std::size_t i = 0; i < scan.size(); ++i) {
        scan[i] = eval(lo + step * static_cast<double>(i));
        if (scan[i] <= scan[best]) best = i;
    }
    ScalarMinimum result{lo + step * static_cast<double>(best), scan[best], 0};
    double a = lo + step * static_cast<double>(best == 0 ? 0 : best - 1);
    double b = lo + step * static_cast<double>(std::min(best + 1, scan.size() - 1));
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = eval(c), fd = eval(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d);
        }
    }
    const double mid = 0.5 * (a + b);
    const double fm = eval(mid);
    if (fm < result.value || (fm == result.value && mid > result.argument)) {
        result.argument = mid;
        result.value = fm;
    }
    result.evaluations = evals;
    return result;
}

struct ZetaOptimum {
    double zeta = 1.0;
    /// Adaptive-quadrature value at zeta.
    PulsedAverage average;
    int evaluations = 0;
};

struct ZetaSearchOptions {
    int coarse_points = 21;
    double tol = 1e-3;
    /// Quadrature level used for every objective evaluation during the search.
    int search_level = 0;
};

/// zeta in [0, 1] minimizing E[sigma_f^2] at the mu stored in params.
template <class Prior>
ZetaOptimum optimal_zeta(const Prior& prior, const SystemParams& p, const PulsedQuadratureOptions& quad = {},
                         const ZetaSearchOptions& search = {}) {
    PulsedQuadratureOptions fixed = quad;
    fixed.fixed_level = search.search_level;
    auto objective = [&](double zeta) {
        SystemParams q = p;
        q.zeta = zeta;
        return averaged_posterior_variance(prior, q, fixed).value;
    };
    const auto m = golden_section_minimize(objective, 0.0, 1.0, search.coarse_points, search.tol);
    SystemParams q = p;
    q.zeta = m.argument;
    return {m.argument, averaged_posterior_variance(prior, q, quad), m.evaluations};
}

}  // namespace nlom
