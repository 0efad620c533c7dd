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

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nlom/parallel.hpp"
#include "nlom/pulsed.hpp"
#include "nlom/pulsed_gaussian.hpp"

namespace nlom {

inline std::vector<double> log_space(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0 && hi > lo) || n < 2) throw std::invalid_argument("log_space: need 0 < lo < hi and n >= 2");
    std::vector<double> v(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    v.front() = lo;
    v.back() = hi;
    return v;
}

/// mu sigma reached when g0/kappa hits the given ratio at prior variance sigma2.
inline double mu_sigma_at_coupling(double g0_over_kappa, double sigma2) {
    return mu_from_coupling(g0_over_kappa) * std::sqrt(sigma2);
}

struct PulsedSweepSettings {
    double sigma2 = 500.0;
    double X_alpha = 200.0;
    double eta_loss = 1.0;
    double mu_sigma_min = 0.01;
    double mu_sigma_max = mu_sigma_at_coupling(0.16, 500.0);
    std::size_t points = 40;
    bool gaussian_path = true;
    bool phase_homodyne = true;
    PulsedQuadratureOptions quadrature;
    GaussianQuadratureOptions gaussian_quadrature;
    ZetaSearchOptions search;
};

struct PulsedSweepRow {
    double mu_sigma = 0.0;
    double mu = 0.0;
    double zeta_opt = 1.0;
    PulsedAverage optimal;
    /// zeta = 1.
    PulsedAverage phase_homodyne;
    /// Linearized result at zeta = 1.
    double linearized = 0.0;
    double zeta_opt_gaussian = 1.0;
    GaussianAverage gaussian;
};

inline std::vector<PulsedSweepRow> pulsed_sweep(const PulsedSweepSettings& s, unsigned threads = 0) {
    SystemParams base;
    base.X_alpha = s.X_alpha;
    base = apply_loss(base, s.eta_loss);
    const auto grid = log_space(s.mu_sigma_min, s.mu_sigma_max, s.points);
    std::vector<PulsedSweepRow> rows(grid.size());
    const GaussianPrior prior{s.sigma2};
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        PulsedSweepRow r;
        r.mu_sigma = grid[i];
        SystemParams p = at_mu_sigma(base, s.sigma2, grid[i]);
        r.mu = p.mu;
        const auto opt = optimal_zeta(prior, p, s.quadrature, s.search);
        r.zeta_opt = opt.zeta;
        r.optimal = opt.average;
        SystemParams ph = p;
        ph.zeta = 1.0;
        if (s.phase_homodyne) r.phase_homodyne = averaged_posterior_variance(prior, ph, s.quadrature);
        r.linearized = linearized_variance(s.sigma2, ph);
        if (s.gaussian_path) {
            const auto g = optimal_zeta_gaussian(s.sigma2, p, s.gaussian_quadrature, s.search);
            r.zeta_opt_gaussian = g.zeta;
            r.gaussian = g.average;
        }
        rows[i] = r;
    });
    return rows;
}

}  // namespace nlom
