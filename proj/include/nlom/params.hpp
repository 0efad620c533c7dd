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
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nlom {

namespace constants {
// CODATA 2018 exact values.
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double k_B = 1.380649e-23;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
}  // namespace constants

/// Dimensionless temperature k_B T / (hbar omega_m). omega_m in rad/s, T in kelvin.
inline double dimensionless_temperature(double temperature, double omega_m) {
    return constants::k_B * temperature / (constants::hbar * omega_m);
}

/// Physical and dimensionless parameters of the optomechanical system and the
/// general-dyne detection chain.
///
/// Rates are angular (rad/s). Quadratures are dimensionless with
/// X = (b + b^dagger)/sqrt(2), so the vacuum variance is 1/2.
struct SystemParams {
    /// g0/kappa, optional. When present it must agree with mu = sqrt(8) g0/kappa.
    std::optional<double> g0_over_kappa;
    double mu = 0.0;
    double delta_over_kappa = 0.0;
    double omega_m = constants::two_pi * 10e6;
    /// Mechanical amplitude decay rate.
    double gamma = 0.0;
    double T_bath = 4.0;
    double T_init = 0.1;
    /// Half the input photon flux (continuous drive), photons/s.
    double k = 0.0;
    /// Coherent amplitude quadrature sqrt(2) alpha of a pulse.
    double X_alpha = 0.0;
    /// Beamsplitter transmission: 1 is phase homodyne, 1/sqrt(2) heterodyne.
    double zeta = std::numbers::sqrt2 / 2.0;
    double eta_X = 1.0;
    double eta_P = 1.0;

    double theta_bath() const { return dimensionless_temperature(T_bath, omega_m); }
    double theta_init() const { return dimensionless_temperature(T_init, omega_m); }

    /// Sets both homodyne efficiencies.
    SystemParams& set_eta(double eta) {
        eta_X = eta;
        eta_P = eta;
        return *this;
    }

    /// Throws std::invalid_argument naming the first violated constraint.
    /// `brownian` requires strictly positive bath temperature when gamma > 0.
    void validate(bool brownian = true) const {
        auto fail = [](const std::string& what) { throw std::invalid_argument("SystemParams: " + what); };
        auto finite = [](double v) { return std::isfinite(v); };
        if (!finite(mu) || !finite(delta_over_kappa) || !finite(omega_m) || !finite(gamma) || !finite(k) ||
            !finite(X_alpha) || !finite(zeta) || !finite(eta_X) || !finite(eta_P)) {
            fail("non-finite value");
        }
        if (zeta < 0.0 || zeta > 1.0) fail("zeta must lie in [0,1]");
        if (!(eta_X > 0.0 && eta_X <= 1.0)) fail("eta_X must lie in (0,1]");
        if (!(eta_P > 0.0 && eta_P <= 1.0)) fail("eta_P must lie in (0,1]");
        if (!(omega_m > 0.0)) fail("omega_m must be positive");
        if (gamma < 0.0) fail("gamma must be non-negative");
        if (k < 0.0) fail("k must be non-negative");
        if (X_alpha < 0.0) fail("X_alpha must be non-negative");
        if (mu < 0.0) fail("mu must be non-negative");
        if (brownian && gamma > 0.0 && !(T_bath > 0.0)) fail("T_bath must be positive when gamma > 0");
        if (g0_over_kappa && !mu_consistent(*g0_over_kappa, mu)) {
            fail("mu inconsistent with sqrt(8) g0/kappa");
        }
    }

    /// |sqrt(8) g0/kappa - mu| within the rounding of a tabulated mu.
    static bool mu_consistent(double g0_over_kappa, double mu, double tol = 1e-3) {
        return std::abs(std::sqrt(8.0) * g0_over_kappa - mu) <= tol;
    }
};

inline double mu_from_coupling(double g0_over_kappa) { return std::sqrt(8.0) * g0_over_kappa; }

/// Sliced-photonic-crystal parameter sets. Shared settings across devices:
/// T = 4 K bath, 100 mK precooling, heterodyne (zeta = 1/sqrt(2)),
/// mu^2 k / omega_m = 2 and X_alpha/sqrt(2) = 10 for the current window.
struct DevicePreset {
    std::string name;
    double omega_m_hz;
    double kappa_hz;
    double g0_hz;
    double gamma_hz;
    double mu;
    double eta;
};

inline const std::vector<DevicePreset>& device_presets() {
    static const std::vector<DevicePreset> presets = {
        {"deviceA", 10e6, 5e9, 90e6, 10.0, 0.050, 0.70},
        {"deviceB", 10e6, 5e9, 90e6, 100.0, 0.050, 0.50},
        {"deviceC", 10e6, 10e9, 35e6, 20.0, 0.010, 0.25},
        {"current", 3.6e6, 10e9, 25e6, 20.0, 0.007, 0.25},
    };
    return presets;
}

inline SystemParams params_from_preset(const DevicePreset& d) {
    SystemParams p;
    p.g0_over_kappa = d.g0_hz / d.kappa_hz;
    p.mu = d.mu;
    p.delta_over_kappa = 0.0;
    p.omega_m = constants::two_pi * d.omega_m_hz;
    p.gamma = constants::two_pi * d.gamma_hz;
    p.T_bath = 4.0;
    p.T_init = 0.1;
    p.k = 2.0 * p.omega_m / (d.mu * d.mu);
    p.X_alpha = 10.0 * std::numbers::sqrt2;
    p.zeta = std::numbers::sqrt2 / 2.0;
    p.set_eta(d.eta);
    return p;
}

/// Throws std::invalid_argument for unknown names.
inline SystemParams device_params(std::string_view name) {
    for (const auto& d : device_presets()) {
        if (d.name == name) return params_from_preset(d);
    }
    std::string known;
    for (const auto& d : device_presets()) known += (known.empty() ? "" : ", ") + std::string(d.name);
    throw std::invalid_argument("unknown device preset '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace nlom
