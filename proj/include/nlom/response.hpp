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
#include <complex>

#include "nlom/params.hpp"

namespace nlom {

/// Cavity response f = (1 + i u)/(1 - i u) with u = mu x/2 + Delta/kappa.
struct ResponseValue {
    double f_R = 1.0;
    double f_I = 0.0;
    /// arg f, in (-pi, pi).
    double phi = 0.0;
    /// d phi / d x_m: momentum kick per photon.
    double kick = 0.0;

    std::complex<double> f() const { return {f_R, f_I}; }
};

/// Response as a function of the detuning-shifted variable u. `mu` only enters the kick.
inline ResponseValue response_from_u(double u, double mu) {
    const double den = 1.0 + u * u;
    ResponseValue r;
    r.f_R = (1.0 - u * u) / den;
    r.f_I = 2.0 * u / den;
    r.phi = 2.0 * std::atan(u);
    r.kick = mu / den;
    return r;
}

inline double response_argument(double x_m, double mu, double delta_over_kappa) {
    return 0.5 * mu * x_m + delta_over_kappa;
}

inline ResponseValue response(double x_m, const SystemParams& params) {
    return response_from_u(response_argument(x_m, params.mu, params.delta_over_kappa), params.mu);
}

}  // namespace nlom
