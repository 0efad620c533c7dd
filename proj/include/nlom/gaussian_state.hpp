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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "nlom/params.hpp"

namespace nlom {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Raised when a covariance matrix violates det V >= 1/4 beyond tolerance.
class PhysicalityError : public std::runtime_error {
  public:
    explicit PhysicalityError(const std::string& what, double deficit)
        : std::runtime_error(what), deficit_(deficit) {}
    double deficit() const { return deficit_; }

  private:
    double deficit_;
};

/// Closed-form eigenvalues of a symmetric 2x2 matrix, ascending.
inline Vec2 symmetric_eigenvalues(const Mat2& m) {
    const double half_trace = 0.5 * (m(0, 0) + m(1, 1));
    const double half_diff = 0.5 * (m(0, 0) - m(1, 1));
    const double off = 0.5 * (m(0, 1) + m(1, 0));
    const double r = std::hypot(half_diff, off);
    return {half_trace - r, half_trace + r};
}

/// First moments (<X_m>, <P_m>) and covariance V_ij = <{r_i, r_j}>/2 - <r_i><r_j>.
struct GaussianState {
    Vec2 mean = Vec2::Zero();
    Mat2 cov = Mat2::Identity() * 0.5;

    double v_x() const { return cov(0, 0); }
    double v_p() const { return cov(1, 1); }
    double v_xp() const { return cov(0, 1); }
    double det() const { return cov.determinant(); }
    /// Smallest eigenvalue of V: the generalized squeezing variance.
    double v_min() const { return symmetric_eigenvalues(cov)(0); }
    /// sqrt(det V) - 1/2.
    double n_eff() const { return std::sqrt(std::max(det(), 0.0)) - 0.5; }
    double purity() const { return 0.5 / std::sqrt(det()); }

    /// Amount by which det V falls below 1/4, or zero.
    double physicality_deficit() const { return std::max(0.0, 0.25 - det()); }

    bool is_physical(double tol) const { return det() >= 0.25 - tol; }

    /// Throws PhysicalityError when det V < 1/4 - tol with tol = rel_tol * max(1, tr V),
    /// or when a variance is non-positive. Never modifies the state.
    void require_physical(double rel_tol = 1e-6) const {
        if (!(cov(0, 0) > 0.0) || !(cov(1, 1) > 0.0)) {
            throw PhysicalityError("covariance has non-positive variance", physicality_deficit());
        }
        const double tol = rel_tol * std::max(1.0, cov.trace());
        if (!is_physical(tol)) {
            throw PhysicalityError("covariance violates det V >= 1/4: det V = " + std::to_string(det()),
                                   physicality_deficit());
        }
    }
};

/// Bose-Einstein occupation 1/(exp(1/theta) - 1). Throws for theta <= 0.
inline double thermal_occupation(double theta) {
    if (!(theta > 0.0)) throw std::invalid_argument("thermal_occupation: temperature must be positive");
    return 1.0 / std::expm1(1.0 / theta);
}

/// Zero-mean thermal state with V_X = V_P = nbar + 1/2.
inline GaussianState thermal_state(double theta) {
    const double v = thermal_occupation(theta) + 0.5;
    GaussianState s;
    s.cov = Mat2::Identity() * v;
    return s;
}

inline GaussianState thermal_state(double omega_m, double temperature) {
    return thermal_state(dimensionless_temperature(temperature, omega_m));
}

}  // namespace nlom
