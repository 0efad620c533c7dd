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

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace nlom {

/// One biquad in transposed direct form II; a0 is normalized to 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
    double z1 = 0.0, z2 = 0.0;

    double step(double x) {
        const double y = b0 * x + z1;
        z1 = b1 * x - a1 * y + z2;
        z2 = b2 * x - a2 * y;
        return y;
    }

    std::complex<double> response(double omega_dt) const {
        const std::complex<double> zi = std::polar(1.0, -omega_dt);
        return (b0 + b1 * zi + b2 * zi * zi) / (1.0 + a1 * zi + a2 * zi * zi);
    }

    void reset() { z1 = z2 = 0.0; }
};

/// Causal third-order Butterworth low-pass: one second-order section and one
/// first-order section, bilinear transform prewarped at the cutoff.
class Butterworth3 {
  public:
    /// cutoff in rad/s, sample_dt in s; requires 0 < cutoff * sample_dt < pi.
    Butterworth3(double cutoff, double sample_dt) : cutoff_(cutoff), dt_(sample_dt) {
        if (!(cutoff > 0.0 && sample_dt > 0.0 && cutoff * sample_dt < std::numbers::pi)) {
            throw std::invalid_argument("Butterworth3: need 0 < cutoff * dt < pi");
        }
        const double k = std::tan(0.5 * cutoff * sample_dt);
        const double k2 = k * k;
        const double n2 = 1.0 + k + k2;
        pair_ = {k2 / n2, 2.0 * k2 / n2, k2 / n2, 2.0 * (k2 - 1.0) / n2, (1.0 - k + k2) / n2};
        single_ = {k / (1.0 + k), k / (1.0 + k), 0.0, (k - 1.0) / (k + 1.0), 0.0};
    }

    double step(double x) { return single_.step(pair_.step(x)); }

    void reset() {
        pair_.reset();
        single_.reset();
    }

    double cutoff() const { return cutoff_; }
    double sample_dt() const { return dt_; }

    /// Discrete frequency response at angular frequency omega (rad/s).
    std::complex<double> response(double omega) const {
        return pair_.response(omega * dt_) * single_.response(omega * dt_);
    }

    /// Largest pole modulus of the discretized filter.
    double max_pole_radius() const {
        const double disc = pair_.a1 * pair_.a1 - 4.0 * pair_.a2;
        const double quad = disc < 0.0 ? std::sqrt(pair_.a2)
                                       : 0.5 * (std::abs(pair_.a1) + std::sqrt(disc));
        return std::max(quad, std::abs(single_.a1));
    }

    const Biquad& second_order_section() const { return pair_; }
    const Biquad& first_order_section() const { return single_; }

  private:
    double cutoff_;
    double dt_;
    Biquad pair_;
    Biquad single_;
};

/// Convenience wrapper: one filter update.
inline double butterworth_step(Butterworth3& state, double sample) { return state.step(sample); }

struct Spectrum {
    /// Angular frequency in units of the reference frequency.
    std::vector<double> frequency;
    /// |sum_n x_n e^{-i w t_n}| * 2 / N (one-sided amplitude, DC not doubled).
    std::vector<double> magnitude;

    /// Index of the largest magnitude at frequency >= min_frequency.
    std::size_t peak_index(double min_frequency = 0.0) const {
        std::size_t best = 0;
        double v = -1.0;
        for (std::size_t i = 0; i < magnitude.size(); ++i) {
            if (frequency[i] >= min_frequency && magnitude[i] > v) {
                v = magnitude[i];
                best = i;
            }
        }
        return best;
    }
    double bin_width() const { return frequency.size() > 1 ? frequency[1] - frequency[0] : 0.0; }
};

namespace detail {
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

/// One-sided magnitude spectrum of a uniformly sampled real series with a
/// rectangular window, after dropping the first `discard` samples.
/// Frequencies are reported as omega / reference_omega.
inline Spectrum real_fft(const std::vector<double>& series, double dt, std::size_t discard,
                         double reference_omega = 1.0) {
    if (discard + 2 > series.size()) throw std::invalid_argument("real_fft: series shorter than discard window");
    if (!(dt > 0.0)) throw std::invalid_argument("real_fft: dt must be positive");
    const std::size_t n = series.size() - discard;
    const std::size_t nh = n / 2 + 1;
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(nh);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    std::copy(series.begin() + static_cast<std::ptrdiff_t>(discard), series.end(), in);
    fftw_execute(plan);
    Spectrum s;
    s.frequency.resize(nh);
    s.magnitude.resize(nh);
    const double df = 2.0 * std::numbers::pi / (static_cast<double>(n) * dt) / reference_omega;
    for (std::size_t k = 0; k < nh; ++k) {
        s.frequency[k] = df * static_cast<double>(k);
        const double scale = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
        s.magnitude[k] = scale * std::hypot(out[k][0], out[k][1]) / static_cast<double>(n);
    }
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return s;
}

struct Histogram2D {
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    std::size_t nx = 1, ny = 1;
    /// Row-major mass[i * ny + j]; sums to 1.
    std::vector<double> mass;

    double at(std::size_t i, std::size_t j) const { return mass[i * ny + j]; }
    double x_center(std::size_t i) const { return x_min + (x_max - x_min) * (static_cast<double>(i) + 0.5) / static_cast<double>(nx); }
    double y_center(std::size_t j) const { return y_min + (y_max - y_min) * (static_cast<double>(j) + 0.5) / static_cast<double>(ny); }
};

/// Normalized 2-D histogram. The range defaults to the sample bounding box;
/// samples outside an explicit range are clamped into the edge bins.
inline Histogram2D histogram2d(const std::vector<double>& xs, const std::vector<double>& ys, std::size_t nx,
                               std::size_t ny, std::optional<std::array<double, 4>> range = std::nullopt) {
    if (xs.empty() || xs.size() != ys.size()) throw std::invalid_argument("histogram2d: need matching non-empty samples");
    if (nx == 0 || ny == 0) throw std::invalid_argument("histogram2d: bin counts must be positive");
    Histogram2D h;
    h.nx = nx;
    h.ny = ny;
    if (range) {
        h.x_min = (*range)[0];
        h.x_max = (*range)[1];
        h.y_min = (*range)[2];
        h.y_max = (*range)[3];
    } else {
        const auto [xa, xb] = std::minmax_element(xs.begin(), xs.end());
        const auto [ya, yb] = std::minmax_element(ys.begin(), ys.end());
        h.x_min = *xa;
        h.x_max = *xb;
        h.y_min = *ya;
        h.y_max = *yb;
    }
    if (!(h.x_max > h.x_min)) {
        h.x_min -= 0.5;
        h.x_max += 0.5;
    }
    if (!(h.y_max > h.y_min)) {
        h.y_min -= 0.5;
        h.y_max += 0.5;
    }
    h.mass.assign(nx * ny, 0.0);
    auto bin = [](double v, double lo, double hi, std::size_t n) {
        const double t = (v - lo) / (hi - lo) * static_cast<double>(n);
        return static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(n - 1)));
    };
    const double w = 1.0 / static_cast<double>(xs.size());
    for (std::size_t s = 0; s < xs.size(); ++s) {
        h.mass[bin(xs[s], h.x_min, h.x_max, nx) * ny + bin(ys[s], h.y_min, h.y_max, ny)] += w;
    }
    return h;
}

/// Linear-interpolated quantile (the common "type 7" definition). Reorders `v`.
inline double quantile(std::vector<double>& v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct MeanAndError {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t count = 0;
};

inline MeanAndError mean_and_error(const std::vector<double>& v) {
    MeanAndError r;
    r.count = v.size();
    if (v.empty()) return r;
    double s = 0.0;
    for (double x : v) s += x;
    r.mean = s / static_cast<double>(v.size());
    if (v.size() > 1) {
        double q = 0.0;
        for (double x : v) q += (x - r.mean) * (x - r.mean);
        r.std_error = std::sqrt(q / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
    return r;
}

/// Per-trajectory minima over time of the variance quantities.
struct VarianceMinima {
    double v_x = 0.0;
    double v_p = 0.0;
    double v_min = 0.0;
};

struct EnsembleSummary {
    std::size_t trajectories = 0;
    /// Means over trajectories of the per-trajectory minima.
    VarianceMinima mean_of_minima;
    /// Per-sample statistics of n_eff across trajectories.
    std::vector<double> neff_mean;
    std::vector<double> neff_lower_quartile;
    std::vector<double> neff_upper_quartile;

    double min_neff_mean() const {
        return neff_mean.empty() ? std::numeric_limits<double>::quiet_NaN()
                                 : *std::min_element(neff_mean.begin(), neff_mean.end());
    }
};

/// Requires at least two trajectories; n_eff series are truncated to the shortest.
inline EnsembleSummary ensemble_stats(const std::vector<VarianceMinima>& minima,
                                      const std::vector<std::vector<double>>& neff_series) {
    if (minima.size() < 2) throw std::invalid_argument("ensemble_stats: need at least two trajectories");
    EnsembleSummary s;
    s.trajectories = minima.size();
    for (const auto& m : minima) {
        s.mean_of_minima.v_x += m.v_x;
        s.mean_of_minima.v_p += m.v_p;
        s.mean_of_minima.v_min += m.v_min;
    }
    const double inv = 1.0 / static_cast<double>(minima.size());
    s.mean_of_minima.v_x *= inv;
    s.mean_of_minima.v_p *= inv;
    s.mean_of_minima.v_min *= inv;
    if (neff_series.empty()) return s;
    std::size_t len = neff_series.front().size();
    for (const auto& series : neff_series) len = std::min(len, series.size());
    s.neff_mean.resize(len);
    s.neff_lower_quartile.resize(len);
    s.neff_upper_quartile.resize(len);
    std::vector<double> column(neff_series.size());
    for (std::size_t t = 0; t < len; ++t) {
        double sum = 0.0;
        for (std::size_t r = 0; r < neff_series.size(); ++r) {
            column[r] = neff_series[r][t];
            sum += column[r];
        }
        s.neff_mean[t] = sum / static_cast<double>(column.size());
        s.neff_lower_quartile[t] = quantile(column, 0.25);
        s.neff_upper_quartile[t] = quantile(column, 0.75);
    }
    return s;
}

}  // namespace nlom
