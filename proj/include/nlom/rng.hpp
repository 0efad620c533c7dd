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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace nlom {

/// Deterministic Gaussian source for one trajectory.
///
/// Each (seed, trajectory, substream) triple seeds its own Mersenne Twister
/// through std::seed_seq, so streams are reproducible and never shared
/// between trajectories.
class NoiseStream {
  public:
    NoiseStream(std::uint64_t seed, std::uint64_t trajectory, std::uint32_t substream = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(trajectory), static_cast<std::uint32_t>(trajectory >> 32),
                          substream, 0x6e6c6f6du};
        engine_.seed(seq);
    }

    double normal() { return dist_(engine_); }

    /// (dW_X, dW_P), each N(0, dt).
    std::array<double, 2> increments(double dt) {
        const double s = std::sqrt(dt);
        const double a = normal();
        const double b = normal();
        return {s * a, s * b};
    }

  private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

inline NoiseStream rng_stream(std::uint64_t seed, std::uint64_t trajectory_index) {
    return NoiseStream(seed, trajectory_index);
}

/// Two-channel Wiener path sampled at base_dt / 2^level.
///
/// Level 0 increments come from substream 0. Each finer level halves every
/// interval with a Brownian bridge drawn from its own substream, so the
/// path at level L sums exactly to the path at every coarser level. This is
/// what makes step-halving convergence checks pathwise.
class WienerPath {
  public:
    WienerPath(std::uint64_t seed, std::uint64_t trajectory, double base_dt, int level = 0)
        : base_dt_(base_dt), level_(level), base_(seed, trajectory, 0) {
        if (level < 0 || level > 16) throw std::invalid_argument("WienerPath: refinement level out of range");
        for (int l = 1; l <= level; ++l) bridges_.emplace_back(seed, trajectory, static_cast<std::uint32_t>(l));
        buffer_.resize(std::size_t{1} << level);
        cursor_ = buffer_.size();
    }

    double dt() const { return base_dt_ / static_cast<double>(std::size_t{1} << level_); }

    /// Next fine increment.
    std::array<double, 2> next() {
        if (cursor_ == buffer_.size()) refill();
        return buffer_[cursor_++];
    }

  private:
    void refill() {
        buffer_[0] = base_.increments(base_dt_);
        std::size_t count = 1;
        double h = base_dt_;
        for (int l = 0; l < level_; ++l) {
            std::vector<std::array<double, 2>> next(count * 2);
            const double s = 0.5 * std::sqrt(h);
            for (std::size_t i = 0; i < count; ++i) {
                for (int c = 0; c < 2; ++c) {
                    const double xi = bridges_[l].normal();
                    next[2 * i][c] = 0.5 * buffer_[i][c] + s * xi;
                    next[2 * i + 1][c] = 0.5 * buffer_[i][c] - s * xi;
                }
            }
            std::copy(next.begin(), next.end(), buffer_.begin());
            count *= 2;
            h *= 0.5;
        }
        cursor_ = 0;
    }

    double base_dt_;
    int level_;
    NoiseStream base_;
    std::vector<NoiseStream> bridges_;
    std::vector<std::array<double, 2>> buffer_;
    std::size_t cursor_ = 0;
};

/// Splits an increment W over duration h into a substep of length h_sub and the
/// remainder, conditioning exactly on the total (Brownian bridge).
inline double bridge_split(double total, double h, double h_sub, double xi) {
    const double frac = h_sub / h;
    return frac * total + std::sqrt(std::max(0.0, h_sub * (h - h_sub) / h)) * xi;
}

}  // namespace nlom
