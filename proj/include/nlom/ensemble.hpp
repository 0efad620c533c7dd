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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlom/analysis.hpp"
#include "nlom/continuous.hpp"
#include "nlom/parallel.hpp"

namespace nlom {

struct EnsembleOptions {
    std::size_t trajectories = 100;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    TrajectoryOptions trajectory;
    /// Keep full per-trajectory results (series included) for the first n trajectories.
    std::size_t keep_results = 0;
};

struct TrajectoryFailure {
    std::uint64_t index = 0;
    std::size_t step = 0;
    std::string cause;
};

struct EnsembleResult {
    /// Statistics over accepted trajectories only.
    EnsembleSummary summary;
    VarianceMinima mean_of_settled_minima;
    std::vector<VarianceMinima> minima;
    /// Per-trajectory time averages of the currents; errors are across trajectories.
    MeanAndError p_l;
    MeanAndError x_l;
    std::vector<double> trajectory_mean_p_l;
    double min_det = 0.0;
    std::size_t accepted = 0;
    std::vector<TrajectoryFailure> failures;
    /// Trajectories whose mu^2 V_X exceeded the validity threshold at any step.
    std::size_t validity_flagged = 0;
    double max_mu2_vx = 0.0;
    std::size_t total_substeps = 0;
    std::vector<TrajectoryResult> kept;
};

/// Runs independent trajectories (index 0 .. n-1) in parallel. Aborted
/// trajectories are listed in `failures` and excluded from the statistics.
inline EnsembleResult run_ensemble(const SystemParams& p, const EnsembleOptions& o) {
    std::vector<TrajectoryResult> all(o.trajectories);
    parallel_for(o.trajectories, o.threads, [&](std::size_t i) {
        TrajectoryOptions t = o.trajectory;
        if (i >= o.keep_results) t.record_stride = t.mean_stride = t.current_stride = 0;
        all[i] = run_trajectory(p, o.seed, i, t);
    });

    EnsembleResult e;
    std::vector<std::vector<double>> neff;
    e.min_det = std::numeric_limits<double>::infinity();
    for (auto& r : all) {
        if (!r.ok) {
            e.failures.push_back({r.index, r.abort_step, r.abort_cause});
            continue;
        }
        ++e.accepted;
        e.minima.push_back(r.minima);
        e.mean_of_settled_minima.v_x += r.settled_minima.v_x;
        e.mean_of_settled_minima.v_p += r.settled_minima.v_p;
        e.mean_of_settled_minima.v_min += r.settled_minima.v_min;
        e.trajectory_mean_p_l.push_back(r.mean_p_l);
        e.min_det = std::min(e.min_det, r.min_det);
        if (r.validity.flagged()) ++e.validity_flagged;
        e.max_mu2_vx = std::max(e.max_mu2_vx, r.validity.max_mu2_vx);
        e.total_substeps += r.substeps;
        if (!r.neff_series.empty()) neff.push_back(std::move(r.neff_series));
    }
    if (e.accepted >= 2) {
        e.summary = ensemble_stats(e.minima, neff);
        const double inv = 1.0 / static_cast<double>(e.accepted);
        e.mean_of_settled_minima.v_x *= inv;
        e.mean_of_settled_minima.v_p *= inv;
        e.mean_of_settled_minima.v_min *= inv;
        e.p_l = mean_and_error(e.trajectory_mean_p_l);
        std::vector<double> xl;
        for (const auto& r : all) {
            if (r.ok) xl.push_back(r.mean_x_l);
        }
        e.x_l = mean_and_error(xl);
    }
    for (std::size_t i = 0; i < std::min(o.keep_results, all.size()); ++i) e.kept.push_back(std::move(all[i]));
    return e;
}

}  // namespace nlom
