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

// Orchestration of one experiment: computation, then CSV / JSON / SVG
// artifacts in a single output directory. All artifact bytes except the
// wall time in summary.json are a function of the configuration.

#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nlom/analysis.hpp"
#include "nlom/cli/config.hpp"
#include "nlom/ensemble.hpp"
#include "nlom/fock_oracle.hpp"
#include "nlom/io/csv.hpp"
#include "nlom/io/svg.hpp"
#include "nlom/pulsed.hpp"
#include "nlom/pulsed_gaussian.hpp"
#include "nlom/pulsed_sweep.hpp"
#include "nlom/version.hpp"

namespace nlom::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kOutputDirEnv = "NLOM_OUTPUT_DIR";

/// --out, then output.directory, then $NLOM_OUTPUT_DIR, then ./nlom-out;
/// the last two get a per-mode subdirectory.
inline std::filesystem::path resolve_output_dir(const ExperimentConfig& c, const std::optional<std::string>& flag) {
    if (flag && !flag->empty()) return *flag;
    if (!c.output.directory.empty()) return c.output.directory;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return std::filesystem::path(env) / c.mode;
    return std::filesystem::path("nlom-out") / c.mode;
}

/// Serializes artifact writes; each file is written to a temporary name and
/// renamed, so readers never see partial files.
class ArtifactWriter {
  public:
    ArtifactWriter(std::filesystem::path dir, std::string metadata) : dir_(std::move(dir)), metadata_(std::move(metadata)) {
        std::filesystem::create_directories(dir_);
    }

    void write(const std::string& name, const std::string& bytes) {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto target = dir_ / name;
        const auto tmp = dir_ / (name + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write " + tmp.string());
            out << bytes;
            if (!out) throw std::runtime_error("write failed for " + tmp.string());
        }
        std::filesystem::rename(tmp, target);
        written_.push_back(name);
    }

    const std::string& metadata() const { return metadata_; }
    const std::vector<std::string>& written() const { return written_; }
    const std::filesystem::path& directory() const { return dir_; }

  private:
    std::filesystem::path dir_;
    std::string metadata_;
    std::mutex mutex_;
    std::vector<std::string> written_;
};

struct RunReport {
    int exit_code = 0;
    std::filesystem::path directory;
    std::vector<std::string> artifacts;
    Json summary;
};

namespace detail {

inline Json minima_json(const VarianceMinima& m) { return Json{{"V_X", m.v_x}, {"V_P", m.v_p}, {"V_min", m.v_min}}; }

/// NaN and infinities are not JSON numbers; they are written as null.
inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <class Fill>
std::string csv_text(const std::vector<std::string>& header, Fill&& fill) {
    std::ostringstream s;
    io::CsvWriter w(s, header);
    fill(w);
    return s.str();
}

inline io::Series series(std::string name, std::vector<double> x, std::vector<double> y, std::string color,
                         bool dashed = false) {
    io::Series s;
    s.name = std::move(name);
    s.x = std::move(x);
    s.y = std::move(y);
    s.color = std::move(color);
    s.dashed = dashed;
    return s;
}

inline Json run_pulsed_sweep(const ExperimentConfig& c, ArtifactWriter& out) {
    const auto& s = c.pulsed.sweep;
    const auto rows = pulsed_sweep(s, c.threads);
    if (c.output.csv) {
        out.write("pulsed_sweep.csv",
                  csv_text({"mu_sigma", "mu", "zeta_opt", "var_opt", "var_opt_level", "var_opt_converged", "outcome_mass",
                            "var_zeta1", "var_linearized", "zeta_opt_gaussian", "var_gaussian", "gaussian_excluded_mass"},
                           [&](io::CsvWriter& w) {
                               for (const auto& r : rows) {
                                   w.row(std::vector<io::CsvField>{r.mu_sigma, r.mu, r.zeta_opt, r.optimal.value,
                                                                   std::int64_t(r.optimal.level),
                                                                   std::int64_t(r.optimal.converged ? 1 : 0),
                                                                   r.optimal.outcome_mass,
                                                                   s.phase_homodyne ? r.phase_homodyne.value : std::nan(""),
                                                                   r.linearized,
                                                                   s.gaussian_path ? r.zeta_opt_gaussian : std::nan(""),
                                                                   s.gaussian_path ? r.gaussian.value : std::nan(""),
                                                                   s.gaussian_path ? r.gaussian.excluded_mass : std::nan("")});
                               }
                           }));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].optimal.value < rows[best].optimal.value) best = i;
    }
    if (c.output.svg) {
        std::vector<double> x, opt, ph, lin, gs, zo, zg;
        for (const auto& r : rows) {
            x.push_back(r.mu_sigma);
            opt.push_back(r.optimal.value);
            ph.push_back(r.phase_homodyne.value);
            lin.push_back(r.linearized);
            gs.push_back(r.gaussian.value);
            zo.push_back(r.zeta_opt);
            zg.push_back(r.zeta_opt_gaussian);
        }
        io::Panel v;
        v.title = "Measurement-averaged conditional variance";
        v.x_label = "mu sigma";
        v.y_label = "E[sigma_f^2]";
        v.log_x = v.log_y = true;
        v.series.push_back(series("zeta_opt, exact", x, opt, "#b2182b"));
        if (s.phase_homodyne) v.series.push_back(series("zeta = 1, exact", x, ph, "#2166ac"));
        v.series.push_back(series("zeta = 1, linearized", x, lin, "#444444", true));
        if (s.gaussian_path) v.series.push_back(series("zeta_opt, Gaussian", x, gs, "#f4a582", true));
        v.references.push_back({1.0 / 32.0, false, "#999999", "12 dB"});
        out.write("variance_sweep.svg", io::render_panels({v}, out.metadata()));
        io::Panel z;
        z.title = "Optimal beamsplitter setting";
        z.x_label = "mu sigma";
        z.y_label = "zeta_opt";
        z.log_x = true;
        z.series.push_back(series("exact", x, zo, "#b2182b"));
        if (s.gaussian_path) z.series.push_back(series("Gaussian", x, zg, "#f4a582", true));
        out.write("zeta_opt.svg", io::render_panels({z}, out.metadata()));
    }
    Json res;
    res["points"] = rows.size();
    res["min_var_opt"] = rows[best].optimal.value;
    res["min_var_opt_mu_sigma"] = rows[best].mu_sigma;
    res["min_var_opt_zeta"] = rows[best].zeta_opt;
    res["below_12dB"] = rows[best].optimal.value < 1.0 / 32.0;
    bool all_converged = true;
    for (const auto& r : rows) all_converged = all_converged && r.optimal.converged;
    res["all_converged"] = all_converged;
    return res;
}

inline SystemParams pulsed_point(const ExperimentConfig& c) {
    const auto& s = c.pulsed.sweep;
    SystemParams p = c.params;
    p.X_alpha = s.X_alpha;
    p = apply_loss(p, s.eta_loss);
    return at_mu_sigma(p, s.sigma2, c.pulsed.mu_sigma);
}

inline Json run_pulsed_q(const ExperimentConfig& c, ArtifactWriter& out) {
    const auto& s = c.pulsed.sweep;
    SystemParams p = pulsed_point(c);
    const GaussianPrior prior{s.sigma2};
    if (c.pulsed.zeta) {
        p.zeta = *c.pulsed.zeta;
    } else {
        p.zeta = optimal_zeta(prior, p, s.quadrature, s.search).zeta;
    }
    // At most ~400 points per axis; the unit-width kernel keeps the
    // trapezoid rule accurate at spacings up to ~1.
    const double extent = 2.0 * (p.X_alpha + 6.0);
    const double step = std::max(c.pulsed.q_step, extent / 400.0);
    const auto axis = default_beta_axis(p, step);
    const auto q = husimi_q(axis, axis, prior, p, s.quadrature);
    const auto dist = posterior_average_distance(prior, p, s.quadrature);
    const auto avg = averaged_posterior_variance(prior, p, s.quadrature);
    if (c.output.csv) {
        out.write("q.csv", csv_text({"X_beta", "P_beta", "Q"}, [&](io::CsvWriter& w) {
                      for (std::size_t i = 0; i < q.x_beta.size(); ++i) {
                          for (std::size_t k = 0; k < q.p_beta.size(); ++k) w.row(std::vector<double>{q.x_beta[i], q.p_beta[k], q.at(i, k)});
                      }
                  }));
    }
    if (c.output.svg) {
        io::Heatmap h;
        h.title = "Husimi Q of the reflected pulse";
        h.x_label = "X_beta";
        h.y_label = "P_beta";
        h.x_min = q.x_beta.front() - 0.5 * step;
        h.x_max = q.x_beta.back() + 0.5 * step;
        h.y_min = h.x_min;
        h.y_max = h.x_max;
        h.nx = q.x_beta.size();
        h.ny = q.p_beta.size();
        h.values = q.values;
        out.write("q_heatmap.svg", io::render_heatmap(h, out.metadata()));
    }
    Json res;
    res["mu_sigma"] = c.pulsed.mu_sigma;
    res["mu"] = p.mu;
    res["zeta"] = p.zeta;
    res["q_step"] = step;
    res["q_integral"] = q.integral;
    res["averaged_posterior_l1"] = dist.averaged_posterior_l1;
    res["expected_posterior_l1"] = dist.expected_l1;
    res["var"] = avg.value;
    res["var_converged"] = avg.converged;
    return res;
}

inline Json run_zeta_opt(const ExperimentConfig& c, ArtifactWriter& out) {
    const auto& s = c.pulsed.sweep;
    const SystemParams p = pulsed_point(c);
    const GaussianPrior prior{s.sigma2};
    PulsedQuadratureOptions scan_quad = s.quadrature;
    scan_quad.fixed_level = s.search.search_level;
    const int n = c.pulsed.zeta_scan_points;
    std::vector<double> zeta(static_cast<std::size_t>(n)), exact(zeta.size()), gauss(zeta.size(), std::nan(""));
    parallel_for(zeta.size(), c.threads, [&](std::size_t i) {
        SystemParams q = p;
        q.zeta = static_cast<double>(i) / static_cast<double>(n - 1);
        zeta[i] = q.zeta;
        exact[i] = averaged_posterior_variance(prior, q, scan_quad).value;
        if (s.gaussian_path) gauss[i] = gaussian_averaged_variance(s.sigma2, q, s.gaussian_quadrature).value;
    });
    const auto opt = optimal_zeta(prior, p, s.quadrature, s.search);
    std::optional<GaussianZetaOptimum> gopt;
    if (s.gaussian_path) gopt = optimal_zeta_gaussian(s.sigma2, p, s.gaussian_quadrature, s.search);
    if (c.output.csv) {
        out.write("zeta_scan.csv", csv_text({"zeta", "var_exact", "var_gaussian"}, [&](io::CsvWriter& w) {
                      for (std::size_t i = 0; i < zeta.size(); ++i) w.row(std::vector<double>{zeta[i], exact[i], gauss[i]});
                  }));
    }
    if (c.output.svg) {
        io::Panel v;
        v.title = "Averaged variance against zeta";
        v.x_label = "zeta";
        v.y_label = "E[sigma_f^2]";
        v.log_y = true;
        v.series.push_back(series("exact", zeta, exact, "#b2182b"));
        if (s.gaussian_path) v.series.push_back(series("Gaussian", zeta, gauss, "#f4a582", true));
        v.references.push_back({opt.zeta, true, "#b2182b", "zeta_opt"});
        out.write("zeta_scan.svg", io::render_panels({v}, out.metadata()));
    }
    Json res;
    res["mu_sigma"] = c.pulsed.mu_sigma;
    res["mu"] = p.mu;
    res["zeta_opt"] = opt.zeta;
    res["var_opt"] = opt.average.value;
    res["evaluations"] = opt.evaluations;
    if (gopt) {
        res["zeta_opt_gaussian"] = gopt->zeta;
        res["var_opt_gaussian"] = gopt->average.value;
        res["gaussian_excluded_mass"] = gopt->average.excluded_mass;
    }
    return res;
}

inline std::string trajectory_csv(const TrajectoryRecord& r) {
    return csv_text({"t", "dyX", "dyP", "Xl", "Pl", "meanX", "meanP", "Vx", "Vxp", "Vp", "neff", "Vmin", "DeltaOverKappa"},
                    [&](io::CsvWriter& w) {
                        for (std::size_t i = 0; i < r.size(); ++i) {
                            w.row(std::vector<double>{r.t[i], r.dy_x[i], r.dy_p[i], r.x_l[i], r.p_l[i], r.mean_x[i],
                                                      r.mean_p[i], r.v_x[i], r.v_xp[i], r.v_p[i], r.n_eff[i], r.v_min[i],
                                                      r.delta_over_kappa[i]});
                        }
                    });
}

inline Json run_continuous(const ExperimentConfig& c, ArtifactWriter& out, int& exit_code) {
    const auto& p = c.params;
    EnsembleOptions o;
    o.trajectories = c.ensemble.trajectories;
    o.seed = *c.seed;
    o.threads = c.threads;
    o.trajectory = c.ensemble.trajectory;
    o.keep_results = std::min(c.ensemble.record_trajectories, o.trajectories);
    const auto e = run_ensemble(p, o);
    const double period = mechanical_period(p);
    const double dt = trajectory_dt(p, o.trajectory);

    // Partial-failure manifest: always written so its absence is never ambiguous.
    out.write("failures.csv", csv_text({"index", "step", "cause"}, [&](io::CsvWriter& w) {
                  for (const auto& f : e.failures) w.row(std::vector<io::CsvField>{std::int64_t(f.index), std::int64_t(f.step), f.cause});
              }));
    if (e.accepted < 2) {
        exit_code = 2;
        Json res;
        res["accepted"] = e.accepted;
        res["failed"] = e.failures.size();
        res["error"] = "fewer than two accepted trajectories";
        return res;
    }
    if (!e.failures.empty()) exit_code = 3;

    const auto& first = e.kept.front();
    std::optional<Spectrum> spec;
    if (first.ok && first.mean_x_series.size() > 2) spec = real_fft(first.mean_x_series, dt * double(o.trajectory.mean_stride), 0, p.omega_m);
    std::vector<double> xs, ps;
    for (const auto& r : e.kept) {
        xs.insert(xs.end(), r.x_l_samples.begin(), r.x_l_samples.end());
        ps.insert(ps.end(), r.p_l_samples.begin(), r.p_l_samples.end());
    }
    std::optional<Histogram2D> hist;
    if (!xs.empty()) hist = histogram2d(xs, ps, c.ensemble.histogram_bins, c.ensemble.histogram_bins);

    const double neff_dt_periods = double(o.trajectory.neff_stride) * dt / period;
    if (c.output.csv) {
        out.write("minima.csv", csv_text({"index", "ok", "min_Vx", "min_Vp", "min_Vmin", "min_det", "mean_Xl", "mean_Pl"},
                                         [&](io::CsvWriter& w) {
                                             std::size_t k = 0;
                                             for (std::size_t i = 0; i < o.trajectories; ++i) {
                                                 const bool failed = std::any_of(e.failures.begin(), e.failures.end(),
                                                                                 [&](const auto& f) { return f.index == i; });
                                                 if (failed) {
                                                     const double nan = std::nan("");
                                                     w.row(std::vector<io::CsvField>{std::int64_t(i), std::int64_t(0), nan, nan, nan, nan, nan, nan});
                                                     continue;
                                                 }
                                                 const auto& m = e.minima[k];
                                                 w.row(std::vector<io::CsvField>{std::int64_t(i), std::int64_t(1), m.v_x, m.v_p, m.v_min,
                                                                                 std::nan(""), std::nan(""), e.trajectory_mean_p_l[k]});
                                                 ++k;
                                             }
                                         }));
        out.write("neff.csv", csv_text({"t_periods", "neff_mean", "neff_q25", "neff_q75"}, [&](io::CsvWriter& w) {
                      const auto& s = e.summary;
                      for (std::size_t i = 0; i < s.neff_mean.size(); ++i) {
                          w.row(std::vector<double>{neff_dt_periods * double(i), s.neff_mean[i], s.neff_lower_quartile[i], s.neff_upper_quartile[i]});
                      }
                  }));
        for (const auto& r : e.kept) {
            if (r.ok) out.write("trajectory_" + std::to_string(r.index) + ".csv", trajectory_csv(r.record));
        }
        if (spec) {
            out.write("spectrum.csv", csv_text({"omega_over_omega_m", "magnitude"}, [&](io::CsvWriter& w) {
                          // Content above 10 omega_m is integrator noise; it would dominate the file size.
                          for (std::size_t i = 0; i < spec->frequency.size() && spec->frequency[i] <= 10.0; ++i) {
                              w.row(std::vector<double>{spec->frequency[i], spec->magnitude[i]});
                          }
                      }));
        }
        if (hist) {
            out.write("histogram.csv", csv_text({"Xl", "Pl", "mass"}, [&](io::CsvWriter& w) {
                          for (std::size_t i = 0; i < hist->nx; ++i) {
                              for (std::size_t j = 0; j < hist->ny; ++j) w.row(std::vector<double>{hist->x_center(i), hist->y_center(j), hist->at(i, j)});
                          }
                      }));
        }
    }
    if (c.output.svg) {
        if (first.ok && first.record.size() > 0) {
            const auto& r = first.record;
            std::vector<double> tp(r.t.size());
            for (std::size_t i = 0; i < tp.size(); ++i) tp[i] = r.t[i] / period;
            io::Panel cur{"Measurement currents", "t / T_m", "current", false, false, {}, {}};
            cur.series.push_back(series("X_l", tp, r.x_l, "#2166ac"));
            cur.series.push_back(series("P_l", tp, r.p_l, "#b2182b"));
            io::Panel mean{"Conditional means", "t / T_m", "mean", false, false, {}, {}};
            mean.series.push_back(series("<X_m>", tp, r.mean_x, "#2166ac"));
            mean.series.push_back(series("<P_m>", tp, r.mean_p, "#b2182b"));
            io::Panel var{"Variances", "t / T_m", "variance", false, true, {}, {}};
            var.series.push_back(series("V_X", tp, r.v_x, "#2166ac"));
            var.series.push_back(series("V_P", tp, r.v_p, "#b2182b"));
            var.series.push_back(series("V_min", tp, r.v_min, "#1b7837"));
            var.references.push_back({0.25, false, "#999999", "3 dB"});
            var.references.push_back({e.summary.mean_of_minima.v_x, false, "#2166ac", "mean of min V_X"});
            var.references.push_back({e.summary.mean_of_minima.v_min, false, "#1b7837", "mean of min V_min"});
            io::Panel ne{"Effective occupation (ensemble)", "t / T_m", "n_eff", false, true, {}, {}};
            const auto& s = e.summary;
            std::vector<double> tn(s.neff_mean.size());
            for (std::size_t i = 0; i < tn.size(); ++i) tn[i] = neff_dt_periods * double(i);
            ne.series.push_back(series("mean", tn, s.neff_mean, "#000000"));
            ne.series.push_back(series("quartiles", tn, s.neff_lower_quartile, "#888888", true));
            ne.series.push_back(series("", tn, s.neff_upper_quartile, "#888888", true));
            ne.references.push_back({1.0, false, "#999999", "n_eff = 1"});
            out.write("trajectory_" + std::to_string(first.index) + ".svg", io::render_panels({cur, mean, var, ne}, out.metadata()));
        }
        if (spec) {
            io::Panel sp{"Fourier transform of <X_m>", "omega / omega_m", "magnitude", false, true, {}, {}};
            std::vector<double> f, m;
            for (std::size_t i = 1; i < spec->frequency.size() && spec->frequency[i] <= 4.0; ++i) {
                f.push_back(spec->frequency[i]);
                m.push_back(spec->magnitude[i]);
            }
            sp.series.push_back(series("|F{<X_m>}|", f, m, "#000000"));
            sp.references.push_back({1.0, true, "#555555", "omega_m"});
            sp.references.push_back({o.trajectory.lock_cutoff, true, "#1b7837", "cutoff"});
            out.write("spectrum.svg", io::render_panels({sp}, out.metadata()));
        }
        if (hist) {
            io::Heatmap h;
            h.title = "General-dyne currents";
            h.x_label = "X_l";
            h.y_label = "P_l";
            h.x_min = hist->x_min;
            h.x_max = hist->x_max;
            h.y_min = hist->y_min;
            h.y_max = hist->y_max;
            h.nx = hist->nx;
            h.ny = hist->ny;
            h.values = hist->mass;
            out.write("histogram.svg", io::render_heatmap(h, out.metadata()));
        }
    }

    Json res;
    res["trajectories"] = o.trajectories;
    res["accepted"] = e.accepted;
    res["failed"] = e.failures.size();
    res["dt"] = dt;
    res["steps_per_trajectory"] = first.steps;
    res["window_steps"] = first.window_steps;
    res["mean_of_minima"] = minima_json(e.summary.mean_of_minima);
    res["mean_of_settled_minima"] = minima_json(e.mean_of_settled_minima);
    {
        std::vector<double> vx, vmin;
        for (const auto& m : e.minima) {
            vx.push_back(m.v_x);
            vmin.push_back(m.v_min);
        }
        res["min_Vx_quartiles"] = Json::array({quantile(vx, 0.25), quantile(vx, 0.75)});
        res["min_Vmin_quartiles"] = Json::array({quantile(vmin, 0.25), quantile(vmin, 0.75)});
    }
    res["per_trajectory_minima"] = Json::array();
    for (const auto& m : e.minima) res["per_trajectory_minima"].push_back(minima_json(m));
    res["min_neff_ensemble_mean"] = num(e.summary.min_neff_mean());
    res["mean_Pl"] = Json{{"mean", e.p_l.mean}, {"std_error", e.p_l.std_error}};
    res["mean_Xl"] = Json{{"mean", e.x_l.mean}, {"std_error", e.x_l.std_error}};
    res["min_det"] = e.min_det;
    res["validity_flagged_trajectories"] = e.validity_flagged;
    res["max_mu2_Vx"] = e.max_mu2_vx;
    if (spec) {
        const auto k = spec->peak_index(0.25);
        res["spectrum_peak_omega"] = spec->frequency[k];
        res["spectrum_bin_width"] = spec->bin_width();
    }
    res["failures"] = Json::array();
    for (const auto& f : e.failures) res["failures"].push_back(Json{{"index", f.index}, {"step", f.step}, {"cause", f.cause}});
    return res;
}

inline Json run_oracle(const ExperimentConfig& c, ArtifactWriter& out) {
    OracleOptions o = c.oracle;
    o.x0 = c.oracle_x0.value_or(oracle_equilibrium_x(c.params));
    const auto cmp = compare_with_oracle(c.params, o);
    const double period = mechanical_period(c.params);
    if (c.output.csv) {
        out.write("oracle.csv",
                  csv_text({"t_periods", "G_meanX", "G_meanP", "G_Vx", "G_Vxp", "G_Vp", "F_meanX", "F_meanP", "F_Vx", "F_Vxp",
                            "F_Vp", "mean_rel_err", "Vx_rel_err", "Vp_rel_err", "boundary_pop"},
                           [&](io::CsvWriter& w) {
                               for (const auto& s : cmp.samples) {
                                   const auto& g = s.gaussian;
                                   const auto& f = s.fock;
                                   const double mr = std::hypot(g.mean_x - f.mean_x, g.mean_p - f.mean_p) /
                                                     std::hypot(f.mean_x, f.mean_p);
                                   w.row(std::vector<double>{s.t / period, g.mean_x, g.mean_p, g.v_x, g.v_xp, g.v_p, f.mean_x,
                                                             f.mean_p, f.v_x, f.v_xp, f.v_p, mr, std::abs(g.v_x - f.v_x) / f.v_x,
                                                             std::abs(g.v_p - f.v_p) / f.v_p, s.boundary_population});
                               }
                           }));
    }
    if (c.output.svg) {
        std::vector<double> t, gx, fx, gvx, fvx, gvp, fvp;
        for (const auto& s : cmp.samples) {
            t.push_back(s.t / period);
            gx.push_back(s.gaussian.mean_x);
            fx.push_back(s.fock.mean_x);
            gvx.push_back(s.gaussian.v_x);
            fvx.push_back(s.fock.v_x);
            gvp.push_back(s.gaussian.v_p);
            fvp.push_back(s.fock.v_p);
        }
        io::Panel m{"Mean position", "t / T_m", "<X_m>", false, false, {}, {}};
        m.series.push_back(series("Gaussian", t, gx, "#2166ac"));
        m.series.push_back(series("Fock", t, fx, "#b2182b", true));
        io::Panel v{"Variances", "t / T_m", "variance", false, false, {}, {}};
        v.series.push_back(series("V_X Gaussian", t, gvx, "#2166ac"));
        v.series.push_back(series("V_X Fock", t, fvx, "#b2182b", true));
        v.series.push_back(series("V_P Gaussian", t, gvp, "#1b7837"));
        v.series.push_back(series("V_P Fock", t, fvp, "#762a83", true));
        out.write("oracle.svg", io::render_panels({m, v}, out.metadata()));
    }
    Json res;
    res["fock_dim"] = o.dim;
    res["dt"] = period / (double(o.dt_divisor) * std::ldexp(1.0, o.refine_level));
    res["x0"] = o.x0;
    res["max_mean_rel_error"] = cmp.max_mean_rel_error;
    res["max_var_rel_error"] = cmp.max_var_rel_error;
    res["max_var_abs_error"] = cmp.max_var_abs_error;
    res["max_mu_sqrt_Vx"] = cmp.max_mu_sqrt_vx;
    res["max_boundary_population"] = cmp.max_boundary_population;
    res["min_eigenvalue"] = cmp.min_eigenvalue;
    res["max_trace_deviation"] = cmp.max_trace_deviation;
    res["agree"] = cmp.agree();
    return res;
}

}  // namespace detail

/// Runs one experiment and writes its artifacts. Exit codes: 0 success,
/// 2 unusable result, 3 completed with failed trajectories.
inline RunReport run(const ExperimentConfig& c, const std::filesystem::path& dir) {
    const auto start = std::chrono::steady_clock::now();
    const std::string ini = to_ini(c);
    ArtifactWriter out(dir, ini);
    if (c.output.csv || c.output.json || c.output.svg) out.write("config.ini", ini);
    RunReport rep;
    rep.directory = dir;
    Json res;
    if (c.mode == "pulsed-sweep") {
        res = detail::run_pulsed_sweep(c, out);
    } else if (c.mode == "pulsed-q") {
        res = detail::run_pulsed_q(c, out);
    } else if (c.mode == "zeta-opt") {
        res = detail::run_zeta_opt(c, out);
    } else if (c.mode == "continuous") {
        res = detail::run_continuous(c, out, rep.exit_code);
    } else if (c.mode == "oracle") {
        res = detail::run_oracle(c, out);
    } else {
        throw ConfigError("run.mode: unknown mode '" + c.mode + "'");
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json summary;
    summary["schema"] = 1;
    summary["code_version"] = kVersion;
    summary["mode"] = c.mode;
    summary["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
    summary["threads"] = resolve_threads(c.threads);
    summary["config"] = ini;
    summary["results"] = res;
    summary["artifacts"] = out.written();
    summary["exit_code"] = rep.exit_code;
    summary["wall_time_s"] = wall;
    if (c.output.json) out.write("summary.json", summary.dump(2) + "\n");
    rep.artifacts = out.written();
    rep.summary = std::move(summary);
    return rep;
}

}  // namespace nlom::cli
