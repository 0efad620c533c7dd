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

// Experiment configuration: INI text with fixed sections. Unknown keys are
// errors. Every resolved value is written back by to_ini, and
// parse_config(to_ini(c)) reproduces c exactly.

#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlom/continuous.hpp"
#include "nlom/fock_oracle.hpp"
#include "nlom/io/csv.hpp"
#include "nlom/params.hpp"
#include "nlom/pulsed.hpp"
#include "nlom/pulsed_gaussian.hpp"
#include "nlom/pulsed_sweep.hpp"

namespace nlom::cli {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& modes() {
    static const std::vector<std::string> m = {"pulsed-sweep", "pulsed-q", "continuous", "oracle", "zeta-opt"};
    return m;
}

inline bool is_stochastic(const std::string& mode) { return mode == "continuous" || mode == "oracle"; }

struct PulsedConfig {
    PulsedSweepSettings sweep;
    /// Single operating point for pulsed-q and zeta-opt.
    double mu_sigma = 1.0;
    /// Beamsplitter setting for pulsed-q; unset means the optimal zeta.
    std::optional<double> zeta;
    /// Husimi grid spacing.
    double q_step = 0.1;
    /// Uniform zeta samples written by zeta-opt.
    int zeta_scan_points = 101;
};

struct EnsembleConfig {
    std::size_t trajectories = 100;
    TrajectoryOptions trajectory;
    /// Trajectories whose full series are written.
    std::size_t record_trajectories = 1;
    std::size_t histogram_bins = 60;
};

struct OutputConfig {
    std::string directory;
    bool csv = true;
    bool json = true;
    bool svg = true;
};

struct ExperimentConfig {
    std::string mode;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::string preset;
    SystemParams params;
    PulsedConfig pulsed;
    EnsembleConfig ensemble;
    OracleOptions oracle;
    /// Oracle initial displacement; unset means the static force equilibrium.
    std::optional<double> oracle_x0;
    OutputConfig output;
};

namespace detail {

/// Allowed keys per section.
inline const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"run", {"mode", "seed", "threads"}},
        {"params",
         {"preset", "mu", "g0_over_kappa", "delta_over_kappa", "mech_freq_hz", "gamma_hz", "T_bath", "T_init", "k",
          "mu2k_over_omega", "X_alpha", "zeta", "eta", "eta_X", "eta_P"}},
        {"pulsed",
         {"sigma2", "eta_loss", "mu_sigma_min", "mu_sigma_max", "points", "gaussian_path", "phase_homodyne", "mu_sigma",
          "zeta", "q_step", "zeta_scan_points"}},
        {"ensemble",
         {"trajectories", "periods", "lock", "lock_cutoff", "discard_periods", "record_trajectories", "record_stride",
          "histogram_bins"}},
        {"oracle", {"periods", "nbar", "x0", "p0", "fock_dim", "dt_divisor", "refine_level", "samples_per_period"}},
        {"numerics",
         {"phase_step_scale", "min_nodes", "outcome_step", "kernel_radius", "prior_half_width", "max_level", "rel_tol",
          "search_level", "coarse_points", "zeta_tol", "z_points", "delta_points", "delta_max", "z_sigmas",
          "dt_divisor", "refine_level", "scheme", "substep_tolerance", "max_substeps"}},
        {"output", {"directory", "formats"}},
    };
    return s;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

class Reader {
  public:
    explicit Reader(const boost::property_tree::ptree& t) : tree_(t) {}

    bool has(const std::string& path) const { return tree_.get_child_optional(boost::property_tree::ptree::path_type(path, '.')).has_value(); }

    std::optional<std::string> text(const std::string& path) const {
        auto v = tree_.get_optional<std::string>(boost::property_tree::ptree::path_type(path, '.'));
        if (!v) return std::nullopt;
        return trim(*v);
    }

    template <class T>
    std::optional<T> number(const std::string& path) const {
        auto s = text(path);
        if (!s) return std::nullopt;
        T v{};
        const char* b = s->data();
        const char* e = b + s->size();
        auto r = std::from_chars(b, e, v);
        if (r.ec != std::errc() || r.ptr != e) throw ConfigError(path + ": cannot parse '" + *s + "' as a number");
        return v;
    }

    std::optional<bool> boolean(const std::string& path) const {
        auto s = text(path);
        if (!s) return std::nullopt;
        if (*s == "true" || *s == "1" || *s == "yes" || *s == "on") return true;
        if (*s == "false" || *s == "0" || *s == "no" || *s == "off") return false;
        throw ConfigError(path + ": expected a boolean, got '" + *s + "'");
    }

    template <class T>
    void set(const std::string& path, T& target) const {
        if (auto v = number<T>(path)) target = *v;
    }

  private:
    const boost::property_tree::ptree& tree_;
};

inline void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key + ": " + what);
}

}  // namespace detail

/// Parses INI text. `mode_override` (a CLI subcommand) must agree with
/// run.mode when both are present.
inline ExperimentConfig parse_config(const std::string& text, const std::optional<std::string>& mode_override = {},
                                     const std::optional<std::uint64_t>& seed_override = {},
                                     const std::optional<std::string>& preset_override = {}) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    const auto& schema = detail::schema();
    std::vector<std::string> unknown;
    for (const auto& [section, body] : tree) {
        auto it = schema.find(section);
        if (it == schema.end() || (body.empty() && !body.data().empty())) {
            unknown.push_back(section);
            continue;
        }
        for (const auto& [key, value] : body) {
            if (!it->second.count(key)) unknown.push_back(section + "." + key);
        }
    }
    if (!unknown.empty()) {
        std::string msg = "unknown config keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }
    const detail::Reader r(tree);
    ExperimentConfig c;

    const auto file_mode = r.text("run.mode");
    if (mode_override && file_mode && *file_mode != *mode_override) {
        throw ConfigError("run.mode: config says '" + *file_mode + "' but the command is '" + *mode_override + "'");
    }
    c.mode = mode_override ? *mode_override : file_mode.value_or("");
    c.seed = seed_override ? seed_override : r.number<std::uint64_t>("run.seed");
    r.set("run.threads", c.threads);
    c.preset = preset_override ? *preset_override : r.text("params.preset").value_or("");

    std::vector<std::string> missing;
    if (c.mode.empty()) {
        missing.push_back("run.mode");
    } else if (std::find(modes().begin(), modes().end(), c.mode) == modes().end()) {
        throw ConfigError("run.mode: unknown mode '" + c.mode + "'");
    }
    if (is_stochastic(c.mode) && !c.seed) missing.push_back("run.seed");
    const bool explicit_continuous = r.has("params.mu") && (r.has("params.k") || r.has("params.mu2k_over_omega"));
    if (c.mode == "continuous" && c.preset.empty() && !explicit_continuous) {
        missing.push_back("params.preset (or params.mu with params.k or params.mu2k_over_omega)");
    }
    if (!missing.empty()) {
        std::string msg = "missing required config keys:";
        for (const auto& k : missing) msg += " " + k;
        throw ConfigError(msg);
    }

    // Base parameters by mode, then explicit overrides.
    if (!c.preset.empty()) {
        try {
            c.params = device_params(c.preset);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("params.preset: ") + e.what());
        }
    } else if (c.mode == "oracle") {
        c.params = oracle_params();
    } else if (c.mode != "continuous") {
        c.params = SystemParams{};
        c.params.X_alpha = 200.0;
    }
    auto& p = c.params;
    if (auto v = r.number<double>("params.mech_freq_hz")) p.omega_m = constants::two_pi * *v;
    if (auto v = r.number<double>("params.gamma_hz")) p.gamma = constants::two_pi * *v;
    r.set("params.mu", p.mu);
    if (auto v = r.number<double>("params.g0_over_kappa")) p.g0_over_kappa = *v;
    if (r.has("params.mu") && !r.has("params.g0_over_kappa")) p.g0_over_kappa.reset();
    r.set("params.delta_over_kappa", p.delta_over_kappa);
    r.set("params.T_bath", p.T_bath);
    r.set("params.T_init", p.T_init);
    r.set("params.k", p.k);
    if (auto v = r.number<double>("params.mu2k_over_omega")) {
        detail::require(!r.has("params.k"), "params.mu2k_over_omega", "give either k or mu2k_over_omega, not both");
        detail::require(p.mu > 0.0, "params.mu2k_over_omega", "needs mu > 0");
        p.k = *v * p.omega_m / (p.mu * p.mu);
    }
    r.set("params.X_alpha", p.X_alpha);
    r.set("params.zeta", p.zeta);
    if (auto v = r.number<double>("params.eta")) p.set_eta(*v);
    r.set("params.eta_X", p.eta_X);
    r.set("params.eta_P", p.eta_P);
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("params: ") + e.what());
    }

    auto& pc = c.pulsed;
    auto& s = pc.sweep;
    s.X_alpha = p.X_alpha;
    r.set("pulsed.sigma2", s.sigma2);
    r.set("pulsed.eta_loss", s.eta_loss);
    r.set("pulsed.mu_sigma_min", s.mu_sigma_min);
    r.set("pulsed.mu_sigma_max", s.mu_sigma_max);
    r.set("pulsed.points", s.points);
    if (auto v = r.boolean("pulsed.gaussian_path")) s.gaussian_path = *v;
    if (auto v = r.boolean("pulsed.phase_homodyne")) s.phase_homodyne = *v;
    r.set("pulsed.mu_sigma", pc.mu_sigma);
    if (auto v = r.number<double>("pulsed.zeta")) pc.zeta = *v;
    r.set("pulsed.q_step", pc.q_step);
    r.set("pulsed.zeta_scan_points", pc.zeta_scan_points);
    detail::require(s.sigma2 > 0.0, "pulsed.sigma2", "must be positive");
    detail::require(s.eta_loss > 0.0 && s.eta_loss <= 1.0, "pulsed.eta_loss", "must lie in (0,1]");
    detail::require(s.mu_sigma_min > 0.0 && s.mu_sigma_max > s.mu_sigma_min, "pulsed.mu_sigma_max",
                    "need 0 < mu_sigma_min < mu_sigma_max");
    detail::require(s.points >= 2, "pulsed.points", "need at least 2 points");
    detail::require(pc.mu_sigma > 0.0, "pulsed.mu_sigma", "must be positive");
    detail::require(!pc.zeta || (*pc.zeta >= 0.0 && *pc.zeta <= 1.0), "pulsed.zeta", "must lie in [0,1]");
    detail::require(pc.q_step > 0.0, "pulsed.q_step", "must be positive");
    detail::require(pc.zeta_scan_points >= 2, "pulsed.zeta_scan_points", "need at least 2 points");

    auto& q = s.quadrature;
    r.set("numerics.phase_step_scale", q.phase_step_scale);
    r.set("numerics.min_nodes", q.min_nodes);
    r.set("numerics.outcome_step", q.outcome_step);
    r.set("numerics.kernel_radius", q.kernel_radius);
    r.set("numerics.prior_half_width", q.prior_half_width);
    r.set("numerics.max_level", q.max_level);
    r.set("numerics.rel_tol", q.rel_tol);
    r.set("numerics.search_level", s.search.search_level);
    r.set("numerics.coarse_points", s.search.coarse_points);
    r.set("numerics.zeta_tol", s.search.tol);
    auto& g = s.gaussian_quadrature;
    r.set("numerics.z_points", g.z_points);
    r.set("numerics.delta_points", g.delta_points);
    r.set("numerics.delta_max", g.delta_max);
    r.set("numerics.z_sigmas", g.z_sigmas);
    detail::require(q.phase_step_scale > 0.0 && q.outcome_step > 0.0 && q.kernel_radius > 0.0, "numerics",
                    "quadrature steps and radii must be positive");
    detail::require(q.min_nodes >= 3, "numerics.min_nodes", "need at least 3 nodes");
    detail::require(s.search.coarse_points >= 3, "numerics.coarse_points", "need at least 3 points");
    detail::require(g.z_points >= 3 && g.delta_points >= 3, "numerics.z_points", "Gaussian grid needs at least 3 points per axis");

    auto& e = c.ensemble;
    auto& t = e.trajectory;
    r.set("ensemble.trajectories", e.trajectories);
    r.set("ensemble.periods", t.periods);
    if (auto v = r.boolean("ensemble.lock")) t.lock = *v;
    r.set("ensemble.lock_cutoff", t.lock_cutoff);
    r.set("ensemble.discard_periods", t.discard_periods);
    r.set("ensemble.record_trajectories", e.record_trajectories);
    r.set("ensemble.record_stride", t.record_stride);
    r.set("ensemble.histogram_bins", e.histogram_bins);
    r.set("numerics.dt_divisor", t.dt_divisor);
    r.set("numerics.refine_level", t.refine_level);
    r.set("numerics.substep_tolerance", t.substep_tolerance);
    r.set("numerics.max_substeps", t.max_substeps);
    if (auto v = r.text("numerics.scheme")) {
        if (*v == "euler") {
            t.scheme = StepScheme::euler;
        } else if (*v == "rotating_euler") {
            t.scheme = StepScheme::rotating_euler;
        } else {
            throw ConfigError("numerics.scheme: expected euler or rotating_euler, got '" + *v + "'");
        }
    }
    if (!r.has("ensemble.record_stride")) t.record_stride = 20;
    t.mean_stride = 1;
    t.current_stride = 10;
    detail::require(t.periods > 0.0, "ensemble.periods", "must be positive");
    detail::require(t.discard_periods >= 0.0 && t.discard_periods < t.periods, "ensemble.discard_periods",
                    "must lie in [0, periods)");
    detail::require(t.lock_cutoff > 0.0, "ensemble.lock_cutoff", "must be positive");
    detail::require(t.dt_divisor > 0, "numerics.dt_divisor", "must be positive");
    detail::require(t.refine_level >= 0 && t.refine_level < 16, "numerics.refine_level", "must lie in [0, 16)");
    detail::require(constants::two_pi / (static_cast<double>(t.dt_divisor) * std::ldexp(1.0, t.refine_level)) <= t.max_omega_dt,
                    "numerics.dt_divisor", "step too coarse: need dt_divisor * 2^refine_level >= 2 pi / max omega_m dt");
    detail::require(t.record_stride > 0, "ensemble.record_stride", "must be positive");
    detail::require(e.histogram_bins > 0, "ensemble.histogram_bins", "must be positive");
    if (c.mode == "continuous") detail::require(e.trajectories >= 2, "ensemble.trajectories", "need at least 2");

    auto& o = c.oracle;
    o.scheme = t.scheme;
    r.set("oracle.periods", o.periods);
    r.set("oracle.nbar", o.nbar);
    if (auto v = r.number<double>("oracle.x0")) c.oracle_x0 = *v;
    r.set("oracle.p0", o.p0);
    r.set("oracle.fock_dim", o.dim);
    r.set("oracle.dt_divisor", o.dt_divisor);
    r.set("oracle.refine_level", o.refine_level);
    r.set("oracle.samples_per_period", o.samples_per_period);
    detail::require(o.periods > 0.0, "oracle.periods", "must be positive");
    detail::require(o.nbar >= 0.0, "oracle.nbar", "must be non-negative");
    detail::require(o.dim >= 2, "oracle.fock_dim", "must be at least 2");
    detail::require(o.dt_divisor > 0 && o.refine_level >= 0, "oracle.dt_divisor", "must be positive");
    detail::require(o.samples_per_period > 0, "oracle.samples_per_period", "must be positive");
    if (c.seed) o.seed = *c.seed;

    c.output.directory = r.text("output.directory").value_or("");
    if (auto f = r.text("output.formats")) {
        c.output.csv = c.output.json = c.output.svg = false;
        std::stringstream ss(*f);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = detail::trim(item);
            if (item == "csv") {
                c.output.csv = true;
            } else if (item == "json") {
                c.output.json = true;
            } else if (item == "svg") {
                c.output.svg = true;
            } else if (!item.empty()) {
                throw ConfigError("output.formats: unknown format '" + item + "'");
            }
        }
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path, const std::optional<std::string>& mode_override = {},
                                    const std::optional<std::uint64_t>& seed_override = {},
                                    const std::optional<std::string>& preset_override = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), mode_override, seed_override, preset_override);
}

/// Fully resolved configuration; parse_config(to_ini(c)) == c.
inline std::string to_ini(const ExperimentConfig& c) {
    using io::format_double;
    std::ostringstream s;
    auto kv = [&s](const std::string& k, const std::string& v) { s << k << " = " << v << "\n"; };
    auto d = [](double v) { return format_double(v); };
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    s << "[run]\n";
    kv("mode", c.mode);
    if (c.seed) kv("seed", std::to_string(*c.seed));
    kv("threads", std::to_string(c.threads));
    const auto& p = c.params;
    s << "\n[params]\n";
    if (!c.preset.empty()) kv("preset", c.preset);
    kv("mu", d(p.mu));
    if (p.g0_over_kappa) kv("g0_over_kappa", d(*p.g0_over_kappa));
    kv("delta_over_kappa", d(p.delta_over_kappa));
    kv("mech_freq_hz", d(p.omega_m / constants::two_pi));
    kv("gamma_hz", d(p.gamma / constants::two_pi));
    kv("T_bath", d(p.T_bath));
    kv("T_init", d(p.T_init));
    kv("k", d(p.k));
    kv("X_alpha", d(p.X_alpha));
    kv("zeta", d(p.zeta));
    kv("eta_X", d(p.eta_X));
    kv("eta_P", d(p.eta_P));
    const auto& pc = c.pulsed;
    const auto& sw = pc.sweep;
    s << "\n[pulsed]\n";
    kv("sigma2", d(sw.sigma2));
    kv("eta_loss", d(sw.eta_loss));
    kv("mu_sigma_min", d(sw.mu_sigma_min));
    kv("mu_sigma_max", d(sw.mu_sigma_max));
    kv("points", std::to_string(sw.points));
    kv("gaussian_path", b(sw.gaussian_path));
    kv("phase_homodyne", b(sw.phase_homodyne));
    kv("mu_sigma", d(pc.mu_sigma));
    if (pc.zeta) kv("zeta", d(*pc.zeta));
    kv("q_step", d(pc.q_step));
    kv("zeta_scan_points", std::to_string(pc.zeta_scan_points));
    const auto& t = c.ensemble.trajectory;
    s << "\n[ensemble]\n";
    kv("trajectories", std::to_string(c.ensemble.trajectories));
    kv("periods", d(t.periods));
    kv("lock", b(t.lock));
    kv("lock_cutoff", d(t.lock_cutoff));
    kv("discard_periods", d(t.discard_periods));
    kv("record_trajectories", std::to_string(c.ensemble.record_trajectories));
    kv("record_stride", std::to_string(t.record_stride));
    kv("histogram_bins", std::to_string(c.ensemble.histogram_bins));
    const auto& o = c.oracle;
    s << "\n[oracle]\n";
    kv("periods", d(o.periods));
    kv("nbar", d(o.nbar));
    if (c.oracle_x0) kv("x0", d(*c.oracle_x0));
    kv("p0", d(o.p0));
    kv("fock_dim", std::to_string(o.dim));
    kv("dt_divisor", std::to_string(o.dt_divisor));
    kv("refine_level", std::to_string(o.refine_level));
    kv("samples_per_period", std::to_string(o.samples_per_period));
    const auto& q = sw.quadrature;
    const auto& g = sw.gaussian_quadrature;
    s << "\n[numerics]\n";
    kv("phase_step_scale", d(q.phase_step_scale));
    kv("min_nodes", std::to_string(q.min_nodes));
    kv("outcome_step", d(q.outcome_step));
    kv("kernel_radius", d(q.kernel_radius));
    kv("prior_half_width", d(q.prior_half_width));
    kv("max_level", std::to_string(q.max_level));
    kv("rel_tol", d(q.rel_tol));
    kv("search_level", std::to_string(sw.search.search_level));
    kv("coarse_points", std::to_string(sw.search.coarse_points));
    kv("zeta_tol", d(sw.search.tol));
    kv("z_points", std::to_string(g.z_points));
    kv("delta_points", std::to_string(g.delta_points));
    kv("delta_max", d(g.delta_max));
    kv("z_sigmas", d(g.z_sigmas));
    kv("dt_divisor", std::to_string(t.dt_divisor));
    kv("refine_level", std::to_string(t.refine_level));
    kv("scheme", t.scheme == StepScheme::euler ? "euler" : "rotating_euler");
    kv("substep_tolerance", d(t.substep_tolerance));
    kv("max_substeps", std::to_string(t.max_substeps));
    s << "\n[output]\n";
    if (!c.output.directory.empty()) kv("directory", c.output.directory);
    std::string formats;
    for (const auto& [on, name] : {std::pair{c.output.csv, "csv"}, std::pair{c.output.json, "json"}, std::pair{c.output.svg, "svg"}}) {
        if (!on) continue;
        if (!formats.empty()) formats += ",";
        formats += name;
    }
    kv("formats", formats);
    return s.str();
}

}  // namespace nlom::cli
