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

// Command-line entry point. Exit codes: 0 success, 1 configuration or I/O
// error, 2 no usable result, 3 completed with failed trajectories.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nlom/cli/config.hpp"
#include "nlom/cli/run.hpp"
#include "nlom/version.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string preset;
};

void add_common(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config, "INI experiment file")->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "output directory (overrides output.directory and $NLOM_OUTPUT_DIR)");
    sub->add_option("--seed", f.seed, "RNG seed (overrides run.seed)");
    sub->add_option("--threads", f.threads, "worker threads, 0 = hardware concurrency");
    sub->add_option("--preset", f.preset, "parameter preset: A, B or C");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlinear optomechanical measurement: pulsed and continuous conditional-state estimation"};
    app.set_version_flag("--version", std::string(nlom::kVersion));
    app.require_subcommand(1);

    CommonFlags flags;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"pulsed-sweep", "averaged conditional variance against measurement strength"},
        {"pulsed-q", "Husimi Q of the reflected pulse at one strength"},
        {"zeta-opt", "averaged variance against the beamsplitter setting"},
        {"continuous", "ensemble of continuous general-dyne trajectories"},
        {"oracle", "Gaussian filter against the truncated Fock-space master equation"},
    };
    for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // usage errors share the config-error code
    }
    const std::string mode = app.get_subcommands().front()->get_name();

    try {
        const std::optional<std::string> preset = flags.preset.empty() ? std::nullopt : std::optional<std::string>(flags.preset);
        auto cfg = flags.config.empty() ? nlom::cli::parse_config("", mode, flags.seed, preset)
                                        : nlom::cli::load_config(flags.config, mode, flags.seed, preset);
        if (flags.threads) cfg.threads = *flags.threads;
        const auto dir = nlom::cli::resolve_output_dir(cfg, flags.out.empty() ? std::nullopt : std::optional<std::string>(flags.out));
        const auto report = nlom::cli::run(cfg, dir);
        std::cout << "wrote " << report.artifacts.size() << " artifacts to " << report.directory.string() << "\n";
        return report.exit_code;
    } catch (const nlom::cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
