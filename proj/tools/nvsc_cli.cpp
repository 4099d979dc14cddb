// Copyright 2026 The nvsc Authors
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

// nvsc: command line front end.
//
// Exit status: 0 success, 1 failed check or failed run, 2 invalid config.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nvsc/io.hpp"
#include "nvsc/scenario.hpp"

namespace {

using namespace nvsc;

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kInvalidConfig = 2;

void print_result(const ScenarioResult& r) {
    std::cout << r.config.name << ": n_a = " << r.config.params.n_a << ", n_b = " << r.config.params.n_b << "\n";
    for (const auto& [name, peak] : r.peaks) {
        std::cout << "  max " << name << " = " << format_value(peak.value) << " at g t = " << format_value(peak.time) << "\n";
    }
    for (const auto& s : r.truncation_scan) {
        std::cout << "  truncation n = " << s.n << ": change " << format_value(s.max_change) << ", top population "
                  << format_value(s.top_population) << "\n";
    }
    if (!r.truncation_scan.empty()) std::cout << "  truncation " << (r.converged ? "converged" : "NOT converged") << "\n";
    if (r.truncation_warning) {
        std::cout << "  warning: top Fock population " << format_value(r.top_population) << " exceeds "
                  << format_value(kTopLevelWarning) << "\n";
    }
    for (const auto& f : r.files) std::cout << "  wrote " << f.string() << "\n";
}

int report_status(const Report& rep) {
    std::cout << rep.text();
    return rep.pass() ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid NV / superconducting qubit transducer simulator"};
    app.require_subcommand(1);
    std::string out_dir = "out";
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();

    std::string config;
    std::string id;
    auto* simulate = app.add_subcommand("simulate", "Run one scenario config");
    simulate->add_option("config", config, "Scenario JSON file")->required();
    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep config");
    sweep->add_option("config", config, "Sweep JSON file")->required();
    auto* figure = app.add_subcommand("figure", "Reproduce a figure with its checks");
    figure->add_option("id", id, "fig2, fig3, fig4 or fig5")->required()->check(CLI::IsMember(figure_ids()));
    auto* validate = app.add_subcommand("validate", "Run an approximation or accuracy study");
    validate->add_option("study", id, "rwa, adiabatic or oracle")->required()->check(CLI::IsMember(study_ids()));
    auto* couplings = app.add_subcommand("couplings", "Physical coupling calculator");
    couplings->add_option("config", config, "Couplings JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalidConfig;
    }

    const std::filesystem::path out(out_dir);
    try {
        if (simulate->parsed()) {
            print_result(run_scenario(parse_scenario(read_text(config)), out));
            return kOk;
        }
        if (sweep->parsed()) {
            const auto result = run_sweep(parse_sweep(read_text(config)), out);
            for (const auto& r : result.runs) print_result(r);
            for (const auto& f : result.files) std::cout << "wrote " << f.string() << "\n";
            return kOk;
        }
        if (figure->parsed()) return report_status(reproduce_figure(id, out));
        if (validate->parsed()) return report_status(validate_study(id, out));
        if (couplings->parsed()) {
            const auto cfg = parse_couplings(read_text(config));
            return report_status(couplings_report(cfg.physical, cfg.g_ref));
        }
    } catch (const ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kInvalidConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kCheckFailed;
    }
    return kInvalidConfig;
}
