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

// scenario.hpp: complete simulation runs: configs, truncation control,
// sweeps, the shipped figure set and the approximation studies.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nvsc/dynamics.hpp"
#include "nvsc/model.hpp"
#include "nvsc/observables.hpp"

namespace nvsc {

/// Invalid configuration. The message starts with the offending field path.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Auto truncation stopped at its ceiling without meeting the tolerance.
class TruncationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Mode { transfer, entangle, total_timedep };

struct InitialState {
    enum class Kind { nv_superposition, all_ground, explicit_vector };
    Kind kind{Kind::all_ground};
    std::vector<Complex> amplitudes;  // explicit_vector, canonical basis order; nv_superposition uses params.theta
};

struct TruncationPolicy {
    bool automatic{false};  // false: use params.n_a / params.n_b as given
    std::size_t start{20};
    std::size_t step{5};
    std::size_t max{30};
    double tolerance{0.05};  // relative change between n and n + step
    /// Return the largest run, marked unconverged, instead of throwing.
    bool allow_unconverged{false};
};

struct ScenarioConfig {
    std::string name{"scenario"};
    Mode mode{Mode::transfer};
    ModelParams params;
    InitialState initial;
    EvolutionSpec evolution;
    std::vector<std::string> outputs;
    TruncationPolicy truncation;
    /// Relative phase of the transfer target cos(theta)|0> + e^{i phase} sin(theta)|1>.
    double target_phase{std::numbers::pi / 2};
    bool svg{true};

    /// Mode defaults: transfer starts from the NV superposition with
    /// n_a = n_b = 2 fixed; entangle starts from the ground state with auto
    /// truncation from 20.
    static ScenarioConfig defaults(Mode mode);

    /// Throws ConfigError.
    void validate() const;
};

/// Output names understood by run_scenario.
const std::vector<std::string>& known_outputs();

struct Peak {
    double value{0.0};
    double time{0.0};
};

/// One step of an auto-truncation scan.
struct TruncationStep {
    std::size_t n{0};
    std::map<std::string, double> metrics;  // peak values and occupation maxima
    double top_population{0.0};             // max over modes and samples
    double max_change{0.0};                 // relative change from the previous step
    double seconds{0.0};
};

struct ScenarioResult {
    ScenarioConfig config;  // with the truncation actually used
    TimeSeries series;
    std::map<std::string, Peak> peaks;  // per output column
    std::vector<TruncationStep> truncation_scan;
    bool converged{true};
    double top_population{0.0};
    bool truncation_warning{false};  // top Fock population above kTopLevelWarning; never set in transfer mode
    std::vector<std::filesystem::path> files;
};

/// Builds the model, propagates and, with `out_dir`, writes <name>.csv and
/// optionally <name>.svg. Throws ConfigError, TruncationError.
ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& out_dir = {});

enum class Reduction { peak_value, peak_time, full_curves };

struct SweepConfig {
    ScenarioConfig base;
    std::string axis;  // a ModelParams field name
    std::vector<double> values;
    Reduction reduction{Reduction::peak_value};

    void validate() const;
};

struct SweepResult {
    SweepConfig config;
    std::vector<double> values;  // sorted
    std::vector<ScenarioResult> runs;
    std::vector<std::filesystem::path> files;
};

/// Members run concurrently; output order is by axis value.
SweepResult run_sweep(const SweepConfig& cfg, const std::optional<std::filesystem::path>& out_dir = {});

/// Sets a ModelParams field by name. Throws ConfigError for unknown names.
void set_param(ModelParams& p, const std::string& name, double value);
double get_param(const ModelParams& p, const std::string& name);

// ---------------------------------------------------------------------------
// Checks and reports
// ---------------------------------------------------------------------------

struct Check {
    std::string name;
    bool pass{false};
    std::string detail;
};

struct Report {
    std::string title;
    std::vector<Check> checks;
    std::vector<std::string> notes;
    std::vector<std::filesystem::path> files;

    bool pass() const;
    std::string text() const;
};

/// Member runs of a figure, one per curve.
std::vector<ScenarioConfig> figure_scenarios(const std::string& id);

struct FigureResult {
    Report report;
    std::vector<ScenarioResult> runs;  // same order as figure_scenarios(id)
};
FigureResult run_figure(const std::string& id, const std::optional<std::filesystem::path>& out_dir = {});

/// fig2, fig3, fig4 or fig5 with their parameter sets baked in.
Report reproduce_figure(const std::string& id, const std::optional<std::filesystem::path>& out_dir = {});
const std::vector<std::string>& figure_ids();

/// rwa, adiabatic or oracle.
Report validate_study(const std::string& study, const std::optional<std::filesystem::path>& out_dir = {});
const std::vector<std::string>& study_ids();

struct AdiabaticRun {
    double measured_frequency{0.0};  // angular frequency of the |1,0> population
    double expected_frequency{0.0};  // 2 g1
    double max_excited_population{0.0};
    double excited_bound{0.0};       // 4 (max(Omega, g_e0) / delta_e)^2
};
/// Closed-system propagation of the Lambda model from |1, 0>.
AdiabaticRun adiabatic_run(const PhysicalParams& p, bool stark_compensation, std::size_t n_cav = 3);

struct RwaPoint {
    double omega_b{0.0};
    double sup_distance{0.0};
};
/// Sup distance between the fidelity (transfer) or concurrence (entangle)
/// curves of the full and rotating-wave models over g t in [0, t_final].
std::vector<RwaPoint> rwa_scan(Mode mode, const std::vector<double>& omegas, std::size_t n, double t_final = 5.0);

/// Coupling calculator. `g_ref` (rad/s) sets the unit for the dimensionless
/// column; zero means g1 itself.
Report couplings_report(const PhysicalParams& p, double g_ref = 0.0);

}  // namespace nvsc
