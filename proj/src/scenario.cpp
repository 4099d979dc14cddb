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

#include "nvsc/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <set>
#include <sstream>
#include <thread>
#include <utility>

#include "nvsc/io.hpp"
#include "nvsc/observables.hpp"

namespace nvsc {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v, int digits = 4) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

template <typename F>
void prefixed(const std::string& prefix, F&& f) {
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(prefix + "." + e.what());
    }
}

bool health_output(const std::string& name) { return name == "hermiticity" || name == "min_eigenvalue"; }

bool series_output(const std::string& name) { return name == "trace" || name == "purity" || health_output(name); }

/// Runs f(0..count-1) on a small thread pool; results keep index order.
template <typename T, typename F>
std::vector<T> parallel_map(std::size_t count, F&& f) {
    std::vector<T> out(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                out[i] = f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

Peak find_peak(const std::vector<double>& t, const std::vector<double>& y) {
    Peak p{-std::numeric_limits<double>::infinity(), 0.0};
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] > p.value) p = {y[i], t[i]};
    }
    return p;
}

ComplexVector initial_vector(const ScenarioConfig& cfg, const SystemLayout& layout) {
    const auto dim = static_cast<Eigen::Index>(layout.total_dim());
    ComplexVector psi = ComplexVector::Zero(dim);
    switch (cfg.initial.kind) {
        case InitialState::Kind::all_ground: psi(0) = 1.0; break;
        case InitialState::Kind::nv_superposition: {
            const std::vector<std::size_t> excited{1, 0, 0, 0};
            psi(0) = std::cos(cfg.params.theta);
            psi(static_cast<Eigen::Index>(layout.index(excited))) = std::sin(cfg.params.theta);
            break;
        }
        case InitialState::Kind::explicit_vector:
            if (cfg.initial.amplitudes.size() != layout.total_dim()) {
                throw ConfigError("initial.amplitudes: expected " + std::to_string(layout.total_dim()) + " entries");
            }
            for (Eigen::Index i = 0; i < dim; ++i) psi(i) = cfg.initial.amplitudes[static_cast<std::size_t>(i)];
            break;
    }
    return psi;
}

std::vector<Observer> make_observers(const ScenarioConfig& cfg) {
    std::vector<std::string> names;
    for (const auto& o : cfg.outputs) {
        if (!series_output(o)) names.push_back(o);
    }
    for (const char* extra : {"n_opt", "n_mw", "top_opt", "top_mw"}) {
        if (std::find(names.begin(), names.end(), extra) == names.end()) names.emplace_back(extra);
    }

    const auto target = QubitPureState::from_angle(cfg.params.theta, cfg.target_phase);
    std::vector<Observer> obs;
    for (const auto& name : names) {
        std::function<double(const StateView&)> f;
        if (name == "fidelity") {
            f = [target](const StateView& v) {
                const std::vector<std::string> keep{"sc"};
                return transfer_fidelity(v.reduced(keep), target);
            };
        } else if (name == "concurrence") {
            f = [](const StateView& v) {
                const std::vector<std::string> keep{"nv", "sc"};
                return concurrence(v.reduced(keep));
            };
        } else if (name == "n_opt" || name == "n_mw" || name == "top_opt" || name == "top_mw") {
            const std::string label = name.ends_with("opt") ? "opt" : "mw";
            const bool top = name.starts_with("top");
            f = [label, top](const StateView& v) {
                const std::vector<std::string> keep{label};
                const auto occ = mode_occupation(v.reduced(keep), label);
                return top ? occ.top_population : occ.mean;
            };
        } else if (name == "p_nv" || name == "p_sc") {
            const std::string label = name.substr(2);
            f = [label](const StateView& v) {
                const std::vector<std::string> keep{label};
                return v.reduced(keep).matrix()(1, 1).real();
            };
        }
        obs.push_back({name, std::move(f)});
    }
    return obs;
}

ScenarioResult run_fixed(const ScenarioConfig& cfg) {
    const auto layout = SystemLayout::canonical(cfg.params.n_a, cfg.params.n_b);
    const ComplexVector psi = initial_vector(cfg, layout);
    EvolutionSpec spec = cfg.evolution;
    for (const auto& o : cfg.outputs) {
        if (health_output(o)) spec.record_health = true;
    }
    const auto observers = make_observers(cfg);

    ScenarioResult r;
    r.config = cfg;
    switch (cfg.mode) {
        case Mode::transfer: r.series = propagate_rk4(psi, h_transfer(cfg.params, layout), spec, observers); break;
        case Mode::entangle: r.series = propagate_rk4(psi, h_entangle(cfg.params, layout), spec, observers); break;
        case Mode::total_timedep: r.series = propagate_timedep(psi, layout, cfg.params, spec, observers); break;
    }
    for (const auto& o : cfg.outputs) r.peaks[o] = find_peak(r.series.times, r.series.column(o));
    for (const char* top : {"top_opt", "top_mw"}) {
        for (double v : r.series.column(top)) r.top_population = std::max(r.top_population, v);
    }
    // Transfer dynamics never leave the one-excitation sector, so n = 2 is exact.
    r.truncation_warning = cfg.mode != Mode::transfer && r.top_population > kTopLevelWarning;
    return r;
}

std::map<std::string, double> convergence_metrics(const ScenarioResult& r) {
    std::map<std::string, double> m;
    for (const auto& o : r.config.outputs) {
        if (!series_output(o) && !o.starts_with("top_")) m[o] = r.peaks.at(o).value;
    }
    for (const char* occ : {"n_opt", "n_mw"}) m[occ] = find_peak(r.series.times, r.series.column(occ)).value;
    return m;
}

double relative_change(double before, double after) { return std::abs(after - before) / std::max(std::abs(before), 1e-6); }

ScenarioResult run_auto(const ScenarioConfig& cfg) {
    const auto& policy = cfg.truncation;
    std::vector<TruncationStep> scan;
    std::map<std::string, double> previous;
    for (std::size_t n = policy.start;; n += policy.step) {
        ScenarioConfig member = cfg;
        member.params.n_a = member.params.n_b = n;
        const auto start = std::chrono::steady_clock::now();
        ScenarioResult r = run_fixed(member);
        TruncationStep step;
        step.n = n;
        step.metrics = convergence_metrics(r);
        step.top_population = r.top_population;
        step.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        step.max_change = std::numeric_limits<double>::infinity();
        if (!previous.empty()) {
            step.max_change = 0.0;
            for (const auto& [name, value] : step.metrics) {
                step.max_change = std::max(step.max_change, relative_change(previous.at(name), value));
            }
        }
        const bool converged = step.max_change <= policy.tolerance && r.top_population <= kTopLevelWarning;
        previous = step.metrics;
        scan.push_back(std::move(step));
        if (converged || n + policy.step > policy.max) {
            r.truncation_scan = std::move(scan);
            r.converged = converged;
            if (!converged && !policy.allow_unconverged) {
                const auto& last = r.truncation_scan.back();
                throw TruncationError("truncation: no convergence up to n = " + std::to_string(n) +
                                      " (last relative change " + fmt(last.max_change) + ", tolerance " +
                                      fmt(policy.tolerance) + "; top Fock population " + fmt(last.top_population) +
                                      ", threshold " + fmt(kTopLevelWarning) + ")");
            }
            return r;
        }
    }
}

Table truncation_table(const std::vector<TruncationStep>& scan) {
    Table t;
    t.header.push_back("n");
    for (const auto& [name, value] : scan.front().metrics) {
        (void)value;
        t.header.push_back(name + "_max");
    }
    t.header.emplace_back("top_population");
    t.header.emplace_back("max_change");
    for (const auto& s : scan) {
        std::vector<double> row{static_cast<double>(s.n)};
        for (const auto& [name, value] : s.metrics) {
            (void)name;
            row.push_back(value);
        }
        row.push_back(s.top_population);
        row.push_back(s.max_change);
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::vector<Curve> table_curves(const Table& t) {
    std::vector<Curve> curves;
    const auto x = t.column(t.header.front());
    for (std::size_t k = 1; k < t.header.size(); ++k) curves.push_back({t.header[k], x, t.column(t.header[k])});
    return curves;
}

std::filesystem::path emit(const std::filesystem::path& dir, const std::string& file, const std::string& contents,
                           std::vector<std::filesystem::path>& files) {
    const auto path = dir / file;
    write_file(path, contents);
    files.push_back(path);
    return path;
}

void emit_table(const std::filesystem::path& dir, const std::string& stem, const Table& t, bool svg,
                const std::string& title, const std::string& y_label, std::vector<std::filesystem::path>& files) {
    emit(dir, stem + ".csv", format_csv(t), files);
    if (svg) emit(dir, stem + ".svg", render_svg(title, t.header.front(), y_label, table_curves(t)), files);
}

void write_scenario_files(ScenarioResult& r, const std::filesystem::path& dir) {
    const auto& cfg = r.config;
    emit_table(dir, cfg.name, make_table(r.series, cfg.outputs), cfg.svg, cfg.name, "value", r.files);
    if (!r.truncation_scan.empty()) emit(dir, cfg.name + "_truncation.csv", format_csv(truncation_table(r.truncation_scan)), r.files);
}

struct ParamField {
    const char* name;
    double ModelParams::*field;
};

constexpr ParamField kParamFields[] = {
    {"g1", &ModelParams::g1},         {"g2", &ModelParams::g2},         {"gi_lin", &ModelParams::gi_lin},
    {"kappa1", &ModelParams::kappa1}, {"kappa2", &ModelParams::kappa2}, {"gamma1", &ModelParams::gamma1},
    {"gamma2", &ModelParams::gamma2}, {"omega_b", &ModelParams::omega_b}, {"delta", &ModelParams::delta},
    {"theta", &ModelParams::theta},
};

bool is_truncation_axis(const std::string& name) { return name == "n_a" || name == "n_b"; }

std::string member_label(const std::string& axis, double v) { return axis + "=" + format_value(v); }

}  // namespace

// ---------------------------------------------------------------------------
// Scenario configs
// ---------------------------------------------------------------------------

ScenarioConfig ScenarioConfig::defaults(Mode mode) {
    ScenarioConfig c;
    c.mode = mode;
    switch (mode) {
        case Mode::transfer:
            c.name = "transfer";
            c.initial.kind = InitialState::Kind::nv_superposition;
            c.outputs = {"fidelity"};
            break;
        case Mode::entangle:
            c.name = "entangle";
            c.params.gi_lin = 0.5;
            c.initial.kind = InitialState::Kind::all_ground;
            c.outputs = {"concurrence", "n_opt", "n_mw"};
            c.truncation.automatic = true;
            c.params.n_a = c.params.n_b = c.truncation.start;
            break;
        case Mode::total_timedep:
            c.name = "total_timedep";
            c.initial.kind = InitialState::Kind::nv_superposition;
            c.params.delta = c.params.omega_b;
            c.params.n_a = c.params.n_b = 3;
            c.evolution.dt = 4e-4;
            c.evolution.record_stride = 25;
            c.outputs = {"fidelity"};
            break;
    }
    return c;
}

void ScenarioConfig::validate() const {
    const bool name_ok = !name.empty() && std::all_of(name.begin(), name.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
    });
    if (!name_ok) throw ConfigError("name: must be non-empty and use only letters, digits, '_', '-' or '.'");
    prefixed("params", [&] { params.validate(); });
    prefixed("evolution", [&] { evolution.validate(); });

    if (outputs.empty()) throw ConfigError("outputs: at least one observable is required");
    std::set<std::string> seen;
    const auto& known = known_outputs();
    for (std::size_t k = 0; k < outputs.size(); ++k) {
        const auto path = "outputs[" + std::to_string(k) + "]";
        if (std::find(known.begin(), known.end(), outputs[k]) == known.end()) {
            throw ConfigError(path + ": unknown observable '" + outputs[k] + "'");
        }
        if (!seen.insert(outputs[k]).second) throw ConfigError(path + ": duplicate observable '" + outputs[k] + "'");
    }

    if (mode == Mode::transfer && initial.kind != InitialState::Kind::nv_superposition) {
        throw ConfigError("initial.kind: transfer mode requires nv_superposition");
    }
    if (initial.kind == InitialState::Kind::explicit_vector) {
        if (truncation.automatic) throw ConfigError("truncation.policy: an explicit initial state requires fixed truncation");
        const std::size_t dim = 4 * params.n_a * params.n_b;
        if (initial.amplitudes.size() != dim) {
            throw ConfigError("initial.amplitudes: expected " + std::to_string(dim) + " entries for n_a = " +
                              std::to_string(params.n_a) + ", n_b = " + std::to_string(params.n_b) + ", got " +
                              std::to_string(initial.amplitudes.size()));
        }
        double norm = 0.0;
        for (const auto& a : initial.amplitudes) {
            if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) throw ConfigError("initial.amplitudes: must be finite");
            norm += std::norm(a);
        }
        if (std::abs(norm - 1.0) > 1e-8) throw ConfigError("initial.amplitudes: must be normalized (norm^2 = " + fmt(norm, 10) + ")");
    } else if (!initial.amplitudes.empty()) {
        throw ConfigError("initial.amplitudes: only allowed with kind explicit");
    }

    if (truncation.automatic) {
        if (truncation.start < 2) throw ConfigError("truncation.start: must be >= 2");
        if (truncation.step < 1) throw ConfigError("truncation.step: must be >= 1");
        if (truncation.max < truncation.start) throw ConfigError("truncation.max: must be >= truncation.start");
        if (!(truncation.tolerance > 0.0) || !std::isfinite(truncation.tolerance)) {
            throw ConfigError("truncation.tolerance: must be finite and > 0");
        }
    }
    if (mode == Mode::total_timedep && params.omega_b > 0.0 && evolution.dt > 0.02 / params.omega_b * (1.0 + 1e-12)) {
        throw ConfigError("evolution.dt: must be <= 0.02 / omega_b = " + fmt(0.02 / params.omega_b, 6));
    }
    if (!std::isfinite(target_phase)) throw ConfigError("target_phase: must be finite");
}

const std::vector<std::string>& known_outputs() {
    static const std::vector<std::string> names{"fidelity", "concurrence", "n_opt",    "n_mw",        "top_opt",
                                                "top_mw",   "p_nv",        "p_sc",     "trace",       "purity",
                                                "hermiticity", "min_eigenvalue"};
    return names;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& out_dir) {
    cfg.validate();
    ScenarioResult r = cfg.truncation.automatic ? run_auto(cfg) : run_fixed(cfg);
    if (out_dir) write_scenario_files(r, *out_dir);
    return r;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

void set_param(ModelParams& p, const std::string& name, double value) {
    for (const auto& f : kParamFields) {
        if (name == f.name) {
            p.*f.field = value;
            return;
        }
    }
    if (is_truncation_axis(name)) {
        if (!(value >= 2.0) || value != std::floor(value) || value > 1e6) {
            throw ConfigError(name + ": truncation must be an integer >= 2");
        }
        (name == "n_a" ? p.n_a : p.n_b) = static_cast<std::size_t>(value);
        return;
    }
    throw ConfigError("axis: unknown parameter '" + name + "'");
}

double get_param(const ModelParams& p, const std::string& name) {
    for (const auto& f : kParamFields) {
        if (name == f.name) return p.*f.field;
    }
    if (name == "n_a") return static_cast<double>(p.n_a);
    if (name == "n_b") return static_cast<double>(p.n_b);
    throw ConfigError("axis: unknown parameter '" + name + "'");
}

void SweepConfig::validate() const {
    try {
        base.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("base.") + e.what());
    }
    (void)get_param(base.params, axis);
    if (values.empty()) throw ConfigError("values: at least one value is required");
    std::set<double> seen;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const auto path = "values[" + std::to_string(k) + "]";
        if (!std::isfinite(values[k])) throw ConfigError(path + ": must be finite");
        if (!seen.insert(values[k]).second) throw ConfigError(path + ": duplicate value " + format_value(values[k]));
        ScenarioConfig member = base;
        try {
            set_param(member.params, axis, values[k]);
            member.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(path + ": " + e.what());
        }
    }
    if (is_truncation_axis(axis) && base.truncation.automatic) {
        throw ConfigError("axis: sweeping " + axis + " requires fixed truncation");
    }
}

SweepResult run_sweep(const SweepConfig& cfg, const std::optional<std::filesystem::path>& out_dir) {
    cfg.validate();
    SweepResult out;
    out.config = cfg;
    out.values = cfg.values;
    std::sort(out.values.begin(), out.values.end());
    out.runs = parallel_map<ScenarioResult>(out.values.size(), [&](std::size_t i) {
        ScenarioConfig member = cfg.base;
        set_param(member.params, cfg.axis, out.values[i]);
        member.name = cfg.base.name + "_" + cfg.axis + "_" + format_value(out.values[i]);
        return run_scenario(member);
    });
    if (!out_dir) return out;

    const auto& outputs = cfg.base.outputs;
    Table t;
    std::string y_label = "peak value";
    if (cfg.reduction == Reduction::full_curves) {
        y_label = "value";
        t.header.emplace_back("t_g");
        for (const auto& o : outputs) {
            for (double v : out.values) t.header.push_back(o + "_" + member_label(cfg.axis, v));
        }
        const auto& times = out.runs.front().series.times;
        for (std::size_t s = 0; s < times.size(); ++s) {
            std::vector<double> row{times[s]};
            for (const auto& o : outputs) {
                for (const auto& r : out.runs) {
                    const auto& series = r.series;
                    if (series.times.size() != times.size()) throw std::logic_error("sweep members have different time grids");
                    row.push_back(series.rows[s][series.column_index(o)]);
                }
            }
            t.rows.push_back(std::move(row));
        }
    } else {
        const bool time = cfg.reduction == Reduction::peak_time;
        if (time) y_label = "peak time (g t)";
        t.header.push_back(cfg.axis);
        for (const auto& o : outputs) t.header.push_back(time ? o + "_time" : o);
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            std::vector<double> row{out.values[i]};
            for (const auto& o : outputs) {
                const auto& p = out.runs[i].peaks.at(o);
                row.push_back(time ? p.time : p.value);
            }
            t.rows.push_back(std::move(row));
        }
    }
    emit_table(*out_dir, cfg.base.name + "_sweep", t, cfg.base.svg, cfg.base.name + " over " + cfg.axis, y_label, out.files);
    return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

bool Report::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::string Report::text() const {
    std::ostringstream s;
    s << title << "\n";
    for (const auto& c : checks) s << "  " << (c.pass ? "PASS" : "FAIL") << "  " << c.name << ": " << c.detail << "\n";
    for (const auto& n : notes) s << "  note: " << n << "\n";
    for (const auto& f : files) s << "  wrote " << f.string() << "\n";
    s << "  result: " << (pass() ? "PASS" : "FAIL") << "\n";
    return s.str();
}

namespace {

Check within(const std::string& name, double measured, double expected, double tol) {
    const bool ok = std::abs(measured - expected) <= tol;
    return {name, ok, fmt(measured) + " (expected " + fmt(expected) + " +/- " + fmt(tol) + ")"};
}

struct FigureMember {
    std::string label;
    ScenarioConfig config;
};

ScenarioConfig fixed_entangle(const std::string& name, std::size_t n) {
    ScenarioConfig c = ScenarioConfig::defaults(Mode::entangle);
    c.name = name;
    c.outputs = {"concurrence"};
    c.truncation.automatic = false;
    c.params.n_a = c.params.n_b = n;
    return c;
}

// Concurrence peaks move by about 1e-3 between n = 20 and n = 25.
constexpr std::size_t kFigureTruncation = 20;

std::vector<FigureMember> figure_members(const std::string& id) {
    std::vector<FigureMember> m;
    if (id == "fig2") {
        for (double g : {0.5, 1.0, 1.5}) {
            ScenarioConfig c = ScenarioConfig::defaults(Mode::transfer);
            c.name = "fig2_G_" + format_value(g);
            c.params.gi_lin = g;
            m.push_back({"G=" + format_value(g), c});
        }
    } else if (id == "fig3") {
        ScenarioConfig c = ScenarioConfig::defaults(Mode::entangle);
        c.name = "fig3";
        c.params.gi_lin = 0.5;
        c.truncation = {true, 20, 5, 30, 0.05, true};
        m.push_back({"", c});
    } else if (id == "fig4") {
        for (double g2 : {0.5, 0.75, 1.0, 1.25, 1.5}) {
            ScenarioConfig c = fixed_entangle("fig4_g2_" + format_value(g2), kFigureTruncation);
            c.params.g2 = g2;
            m.push_back({"g2=" + format_value(g2), c});
        }
    } else if (id == "fig5") {
        m.push_back({"small", fixed_entangle("fig5_small", kFigureTruncation)});
        ScenarioConfig large = fixed_entangle("fig5_large", kFigureTruncation);
        large.params.kappa1 = 0.3;
        large.params.gamma1 = large.params.kappa2 = large.params.gamma2 = 0.03;
        m.push_back({"large", large});
    } else {
        throw ConfigError("figure: unknown id '" + id + "' (expected fig2, fig3, fig4 or fig5)");
    }
    return m;
}

Table combined_table(const std::vector<FigureMember>& members, const std::vector<ScenarioResult>& runs) {
    if (members.size() == 1) return make_table(runs.front().series, members.front().config.outputs);
    Table t;
    t.header.emplace_back("t_g");
    for (const auto& m : members) {
        for (const auto& o : m.config.outputs) t.header.push_back(o + "_" + m.label);
    }
    const auto& times = runs.front().series.times;
    for (std::size_t s = 0; s < times.size(); ++s) {
        std::vector<double> row{times[s]};
        for (std::size_t k = 0; k < members.size(); ++k) {
            for (const auto& o : members[k].config.outputs) row.push_back(runs[k].series.rows[s][runs[k].series.column_index(o)]);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string peak_text(const Peak& p) { return fmt(p.value) + " at g t = " + fmt(p.time); }

void fig2_checks(const std::vector<FigureMember>& members, const std::vector<ScenarioResult>& runs, Report& rep) {
    const auto& main = runs[1].peaks.at("fidelity");
    rep.checks.push_back(within("peak fidelity at G = g", main.value, 0.94, 0.02));
    rep.checks.push_back(within("peak time at G = g", main.time, 2.98, 0.1));
    std::size_t nearest = 0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& p = runs[k].peaks.at("fidelity");
        rep.notes.push_back(members[k].label + ": peak fidelity " + peak_text(p));
        if (std::abs(p.value - 0.94) < std::abs(runs[nearest].peaks.at("fidelity").value - 0.94)) nearest = k;
    }
    rep.notes.push_back("curve whose peak is nearest 0.94: " + members[nearest].label);
}

void fig3_checks(const std::vector<ScenarioResult>& runs, Report& rep) {
    const auto& r = runs.front();
    const auto& c = r.peaks.at("concurrence");
    rep.checks.push_back(within("peak concurrence", c.value, 0.77, 0.02));
    rep.checks.push_back(within("peak time", c.time, 2.92, 0.1));
    const auto& scan = r.truncation_scan;
    if (scan.size() >= 2) {
        const double change = relative_change(scan[scan.size() - 2].metrics.at("concurrence"), scan.back().metrics.at("concurrence"));
        rep.checks.push_back({"concurrence peak converged in truncation", change <= r.config.truncation.tolerance,
                              "relative change " + fmt(change) + " from n = " + std::to_string(scan[scan.size() - 2].n) +
                                  " to " + std::to_string(scan.back().n)});
    } else {
        rep.checks.push_back({"concurrence peak converged in truncation", false, "needs at least two truncation steps"});
    }
    rep.notes.push_back("max n_opt " + peak_text(r.peaks.at("n_opt")) + ", max n_mw " + peak_text(r.peaks.at("n_mw")));
    for (const auto& s : scan) {
        rep.notes.push_back("n = " + std::to_string(s.n) + ": concurrence " + fmt(s.metrics.at("concurrence"), 6) + ", n_opt " +
                            fmt(s.metrics.at("n_opt"), 6) + ", n_mw " + fmt(s.metrics.at("n_mw"), 6) + ", top population " +
                            fmt(s.top_population, 3) + ", change " + fmt(s.max_change, 3));
    }
    rep.notes.push_back(r.converged ? "auto truncation converged" : "auto truncation did not converge within its ceiling");
}

void fig4_checks(const std::vector<FigureMember>& members, const std::vector<ScenarioResult>& runs, Report& rep) {
    std::vector<double> peaks;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        peaks.push_back(runs[k].peaks.at("concurrence").value);
        rep.notes.push_back(members[k].label + ": peak concurrence " + peak_text(runs[k].peaks.at("concurrence")));
    }
    // members: g2 = 0.5, 0.75, 1, 1.25, 1.5
    const bool ok = peaks[2] > peaks[0] && peaks[2] > peaks[4];
    rep.checks.push_back({"peak at g2 = g exceeds g2 = 0.5 g and 1.5 g", ok,
                          fmt(peaks[2], 6) + " vs " + fmt(peaks[0], 6) + " and " + fmt(peaks[4], 6)});
}

void fig5_checks(const std::vector<ScenarioResult>& runs, Report& rep) {
    const auto& small = runs[0].peaks.at("concurrence");
    const auto& large = runs[1].peaks.at("concurrence");
    rep.checks.push_back(within("large decay peak concurrence", large.value, 0.65, 0.02));
    rep.checks.push_back(within("large decay peak time", large.time, 2.62, 0.15));
    const double diff = std::abs(small.time - large.time);
    rep.checks.push_back({"peak time shift between small and large decay", diff <= 0.5, fmt(diff) + " (limit 0.5)"});
    rep.notes.push_back("small decay: peak " + peak_text(small));
    rep.notes.push_back("large decay: peak " + peak_text(large));
}

const char* figure_title(const std::string& id) {
    if (id == "fig2") return "Transfer fidelity for several G_i";
    if (id == "fig3") return "Concurrence and occupations, G_i = 0.5 g";
    if (id == "fig4") return "Concurrence for several g2";
    return "Concurrence, small and large decay";
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
    const ComplexMatrix d = a - b;
    const auto eig = herm_eig(0.5 * (d + d.adjoint()));
    double s = 0.0;
    for (double v : eig.values) s += std::abs(v);
    return s;
}

}  // namespace

std::vector<ScenarioConfig> figure_scenarios(const std::string& id) {
    std::vector<ScenarioConfig> out;
    for (auto& m : figure_members(id)) out.push_back(std::move(m.config));
    return out;
}

FigureResult run_figure(const std::string& id, const std::optional<std::filesystem::path>& out_dir) {
    const auto members = figure_members(id);
    FigureResult fr;
    fr.runs = parallel_map<ScenarioResult>(members.size(), [&](std::size_t i) { return run_scenario(members[i].config); });
    auto& rep = fr.report;
    rep.title = id + ": " + figure_title(id);
    if (id == "fig2") fig2_checks(members, fr.runs, rep);
    if (id == "fig3") fig3_checks(fr.runs, rep);
    if (id == "fig4") fig4_checks(members, fr.runs, rep);
    if (id == "fig5") fig5_checks(fr.runs, rep);
    for (const auto& r : fr.runs) {
        if (r.truncation_warning) {
            rep.notes.push_back(r.config.name + ": top Fock population " + fmt(r.top_population, 3) + " exceeds " +
                                fmt(kTopLevelWarning, 1));
        }
    }
    if (out_dir) {
        const Table t = combined_table(members, fr.runs);
        emit_table(*out_dir, id, t, true, rep.title, id == "fig2" ? "fidelity" : "value", rep.files);
        for (const auto& r : fr.runs) {
            if (!r.truncation_scan.empty()) {
                emit(*out_dir, id + "_truncation.csv", format_csv(truncation_table(r.truncation_scan)), rep.files);
            }
        }
    }
    return fr;
}

Report reproduce_figure(const std::string& id, const std::optional<std::filesystem::path>& out_dir) {
    return run_figure(id, out_dir).report;
}

const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"fig2", "fig3", "fig4", "fig5"};
    return ids;
}

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

AdiabaticRun adiabatic_run(const PhysicalParams& p, bool stark_compensation, std::size_t n_cav) {
    const auto eff = g1_effective(p);
    if (eff.g1 == 0.0) throw std::invalid_argument("omega_rabi: the Raman coupling vanishes");
    AdiabaticRun out;
    out.expected_frequency = 2.0 * std::abs(eff.g1);
    out.excited_bound = 4.0 * eff.validity_ratio * eff.validity_ratio;

    const auto h = lambda_full_model(p, n_cav, stark_compensation);
    const auto eig = herm_eig(to_dense(h.hamiltonian));
    const std::vector<std::size_t> start_digits{1, 0};
    const auto start = static_cast<Eigen::Index>(h.layout.index(start_digits));
    const auto dim = static_cast<Eigen::Index>(h.layout.total_dim());
    const ComplexVector coeff = eig.vectors.row(start).adjoint();
    std::vector<bool> excited(static_cast<std::size_t>(dim));
    for (Eigen::Index j = 0; j < dim; ++j) excited[static_cast<std::size_t>(j)] = h.layout.digits(static_cast<std::size_t>(j))[0] == 2;

    // Sample finely against the fast detuning over three quarters of the
    // expected slow period, which holds exactly one slow minimum.
    const double dt = 2.0 * kPi / std::abs(p.delta_e) / 40.0;
    const auto count = static_cast<std::size_t>(std::ceil(0.75 * 2.0 * kPi / out.expected_frequency / dt));
    std::vector<double> pop(count + 1);
    ComplexVector phased(dim);
    for (std::size_t s = 0; s <= count; ++s) {
        const double t = dt * static_cast<double>(s);
        for (Eigen::Index k = 0; k < dim; ++k) phased(k) = std::polar(1.0, -eig.values[static_cast<std::size_t>(k)] * t) * coeff(k);
        const ComplexVector amp = eig.vectors * phased;
        pop[s] = std::norm(amp(start));
        for (Eigen::Index j = 0; j < dim; ++j) {
            if (excited[static_cast<std::size_t>(j)]) out.max_excited_population = std::max(out.max_excited_population, std::norm(amp(j)));
        }
    }
    const auto it = std::min_element(pop.begin() + 1, pop.end() - 1);
    const auto i = static_cast<std::size_t>(it - pop.begin());
    const double denom = pop[i - 1] - 2.0 * pop[i] + pop[i + 1];
    const double shift = denom > 0.0 ? 0.5 * (pop[i - 1] - pop[i + 1]) / denom : 0.0;
    const double t_min = (static_cast<double>(i) + shift) * dt;
    out.measured_frequency = kPi / t_min;
    return out;
}

std::vector<RwaPoint> rwa_scan(Mode mode, const std::vector<double>& omegas, std::size_t n, double t_final) {
    if (mode == Mode::total_timedep) throw std::invalid_argument("mode: the RWA scan compares transfer or entangle");
    ScenarioConfig base = ScenarioConfig::defaults(mode);
    const std::string column = mode == Mode::transfer ? "fidelity" : "concurrence";
    base.outputs = {column};
    base.truncation.automatic = false;
    base.params.n_a = base.params.n_b = n;
    base.evolution.t_final = t_final;
    base.evolution.dt = 1e-3;
    base.evolution.record_stride = 10;

    std::vector<ScenarioConfig> configs{base};
    for (double w : omegas) {
        ScenarioConfig c = base;
        c.mode = Mode::total_timedep;
        c.params.omega_b = w;
        c.params.delta = mode == Mode::transfer ? w : -w;
        const double k = std::ceil(w / 2.0);
        c.evolution.dt = 0.01 / k;
        c.evolution.record_stride = static_cast<std::size_t>(k);
        configs.push_back(c);
    }
    const auto runs = parallel_map<ScenarioResult>(configs.size(), [&](std::size_t i) { return run_scenario(configs[i]); });

    const auto& ref = runs.front().series;
    const auto ref_y = ref.column(column);
    std::vector<RwaPoint> out;
    for (std::size_t k = 0; k < omegas.size(); ++k) {
        const auto& s = runs[k + 1].series;
        if (s.times.size() != ref.times.size()) throw std::logic_error("rwa_scan: sample grids differ");
        const auto y = s.column(column);
        double sup = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) sup = std::max(sup, std::abs(y[i] - ref_y[i]));
        out.push_back({omegas[k], sup});
    }
    return out;
}

namespace {

Report rwa_study(const std::optional<std::filesystem::path>& out_dir) {
    Report rep;
    rep.title = "rwa: full linearized model against the rotating-wave models";
    const std::vector<double> omegas{10.0, 25.0, 50.0};
    const auto transfer = rwa_scan(Mode::transfer, omegas, 3);
    const auto entangle = rwa_scan(Mode::entangle, omegas, 3);
    bool monotone = true;
    std::string detail;
    for (std::size_t k = 0; k < transfer.size(); ++k) {
        if (k > 0 && !(transfer[k].sup_distance < transfer[k - 1].sup_distance)) monotone = false;
        detail += (k ? ", " : "") + fmt(transfer[k].sup_distance, 3) + " at " + format_value(transfer[k].omega_b) + " g";
    }
    rep.checks.push_back({"transfer sup distance decreases with omega_b", monotone, detail});
    rep.checks.push_back({"transfer sup distance at omega_b = 50 g", transfer.back().sup_distance <= 0.05,
                          fmt(transfer.back().sup_distance, 3) + " (limit 0.05)"});
    std::string ent;
    for (std::size_t k = 0; k < entangle.size(); ++k) {
        ent += (k ? ", " : "") + fmt(entangle[k].sup_distance, 3) + " at " + format_value(entangle[k].omega_b) + " g";
    }
    rep.notes.push_back("entangle (delta = -omega_b) concurrence sup distance: " + ent);
    rep.notes.push_back("truncation n_a = n_b = 3; g t in [0, 5]; dissipators identical in both models");
    if (out_dir) {
        Table t;
        t.header = {"omega_b", "transfer_sup_distance", "entangle_sup_distance"};
        for (std::size_t k = 0; k < omegas.size(); ++k) t.rows.push_back({omegas[k], transfer[k].sup_distance, entangle[k].sup_distance});
        emit_table(*out_dir, "rwa", t, true, "Rotating-wave error", "sup distance", rep.files);
    }
    return rep;
}

Report adiabatic_study() {
    Report rep;
    rep.title = "adiabatic: Lambda model against the effective Raman coupling";
    PhysicalParams p;
    p.omega_rabi = 0.6;
    p.g_e0 = 1.0;
    p.delta_e = 50.0;
    const auto on = adiabatic_run(p, true);
    const auto off = adiabatic_run(p, false);
    const double err_on = std::abs(on.measured_frequency / on.expected_frequency - 1.0);
    const double err_off = std::abs(off.measured_frequency / off.expected_frequency - 1.0);
    rep.checks.push_back({"Raman frequency with Stark compensation", err_on <= 0.05,
                          fmt(on.measured_frequency, 6) + " vs 2 g1 = " + fmt(on.expected_frequency, 6) + ", relative error " +
                              fmt(err_on, 3) + " (limit 0.05)"});
    rep.checks.push_back({"offset without compensation exceeds offset with it", err_off > err_on,
                          "relative error " + fmt(err_off, 3) + " without, " + fmt(err_on, 3) + " with"});
    rep.checks.push_back({"excited-state population stays small", on.max_excited_population <= on.excited_bound,
                          fmt(on.max_excited_population, 3) + " (bound " + fmt(on.excited_bound, 3) + ")"});
    rep.notes.push_back("Omega = 0.6, g_e0 = 1, delta_e = 50 (delta_e = 50 max(Omega, g_e0)); start in |1, 0>");
    rep.notes.push_back("without compensation: measured " + fmt(off.measured_frequency, 6));
    return rep;
}

Report oracle_study() {
    Report rep;
    rep.title = "oracle: RK4 at dt = 1e-3 against expm of the Liouvillian";
    for (const Mode mode : {Mode::transfer, Mode::entangle}) {
        ScenarioConfig c = ScenarioConfig::defaults(mode);
        c.truncation.automatic = false;
        c.params.n_a = c.params.n_b = mode == Mode::transfer ? 2 : 3;
        c.evolution.t_final = 3.0;
        c.evolution.record_stride = 1000;
        const auto r = run_scenario(c);
        const auto layout = SystemLayout::canonical(c.params.n_a, c.params.n_b);
        const auto rho0 = DensityMatrix::from_pure(layout, initial_vector(c, layout));
        const auto h = mode == Mode::transfer ? h_transfer(c.params, layout) : h_entangle(c.params, layout);
        const auto exact = propagate_oracle(rho0, h, c.evolution.t_final);
        const double d = trace_distance(r.series.final_state->matrix(), exact.matrix());
        rep.checks.push_back({std::string(mode == Mode::transfer ? "transfer" : "entangle") + " dimension " +
                                  std::to_string(layout.total_dim()) + " at g t = 3",
                              d <= 1e-6, "trace norm " + fmt(d, 3) + " (limit 1e-06)"});
    }
    return rep;
}

}  // namespace

Report validate_study(const std::string& study, const std::optional<std::filesystem::path>& out_dir) {
    if (study == "rwa") return rwa_study(out_dir);
    if (study == "adiabatic") return adiabatic_study();
    if (study == "oracle") return oracle_study();
    throw ConfigError("study: unknown id '" + study + "' (expected rwa, adiabatic or oracle)");
}

const std::vector<std::string>& study_ids() {
    static const std::vector<std::string> ids{"rwa", "adiabatic", "oracle"};
    return ids;
}

Report couplings_report(const PhysicalParams& p, double g_ref) {
    p.validate();
    Report rep;
    rep.title = "couplings";
    const auto eff = g1_effective(p);
    const double gi = electro_optic_rate(p);
    const double big = linearized_coupling(p);
    const double unit = g_ref > 0.0 ? g_ref : std::abs(eff.g1);
    auto line = [&](const std::string& label, double rad_per_s) {
        rep.notes.push_back(label + "/2pi = " + fmt(rad_per_s / (2.0 * kPi), 6) + " Hz = " + fmt(rad_per_s / unit, 6) + " g");
    };
    rep.notes.push_back("unit g = " + fmt(unit / (2.0 * kPi), 6) + " Hz x 2pi" + (g_ref > 0.0 ? " (given)" : " (g1)"));
    line("g1", eff.g1);
    line("g_i", gi);
    line("G_i", big);
    rep.notes.push_back("V_zpf = " + fmt(zero_point_voltage(p), 6) + " V");
    constexpr double c = 299792458.0;
    rep.notes.push_back("implied round-trip time tau = l / (c * tau_fraction) = " + fmt(p.length_l / (c * p.tau_fraction), 4) + " s");
    rep.notes.push_back("max(Omega, g_e0) / delta_e = " + fmt(eff.validity_ratio, 4));
    rep.notes.push_back("G_i / omega_b = " + fmt(big / p.omega_b, 4));
    rep.checks.push_back({"adiabatic elimination regime", eff.validity_ratio <= 0.1, "ratio " + fmt(eff.validity_ratio, 4) + " (limit 0.1)"});
    rep.checks.push_back({"rotating-wave regime", big / p.omega_b <= 0.1, "G_i / omega_b " + fmt(big / p.omega_b, 4) + " (limit 0.1)"});
    return rep;
}

}  // namespace nvsc
