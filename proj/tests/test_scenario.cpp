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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <unistd.h>

#include "nvsc/io.hpp"
#include "nvsc/observables.hpp"
#include "nvsc/scenario.hpp"
#include "test_support.hpp"

using namespace nvsc;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(NVSC_SOURCE_DIR) / "configs";

std::filesystem::path scratch_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("nvsc_test_" + std::to_string(::getpid()) + "_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string error_of(const std::string& json) {
    try {
        (void)parse_scenario(json);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

ScenarioConfig short_transfer(double t_final = 1.0) {
    ScenarioConfig c = ScenarioConfig::defaults(Mode::transfer);
    c.evolution.t_final = t_final;
    return c;
}

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("mode defaults") {
        const auto t = ScenarioConfig::defaults(Mode::transfer);
        CHECK(t.initial.kind == InitialState::Kind::nv_superposition);
        CHECK(!t.truncation.automatic);
        CHECK(t.params.n_a == 2);
        const auto e = ScenarioConfig::defaults(Mode::entangle);
        CHECK(e.initial.kind == InitialState::Kind::all_ground);
        CHECK(e.truncation.automatic);
        CHECK(e.truncation.start == 20);
        CHECK(e.truncation.step == 5);
        const auto d = ScenarioConfig::defaults(Mode::total_timedep);
        CHECK(d.evolution.dt <= 0.02 / d.params.omega_b);
        CHECK_NOTHROW(t.validate());
        CHECK_NOTHROW(e.validate());
        CHECK_NOTHROW(d.validate());
    }

    TEST_CASE("errors name the field") {
        CHECK(error_of("{").starts_with("config: not valid JSON"));
        CHECK(error_of("[]").starts_with("config: must be an object"));
        CHECK(error_of(R"({"params": {}})").starts_with("mode: is required"));
        CHECK(error_of(R"({"mode": "teleport"})").starts_with("mode: must be one of"));
        CHECK(error_of(R"({"mode": "transfer", "colour": 1})").starts_with("colour: unknown field"));
        CHECK(error_of(R"({"mode": "transfer", "params": {"g3": 1}})").starts_with("params.g3: unknown field"));
        CHECK(error_of(R"({"mode": "transfer", "params": {"kappa1": -1}})").starts_with("params.kappa1:"));
        CHECK(error_of(R"({"mode": "transfer", "params": {"kappa1": "big"}})").starts_with("params.kappa1: must be a number"));
        CHECK(error_of(R"({"mode": "transfer", "params": {"n_a": 1}})").starts_with("params.n_a:"));
        CHECK(error_of(R"({"mode": "transfer", "params": {"n_a": 2.5}})").starts_with("params.n_a: must be a non-negative integer"));
        CHECK(error_of(R"({"mode": "transfer", "initial": {"kind": "all_ground"}})").starts_with("initial.kind: transfer mode"));
        CHECK(error_of(R"({"mode": "transfer", "outputs": ["entropy"]})").starts_with("outputs[0]: unknown observable"));
        CHECK(error_of(R"({"mode": "transfer", "outputs": ["fidelity", "fidelity"]})").starts_with("outputs[1]: duplicate"));
        CHECK(error_of(R"({"mode": "transfer", "outputs": []})").starts_with("outputs: at least one"));
        CHECK(error_of(R"({"mode": "transfer", "evolution": {"dt": 0.3}})").starts_with("evolution.dt:"));
        CHECK(error_of(R"({"mode": "transfer", "evolution": {"t_final": 1.0005}})").starts_with("evolution.t_final:"));
        CHECK(error_of(R"({"mode": "entangle", "truncation": {"start": 20, "max": 10}})").starts_with("truncation.max:"));
        CHECK(error_of(R"({"mode": "entangle", "truncation": {"policy": "maybe"}})").starts_with("truncation.policy:"));
        CHECK(error_of(R"({"mode": "total_timedep", "evolution": {"dt": 0.001}})").starts_with("evolution.dt: must be <="));
        CHECK(error_of(R"({"mode": "entangle", "initial": {"kind": "explicit", "amplitudes": [1]}})")
                  .starts_with("truncation.policy: an explicit initial state"));
        CHECK(error_of(R"({"mode": "entangle", "truncation": {"policy": "fixed"}, "params": {"n_a": 2, "n_b": 2},
                           "initial": {"kind": "explicit", "amplitudes": [1, 0]}})")
                  .starts_with("initial.amplitudes: expected 16 entries"));
        CHECK(error_of(R"({"mode": "transfer", "name": "a/b"})").starts_with("name:"));
    }

    TEST_CASE("JSON round trip") {
        for (const Mode m : {Mode::transfer, Mode::entangle, Mode::total_timedep}) {
            ScenarioConfig c = ScenarioConfig::defaults(m);
            c.params.kappa1 = 0.123456789012345;
            const auto text = to_json(c);
            CHECK(to_json(parse_scenario(text)) == text);
        }
        SweepConfig s;
        s.base = ScenarioConfig::defaults(Mode::transfer);
        s.axis = "gi_lin";
        s.values = {0.5, 1.0};
        s.reduction = Reduction::full_curves;
        CHECK(to_json(parse_sweep(to_json(s))) == to_json(s));
    }

    TEST_CASE("shipped configs parse") {
        for (const char* name : {"transfer.json", "entangle.json", "entangle_large_decay.json", "timedep.json"}) {
            CHECK_NOTHROW(parse_scenario(read_text(kConfigs / name)));
        }
        for (const char* name : {"sweep_g2.json", "sweep_gi_ideal.json", "sweep_gi_transfer.json"}) {
            CHECK_NOTHROW(parse_sweep(read_text(kConfigs / name)));
        }
        CHECK_NOTHROW(parse_couplings(read_text(kConfigs / "couplings.json")));
        CHECK_THROWS_AS(read_text(kConfigs / "missing.json"), ConfigError);
    }

    TEST_CASE("sweep errors") {
        const std::string base = R"({"mode": "transfer"})";
        auto sweep_error = [&](const std::string& rest) {
            try {
                (void)parse_sweep(R"({"base": )" + base + "," + rest + "}");
            } catch (const ConfigError& e) {
                return std::string(e.what());
            }
            return std::string();
        };
        CHECK(sweep_error(R"("axis": "mass", "values": [1])").starts_with("axis: unknown parameter"));
        CHECK(sweep_error(R"("axis": "g2", "values": [1, 1])").starts_with("values[1]: duplicate"));
        CHECK(sweep_error(R"("axis": "g2", "values": [])").starts_with("values: at least one"));
        CHECK(sweep_error(R"("axis": "g2", "values": [-1])").starts_with("values[0]: params.g2:"));
        CHECK(sweep_error(R"("axis": "n_a", "values": [2.5])").starts_with("values[0]: n_a:"));
        CHECK(sweep_error(R"("axis": "g2", "values": [1], "reduction": "mean")").starts_with("reduction:"));
        CHECK(sweep_error(R"("axis": "g2", "values": [1])").empty());
    }

    TEST_CASE("parameter access by name") {
        ModelParams p;
        for (const char* name : {"g1", "g2", "gi_lin", "kappa1", "kappa2", "gamma1", "gamma2", "omega_b", "delta", "theta"}) {
            set_param(p, name, 0.375);
            CHECK(get_param(p, name) == 0.375);
        }
        set_param(p, "n_b", 7);
        CHECK(p.n_b == 7);
        CHECK_THROWS_AS(set_param(p, "n_a", 3.5), ConfigError);
        CHECK_THROWS_AS(set_param(p, "mass", 1.0), ConfigError);
        CHECK_THROWS_AS(get_param(p, "mass"), ConfigError);
    }
}

TEST_SUITE("csv") {
    TEST_CASE("round trip at printed precision") {
        const auto r = run_scenario(short_transfer());
        const Table t = make_table(r.series, {"fidelity", "purity"});
        const Table back = parse_csv(format_csv(t));
        REQUIRE(back.header == t.header);
        REQUIRE(back.rows.size() == t.rows.size());
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            for (std::size_t k = 0; k < t.rows[i].size(); ++k) {
                CHECK(back.rows[i][k] == std::stod(format_value(t.rows[i][k])));
                CHECK(std::abs(back.rows[i][k] - t.rows[i][k]) <= 5e-9 * std::max(1.0, std::abs(t.rows[i][k])));
            }
        }
        CHECK(format_csv(back) == format_csv(t));
    }

    TEST_CASE("format") {
        Table t;
        t.header = {"t_g", "x"};
        t.rows = {{0.0, 1.0 / 3.0}, {0.01, -2.5e-12}};
        CHECK(format_csv(t) == "t_g,x\n0,0.333333333\n0.01,-2.5e-12\n");
        CHECK_THROWS_AS(parse_csv("a,b\n1\n"), std::invalid_argument);
        CHECK_THROWS_AS(parse_csv("a\nx\n"), std::invalid_argument);
        CHECK_THROWS_AS(parse_csv(""), std::invalid_argument);
    }

    TEST_CASE("svg has one polyline per curve") {
        const std::string svg = render_svg("t <1>", "x", "y", {{"a", {0, 1, 2}, {0, 1, 0}}, {"b", {0, 1, 2}, {1, 1, 1}}});
        std::size_t count = 0;
        for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++count;
        CHECK(count == 2);
        CHECK(svg.find("t &lt;1&gt;") != std::string::npos);
        CHECK(svg.starts_with("<svg"));
    }
}

TEST_SUITE("run_scenario") {
    TEST_CASE("writes csv and svg") {
        const auto dir = scratch_dir("files");
        auto c = short_transfer();
        c.name = "demo";
        const auto r = run_scenario(c, dir);
        CHECK(std::filesystem::exists(dir / "demo.csv"));
        CHECK(std::filesystem::exists(dir / "demo.svg"));
        CHECK(r.files.size() == 2);
        const Table t = parse_csv(read_text(dir / "demo.csv"));
        CHECK(t.header == std::vector<std::string>{"t_g", "fidelity"});
        CHECK(t.rows.size() == r.series.times.size());
        CHECK(r.peaks.count("fidelity") == 1);
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("explicit state equals the NV superposition") {
        auto a = short_transfer(0.5);
        a.mode = Mode::entangle;
        a.outputs = {"concurrence"};
        a.truncation.automatic = false;
        a.initial.kind = InitialState::Kind::nv_superposition;
        auto b = a;
        b.initial.kind = InitialState::Kind::explicit_vector;
        b.initial.amplitudes.assign(16, Complex(0.0, 0.0));
        b.initial.amplitudes[0] = std::cos(a.params.theta);
        b.initial.amplitudes[8] = std::sin(a.params.theta);  // nv digit is the slowest
        const auto ra = run_scenario(a), rb = run_scenario(b);
        CHECK(ra.series.rows == rb.series.rows);
    }

    TEST_CASE("shipped transfer: purity non-increasing and occupations at most one") {
        const auto r = run_scenario(parse_scenario(read_text(kConfigs / "transfer.json")));
        const auto purity = r.series.column("purity");
        for (std::size_t i = 1; i < purity.size(); ++i) CHECK(purity[i] <= purity[i - 1] + 1e-12);
        for (const char* n : {"n_opt", "n_mw"}) {
            for (double v : r.series.column(n)) CHECK(v <= 1.0 + 1e-12);
        }
        for (double v : r.series.column("trace")) CHECK(std::abs(v - 1.0) <= 1e-8);
        for (double v : r.series.column("min_eigenvalue")) CHECK(v >= -1e-8);
        for (double v : r.series.column("hermiticity")) CHECK(v <= 1e-10);
    }

    TEST_CASE("deterministic") {
        const auto a = run_scenario(short_transfer()), b = run_scenario(short_transfer());
        CHECK(a.series.rows == b.series.rows);
    }
}

TEST_SUITE("truncation") {
    ScenarioConfig small_entangle() {
        ScenarioConfig c = ScenarioConfig::defaults(Mode::entangle);
        c.params.gi_lin = 0.1;
        c.evolution.t_final = 1.0;
        c.truncation = {true, 3, 1, 10, 0.05, false};
        return c;
    }

    TEST_CASE("auto truncation converges on a weak drive") {
        const auto r = run_scenario(small_entangle());
        REQUIRE(r.truncation_scan.size() >= 2);
        CHECK(r.converged);
        const auto& last = r.truncation_scan.back();
        CHECK(last.max_change <= 0.05);
        CHECK(last.top_population <= kTopLevelWarning);
        CHECK(r.config.params.n_a == last.n);
        CHECK(r.config.params.n_b == last.n);
        for (std::size_t k = 1; k < r.truncation_scan.size(); ++k) {
            CHECK(r.truncation_scan[k].n == r.truncation_scan[k - 1].n + 1);
            CHECK(!(r.truncation_scan[k - 1].max_change <= 0.05 && r.truncation_scan[k - 1].top_population <= kTopLevelWarning));
        }
        CHECK(std::isinf(r.truncation_scan.front().max_change));
    }

    TEST_CASE("ceiling reached") {
        auto c = small_entangle();
        c.params.gi_lin = 0.5;
        c.evolution.t_final = 2.0;
        c.truncation.max = 4;
        CHECK_THROWS_AS(run_scenario(c), TruncationError);
        c.truncation.allow_unconverged = true;
        const auto r = run_scenario(c);
        CHECK(!r.converged);
        CHECK(r.truncation_scan.size() == 2);
        CHECK(r.config.params.n_a == 4);
    }

    TEST_CASE("scan is written") {
        const auto dir = scratch_dir("scan");
        auto c = small_entangle();
        c.name = "scan";
        c.svg = false;
        const auto r = run_scenario(c, dir);
        const Table t = parse_csv(read_text(dir / "scan_truncation.csv"));
        CHECK(t.header.front() == "n");
        CHECK(t.rows.size() == r.truncation_scan.size());
        std::filesystem::remove_all(dir);
    }
}

TEST_SUITE("sweep") {
    TEST_CASE("single value reproduces run_scenario exactly") {
        SweepConfig s;
        s.base = short_transfer();
        s.axis = "gi_lin";
        s.values = {0.8};
        const auto sweep = run_sweep(s);
        auto c = short_transfer();
        c.params.gi_lin = 0.8;
        const auto direct = run_scenario(c);
        REQUIRE(sweep.runs.size() == 1);
        CHECK(sweep.runs[0].series.rows == direct.series.rows);
        CHECK(sweep.runs[0].series.times == direct.series.times);
        CHECK(sweep.runs[0].peaks.at("fidelity").value == direct.peaks.at("fidelity").value);
    }

    TEST_CASE("rows are sorted by axis value") {
        const auto dir = scratch_dir("sweep");
        SweepConfig s;
        s.base = short_transfer();
        s.base.name = "order";
        s.axis = "gi_lin";
        s.values = {1.5, 0.5, 1.0};
        const auto r = run_sweep(s, dir);
        CHECK(r.values == std::vector<double>{0.5, 1.0, 1.5});
        const Table t = parse_csv(read_text(dir / "order_sweep.csv"));
        CHECK(t.header == std::vector<std::string>{"gi_lin", "fidelity"});
        CHECK(t.column("gi_lin") == std::vector<double>{0.5, 1.0, 1.5});
        for (std::size_t i = 0; i < 3; ++i) CHECK(t.rows[i][1] == std::stod(format_value(r.runs[i].peaks.at("fidelity").value)));

        s.reduction = Reduction::full_curves;
        s.base.name = "curves";
        (void)run_sweep(s, dir);
        const Table curves = parse_csv(read_text(dir / "curves_sweep.csv"));
        CHECK(curves.header == std::vector<std::string>{"t_g", "fidelity_gi_lin=0.5", "fidelity_gi_lin=1", "fidelity_gi_lin=1.5"});
        std::filesystem::remove_all(dir);
    }
}

TEST_SUITE("figures") {
    TEST_CASE("fig2 is idempotent and has one column per curve") {
        const auto a = scratch_dir("fig2a"), b = scratch_dir("fig2b");
        const auto ra = reproduce_figure("fig2", a);
        (void)reproduce_figure("fig2", b);
        CHECK(read_text(a / "fig2.csv") == read_text(b / "fig2.csv"));
        const Table t = parse_csv(read_text(a / "fig2.csv"));
        CHECK(t.header == std::vector<std::string>{"t_g", "fidelity_G=0.5", "fidelity_G=1", "fidelity_G=1.5"});
        CHECK(ra.checks.size() == 2);
        CHECK(std::filesystem::exists(a / "fig2.svg"));
        std::filesystem::remove_all(a);
        std::filesystem::remove_all(b);
    }

    TEST_CASE("unknown ids") {
        CHECK_THROWS_AS(reproduce_figure("fig9"), ConfigError);
        CHECK_THROWS_AS(validate_study("vibes"), ConfigError);
        CHECK(figure_scenarios("fig4").size() == 5);
        CHECK(figure_scenarios("fig5").size() == 2);
    }

    TEST_CASE("report text") {
        Report r;
        r.title = "t";
        r.checks = {{"a", true, "ok"}, {"b", false, "bad"}};
        CHECK(!r.pass());
        CHECK(r.text().find("FAIL  b: bad") != std::string::npos);
        r.checks.pop_back();
        CHECK(r.pass());
    }
}

TEST_SUITE("studies") {
    TEST_CASE("adiabatic study") {
        const auto rep = validate_study("adiabatic");
        CHECK(rep.pass());
        PhysicalParams p;
        p.omega_rabi = 0.6;
        p.g_e0 = 1.0;
        p.delta_e = 50.0;
        const auto run = adiabatic_run(p, true);
        CHECK(run.expected_frequency == doctest::Approx(0.024).epsilon(1e-12));
        // Without compensation the detuning (g_e0^2 - Omega^2) / delta_e gives a
        // generalized Rabi frequency sqrt((2 g1)^2 + detuning^2).
        const auto off = adiabatic_run(p, false);
        const double detuning = (1.0 - 0.36) / 50.0;
        CHECK(off.measured_frequency == doctest::Approx(std::hypot(0.024, detuning)).epsilon(0.03));
    }

    TEST_CASE("couplings report") {
        const auto cfg = parse_couplings(read_text(kConfigs / "couplings.json"));
        const auto rep = couplings_report(cfg.physical, cfg.g_ref);
        CHECK(rep.pass());
        bool found = false;
        for (const auto& n : rep.notes) found = found || n.starts_with("g_i/2pi = 4081.66");
        CHECK(found);
    }
}
