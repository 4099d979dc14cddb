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

#include "nvsc/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace nvsc {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

json parse_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: not valid JSON (") + e.what() + ")");
    }
}

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path.empty() ? "config" : path, "must be an object");
}

void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            fail(path.empty() ? key : path + "." + key, "unknown field");
        }
    }
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "must be finite");
    return v;
}

std::size_t get_count(const json& j, const std::string& path) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) fail(path, "must be a non-negative integer");
    const auto v = j.get<long long>();
    if (v < 0) fail(path, "must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

void read_number(const json& j, const std::string& path, const char* key, double& out) {
    if (j.contains(key)) out = get_number(j.at(key), join(path, key));
}

void read_count(const json& j, const std::string& path, const char* key, std::size_t& out) {
    if (j.contains(key)) out = get_count(j.at(key), join(path, key));
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "must be a string");
    return j.get<std::string>();
}

// Re-raises model validation errors with the enclosing path.
template <typename F>
void with_prefix(const std::string& prefix, F&& f) {
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(prefix + "." + e.what());
    }
}

ModelParams parse_params(const json& j, const std::string& path, ModelParams p) {
    require_object(j, path);
    reject_unknown(j, path, {"g1", "g2", "gi_lin", "kappa1", "kappa2", "gamma1", "gamma2", "omega_b", "delta", "theta",
                             "n_a", "n_b"});
    read_number(j, path, "g1", p.g1);
    read_number(j, path, "g2", p.g2);
    read_number(j, path, "gi_lin", p.gi_lin);
    read_number(j, path, "kappa1", p.kappa1);
    read_number(j, path, "kappa2", p.kappa2);
    read_number(j, path, "gamma1", p.gamma1);
    read_number(j, path, "gamma2", p.gamma2);
    read_number(j, path, "omega_b", p.omega_b);
    read_number(j, path, "delta", p.delta);
    read_number(j, path, "theta", p.theta);
    read_count(j, path, "n_a", p.n_a);
    read_count(j, path, "n_b", p.n_b);
    return p;
}

PhysicalParams parse_physical(const json& j, const std::string& path) {
    require_object(j, path);
    reject_unknown(j, path, {"omega_a", "omega_b", "n_refr", "c_eo", "length_l", "thickness_d", "tau_fraction",
                             "capacitance", "alpha_a", "omega_rabi", "g_e0", "delta_e"});
    PhysicalParams p;
    read_number(j, path, "omega_a", p.omega_a);
    read_number(j, path, "omega_b", p.omega_b);
    read_number(j, path, "n_refr", p.n_refr);
    read_number(j, path, "c_eo", p.c_eo);
    read_number(j, path, "length_l", p.length_l);
    read_number(j, path, "thickness_d", p.thickness_d);
    read_number(j, path, "tau_fraction", p.tau_fraction);
    read_number(j, path, "capacitance", p.capacitance);
    read_number(j, path, "alpha_a", p.alpha_a);
    read_number(j, path, "omega_rabi", p.omega_rabi);
    read_number(j, path, "g_e0", p.g_e0);
    read_number(j, path, "delta_e", p.delta_e);
    with_prefix(path, [&] { p.validate(); });
    return p;
}

Mode parse_mode(const json& j, const std::string& path) {
    const auto s = get_string(j, path);
    if (s == "transfer") return Mode::transfer;
    if (s == "entangle") return Mode::entangle;
    if (s == "total_timedep") return Mode::total_timedep;
    fail(path, "must be one of transfer, entangle, total_timedep");
}

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::transfer: return "transfer";
        case Mode::entangle: return "entangle";
        case Mode::total_timedep: return "total_timedep";
    }
    return "";
}

InitialState parse_initial(const json& j, const std::string& path, InitialState init) {
    require_object(j, path);
    reject_unknown(j, path, {"kind", "amplitudes"});
    if (j.contains("kind")) {
        const auto kind = get_string(j.at("kind"), join(path, "kind"));
        if (kind == "nv_superposition") {
            init.kind = InitialState::Kind::nv_superposition;
        } else if (kind == "all_ground") {
            init.kind = InitialState::Kind::all_ground;
        } else if (kind == "explicit") {
            init.kind = InitialState::Kind::explicit_vector;
        } else {
            fail(join(path, "kind"), "must be one of nv_superposition, all_ground, explicit");
        }
    }
    if (j.contains("amplitudes")) {
        const auto& a = j.at("amplitudes");
        const auto apath = join(path, "amplitudes");
        if (!a.is_array()) fail(apath, "must be an array of [re, im] pairs");
        init.amplitudes.clear();
        for (std::size_t k = 0; k < a.size(); ++k) {
            const auto epath = apath + "[" + std::to_string(k) + "]";
            const auto& e = a[k];
            if (e.is_number()) {
                init.amplitudes.emplace_back(get_number(e, epath), 0.0);
            } else if (e.is_array() && e.size() == 2) {
                init.amplitudes.emplace_back(get_number(e[0], epath), get_number(e[1], epath));
            } else {
                fail(epath, "must be a number or an [re, im] pair");
            }
        }
    }
    return init;
}

TruncationPolicy parse_truncation(const json& j, const std::string& path, TruncationPolicy t) {
    require_object(j, path);
    reject_unknown(j, path, {"policy", "start", "step", "max", "tolerance", "allow_unconverged"});
    if (j.contains("policy")) {
        const auto policy = get_string(j.at("policy"), join(path, "policy"));
        if (policy == "auto") {
            t.automatic = true;
        } else if (policy == "fixed") {
            t.automatic = false;
        } else {
            fail(join(path, "policy"), "must be auto or fixed");
        }
    }
    read_count(j, path, "start", t.start);
    read_count(j, path, "step", t.step);
    read_count(j, path, "max", t.max);
    read_number(j, path, "tolerance", t.tolerance);
    if (j.contains("allow_unconverged")) {
        if (!j.at("allow_unconverged").is_boolean()) fail(join(path, "allow_unconverged"), "must be true or false");
        t.allow_unconverged = j.at("allow_unconverged").get<bool>();
    }
    return t;
}

EvolutionSpec parse_evolution(const json& j, const std::string& path, EvolutionSpec e) {
    require_object(j, path);
    reject_unknown(j, path, {"t_final", "dt", "record_stride", "tolerance_trace", "record_health"});
    read_number(j, path, "t_final", e.t_final);
    read_number(j, path, "dt", e.dt);
    read_count(j, path, "record_stride", e.record_stride);
    read_number(j, path, "tolerance_trace", e.tolerance_trace);
    if (j.contains("record_health")) {
        if (!j.at("record_health").is_boolean()) fail(join(path, "record_health"), "must be true or false");
        e.record_health = j.at("record_health").get<bool>();
    }
    return e;
}

ScenarioConfig parse_scenario_json(const json& j, const std::string& path) {
    require_object(j, path);
    reject_unknown(j, path, {"name", "mode", "params", "initial", "evolution", "outputs", "truncation", "target_phase",
                             "svg"});
    if (!j.contains("mode")) fail(join(path, "mode"), "is required");
    ScenarioConfig cfg = ScenarioConfig::defaults(parse_mode(j.at("mode"), join(path, "mode")));
    if (j.contains("name")) cfg.name = get_string(j.at("name"), join(path, "name"));
    if (j.contains("params")) cfg.params = parse_params(j.at("params"), join(path, "params"), cfg.params);
    if (j.contains("initial")) cfg.initial = parse_initial(j.at("initial"), join(path, "initial"), cfg.initial);
    if (j.contains("evolution")) cfg.evolution = parse_evolution(j.at("evolution"), join(path, "evolution"), cfg.evolution);
    if (j.contains("truncation")) {
        cfg.truncation = parse_truncation(j.at("truncation"), join(path, "truncation"), cfg.truncation);
    }
    if (j.contains("outputs")) {
        const auto& o = j.at("outputs");
        if (!o.is_array()) fail(join(path, "outputs"), "must be an array of observable names");
        cfg.outputs.clear();
        for (std::size_t k = 0; k < o.size(); ++k) {
            cfg.outputs.push_back(get_string(o[k], join(path, "outputs") + "[" + std::to_string(k) + "]"));
        }
    }
    read_number(j, path, "target_phase", cfg.target_phase);
    if (j.contains("svg")) {
        if (!j.at("svg").is_boolean()) fail(join(path, "svg"), "must be true or false");
        cfg.svg = j.at("svg").get<bool>();
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        if (path.empty()) throw;
        throw ConfigError(path + "." + e.what());
    }
    return cfg;
}

json params_json(const ModelParams& p) {
    return {{"g1", p.g1},         {"g2", p.g2},         {"gi_lin", p.gi_lin}, {"kappa1", p.kappa1},
            {"kappa2", p.kappa2}, {"gamma1", p.gamma1}, {"gamma2", p.gamma2}, {"omega_b", p.omega_b},
            {"delta", p.delta},   {"theta", p.theta},   {"n_a", p.n_a},       {"n_b", p.n_b}};
}

json scenario_json(const ScenarioConfig& c) {
    json initial;
    switch (c.initial.kind) {
        case InitialState::Kind::nv_superposition: initial = {{"kind", "nv_superposition"}}; break;
        case InitialState::Kind::all_ground: initial = {{"kind", "all_ground"}}; break;
        case InitialState::Kind::explicit_vector: {
            json amps = json::array();
            for (const auto& a : c.initial.amplitudes) amps.push_back({a.real(), a.imag()});
            initial = {{"kind", "explicit"}, {"amplitudes", amps}};
            break;
        }
    }
    json truncation = {{"policy", c.truncation.automatic ? "auto" : "fixed"}};
    if (c.truncation.automatic) {
        truncation["start"] = c.truncation.start;
        truncation["step"] = c.truncation.step;
        truncation["max"] = c.truncation.max;
        truncation["tolerance"] = c.truncation.tolerance;
        truncation["allow_unconverged"] = c.truncation.allow_unconverged;
    }
    return {{"name", c.name},
            {"mode", mode_name(c.mode)},
            {"params", params_json(c.params)},
            {"initial", initial},
            {"evolution",
             {{"t_final", c.evolution.t_final},
              {"dt", c.evolution.dt},
              {"record_stride", c.evolution.record_stride},
              {"tolerance_trace", c.evolution.tolerance_trace},
              {"record_health", c.evolution.record_health}}},
            {"outputs", c.outputs},
            {"truncation", truncation},
            {"target_phase", c.target_phase},
            {"svg", c.svg}};
}

const char* reduction_name(Reduction r) {
    switch (r) {
        case Reduction::peak_value: return "peak_value";
        case Reduction::peak_time: return "peak_time";
        case Reduction::full_curves: return "full_curves";
    }
    return "";
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) { return parse_scenario_json(parse_text(json_text), ""); }

SweepConfig parse_sweep(const std::string& json_text) {
    const json j = parse_text(json_text);
    require_object(j, "");
    reject_unknown(j, "", {"base", "axis", "values", "reduction"});
    SweepConfig cfg;
    if (!j.contains("base")) fail("base", "is required");
    cfg.base = parse_scenario_json(j.at("base"), "base");
    if (!j.contains("axis")) fail("axis", "is required");
    cfg.axis = get_string(j.at("axis"), "axis");
    if (!j.contains("values") || !j.at("values").is_array()) fail("values", "must be an array of numbers");
    for (std::size_t k = 0; k < j.at("values").size(); ++k) {
        cfg.values.push_back(get_number(j.at("values")[k], "values[" + std::to_string(k) + "]"));
    }
    if (j.contains("reduction")) {
        const auto r = get_string(j.at("reduction"), "reduction");
        if (r == "peak_value") {
            cfg.reduction = Reduction::peak_value;
        } else if (r == "peak_time") {
            cfg.reduction = Reduction::peak_time;
        } else if (r == "full_curves") {
            cfg.reduction = Reduction::full_curves;
        } else {
            fail("reduction", "must be one of peak_value, peak_time, full_curves");
        }
    }
    cfg.validate();
    return cfg;
}

CouplingsConfig parse_couplings(const std::string& json_text) {
    const json j = parse_text(json_text);
    require_object(j, "");
    reject_unknown(j, "", {"physical", "g_ref"});
    CouplingsConfig cfg;
    if (j.contains("physical")) cfg.physical = parse_physical(j.at("physical"), "physical");
    read_number(j, "", "g_ref", cfg.g_ref);
    if (cfg.g_ref < 0.0) fail("g_ref", "must be >= 0");
    return cfg;
}

std::string to_json(const ScenarioConfig& cfg) { return scenario_json(cfg).dump(2) + "\n"; }

std::string to_json(const SweepConfig& cfg) {
    const json j = {{"base", scenario_json(cfg.base)},
                    {"axis", cfg.axis},
                    {"values", cfg.values},
                    {"reduction", reduction_name(cfg.reduction)}};
    return j.dump(2) + "\n";
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string() + ": cannot open file");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

std::vector<double> Table::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::out_of_range("table has no column '" + name + "'");
    const auto k = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[k]);
    return out;
}

Table make_table(const TimeSeries& series, const std::vector<std::string>& columns) {
    Table t;
    t.header.push_back("t_g");
    std::vector<std::size_t> idx;
    for (const auto& c : columns) {
        t.header.push_back(c);
        idx.push_back(series.column_index(c));
    }
    for (std::size_t s = 0; s < series.times.size(); ++s) {
        std::vector<double> row{series.times[s]};
        for (auto k : idx) row.push_back(series.rows[s][k]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string format_csv(const Table& table) {
    std::string out;
    for (std::size_t k = 0; k < table.header.size(); ++k) {
        if (k) out += ',';
        out += table.header[k];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out += ',';
            out += format_value(row[k]);
        }
        out += '\n';
    }
    return out;
}

Table parse_csv(const std::string& text) {
    Table t;
    std::istringstream in(text);
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(s);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!s.empty() && s.back() == ',') cells.emplace_back();
        return cells;
    };
    if (!std::getline(in, line)) throw std::invalid_argument("csv: empty input");
    t.header = split(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size()) {
            throw std::invalid_argument("csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                        " cells, header has " + std::to_string(t.header.size()));
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(c, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != c.size() || c.empty()) {
                throw std::invalid_argument("csv: line " + std::to_string(line_no) + ": '" + c + "' is not a number");
            }
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot write");
    out << contents;
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

namespace {

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// 1, 2 or 5 times a power of ten, about `target` intervals over the span.
double nice_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) return m * mag;
    }
    return 10.0 * mag;
}

}  // namespace

std::string render_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Curve>& curves) {
    constexpr double width = 720, height = 480, left = 80, right = 170, top = 50, bottom = 60;
    constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& c : curves) {
        for (double v : c.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
        for (double v : c.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
    if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    y0 = std::min(y0, 0.0);
    if (x1 <= x0) x1 = x0 + 1.0;
    if (y1 <= y0) y1 = y0 + 1.0;
    const double ystep = nice_step(y1 - y0, 5);
    y1 = std::ceil(y1 / ystep) * ystep;
    const double xstep = nice_step(x1 - x0, 6);

    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title)
      << "</text>\n";
    s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double x = std::ceil(x0 / xstep) * xstep; x <= x1 + 1e-9 * xstep; x += xstep) {
        s << "<line x1=\"" << px(x) << "\" y1=\"" << top + ph << "\" x2=\"" << px(x) << "\" y2=\"" << top + ph + 5
          << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << px(x) << "\" y=\"" << top + ph + 20 << "\" text-anchor=\"middle\">" << format_value(x)
          << "</text>\n";
    }
    for (double y = y0; y <= y1 + 1e-9 * ystep; y += ystep) {
        s << "<line x1=\"" << left - 5 << "\" y1=\"" << py(y) << "\" x2=\"" << left << "\" y2=\"" << py(y)
          << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << left - 8 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">"
          << format_value(std::abs(y) < 1e-12 * ystep ? 0.0 : y) << "</text>\n";
    }
    s << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">"
      << escape_xml(x_label) << "</text>\n";
    s << "<text x=\"20\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << top + ph / 2 << ")\">" << escape_xml(y_label) << "</text>\n";

    for (std::size_t k = 0; k < curves.size(); ++k) {
        const auto& c = curves[k];
        const char* colour = palette[k % std::size(palette)];
        s << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < c.x.size() && i < c.y.size(); ++i) {
            if (i) s << ' ';
            s << px(c.x[i]) << ',' << py(c.y[i]);
        }
        s << "\"/>\n";
        const double ly = top + 15 + 20.0 * static_cast<double>(k);
        s << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 40 << "\" y2=\"" << ly
          << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        s << "<text x=\"" << left + pw + 46 << "\" y=\"" << ly + 4 << "\">" << escape_xml(c.label) << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace nvsc
