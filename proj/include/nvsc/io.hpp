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

// io.hpp: JSON configs plus CSV and SVG output.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nvsc/scenario.hpp"

namespace nvsc {

// ---------------------------------------------------------------------------
// Configs. Every parser throws ConfigError naming the field path.
// ---------------------------------------------------------------------------

ScenarioConfig parse_scenario(const std::string& json_text);
SweepConfig parse_sweep(const std::string& json_text);

struct CouplingsConfig {
    PhysicalParams physical;
    double g_ref{0.0};  // rad/s; 0 selects g1
};
CouplingsConfig parse_couplings(const std::string& json_text);

std::string to_json(const ScenarioConfig& cfg);
std::string to_json(const SweepConfig& cfg);

/// Reads a whole file; throws ConfigError if it cannot be opened.
std::string read_text(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

struct Table {
    std::vector<std::string> header;  // first entry is the abscissa
    std::vector<std::vector<double>> rows;

    std::vector<double> column(const std::string& name) const;
};

/// t_g plus the named TimeSeries columns.
Table make_table(const TimeSeries& series, const std::vector<std::string>& columns);

/// Comma separated, LF line endings, 9 significant digits.
std::string format_csv(const Table& table);
Table parse_csv(const std::string& text);
std::string format_value(double v);

void write_file(const std::filesystem::path& path, const std::string& contents);

struct Curve {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Polyline chart with axes, ticks and a legend.
std::string render_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Curve>& curves);

}  // namespace nvsc
