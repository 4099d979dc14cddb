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

// model.hpp: Hamiltonians and collapse channels of the hybrid
// NV-center / electro-optic / superconducting-qubit system, plus the
// device-level coupling calculators.
//
// Simulation models are dimensionless: every rate is in units of a reference
// coupling g and time is g*t. Physical calculators work in SI (rad/s).

#pragma once

#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "nvsc/operator_algebra.hpp"

namespace nvsc {

struct ModelParams {
    double g1{1.0};        // NV - optical cavity
    double g2{1.0};        // SC qubit - microwave resonator
    double gi_lin{1.0};    // linearized electro-optic coupling G_i
    double kappa1{0.1};    // optical cavity decay
    double kappa2{0.01};   // microwave resonator decay
    double gamma1{0.01};   // NV dephasing
    double gamma2{0.01};   // SC qubit relaxation
    double omega_b{50.0};  // microwave frequency; time-dependent model only
    double delta{50.0};    // laser detuning omega_a - omega_L
    double theta{std::numbers::pi / 4};
    std::size_t n_a{2};
    std::size_t n_b{2};

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// SI device parameters. With n_refr = 1, c_eo carries the combined n^3 r
/// electro-optic coefficient.
struct PhysicalParams {
    double omega_a{2.0 * std::numbers::pi * 193.0e12};  // rad/s, 1550 nm
    double omega_b{2.0 * std::numbers::pi * 6.0e9};     // rad/s
    double n_refr{1.0};
    double c_eo{300.0e-12};       // m/V
    double length_l{1.0e-3};      // m
    double thickness_d{10.0e-6};  // m
    double tau_fraction{0.5};     // l / (c tau)
    double capacitance{1.0e-12};  // F
    double alpha_a{1000.0};       // |alpha_a|
    double omega_rabi{2.0 * std::numbers::pi * 0.2e9};  // rad/s
    double g_e0{2.0 * std::numbers::pi * 0.5e9};        // rad/s
    double delta_e{2.0 * std::numbers::pi * 10.0e9};    // rad/s

    void validate() const;
};

struct CollapseChannel {
    std::string name;
    SparseOperator op;
    double rate{0.0};  // enters as (rate/2) * (2 o rho o^dag - o^dag o rho - rho o^dag o)
};

/// H(t) contribution exp(i * frequency * t) * op.
struct OscillatingTerm {
    SparseOperator op;
    double frequency{0.0};
};

struct HamiltonianSet {
    SystemLayout layout;
    SparseOperator hamiltonian;
    std::vector<OscillatingTerm> oscillating;
    std::vector<CollapseChannel> collapse;

    bool time_dependent() const { return !oscillating.empty(); }
    /// Full Hamiltonian at time t.
    SparseOperator at(double t) const;
};

struct EffectiveCoupling {
    double g1{0.0};
    double validity_ratio{0.0};  // max(Omega, g_e0) / |delta_e|; small means elimination is valid
};

/// Raman coupling Omega * g_e0 / delta_e after eliminating |e>.
EffectiveCoupling g1_effective(const PhysicalParams& p);

/// Single-photon electro-optic coupling g_i in rad/s.
double electro_optic_rate(const PhysicalParams& p);

/// Zero-point voltage sqrt(hbar omega_b / 2C) across the modulator, in volts.
double zero_point_voltage(const PhysicalParams& p);

/// G_i = g_i |alpha_a| in rad/s.
double linearized_coupling(const PhysicalParams& p);

/// Embedded operators of the canonical layout.
struct ModeOperators {
    SparseOperator sigma1;  // NV lowering |0><1|
    SparseOperator sigma2;  // SC lowering
    SparseOperator sigma1_z;
    SparseOperator a;       // optical fluctuation mode
    SparseOperator b;       // microwave mode
};
ModeOperators mode_operators(const SystemLayout& layout);

/// Red-sideband beam-splitter model.
HamiltonianSet h_transfer(const ModelParams& m, const SystemLayout& layout);

/// Blue-sideband two-mode-squeezing model.
HamiltonianSet h_entangle(const ModelParams& m, const SystemLayout& layout);

/// Linearized model before the rotating-wave approximation, returned with
/// its explicit phase factors as oscillating terms.
HamiltonianSet h_total(const ModelParams& m, const SystemLayout& layout);
SparseOperator h_total_t(const ModelParams& m, const SystemLayout& layout, double t);

/// Lambda-system NV (|0>, |1>, |e>) coupled to one cavity mode, in the frame
/// where both optical transitions are detuned by delta_e. Layout is
/// [nv: 3, opt: n_cav]. With `stark_compensation`, static counter-terms
/// cancel the second-order level shifts of |0, n> and |1, n>.
HamiltonianSet lambda_full_model(const PhysicalParams& p, std::size_t n_cav, bool stark_compensation);

/// Both collapse-operator sets use this list: (a, kappa1), (sigma1_z,
/// gamma1), (b, kappa2), (sigma2, gamma2).
std::vector<CollapseChannel> standard_collapse(const ModelParams& m, const ModeOperators& ops);

}  // namespace nvsc
