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

#include "nvsc/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nvsc {

namespace {

constexpr double kHbar = 1.054571817e-34;  // J s

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw std::invalid_argument(field + ": " + what);
}

SparseOperator dag(const SparseOperator& op) { return SparseOperator(op.adjoint()); }

}  // namespace

void ModelParams::validate() const {
    const std::pair<const char*, double> rates[] = {
        {"g1", g1},         {"g2", g2},         {"gi_lin", gi_lin}, {"kappa1", kappa1},
        {"kappa2", kappa2}, {"gamma1", gamma1}, {"gamma2", gamma2}, {"omega_b", omega_b},
    };
    for (const auto& [name, value] : rates) {
        require(std::isfinite(value) && value >= 0.0, name, "must be finite and >= 0");
    }
    require(std::isfinite(delta), "delta", "must be finite");
    require(std::isfinite(theta) && theta >= 0.0 && theta < 2.0 * std::numbers::pi, "theta",
            "must lie in [0, 2*pi)");
    require(n_a >= 2, "n_a", "truncation must be >= 2");
    require(n_b >= 2, "n_b", "truncation must be >= 2");
}

void PhysicalParams::validate() const {
    const std::pair<const char*, double> positive[] = {
        {"omega_a", omega_a},         {"omega_b", omega_b},         {"n_refr", n_refr},
        {"c_eo", c_eo},               {"length_l", length_l},       {"thickness_d", thickness_d},
        {"tau_fraction", tau_fraction}, {"capacitance", capacitance}, {"omega_rabi", omega_rabi},
        {"g_e0", g_e0},               {"delta_e", delta_e},
    };
    for (const auto& [name, value] : positive) {
        require(std::isfinite(value) && value > 0.0, name, "must be finite and > 0");
    }
    require(std::isfinite(alpha_a) && alpha_a >= 0.0, "alpha_a", "must be finite and >= 0");
}

SparseOperator HamiltonianSet::at(double t) const {
    SparseOperator h = hamiltonian;
    for (const auto& term : oscillating) {
        h += std::exp(kI * (term.frequency * t)) * term.op;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Physical couplings
// ---------------------------------------------------------------------------

EffectiveCoupling g1_effective(const PhysicalParams& p) {
    if (p.delta_e == 0.0) throw std::invalid_argument("delta_e: must be nonzero for adiabatic elimination");
    return {p.omega_rabi * p.g_e0 / p.delta_e, std::max(p.omega_rabi, p.g_e0) / std::abs(p.delta_e)};
}

double zero_point_voltage(const PhysicalParams& p) { return std::sqrt(kHbar * p.omega_b / (2.0 * p.capacitance)); }

double electro_optic_rate(const PhysicalParams& p) {
    const double n3 = p.n_refr * p.n_refr * p.n_refr;
    // Phase shift per volt divided by round-trip time.
    const double per_volt = p.omega_a * n3 * p.c_eo * p.tau_fraction / p.thickness_d;
    return per_volt * zero_point_voltage(p);
}

double linearized_coupling(const PhysicalParams& p) { return electro_optic_rate(p) * p.alpha_a; }

// ---------------------------------------------------------------------------
// Interaction-picture models
// ---------------------------------------------------------------------------

ModeOperators mode_operators(const SystemLayout& layout) {
    ModeOperators ops;
    ops.sigma1 = embed(sigma_minus(), "nv", layout);
    ops.sigma2 = embed(sigma_minus(), "sc", layout);
    ops.sigma1_z = embed(sigma_z(), "nv", layout);
    ops.a = embed(annihilation(layout.dim("opt")), "opt", layout);
    ops.b = embed(annihilation(layout.dim("mw")), "mw", layout);
    return ops;
}

std::vector<CollapseChannel> standard_collapse(const ModelParams& m, const ModeOperators& ops) {
    return {
        {"opt_decay", ops.a, m.kappa1},
        {"nv_dephasing", ops.sigma1_z, m.gamma1},
        {"mw_decay", ops.b, m.kappa2},
        {"sc_relaxation", ops.sigma2, m.gamma2},
    };
}

namespace {

SparseOperator qubit_cavity_terms(const ModelParams& m, const ModeOperators& ops) {
    SparseOperator h = m.g1 * (dag(ops.a) * ops.sigma1 + ops.a * dag(ops.sigma1));
    h += m.g2 * (dag(ops.b) * ops.sigma2 + ops.b * dag(ops.sigma2));
    return h;
}

void require_model_layout(const ModelParams& m, const SystemLayout& layout) {
    m.validate();
    const SystemLayout expected = SystemLayout::canonical(layout.dim("opt"), layout.dim("mw"));
    if (!(layout == expected)) {
        throw std::invalid_argument("layout: model Hamiltonians require the canonical [nv, sc, opt, mw] layout");
    }
}

}  // namespace

HamiltonianSet h_transfer(const ModelParams& m, const SystemLayout& layout) {
    require_model_layout(m, layout);
    const auto ops = mode_operators(layout);
    SparseOperator h = qubit_cavity_terms(m, ops);
    h += m.gi_lin * (dag(ops.a) * ops.b + dag(ops.b) * ops.a);
    h.prune(Complex(0.0, 0.0));
    return {layout, std::move(h), {}, standard_collapse(m, ops)};
}

HamiltonianSet h_entangle(const ModelParams& m, const SystemLayout& layout) {
    require_model_layout(m, layout);
    const auto ops = mode_operators(layout);
    SparseOperator h = qubit_cavity_terms(m, ops);
    h += m.gi_lin * (dag(ops.a) * dag(ops.b) + ops.a * ops.b);
    h.prune(Complex(0.0, 0.0));
    return {layout, std::move(h), {}, standard_collapse(m, ops)};
}

HamiltonianSet h_total(const ModelParams& m, const SystemLayout& layout) {
    require_model_layout(m, layout);
    const auto ops = mode_operators(layout);
    SparseOperator h = qubit_cavity_terms(m, ops);
    h.prune(Complex(0.0, 0.0));

    std::vector<OscillatingTerm> terms;
    if (m.gi_lin != 0.0) {
        // G (b^dag e^{i w t} + b e^{-i w t})(a^dag e^{i D t} + a e^{-i D t}), expanded.
        const double w = m.omega_b;
        const double d = m.delta;
        terms.push_back({m.gi_lin * (dag(ops.b) * dag(ops.a)), w + d});
        terms.push_back({m.gi_lin * (dag(ops.b) * ops.a), w - d});
        terms.push_back({m.gi_lin * (ops.b * dag(ops.a)), d - w});
        terms.push_back({m.gi_lin * (ops.b * ops.a), -(w + d)});
    }
    return {layout, std::move(h), std::move(terms), standard_collapse(m, ops)};
}

SparseOperator h_total_t(const ModelParams& m, const SystemLayout& layout, double t) {
    return h_total(m, layout).at(t);
}

HamiltonianSet lambda_full_model(const PhysicalParams& p, std::size_t n_cav, bool stark_compensation) {
    if (n_cav < 2) throw std::invalid_argument("n_cav: truncation must be >= 2");
    if (p.delta_e == 0.0) throw std::invalid_argument("delta_e: must be nonzero");
    SystemLayout layout({{"nv", 3}, {"opt", n_cav}});

    auto ket_bra = [](Eigen::Index i, Eigen::Index j) {
        ComplexMatrix m = ComplexMatrix::Zero(3, 3);
        m(i, j) = 1.0;
        return m;
    };
    constexpr Eigen::Index k0 = 0, k1 = 1, ke = 2;

    const SparseOperator a = embed(annihilation(n_cav), "opt", layout);
    const SparseOperator e0 = embed(ket_bra(ke, k0), "nv", layout);
    const SparseOperator e1 = embed(ket_bra(ke, k1), "nv", layout);
    const SparseOperator pe = embed(ket_bra(ke, ke), "nv", layout);

    SparseOperator h = p.delta_e * pe;
    SparseOperator coupling = p.g_e0 * (e0 * a) + p.omega_rabi * e1;
    h += coupling + dag(coupling);
    if (stark_compensation) {
        const SparseOperator p0 = embed(ket_bra(k0, k0), "nv", layout);
        const SparseOperator p1 = embed(ket_bra(k1, k1), "nv", layout);
        h += (p.g_e0 * p.g_e0 / p.delta_e) * (dag(a) * a * p0);
        h += (p.omega_rabi * p.omega_rabi / p.delta_e) * p1;
    }
    h.prune(Complex(0.0, 0.0));
    return {std::move(layout), std::move(h), {}, {}};
}

}  // namespace nvsc
