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

// observables.hpp: figures of merit evaluated on density matrices.

#pragma once

#include <string_view>

#include "nvsc/operator_algebra.hpp"

namespace nvsc {

class QubitPureState {
public:
    /// Throws std::invalid_argument unless |c0|^2 + |c1|^2 = 1 within 1e-12.
    QubitPureState(Complex c0, Complex c1);

    /// cos(theta)|0> + e^{i phase} sin(theta)|1>
    static QubitPureState from_angle(double theta, double relative_phase = 0.0);

    Complex c0() const { return c0_; }
    Complex c1() const { return c1_; }
    ComplexVector vector() const;

private:
    Complex c0_;
    Complex c1_;
};

/// <psi|rho_sc|psi> with rho_sc the reduced state of subsystem "sc".
double transfer_fidelity(const DensityMatrix& rho, const QubitPureState& target);

/// Wootters concurrence of a two-qubit state. The lambda_i are the
/// eigenvalues of the Hermitian R = sqrt(sqrt(rho) rho~ sqrt(rho)), obtained
/// as singular values of sqrt(rho) sqrt(rho~).
double concurrence(const DensityMatrix& rho2q);

struct Occupation {
    double mean{0.0};
    double top_population{0.0};    // population of the highest kept Fock level
    bool truncation_suspect{false};
};

inline constexpr double kTopLevelWarning = 1e-4;

/// <n> of the bosonic subsystem `label`; flags top-level population above
/// kTopLevelWarning.
Occupation mode_occupation(const DensityMatrix& rho, std::string_view label);

/// tr(rho^2)
double purity(const DensityMatrix& rho);

}  // namespace nvsc
