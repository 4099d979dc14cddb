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

#include "nvsc/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nvsc {

namespace {

// Reduces to a single subsystem unless that is already the whole state.
DensityMatrix single_subsystem(const DensityMatrix& rho, std::string_view label) {
    if (!rho.layout().contains(label)) {
        throw std::invalid_argument("missing subsystem label '" + std::string(label) + "'");
    }
    if (rho.layout().size() == 1) return rho;
    const std::string keep[] = {std::string(label)};
    return partial_trace(rho, keep);
}

}  // namespace

QubitPureState::QubitPureState(Complex c0, Complex c1) : c0_(c0), c1_(c1) {
    const double norm = std::norm(c0) + std::norm(c1);
    if (std::abs(norm - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "QubitPureState: amplitudes have squared norm " << norm;
        throw std::invalid_argument(msg.str());
    }
}

QubitPureState QubitPureState::from_angle(double theta, double relative_phase) {
    return {Complex(std::cos(theta), 0.0), std::polar(std::sin(theta), relative_phase)};
}

ComplexVector QubitPureState::vector() const {
    ComplexVector v(2);
    v << c0_, c1_;
    return v;
}

double transfer_fidelity(const DensityMatrix& rho, const QubitPureState& target) {
    const auto sc = single_subsystem(rho, "sc");
    const ComplexVector psi = target.vector();
    const Complex f = psi.dot(sc.matrix() * psi);  // dot conjugates the left operand
    if (std::abs(f.imag()) > 1e-12 * std::max(1.0, std::abs(f.real()))) {
        std::ostringstream msg;
        msg << "transfer_fidelity: overlap has imaginary part " << f.imag();
        throw std::domain_error(msg.str());
    }
    return f.real();
}

double concurrence(const DensityMatrix& rho2q) {
    const auto& subs = rho2q.layout().subsystems();
    if (subs.size() != 2 || subs[0].dim != 2 || subs[1].dim != 2) {
        throw std::invalid_argument("concurrence: state must live on two qubits");
    }
    rho2q.require_valid();

    // The lambda_i are the eigenvalues of R = sqrt(sqrt(rho) rho~ sqrt(rho)),
    // i.e. the singular values of sqrt(rho) sqrt(rho~). Taking them from an
    // SVD avoids square roots of round-off sized eigenvalues.
    const auto eig = herm_eig(rho2q.matrix());
    const double floor = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, eig.values[0]);
    Eigen::VectorXd roots(4);
    for (Eigen::Index i = 0; i < 4; ++i) {
        const double v = eig.values[static_cast<std::size_t>(i)];
        roots(i) = v > floor ? std::sqrt(v) : 0.0;
    }
    const ComplexMatrix sqrt_rho = eig.vectors * roots.asDiagonal() * eig.vectors.adjoint();
    const ComplexMatrix yy = kron(sigma_y(), sigma_y());
    const ComplexMatrix sqrt_flipped = yy * sqrt_rho.conjugate() * yy;

    Eigen::JacobiSVD<ComplexMatrix> svd(sqrt_rho * sqrt_flipped);
    const Eigen::VectorXd lambda = svd.singularValues();  // descending
    return std::max(0.0, lambda(0) - lambda(1) - lambda(2) - lambda(3));
}

Occupation mode_occupation(const DensityMatrix& rho, std::string_view label) {
    const auto mode = single_subsystem(rho, label);
    const auto n = mode.matrix().rows();
    Occupation occ;
    for (Eigen::Index k = 0; k < n; ++k) occ.mean += static_cast<double>(k) * mode.matrix()(k, k).real();
    occ.top_population = mode.matrix()(n - 1, n - 1).real();
    occ.truncation_suspect = occ.top_population > kTopLevelWarning;
    return occ;
}

double purity(const DensityMatrix& rho) { return (rho.matrix() * rho.matrix()).trace().real(); }

}  // namespace nvsc
