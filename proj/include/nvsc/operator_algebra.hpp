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

// operator_algebra.hpp: dense/sparse complex matrices, tensor-product
// bookkeeping and the small set of spectral routines the simulator needs.

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace nvsc {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using SparseOperator = Eigen::SparseMatrix<Complex>;

inline constexpr Complex kI{0.0, 1.0};

// ---------------------------------------------------------------------------
// Tensor-product layout
// ---------------------------------------------------------------------------

struct Subsystem {
    std::string label;
    std::size_t dim{1};

    bool operator==(const Subsystem&) const = default;
};

/// Ordered list of labelled factors. Basis index of the composite space is
/// row-major in the factor order: the last subsystem varies fastest.
class SystemLayout {
public:
    explicit SystemLayout(std::vector<Subsystem> subsystems);

    /// [nv: 2, sc: 2, opt: n_opt, mw: n_mw]
    static SystemLayout canonical(std::size_t n_opt, std::size_t n_mw);

    const std::vector<Subsystem>& subsystems() const { return subsystems_; }
    std::size_t size() const { return subsystems_.size(); }
    std::size_t total_dim() const { return total_dim_; }

    bool contains(std::string_view label) const;
    /// Position of `label` in the factor list; throws std::invalid_argument.
    std::size_t index_of(std::string_view label) const;
    std::size_t dim(std::string_view label) const { return subsystems_[index_of(label)].dim; }

    /// Layout restricted to `keep`, in this layout's order.
    SystemLayout reduced(std::span<const std::string> keep) const;

    /// Digits of a composite basis index, one per subsystem.
    std::vector<std::size_t> digits(std::size_t index) const;
    std::size_t index(std::span<const std::size_t> digits) const;

    bool operator==(const SystemLayout& other) const { return subsystems_ == other.subsystems_; }

private:
    std::vector<Subsystem> subsystems_;
    std::size_t total_dim_{1};
};

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

struct StateHealth {
    double hermiticity{0.0};     // max |rho - rho^dagger|
    double trace_error{0.0};     // |tr rho - 1|
    double min_eigenvalue{0.0};
};

class DensityMatrix {
public:
    /// Shape-checked only; call require_valid() for the physical invariants.
    DensityMatrix(SystemLayout layout, ComplexMatrix matrix);

    static DensityMatrix from_pure(SystemLayout layout, const ComplexVector& psi);

    const SystemLayout& layout() const { return layout_; }
    const ComplexMatrix& matrix() const { return matrix_; }
    std::size_t dim() const { return layout_.total_dim(); }

    Complex trace() const { return matrix_.trace(); }
    StateHealth health() const;

    /// Throws std::domain_error unless Hermitian within 1e-10, unit trace
    /// within 1e-8 and min eigenvalue >= -1e-8.
    void require_valid() const;

private:
    SystemLayout layout_;
    ComplexMatrix matrix_;
};

// ---------------------------------------------------------------------------
// Kernel operations
// ---------------------------------------------------------------------------

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
SparseOperator kron(const SparseOperator& a, const SparseOperator& b);

/// Exact nonzeros of `a`, no duplicate entries.
SparseOperator to_sparse(const ComplexMatrix& a);
ComplexMatrix to_dense(const SparseOperator& a);
SparseOperator sparse_identity(std::size_t n);

/// I (x) ... (x) op (x) ... (x) I with `op` in the slot of `target`.
SparseOperator embed(const ComplexMatrix& op, std::string_view target, const SystemLayout& layout);

/// Truncated bosonic lowering operator on Fock levels 0..n-1.
ComplexMatrix annihilation(std::size_t n);

ComplexMatrix sigma_x();
ComplexMatrix sigma_y();
ComplexMatrix sigma_z();
/// |0><1|, identical to annihilation(2).
ComplexMatrix sigma_minus();

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::string> keep);

/// max |a - a^dagger| over entries.
double hermiticity_error(const ComplexMatrix& a);
double hermiticity_error(const SparseOperator& a);

struct EigenSystem {
    std::vector<double> values;   // descending
    ComplexMatrix vectors;        // column i pairs with values[i]
};

/// Throws std::domain_error for inputs that are not Hermitian within 1e-10.
EigenSystem herm_eig(const ComplexMatrix& a);

/// Principal square root of a PSD matrix; eigenvalues in [-1e-10, 0) are
/// clamped, anything more negative throws std::domain_error.
ComplexMatrix psd_sqrt(const ComplexMatrix& a);

/// Scaling-and-squaring matrix exponential.
ComplexMatrix expm(const ComplexMatrix& a);

}  // namespace nvsc
