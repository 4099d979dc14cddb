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

#include "nvsc/operator_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace nvsc {

namespace {

constexpr double kHermitianTol = 1e-10;
constexpr double kClampTol = 1e-10;

using Triplet = Eigen::Triplet<Complex>;

// Tolerances on Hermiticity scale with the entry magnitude once it exceeds 1.
double hermitian_tolerance(const ComplexMatrix& a) {
    const double scale = a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
    return kHermitianTol * std::max(1.0, scale);
}

}  // namespace

// ---------------------------------------------------------------------------
// SystemLayout
// ---------------------------------------------------------------------------

SystemLayout::SystemLayout(std::vector<Subsystem> subsystems) : subsystems_(std::move(subsystems)) {
    if (subsystems_.empty()) {
        throw std::invalid_argument("SystemLayout: at least one subsystem required");
    }
    std::set<std::string> seen;
    for (const auto& s : subsystems_) {
        if (s.dim < 1) {
            throw std::invalid_argument("SystemLayout: subsystem '" + s.label + "' has dimension 0");
        }
        if (!seen.insert(s.label).second) {
            throw std::invalid_argument("SystemLayout: duplicate label '" + s.label + "'");
        }
        total_dim_ *= s.dim;
    }
}

SystemLayout SystemLayout::canonical(std::size_t n_opt, std::size_t n_mw) {
    return SystemLayout({{"nv", 2}, {"sc", 2}, {"opt", n_opt}, {"mw", n_mw}});
}

bool SystemLayout::contains(std::string_view label) const {
    return std::any_of(subsystems_.begin(), subsystems_.end(),
                       [&](const Subsystem& s) { return s.label == label; });
}

std::size_t SystemLayout::index_of(std::string_view label) const {
    for (std::size_t i = 0; i < subsystems_.size(); ++i) {
        if (subsystems_[i].label == label) return i;
    }
    throw std::invalid_argument("SystemLayout: unknown subsystem label '" + std::string(label) + "'");
}

SystemLayout SystemLayout::reduced(std::span<const std::string> keep) const {
    if (keep.empty()) throw std::invalid_argument("SystemLayout::reduced: keep list is empty");
    std::vector<bool> flag(subsystems_.size(), false);
    for (const auto& label : keep) {
        const auto i = index_of(label);
        if (flag[i]) throw std::invalid_argument("SystemLayout::reduced: label '" + label + "' repeated");
        flag[i] = true;
    }
    std::vector<Subsystem> out;
    for (std::size_t i = 0; i < subsystems_.size(); ++i) {
        if (flag[i]) out.push_back(subsystems_[i]);
    }
    return SystemLayout(std::move(out));
}

std::vector<std::size_t> SystemLayout::digits(std::size_t index) const {
    std::vector<std::size_t> d(subsystems_.size());
    for (std::size_t i = subsystems_.size(); i-- > 0;) {
        d[i] = index % subsystems_[i].dim;
        index /= subsystems_[i].dim;
    }
    return d;
}

std::size_t SystemLayout::index(std::span<const std::size_t> digits) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < subsystems_.size(); ++i) idx = idx * subsystems_[i].dim + digits[i];
    return idx;
}

// ---------------------------------------------------------------------------
// DensityMatrix
// ---------------------------------------------------------------------------

DensityMatrix::DensityMatrix(SystemLayout layout, ComplexMatrix matrix)
    : layout_(std::move(layout)), matrix_(std::move(matrix)) {
    const auto n = static_cast<Eigen::Index>(layout_.total_dim());
    if (matrix_.rows() != n || matrix_.cols() != n) {
        std::ostringstream msg;
        msg << "DensityMatrix: matrix is " << matrix_.rows() << "x" << matrix_.cols()
            << " but layout dimension is " << n;
        throw std::invalid_argument(msg.str());
    }
}

DensityMatrix DensityMatrix::from_pure(SystemLayout layout, const ComplexVector& psi) {
    return DensityMatrix(std::move(layout), psi * psi.adjoint());
}

StateHealth DensityMatrix::health() const {
    StateHealth h;
    h.hermiticity = hermiticity_error(matrix_);
    h.trace_error = std::abs(matrix_.trace() - Complex(1.0, 0.0));
    const ComplexMatrix sym = 0.5 * (matrix_ + matrix_.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym, Eigen::EigenvaluesOnly);
    h.min_eigenvalue = solver.eigenvalues().minCoeff();
    return h;
}

void DensityMatrix::require_valid() const {
    const auto h = health();
    if (h.hermiticity > 1e-10 || h.trace_error > 1e-8 || h.min_eigenvalue < -1e-8) {
        std::ostringstream msg;
        msg << "DensityMatrix: invalid state (hermiticity " << h.hermiticity << ", trace error "
            << h.trace_error << ", min eigenvalue " << h.min_eigenvalue << ")";
        throw std::domain_error(msg.str());
    }
}

// ---------------------------------------------------------------------------
// Products and embedding
// ---------------------------------------------------------------------------

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

SparseOperator kron(const SparseOperator& a, const SparseOperator& b) {
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
    for (int ka = 0; ka < a.outerSize(); ++ka) {
        for (SparseOperator::InnerIterator ia(a, ka); ia; ++ia) {
            for (int kb = 0; kb < b.outerSize(); ++kb) {
                for (SparseOperator::InnerIterator ib(b, kb); ib; ++ib) {
                    triplets.emplace_back(static_cast<int>(ia.row() * b.rows() + ib.row()),
                                          static_cast<int>(ia.col() * b.cols() + ib.col()),
                                          ia.value() * ib.value());
                }
            }
        }
    }
    SparseOperator out(a.rows() * b.rows(), a.cols() * b.cols());
    out.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

SparseOperator to_sparse(const ComplexMatrix& a) {
    std::vector<Triplet> triplets;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            if (a(i, j) != Complex(0.0, 0.0)) {
                triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), a(i, j));
            }
        }
    }
    SparseOperator out(a.rows(), a.cols());
    out.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

ComplexMatrix to_dense(const SparseOperator& a) { return ComplexMatrix(a); }

SparseOperator sparse_identity(std::size_t n) {
    SparseOperator id(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    id.setIdentity();
    return id;
}

SparseOperator embed(const ComplexMatrix& op, std::string_view target, const SystemLayout& layout) {
    const auto slot = layout.index_of(target);
    const auto d = static_cast<Eigen::Index>(layout.subsystems()[slot].dim);
    if (op.rows() != d || op.cols() != d) {
        std::ostringstream msg;
        msg << "embed: operator is " << op.rows() << "x" << op.cols() << " but subsystem '" << target
            << "' has dimension " << d;
        throw std::invalid_argument(msg.str());
    }
    std::size_t before = 1;
    std::size_t after = 1;
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (i < slot) before *= layout.subsystems()[i].dim;
        if (i > slot) after *= layout.subsystems()[i].dim;
    }
    return kron(kron(sparse_identity(before), to_sparse(op)), sparse_identity(after));
}

ComplexMatrix annihilation(std::size_t n) {
    if (n < 2) throw std::invalid_argument("annihilation: truncation must be >= 2");
    ComplexMatrix a = ComplexMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t k = 1; k < n; ++k) {
        a(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = std::sqrt(static_cast<double>(k));
    }
    return a;
}

ComplexMatrix sigma_x() {
    ComplexMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

ComplexMatrix sigma_y() {
    ComplexMatrix m(2, 2);
    m << Complex(0.0, 0.0), Complex(0.0, -1.0), Complex(0.0, 1.0), Complex(0.0, 0.0);
    return m;
}

ComplexMatrix sigma_z() {
    ComplexMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

ComplexMatrix sigma_minus() { return annihilation(2); }

// ---------------------------------------------------------------------------
// Partial trace
// ---------------------------------------------------------------------------

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::string> keep) {
    const auto& layout = rho.layout();
    SystemLayout kept = layout.reduced(keep);

    std::vector<bool> is_kept(layout.size(), false);
    for (const auto& label : keep) is_kept[layout.index_of(label)] = true;

    // Split every composite index into (kept index, traced index).
    const std::size_t n = layout.total_dim();
    const std::size_t n_keep = kept.total_dim();
    const std::size_t n_trace = n / n_keep;
    std::vector<std::vector<Eigen::Index>> by_trace(n_trace, std::vector<Eigen::Index>(n_keep));
    for (std::size_t idx = 0; idx < n; ++idx) {
        const auto d = layout.digits(idx);
        std::size_t k = 0;
        std::size_t t = 0;
        for (std::size_t s = 0; s < layout.size(); ++s) {
            if (is_kept[s]) {
                k = k * layout.subsystems()[s].dim + d[s];
            } else {
                t = t * layout.subsystems()[s].dim + d[s];
            }
        }
        by_trace[t][k] = static_cast<Eigen::Index>(idx);
    }

    const auto& m = rho.matrix();
    ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(n_keep), static_cast<Eigen::Index>(n_keep));
    for (const auto& rows : by_trace) {
        for (std::size_t j = 0; j < n_keep; ++j) {
            for (std::size_t i = 0; i < n_keep; ++i) {
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += m(rows[i], rows[j]);
            }
        }
    }
    return DensityMatrix(std::move(kept), std::move(out));
}

// ---------------------------------------------------------------------------
// Spectral routines
// ---------------------------------------------------------------------------

double hermiticity_error(const ComplexMatrix& a) {
    if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
    if (a.size() == 0) return 0.0;
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

double hermiticity_error(const SparseOperator& a) {
    if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
    SparseOperator diff = a - SparseOperator(a.adjoint());
    double worst = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k) {
        for (SparseOperator::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    }
    return worst;
}

EigenSystem herm_eig(const ComplexMatrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("herm_eig: matrix is not square");
    const double err = hermiticity_error(a);
    if (err > hermitian_tolerance(a)) {
        std::ostringstream msg;
        msg << "herm_eig: input is not Hermitian (max |A - A^dagger| = " << err << ")";
        throw std::domain_error(msg.str());
    }
    const ComplexMatrix sym = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
    if (solver.info() != Eigen::Success) throw std::runtime_error("herm_eig: eigensolver failed");

    // Eigen returns ascending order.
    const auto n = sym.rows();
    EigenSystem out;
    out.values.resize(static_cast<std::size_t>(n));
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values[static_cast<std::size_t>(i)] = solver.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return out;
}

ComplexMatrix psd_sqrt(const ComplexMatrix& a) {
    auto eig = herm_eig(a);
    Eigen::VectorXd roots(static_cast<Eigen::Index>(eig.values.size()));
    for (std::size_t i = 0; i < eig.values.size(); ++i) {
        const double lambda = eig.values[i];
        if (lambda < -kClampTol) {
            std::ostringstream msg;
            msg << "psd_sqrt: eigenvalue " << lambda << " is below the clamp tolerance";
            throw std::domain_error(msg.str());
        }
        roots(static_cast<Eigen::Index>(i)) = std::sqrt(std::max(lambda, 0.0));
    }
    return eig.vectors * roots.asDiagonal() * eig.vectors.adjoint();
}

ComplexMatrix expm(const ComplexMatrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("expm: matrix is not square");
    return a.exp();
}

}  // namespace nvsc
