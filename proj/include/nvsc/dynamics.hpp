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

// dynamics.hpp: Lindblad time evolution.
//
//   d rho/dt = -i[H(t), rho] + sum_k (r_k/2) (2 o_k rho o_k^dag - o_k^dag o_k rho - rho o_k^dag o_k)
//
// Production propagation is fixed-step RK4 on a sector-blocked density
// matrix. The basis is split into sectors that H(t) and every o^dag o leave
// invariant; only the (sector, sector) blocks of rho reachable from the
// initial state are stored. The superoperator exponential in
// propagate_oracle is an independent dense route for verification.

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nvsc/model.hpp"
#include "nvsc/operator_algebra.hpp"

namespace nvsc {

struct EvolutionSpec {
    double t_final{5.0};              // g t
    double dt{1e-3};                  // 1/g
    std::size_t record_stride{10};
    double tolerance_trace{1e-8};
    bool record_health{false};        // adds hermiticity and min_eigenvalue columns

    void validate() const;
    std::size_t steps() const;
};

/// Thrown when |tr rho - 1| exceeds EvolutionSpec::tolerance_trace.
class TraceDriftError : public std::runtime_error {
public:
    TraceDriftError(double time, double trace);
    double time() const { return time_; }
    double trace() const { return trace_; }

private:
    double time_;
    double trace_;
};

// ---------------------------------------------------------------------------
// Sector-blocked Liouvillian
// ---------------------------------------------------------------------------

/// Partition of the basis into connected components of the coupling graph of
/// H(t) and every o^dag o with nonzero rate.
class SectorPartition {
public:
    explicit SectorPartition(const HamiltonianSet& h);

    std::size_t count() const { return members_.size(); }
    std::size_t dim() const { return sector_of_.size(); }
    const std::vector<Eigen::Index>& members(std::size_t sector) const { return members_[sector]; }
    std::size_t sector_of(Eigen::Index i) const { return sector_of_[static_cast<std::size_t>(i)]; }
    Eigen::Index local_index(Eigen::Index i) const { return local_[static_cast<std::size_t>(i)]; }

private:
    std::vector<std::vector<Eigen::Index>> members_;
    std::vector<std::size_t> sector_of_;
    std::vector<Eigen::Index> local_;
};

/// Lindbladian acting on the packed block storage of a density matrix.
/// Holds scratch space: one instance per concurrent propagation.
class BlockLindbladian {
public:
    /// Active blocks are the support of `rho0` closed under the jump maps.
    BlockLindbladian(const HamiltonianSet& h, const DensityMatrix& rho0);
    BlockLindbladian(const HamiltonianSet& h, const SparseOperator& rho0);
    BlockLindbladian(const BlockLindbladian&) = delete;
    BlockLindbladian& operator=(const BlockLindbladian&) = delete;

    const SystemLayout& layout() const { return layout_; }
    const SectorPartition& partition() const { return partition_; }
    std::size_t block_count() const { return blocks_.size(); }
    Eigen::Index state_size() const { return state_size_; }

    /// Throws std::invalid_argument if rho has support outside the active blocks.
    ComplexVector pack(const DensityMatrix& rho) const;
    ComplexVector pack(const SparseOperator& rho) const;
    DensityMatrix unpack(const ComplexVector& x) const;

    /// out = L(t) x for Hermitian x. Only blocks on or above the sector
    /// diagonal are evaluated; the rest are filled in by adjoint.
    void apply(double t, const ComplexVector& x, ComplexVector& out) const;
    /// rho <- (rho + rho^dag) / 2
    void symmetrize(ComplexVector& x) const;

    Complex trace(const ComplexVector& x) const;
    double purity(const ComplexVector& x) const;
    double hermiticity(const ComplexVector& x) const;
    double min_eigenvalue(const ComplexVector& x) const;
    DensityMatrix reduced(const ComplexVector& x, std::span<const std::string> keep) const;

private:
    /// Coordinate-list operator restricted to one (sector, sector) pair.
    struct SectorOp {
        Eigen::Index rows{0};
        Eigen::Index cols{0};
        std::vector<Eigen::Index> row;
        std::vector<Eigen::Index> col;
        std::vector<Complex> value;

        bool empty() const { return value.empty(); }
    };
    struct SubOp {
        std::size_t from;
        std::size_t to;
        SectorOp op;
    };
    struct JumpSource {
        std::size_t source_block;
        double rate;
        const SectorOp* left;        // o restricted to rows I', cols I
        const SectorOp* right_adj;   // (o restricted to rows J', cols J)^dag
    };
    struct Block {
        std::size_t row_sector;
        std::size_t col_sector;
        Eigen::Index offset;
        Eigen::Index rows;
        Eigen::Index cols;
        std::size_t mirror{0};  // index of the (col_sector, row_sector) block
        std::vector<JumpSource> sources;
    };

    SystemLayout layout_;
    SectorPartition partition_;
    std::vector<SectorOp> heff_;      // -i * Heff per sector
    std::vector<SectorOp> heff_adj_;  // +i * Heff^dag per sector
    std::vector<double> frequencies_;
    std::vector<std::vector<SectorOp>> osc_;      // [term][sector] -i * T
    std::vector<std::vector<SectorOp>> osc_adj_;  // [term][sector] +i * T^dag
    std::vector<std::vector<SubOp>> jumps_;             // [channel] sector-to-sector pieces
    std::vector<std::vector<SubOp>> jumps_adj_;
    std::vector<double> rates_;
    std::vector<Block> blocks_;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> block_index_;
    Eigen::Index state_size_{0};
    mutable ComplexMatrix scratch_;
    mutable std::vector<Complex> phase_;
};

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

/// What observers see at each record time.
class StateView {
public:
    StateView(const BlockLindbladian& lindbladian, const ComplexVector& state, double time)
        : lindbladian_(lindbladian), state_(state), time_(time) {}

    double time() const { return time_; }
    const SystemLayout& layout() const { return lindbladian_.layout(); }
    DensityMatrix reduced(std::span<const std::string> keep) const { return lindbladian_.reduced(state_, keep); }
    DensityMatrix dense() const { return lindbladian_.unpack(state_); }

private:
    const BlockLindbladian& lindbladian_;
    const ComplexVector& state_;
    double time_;
};

struct Observer {
    std::string name;
    std::function<double(const StateView&)> measure;
};

struct TimeSeries {
    std::vector<double> times;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  // rows[sample][column]
    std::optional<DensityMatrix> final_state;

    /// Throws std::out_of_range for unknown names.
    std::size_t column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
};

/// Dense right-hand side of the master equation at time t.
ComplexMatrix lindblad_rhs(const DensityMatrix& rho, const HamiltonianSet& h, double t = 0.0);

/// final_state is only materialized up to this total dimension.
inline constexpr std::size_t kDenseStateMaxDim = 2048;

/// Fixed-step classic RK4. Records trace and purity plus every observer at
/// t = 0, every `record_stride` steps, and the final step.
TimeSeries propagate_rk4(const DensityMatrix& rho0, const HamiltonianSet& h, const EvolutionSpec& spec,
                         std::span<const Observer> observers = {});

/// Same, starting from the pure state |psi0><psi0| without forming it densely.
TimeSeries propagate_rk4(const ComplexVector& psi0, const HamiltonianSet& h, const EvolutionSpec& spec,
                         std::span<const Observer> observers = {});

inline constexpr std::size_t kOracleMaxDim = 64;

/// unvec(expm(L t) vec(rho0)) with column-stacking vec. Total dimension is
/// capped at kOracleMaxDim; time-dependent sets are rejected.
DensityMatrix propagate_oracle(const DensityMatrix& rho0, const HamiltonianSet& h, double t);

/// Dense Liouvillian in the column-stacking convention.
ComplexMatrix liouvillian(const HamiltonianSet& h);

/// RK4 on the linearized model before the rotating-wave approximation.
/// Requires dt <= 0.02 / omega_b.
TimeSeries propagate_timedep(const DensityMatrix& rho0, const ModelParams& m, const EvolutionSpec& spec,
                             std::span<const Observer> observers = {});
TimeSeries propagate_timedep(const ComplexVector& psi0, const SystemLayout& layout, const ModelParams& m,
                             const EvolutionSpec& spec, std::span<const Observer> observers = {});

}  // namespace nvsc
