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

#include "nvsc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <sstream>

namespace nvsc {

namespace {

using Triplet = Eigen::Triplet<Complex>;

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

template <typename F>
void for_each_nonzero(const SparseOperator& op, F&& f) {
    for (int k = 0; k < op.outerSize(); ++k) {
        for (SparseOperator::InnerIterator it(op, k); it; ++it) {
            if (it.value() != Complex(0.0, 0.0)) f(it.row(), it.col(), it.value());
        }
    }
}

SparseOperator dissipative_part(const HamiltonianSet& h) {
    SparseOperator acc(h.hamiltonian.rows(), h.hamiltonian.cols());
    for (const auto& c : h.collapse) {
        if (c.rate == 0.0) continue;
        acc += c.rate * SparseOperator(SparseOperator(c.op.adjoint()) * c.op);
    }
    return acc;
}

void check_dimensions(Eigen::Index n, const HamiltonianSet& h) {
    bool ok = h.hamiltonian.rows() == n && h.hamiltonian.cols() == n;
    for (const auto& t : h.oscillating) ok = ok && t.op.rows() == n && t.op.cols() == n;
    for (const auto& c : h.collapse) ok = ok && c.op.rows() == n && c.op.cols() == n;
    if (!ok) {
        std::ostringstream msg;
        msg << "dimension mismatch: density matrix is " << n << "-dimensional but the Hamiltonian set is "
            << h.hamiltonian.rows() << "-dimensional";
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// EvolutionSpec
// ---------------------------------------------------------------------------

void EvolutionSpec::validate() const {
    if (!(t_final > 0.0) || !std::isfinite(t_final)) throw std::invalid_argument("t_final: must be > 0");
    if (!(dt > 0.0) || dt > 0.01) throw std::invalid_argument("dt: must lie in (0, 0.01]");
    if (record_stride < 1) throw std::invalid_argument("record_stride: must be >= 1");
    if (!(tolerance_trace > 0.0)) throw std::invalid_argument("tolerance_trace: must be > 0");
    (void)steps();
}

std::size_t EvolutionSpec::steps() const {
    const double ratio = t_final / dt;
    const double n = std::round(ratio);
    if (std::abs(n - ratio) > 1e-6 || n < 1.0) {
        std::ostringstream msg;
        msg << "t_final: " << t_final << " is not an integer multiple of dt = " << dt;
        throw std::invalid_argument(msg.str());
    }
    return static_cast<std::size_t>(n);
}

TraceDriftError::TraceDriftError(double time, double trace)
    : std::runtime_error([&] {
          std::ostringstream msg;
          msg.precision(12);
          msg << "trace drift: tr(rho) = " << trace << " at g t = " << time;
          return msg.str();
      }()),
      time_(time),
      trace_(trace) {}

// ---------------------------------------------------------------------------
// SectorPartition
// ---------------------------------------------------------------------------

SectorPartition::SectorPartition(const HamiltonianSet& h) {
    const auto n = static_cast<std::size_t>(h.hamiltonian.rows());
    DisjointSets sets(n);
    auto link = [&](Eigen::Index r, Eigen::Index c, Complex) {
        sets.unite(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    };
    for_each_nonzero(h.hamiltonian, link);
    for (const auto& term : h.oscillating) for_each_nonzero(term.op, link);
    for_each_nonzero(dissipative_part(h), link);

    sector_of_.resize(n);
    local_.resize(n);
    std::vector<std::size_t> sector_of_root(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto root = sets.find(i);
        if (sector_of_root[root] == n) {
            sector_of_root[root] = members_.size();
            members_.emplace_back();
        }
        const auto s = sector_of_root[root];
        sector_of_[i] = s;
        local_[i] = static_cast<Eigen::Index>(members_[s].size());
        members_[s].push_back(static_cast<Eigen::Index>(i));
    }
}

// ---------------------------------------------------------------------------
// BlockLindbladian
// ---------------------------------------------------------------------------

namespace {

// Splits `op` into pieces connecting sector `from` (columns) to sector `to` (rows).
std::map<std::pair<std::size_t, std::size_t>, std::vector<Triplet>> split_by_sector(const SparseOperator& op,
                                                                                    const SectorPartition& part) {
    std::map<std::pair<std::size_t, std::size_t>, std::vector<Triplet>> pieces;
    for_each_nonzero(op, [&](Eigen::Index r, Eigen::Index c, Complex v) {
        pieces[{part.sector_of(c), part.sector_of(r)}].emplace_back(
            static_cast<int>(part.local_index(r)), static_cast<int>(part.local_index(c)), v);
    });
    return pieces;
}

SparseOperator from_triplets(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& t) {
    SparseOperator out(rows, cols);
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

// Per-sector diagonal pieces of an operator known to be sector-diagonal.
std::vector<SparseOperator> diagonal_pieces(const SparseOperator& op, const SectorPartition& part) {
    std::vector<std::vector<Triplet>> triplets(part.count());
    for (auto& [key, t] : split_by_sector(op, part)) {
        if (key.first != key.second) throw std::logic_error("operator couples distinct sectors");
        triplets[key.first] = std::move(t);
    }
    std::vector<SparseOperator> out;
    out.reserve(part.count());
    for (std::size_t s = 0; s < part.count(); ++s) {
        const auto n = static_cast<Eigen::Index>(part.members(s).size());
        out.push_back(from_triplets(n, n, triplets[s]));
    }
    return out;
}

// The kernels below spell out complex products: std::complex operator* goes
// through the Annex G inf/nan path, which dominates small-block runtimes.
inline void fma_complex(double* out, double ar, double ai, const double* b) {
    out[0] += ar * b[0] - ai * b[1];
    out[1] += ar * b[1] + ai * b[0];
}

template <typename Op>
Op compact(const SparseOperator& s, Complex scale) {
    Op op;
    op.rows = s.rows();
    op.cols = s.cols();
    for_each_nonzero(s, [&](Eigen::Index r, Eigen::Index c, Complex v) {
        op.row.push_back(r);
        op.col.push_back(c);
        op.value.push_back(scale * v);
    });
    return op;
}

// out(rows(S) x n) += alpha * S * B, B is cols(S) x n, all column-major.
template <typename Op>
void left_multiply_add(const Op& s, Complex alpha, const Complex* b, Eigen::Index n, Complex* out) {
    const auto nnz = s.value.size();
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto* bj = reinterpret_cast<const double*>(b + j * s.cols);
        auto* oj = reinterpret_cast<double*>(out + j * s.rows);
        for (std::size_t e = 0; e < nnz; ++e) {
            const Complex v = alpha * s.value[e];
            fma_complex(oj + 2 * s.row[e], v.real(), v.imag(), bj + 2 * s.col[e]);
        }
    }
}

// out(m x cols(T)) += alpha * B * T, B is m x rows(T), all column-major.
template <typename Op>
void right_multiply_add(const Complex* b, Eigen::Index m, const Op& t, Complex alpha, Complex* out) {
    const auto nnz = t.value.size();
    for (std::size_t e = 0; e < nnz; ++e) {
        const Complex v = alpha * t.value[e];
        const double vr = v.real();
        const double vi = v.imag();
        const auto* bk = reinterpret_cast<const double*>(b + t.row[e] * m);
        auto* oc = reinterpret_cast<double*>(out + t.col[e] * m);
        for (Eigen::Index i = 0; i < m; ++i) fma_complex(oc + 2 * i, vr, vi, bk + 2 * i);
    }
}

}  // namespace

BlockLindbladian::BlockLindbladian(const HamiltonianSet& h, const DensityMatrix& rho0)
    : BlockLindbladian(h, to_sparse(rho0.matrix())) {
    if (!(rho0.layout() == layout_)) throw std::invalid_argument("BlockLindbladian: rho0 layout differs from model layout");
}

BlockLindbladian::BlockLindbladian(const HamiltonianSet& h, const SparseOperator& rho0)
    : layout_(h.layout), partition_(h) {
    if (rho0.rows() != rho0.cols()) throw std::invalid_argument("BlockLindbladian: rho0 must be square");
    check_dimensions(rho0.rows(), h);
    const auto& part = partition_;

    const SparseOperator heff = h.hamiltonian - Complex(0.0, 0.5) * dissipative_part(h);
    for (auto& piece : diagonal_pieces(heff, part)) {
        heff_.push_back(compact<SectorOp>(piece, -kI));
        heff_adj_.push_back(compact<SectorOp>(SparseOperator(piece.adjoint()), kI));
    }
    for (const auto& term : h.oscillating) {
        frequencies_.push_back(term.frequency);
        auto& fwd = osc_.emplace_back();
        auto& adj = osc_adj_.emplace_back();
        for (auto& piece : diagonal_pieces(term.op, part)) {
            fwd.push_back(compact<SectorOp>(piece, -kI));
            adj.push_back(compact<SectorOp>(SparseOperator(piece.adjoint()), kI));
        }
    }
    phase_.resize(frequencies_.size());
    for (const auto& channel : h.collapse) {
        if (channel.rate == 0.0) continue;
        rates_.push_back(channel.rate);
        auto& fwd = jumps_.emplace_back();
        auto& adj = jumps_adj_.emplace_back();
        for (auto& [key, t] : split_by_sector(channel.op, part)) {
            const auto rows = static_cast<Eigen::Index>(part.members(key.second).size());
            const auto cols = static_cast<Eigen::Index>(part.members(key.first).size());
            const SparseOperator piece = from_triplets(rows, cols, t);
            adj.push_back({key.first, key.second, compact<SectorOp>(SparseOperator(piece.adjoint()), 1.0)});
            fwd.push_back({key.first, key.second, compact<SectorOp>(piece, 1.0)});
        }
    }

    // Support of rho0, then closure under rho -> o rho o^dag.
    std::set<std::pair<std::size_t, std::size_t>> active;
    for_each_nonzero(rho0, [&](Eigen::Index r, Eigen::Index c, Complex v) {
        if (v == Complex(0.0, 0.0)) return;
        active.insert({part.sector_of(r), part.sector_of(c)});
        active.insert({part.sector_of(c), part.sector_of(r)});
    });
    std::deque<std::pair<std::size_t, std::size_t>> queue(active.begin(), active.end());
    while (!queue.empty()) {
        const auto [row_s, col_s] = queue.front();
        queue.pop_front();
        for (const auto& pieces : jumps_) {
            for (const auto& p : pieces) {
                if (p.from != row_s) continue;
                for (const auto& q : pieces) {
                    if (q.from != col_s) continue;
                    if (active.insert({p.to, q.to}).second) queue.emplace_back(p.to, q.to);
                }
            }
        }
    }

    Eigen::Index offset = 0;
    for (const auto& [row_s, col_s] : active) {
        Block b;
        b.row_sector = row_s;
        b.col_sector = col_s;
        b.offset = offset;
        b.rows = static_cast<Eigen::Index>(part.members(row_s).size());
        b.cols = static_cast<Eigen::Index>(part.members(col_s).size());
        offset += b.rows * b.cols;
        block_index_[{row_s, col_s}] = blocks_.size();
        blocks_.push_back(std::move(b));
    }
    state_size_ = offset;
    for (auto& b : blocks_) b.mirror = block_index_.at({b.col_sector, b.row_sector});

    for (auto& b : blocks_) {
        for (std::size_t k = 0; k < jumps_.size(); ++k) {
            const auto& pieces = jumps_[k];
            for (std::size_t pi = 0; pi < pieces.size(); ++pi) {
                if (pieces[pi].to != b.row_sector) continue;
                for (std::size_t qi = 0; qi < pieces.size(); ++qi) {
                    if (pieces[qi].to != b.col_sector) continue;
                    const auto src = block_index_.find({pieces[pi].from, pieces[qi].from});
                    if (src == block_index_.end()) continue;
                    b.sources.push_back({src->second, rates_[k], &pieces[pi].op, &jumps_adj_[k][qi].op});
                }
            }
        }
    }
}

ComplexVector BlockLindbladian::pack(const DensityMatrix& rho) const {
    if (!(rho.layout() == layout_)) throw std::invalid_argument("pack: layout mismatch");
    return pack(to_sparse(rho.matrix()));
}

ComplexVector BlockLindbladian::pack(const SparseOperator& rho) const {
    const auto n = static_cast<Eigen::Index>(layout_.total_dim());
    if (rho.rows() != n || rho.cols() != n) throw std::invalid_argument("pack: dimension mismatch");
    ComplexVector x = ComplexVector::Zero(state_size_);
    for_each_nonzero(rho, [&](Eigen::Index r, Eigen::Index c, Complex v) {
        if (v == Complex(0.0, 0.0)) return;
        const auto it = block_index_.find({partition_.sector_of(r), partition_.sector_of(c)});
        if (it == block_index_.end()) {
            throw std::invalid_argument("pack: density matrix has support outside the active blocks");
        }
        const auto& b = blocks_[it->second];
        x(b.offset + partition_.local_index(c) * b.rows + partition_.local_index(r)) = v;
    });
    return x;
}

DensityMatrix BlockLindbladian::unpack(const ComplexVector& x) const {
    const auto n = static_cast<Eigen::Index>(layout_.total_dim());
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    for (const auto& b : blocks_) {
        Eigen::Map<const ComplexMatrix> block(x.data() + b.offset, b.rows, b.cols);
        const auto& rows = partition_.members(b.row_sector);
        const auto& cols = partition_.members(b.col_sector);
        for (Eigen::Index j = 0; j < b.cols; ++j) {
            for (Eigen::Index i = 0; i < b.rows; ++i) m(rows[i], cols[j]) = block(i, j);
        }
    }
    return DensityMatrix(layout_, std::move(m));
}

void BlockLindbladian::apply(double t, const ComplexVector& x, ComplexVector& out) const {
    out.setZero(state_size_);
    for (std::size_t k = 0; k < frequencies_.size(); ++k) phase_[k] = std::exp(kI * (frequencies_[k] * t));

    const Complex one{1.0, 0.0};
    for (const auto& b : blocks_) {
        if (b.row_sector > b.col_sector) continue;
        const Complex* rho = x.data() + b.offset;
        Complex* d = out.data() + b.offset;
        const bool diagonal = b.row_sector == b.col_sector;

        // On diagonal blocks the right products are the adjoint of the left ones.
        left_multiply_add(heff_[b.row_sector], one, rho, b.cols, d);
        for (std::size_t k = 0; k < osc_.size(); ++k) {
            left_multiply_add(osc_[k][b.row_sector], phase_[k], rho, b.cols, d);
        }
        if (diagonal) {
            Eigen::Map<ComplexMatrix> block(d, b.rows, b.cols);
            scratch_ = block.adjoint();
            block += scratch_;
        } else {
            right_multiply_add(rho, b.rows, heff_adj_[b.col_sector], one, d);
            for (std::size_t k = 0; k < osc_.size(); ++k) {
                right_multiply_add(rho, b.rows, osc_adj_[k][b.col_sector], std::conj(phase_[k]), d);
            }
        }
        for (const auto& src : b.sources) {
            const auto& sb = blocks_[src.source_block];
            // scratch = o_left * rho_src, then d += rate * scratch * o_right^dag
            scratch_.setZero(src.left->rows, sb.cols);
            left_multiply_add(*src.left, one, x.data() + sb.offset, sb.cols, scratch_.data());
            right_multiply_add(scratch_.data(), scratch_.rows(), *src.right_adj, Complex(src.rate, 0.0), d);
        }
    }
    for (const auto& b : blocks_) {
        if (b.row_sector <= b.col_sector) continue;
        const auto& upper = blocks_[b.mirror];
        Eigen::Map<ComplexMatrix>(out.data() + b.offset, b.rows, b.cols) =
            Eigen::Map<const ComplexMatrix>(out.data() + upper.offset, upper.rows, upper.cols).adjoint();
    }
}

void BlockLindbladian::symmetrize(ComplexVector& x) const {
    for (const auto& b : blocks_) {
        if (b.row_sector > b.col_sector) continue;
        Eigen::Map<ComplexMatrix> upper(x.data() + b.offset, b.rows, b.cols);
        if (b.row_sector == b.col_sector) {
            scratch_ = 0.5 * (upper + upper.adjoint());
            upper = scratch_;
            continue;
        }
        const auto& lb = blocks_[block_index_.at({b.col_sector, b.row_sector})];
        Eigen::Map<ComplexMatrix> lower(x.data() + lb.offset, lb.rows, lb.cols);
        scratch_ = 0.5 * (upper + lower.adjoint());
        upper = scratch_;
        lower = scratch_.adjoint();
    }
}

Complex BlockLindbladian::trace(const ComplexVector& x) const {
    Complex tr{0.0, 0.0};
    for (const auto& b : blocks_) {
        if (b.row_sector != b.col_sector) continue;
        tr += Eigen::Map<const ComplexMatrix>(x.data() + b.offset, b.rows, b.cols).trace();
    }
    return tr;
}

double BlockLindbladian::purity(const ComplexVector& x) const { return x.squaredNorm(); }

double BlockLindbladian::hermiticity(const ComplexVector& x) const {
    double worst = 0.0;
    for (const auto& b : blocks_) {
        if (b.row_sector > b.col_sector) continue;
        Eigen::Map<const ComplexMatrix> upper(x.data() + b.offset, b.rows, b.cols);
        const auto& lb = blocks_[block_index_.at({b.col_sector, b.row_sector})];
        Eigen::Map<const ComplexMatrix> lower(x.data() + lb.offset, lb.rows, lb.cols);
        if (b.rows * b.cols > 0) worst = std::max(worst, (upper - lower.adjoint()).cwiseAbs().maxCoeff());
    }
    return worst;
}

double BlockLindbladian::min_eigenvalue(const ComplexVector& x) const {
    // Sectors joined by active off-diagonal blocks form one Hermitian diagonal block.
    DisjointSets clusters(partition_.count());
    for (const auto& b : blocks_) clusters.unite(b.row_sector, b.col_sector);

    std::map<std::size_t, std::vector<std::size_t>> members;
    for (const auto& b : blocks_) {
        if (b.row_sector == b.col_sector) members[clusters.find(b.row_sector)].push_back(b.row_sector);
    }
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& [root, sectors] : members) {
        std::map<std::size_t, Eigen::Index> start;
        Eigen::Index n = 0;
        for (auto s : sectors) {
            start[s] = n;
            n += static_cast<Eigen::Index>(partition_.members(s).size());
        }
        ComplexMatrix m = ComplexMatrix::Zero(n, n);
        for (const auto& b : blocks_) {
            if (!start.contains(b.row_sector) || !start.contains(b.col_sector)) continue;
            m.block(start[b.row_sector], start[b.col_sector], b.rows, b.cols) =
                Eigen::Map<const ComplexMatrix>(x.data() + b.offset, b.rows, b.cols);
        }
        const ComplexMatrix sym = 0.5 * (m + m.adjoint());
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym, Eigen::EigenvaluesOnly);
        lowest = std::min(lowest, solver.eigenvalues().minCoeff());
    }
    // Inactive sectors carry zero diagonal blocks.
    std::size_t covered = 0;
    for (const auto& [root, sectors] : members) covered += sectors.size();
    if (covered < partition_.count()) lowest = std::min(lowest, 0.0);
    return lowest;
}

DensityMatrix BlockLindbladian::reduced(const ComplexVector& x, std::span<const std::string> keep) const {
    SystemLayout kept = layout_.reduced(keep);
    std::vector<bool> is_kept(layout_.size(), false);
    for (const auto& label : keep) is_kept[layout_.index_of(label)] = true;

    const std::size_t n = layout_.total_dim();
    std::vector<Eigen::Index> kept_index(n);
    std::vector<std::size_t> traced_index(n);
    for (std::size_t idx = 0; idx < n; ++idx) {
        const auto d = layout_.digits(idx);
        std::size_t k = 0;
        std::size_t t = 0;
        for (std::size_t s = 0; s < layout_.size(); ++s) {
            const auto dim = layout_.subsystems()[s].dim;
            if (is_kept[s]) {
                k = k * dim + d[s];
            } else {
                t = t * dim + d[s];
            }
        }
        kept_index[idx] = static_cast<Eigen::Index>(k);
        traced_index[idx] = t;
    }

    const auto nk = static_cast<Eigen::Index>(kept.total_dim());
    ComplexMatrix out = ComplexMatrix::Zero(nk, nk);
    for (const auto& b : blocks_) {
        Eigen::Map<const ComplexMatrix> block(x.data() + b.offset, b.rows, b.cols);
        const auto& rows = partition_.members(b.row_sector);
        const auto& cols = partition_.members(b.col_sector);
        for (Eigen::Index j = 0; j < b.cols; ++j) {
            const auto cj = static_cast<std::size_t>(cols[j]);
            for (Eigen::Index i = 0; i < b.rows; ++i) {
                const auto ri = static_cast<std::size_t>(rows[i]);
                if (traced_index[ri] == traced_index[cj]) out(kept_index[ri], kept_index[cj]) += block(i, j);
            }
        }
    }
    return DensityMatrix(std::move(kept), std::move(out));
}

// ---------------------------------------------------------------------------
// TimeSeries
// ---------------------------------------------------------------------------

std::size_t TimeSeries::column_index(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::out_of_range("TimeSeries: no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> TimeSeries::column(const std::string& name) const {
    const auto c = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[c]);
    return out;
}

// ---------------------------------------------------------------------------
// Propagators
// ---------------------------------------------------------------------------

ComplexMatrix lindblad_rhs(const DensityMatrix& rho, const HamiltonianSet& h, double t) {
    check_dimensions(static_cast<Eigen::Index>(rho.dim()), h);
    const SparseOperator ham = h.at(t);
    const auto& r = rho.matrix();
    ComplexMatrix out = -kI * (ham * r - r * ham);
    for (const auto& c : h.collapse) {
        if (c.rate == 0.0) continue;
        const SparseOperator od = c.op.adjoint();
        const SparseOperator odo = od * c.op;
        const ComplexMatrix o_rho = c.op * r;
        out += c.rate * (o_rho * od - 0.5 * (odo * r) - 0.5 * (r * odo));
    }
    return out;
}

namespace {

TimeSeries integrate(const BlockLindbladian& lindbladian, ComplexVector x, const EvolutionSpec& spec,
                     std::span<const Observer> observers) {
    TimeSeries series;
    series.columns = {"trace", "purity"};
    if (spec.record_health) {
        series.columns.emplace_back("hermiticity");
        series.columns.emplace_back("min_eigenvalue");
    }
    for (const auto& o : observers) series.columns.push_back(o.name);

    auto record = [&](double t) {
        const double tr = lindbladian.trace(x).real();
        if (std::abs(tr - 1.0) > spec.tolerance_trace) throw TraceDriftError(t, tr);
        std::vector<double> row{tr, lindbladian.purity(x)};
        if (spec.record_health) {
            row.push_back(lindbladian.hermiticity(x));
            row.push_back(lindbladian.min_eigenvalue(x));
        }
        const StateView view(lindbladian, x, t);
        for (const auto& o : observers) row.push_back(o.measure(view));
        series.times.push_back(t);
        series.rows.push_back(std::move(row));
    };

    const std::size_t steps = spec.steps();
    const double dt = spec.dt;
    ComplexVector k1, k2, k3, k4, stage;
    record(0.0);
    for (std::size_t step = 1; step <= steps; ++step) {
        const double t = static_cast<double>(step - 1) * dt;
        lindbladian.apply(t, x, k1);
        stage = x + (0.5 * dt) * k1;
        lindbladian.apply(t + 0.5 * dt, stage, k2);
        stage = x + (0.5 * dt) * k2;
        lindbladian.apply(t + 0.5 * dt, stage, k3);
        stage = x + dt * k3;
        lindbladian.apply(t + dt, stage, k4);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        lindbladian.symmetrize(x);
        if (step % spec.record_stride == 0 || step == steps) record(static_cast<double>(step) * dt);
    }
    if (lindbladian.layout().total_dim() <= kDenseStateMaxDim) series.final_state = lindbladian.unpack(x);
    return series;
}

}  // namespace

TimeSeries propagate_rk4(const DensityMatrix& rho0, const HamiltonianSet& h, const EvolutionSpec& spec,
                         std::span<const Observer> observers) {
    spec.validate();
    if (!(rho0.layout() == h.layout)) throw std::invalid_argument("propagate_rk4: rho0 layout differs from model layout");
    rho0.require_valid();
    const BlockLindbladian lindbladian(h, rho0);
    return integrate(lindbladian, lindbladian.pack(rho0), spec, observers);
}

TimeSeries propagate_rk4(const ComplexVector& psi0, const HamiltonianSet& h, const EvolutionSpec& spec,
                         std::span<const Observer> observers) {
    spec.validate();
    if (psi0.size() != static_cast<Eigen::Index>(h.layout.total_dim())) {
        throw std::invalid_argument("propagate_rk4: state vector size differs from model dimension");
    }
    if (std::abs(psi0.squaredNorm() - 1.0) > 1e-8) throw std::invalid_argument("propagate_rk4: state vector is not normalized");
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < psi0.size(); ++i) {
        if (psi0(i) != Complex(0.0, 0.0)) support.push_back(i);
    }
    std::vector<Eigen::Triplet<Complex>> triplets;
    for (auto c : support) {
        for (auto r : support) triplets.emplace_back(r, c, psi0(r) * std::conj(psi0(c)));
    }
    SparseOperator rho0(psi0.size(), psi0.size());
    rho0.setFromTriplets(triplets.begin(), triplets.end());
    const BlockLindbladian lindbladian(h, rho0);
    return integrate(lindbladian, lindbladian.pack(rho0), spec, observers);
}

ComplexMatrix liouvillian(const HamiltonianSet& h) {
    if (h.time_dependent()) throw std::invalid_argument("liouvillian: time-dependent Hamiltonian sets are not supported");
    const auto n = h.hamiltonian.rows();
    if (static_cast<std::size_t>(n) > kOracleMaxDim) {
        std::ostringstream msg;
        msg << "liouvillian: dimension " << n << " exceeds the oracle cap of " << kOracleMaxDim;
        throw std::invalid_argument(msg.str());
    }
    const ComplexMatrix id = ComplexMatrix::Identity(n, n);
    const ComplexMatrix ham = to_dense(h.hamiltonian);
    ComplexMatrix l = -kI * (kron(id, ham) - kron(ham.transpose(), id));
    for (const auto& c : h.collapse) {
        if (c.rate == 0.0) continue;
        const ComplexMatrix o = to_dense(c.op);
        const ComplexMatrix odo = o.adjoint() * o;
        l += c.rate * (kron(o.conjugate(), o) - 0.5 * kron(id, odo) - 0.5 * kron(odo.transpose(), id));
    }
    return l;
}

DensityMatrix propagate_oracle(const DensityMatrix& rho0, const HamiltonianSet& h, double t) {
    check_dimensions(static_cast<Eigen::Index>(rho0.dim()), h);
    const ComplexMatrix l = liouvillian(h);
    const auto n = static_cast<Eigen::Index>(rho0.dim());
    const ComplexVector v0 = Eigen::Map<const ComplexVector>(rho0.matrix().data(), n * n);
    const ComplexVector v = expm(l * t) * v0;
    return DensityMatrix(rho0.layout(), Eigen::Map<const ComplexMatrix>(v.data(), n, n));
}

namespace {

void check_timedep_step(const ModelParams& m, const EvolutionSpec& spec) {
    if (m.omega_b > 0.0 && spec.dt > 0.02 / m.omega_b * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "dt: " << spec.dt << " does not resolve omega_b = " << m.omega_b << " (need dt <= "
            << 0.02 / m.omega_b << ")";
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

TimeSeries propagate_timedep(const DensityMatrix& rho0, const ModelParams& m, const EvolutionSpec& spec,
                             std::span<const Observer> observers) {
    check_timedep_step(m, spec);
    return propagate_rk4(rho0, h_total(m, rho0.layout()), spec, observers);
}

TimeSeries propagate_timedep(const ComplexVector& psi0, const SystemLayout& layout, const ModelParams& m,
                             const EvolutionSpec& spec, std::span<const Observer> observers) {
    check_timedep_step(m, spec);
    return propagate_rk4(psi0, h_total(m, layout), spec, observers);
}

}  // namespace nvsc
