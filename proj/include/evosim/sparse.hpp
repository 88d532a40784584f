#pragma once

// Sparse operators in CSR form with the transpose materialized alongside the
// matrix. Both orientations share immutable storage, so transposing twice
// returns the original entries bit for bit; adjoint identities in the
// assembled systems then hold exactly rather than to rounding.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "evosim/dense.hpp"
#include "evosim/errors.hpp"

namespace evosim {

struct CooEntry {
    std::int64_t row;
    std::int64_t col;
    double value;
};

namespace detail {

struct Csr {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<std::int64_t> row_ptr;  // size rows+1
    std::vector<std::int64_t> col_idx;
    std::vector<double> values;
};

inline std::shared_ptr<const Csr> csr_from_coo(std::int64_t rows, std::int64_t cols, std::vector<CooEntry> coo,
                                               bool drop_zeros) {
    for (const CooEntry &e : coo) {
        if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
            throw DimensionError("sparse assembly: entry outside matrix shape");
    }
    std::sort(coo.begin(), coo.end(), [](const CooEntry &a, const CooEntry &b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    auto m = std::make_shared<Csr>();
    m->rows = rows;
    m->cols = cols;
    m->row_ptr.assign(static_cast<std::size_t>(rows) + 1, 0);
    std::size_t i = 0;
    while (i < coo.size()) {
        std::size_t j = i;
        double acc = 0.0;
        while (j < coo.size() && coo[j].row == coo[i].row && coo[j].col == coo[i].col) {
            acc += coo[j].value;
            ++j;
        }
        if (!(drop_zeros && acc == 0.0)) {
            m->col_idx.push_back(coo[i].col);
            m->values.push_back(acc);
            m->row_ptr[static_cast<std::size_t>(coo[i].row) + 1]++;
        }
        i = j;
    }
    for (std::size_t r = 0; r < static_cast<std::size_t>(rows); ++r) m->row_ptr[r + 1] += m->row_ptr[r];
    return m;
}

inline std::shared_ptr<const Csr> csr_transpose(const Csr &a) {
    auto t = std::make_shared<Csr>();
    t->rows = a.cols;
    t->cols = a.rows;
    t->row_ptr.assign(static_cast<std::size_t>(a.cols) + 1, 0);
    for (std::int64_t c : a.col_idx) t->row_ptr[static_cast<std::size_t>(c) + 1]++;
    for (std::size_t r = 0; r < static_cast<std::size_t>(a.cols); ++r) t->row_ptr[r + 1] += t->row_ptr[r];
    t->col_idx.resize(a.col_idx.size());
    t->values.resize(a.values.size());
    std::vector<std::int64_t> next(t->row_ptr.begin(), t->row_ptr.end() - 1);
    for (std::int64_t r = 0; r < a.rows; ++r) {
        for (std::int64_t k = a.row_ptr[static_cast<std::size_t>(r)]; k < a.row_ptr[static_cast<std::size_t>(r) + 1]; ++k) {
            const std::int64_t c = a.col_idx[static_cast<std::size_t>(k)];
            const std::int64_t dst = next[static_cast<std::size_t>(c)]++;
            t->col_idx[static_cast<std::size_t>(dst)] = r;
            t->values[static_cast<std::size_t>(dst)] = a.values[static_cast<std::size_t>(k)];
        }
    }
    return t;
}

} // namespace detail

/// Number of worker threads row-parallel kernels may use. Each output row is
/// written by exactly one thread, so results are identical for every count.
int &sparse_thread_count();

class SparseOperator {
public:
    SparseOperator() = default;

    static SparseOperator from_coo(std::int64_t rows, std::int64_t cols, std::vector<CooEntry> coo,
                                   bool drop_zeros = true) {
        SparseOperator op;
        op.fwd_ = detail::csr_from_coo(rows, cols, std::move(coo), drop_zeros);
        op.bwd_ = detail::csr_transpose(*op.fwd_);
        return op;
    }

    static SparseOperator zero(std::int64_t rows, std::int64_t cols) { return from_coo(rows, cols, {}); }

    static SparseOperator identity(std::int64_t n) {
        std::vector<CooEntry> coo;
        coo.reserve(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) coo.push_back({i, i, 1.0});
        return from_coo(n, n, std::move(coo));
    }

    /// Block-diagonal operator from dense blocks laid out consecutively.
    static SparseOperator block_diagonal(const std::vector<DenseMatrix> &blocks) {
        std::vector<CooEntry> coo;
        std::int64_t off = 0;
        for (const DenseMatrix &b : blocks) {
            if (b.rows() != b.cols()) throw DimensionError("block_diagonal: blocks must be square");
            for (int i = 0; i < b.rows(); ++i)
                for (int j = 0; j < b.cols(); ++j)
                    if (b(i, j) != 0.0) coo.push_back({off + i, off + j, b(i, j)});
            off += b.rows();
        }
        return from_coo(off, off, std::move(coo));
    }

    std::int64_t rows() const { return fwd_ ? fwd_->rows : 0; }
    std::int64_t cols() const { return fwd_ ? fwd_->cols : 0; }
    std::int64_t nnz() const { return fwd_ ? static_cast<std::int64_t>(fwd_->values.size()) : 0; }
    bool empty() const { return !fwd_; }

    /// O(1): both orientations are materialized at construction.
    SparseOperator transposed() const {
        SparseOperator t;
        t.fwd_ = bwd_;
        t.bwd_ = fwd_;
        return t;
    }

    void apply(std::span<const double> x, std::span<double> y) const { apply_csr(*fwd_, x, y); }
    void apply_transpose(std::span<const double> x, std::span<double> y) const { apply_csr(*bwd_, x, y); }

    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> y(static_cast<std::size_t>(rows()));
        apply(x, y);
        return y;
    }

    void apply_add(std::span<const double> x, std::span<double> y, double scale = 1.0) const {
        const detail::Csr &m = *fwd_;
        if (static_cast<std::int64_t>(x.size()) != m.cols || static_cast<std::int64_t>(y.size()) != m.rows)
            throw DimensionError("apply_add: vector sizes do not match operator shape");
        for (std::int64_t r = 0; r < m.rows; ++r) {
            double acc = 0.0;
            for (std::int64_t k = m.row_ptr[static_cast<std::size_t>(r)]; k < m.row_ptr[static_cast<std::size_t>(r) + 1]; ++k)
                acc += m.values[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(m.col_idx[static_cast<std::size_t>(k)])];
            y[static_cast<std::size_t>(r)] += scale * acc;
        }
    }

    SparseOperator scaled(double s) const {
        std::vector<CooEntry> coo = to_coo();
        for (CooEntry &e : coo) e.value *= s;
        return from_coo(rows(), cols(), std::move(coo), false);
    }

    SparseOperator negated() const { return scaled(-1.0); }

    friend SparseOperator operator*(const SparseOperator &a, const SparseOperator &b) {
        if (a.cols() != b.rows()) throw DimensionError("sparse multiply: inner dimensions differ");
        const detail::Csr &am = *a.fwd_;
        const detail::Csr &bm = *b.fwd_;
        std::vector<CooEntry> coo;
        std::vector<double> acc(static_cast<std::size_t>(b.cols()), 0.0);
        std::vector<std::int64_t> marks;
        for (std::int64_t i = 0; i < am.rows; ++i) {
            marks.clear();
            for (std::int64_t ka = am.row_ptr[static_cast<std::size_t>(i)]; ka < am.row_ptr[static_cast<std::size_t>(i) + 1]; ++ka) {
                const std::int64_t k = am.col_idx[static_cast<std::size_t>(ka)];
                const double av = am.values[static_cast<std::size_t>(ka)];
                for (std::int64_t kb = bm.row_ptr[static_cast<std::size_t>(k)]; kb < bm.row_ptr[static_cast<std::size_t>(k) + 1]; ++kb) {
                    const std::int64_t j = bm.col_idx[static_cast<std::size_t>(kb)];
                    if (acc[static_cast<std::size_t>(j)] == 0.0) marks.push_back(j);
                    acc[static_cast<std::size_t>(j)] += av * bm.values[static_cast<std::size_t>(kb)];
                }
            }
            std::sort(marks.begin(), marks.end());
            for (std::int64_t j : marks) {
                if (acc[static_cast<std::size_t>(j)] != 0.0) coo.push_back({i, j, acc[static_cast<std::size_t>(j)]});
                acc[static_cast<std::size_t>(j)] = 0.0;
            }
        }
        return from_coo(a.rows(), b.cols(), std::move(coo), false);
    }

    friend SparseOperator operator+(const SparseOperator &a, const SparseOperator &b) {
        if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("sparse add: shapes differ");
        std::vector<CooEntry> coo = a.to_coo();
        std::vector<CooEntry> cb = b.to_coo();
        coo.insert(coo.end(), cb.begin(), cb.end());
        return from_coo(a.rows(), a.cols(), std::move(coo), false);
    }

    std::vector<CooEntry> to_coo() const {
        std::vector<CooEntry> coo;
        if (!fwd_) return coo;
        coo.reserve(fwd_->values.size());
        for (std::int64_t r = 0; r < fwd_->rows; ++r)
            for (std::int64_t k = fwd_->row_ptr[static_cast<std::size_t>(r)]; k < fwd_->row_ptr[static_cast<std::size_t>(r) + 1]; ++k)
                coo.push_back({r, fwd_->col_idx[static_cast<std::size_t>(k)], fwd_->values[static_cast<std::size_t>(k)]});
        return coo;
    }

    DenseMatrix to_dense() const {
        DenseMatrix d(static_cast<int>(rows()), static_cast<int>(cols()));
        for (const CooEntry &e : to_coo()) d(static_cast<int>(e.row), static_cast<int>(e.col)) = e.value;
        return d;
    }

    double max_abs() const {
        double m = 0.0;
        if (fwd_)
            for (double v : fwd_->values) m = std::max(m, std::abs(v));
        return m;
    }

    std::int64_t max_row_nnz() const {
        std::int64_t m = 0;
        if (fwd_)
            for (std::int64_t r = 0; r < fwd_->rows; ++r)
                m = std::max(m, fwd_->row_ptr[static_cast<std::size_t>(r) + 1] - fwd_->row_ptr[static_cast<std::size_t>(r)]);
        return m;
    }

    const detail::Csr &csr() const { return *fwd_; }

private:
    static void apply_csr(const detail::Csr &m, std::span<const double> x, std::span<double> y) {
        if (static_cast<std::int64_t>(x.size()) != m.cols || static_cast<std::int64_t>(y.size()) != m.rows)
            throw DimensionError("apply: vector sizes do not match operator shape");
        const int nthreads = std::min<int>(sparse_thread_count(), 64);
        auto run_rows = [&](std::int64_t r0, std::int64_t r1) {
            for (std::int64_t r = r0; r < r1; ++r) {
                double acc = 0.0;
                for (std::int64_t k = m.row_ptr[static_cast<std::size_t>(r)]; k < m.row_ptr[static_cast<std::size_t>(r) + 1]; ++k)
                    acc += m.values[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(m.col_idx[static_cast<std::size_t>(k)])];
                y[static_cast<std::size_t>(r)] = acc;
            }
        };
        if (nthreads <= 1 || m.rows < 4096) {
            run_rows(0, m.rows);
            return;
        }
        std::vector<std::thread> pool;
        const std::int64_t chunk = (m.rows + nthreads - 1) / nthreads;
        for (int t = 0; t < nthreads; ++t) {
            const std::int64_t r0 = t * chunk;
            const std::int64_t r1 = std::min<std::int64_t>(m.rows, r0 + chunk);
            if (r0 >= r1) break;
            pool.emplace_back(run_rows, r0, r1);
        }
        for (auto &th : pool) th.join();
    }

    std::shared_ptr<const detail::Csr> fwd_;
    std::shared_ptr<const detail::Csr> bwd_;
};

inline int &sparse_thread_count() {
    static int count = 1;
    return count;
}

/// Largest |A - B| entry over the union sparsity pattern.
inline double max_abs_difference(const SparseOperator &a, const SparseOperator &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("difference: shapes differ");
    SparseOperator d = a + b.negated();
    return d.max_abs();
}

/// Symmetric block structure discovery: connected components of the
/// union pattern of S and S^T, via union-find. Used to reduce global
/// eigenvalue questions on block-diagonal operators to dense blocks.
struct SparseComponents {
    std::vector<std::vector<std::int64_t>> members;  // each sorted ascending
};

inline SparseComponents connected_components(const SparseOperator &s) {
    if (s.rows() != s.cols()) throw DimensionError("connected_components: matrix not square");
    const std::int64_t n = s.rows();
    std::vector<std::int64_t> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<std::int64_t> rank(static_cast<std::size_t>(n), 0);

    std::function<std::int64_t(std::int64_t)> find = [&](std::int64_t x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    auto unite = [&](std::int64_t a, std::int64_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank[static_cast<std::size_t>(a)] < rank[static_cast<std::size_t>(b)]) std::swap(a, b);
        parent[static_cast<std::size_t>(b)] = a;
        if (rank[static_cast<std::size_t>(a)] == rank[static_cast<std::size_t>(b)]) rank[static_cast<std::size_t>(a)]++;
    };

    for (const CooEntry &e : s.to_coo())
        if (e.value != 0.0) unite(e.row, e.col);

    std::vector<std::int64_t> root_to_comp(static_cast<std::size_t>(n), -1);
    SparseComponents comps;
    for (std::int64_t i = 0; i < n; ++i) {
        const std::int64_t r = find(i);
        if (root_to_comp[static_cast<std::size_t>(r)] < 0) {
            root_to_comp[static_cast<std::size_t>(r)] = static_cast<std::int64_t>(comps.members.size());
            comps.members.emplace_back();
        }
        comps.members[static_cast<std::size_t>(root_to_comp[static_cast<std::size_t>(r)])].push_back(i);
    }
    return comps;
}

struct MinEigResult {
    double value = 0.0;
    std::vector<double> witness;  // unit vector attaining the minimum
};

/// Smallest eigenvalue of a symmetric sparse operator, computed exactly
/// per connected component with the dense Jacobi solver. Components larger
/// than max_block_dim indicate the operator is not block-diagonal in any
/// usable sense and are rejected.
inline MinEigResult symmetric_min_eigenvalue(const SparseOperator &s, int max_block_dim = 1024) {
    SparseComponents comps = connected_components(s);
    MinEigResult best;
    best.value = std::numeric_limits<double>::infinity();
    best.witness.assign(static_cast<std::size_t>(s.rows()), 0.0);
    std::int64_t best_comp = -1;
    std::vector<double> best_local;

    const detail::Csr &m = s.csr();
    for (std::size_t ci = 0; ci < comps.members.size(); ++ci) {
        const auto &mem = comps.members[ci];
        if (static_cast<int>(mem.size()) > max_block_dim)
            throw Error("symmetric_min_eigenvalue: component exceeds dense block limit");
        const int nb = static_cast<int>(mem.size());
        DenseMatrix block(nb, nb);
        std::vector<std::int64_t> local(static_cast<std::size_t>(s.rows()), -1);
        for (int i = 0; i < nb; ++i) local[static_cast<std::size_t>(mem[static_cast<std::size_t>(i)])] = i;
        for (int i = 0; i < nb; ++i) {
            const std::int64_t r = mem[static_cast<std::size_t>(i)];
            for (std::int64_t k = m.row_ptr[static_cast<std::size_t>(r)]; k < m.row_ptr[static_cast<std::size_t>(r) + 1]; ++k) {
                const std::int64_t c = m.col_idx[static_cast<std::size_t>(k)];
                const std::int64_t lc = local[static_cast<std::size_t>(c)];
                if (lc < 0) continue;  // stored zero pointing outside the component
                block(i, static_cast<int>(lc)) = m.values[static_cast<std::size_t>(k)];
            }
        }
        SymmetricEigen eig = jacobi_eigen(block);
        if (eig.values.front() < best.value) {
            best.value = eig.values.front();
            best_comp = static_cast<std::int64_t>(ci);
            best_local.resize(static_cast<std::size_t>(nb));
            for (int i = 0; i < nb; ++i) best_local[static_cast<std::size_t>(i)] = eig.vectors(i, 0);
        }
    }
    if (best_comp >= 0) {
        const auto &mem = comps.members[static_cast<std::size_t>(best_comp)];
        for (std::size_t i = 0; i < mem.size(); ++i)
            best.witness[static_cast<std::size_t>(mem[i])] = best_local[i];
    }
    return best;
}

/// max |x . Ax| / |x|^2 over seeded random probes, normalized by the largest
/// entry of A; zero for antisymmetric A up to rounding in the dot product.
inline double skew_probe_residual(const SparseOperator &a, int probes = 100, unsigned seed = 20240901) {
    if (a.rows() != a.cols()) throw DimensionError("skew_probe_residual: matrix not square");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const double scale = std::max(a.max_abs(), 1e-300);
    double worst = 0.0;
    std::vector<double> x(static_cast<std::size_t>(a.rows()));
    std::vector<double> y(static_cast<std::size_t>(a.rows()));
    for (int p = 0; p < probes; ++p) {
        double nrm2 = 0.0;
        for (double &v : x) {
            v = dist(rng);
            nrm2 += v * v;
        }
        a.apply(x, y);
        double dot = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
        worst = std::max(worst, std::abs(dot) / (nrm2 * scale));
    }
    return worst;
}

/// [[0, TR], [BL, 0]] on the direct sum of the two spaces. The caller must
/// supply BL = -TR^T; pairs violating that beyond 1e-13 (relative to the
/// largest entry) are rejected since the result would not be antisymmetric.
inline SparseOperator assemble_block_skew(const SparseOperator &top_right, const SparseOperator &bottom_left,
                                          double rel_tol = 1e-13) {
    if (top_right.rows() != bottom_left.cols() || top_right.cols() != bottom_left.rows())
        throw DimensionError("assemble_block_skew: block shapes incompatible");
    const double scale = std::max(top_right.max_abs(), bottom_left.max_abs());
    const double dev = max_abs_difference(top_right, bottom_left.transposed().negated());
    if (dev > rel_tol * std::max(scale, 1e-300))
        throw Error("assemble_block_skew: bottom_left is not the negative transpose of top_right");

    const std::int64_t n0 = top_right.rows();
    const std::int64_t n1 = top_right.cols();
    std::vector<CooEntry> coo;
    coo.reserve(static_cast<std::size_t>(top_right.nnz() + bottom_left.nnz()));
    for (const CooEntry &e : top_right.to_coo()) coo.push_back({e.row, n0 + e.col, e.value});
    for (const CooEntry &e : bottom_left.to_coo()) coo.push_back({n0 + e.row, e.col, e.value});
    return SparseOperator::from_coo(n0 + n1, n0 + n1, std::move(coo), false);
}

} // namespace evosim
