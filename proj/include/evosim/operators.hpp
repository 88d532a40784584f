#pragma once

// Discrete spatial operators on the staggered grid.
//
// The only operator assembled from a stencil is the compact-support Jacobian
// grad0 (one-sided differences of cell vectors into tensor slots, with zero
// extension outside the cell set). Everything else is derived from it:
//
//   div       = negative weighted transpose of grad0
//   sym_grad0 = sym projection of grad0 in orthonormal (Kelvin) coordinates
//   sym_div   = div restricted to embedded symmetric tensors
//   curl0     = sqrt2 * axial read of the antisymmetric part of grad0
//   curl      = -sqrt2 * div of the embedded axial field
//
// Deriving rather than re-discretizing makes every adjoint pair exact at the
// matrix level, which is what keeps the assembled block operators
// antisymmetric without correction terms.

#include <random>
#include <vector>

#include "evosim/grid.hpp"
#include "evosim/sparse.hpp"

namespace evosim {

// Per-slot tensor components follow the Vec9 slot order; component q of the
// Jacobian holds the one-sided difference of cell component kVec9Row[q]
// along axis kVec9Col[q].

inline std::int64_t cell_dof(const CellSet &cells, Index3 c, int comp) {
    return 3 * cells.local[static_cast<std::size_t>(cells.grid.cell_id(c))] + comp;
}

inline std::int64_t tensor_dof(const SlotSet &slots, Index3 s, int q) {
    return 9 * slots.local[static_cast<std::size_t>(slots.grid.slot_id(s))] + q;
}

/// One-sided Jacobian with homogeneous Dirichlet (zero-extension) closure:
/// component (i,a) at slot s is (u_i(s) - u_i(s - e_a)) / h_a, cells outside
/// the set contributing zero. Rows: 9 per active slot; <= 2 entries each.
inline SparseOperator assemble_grad0(const CellSet &cells, const SlotSet &slots) {
    const StaggeredGrid &g = cells.grid;
    std::vector<CooEntry> coo;
    coo.reserve(static_cast<std::size_t>(slots.count()) * 18);
    for (std::int64_t ls = 0; ls < slots.count(); ++ls) {
        const Index3 s = g.slot_coords(slots.slots[static_cast<std::size_t>(ls)]);
        for (int q = 0; q < 9; ++q) {
            const int i = kVec9Row[static_cast<std::size_t>(q)];
            const int a = kVec9Col[static_cast<std::size_t>(q)];
            const double inv_h = 1.0 / g.spacing[static_cast<std::size_t>(a)];
            const std::int64_t row = 9 * ls + q;
            if (cells.contains(s)) coo.push_back({row, cell_dof(cells, s, i), inv_h});
            Index3 lo = s;
            lo[static_cast<std::size_t>(a)] -= 1;
            if (cells.contains(lo)) coo.push_back({row, cell_dof(cells, lo, i), -inv_h});
        }
    }
    return SparseOperator::from_coo(9 * slots.count(), 3 * cells.count(), std::move(coo));
}

inline SparseOperator assemble_grad0(const StaggeredGrid &g, const CellMask &mask) {
    CellSet cells(g, mask);
    SlotSet slots = SlotSet::from_cells(cells);
    return assemble_grad0(cells, slots);
}

/// div defined so that <grad0 u, W>_Y + <u, div W>_H = 0 holds exactly for
/// all discrete u, W (weighted inner products, weights strictly positive).
/// With equal uniform weights this is the plain negated transpose, entry by
/// entry.
inline SparseOperator divergence_from_adjoint(const SparseOperator &grad0,
                                              std::span<const double> cell_weights,
                                              std::span<const double> slot_weights) {
    if (static_cast<std::int64_t>(cell_weights.size()) != grad0.cols() ||
        static_cast<std::int64_t>(slot_weights.size()) != grad0.rows())
        throw DimensionError("divergence_from_adjoint: weight vectors do not match operator shape");
    for (double w : cell_weights)
        if (!(w > 0.0)) throw Error("divergence_from_adjoint: weights must be positive");
    for (double w : slot_weights)
        if (!(w > 0.0)) throw Error("divergence_from_adjoint: weights must be positive");

    std::vector<CooEntry> coo;
    coo.reserve(static_cast<std::size_t>(grad0.nnz()));
    for (const CooEntry &e : grad0.to_coo()) {
        const double ratio = slot_weights[static_cast<std::size_t>(e.row)] / cell_weights[static_cast<std::size_t>(e.col)];
        coo.push_back({e.col, e.row, -e.value * ratio});
    }
    return SparseOperator::from_coo(grad0.cols(), grad0.rows(), std::move(coo), false);
}

/// Uniform-weight convenience: weights cancel and div = -grad0^T exactly.
inline SparseOperator divergence_from_adjoint(const SparseOperator &grad0) {
    return grad0.transposed().negated();
}

/// Embedding of the 6 orthonormal symmetric (Kelvin) components per slot
/// into the 9-component tensor field; its transpose is the sym projection.
inline SparseOperator sym_embedding(std::int64_t nslots) {
    std::vector<CooEntry> coo;
    coo.reserve(static_cast<std::size_t>(nslots) * 9);
    for (std::int64_t s = 0; s < nslots; ++s) {
        for (int k = 0; k < 3; ++k) coo.push_back({9 * s + k, 6 * s + k, 1.0});
        for (int k = 3; k < 6; ++k) {
            coo.push_back({9 * s + k, 6 * s + k, kInvSqrt2});
            coo.push_back({9 * s + k + 3, 6 * s + k, kInvSqrt2});
        }
    }
    return SparseOperator::from_coo(9 * nslots, 6 * nslots, std::move(coo));
}

/// Embedding of an axial 3-vector per slot as an antisymmetric tensor,
/// scaled by -sqrt2 so the entries are exactly +/-1: component m maps to +1
/// in slot 3+m and -1 in its transpose partner 6+m.
inline SparseOperator axial_embedding_scaled(std::int64_t nslots) {
    std::vector<CooEntry> coo;
    coo.reserve(static_cast<std::size_t>(nslots) * 6);
    for (std::int64_t s = 0; s < nslots; ++s)
        for (int m = 0; m < 3; ++m) {
            coo.push_back({9 * s + 3 + m, 3 * s + m, 1.0});
            coo.push_back({9 * s + 6 + m, 3 * s + m, -1.0});
        }
    return SparseOperator::from_coo(9 * nslots, 3 * nslots, std::move(coo));
}

/// Pointwise orthogonal projection onto symmetric tensors (9n x 9n).
inline SparseOperator tensor_sym_projection(std::int64_t nslots) {
    SparseOperator e = sym_embedding(nslots);
    return e * e.transposed();
}

/// Pointwise orthogonal projection onto antisymmetric tensors (9n x 9n).
inline SparseOperator tensor_skew_projection(std::int64_t nslots) {
    std::vector<CooEntry> coo;
    for (std::int64_t s = 0; s < nslots; ++s)
        for (int m = 0; m < 3; ++m) {
            coo.push_back({9 * s + 3 + m, 9 * s + 3 + m, 0.5});
            coo.push_back({9 * s + 3 + m, 9 * s + 6 + m, -0.5});
            coo.push_back({9 * s + 6 + m, 9 * s + 6 + m, 0.5});
            coo.push_back({9 * s + 6 + m, 9 * s + 3 + m, -0.5});
        }
    return SparseOperator::from_coo(9 * nslots, 9 * nslots, std::move(coo));
}

/// Field-level axial identification (the per-slot unitary taking axial
/// vectors to antisymmetric tensors); entries +/- 1/sqrt2.
inline SparseOperator axial_unitary(std::int64_t nslots) {
    std::vector<CooEntry> coo;
    for (std::int64_t s = 0; s < nslots; ++s)
        for (int m = 0; m < 3; ++m) {
            coo.push_back({9 * s + 3 + m, 3 * s + m, -kInvSqrt2});
            coo.push_back({9 * s + 6 + m, 3 * s + m, kInvSqrt2});
        }
    return SparseOperator::from_coo(9 * nslots, 3 * nslots, std::move(coo));
}

struct ElasticPair {
    SparseOperator sym_grad0;  // cell vectors -> Kelvin components at slots
    SparseOperator sym_div;    // Kelvin components -> cell vectors
};

/// Symmetric-gradient / divergence pair. sym_div = -sym_grad0^T holds entry
/// by entry because both sides are assembled from the same products.
inline ElasticPair derive_elastic_pair(const SparseOperator &grad0, const SparseOperator &div) {
    if (grad0.rows() % 9 != 0) throw DimensionError("derive_elastic_pair: tensor space not slot-aligned");
    const std::int64_t nslots = grad0.rows() / 9;
    if (div.cols() != grad0.rows() || div.rows() != grad0.cols())
        throw DimensionError("derive_elastic_pair: div shape does not match grad0");
    SparseOperator embed = sym_embedding(nslots);
    return {embed.transposed() * grad0, div * embed};
}

struct MaxwellPair {
    SparseOperator curl0;  // cell vectors -> axial components at slots
    SparseOperator curl;   // axial components -> cell vectors
};

/// curl0 reads the antisymmetric part of the Jacobian through the scaled
/// axial map; curl is its adjoint route through div. The two scale factors
/// multiply out to exactly +/-1, so both operators carry pure difference
/// stencils and curl = curl0^T bitwise.
inline MaxwellPair derive_maxwell_pair(const SparseOperator &grad0, const SparseOperator &div) {
    if (grad0.rows() % 9 != 0) throw DimensionError("derive_maxwell_pair: tensor space not slot-aligned");
    const std::int64_t nslots = grad0.rows() / 9;
    if (div.cols() != grad0.rows() || div.rows() != grad0.cols())
        throw DimensionError("derive_maxwell_pair: div shape does not match grad0");
    SparseOperator embed = axial_embedding_scaled(nslots);
    return {embed.transposed().negated() * grad0, div * embed};
}

/// Block operator [[0, top_right], [bottom_left, 0]]; rejects pairs whose
/// off-diagonal blocks are not exact negative transposes of each other.
inline SparseOperator assemble_block_a(const SparseOperator &top_right, const SparseOperator &bottom_left) {
    return assemble_block_skew(top_right, bottom_left);
}

} // namespace evosim
