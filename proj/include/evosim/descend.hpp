#pragma once

// Congruence transport of block operators and material laws: given a mother
// block [[0, -C^T], [C, 0]] and a bounded map B with closed range, the
// descendant [[0, -(BC)^T], [BC, 0]] on range coordinates is antisymmetric
// again, and admissibility transfers with an explicit constant. In finite
// dimensions every closure statement collapses, so descendants here satisfy
// the defining identities as exact matrix equations.

#include <utility>
#include <vector>

#include "evosim/material.hpp"
#include "evosim/sparse.hpp"

namespace evosim {

/// A continuous map B: Y -> X together with an orthonormal basis of its
/// range. Two representations are supported: maps that are onto X (range
/// basis is the standard basis; verified through B B^T at construction) and
/// small generic maps whose basis is computed by rank-revealing
/// orthogonalization with threshold 1e-10 * |B|.
class BoundedMap {
public:
    /// B known to be onto its codomain. Verified: smallest eigenvalue of
    /// B B^T must exceed the rank threshold, else the standard basis does
    /// not span the range.
    static BoundedMap onto(SparseOperator b) {
        SparseOperator gram = b * b.transposed();
        const double scale = std::max(gram.max_abs(), 1e-300);
        MinEigResult eig = symmetric_min_eigenvalue(gram);
        if (eig.value <= 1e-20 * scale)
            throw Error("BoundedMap::onto: B is not surjective; supply a generic map instead");
        BoundedMap m;
        m.matrix_ = std::move(b);
        m.full_range_ = true;
        m.sigma_min_sq_ = eig.value;
        return m;
    }

    /// Generic (small) map; the range basis is computed densely.
    static BoundedMap generic(SparseOperator b, double threshold = 1e-10) {
        BoundedMap m;
        m.basis_ = range_basis_gram_schmidt(b.to_dense(), threshold);
        if (m.basis_.cols() == 0) throw Error("BoundedMap: map has numerically trivial range");
        DenseMatrix bt = b.to_dense().transposed();
        DenseMatrix bt_q = bt * m.basis_;              // Y x r
        DenseMatrix gram = bt_q.transposed() * bt_q;   // r x r
        m.sigma_min_sq_ = jacobi_eigen(gram).values.front();
        m.matrix_ = std::move(b);
        return m;
    }

    const SparseOperator &matrix() const { return matrix_; }
    bool full_range() const { return full_range_; }
    std::int64_t domain_dim() const { return matrix_.cols(); }
    std::int64_t range_dim() const { return full_range_ ? matrix_.rows() : basis_.cols(); }

    /// Rows of `op` expressed in range coordinates: Q^T op.
    SparseOperator to_range_coords(const SparseOperator &op) const {
        if (full_range_) return op;
        DenseMatrix dense = op.to_dense();
        DenseMatrix reduced = basis_.transposed() * dense;
        std::vector<CooEntry> coo;
        for (int i = 0; i < reduced.rows(); ++i)
            for (int j = 0; j < reduced.cols(); ++j)
                if (reduced(i, j) != 0.0) coo.push_back({i, j, reduced(i, j)});
        return SparseOperator::from_coo(reduced.rows(), reduced.cols(), std::move(coo), false);
    }

    /// Smallest squared singular value of B^T restricted to the range.
    double sigma_min_squared() const { return sigma_min_sq_; }

private:
    SparseOperator matrix_;
    DenseMatrix basis_;       // X x r, orthonormal columns; empty when onto
    bool full_range_ = false;
    double sigma_min_sq_ = 0.0;
};

struct MotherSystem {
    SparseOperator c;  // H -> Y (the lower-left block of the mother operator)
    MaterialLaw m;     // on H + Y

    MotherSystem(SparseOperator c_in, MaterialLaw m_in) : c(std::move(c_in)), m(std::move(m_in)) {
        if (m.dim != c.rows() + c.cols())
            throw DimensionError("MotherSystem: material layout does not match operator blocks");
    }

    std::int64_t dim_h() const { return c.cols(); }
    std::int64_t dim_y() const { return c.rows(); }
};

/// Descendant block operator [[0, -(BC)^T], [BC, 0]] on H + range(B).
inline SparseOperator descend_operator(const SparseOperator &c, const BoundedMap &b) {
    if (b.domain_dim() != c.rows())
        throw DimensionError("descend_operator: B domain does not match C codomain");
    SparseOperator bc = b.to_range_coords(b.matrix() * c);
    return assemble_block_skew(bc.transposed().negated(), bc);
}

/// Descendant material diag(1,B) M diag(1,B^T) in range coordinates.
inline MaterialLaw descend_material(const MaterialLaw &m, const BoundedMap &b) {
    const std::int64_t dim_h = m.dim - b.domain_dim();
    if (dim_h < 0) throw DimensionError("descend_material: material smaller than B domain");

    SparseOperator b_range = b.to_range_coords(b.matrix());
    std::vector<CooEntry> coo;
    for (std::int64_t i = 0; i < dim_h; ++i) coo.push_back({i, i, 1.0});
    for (const CooEntry &e : b_range.to_coo()) coo.push_back({dim_h + e.row, dim_h + e.col, e.value});
    SparseOperator embed = SparseOperator::from_coo(dim_h + b_range.rows(), m.dim, std::move(coo), false);

    return MaterialLaw(embed * m.m0 * embed.transposed(), embed * m.m1 * embed.transposed(),
                       m.kind + "~descendant");
}

/// Transfer constant for admissibility: if the mother satisfies
/// nu*M0 + sym(M1) >= c_star, the descendant satisfies the same bound with
/// c_star * min(1, sigma_min(B^T on range)^2).
inline double positivity_transfer_constant(double c_star, const BoundedMap &b) {
    if (!(c_star > 0.0)) throw Error("positivity_transfer_constant: c_star must be positive");
    return c_star * std::min(1.0, b.sigma_min_squared());
}

struct DescendantReport {
    double skew_residual = 0.0;     // probe residual of the descendant block
    double eta_mother = 0.0;        // mother admissibility constant at nu
    double eta_descendant = 0.0;    // measured descendant constant at nu
    double transfer_bound = 0.0;    // guaranteed lower bound on the above
    bool bound_holds = false;
};

/// End-to-end check of the congruence: builds the descendant operator and
/// material, measures its admissibility constant and compares against the
/// guaranteed transfer bound (up to 1e-10 slack).
inline DescendantReport verify_descendant(const MotherSystem &mother, const BoundedMap &b, double nu) {
    AdmissibilityReport mother_rep = check_evo_positivity(mother.m, nu);
    if (!mother_rep.admissible)
        throw InadmissibleMaterialError("verify_descendant: mother system is not admissible at this nu");

    SparseOperator a_desc = descend_operator(mother.c, b);
    MaterialLaw m_desc = descend_material(mother.m, b);
    AdmissibilityReport desc_rep = check_evo_positivity(m_desc, nu);

    DescendantReport rep;
    rep.skew_residual = skew_probe_residual(a_desc);
    rep.eta_mother = mother_rep.eta;
    rep.eta_descendant = desc_rep.eta;
    rep.transfer_bound = positivity_transfer_constant(mother_rep.eta, b);
    rep.bound_holds = desc_rep.eta >= rep.transfer_bound - 1e-10;
    return rep;
}

} // namespace evosim
