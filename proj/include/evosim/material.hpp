#pragma once

// Material laws M0 + (time-integral) M1 as assembled block-diagonal
// operators, a catalog of standard media, and the admissibility check
// min-eig(nu*M0 + sym(M1)) > 0 that decides solvability of the implicit
// time steps. The minimum eigenvalue is computed exactly per diagonal
// block, never by a global iterative solve.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "evosim/algebra.hpp"
#include "evosim/dense.hpp"
#include "evosim/sparse.hpp"

namespace evosim {

struct MaterialLaw {
    std::int64_t dim = 0;
    SparseOperator m0;  // selfadjoint, nonnegative
    SparseOperator m1;
    std::string kind;

    MaterialLaw() = default;
    MaterialLaw(SparseOperator m0_in, SparseOperator m1_in, std::string kind_in = {})
        : dim(m0_in.rows()), m0(std::move(m0_in)), m1(std::move(m1_in)), kind(std::move(kind_in)) {
        if (m0.rows() != m0.cols() || m1.rows() != m1.cols() || m0.rows() != m1.rows())
            throw DimensionError("MaterialLaw: operator blocks must be square and equally sized");
    }
};

struct AdmissibilityReport {
    double eta = 0.0;       // min eigenvalue of nu*M0 + sym(M1)
    double nu_used = 0.0;
    bool admissible = false;
    std::vector<double> witness;  // unit vector attaining eta
};

inline SparseOperator symmetric_part(const SparseOperator &b) {
    return (b + b.transposed()).scaled(0.5);
}

/// Smallest eigenvalue of nu*M0 + sym(M1); admissible when strictly
/// positive. M0 must be symmetric within 1e-14 of its largest entry.
inline AdmissibilityReport check_evo_positivity(const MaterialLaw &law, double nu) {
    if (!(nu > 0.0)) throw Error("check_evo_positivity: nu must be positive");
    const double scale = std::max(law.m0.max_abs(), 1e-300);
    if (max_abs_difference(law.m0, law.m0.transposed()) > 1e-14 * scale)
        throw Error("check_evo_positivity: M0 is not symmetric within tolerance");

    SparseOperator s = law.m0.scaled(nu) + symmetric_part(law.m1);
    MinEigResult eig = symmetric_min_eigenvalue(s);
    AdmissibilityReport rep;
    rep.eta = eig.value;
    rep.nu_used = nu;
    rep.admissible = eig.value > 0.0;
    rep.witness = std::move(eig.witness);
    return rep;
}

/// Smallest nu in {1, 2, 4, ..., 2^10} for which the law is admissible.
inline std::optional<AdmissibilityReport> find_min_admissible_nu(const MaterialLaw &law) {
    for (int p = 0; p <= 10; ++p) {
        AdmissibilityReport rep = check_evo_positivity(law, std::ldexp(1.0, p));
        if (rep.admissible) return rep;
    }
    return std::nullopt;
}

/// Sum of two laws on the same layout; used to attach M1-only fragments
/// (chiral / omega coupling) to a base law.
inline MaterialLaw combine(const MaterialLaw &base, const MaterialLaw &fragment) {
    if (base.dim != fragment.dim) throw DimensionError("combine: material layouts differ");
    return MaterialLaw(base.m0 + fragment.m0, base.m1 + fragment.m1,
                       base.kind + "+" + fragment.kind);
}

namespace detail {

inline DenseMatrix scaled_identity(int n, double s) {
    DenseMatrix d(n, n);
    for (int i = 0; i < n; ++i) d(i, i) = s;
    return d;
}

} // namespace detail

/// Isotropic electromagnetic law on co-located (E, H) points:
/// M0 = diag(eps, mu), M1 = diag(sigma, 0), 6x6 per point.
inline MaterialLaw make_isotropic_em(const std::vector<double> &eps, const std::vector<double> &mu,
                                     const std::vector<double> &sigma) {
    if (eps.size() != mu.size() || eps.size() != sigma.size())
        throw DimensionError("make_isotropic_em: coefficient arrays differ in length");
    std::vector<DenseMatrix> m0_blocks, m1_blocks;
    for (std::size_t p = 0; p < eps.size(); ++p) {
        if (eps[p] < 0.0) throw InadmissibleMaterialError("make_isotropic_em: eps must be nonnegative");
        if (!(mu[p] > 0.0)) throw InadmissibleMaterialError("make_isotropic_em: mu must be positive");
        DenseMatrix m0(6, 6), m1(6, 6);
        for (int i = 0; i < 3; ++i) {
            m0(i, i) = eps[p];
            m0(3 + i, 3 + i) = mu[p];
            m1(i, i) = sigma[p];
        }
        m0_blocks.push_back(std::move(m0));
        m1_blocks.push_back(std::move(m1));
    }
    return MaterialLaw(SparseOperator::block_diagonal(m0_blocks), SparseOperator::block_diagonal(m1_blocks),
                       "isotropic_em");
}

/// Bi-anisotropic law M0 = [[eps, kappa^T], [kappa, mu]] per point. The
/// cross block must satisfy |kappa| <= sqrt(eps * mu) (operator norm) or
/// M0 loses nonnegativity; violations are rejected rather than clamped.
inline MaterialLaw make_bianisotropic(const std::vector<double> &eps, const std::vector<double> &mu,
                                      const std::vector<Mat3> &kappa) {
    if (eps.size() != mu.size() || eps.size() != kappa.size())
        throw DimensionError("make_bianisotropic: coefficient arrays differ in length");
    std::vector<DenseMatrix> m0_blocks, m1_blocks;
    for (std::size_t p = 0; p < eps.size(); ++p) {
        if (eps[p] < 0.0) throw InadmissibleMaterialError("make_bianisotropic: eps must be nonnegative");
        if (!(mu[p] > 0.0)) throw InadmissibleMaterialError("make_bianisotropic: mu must be positive");

        // Largest singular value of kappa via the 3x3 Gram matrix.
        DenseMatrix gram(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k) acc += kappa[p](k, i) * kappa[p](k, j);
                gram(i, j) = acc;
            }
        const double sigma_max = std::sqrt(std::max(0.0, jacobi_eigen(gram).values.back()));
        const double bound = std::sqrt(eps[p] * mu[p]);
        if (sigma_max > bound * (1.0 + 1e-12))
            throw InadmissibleMaterialError("make_bianisotropic: |kappa| exceeds sqrt(eps*mu); M0 would be indefinite");

        DenseMatrix m0(6, 6);
        for (int i = 0; i < 3; ++i) {
            m0(i, i) = eps[p];
            m0(3 + i, 3 + i) = mu[p];
            for (int j = 0; j < 3; ++j) {
                m0(3 + i, j) = kappa[p](i, j);
                m0(j, 3 + i) = kappa[p](i, j);
            }
        }
        m0_blocks.push_back(std::move(m0));
        m1_blocks.push_back(DenseMatrix(6, 6));
    }
    return MaterialLaw(SparseOperator::block_diagonal(m0_blocks), SparseOperator::block_diagonal(m1_blocks),
                       "bianisotropic");
}

/// Chiral coupling fragment: M1 = [[0, -chi], [chi, 0]] with chi symmetric.
/// sym(M1) vanishes identically, so attaching it never changes eta.
inline MaterialLaw make_chiral(const std::vector<Mat3> &chi) {
    std::vector<DenseMatrix> m0_blocks, m1_blocks;
    for (const Mat3 &c : chi) {
        double dev = 0.0, scale = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                dev = std::max(dev, std::abs(c(i, j) - c(j, i)));
                scale = std::max(scale, std::abs(c(i, j)));
            }
        if (dev > 1e-14 * std::max(scale, 1e-300))
            throw InadmissibleMaterialError("make_chiral: chi must be symmetric");
        DenseMatrix m1(6, 6);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                m1(i, 3 + j) = -c(i, j);
                m1(3 + i, j) = c(i, j);
            }
        m0_blocks.push_back(DenseMatrix(6, 6));
        m1_blocks.push_back(std::move(m1));
    }
    return MaterialLaw(SparseOperator::block_diagonal(m0_blocks), SparseOperator::block_diagonal(m1_blocks),
                       "chiral");
}

/// Omega coupling fragment: M1 = [[0, chi], [chi, 0]] with chi
/// antisymmetric. The symmetric part is assembled literally and handed to
/// the eigenvalue check rather than being simplified away.
inline MaterialLaw make_omega(const std::vector<Mat3> &chi) {
    std::vector<DenseMatrix> m0_blocks, m1_blocks;
    for (const Mat3 &c : chi) {
        double dev = 0.0, scale = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                dev = std::max(dev, std::abs(c(i, j) + c(j, i)));
                scale = std::max(scale, std::abs(c(i, j)));
            }
        if (dev > 1e-14 * std::max(scale, 1e-300))
            throw InadmissibleMaterialError("make_omega: chi must be antisymmetric");
        DenseMatrix m1(6, 6);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                m1(i, 3 + j) = c(i, j);
                m1(3 + i, j) = c(i, j);
            }
        m0_blocks.push_back(DenseMatrix(6, 6));
        m1_blocks.push_back(std::move(m1));
    }
    return MaterialLaw(SparseOperator::block_diagonal(m0_blocks), SparseOperator::block_diagonal(m1_blocks),
                       "omega");
}

/// Elastic law on co-located (v, T) points: M0 = diag(rho, C^{-1}) with C a
/// symmetric positive definite 6x6 stiffness in Kelvin coordinates, 9x9 per
/// point. C is inverted densely per point; non-positive C is rejected.
inline MaterialLaw make_elastic(const std::vector<double> &rho, const std::vector<DenseMatrix> &stiffness) {
    if (rho.size() != stiffness.size())
        throw DimensionError("make_elastic: coefficient arrays differ in length");
    std::vector<DenseMatrix> m0_blocks, m1_blocks;
    for (std::size_t p = 0; p < rho.size(); ++p) {
        if (!(rho[p] > 0.0)) throw InadmissibleMaterialError("make_elastic: rho must be positive");
        const DenseMatrix &c = stiffness[p];
        if (c.rows() != 6 || c.cols() != 6) throw DimensionError("make_elastic: stiffness blocks must be 6x6");
        double dev = 0.0;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) dev = std::max(dev, std::abs(c(i, j) - c(j, i)));
        if (dev > 1e-12 * std::max(c.frobenius_norm(), 1e-300))
            throw InadmissibleMaterialError("make_elastic: stiffness must be symmetric");
        if (!cholesky(c)) throw InadmissibleMaterialError("make_elastic: stiffness is not positive definite");
        DenseMatrix cinv = invert(c);
        DenseMatrix m0(9, 9);
        for (int i = 0; i < 3; ++i) m0(i, i) = rho[p];
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) m0(3 + i, 3 + j) = 0.5 * (cinv(i, j) + cinv(j, i));
        m0_blocks.push_back(std::move(m0));
        m1_blocks.push_back(DenseMatrix(9, 9));
    }
    return MaterialLaw(SparseOperator::block_diagonal(m0_blocks), SparseOperator::block_diagonal(m1_blocks),
                       "elastic");
}

/// Isotropic stiffness C T = 2 mu T + lambda tr(T) Id in Kelvin
/// coordinates; positive definite iff mu > 0 and 3*lambda + 2*mu > 0.
inline DenseMatrix isotropic_stiffness(double lambda, double mu) {
    DenseMatrix c(6, 6);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) c(i, j) = lambda;
        c(i, i) += 2.0 * mu;
        c(3 + i, 3 + i) = 2.0 * mu;
    }
    return c;
}

} // namespace evosim
