#pragma once

// Assembly of the simulated systems.
//
// Standalone elasticity (unknowns v at cells, T in Kelvin components at
// slots) and standalone electromagnetics (E at cells, H as axial components
// at slots) are both built from the same compact-support Jacobian through
// their respective congruences. The coupled transmission system keeps one
// shared cell-centered unknown holding v on the elastic subdomain and E on
// the electromagnetic one; each tensor slot is owned by exactly one
// subdomain and carries either Kelvin stress components or the axial
// magnetic components. No interface terms are assembled: the coupling is
// carried entirely by the shared unknown and by difference stencils that
// reach across the interface.

#include <span>
#include <vector>

#include "evosim/descend.hpp"
#include "evosim/evolution.hpp"
#include "evosim/grid.hpp"
#include "evosim/material.hpp"
#include "evosim/operators.hpp"

namespace evosim {

/// Axis-aligned cell box [lo, hi) merged into a mask.
inline void mask_add_box(CellMask &mask, const StaggeredGrid &g, Index3 lo, Index3 hi) {
    for (int i = std::max(lo[0], 0); i < std::min(hi[0], g.cells[0]); ++i)
        for (int j = std::max(lo[1], 0); j < std::min(hi[1], g.cells[1]); ++j)
            for (int k = std::max(lo[2], 0); k < std::min(hi[2], g.cells[2]); ++k)
                mask[static_cast<std::size_t>(g.cell_id({i, j, k}))] = 1;
}

/// Cell whose material coefficients a slot samples: the slot's own cell when
/// it lies in the set, otherwise the first lower neighbor (axis order) that
/// does. Deterministic and local.
inline std::int64_t slot_sample_cell(const CellSet &cells, Index3 s) {
    if (cells.contains(s)) return cells.grid.cell_id(s);
    for (int a = 0; a < 3; ++a) {
        Index3 lo = s;
        lo[static_cast<std::size_t>(a)] -= 1;
        if (cells.contains(lo)) return cells.grid.cell_id(lo);
    }
    return -1;
}

struct ElasticMaterial {
    std::vector<double> rho;            // per grid cell
    std::vector<DenseMatrix> stiffness; // per grid cell, 6x6 Kelvin

    static ElasticMaterial uniform(const StaggeredGrid &g, double rho_value, const DenseMatrix &c) {
        ElasticMaterial m;
        m.rho.assign(static_cast<std::size_t>(g.cell_count()), rho_value);
        m.stiffness.assign(static_cast<std::size_t>(g.cell_count()), c);
        return m;
    }
};

struct EmMaterial {
    std::vector<double> eps;    // per grid cell
    std::vector<double> mu;
    std::vector<double> sigma;

    static EmMaterial uniform(const StaggeredGrid &g, double eps_value, double mu_value, double sigma_value) {
        EmMaterial m;
        const std::size_t n = static_cast<std::size_t>(g.cell_count());
        m.eps.assign(n, eps_value);
        m.mu.assign(n, mu_value);
        m.sigma.assign(n, sigma_value);
        return m;
    }
};

struct ElasticSystem {
    EvoSystem evo;          // state = [v (3 per cell) ; T (6 per slot)]
    CellSet cells;
    SlotSet slots;
    SparseOperator sym_grad0;
    SparseOperator sym_div;
};

inline ElasticSystem assemble_elastic_system(const StaggeredGrid &g, const CellMask &mask,
                                             const ElasticMaterial &mat) {
    CellSet cells(g, mask);
    SlotSet slots = SlotSet::from_cells(cells);
    SparseOperator grad0 = assemble_grad0(cells, slots);
    SparseOperator div = divergence_from_adjoint(grad0);
    ElasticPair pair = derive_elastic_pair(grad0, div);

    SparseOperator a = assemble_block_skew(pair.sym_div.negated(), pair.sym_grad0.negated());

    std::vector<CooEntry> m0;
    for (std::int64_t lc = 0; lc < cells.count(); ++lc) {
        const double rho = mat.rho[static_cast<std::size_t>(cells.cells[static_cast<std::size_t>(lc)])];
        if (!(rho > 0.0)) throw InadmissibleMaterialError("assemble_elastic_system: rho must be positive");
        for (int i = 0; i < 3; ++i) m0.push_back({3 * lc + i, 3 * lc + i, rho});
    }
    const std::int64_t toff = 3 * cells.count();
    for (std::int64_t ls = 0; ls < slots.count(); ++ls) {
        const std::int64_t cid = slot_sample_cell(cells, g.slot_coords(slots.slots[static_cast<std::size_t>(ls)]));
        const DenseMatrix &c = mat.stiffness[static_cast<std::size_t>(cid)];
        if (!cholesky(c)) throw InadmissibleMaterialError("assemble_elastic_system: stiffness not positive definite");
        DenseMatrix cinv = invert(c);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) {
                const double v = 0.5 * (cinv(i, j) + cinv(j, i));
                if (v != 0.0) m0.push_back({toff + 6 * ls + i, toff + 6 * ls + j, v});
            }
    }
    const std::int64_t dim = 3 * cells.count() + 6 * slots.count();
    EvoSystem evo(SparseOperator::from_coo(dim, dim, std::move(m0)), SparseOperator::zero(dim, dim), a,
                  g.cell_volume());
    return {std::move(evo), std::move(cells), std::move(slots), std::move(pair.sym_grad0), std::move(pair.sym_div)};
}

struct MaxwellSystem {
    EvoSystem evo;          // state = [E (3 per cell) ; H (3 per slot)]
    CellSet cells;
    SlotSet slots;
    SparseOperator curl0;
    SparseOperator curl;
};

inline MaxwellSystem assemble_maxwell_system(const StaggeredGrid &g, const CellMask &mask,
                                             const EmMaterial &mat) {
    CellSet cells(g, mask);
    SlotSet slots = SlotSet::from_cells(cells);
    SparseOperator grad0 = assemble_grad0(cells, slots);
    SparseOperator div = divergence_from_adjoint(grad0);
    MaxwellPair pair = derive_maxwell_pair(grad0, div);

    SparseOperator a = assemble_block_skew(pair.curl.negated(), pair.curl0);

    std::vector<CooEntry> m0, m1;
    for (std::int64_t lc = 0; lc < cells.count(); ++lc) {
        const std::size_t cid = static_cast<std::size_t>(cells.cells[static_cast<std::size_t>(lc)]);
        if (mat.eps[cid] < 0.0) throw InadmissibleMaterialError("assemble_maxwell_system: eps must be nonnegative");
        for (int i = 0; i < 3; ++i) {
            if (mat.eps[cid] != 0.0) m0.push_back({3 * lc + i, 3 * lc + i, mat.eps[cid]});
            if (mat.sigma[cid] != 0.0) m1.push_back({3 * lc + i, 3 * lc + i, mat.sigma[cid]});
        }
    }
    const std::int64_t hoff = 3 * cells.count();
    for (std::int64_t ls = 0; ls < slots.count(); ++ls) {
        const std::int64_t cid = slot_sample_cell(cells, g.slot_coords(slots.slots[static_cast<std::size_t>(ls)]));
        const double mu = mat.mu[static_cast<std::size_t>(cid)];
        if (!(mu > 0.0)) throw InadmissibleMaterialError("assemble_maxwell_system: mu must be positive");
        for (int i = 0; i < 3; ++i) m0.push_back({hoff + 3 * ls + i, hoff + 3 * ls + i, mu});
    }
    const std::int64_t dim = 3 * cells.count() + 3 * slots.count();
    EvoSystem evo(SparseOperator::from_coo(dim, dim, std::move(m0)),
                  SparseOperator::from_coo(dim, dim, std::move(m1)), a, g.cell_volume());
    return {std::move(evo), std::move(cells), std::move(slots), std::move(pair.curl0), std::move(pair.curl)};
}

/// Ownership of each active slot in a partitioned domain.
enum class SlotOwner : std::uint8_t { Elastic = 0, Electromagnetic = 1 };

struct CoupledLayout {
    CellSet cells;                     // union of the two subdomains
    SlotSet slots;
    std::vector<SlotOwner> owner;      // per local slot
    std::vector<std::int64_t> stress_index;   // local slot -> stress sub-index or -1
    std::vector<std::int64_t> magnetic_index; // local slot -> magnetic sub-index or -1
    std::int64_t n_stress_slots = 0;
    std::int64_t n_magnetic_slots = 0;

    std::int64_t shared_dim() const { return 3 * cells.count(); }
    std::int64_t stress_dim() const { return 6 * n_stress_slots; }
    std::int64_t magnetic_dim() const { return 3 * n_magnetic_slots; }
    std::int64_t state_dim() const { return shared_dim() + stress_dim() + magnetic_dim(); }

    std::int64_t shared_offset() const { return 0; }
    std::int64_t stress_offset() const { return shared_dim(); }
    std::int64_t magnetic_offset() const { return shared_dim() + stress_dim(); }
};

inline CoupledLayout make_coupled_layout(const DomainPartition &part) {
    CoupledLayout lay;
    lay.cells = CellSet(part.grid, part.union_mask());
    lay.slots = SlotSet::from_cells(lay.cells);
    lay.owner.resize(static_cast<std::size_t>(lay.slots.count()));
    lay.stress_index.assign(static_cast<std::size_t>(lay.slots.count()), -1);
    lay.magnetic_index.assign(static_cast<std::size_t>(lay.slots.count()), -1);
    for (std::int64_t ls = 0; ls < lay.slots.count(); ++ls) {
        const Index3 s = part.grid.slot_coords(lay.slots.slots[static_cast<std::size_t>(ls)]);
        const std::int64_t cid = slot_sample_cell(lay.cells, s);
        const bool elastic = part.mask_elastic[static_cast<std::size_t>(cid)] != 0;
        lay.owner[static_cast<std::size_t>(ls)] = elastic ? SlotOwner::Elastic : SlotOwner::Electromagnetic;
        if (elastic)
            lay.stress_index[static_cast<std::size_t>(ls)] = lay.n_stress_slots++;
        else
            lay.magnetic_index[static_cast<std::size_t>(ls)] = lay.n_magnetic_slots++;
    }
    return lay;
}

/// The combined embedding taking (stress, magnetic) unknowns into the full
/// tensor field: Kelvin embedding on elastic-owned slots, the scaled axial
/// embedding on electromagnetic-owned slots. Its transpose is the map the
/// coupled system descends through.
inline SparseOperator build_i0(const CoupledLayout &lay) {
    std::vector<CooEntry> coo;
    const std::int64_t t_base = 0;
    const std::int64_t h_base = lay.stress_dim();
    for (std::int64_t ls = 0; ls < lay.slots.count(); ++ls) {
        if (lay.owner[static_cast<std::size_t>(ls)] == SlotOwner::Elastic) {
            const std::int64_t p = lay.stress_index[static_cast<std::size_t>(ls)];
            for (int k = 0; k < 3; ++k) coo.push_back({9 * ls + k, t_base + 6 * p + k, 1.0});
            for (int k = 3; k < 6; ++k) {
                coo.push_back({9 * ls + k, t_base + 6 * p + k, kInvSqrt2});
                coo.push_back({9 * ls + k + 3, t_base + 6 * p + k, kInvSqrt2});
            }
        } else {
            const std::int64_t q = lay.magnetic_index[static_cast<std::size_t>(ls)];
            for (int m = 0; m < 3; ++m) {
                coo.push_back({9 * ls + 3 + m, h_base + 3 * q + m, 1.0});
                coo.push_back({9 * ls + 6 + m, h_base + 3 * q + m, -1.0});
            }
        }
    }
    return SparseOperator::from_coo(9 * lay.slots.count(), lay.stress_dim() + lay.magnetic_dim(),
                                    std::move(coo));
}

struct CoupledSystem {
    EvoSystem evo;              // state = [v+E shared ; T Kelvin ; H axial]
    DomainPartition partition;
    CoupledLayout layout;

    Vec3 shared_at(std::span<const double> state, Index3 cell) const {
        const std::int64_t lc = layout.cells.local[static_cast<std::size_t>(partition.grid.cell_id(cell))];
        if (lc < 0) throw Error("shared_at: cell not in domain");
        return {{state[static_cast<std::size_t>(3 * lc)], state[static_cast<std::size_t>(3 * lc + 1)],
                 state[static_cast<std::size_t>(3 * lc + 2)]}};
    }

    Mat3 stress_at(std::span<const double> state, Index3 slot) const {
        const std::int64_t ls = layout.slots.local_of(slot);
        if (ls < 0 || layout.stress_index[static_cast<std::size_t>(ls)] < 0)
            throw Error("stress_at: slot carries no stress unknowns");
        const std::int64_t p = layout.stress_index[static_cast<std::size_t>(ls)];
        const std::size_t base = static_cast<std::size_t>(layout.stress_offset() + 6 * p);
        Vec6 kelvin;
        for (int k = 0; k < 6; ++k) kelvin[static_cast<std::size_t>(k)] = state[base + static_cast<std::size_t>(k)];
        return kelvin_to_sym(kelvin);
    }

    Vec3 magnetic_at(std::span<const double> state, Index3 slot) const {
        const std::int64_t ls = layout.slots.local_of(slot);
        if (ls < 0 || layout.magnetic_index[static_cast<std::size_t>(ls)] < 0)
            throw Error("magnetic_at: slot carries no magnetic unknowns");
        const std::int64_t q = layout.magnetic_index[static_cast<std::size_t>(ls)];
        const std::size_t base = static_cast<std::size_t>(layout.magnetic_offset() + 3 * q);
        return {{state[base], state[base + 1], state[base + 2]}};
    }
};

/// Coupled transmission system: the block operator is descended from the
/// compact-support Jacobian on the whole domain through the transpose of
/// build_i0; the material places mass density / permittivity on the shared
/// cell unknown by subdomain, inverse stiffness on stress slots,
/// permeability on magnetic slots and conductivity on electromagnetic
/// cells. Interface cells carry no extra terms.
inline CoupledSystem assemble_coupled(const StaggeredGrid &g, const DomainPartition &part,
                                      const ElasticMaterial &elastic, const EmMaterial &em) {
    CoupledLayout lay = make_coupled_layout(part);
    SparseOperator grad0 = assemble_grad0(lay.cells, lay.slots);
    SparseOperator i0 = build_i0(lay);
    BoundedMap b = BoundedMap::onto(i0.transposed());
    SparseOperator a = descend_operator(grad0.negated(), b);

    std::vector<CooEntry> m0, m1;
    for (std::int64_t lc = 0; lc < lay.cells.count(); ++lc) {
        const std::size_t cid = static_cast<std::size_t>(lay.cells.cells[static_cast<std::size_t>(lc)]);
        if (part.mask_elastic[cid]) {
            if (!(elastic.rho[cid] > 0.0)) throw InadmissibleMaterialError("assemble_coupled: rho must be positive");
            for (int i = 0; i < 3; ++i) m0.push_back({3 * lc + i, 3 * lc + i, elastic.rho[cid]});
        } else {
            if (em.eps[cid] < 0.0) throw InadmissibleMaterialError("assemble_coupled: eps must be nonnegative");
            for (int i = 0; i < 3; ++i) {
                if (em.eps[cid] != 0.0) m0.push_back({3 * lc + i, 3 * lc + i, em.eps[cid]});
                if (em.sigma[cid] != 0.0) m1.push_back({3 * lc + i, 3 * lc + i, em.sigma[cid]});
            }
        }
    }
    for (std::int64_t ls = 0; ls < lay.slots.count(); ++ls) {
        const std::int64_t cid = slot_sample_cell(lay.cells, g.slot_coords(lay.slots.slots[static_cast<std::size_t>(ls)]));
        if (lay.owner[static_cast<std::size_t>(ls)] == SlotOwner::Elastic) {
            const DenseMatrix &c = elastic.stiffness[static_cast<std::size_t>(cid)];
            if (!cholesky(c)) throw InadmissibleMaterialError("assemble_coupled: stiffness not positive definite");
            DenseMatrix cinv = invert(c);
            const std::int64_t base = lay.stress_offset() + 6 * lay.stress_index[static_cast<std::size_t>(ls)];
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) {
                    const double v = 0.5 * (cinv(i, j) + cinv(j, i));
                    if (v != 0.0) m0.push_back({base + i, base + j, v});
                }
        } else {
            const double mu = em.mu[static_cast<std::size_t>(cid)];
            if (!(mu > 0.0)) throw InadmissibleMaterialError("assemble_coupled: mu must be positive");
            const std::int64_t base = lay.magnetic_offset() + 3 * lay.magnetic_index[static_cast<std::size_t>(ls)];
            for (int i = 0; i < 3; ++i) m0.push_back({base + i, base + i, mu});
        }
    }

    const std::int64_t dim = lay.state_dim();
    EvoSystem evo(SparseOperator::from_coo(dim, dim, std::move(m0)),
                  SparseOperator::from_coo(dim, dim, std::move(m1)), a, g.cell_volume());
    return {std::move(evo), part, std::move(lay)};
}

/// Residuals of the interface relations at one grid-aligned face, all from
/// one-sided values: stress and velocity from the elastic cell, magnetic
/// and electric values from the electromagnetic cell.
struct FaceResiduals {
    std::int64_t face_id = 0;
    Vec3 position{};
    Vec3 normal{};
    double traction = 0.0;          // |T n - n x H|
    double tangential = 0.0;        // |n x (v - E)|
    double energy = 0.0;            // |v . (T n) - n . (H x E)|
    double normal_traction = 0.0;   // |n^T T n|
};

struct InterfaceDiagnostics {
    std::vector<FaceResiduals> faces;
    double max_traction = 0.0;
    double max_tangential = 0.0;
    double max_energy = 0.0;
    double max_normal_traction = 0.0;
};

inline InterfaceDiagnostics interface_diagnostics(const CoupledSystem &sys, std::span<const double> state) {
    InterfaceDiagnostics diag;
    for (const InterfaceFace &f : sys.partition.interface_faces) {
        const Vec3 n = f.normal();
        const Vec3 v = sys.shared_at(state, f.cell_elastic);
        const Vec3 e = sys.shared_at(state, f.cell_em);
        const Mat3 t = sys.stress_at(state, f.cell_elastic);
        const Vec3 h = sys.magnetic_at(state, f.cell_em);

        const Vec3 tn = t * n;
        const Vec3 nxh = cross(n, h);

        FaceResiduals r;
        r.face_id = f.face_id;
        r.position = sys.partition.grid.face_center(f.slot, f.axis);
        r.normal = n;
        r.traction = norm(tn - nxh);
        r.tangential = norm(cross(n, v - e));
        r.energy = std::abs(dot(v, tn) - dot(n, cross(h, e)));
        r.normal_traction = std::abs(dot(n, tn));
        diag.faces.push_back(r);

        diag.max_traction = std::max(diag.max_traction, r.traction);
        diag.max_tangential = std::max(diag.max_tangential, r.tangential);
        diag.max_energy = std::max(diag.max_energy, r.energy);
        diag.max_normal_traction = std::max(diag.max_normal_traction, r.normal_traction);
    }
    return diag;
}

/// Residuals of the alternative interface relations that pair the stress
/// with the time integral of H and the tangential electric trace with the
/// time integral of v; the energy pairing uses the integrated magnetic
/// field against the time derivative of E. The time integral is the
/// causal trapezoidal antiderivative from the start of the run.
struct ChFaceResiduals {
    std::int64_t face_id = 0;
    double traction = 0.0;    // |T n - n x int(H)|
    double tangential = 0.0;  // |n x int(v) - n x E|
    double energy = 0.0;      // |v . (T n) - n . (int(H) x dE/dt)|
};

struct ChDiagnostics {
    std::vector<ChFaceResiduals> faces;
    double max_traction = 0.0;
    double max_tangential = 0.0;
    double max_energy = 0.0;
};

/// Core evaluation shared by the trajectory-based entry point and the
/// incremental bookkeeping in the batch runner: `integral` is the causal
/// antiderivative of the state and `ddt` its backward time derivative.
inline ChDiagnostics cakoni_hsiao_from_parts(const CoupledSystem &sys, std::span<const double> state,
                                             std::span<const double> integral, std::span<const double> ddt) {
    ChDiagnostics diag;
    for (const InterfaceFace &f : sys.partition.interface_faces) {
        const Vec3 n = f.normal();
        const Mat3 t = sys.stress_at(state, f.cell_elastic);
        const Vec3 e = sys.shared_at(state, f.cell_em);
        const Vec3 int_h = sys.magnetic_at(integral, f.cell_em);
        const Vec3 int_v = sys.shared_at(integral, f.cell_elastic);
        const Vec3 v = sys.shared_at(state, f.cell_elastic);
        const Vec3 de_dt = sys.shared_at(ddt, f.cell_em);

        const Vec3 tn = t * n;
        ChFaceResiduals r;
        r.face_id = f.face_id;
        r.traction = norm(tn - cross(n, int_h));
        r.tangential = norm(cross(n, int_v) - cross(n, e));
        r.energy = std::abs(dot(v, tn) - dot(n, cross(int_h, de_dt)));
        diag.faces.push_back(r);

        diag.max_traction = std::max(diag.max_traction, r.traction);
        diag.max_tangential = std::max(diag.max_tangential, r.tangential);
        diag.max_energy = std::max(diag.max_energy, r.energy);
    }
    return diag;
}

inline ChDiagnostics cakoni_hsiao_diagnostics(const CoupledSystem &sys, const Trajectory &traj,
                                              std::size_t step) {
    if (traj.states.size() < 2) throw Error("cakoni_hsiao_diagnostics: trajectory too short to integrate");
    if (step >= traj.states.size()) throw Error("cakoni_hsiao_diagnostics: step outside trajectory");

    // Causal trapezoidal antiderivative of the full state up to `step`.
    std::vector<double> integral(traj.states[0].size(), 0.0);
    for (std::size_t n = 1; n <= step; ++n)
        for (std::size_t i = 0; i < integral.size(); ++i)
            integral[i] += 0.5 * traj.dt * (traj.states[n - 1][i] + traj.states[n][i]);

    std::vector<double> ddt(traj.states[0].size(), 0.0);
    if (step >= 1)
        for (std::size_t i = 0; i < ddt.size(); ++i)
            ddt[i] = (traj.states[step][i] - traj.states[step - 1][i]) / traj.dt;

    return cakoni_hsiao_from_parts(sys, traj.states[step], integral, ddt);
}

} // namespace evosim
