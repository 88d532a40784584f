#pragma once

// Regular staggered grid. Vector unknowns (velocity / electric field) sit at
// cell centers; tensor-valued unknowns sit on a lattice extended by one in
// each axis ("slots"), where slot c bundles, for each axis a, the face
// between cells c-e_a and c. One-sided differences from cells to slots and
// their negative transposes back then form exact adjoint pairs.

#include <array>
#include <cstdint>
#include <vector>

#include "evosim/algebra.hpp"
#include "evosim/errors.hpp"

namespace evosim {

using Index3 = std::array<int, 3>;

struct StaggeredGrid {
    Index3 cells{1, 1, 1};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    Vec3 origin{};

    StaggeredGrid() = default;
    StaggeredGrid(Index3 n, std::array<double, 3> h, Vec3 o = {}) : cells(n), spacing(h), origin(o) {
        for (int a = 0; a < 3; ++a) {
            if (cells[static_cast<std::size_t>(a)] < 1) throw Error("StaggeredGrid: cell count must be >= 1 per axis");
            if (!(spacing[static_cast<std::size_t>(a)] > 0.0)) throw Error("StaggeredGrid: spacing must be positive");
        }
    }

    std::int64_t cell_count() const {
        return static_cast<std::int64_t>(cells[0]) * cells[1] * cells[2];
    }

    // Slot lattice is (n0+1) x (n1+1) x (n2+1).
    Index3 slot_dims() const { return {cells[0] + 1, cells[1] + 1, cells[2] + 1}; }

    std::int64_t slot_count() const {
        const Index3 m = slot_dims();
        return static_cast<std::int64_t>(m[0]) * m[1] * m[2];
    }

    bool cell_valid(Index3 c) const {
        for (int a = 0; a < 3; ++a)
            if (c[static_cast<std::size_t>(a)] < 0 || c[static_cast<std::size_t>(a)] >= cells[static_cast<std::size_t>(a)]) return false;
        return true;
    }

    std::int64_t cell_id(Index3 c) const {
        return (static_cast<std::int64_t>(c[0]) * cells[1] + c[1]) * cells[2] + c[2];
    }

    Index3 cell_coords(std::int64_t id) const {
        Index3 c;
        c[2] = static_cast<int>(id % cells[2]);
        id /= cells[2];
        c[1] = static_cast<int>(id % cells[1]);
        c[0] = static_cast<int>(id / cells[1]);
        return c;
    }

    std::int64_t slot_id(Index3 s) const {
        const Index3 m = slot_dims();
        return (static_cast<std::int64_t>(s[0]) * m[1] + s[1]) * m[2] + s[2];
    }

    Index3 slot_coords(std::int64_t id) const {
        const Index3 m = slot_dims();
        Index3 s;
        s[2] = static_cast<int>(id % m[2]);
        id /= m[2];
        s[1] = static_cast<int>(id % m[1]);
        s[0] = static_cast<int>(id / m[1]);
        return s;
    }

    bool slot_valid(Index3 s) const {
        const Index3 m = slot_dims();
        for (int a = 0; a < 3; ++a)
            if (s[static_cast<std::size_t>(a)] < 0 || s[static_cast<std::size_t>(a)] >= m[static_cast<std::size_t>(a)]) return false;
        return true;
    }

    Vec3 cell_center(Index3 c) const {
        return {{origin[0] + (c[0] + 0.5) * spacing[0],
                 origin[1] + (c[1] + 0.5) * spacing[1],
                 origin[2] + (c[2] + 0.5) * spacing[2]}};
    }

    /// Center of the axis-a face bundled at slot s (between cells s-e_a and s).
    Vec3 face_center(Index3 s, int axis) const {
        Vec3 x = {{origin[0] + (s[0] + 0.5) * spacing[0],
                   origin[1] + (s[1] + 0.5) * spacing[1],
                   origin[2] + (s[2] + 0.5) * spacing[2]}};
        x[axis] -= 0.5 * spacing[static_cast<std::size_t>(axis)];
        return x;
    }

    double cell_volume() const { return spacing[0] * spacing[1] * spacing[2]; }
};

using CellMask = std::vector<std::uint8_t>;

inline CellMask full_mask(const StaggeredGrid &g) {
    return CellMask(static_cast<std::size_t>(g.cell_count()), 1);
}

inline CellMask empty_mask(const StaggeredGrid &g) {
    return CellMask(static_cast<std::size_t>(g.cell_count()), 0);
}

/// Enumeration of masked cells: global cell id <-> contiguous unknown index.
struct CellSet {
    StaggeredGrid grid;
    CellMask mask;
    std::vector<std::int64_t> cells;      // global ids, ascending
    std::vector<std::int64_t> local;      // global id -> local index or -1

    CellSet() = default;
    CellSet(const StaggeredGrid &g, CellMask m) : grid(g), mask(std::move(m)) {
        if (static_cast<std::int64_t>(mask.size()) != g.cell_count())
            throw DimensionError("CellSet: mask size does not match grid");
        local.assign(mask.size(), -1);
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (mask[i]) {
                local[i] = static_cast<std::int64_t>(cells.size());
                cells.push_back(static_cast<std::int64_t>(i));
            }
        }
        if (cells.empty()) throw Error("CellSet: mask selects no cells");
    }

    std::int64_t count() const { return static_cast<std::int64_t>(cells.size()); }
    bool contains(Index3 c) const { return grid.cell_valid(c) && mask[static_cast<std::size_t>(grid.cell_id(c))] != 0; }
};

/// Slots reachable from a cell set: slot s is active when cell s or some
/// lower neighbor s - e_a is in the set. Tensor unknowns live here.
struct SlotSet {
    StaggeredGrid grid;
    std::vector<std::int64_t> slots;      // global slot ids, ascending
    std::vector<std::int64_t> local;      // global slot id -> local index or -1

    SlotSet() = default;

    static SlotSet from_cells(const CellSet &cells) {
        SlotSet s;
        s.grid = cells.grid;
        s.local.assign(static_cast<std::size_t>(cells.grid.slot_count()), -1);
        const Index3 m = cells.grid.slot_dims();
        for (int i = 0; i < m[0]; ++i)
            for (int j = 0; j < m[1]; ++j)
                for (int k = 0; k < m[2]; ++k) {
                    const Index3 sc{i, j, k};
                    bool active = cells.contains(sc);
                    for (int a = 0; a < 3 && !active; ++a) {
                        Index3 lo = sc;
                        lo[static_cast<std::size_t>(a)] -= 1;
                        active = cells.contains(lo);
                    }
                    if (active) {
                        const std::int64_t gid = cells.grid.slot_id(sc);
                        s.local[static_cast<std::size_t>(gid)] = static_cast<std::int64_t>(s.slots.size());
                        s.slots.push_back(gid);
                    }
                }
        return s;
    }

    std::int64_t count() const { return static_cast<std::int64_t>(slots.size()); }
    std::int64_t local_of(Index3 sc) const {
        if (!grid.slot_valid(sc)) return -1;
        return local[static_cast<std::size_t>(grid.slot_id(sc))];
    }
};

/// One grid-aligned interface face between an elastic cell and an
/// electromagnetic cell. The normal points from the elastic side into the
/// electromagnetic side and is always +/- a coordinate axis.
struct InterfaceFace {
    std::int64_t face_id = 0;     // position in the partition's face list
    Index3 slot{};                // slot bundling this face (axis component)
    int axis = 0;
    int orientation = +1;         // +1: normal = +e_axis, -1: normal = -e_axis
    Index3 cell_elastic{};        // cell on the Omega0 side
    Index3 cell_em{};             // cell on the Omega1 side

    Vec3 normal() const {
        Vec3 n{};
        n[axis] = static_cast<double>(orientation);
        return n;
    }
};

/// Disjoint cell masks for the elastic subdomain (Omega0) and the
/// electromagnetic subdomain (Omega1), plus the list of faces separating
/// them. Faces are enumerated in ascending slot-id then axis order, so the
/// layout is reproducible.
struct DomainPartition {
    StaggeredGrid grid;
    CellMask mask_elastic;
    CellMask mask_em;
    std::vector<InterfaceFace> interface_faces;

    DomainPartition() = default;
    DomainPartition(const StaggeredGrid &g, CellMask omega0, CellMask omega1)
        : grid(g), mask_elastic(std::move(omega0)), mask_em(std::move(omega1)) {
        if (static_cast<std::int64_t>(mask_elastic.size()) != g.cell_count() ||
            static_cast<std::int64_t>(mask_em.size()) != g.cell_count())
            throw DimensionError("DomainPartition: mask size does not match grid");
        for (std::size_t i = 0; i < mask_elastic.size(); ++i)
            if (mask_elastic[i] && mask_em[i])
                throw Error("DomainPartition: subdomain masks overlap");
        build_faces();
    }

    bool in_elastic(Index3 c) const { return grid.cell_valid(c) && mask_elastic[static_cast<std::size_t>(grid.cell_id(c))] != 0; }
    bool in_em(Index3 c) const { return grid.cell_valid(c) && mask_em[static_cast<std::size_t>(grid.cell_id(c))] != 0; }
    bool in_domain(Index3 c) const { return in_elastic(c) || in_em(c); }

    CellMask union_mask() const {
        CellMask u(mask_elastic.size());
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = (mask_elastic[i] || mask_em[i]) ? 1 : 0;
        return u;
    }

private:
    void build_faces() {
        // A face lives at slot s on axis a, between cells s-e_a and s.
        for (std::int64_t gid = 0; gid < grid.slot_count(); ++gid) {
            const Index3 s = grid.slot_coords(gid);
            for (int a = 0; a < 3; ++a) {
                Index3 lo = s;
                lo[static_cast<std::size_t>(a)] -= 1;
                const bool lo_el = in_elastic(lo), lo_em = in_em(lo);
                const bool hi_el = in_elastic(s), hi_em = in_em(s);
                if (lo_el && hi_em) {
                    interface_faces.push_back({static_cast<std::int64_t>(interface_faces.size()), s, a, +1, lo, s});
                } else if (lo_em && hi_el) {
                    interface_faces.push_back({static_cast<std::int64_t>(interface_faces.size()), s, a, -1, s, lo});
                }
            }
        }
    }
};

enum class FieldKind { VectorAtCells, Tensor9AtSlots, Sym6AtSlots, VectorAtSlots };

/// Flat storage for one unknown field plus the kind tag deciding its layout
/// (3, 9, 6 or 3 components per entity respectively).
struct Field {
    FieldKind kind = FieldKind::VectorAtCells;
    std::vector<double> values;

    static int components(FieldKind k) {
        switch (k) {
            case FieldKind::VectorAtCells: return 3;
            case FieldKind::Tensor9AtSlots: return 9;
            case FieldKind::Sym6AtSlots: return 6;
            case FieldKind::VectorAtSlots: return 3;
        }
        return 0;
    }
};

} // namespace evosim
