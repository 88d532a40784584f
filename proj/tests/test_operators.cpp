#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <random>

#include "evosim/coupling.hpp"
#include "evosim/operators.hpp"

using namespace evosim;

namespace {

struct Setup {
    StaggeredGrid grid;
    CellSet cells;
    SlotSet slots;
    SparseOperator grad0;
    SparseOperator div;

    Setup(Index3 n, std::array<double, 3> h, const CellMask &mask)
        : grid(n, h), cells(grid, mask), slots(SlotSet::from_cells(cells)),
          grad0(assemble_grad0(cells, slots)), div(divergence_from_adjoint(grad0)) {}
};

std::vector<double> cell_field(const CellSet &cells, const std::function<Vec3(Vec3)> &fn) {
    std::vector<double> u(static_cast<std::size_t>(3 * cells.count()), 0.0);
    for (std::int64_t lc = 0; lc < cells.count(); ++lc) {
        const Vec3 x = cells.grid.cell_center(cells.grid.cell_coords(cells.cells[static_cast<std::size_t>(lc)]));
        const Vec3 v = fn(x);
        for (int i = 0; i < 3; ++i) u[static_cast<std::size_t>(3 * lc + i)] = v[i];
    }
    return u;
}

/// Slot is interior when all cells its stencils touch lie in the set.
bool slot_interior(const CellSet &cells, Index3 s) {
    if (!cells.contains(s)) return false;
    for (int a = 0; a < 3; ++a) {
        Index3 lo = s;
        lo[static_cast<std::size_t>(a)] -= 1;
        if (!cells.contains(lo)) return false;
    }
    return true;
}

std::vector<double> random_vector(std::mt19937_64 &rng, std::int64_t n) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double &x : v) x = dist(rng);
    return v;
}

} // namespace

TEST_CASE("jacobian of a constant field vanishes away from the set boundary") {
    StaggeredGrid g({6, 6, 6}, {1.0, 1.0, 1.0});
    CellMask mask = empty_mask(g);
    mask_add_box(mask, g, {1, 1, 1}, {5, 5, 5});
    Setup s({6, 6, 6}, {1.0, 1.0, 1.0}, mask);

    std::vector<double> u = cell_field(s.cells, [](Vec3) { return Vec3{{2.0, -1.0, 0.5}}; });
    std::vector<double> w = s.grad0.apply(u);

    bool saw_boundary_difference = false;
    for (std::int64_t ls = 0; ls < s.slots.count(); ++ls) {
        const Index3 sc = s.grid.slot_coords(s.slots.slots[static_cast<std::size_t>(ls)]);
        const bool interior = slot_interior(s.cells, sc);
        for (int q = 0; q < 9; ++q) {
            const double val = w[static_cast<std::size_t>(9 * ls + q)];
            if (interior) {
                CHECK(val == 0.0);  // difference of equal values
            } else if (val != 0.0) {
                saw_boundary_difference = true;
            }
        }
    }
    CHECK(saw_boundary_difference);
}

TEST_CASE("single-cell stencil carries the six hand-computed entries") {
    StaggeredGrid g({3, 3, 3}, {1.0, 1.0, 1.0});
    CellMask mask = empty_mask(g);
    mask[static_cast<std::size_t>(g.cell_id({1, 1, 1}))] = 1;
    Setup s({3, 3, 3}, {1.0, 1.0, 1.0}, mask);

    std::vector<double> u(3, 0.0);
    u[0] = 1.0;  // unit value in component 0 of the only cell
    std::vector<double> w = s.grad0.apply(u);

    // Expected: for each axis a, component (0, a) holds +1 at slot (1,1,1)
    // and -1 at slot (1,1,1)+e_a; everything else vanishes.
    std::size_t nonzeros = 0;
    for (std::int64_t ls = 0; ls < s.slots.count(); ++ls) {
        const Index3 sc = s.grid.slot_coords(s.slots.slots[static_cast<std::size_t>(ls)]);
        for (int q = 0; q < 9; ++q) {
            const double val = w[static_cast<std::size_t>(9 * ls + q)];
            if (val == 0.0) continue;
            ++nonzeros;
            const int i = kVec9Row[static_cast<std::size_t>(q)];
            const int a = kVec9Col[static_cast<std::size_t>(q)];
            CHECK(i == 0);
            Index3 hi{1, 1, 1};
            hi[static_cast<std::size_t>(a)] += 1;
            if (sc == Index3{1, 1, 1}) CHECK(val == 1.0);
            else if (sc == hi) CHECK(val == -1.0);
            else FAIL("difference appeared at an unexpected slot");
        }
    }
    CHECK(nonzeros == 6);
}

TEST_CASE("jacobian is exact on linear fields at interior slots") {
    StaggeredGrid g({5, 4, 6}, {0.5, 0.25, 1.0});
    Setup s({5, 4, 6}, {0.5, 0.25, 1.0}, full_mask(g));

    std::vector<double> u = cell_field(s.cells, [](Vec3 x) { return x; });
    std::vector<double> w = s.grad0.apply(u);

    for (std::int64_t ls = 0; ls < s.slots.count(); ++ls) {
        const Index3 sc = s.grid.slot_coords(s.slots.slots[static_cast<std::size_t>(ls)]);
        if (!slot_interior(s.cells, sc)) continue;
        for (int q = 0; q < 9; ++q) {
            const int i = kVec9Row[static_cast<std::size_t>(q)];
            const int a = kVec9Col[static_cast<std::size_t>(q)];
            const double expected = (i == a) ? 1.0 : 0.0;
            CHECK(w[static_cast<std::size_t>(9 * ls + q)] == Catch::Approx(expected).margin(1e-12));
        }
    }
}

TEST_CASE("divergence is the exact negative adjoint") {
    StaggeredGrid g({4, 3, 5}, {0.5, 1.0, 0.25});
    Setup s({4, 3, 5}, {0.5, 1.0, 0.25}, full_mask(g));

    SECTION("uniform weights: entries are the negated transpose, bitwise") {
        auto a = s.div.to_coo();
        auto b = s.grad0.transposed().negated().to_coo();
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].row == b[i].row);
            CHECK(a[i].col == b[i].col);
            CHECK(a[i].value == b[i].value);
        }
    }

    SECTION("inner-product identity with general positive weights") {
        std::mt19937_64 rng(41);
        std::uniform_real_distribution<double> wdist(0.5, 2.0);
        std::vector<double> wc(static_cast<std::size_t>(s.grad0.cols()));
        std::vector<double> ws(static_cast<std::size_t>(s.grad0.rows()));
        for (double &v : wc) v = wdist(rng);
        for (double &v : ws) v = wdist(rng);
        SparseOperator div_w = divergence_from_adjoint(s.grad0, wc, ws);

        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> u = random_vector(rng, s.grad0.cols());
            std::vector<double> w = random_vector(rng, s.grad0.rows());
            std::vector<double> gu = s.grad0.apply(u);
            std::vector<double> dw = div_w.apply(w);
            double lhs = 0.0, rhs = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                lhs += ws[i] * gu[i] * w[i];
                scale += std::abs(ws[i] * gu[i] * w[i]);
            }
            for (std::size_t i = 0; i < u.size(); ++i) {
                rhs += wc[i] * u[i] * dw[i];
                scale += std::abs(wc[i] * u[i] * dw[i]);
            }
            CHECK(std::abs(lhs + rhs) <= 1e-14 * scale);
        }
    }

    SECTION("divergence of a constant tensor field vanishes at interior cells") {
        std::mt19937_64 rng(43);
        std::vector<double> constant(9);
        for (double &v : constant) v = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
        std::vector<double> w(static_cast<std::size_t>(s.grad0.rows()));
        for (std::int64_t ls = 0; ls < s.slots.count(); ++ls)
            for (int q = 0; q < 9; ++q) w[static_cast<std::size_t>(9 * ls + q)] = constant[static_cast<std::size_t>(q)];
        std::vector<double> dwv = s.div.apply(w);
        for (std::int64_t lc = 0; lc < s.cells.count(); ++lc) {
            const Index3 c = s.grid.cell_coords(s.cells.cells[static_cast<std::size_t>(lc)]);
            bool interior = true;
            for (int a = 0; a < 3 && interior; ++a)
                interior = c[static_cast<std::size_t>(a)] > 0 &&
                           c[static_cast<std::size_t>(a)] + 1 < s.grid.cells[static_cast<std::size_t>(a)];
            if (!interior) continue;
            for (int i = 0; i < 3; ++i)
                CHECK(std::abs(dwv[static_cast<std::size_t>(3 * lc + i)]) <= 1e-14);
        }
    }

    SECTION("weight validation") {
        std::vector<double> wc(static_cast<std::size_t>(s.grad0.cols()), 1.0);
        std::vector<double> ws(static_cast<std::size_t>(s.grad0.rows()), 1.0);
        ws[3] = 0.0;
        CHECK_THROWS_AS(divergence_from_adjoint(s.grad0, wc, ws), Error);
    }
}

TEST_CASE("symmetric pair: rigid rotations, linear fields, adjointness") {
    StaggeredGrid g({5, 5, 5}, {1.0, 1.0, 1.0});
    Setup s({5, 5, 5}, {1.0, 1.0, 1.0}, full_mask(g));
    ElasticPair pair = derive_elastic_pair(s.grad0, s.div);

    SECTION("rigid rotation lies in the kernel at interior slots") {
        const Vec3 omega{{0.5, -1.0, 2.0}};
        std::vector<double> u = cell_field(s.cells, [&](Vec3 x) { return cross(omega, x); });
        std::vector<double> t = pair.sym_grad0.apply(u);
        for (std::int64_t ls = 0; ls < s.slots.count(); ++ls) {
            if (!slot_interior(s.cells, s.grid.slot_coords(s.slots.slots[static_cast<std::size_t>(ls)]))) continue;
            for (int k = 0; k < 6; ++k) CHECK(std::abs(t[static_cast<std::size_t>(6 * ls + k)]) <= 1e-14);
        }
    }

    SECTION("identity map has the identity as symmetric gradient") {
        std::vector<double> u = cell_field(s.cells, [](Vec3 x) { return x; });
        std::vector<double> t = pair.sym_grad0.apply(u);
        for (std::int64_t ls = 0; ls < s.slots.count(); ++ls) {
            if (!slot_interior(s.cells, s.grid.slot_coords(s.slots.slots[static_cast<std::size_t>(ls)]))) continue;
            for (int k = 0; k < 6; ++k) {
                const double expected = k < 3 ? 1.0 : 0.0;
                CHECK(t[static_cast<std::size_t>(6 * ls + k)] == Catch::Approx(expected).margin(1e-13));
            }
        }
    }

    SECTION("sym_div is the exact negative transpose of sym_grad0") {
        CHECK(max_abs_difference(pair.sym_div, pair.sym_grad0.transposed().negated()) == 0.0);

        std::mt19937_64 rng(47);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> v = random_vector(rng, pair.sym_grad0.cols());
            std::vector<double> t = random_vector(rng, pair.sym_grad0.rows());
            std::vector<double> gv = pair.sym_grad0.apply(v);
            std::vector<double> dt = pair.sym_div.apply(t);
            double lhs = 0.0, rhs = 0.0, scale = 1e-300;
            for (std::size_t i = 0; i < t.size(); ++i) {
                lhs += gv[i] * t[i];
                scale += std::abs(gv[i] * t[i]);
            }
            for (std::size_t i = 0; i < v.size(); ++i) {
                rhs += v[i] * dt[i];
                scale += std::abs(v[i] * dt[i]);
            }
            CHECK(std::abs(lhs + rhs) <= 1e-14 * scale);
        }
    }
}

TEST_CASE("axial pair: kernel of curl on gradients, closed-form curl, congruence") {
    StaggeredGrid g({5, 5, 5}, {1.0, 1.0, 1.0});
    Setup s({5, 5, 5}, {1.0, 1.0, 1.0}, full_mask(g));
    MaxwellPair pair = derive_maxwell_pair(s.grad0, s.div);

    SECTION("curl of a discrete gradient vanishes exactly (integer data)") {
        std::mt19937_64 rng(53);
        std::uniform_int_distribution<int> phi_dist(-8, 8);
        std::vector<double> phi(static_cast<std::size_t>(s.grid.cell_count()));
        for (double &v : phi) v = phi_dist(rng);

        // E_i = backward difference of phi (zero-extended), h = 1.
        std::vector<double> e(static_cast<std::size_t>(3 * s.cells.count()), 0.0);
        for (std::int64_t lc = 0; lc < s.cells.count(); ++lc) {
            const Index3 c = s.grid.cell_coords(s.cells.cells[static_cast<std::size_t>(lc)]);
            for (int i = 0; i < 3; ++i) {
                Index3 lo = c;
                lo[static_cast<std::size_t>(i)] -= 1;
                const double lo_val = s.grid.cell_valid(lo) ? phi[static_cast<std::size_t>(s.grid.cell_id(lo))] : 0.0;
                e[static_cast<std::size_t>(3 * lc + i)] = phi[static_cast<std::size_t>(s.grid.cell_id(c))] - lo_val;
            }
        }
        std::vector<double> curl_e = pair.curl0.apply(e);
        for (std::int64_t ls = 0; ls < s.slots.count(); ++ls) {
            const Index3 sc = s.grid.slot_coords(s.slots.slots[static_cast<std::size_t>(ls)]);
            // Deep interior: the composed stencil must not touch the zero
            // extension anywhere.
            bool deep = true;
            for (int a = 0; a < 3; ++a)
                deep = deep && sc[static_cast<std::size_t>(a)] >= 2 &&
                       sc[static_cast<std::size_t>(a)] + 1 < s.grid.cells[static_cast<std::size_t>(a)];
            if (!deep) continue;
            for (int m = 0; m < 3; ++m) CHECK(curl_e[static_cast<std::size_t>(3 * ls + m)] == 0.0);
        }
    }

    SECTION("closed-form curl of a planar rotation field") {
        std::vector<double> e = cell_field(s.cells, [](Vec3 x) { return Vec3{{-0.5 * x[1], 0.5 * x[0], 0.0}}; });
        std::vector<double> curl_e = pair.curl0.apply(e);
        for (std::int64_t ls = 0; ls < s.slots.count(); ++ls) {
            if (!slot_interior(s.cells, s.grid.slot_coords(s.slots.slots[static_cast<std::size_t>(ls)]))) continue;
            CHECK(curl_e[static_cast<std::size_t>(3 * ls + 0)] == Catch::Approx(0.0).margin(1e-14));
            CHECK(curl_e[static_cast<std::size_t>(3 * ls + 1)] == Catch::Approx(0.0).margin(1e-14));
            CHECK(curl_e[static_cast<std::size_t>(3 * ls + 2)] == Catch::Approx(1.0).margin(1e-14));
        }
    }

    SECTION("factored form through the axial unitary matches entrywise") {
        const std::int64_t ns = s.slots.count();
        SparseOperator composed =
            (axial_unitary(ns).transposed() * tensor_skew_projection(ns) * s.grad0).scaled(kSqrt2);
        CHECK(max_abs_difference(composed, pair.curl0) <= 1e-15 * pair.curl0.max_abs());

        SparseOperator curl_composed = (s.div * axial_unitary(ns)).scaled(-kSqrt2);
        CHECK(max_abs_difference(curl_composed, pair.curl) <= 1e-15 * pair.curl.max_abs());
    }

    SECTION("curl is the exact transpose of curl0") {
        CHECK(max_abs_difference(pair.curl, pair.curl0.transposed()) == 0.0);
    }
}

TEST_CASE("block assembly produces antisymmetric operators") {
    StaggeredGrid g({4, 4, 4}, {0.5, 0.5, 0.5});
    Setup s({4, 4, 4}, {0.5, 0.5, 0.5}, full_mask(g));
    ElasticPair el = derive_elastic_pair(s.grad0, s.div);
    MaxwellPair mx = derive_maxwell_pair(s.grad0, s.div);

    SparseOperator a_el = assemble_block_a(el.sym_div.negated(), el.sym_grad0.negated());
    SparseOperator a_mx = assemble_block_a(mx.curl.negated(), mx.curl0);

    CHECK(max_abs_difference(a_el, a_el.transposed().negated()) == 0.0);
    CHECK(max_abs_difference(a_mx, a_mx.transposed().negated()) == 0.0);
    CHECK(skew_probe_residual(a_el) <= 1e-14);
    CHECK(skew_probe_residual(a_mx) <= 1e-14);

    SECTION("rejects pairs that are not negative transposes") {
        CHECK_THROWS_AS(assemble_block_a(el.sym_div, el.sym_grad0.negated()), Error);
    }
}

TEST_CASE("operator locality bounds") {
    StaggeredGrid g({6, 5, 4}, {1.0, 0.5, 0.25});
    Setup s({6, 5, 4}, {1.0, 0.5, 0.25}, full_mask(g));
    CHECK(s.grad0.max_row_nnz() <= 2);

    ElasticPair el = derive_elastic_pair(s.grad0, s.div);
    MaxwellPair mx = derive_maxwell_pair(s.grad0, s.div);
    SparseOperator a_el = assemble_block_a(el.sym_div.negated(), el.sym_grad0.negated());
    SparseOperator a_mx = assemble_block_a(mx.curl.negated(), mx.curl0);
    CHECK(a_el.max_row_nnz() <= 6);
    CHECK(a_mx.max_row_nnz() <= 4);
}

TEST_CASE("empty masks are rejected") {
    StaggeredGrid g({3, 3, 3}, {1.0, 1.0, 1.0});
    CHECK_THROWS_AS(CellSet(g, empty_mask(g)), Error);
}
