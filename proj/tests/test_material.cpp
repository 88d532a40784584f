#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <random>

#include "evosim/material.hpp"

using namespace evosim;

namespace {

Eigen::MatrixXd to_eigen(const DenseMatrix &m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return e;
}

/// Independent oracle: smallest eigenvalue of nu*M0 + (M1 + M1^T)/2 from a
/// dense selfadjoint solve.
double min_eig_oracle(const MaterialLaw &law, double nu) {
    Eigen::MatrixXd m0 = to_eigen(law.m0.to_dense());
    Eigen::MatrixXd m1 = to_eigen(law.m1.to_dense());
    Eigen::MatrixXd s = nu * m0 + 0.5 * (m1 + m1.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    return eig.eigenvalues()(0);
}

Mat3 diag3(double v) {
    Mat3 m;
    for (int i = 0; i < 3; ++i) m(i, i) = v;
    return m;
}

} // namespace

TEST_CASE("vacuum-like law has eta = 1 at nu = 1") {
    MaterialLaw law = make_isotropic_em({1.0}, {1.0}, {0.0});
    AdmissibilityReport rep = check_evo_positivity(law, 1.0);
    CHECK(rep.eta == Catch::Approx(1.0).margin(1e-14));
    CHECK(rep.admissible);

    for (double nu : {0.25, 1.0, 7.0, 512.0}) CHECK(check_evo_positivity(law, nu).admissible);
}

TEST_CASE("degenerate permittivity with conductivity stays admissible") {
    MaterialLaw law = make_isotropic_em({0.0}, {1.0}, {1.0});
    for (double nu : {0.5, 1.0, 4.0}) {
        AdmissibilityReport rep = check_evo_positivity(law, nu);
        CHECK(rep.admissible);
        CHECK(rep.eta == Catch::Approx(std::min(1.0, nu)).margin(1e-14));
    }
}

TEST_CASE("negative conductivity breaks admissibility with eta = -1") {
    MaterialLaw law = make_isotropic_em({1.0}, {1.0}, {-2.0});
    AdmissibilityReport rep = check_evo_positivity(law, 1.0);
    CHECK(rep.eta == Catch::Approx(-1.0).margin(1e-13));
    CHECK_FALSE(rep.admissible);

    auto scan = find_min_admissible_nu(law);
    REQUIRE(scan.has_value());
    CHECK(scan->nu_used == 4.0);  // first power of two above nu = 2
    CHECK(scan->eta == Catch::Approx(2.0).margin(1e-13));
}

TEST_CASE("admissibility matches the dense oracle on random blocks") {
    std::mt19937_64 rng(301);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const int npts = 1 + static_cast<int>(rng() % 6);
        std::vector<DenseMatrix> m0b, m1b;
        for (int p = 0; p < npts; ++p) {
            DenseMatrix b(2, 2), m1(2, 2);
            const double x = dist(rng), y = dist(rng), z = dist(rng);
            b(0, 0) = x * x + 0.1;
            b(1, 1) = y * y + 0.1;
            b(0, 1) = b(1, 0) = 0.3 * z;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) m1(i, j) = dist(rng);
            m0b.push_back(b);
            m1b.push_back(m1);
        }
        MaterialLaw law(SparseOperator::block_diagonal(m0b), SparseOperator::block_diagonal(m1b));
        const double nu = 0.5 + std::abs(dist(rng));
        AdmissibilityReport rep = check_evo_positivity(law, nu);
        CHECK(rep.eta == Catch::Approx(min_eig_oracle(law, nu)).margin(1e-12));

        // Witness attains the reported quotient.
        std::vector<double> sw(rep.witness.size(), 0.0);
        SparseOperator s = law.m0.scaled(nu) + symmetric_part(law.m1);
        s.apply(rep.witness, sw);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < sw.size(); ++i) {
            num += rep.witness[i] * sw[i];
            den += rep.witness[i] * rep.witness[i];
        }
        CHECK(num / den == Catch::Approx(rep.eta).margin(1e-11));
    }
}

TEST_CASE("non-symmetric M0 is rejected") {
    DenseMatrix m0(2, 2);
    m0(0, 1) = 1.0;
    MaterialLaw law(SparseOperator::block_diagonal({m0}), SparseOperator::zero(2, 2));
    CHECK_THROWS_AS(check_evo_positivity(law, 1.0), Error);
}

TEST_CASE("eta is monotone nondecreasing in nu for nonnegative M0") {
    std::mt19937_64 rng(307);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    DenseMatrix b(3, 3), m1(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            b(i, j) = dist(rng);
            m1(i, j) = dist(rng);
        }
    DenseMatrix m0(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += b(k, i) * b(k, j);
            m0(i, j) = acc;
        }
    MaterialLaw law(SparseOperator::block_diagonal({m0}), SparseOperator::block_diagonal({m1}));
    double prev = -std::numeric_limits<double>::infinity();
    for (double nu = 0.25; nu <= 64.0; nu *= 2.0) {
        const double eta = check_evo_positivity(law, nu).eta;
        CHECK(eta >= prev - 1e-13);
        prev = eta;
    }
}

TEST_CASE("cross-coupled permittivity obeys the norm bound") {
    SECTION("half the bound is accepted") {
        MaterialLaw law = make_bianisotropic({1.0}, {1.0}, {diag3(0.5)});
        CHECK(check_evo_positivity(law, 1.0).admissible);
    }

    SECTION("1.5x the bound is rejected") {
        CHECK_THROWS_AS(make_bianisotropic({1.0}, {1.0}, {diag3(1.5)}), InadmissibleMaterialError);
    }

    SECTION("zero coupling reduces to the isotropic law, entry for entry") {
        MaterialLaw a = make_bianisotropic({2.0, 0.5}, {1.5, 3.0}, {Mat3::zero(), Mat3::zero()});
        MaterialLaw b = make_isotropic_em({2.0, 0.5}, {1.5, 3.0}, {0.0, 0.0});
        CHECK(max_abs_difference(a.m0, b.m0) == 0.0);
        CHECK(max_abs_difference(a.m1, b.m1) == 0.0);
    }

    SECTION("at the bound M0 becomes exactly singular") {
        const double eps = 2.0, mu = 0.5;
        const double bound = std::sqrt(eps * mu);
        MaterialLaw law = make_bianisotropic({eps}, {mu}, {diag3(bound)});
        MinEigResult eig = symmetric_min_eigenvalue(law.m0);
        CHECK(std::abs(eig.value) <= 1e-12);
    }

    SECTION("anisotropic coupling uses the largest singular value") {
        Mat3 kappa;
        kappa(0, 1) = 1.2;  // sigma_max = 1.2 > 1
        CHECK_THROWS_AS(make_bianisotropic({1.0}, {1.0}, {kappa}), InadmissibleMaterialError);
        Mat3 ok;
        ok(0, 1) = 0.9;
        CHECK_NOTHROW(make_bianisotropic({1.0}, {1.0}, {ok}));
    }
}

TEST_CASE("chiral coupling never changes eta") {
    const Mat3 chi = kelvin_to_sym({0.3, -0.2, 0.9, 0.1, 0.4, -0.6});
    MaterialLaw fragment = make_chiral({chi});

    SECTION("the symmetric part vanishes entrywise") {
        SparseOperator sym = symmetric_part(fragment.m1);
        CHECK(sym.max_abs() == 0.0);
    }

    SECTION("scalar coupling: M1 + M1^T = 0 entrywise") {
        MaterialLaw scalar = make_chiral({diag3(1.0)});
        CHECK((scalar.m1 + scalar.m1.transposed()).max_abs() == 0.0);
    }

    SECTION("combined with the vacuum-like law at nu = 2: eta = 2") {
        MaterialLaw base = make_isotropic_em({1.0}, {1.0}, {0.0});
        MaterialLaw law = combine(base, fragment);
        AdmissibilityReport rep = check_evo_positivity(law, 2.0);
        CHECK(rep.eta == Catch::Approx(2.0).margin(1e-13));
        CHECK(rep.eta == check_evo_positivity(base, 2.0).eta);
    }

    SECTION("non-symmetric coupling is rejected") {
        Mat3 bad;
        bad(0, 1) = 1.0;
        CHECK_THROWS_AS(make_chiral({bad}), InadmissibleMaterialError);
    }
}

TEST_CASE("omega coupling is assembled literally and checked") {
    const Mat3 chi = kSqrt2 * axial_to_skew({{0.0, 0.0, 1.0}});
    MaterialLaw fragment = make_omega({chi});
    MaterialLaw base = make_isotropic_em({1.0}, {1.0}, {0.0});
    MaterialLaw law = combine(base, fragment);

    const double nu = 1.5;
    AdmissibilityReport rep = check_evo_positivity(law, nu);
    CHECK(rep.eta == Catch::Approx(min_eig_oracle(law, nu)).margin(1e-12));

    SECTION("zero coupling leaves the law untouched") {
        MaterialLaw zero = make_omega({Mat3::zero()});
        CHECK(zero.m1.max_abs() == 0.0);
        CHECK(check_evo_positivity(combine(base, zero), nu).eta ==
              Catch::Approx(check_evo_positivity(base, nu).eta).margin(1e-15));
    }

    SECTION("scalar (diagonal) coupling is only antisymmetric when zero") {
        CHECK_THROWS_AS(make_omega({diag3(0.7)}), InadmissibleMaterialError);
        CHECK_NOTHROW(make_omega({diag3(0.0)}));
    }
}

TEST_CASE("elastic law inverts the stiffness per point") {
    SECTION("unit stiffness gives the identity law") {
        MaterialLaw law = make_elastic({1.0}, {DenseMatrix::identity(6)});
        AdmissibilityReport rep = check_evo_positivity(law, 1.0);
        CHECK(rep.eta == Catch::Approx(1.0).margin(1e-14));
    }

    SECTION("isotropic stiffness matches the dense inverse oracle") {
        const DenseMatrix c = isotropic_stiffness(1.0, 1.0);
        MaterialLaw law = make_elastic({1.0}, {c});
        DenseMatrix m0 = law.m0.to_dense();
        Eigen::MatrixXd cinv = to_eigen(c).inverse();
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                CHECK(m0(3 + i, 3 + j) == Catch::Approx(cinv(i, j)).margin(1e-13));
    }

    SECTION("singular stiffness is rejected") {
        DenseMatrix c = DenseMatrix::identity(6);
        c(5, 5) = 0.0;
        CHECK_THROWS_AS(make_elastic({1.0}, {c}), InadmissibleMaterialError);
    }

    SECTION("nonpositive density is rejected") {
        CHECK_THROWS_AS(make_elastic({0.0}, {DenseMatrix::identity(6)}), InadmissibleMaterialError);
    }
}

TEST_CASE("per-block minimum agrees with a brute-force solve on a big law") {
    // ~200 unknowns: 22 points of 9-dim elastic blocks.
    std::mt19937_64 rng(311);
    std::uniform_real_distribution<double> dist(0.5, 2.0);
    std::vector<double> rho;
    std::vector<DenseMatrix> cs;
    for (int p = 0; p < 22; ++p) {
        rho.push_back(dist(rng));
        cs.push_back(isotropic_stiffness(dist(rng), dist(rng)));
    }
    MaterialLaw law = make_elastic(rho, cs);
    const double nu = 1.25;
    CHECK(check_evo_positivity(law, nu).eta == Catch::Approx(min_eig_oracle(law, nu)).margin(1e-12));
}
