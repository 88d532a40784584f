#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <random>

#include "evosim/dense.hpp"

using namespace evosim;

namespace {

DenseMatrix random_dense(std::mt19937_64 &rng, int rows, int cols) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    DenseMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

Eigen::MatrixXd to_eigen(const DenseMatrix &m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return e;
}

} // namespace

TEST_CASE("jacobi eigenvalues agree with the dense oracle") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 8);
        DenseMatrix a = random_dense(rng, n, n);
        DenseMatrix s(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));

        SymmetricEigen mine = jacobi_eigen(s);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(to_eigen(s));
        REQUIRE(oracle.info() == Eigen::Success);
        for (int k = 0; k < n; ++k)
            CHECK(mine.values[static_cast<std::size_t>(k)] == Catch::Approx(oracle.eigenvalues()(k)).margin(1e-12));

        // Residual check of the reported eigenpairs.
        for (int k = 0; k < n; ++k) {
            double res = 0.0;
            for (int i = 0; i < n; ++i) {
                double sv = 0.0;
                for (int j = 0; j < n; ++j) sv += s(i, j) * mine.vectors(j, k);
                res = std::max(res, std::abs(sv - mine.values[static_cast<std::size_t>(k)] * mine.vectors(i, k)));
            }
            CHECK(res <= 1e-12 * (1.0 + std::abs(mine.values[static_cast<std::size_t>(k)])));
        }
    }
}

TEST_CASE("cholesky accepts SPD and rejects indefinite matrices") {
    std::mt19937_64 rng(103);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 6);
        DenseMatrix b = random_dense(rng, n, n);
        DenseMatrix spd(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int k = 0; k < n; ++k) acc += b(k, i) * b(k, j);
                spd(i, j) = acc + (i == j ? 0.5 : 0.0);
            }
        CHECK(cholesky(spd).has_value());

        DenseMatrix indef = spd;
        indef(0, 0) = -1.0;
        CHECK_FALSE(cholesky(indef).has_value());
    }
}

TEST_CASE("invert matches the oracle") {
    std::mt19937_64 rng(107);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 6);
        DenseMatrix a = random_dense(rng, n, n);
        for (int i = 0; i < n; ++i) a(i, i) += 3.0;  // keep well conditioned
        DenseMatrix inv = invert(a);
        Eigen::MatrixXd oracle = to_eigen(a).inverse();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) CHECK(inv(i, j) == Catch::Approx(oracle(i, j)).margin(1e-12));
    }
}

TEST_CASE("range basis spans the column space at the requested rank") {
    std::mt19937_64 rng(109);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 6, r = 1 + static_cast<int>(rng() % 4);
        // Build a rank-r matrix with 2r columns.
        DenseMatrix left = random_dense(rng, n, r);
        DenseMatrix mix = random_dense(rng, r, 2 * r);
        DenseMatrix b = left * mix;

        DenseMatrix q = range_basis_gram_schmidt(b);
        CHECK(q.cols() == r);

        // Orthonormal columns.
        for (int i = 0; i < q.cols(); ++i)
            for (int j = 0; j < q.cols(); ++j) {
                double d = 0.0;
                for (int k = 0; k < n; ++k) d += q(k, i) * q(k, j);
                CHECK(d == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-12));
            }

        // Every column of b is reproduced by its projection onto the basis.
        for (int c = 0; c < b.cols(); ++c) {
            std::vector<double> col(static_cast<std::size_t>(n)), proj(static_cast<std::size_t>(n), 0.0);
            for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = b(i, c);
            for (int k = 0; k < q.cols(); ++k) {
                double d = 0.0;
                for (int i = 0; i < n; ++i) d += q(i, k) * col[static_cast<std::size_t>(i)];
                for (int i = 0; i < n; ++i) proj[static_cast<std::size_t>(i)] += d * q(i, k);
            }
            for (int i = 0; i < n; ++i)
                CHECK(proj[static_cast<std::size_t>(i)] == Catch::Approx(col[static_cast<std::size_t>(i)]).margin(1e-10));
        }
    }
}

TEST_CASE("symmetric inverse square root") {
    std::mt19937_64 rng(113);
    DenseMatrix b = random_dense(rng, 5, 5);
    DenseMatrix spd(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 5; ++k) acc += b(k, i) * b(k, j);
            spd(i, j) = acc + (i == j ? 1.0 : 0.0);
        }
    DenseMatrix r = sym_inverse_sqrt(spd);
    DenseMatrix should_be_identity = r * spd * r;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(should_be_identity(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-12));
}
