#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "evosim/algebra.hpp"

using namespace evosim;

namespace {

Mat3 random_mat3(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Mat3 w;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) w(i, j) = dist(rng);
    return w;
}

Vec3 random_vec3(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    return {{dist(rng), dist(rng), dist(rng)}};
}

} // namespace

TEST_CASE("sym_part fixed points and images") {
    CHECK(frobenius_norm(sym_part(Mat3::identity()) - Mat3::identity()) == 0.0);

    Mat3 w;
    w(0, 1) = 2.0;
    const Mat3 s = sym_part(w);
    CHECK(s(0, 1) == 1.0);
    CHECK(s(1, 0) == 1.0);
    CHECK(s(0, 0) == 0.0);
    CHECK(s(2, 2) == 0.0);

    const Mat3 skew = axial_to_skew({{0.3, -0.7, 1.1}});
    CHECK(frobenius_norm(sym_part(skew)) == 0.0);
}

TEST_CASE("skew_part and exact reconstruction") {
    const Mat3 s = kelvin_to_sym({1.0, 2.0, 3.0, 0.5, -0.25, 4.0});
    CHECK(frobenius_norm(skew_part(s)) == 0.0);

    Mat3 w;
    w(0, 1) = 2.0;
    const Mat3 k = skew_part(w);
    CHECK(k(0, 1) == 1.0);
    CHECK(k(1, 0) == -1.0);

    // Bitwise reconstruction on a dyadic lattice, where the halves of sums
    // and differences are exactly representable.
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> lattice(-1024, 1024);
    for (int trial = 0; trial < 50; ++trial) {
        Mat3 m;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m(i, j) = lattice(rng) / 1024.0;
        const Mat3 back = sym_part(m) + skew_part(m);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(back(i, j) == m(i, j));
    }

    // General doubles reconstruct to a unit of rounding.
    for (int trial = 0; trial < 50; ++trial) {
        const Mat3 m = random_mat3(rng);
        const Mat3 back = sym_part(m) + skew_part(m);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(back(i, j) == Catch::Approx(m(i, j)).epsilon(4e-16).margin(1e-300));
    }
}

TEST_CASE("projections are idempotent") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat3 m = random_mat3(rng);
        const Mat3 s = sym_part(m);
        const Mat3 k = skew_part(m);
        CHECK(frobenius_norm(sym_part(s) - s) == 0.0);
        CHECK(frobenius_norm(skew_part(k) - k) == 0.0);
    }
}

TEST_CASE("frobenius inner product") {
    CHECK(frobenius(Mat3::identity(), Mat3::identity()) == 3.0);

    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const Mat3 w = random_mat3(rng);
        const Mat3 v = random_mat3(rng);
        const double ortho = frobenius(sym_part(w), skew_part(v));
        CHECK(std::abs(ortho) <= 1e-14 * frobenius_norm(w) * frobenius_norm(v));

        // Direct 9-term sum through the vectorization.
        const Vec9 a = vec9(w), b = vec9(v);
        double dot9 = 0.0;
        for (int q = 0; q < 9; ++q) dot9 += a[q] * b[q];
        CHECK(std::abs(frobenius(w, v) - dot9) <= 1e-15 * std::abs(dot9) + 1e-16);
    }
}

TEST_CASE("vec9 slot order and round trip") {
    Mat3 t;
    t(0, 1) = 5.0;
    const Vec9 x = vec9(t);
    for (int q = 0; q < 9; ++q) CHECK(x[q] == (q == 5 ? 5.0 : 0.0));

    const Vec9 zero = vec9(Mat3::zero());
    for (int q = 0; q < 9; ++q) CHECK(zero[q] == 0.0);

    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const Mat3 m = random_mat3(rng);
        const Mat3 back = mat3(vec9(m));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(back(i, j) == m(i, j));

        double n9 = 0.0;
        const Vec9 v = vec9(m);
        for (int q = 0; q < 9; ++q) n9 += v[q] * v[q];
        CHECK(std::sqrt(n9) == Catch::Approx(frobenius_norm(m)).epsilon(1e-15));
    }
}

TEST_CASE("axial map matches its closed form") {
    const Mat3 s = axial_to_skew({{1.0, 0.0, 0.0}});
    CHECK(s(0, 0) == 0.0);
    CHECK(s(0, 1) == 0.0);
    CHECK(s(0, 2) == 0.0);
    CHECK(s(1, 2) == -kInvSqrt2);
    CHECK(s(2, 1) == kInvSqrt2);

    CHECK(frobenius_norm(axial_to_skew({{0.0, 0.0, 0.0}})) == 0.0);

    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 a = random_vec3(rng);
        CHECK(frobenius_norm(axial_to_skew(a)) == Catch::Approx(norm(a)).epsilon(1e-15));
    }
}

TEST_CASE("axial inverse and rejection of non-skew input") {
    Mat3 s;
    s(1, 2) = -kInvSqrt2;
    s(2, 1) = kInvSqrt2;
    const Vec3 a = skew_to_axial(s);
    CHECK(a[0] == Catch::Approx(1.0).epsilon(1e-15));
    CHECK(a[1] == 0.0);
    CHECK(a[2] == 0.0);

    const Vec3 z = skew_to_axial(Mat3::zero());
    CHECK(norm(z) == 0.0);

    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 v = random_vec3(rng);
        const Vec3 back = skew_to_axial(axial_to_skew(v));
        for (int i = 0; i < 3; ++i) CHECK(back[i] == Catch::Approx(v[i]).margin(1e-16));
    }

    CHECK_THROWS_AS(skew_to_axial(Mat3::identity()), std::invalid_argument);
    Mat3 nearly = axial_to_skew({{1.0, 2.0, 3.0}});
    nearly(0, 1) += 1e-3;
    CHECK_THROWS_AS(skew_to_axial(nearly), std::invalid_argument);
}

TEST_CASE("axial map is compatible with the cross product") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec3 a = random_vec3(rng);
        const Vec3 b = random_vec3(rng);
        const Vec3 lhs = kSqrt2 * (axial_to_skew(a) * b);
        const Vec3 rhs = cross(a, b);
        CHECK(norm(lhs - rhs) <= 1e-14 * (norm(a) * norm(b) + 1e-30));
    }
}

TEST_CASE("kelvin coordinates are an isometry on symmetric matrices") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const Mat3 s = sym_part(random_mat3(rng));
        const Vec6 k = sym_to_kelvin(s);
        double n6 = 0.0;
        for (double v : k) n6 += v * v;
        CHECK(std::sqrt(n6) == Catch::Approx(frobenius_norm(s)).epsilon(1e-14));
        const Mat3 back = kelvin_to_sym(k);
        CHECK(frobenius_norm(back - s) <= 1e-15 * frobenius_norm(s));
    }
}
