#pragma once

// Exact 3x3 matrix algebra: symmetric/antisymmetric projections, the
// Frobenius inner product, the unitary R^{3x3} <-> R^9 vectorization and
// the axial-vector identification of R^3 with antisymmetric matrices.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace evosim {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kInvSqrt2 = std::numbers::sqrt2 / 2.0;

struct Vec3 {
    std::array<double, 3> v{};

    double &operator[](int i) { return v[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
};

struct Mat3 {
    // m[row][col]
    std::array<std::array<double, 3>, 3> m{};

    double &operator()(int r, int c) { return m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]; }
    double operator()(int r, int c) const { return m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]; }

    static Mat3 identity() {
        Mat3 a;
        a(0, 0) = a(1, 1) = a(2, 2) = 1.0;
        return a;
    }
    static Mat3 zero() { return Mat3{}; }
};

/// 9-component vectorization of a 3x3 matrix in the fixed slot order
/// (T00, T11, T22, T12, T20, T01, T21, T02, T10).
struct Vec9 {
    std::array<double, 9> c{};

    double &operator[](int i) { return c[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
};

// Row/column of each Vec9 slot. Slots 3..5 and 6..8 are transpose partners:
// slot 3+k pairs with slot 6+k.
inline constexpr std::array<int, 9> kVec9Row = {0, 1, 2, 1, 2, 0, 2, 0, 1};
inline constexpr std::array<int, 9> kVec9Col = {0, 1, 2, 2, 0, 1, 1, 2, 0};

inline Vec3 operator+(const Vec3 &a, const Vec3 &b) { return {{a[0] + b[0], a[1] + b[1], a[2] + b[2]}}; }
inline Vec3 operator-(const Vec3 &a, const Vec3 &b) { return {{a[0] - b[0], a[1] - b[1], a[2] - b[2]}}; }
inline Vec3 operator*(double s, const Vec3 &a) { return {{s * a[0], s * a[1], s * a[2]}}; }
inline double dot(const Vec3 &a, const Vec3 &b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3 &a) { return std::sqrt(dot(a, a)); }

inline Vec3 cross(const Vec3 &a, const Vec3 &b) {
    return {{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]}};
}

inline Mat3 operator+(const Mat3 &a, const Mat3 &b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = a(i, j) + b(i, j);
    return r;
}

inline Mat3 operator-(const Mat3 &a, const Mat3 &b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = a(i, j) - b(i, j);
    return r;
}

inline Mat3 operator*(double s, const Mat3 &a) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = s * a(i, j);
    return r;
}

inline Vec3 operator*(const Mat3 &a, const Vec3 &x) {
    Vec3 y;
    for (int i = 0; i < 3; ++i) y[i] = a(i, 0) * x[0] + a(i, 1) * x[1] + a(i, 2) * x[2];
    return y;
}

inline Mat3 transpose(const Mat3 &a) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = a(j, i);
    return r;
}

/// W -> (W + W^T)/2. Idempotent; kernel is the antisymmetric part.
inline Mat3 sym_part(const Mat3 &w) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = 0.5 * (w(i, j) + w(j, i));
    return r;
}

/// W -> (W - W^T)/2. sym_part(W) + skew_part(W) reconstructs W exactly.
inline Mat3 skew_part(const Mat3 &w) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = 0.5 * (w(i, j) - w(j, i));
    return r;
}

/// trace(T^T S); agrees with the Euclidean dot of the Vec9 images.
inline double frobenius(const Mat3 &t, const Mat3 &s) {
    double acc = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) acc += t(i, j) * s(i, j);
    return acc;
}

inline double frobenius_norm(const Mat3 &t) { return std::sqrt(frobenius(t, t)); }

inline Vec9 vec9(const Mat3 &t) {
    Vec9 x;
    for (int q = 0; q < 9; ++q) x[q] = t(kVec9Row[static_cast<std::size_t>(q)], kVec9Col[static_cast<std::size_t>(q)]);
    return x;
}

inline Mat3 mat3(const Vec9 &x) {
    Mat3 t;
    for (int q = 0; q < 9; ++q) t(kVec9Row[static_cast<std::size_t>(q)], kVec9Col[static_cast<std::size_t>(q)]) = x[q];
    return t;
}

/// The unitary map I taking an axial vector to an antisymmetric matrix,
/// alpha -> (1/sqrt2) [[0,-a2,a1],[a2,0,-a0],[-a1,a0,0]].
inline Mat3 axial_to_skew(const Vec3 &alpha) {
    Mat3 s;
    s(0, 1) = -kInvSqrt2 * alpha[2];
    s(0, 2) = kInvSqrt2 * alpha[1];
    s(1, 0) = kInvSqrt2 * alpha[2];
    s(1, 2) = -kInvSqrt2 * alpha[0];
    s(2, 0) = -kInvSqrt2 * alpha[1];
    s(2, 1) = kInvSqrt2 * alpha[0];
    return s;
}

/// Inverse of axial_to_skew. Rejects matrices that are not antisymmetric
/// within 1e-12 * |S|_F: a non-skew argument means the caller forgot to
/// project, which would otherwise hide assembly bugs.
inline Vec3 skew_to_axial(const Mat3 &s) {
    const double scale = frobenius_norm(s);
    double dev = 0.0;
    dev = std::max(dev, std::abs(s(0, 0)));
    dev = std::max(dev, std::abs(s(1, 1)));
    dev = std::max(dev, std::abs(s(2, 2)));
    dev = std::max(dev, std::abs(s(0, 1) + s(1, 0)));
    dev = std::max(dev, std::abs(s(0, 2) + s(2, 0)));
    dev = std::max(dev, std::abs(s(1, 2) + s(2, 1)));
    if (dev > 1e-12 * scale)
        throw std::invalid_argument("skew_to_axial: matrix is not antisymmetric within tolerance");
    return {{kSqrt2 * s(2, 1), kSqrt2 * s(0, 2), kSqrt2 * s(1, 0)}};
}

/// Symmetric part in the 6 orthonormal (Kelvin) coordinates
/// (T00, T11, T22, sqrt2*T12, sqrt2*T20, sqrt2*T01); the embedding back into
/// Vec9 splits each scaled off-diagonal across its two slots with weight
/// 1/sqrt2, so the coordinates are an isometry onto symmetric matrices.
using Vec6 = std::array<double, 6>;

inline Vec6 sym_to_kelvin(const Mat3 &t) {
    return {t(0, 0), t(1, 1), t(2, 2),
            kInvSqrt2 * (t(1, 2) + t(2, 1)),
            kInvSqrt2 * (t(2, 0) + t(0, 2)),
            kInvSqrt2 * (t(0, 1) + t(1, 0))};
}

inline Mat3 kelvin_to_sym(const Vec6 &k) {
    Mat3 t;
    t(0, 0) = k[0];
    t(1, 1) = k[1];
    t(2, 2) = k[2];
    t(1, 2) = t(2, 1) = kInvSqrt2 * k[3];
    t(2, 0) = t(0, 2) = kInvSqrt2 * k[4];
    t(0, 1) = t(1, 0) = kInvSqrt2 * k[5];
    return t;
}

} // namespace evosim
