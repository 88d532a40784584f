#pragma once

// Small dense matrices and the handful of dense factorizations the library
// needs: a cyclic Jacobi eigensolver for symmetric blocks, Cholesky for
// positive-definiteness decisions, Gauss-Jordan inversion, and a
// rank-revealing Gram-Schmidt used to orthonormalize operator ranges.
// Everything here is deterministic: fixed sweep and pivot orders.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "evosim/errors.hpp"

namespace evosim {

class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0) {}

    static DenseMatrix identity(int n) {
        DenseMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double &operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(j)]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(j)]; }

    const std::vector<double> &data() const { return a_; }
    std::vector<double> &data() { return a_; }

    DenseMatrix transposed() const {
        DenseMatrix t(cols_, rows_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : a_) s += v * v;
        return std::sqrt(s);
    }

    friend DenseMatrix operator*(const DenseMatrix &a, const DenseMatrix &b) {
        if (a.cols_ != b.rows_) throw DimensionError("dense multiply: inner dimensions differ");
        DenseMatrix c(a.rows_, b.cols_);
        for (int i = 0; i < a.rows_; ++i)
            for (int k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (int j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    friend DenseMatrix operator+(const DenseMatrix &a, const DenseMatrix &b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw DimensionError("dense add: shapes differ");
        DenseMatrix c = a;
        for (std::size_t i = 0; i < c.a_.size(); ++i) c.a_[i] += b.a_[i];
        return c;
    }

    friend DenseMatrix operator*(double s, const DenseMatrix &a) {
        DenseMatrix c = a;
        for (double &v : c.a_) v *= s;
        return c;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

struct SymmetricEigen {
    std::vector<double> values;  // ascending
    DenseMatrix vectors;         // column k pairs with values[k]
};

/// Cyclic Jacobi iteration for a symmetric matrix. The input is symmetrized
/// explicitly so 1-ulp asymmetries cannot steer the rotations.
inline SymmetricEigen jacobi_eigen(const DenseMatrix &s_in) {
    if (s_in.rows() != s_in.cols()) throw DimensionError("jacobi_eigen: matrix not square");
    const int n = s_in.rows();
    DenseMatrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = 0.5 * (s_in(i, j) + s_in(j, i));
    DenseMatrix v = DenseMatrix::identity(n);

    auto offdiag = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    const double scale = std::max(a.frobenius_norm(), 1e-300);
    for (int sweep = 0; sweep < 64 && offdiag() > 1e-15 * scale; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-18 * scale) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) < a(y, y); });

    SymmetricEigen out;
    out.values.resize(static_cast<std::size_t>(n));
    out.vectors = DenseMatrix(n, n);
    for (int k = 0; k < n; ++k) {
        const int src = order[static_cast<std::size_t>(k)];
        out.values[static_cast<std::size_t>(k)] = a(src, src);
        for (int i = 0; i < n; ++i) out.vectors(i, k) = v(i, src);
    }
    return out;
}

/// Lower-triangular Cholesky factor, or nullopt if the matrix is not
/// positive definite (pivot <= tol * diagonal scale).
inline std::optional<DenseMatrix> cholesky(const DenseMatrix &s, double rel_tol = 1e-13) {
    if (s.rows() != s.cols()) throw DimensionError("cholesky: matrix not square");
    const int n = s.rows();
    double dmax = 0.0;
    for (int i = 0; i < n; ++i) dmax = std::max(dmax, std::abs(s(i, i)));
    DenseMatrix l(n, n);
    for (int j = 0; j < n; ++j) {
        double d = s(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= rel_tol * dmax) return std::nullopt;
        l(j, j) = std::sqrt(d);
        for (int i = j + 1; i < n; ++i) {
            double x = s(i, j);
            for (int k = 0; k < j; ++k) x -= l(i, k) * l(j, k);
            l(i, j) = x / l(j, j);
        }
    }
    return l;
}

/// Gauss-Jordan inverse with partial pivoting.
inline DenseMatrix invert(const DenseMatrix &m_in) {
    if (m_in.rows() != m_in.cols()) throw DimensionError("invert: matrix not square");
    const int n = m_in.rows();
    DenseMatrix a = m_in;
    DenseMatrix inv = DenseMatrix::identity(n);
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (a(piv, col) == 0.0) throw Error("invert: singular matrix");
        if (piv != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(a(col, j), a(piv, j));
                std::swap(inv(col, j), inv(piv, j));
            }
        }
        const double d = a(col, col);
        for (int j = 0; j < n; ++j) {
            a(col, j) /= d;
            inv(col, j) /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                a(r, j) -= f * a(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

/// Orthonormal basis of the column space. Columns are visited largest
/// remaining norm first; columns falling below threshold * |B|_F are
/// treated as dependent. Returns an n x r matrix with orthonormal columns.
inline DenseMatrix range_basis_gram_schmidt(const DenseMatrix &b, double threshold = 1e-10) {
    const int n = b.rows(), m = b.cols();
    const double scale = std::max(b.frobenius_norm(), 1e-300);
    std::vector<std::vector<double>> cols;
    for (int j = 0; j < m; ++j) {
        std::vector<double> c(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] = b(i, j);
        cols.push_back(std::move(c));
    }
    std::vector<std::vector<double>> basis;

    auto nrm = [&](const std::vector<double> &x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return std::sqrt(s);
    };

    std::vector<bool> used(static_cast<std::size_t>(m), false);
    for (int step = 0; step < m; ++step) {
        int best = -1;
        double best_norm = threshold * scale;
        for (int j = 0; j < m; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            const double nj = nrm(cols[static_cast<std::size_t>(j)]);
            if (nj > best_norm) {
                best_norm = nj;
                best = j;
            }
        }
        if (best < 0) break;
        used[static_cast<std::size_t>(best)] = true;
        std::vector<double> q = cols[static_cast<std::size_t>(best)];
        // Two rounds of re-orthogonalization keep the basis orthonormal to
        // working precision even for graded columns.
        for (int round = 0; round < 2; ++round) {
            for (const auto &e : basis) {
                double proj = 0.0;
                for (int i = 0; i < n; ++i) proj += q[static_cast<std::size_t>(i)] * e[static_cast<std::size_t>(i)];
                for (int i = 0; i < n; ++i) q[static_cast<std::size_t>(i)] -= proj * e[static_cast<std::size_t>(i)];
            }
        }
        const double qn = nrm(q);
        if (qn <= threshold * scale) continue;
        for (double &v : q) v /= qn;
        basis.push_back(std::move(q));
        for (int j = 0; j < m; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            auto &c = cols[static_cast<std::size_t>(j)];
            double proj = 0.0;
            for (int i = 0; i < n; ++i) proj += c[static_cast<std::size_t>(i)] * basis.back()[static_cast<std::size_t>(i)];
            for (int i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] -= proj * basis.back()[static_cast<std::size_t>(i)];
        }
    }

    DenseMatrix q(n, static_cast<int>(basis.size()));
    for (int j = 0; j < q.cols(); ++j)
        for (int i = 0; i < n; ++i) q(i, j) = basis[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    return q;
}

/// S^{-1/2} for symmetric positive definite S, via the eigendecomposition.
inline DenseMatrix sym_inverse_sqrt(const DenseMatrix &s) {
    SymmetricEigen eig = jacobi_eigen(s);
    const int n = s.rows();
    if (eig.values.front() <= 0.0) throw Error("sym_inverse_sqrt: matrix not positive definite");
    DenseMatrix r(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k)
                acc += eig.vectors(i, k) * eig.vectors(j, k) / std::sqrt(eig.values[static_cast<std::size_t>(k)]);
            r(i, j) = acc;
        }
    return r;
}

} // namespace evosim
