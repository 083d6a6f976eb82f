#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "asymexp/errors.hpp"

namespace asymexp {

// Eigendecomposition of a real symmetric matrix. values are sorted
// ascending; column j of vectors (row-major n x n) is the eigenvector for
// values[j] when hasVectors is set.
struct SymmetricEigen {
    int n = 0;
    std::vector<double> values;
    std::vector<double> vectors;
    bool hasVectors = false;
};

namespace detail {

// One cyclic sweep of Jacobi rotations over the strict upper triangle in
// row-major order. Returns the off-diagonal Frobenius mass after the sweep.
inline double jacobi_sweep(std::vector<double>& a, int n, std::vector<double>* q) {
    for (int p = 0; p < n - 1; ++p) {
        for (int r = p + 1; r < n; ++r) {
            const double apr = a[static_cast<std::size_t>(p) * n + r];
            if (apr == 0.0) continue;
            const double app = a[static_cast<std::size_t>(p) * n + p];
            const double arr = a[static_cast<std::size_t>(r) * n + r];
            const double theta = (arr - app) / (2.0 * apr);
            const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                             (std::abs(theta) + std::sqrt(theta * theta + 1.0));
            const double c = 1.0 / std::sqrt(t * t + 1.0);
            const double s = t * c;
            for (int k = 0; k < n; ++k) {
                const std::size_t kp = static_cast<std::size_t>(k) * n + p;
                const std::size_t kr = static_cast<std::size_t>(k) * n + r;
                const double akp = a[kp];
                const double akr = a[kr];
                a[kp] = c * akp - s * akr;
                a[kr] = s * akp + c * akr;
            }
            for (int k = 0; k < n; ++k) {
                const std::size_t pk = static_cast<std::size_t>(p) * n + k;
                const std::size_t rk = static_cast<std::size_t>(r) * n + k;
                const double apk = a[pk];
                const double ark = a[rk];
                a[pk] = c * apk - s * ark;
                a[rk] = s * apk + c * ark;
            }
            if (q) {
                std::vector<double>& qq = *q;
                for (int k = 0; k < n; ++k) {
                    const std::size_t kp = static_cast<std::size_t>(k) * n + p;
                    const std::size_t kr = static_cast<std::size_t>(k) * n + r;
                    const double qkp = qq[kp];
                    const double qkr = qq[kr];
                    qq[kp] = c * qkp - s * qkr;
                    qq[kr] = s * qkp + c * qkr;
                }
            }
        }
    }
    double off = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double v = a[static_cast<std::size_t>(i) * n + j];
            off += 2.0 * v * v;
        }
    }
    return off;
}

}  // namespace detail

// Cyclic Jacobi eigensolver: deterministic sweep order, no randomization.
// Converges when the off-diagonal Frobenius mass drops below
// 1e-13 * ||A||_F. Input is row-major and must be symmetric.
inline SymmetricEigen symmetric_eigen(std::vector<double> a, int n, bool wantVectors) {
    if (n < 0 || a.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
        throw InvalidArgument("symmetric_eigen: matrix size mismatch");
    }
    SymmetricEigen out;
    out.n = n;
    out.hasVectors = wantVectors;
    if (n == 0) return out;

    double fro2 = 0.0;
    for (double v : a) fro2 += v * v;
    const double fro = std::sqrt(fro2);
    const double target = 1e-13 * fro;

    std::vector<double> q;
    if (wantVectors) {
        q.assign(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i) q[static_cast<std::size_t>(i) * n + i] = 1.0;
    }

    if (fro > 0.0) {
        const double target2 = target * target;
        bool converged = false;
        constexpr int kMaxSweeps = 64;
        for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
            const double off2 = detail::jacobi_sweep(a, n, wantVectors ? &q : nullptr);
            if (off2 <= target2) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            throw Error("EigenNoConvergence", "symmetric_eigen: Jacobi did not converge");
        }
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
        const double vi = a[static_cast<std::size_t>(i) * n + i];
        const double vj = a[static_cast<std::size_t>(j) * n + j];
        if (vi != vj) return vi < vj;
        return i < j;
    });

    out.values.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        out.values[static_cast<std::size_t>(j)] = a[static_cast<std::size_t>(order[j]) * n + order[j]];
    }
    if (wantVectors) {
        out.vectors.assign(static_cast<std::size_t>(n) * n, 0.0);
        for (int j = 0; j < n; ++j) {
            const int src = order[static_cast<std::size_t>(j)];
            for (int i = 0; i < n; ++i) {
                out.vectors[static_cast<std::size_t>(i) * n + j] = q[static_cast<std::size_t>(i) * n + src];
            }
        }
    }
    return out;
}

// Largest singular value of a dense rows x cols matrix (row-major), via a
// symmetric eigensolve of the smaller Gram matrix. Zero rows/cols cost
// nothing extra: Jacobi skips exact-zero pivots.
inline double largest_singular_value(const double* a, int rows, int cols) {
    if (rows <= 0 || cols <= 0) return 0.0;
    const bool gramLeft = rows <= cols;  // G = A A^T (rows x rows) or A^T A
    const int m = gramLeft ? rows : cols;
    std::vector<double> g(static_cast<std::size_t>(m) * m, 0.0);
    if (gramLeft) {
        for (int i = 0; i < rows; ++i) {
            for (int j = i; j < rows; ++j) {
                double acc = 0.0;
                const double* ri = a + static_cast<std::size_t>(i) * cols;
                const double* rj = a + static_cast<std::size_t>(j) * cols;
                for (int k = 0; k < cols; ++k) acc += ri[k] * rj[k];
                g[static_cast<std::size_t>(i) * m + j] = acc;
                g[static_cast<std::size_t>(j) * m + i] = acc;
            }
        }
    } else {
        for (int i = 0; i < rows; ++i) {
            const double* ri = a + static_cast<std::size_t>(i) * cols;
            for (int p = 0; p < cols; ++p) {
                const double v = ri[p];
                if (v == 0.0) continue;
                for (int r = p; r < cols; ++r) {
                    g[static_cast<std::size_t>(p) * m + r] += v * ri[r];
                }
            }
        }
        for (int p = 0; p < cols; ++p) {
            for (int r = p + 1; r < cols; ++r) {
                g[static_cast<std::size_t>(r) * m + p] = g[static_cast<std::size_t>(p) * m + r];
            }
        }
    }
    const SymmetricEigen eig = symmetric_eigen(std::move(g), m, false);
    const double lambdaMax = eig.values.empty() ? 0.0 : eig.values.back();
    return lambdaMax > 0.0 ? std::sqrt(lambdaMax) : 0.0;
}

}  // namespace asymexp
