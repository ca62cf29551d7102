#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace psp {

// Small dense row-major matrix; dimensions in this project are 2..4.
struct Mat {
    int n = 0, m = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int rows, int cols) : n(rows), m(cols), a(static_cast<std::size_t>(rows * cols), 0.0) {}

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r * m + c)]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r * m + c)]; }

    static Mat identity(int k) {
        Mat out(k, k);
        for (int i = 0; i < k; i++) out(i, i) = 1.0;
        return out;
    }
};

inline bool is_symmetric(const Mat& s, double tol) {
    for (int i = 0; i < s.n; i++) {
        for (int j = i + 1; j < s.m; j++) {
            double scale = 1.0 + std::abs(s(i, j)) + std::abs(s(j, i));
            if (std::abs(s(i, j) - s(j, i)) > tol * scale) return false;
        }
    }
    return true;
}

// Lower-triangular factor L with L*L^T ~= S for symmetric positive
// SEMIdefinite S: zero pivots are tolerated (the column is zeroed).
// Returns false if S is indefinite beyond tolerance.
inline bool cholesky_psd(const Mat& s, Mat& lower, double tol = 1e-9) {
    int k = s.n;
    lower = Mat(k, k);
    double scale = 0.0;
    for (int i = 0; i < k; i++) scale = std::max(scale, std::abs(s(i, i)));
    double eps = tol * (scale > 0 ? scale : 1.0);
    for (int j = 0; j < k; j++) {
        double d = s(j, j);
        for (int t = 0; t < j; t++) d -= lower(j, t) * lower(j, t);
        if (d < -eps) return false;
        if (d <= eps) {
            // semidefinite direction: leave the column at zero
            continue;
        }
        double root = std::sqrt(d);
        lower(j, j) = root;
        for (int i = j + 1; i < k; i++) {
            double v = s(i, j);
            for (int t = 0; t < j; t++) v -= lower(i, t) * lower(j, t);
            lower(i, j) = v / root;
        }
    }
    return true;
}

// Solves A x = b in place via Gaussian elimination with partial pivoting;
// returns false on a (near-)singular system.
inline bool solve_linear(Mat a, std::vector<double> b, std::vector<double>& x) {
    int k = a.n;
    std::vector<int> perm(static_cast<std::size_t>(k));
    for (int i = 0; i < k; i++) perm[static_cast<std::size_t>(i)] = i;
    for (int col = 0; col < k; col++) {
        int pivot = col;
        for (int r = col + 1; r < k; r++) {
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        }
        if (std::abs(a(pivot, col)) < 1e-300) return false;
        if (pivot != col) {
            for (int c = 0; c < k; c++) std::swap(a(pivot, c), a(col, c));
            std::swap(b[static_cast<std::size_t>(pivot)], b[static_cast<std::size_t>(col)]);
        }
        for (int r = col + 1; r < k; r++) {
            double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (int c = col; c < k; c++) a(r, c) -= f * a(col, c);
            b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
        }
    }
    x.assign(static_cast<std::size_t>(k), 0.0);
    for (int r = k - 1; r >= 0; r--) {
        double v = b[static_cast<std::size_t>(r)];
        for (int c = r + 1; c < k; c++) v -= a(r, c) * x[static_cast<std::size_t>(c)];
        x[static_cast<std::size_t>(r)] = v / a(r, r);
    }
    return true;
}

// Inverse via column-by-column solves; only used on tiny SPD matrices.
inline bool invert(const Mat& a, Mat& out) {
    int k = a.n;
    out = Mat(k, k);
    for (int c = 0; c < k; c++) {
        std::vector<double> e(static_cast<std::size_t>(k), 0.0);
        e[static_cast<std::size_t>(c)] = 1.0;
        std::vector<double> x;
        if (!solve_linear(a, e, x)) return false;
        for (int r = 0; r < k; r++) out(r, c) = x[static_cast<std::size_t>(r)];
    }
    return true;
}

} // namespace psp
