#pragma once

#include <array>
#include <cmath>
#include <utility>

// Fixed-size n=2 tensor algebra used throughout. Index convention follows the
// coordinate component ordering; all tensors are plain value types.

namespace ffl {

struct Vec2 {
    double c[2]{0.0, 0.0};

    Vec2() = default;
    Vec2(double a, double b) : c{a, b} {}
    double& operator[](int i) { return c[i]; }
    double operator[](int i) const { return c[i]; }
};

inline Vec2 operator+(const Vec2& a, const Vec2& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Vec2 operator-(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Vec2 operator*(double s, const Vec2& a) { return {s * a[0], s * a[1]}; }
inline Vec2 operator*(const Vec2& a, double s) { return s * a; }
inline Vec2 operator/(const Vec2& a, double s) { return {a[0] / s, a[1] / s}; }
inline Vec2 operator-(const Vec2& a) { return {-a[0], -a[1]}; }
inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm2(const Vec2& a) { return std::sqrt(dot(a, a)); }

struct Mat2 {
    double m[2][2]{{0.0, 0.0}, {0.0, 0.0}};

    Mat2() = default;
    Mat2(double a00, double a01, double a10, double a11) : m{{a00, a01}, {a10, a11}} {}
    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static Mat2 diag(double a, double b) { return {a, 0.0, 0.0, b}; }
    double& operator()(int i, int j) { return m[i][j]; }
    double operator()(int i, int j) const { return m[i][j]; }
};

inline Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {a(0, 0) + b(0, 0), a(0, 1) + b(0, 1), a(1, 0) + b(1, 0), a(1, 1) + b(1, 1)};
}
inline Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {a(0, 0) - b(0, 0), a(0, 1) - b(0, 1), a(1, 0) - b(1, 0), a(1, 1) - b(1, 1)};
}
inline Mat2 operator*(double s, const Mat2& a) {
    return {s * a(0, 0), s * a(0, 1), s * a(1, 0), s * a(1, 1)};
}
inline Mat2 operator*(const Mat2& a, const Mat2& b) {
    Mat2 r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j);
    return r;
}
inline Vec2 operator*(const Mat2& a, const Vec2& v) {
    return {a(0, 0) * v[0] + a(0, 1) * v[1], a(1, 0) * v[0] + a(1, 1) * v[1]};
}
inline double det(const Mat2& a) { return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0); }
inline double trace(const Mat2& a) { return a(0, 0) + a(1, 1); }
inline Mat2 inverse(const Mat2& a) {
    double d = det(a);
    return {a(1, 1) / d, -a(0, 1) / d, -a(1, 0) / d, a(0, 0) / d};
}
inline Mat2 transpose(const Mat2& a) { return {a(0, 0), a(1, 0), a(0, 1), a(1, 1)}; }
inline double quad_form(const Mat2& a, const Vec2& u, const Vec2& v) {
    return u[0] * (a(0, 0) * v[0] + a(0, 1) * v[1]) + u[1] * (a(1, 0) * v[0] + a(1, 1) * v[1]);
}
inline double max_abs(const Mat2& a) {
    double r = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r = std::max(r, std::abs(a(i, j)));
    return r;
}

// Eigenvalues of a symmetric 2x2, ascending.
inline std::array<double, 2> sym_eigenvalues(const Mat2& a) {
    double tr = trace(a);
    double dd = 0.5 * (a(0, 0) - a(1, 1));
    double off = 0.5 * (a(0, 1) + a(1, 0));
    double disc = std::sqrt(dd * dd + off * off);
    return {0.5 * tr - disc, 0.5 * tr + disc};
}

inline bool positive_definite(const Mat2& a) {
    return a(0, 0) > 0.0 && det(a) > 0.0;
}

// Lower Cholesky factor g = L L^T; requires positive definite input.
inline Mat2 cholesky_lower(const Mat2& g) {
    double l00 = std::sqrt(g(0, 0));
    double l10 = g(1, 0) / l00;
    double l11 = std::sqrt(g(1, 1) - l10 * l10);
    return {l00, 0.0, l10, l11};
}

// A mapped into a frame orthonormal w.r.t. g: L^{-1} A L^{-T}.
inline Mat2 congruence_to_orthonormal(const Mat2& a, const Mat2& g) {
    Mat2 l = cholesky_lower(g);
    Mat2 li = inverse(l);
    return li * a * transpose(li);
}

struct Ten3 {
    double t[2][2][2]{};
    double& operator()(int i, int j, int k) { return t[i][j][k]; }
    double operator()(int i, int j, int k) const { return t[i][j][k]; }
};

struct Ten4 {
    double t[2][2][2][2]{};
    double& operator()(int i, int j, int k, int l) { return t[i][j][k][l]; }
    double operator()(int i, int j, int k, int l) const { return t[i][j][k][l]; }
};

inline double max_abs(const Ten3& a) {
    double r = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) r = std::max(r, std::abs(a(i, j, k)));
    return r;
}

}  // namespace ffl
