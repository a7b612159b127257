#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

// Periodic finite-difference stencils (weights by Fornberg's algorithm) and
// trigonometric barycentric interpolation on uniform periodic grids.

namespace ffl {

// Weights for the m-th derivative at z from nodes xs; Fornberg, SIAM Rev. 1998.
inline std::vector<double> fd_weights(double z, const std::vector<double>& xs, int m) {
    const int n = static_cast<int>(xs.size());
    std::vector<double> c(static_cast<size_t>(n) * (m + 1), 0.0);
    auto C = [&](int i, int k) -> double& { return c[static_cast<size_t>(i) * (m + 1) + k]; };
    double c1 = 1.0, c4 = xs[0] - z;
    C(0, 0) = 1.0;
    for (int i = 1; i < n; ++i) {
        int mn = std::min(i, m);
        double c2 = 1.0, c5 = c4;
        c4 = xs[i] - z;
        for (int j = 0; j < i; ++j) {
            double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    C(i, k) = c1 * (k * C(i - 1, k - 1) - c5 * C(i - 1, k)) / c2;
                C(i, 0) = -c1 * c5 * C(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k)
                C(j, k) = (c4 * C(j, k) - k * C(j, k - 1)) / c3;
            C(j, 0) = c4 * C(j, 0) / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = C(i, m);
    return w;
}

// Centered periodic stencil for derivative order m with the half-width used
// throughout: 4 for orders 1-2 (8th order in theta, 4th in x uses half=2),
// 5 for orders 3-4.
struct CenteredStencil {
    int half = 0;
    std::vector<double> w;  // size 2*half+1, node offsets -half..half

    CenteredStencil() = default;
    CenteredStencil(int m, int half_width, double spacing) : half(half_width) {
        std::vector<double> xs(2 * half + 1);
        for (int i = -half; i <= half; ++i) xs[i + half] = i * spacing;
        w = fd_weights(0.0, xs, m);
    }

    // Applies along a periodic axis of length n with stride through data.
    double apply(const double* data, int idx, int n, std::ptrdiff_t stride) const {
        double acc = 0.0;
        for (int o = -half; o <= half; ++o) {
            int j = idx + o;
            j -= n * static_cast<int>(std::floor(static_cast<double>(j) / n));
            acc += w[o + half] * data[static_cast<std::ptrdiff_t>(j) * stride];
        }
        return acc;
    }
};

// Barycentric trigonometric interpolation on an even uniform periodic grid
// over [0, 2pi); exact for trigonometric polynomials of degree <= n/2 - 1.
// Values within ~1e-12 of a node short-circuit to the nodal value.
inline double trig_interp(const double* values, int n, double spacing, double theta,
                          std::ptrdiff_t stride = 1) {
    const double two_pi = 2.0 * M_PI;
    theta -= two_pi * std::floor(theta / two_pi);
    double pos = theta / spacing;
    int near = static_cast<int>(std::lround(pos));
    if (std::abs(pos - near) < 1e-12) {
        int j = near % n;
        return values[static_cast<std::ptrdiff_t>(j) * stride];
    }
    double num = 0.0, den = 0.0;
    for (int j = 0; j < n; ++j) {
        double a = 0.5 * (theta - j * spacing);
        double w = ((j & 1) ? -1.0 : 1.0) / std::tan(a);
        num += w * values[static_cast<std::ptrdiff_t>(j) * stride];
        den += w;
    }
    return num / den;
}

}  // namespace ffl
