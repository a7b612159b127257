#pragma once

#include <vector>

#include "ffl/grid.hpp"
#include "ffl/linalg.hpp"
#include "ffl/norm.hpp"
#include "ffl/parallel.hpp"

namespace ffl {

// Spray coefficients G^i and the nonlinear connection G^i_j = dG^i/dy^j.
struct SprayData {
    Vec2 G;
    Mat2 Gj;
};

SprayData spray_coefficients(const Norm& n, const Vec2& x, const Vec2& y);

// Chern connection coefficients Gamma(i,j,k) = Gamma^i_jk at reference y.
Ten3 chern_connection(const Norm& n, const Vec2& x, const Vec2& y);

// R^v(X,Y)Z for coordinate fields X,Y,Z; horizontal derivatives of Gamma are
// finite-differenced (grid-spacing 4th-order stencils for grid-backed norms,
// small-step Richardson otherwise).
Vec2 curvature_tensor(const Norm& n, const Vec2& x, const Vec2& v, const Vec2& X,
                      const Vec2& Y, const Vec2& Z);

double flag_curvature(const Norm& n, const Vec2& x, const Vec2& v, const Vec2& w);

// Ric(v) = F^2(v) * sum of flag curvatures over a g_v-orthonormal completion
// of v/F(v); a single flag term for n = 2.
double ricci_scalar(const Norm& n, const Vec2& x, const Vec2& v);

// Akbarzadeh tensor: fiber Hessian of Ric/2 by central differences with step
// 1e-3*F(y) and one Richardson level.
Mat2 akbarzadeh_ricci(const Norm& n, const Vec2& x, const Vec2& y);

struct RicciBounds {
    double k1 = 0.0;  // max(0, -min eigenvalue)
    double k2 = 0.0;  // max(0,  max eigenvalue)
};

// --- bulk kernels over the sphere-bundle grid -----------------------------

// Ric(x_ij, e(theta_k)) at every node. Two passes: a pointwise
// Gamma/spray/metric table, then curvature by x- and theta-stencils over the
// table. The pointwise route above is the independent cross-check.
std::vector<double> ricci_field(const GridNorm& n, Exec exec = Exec::Parallel);

// Akbarzadeh tensor at every node via the polar fiber Hessian of the scalar
// Ricci table. row-major (i,j,k), entries (g00,g01,g11) packed per node.
std::vector<Mat2> akbarzadeh_field(const GridNorm& n, const std::vector<double>& ric,
                                   Exec exec = Exec::Parallel);

// Eigenvalue range of Ric_ij in g_v-orthonormal frames over the grid
// (subsampled by `stride` in all three indices).
RicciBounds ricci_bounds(const GridNorm& n, int stride = 1, Exec exec = Exec::Parallel);

}  // namespace ffl
