#include "ffl/geometry.hpp"

#include <cmath>
#include <limits>

#include "ffl/errors.hpp"
#include "ffl/jet.hpp"

namespace ffl {

namespace {

struct PointTensors {
    Mat2 g, ginv;
    Ten3 dg_dy;   // (i,j,k) = d g_ij / d y^k
    Ten3 dg_dx;   // (l,i,j) = d g_ij / d x_l
    Ten4 d2g_dxdy;
};

PointTensors point_tensors(const Norm& n, const Vec2& x, const Vec2& y) {
    FiberDerivs fd = n.fiber(x, y, 3);
    BaseDerivs bd = n.base_derivs(x, y);
    PointTensors p;
    p.g = 0.5 * fd.d2;
    if (!positive_definite(p.g))
        throw ConvexityError("spray/chern: fundamental tensor not positive definite");
    p.ginv = inverse(p.g);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) p.dg_dy(i, j, k) = 0.5 * fd.d3(i, j, k);
    p.dg_dx = bd.dg_dx;
    p.d2g_dxdy = bd.d2g_dxdy;
    return p;
}

SprayData spray_from(const PointTensors& p, const Vec2& y) {
    // T_kjl = 2 dg_jk/dx_l - dg_jl/dx_k ; G^i = 1/4 g^{ik} T_kjl y^j y^l
    auto T = [&](int k, int j, int l) {
        return 2.0 * p.dg_dx(l, j, k) - p.dg_dx(k, j, l);
    };
    auto dT_dy = [&](int k, int j, int l, int m) {
        return 2.0 * p.d2g_dxdy(l, m, j, k) - p.d2g_dxdy(k, m, j, l);
    };
    Vec2 S;  // S_k = T_kjl y^j y^l
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j)
            for (int l = 0; l < 2; ++l) S[k] += T(k, j, l) * y[j] * y[l];

    SprayData out;
    for (int i = 0; i < 2; ++i) out.G[i] = 0.25 * (p.ginv(i, 0) * S[0] + p.ginv(i, 1) * S[1]);

    for (int m = 0; m < 2; ++m) {
        // dS_k/dy^m
        Vec2 dS;
        for (int k = 0; k < 2; ++k) {
            double acc = 0.0;
            for (int j = 0; j < 2; ++j)
                for (int l = 0; l < 2; ++l) acc += dT_dy(k, j, l, m) * y[j] * y[l];
            for (int l = 0; l < 2; ++l) acc += T(k, m, l) * y[l];
            for (int j = 0; j < 2; ++j) acc += T(k, j, m) * y[j];
            dS[k] = acc;
        }
        // dginv^{ik}/dy^m = -g^{ia} dg_ab/dy^m g^{bk}
        for (int i = 0; i < 2; ++i) {
            double acc = 0.0;
            for (int k = 0; k < 2; ++k) {
                double dginv = 0.0;
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        dginv -= p.ginv(i, a) * p.dg_dy(a, b, m) * p.ginv(b, k);
                acc += dginv * S[k] + p.ginv(i, k) * dS[k];
            }
            out.Gj(i, m) = 0.25 * acc;
        }
    }
    return out;
}

Ten3 chern_from(const PointTensors& p, const SprayData& sp) {
    Ten3 gamma;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                double acc = 0.0;
                for (int l = 0; l < 2; ++l) {
                    double br = p.dg_dx(k, l, j) - p.dg_dx(l, j, k) + p.dg_dx(j, k, l);
                    for (int r = 0; r < 2; ++r)
                        br += -p.dg_dy(l, j, r) * sp.Gj(r, k) + p.dg_dy(j, k, r) * sp.Gj(r, l) -
                              p.dg_dy(k, l, r) * sp.Gj(r, j);
                    acc += p.ginv(i, l) * br;
                }
                gamma(i, j, k) = 0.5 * acc;
            }
    return gamma;
}

// R^i_{jkl} from Gamma, its horizontal derivatives and the GammaGamma terms.
Ten4 curvature_components(const Norm& n, const Vec2& x, const Vec2& v) {
    PointTensors p0 = point_tensors(n, x, v);
    SprayData sp = spray_from(p0, v);
    Ten3 gamma = chern_from(p0, sp);

    auto gamma_at = [&](const Vec2& xx, const Vec2& vv) {
        PointTensors p = point_tensors(n, xx, vv);
        return chern_from(p, spray_from(p, vv));
    };

    // dGamma/dx_l
    Ten3 dgx[2];
    double hx = n.x_fd_step();
    for (int l = 0; l < 2; ++l) {
        Vec2 e{l == 0 ? 1.0 : 0.0, l == 1 ? 1.0 : 0.0};
        auto shift = [&](double s) { return gamma_at(x + s * e, v); };
        if (n.x_step_is_grid()) {
            // 4th-order central on grid nodes
            Ten3 gp1 = shift(hx), gm1 = shift(-hx), gp2 = shift(2 * hx), gm2 = shift(-2 * hx);
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    for (int c = 0; c < 2; ++c)
                        dgx[l](a, b, c) = (-gp2(a, b, c) + 8.0 * gp1(a, b, c) -
                                           8.0 * gm1(a, b, c) + gm2(a, b, c)) /
                                          (12.0 * hx);
        } else {
            // central with one Richardson level
            Ten3 gp1 = shift(hx), gm1 = shift(-hx), gp2 = shift(0.5 * hx), gm2 = shift(-0.5 * hx);
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    for (int c = 0; c < 2; ++c) {
                        double dh = (gp1(a, b, c) - gm1(a, b, c)) / (2.0 * hx);
                        double dh2 = (gp2(a, b, c) - gm2(a, b, c)) / hx;
                        dgx[l](a, b, c) = (4.0 * dh2 - dh) / 3.0;
                    }
        }
    }
    // dGamma/dy^m (central; Gamma is 0-homogeneous in y)
    Ten3 dgy[2];
    double hy = 1e-4 * std::sqrt(p0.g(0, 0) + p0.g(1, 1)) * norm2(v);
    for (int m = 0; m < 2; ++m) {
        Vec2 e{m == 0 ? 1.0 : 0.0, m == 1 ? 1.0 : 0.0};
        Ten3 gp = gamma_at(x, v + hy * e), gm = gamma_at(x, v - hy * e);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c) dgy[m](a, b, c) = (gp(a, b, c) - gm(a, b, c)) / (2.0 * hy);
    }

    // horizontal derivative: delta_k = d/dx_k - G^m_k d/dy^m
    auto hder = [&](int k, int i, int j, int l) {
        double acc = dgx[k](i, j, l);
        for (int m = 0; m < 2; ++m) acc -= sp.Gj(m, k) * dgy[m](i, j, l);
        return acc;
    };

    Ten4 R;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) {
                    double acc = hder(k, i, l, j) - hder(l, i, k, j);
                    for (int m = 0; m < 2; ++m)
                        acc += gamma(i, k, m) * gamma(m, l, j) - gamma(i, l, m) * gamma(m, k, j);
                    R(i, j, k, l) = acc;
                }
    return R;
}

double flag_from(const Mat2& g, const Ten4& R, const Vec2& v, const Vec2& w) {
    Vec2 rv;  // R^v(v,w)w
    for (int i = 0; i < 2; ++i) {
        double acc = 0.0;
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) acc += R(i, j, k, l) * w[j] * v[k] * w[l];
        rv[i] = acc;
    }
    double gvv = quad_form(g, v, v), gww = quad_form(g, w, w), gvw = quad_form(g, v, w);
    double denom = gvv * gww - gvw * gvw;
    if (denom <= 1e-14 * gvv * gww)
        throw DegenerateFlagError("flag_curvature: degenerate flag");
    return quad_form(g, rv, v) / denom;
}

}  // namespace

SprayData spray_coefficients(const Norm& n, const Vec2& x, const Vec2& y) {
    if (y[0] == 0.0 && y[1] == 0.0) throw ZeroVectorError("spray at y = 0");
    PointTensors p = point_tensors(n, x, y);
    return spray_from(p, y);
}

Ten3 chern_connection(const Norm& n, const Vec2& x, const Vec2& y) {
    if (y[0] == 0.0 && y[1] == 0.0) throw ZeroVectorError("chern at y = 0");
    PointTensors p = point_tensors(n, x, y);
    return chern_from(p, spray_from(p, y));
}

Vec2 curvature_tensor(const Norm& n, const Vec2& x, const Vec2& v, const Vec2& X,
                      const Vec2& Y, const Vec2& Z) {
    if (v[0] == 0.0 && v[1] == 0.0) throw ZeroVectorError("curvature at v = 0");
    Ten4 R = curvature_components(n, x, v);
    Vec2 out;
    for (int i = 0; i < 2; ++i) {
        double acc = 0.0;
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) acc += R(i, j, k, l) * Z[j] * X[k] * Y[l];
        out[i] = acc;
    }
    return out;
}

double flag_curvature(const Norm& n, const Vec2& x, const Vec2& v, const Vec2& w) {
    if (v[0] == 0.0 && v[1] == 0.0) throw ZeroVectorError("flag at v = 0");
    Mat2 g = fundamental_tensor(n, x, v);
    Ten4 R = curvature_components(n, x, v);
    return flag_from(g, R, v, w);
}

double ricci_scalar(const Norm& n, const Vec2& x, const Vec2& v) {
    if (v[0] == 0.0 && v[1] == 0.0) throw ZeroVectorError("ricci at v = 0");
    Mat2 g = fundamental_tensor(n, x, v);
    double f2v = quad_form(g, v, v);  // = F^2(v) by Euler
    double fv = std::sqrt(f2v);
    Vec2 vh = v / fv;
    // complete v/F(v): keep the coordinate vector least parallel to v
    int drop = std::abs(quad_form(g, v, {1.0, 0.0})) >= std::abs(quad_form(g, v, {0.0, 1.0})) ? 0 : 1;
    Vec2 e{drop == 0 ? 0.0 : 1.0, drop == 0 ? 1.0 : 0.0};
    Vec2 w = e - quad_form(g, vh, e) * vh;
    Ten4 R = curvature_components(n, x, v);
    return f2v * flag_from(g, R, v, w);
}

Mat2 akbarzadeh_ricci(const Norm& n, const Vec2& x, const Vec2& y) {
    if (y[0] == 0.0 && y[1] == 0.0) throw ZeroVectorError("akbarzadeh at y = 0");
    double base = 1e-3 * norm_eval(n, x, y);
    auto phi = [&](const Vec2& yy) { return 0.5 * ricci_scalar(n, x, yy); };
    auto hess = [&](double d) {
        Mat2 h;
        double c = phi(y);
        for (int i = 0; i < 2; ++i) {
            Vec2 e{i == 0 ? d : 0.0, i == 1 ? d : 0.0};
            h(i, i) = (phi(y + e) - 2.0 * c + phi(y - e)) / (d * d);
        }
        Vec2 e0{d, 0.0}, e1{0.0, d};
        double off = (phi(y + e0 + e1) - phi(y + e0 - e1) - phi(y - e0 + e1) + phi(y - e0 - e1)) /
                     (4.0 * d * d);
        h(0, 1) = h(1, 0) = off;
        return h;
    };
    Mat2 h1 = hess(base), h2 = hess(0.5 * base);
    Mat2 r = (1.0 / 3.0) * (4.0 * h2 - h1);
    r(0, 1) = r(1, 0) = 0.5 * (r(0, 1) + r(1, 0));
    return r;
}

// --- bulk kernels ---------------------------------------------------------

namespace {

struct NodeTables {
    std::vector<Mat2> g;       // fundamental tensor at (x, e(theta))
    std::vector<Ten3> gamma;   // Chern coefficients
    std::vector<Mat2> gj;      // nonlinear connection
};

NodeTables node_tables(const GridNorm& n, Exec exec) {
    const TorusGrid& g = n.grid();
    NodeTables t;
    t.g.resize(g.sites());
    t.gamma.resize(g.sites());
    t.gj.resize(g.sites());
    parallel_for(exec, g.sites(), [&](long idx) {
        int k = static_cast<int>(idx % g.ntheta);
        long row = idx / g.ntheta;
        int j = static_cast<int>(row % g.nx);
        int i = static_cast<int>(row / g.nx);
        double th = g.theta(k);
        Vec2 x = g.x(i, j), v{std::cos(th), std::sin(th)};
        PointTensors p = point_tensors(n, x, v);
        SprayData sp = spray_from(p, v);
        t.g[idx] = p.g;
        t.gj[idx] = sp.Gj;
        t.gamma[idx] = chern_from(p, sp);
    });
    return t;
}

}  // namespace

std::vector<double> ricci_field(const GridNorm& n, Exec exec) {
    const TorusGrid& g = n.grid();
    NodeTables t = node_tables(n, exec);

    static const double w4[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
    CenteredStencil th_st(1, 4, g.dtheta());

    const long si = static_cast<long>(g.nx) * g.ntheta;
    const long sj = g.ntheta;
    std::vector<double> ric(g.sites(), 0.0);
    parallel_for(exec, g.sites(), [&](long idx) {
        int k = static_cast<int>(idx % g.ntheta);
        long row = idx / g.ntheta;
        int j = static_cast<int>(row % g.nx);
        int i = static_cast<int>(row / g.nx);
        double th = g.theta(k);
        Vec2 v{std::cos(th), std::sin(th)};
        Vec2 w{-v[1], v[0]};

        Ten3 dgx[2], dgy_th;
        for (int comp = 0; comp < 5; ++comp) {
            int o = comp - 2;
            if (o == 0) continue;
            long ia = (static_cast<long>(g.wrap_x(i + o)) * g.nx + j) * g.ntheta + k;
            long ja = (static_cast<long>(i) * g.nx + g.wrap_x(j + o)) * g.ntheta + k;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    for (int c = 0; c < 2; ++c) {
                        dgx[0](a, b, c) += w4[comp] / g.dx() * t.gamma[ia](a, b, c);
                        dgx[1](a, b, c) += w4[comp] / g.dx() * t.gamma[ja](a, b, c);
                    }
        }
        for (int o = -th_st.half; o <= th_st.half; ++o) {
            long ka = (static_cast<long>(i) * g.nx + j) * g.ntheta + g.wrap_t(k + o);
            double wt = th_st.w[o + th_st.half];
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    for (int c = 0; c < 2; ++c) dgy_th(a, b, c) += wt * t.gamma[ka](a, b, c);
        }
        // dGamma/dy^m = dGamma/dtheta * dtheta/dy^m along the unit fiber circle
        // (Gamma is 0-homogeneous so the radial part vanishes); dtheta/dy = w.
        const Mat2& gj = t.gj[idx];
        const Ten3& gamma = t.gamma[idx];
        auto hder = [&](int kk, int ii, int jj, int ll) {
            double acc = dgx[kk](ii, jj, ll);
            for (int m = 0; m < 2; ++m) acc -= gj(m, kk) * dgy_th(ii, jj, ll) * w[m];
            return acc;
        };
        Ten4 R;
        for (int ii = 0; ii < 2; ++ii)
            for (int jj = 0; jj < 2; ++jj)
                for (int kk = 0; kk < 2; ++kk)
                    for (int ll = 0; ll < 2; ++ll) {
                        double acc = hder(kk, ii, ll, jj) - hder(ll, ii, kk, jj);
                        for (int m = 0; m < 2; ++m)
                            acc += gamma(ii, kk, m) * gamma(m, ll, jj) -
                                   gamma(ii, ll, m) * gamma(m, kk, jj);
                        R(ii, jj, kk, ll) = acc;
                    }
        double h = n.field().h[idx];
        ric[idx] = h * flag_from(t.g[idx], R, v, w);
        (void)si;
        (void)sj;
    });
    return ric;
}

std::vector<Mat2> akbarzadeh_field(const GridNorm& n, const std::vector<double>& ric,
                                   Exec exec) {
    const TorusGrid& g = n.grid();
    CenteredStencil s1(1, 4, g.dtheta()), s2(2, 4, g.dtheta());
    std::vector<Mat2> out(g.sites());
    parallel_for(exec, g.sites(), [&](long idx) {
        int k = static_cast<int>(idx % g.ntheta);
        long row = idx / g.ntheta;
        const double* rrow = ric.data() + row * g.ntheta;
        double th = g.theta(k);
        // rho(theta) = Ric on the unit circle; Ric(y) = r^2 rho(theta),
        // Ric_ij = 1/2 fiber Hessian via the polar jets
        double rm[3] = {rrow[k], s1.apply(rrow, k, g.ntheta, 1), s2.apply(rrow, k, g.ntheta, 1)};
        J2 ys[2];
        double y0 = std::cos(th), y1 = std::sin(th);
        ys[0] = J2(J1(y0, 1.0, 0.0), J1(1.0), J1(0.0));
        ys[1] = J2(J1(y1, 0.0, 1.0), J1(0.0), J1(1.0));
        J2 r2 = ys[0] * ys[0] + ys[1] * ys[1];
        J2 dt = atan2(ys[1], ys[0]) - th;
        J2 p = (J2(0.5 * rm[2]) * dt + rm[1]) * dt + rm[0];
        J2 val = r2 * p;
        Mat2 m;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) m(a, b) = 0.5 * val.d[a].d[b];
        m(0, 1) = m(1, 0) = 0.5 * (m(0, 1) + m(1, 0));
        out[idx] = m;
    });
    return out;
}

RicciBounds ricci_bounds(const GridNorm& n, int stride, Exec exec) {
    const TorusGrid& g = n.grid();
    std::vector<double> ric = ricci_field(n, exec);
    std::vector<Mat2> rij = akbarzadeh_field(n, ric, exec);

    double gmin = std::numeric_limits<double>::infinity();
    double gmax = -std::numeric_limits<double>::infinity();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(min : gmin) reduction(max : gmax) if (exec == Exec::Parallel)
#endif
    for (long idx = 0; idx < g.sites(); ++idx) {
        int k = static_cast<int>(idx % g.ntheta);
        long row = idx / g.ntheta;
        int j = static_cast<int>(row % g.nx);
        int i = static_cast<int>(row / g.nx);
        if (i % stride || j % stride || k % stride) continue;
        double th = g.theta(k);
        Vec2 v{std::cos(th), std::sin(th)};
        Mat2 gv = n.y_derivatives(i, j, v, 2).d2;
        gv = 0.5 * gv;
        Mat2 a = congruence_to_orthonormal(rij[idx], gv);
        auto ev = sym_eigenvalues(a);
        gmin = std::min(gmin, ev[0]);
        gmax = std::max(gmax, ev[1]);
    }
    RicciBounds b;
    b.k1 = std::max(0.0, -gmin);
    b.k2 = std::max(0.0, gmax);
    return b;
}

}  // namespace ffl
