#include "ffl/analysis.hpp"

#include <cmath>

#include "ffl/errors.hpp"
#include "ffl/fd.hpp"

namespace ffl {

namespace {

// shared 4th-order periodic stencils keyed on spacing
struct Stencils {
    double dx = -1.0;
    CenteredStencil s1, s2;
    void ensure(double spacing) {
        if (dx != spacing) {
            s1 = CenteredStencil(1, 2, spacing);
            s2 = CenteredStencil(2, 2, spacing);
            dx = spacing;
        }
    }
};
thread_local Stencils g_st;

double spacing_of(const ScalarField& u) { return 2.0 * M_PI / u.nx; }

double d_axis(const ScalarField& u, int i, int j, int axis, const CenteredStencil& st) {
    if (axis == 0) return st.apply(u.v.data() + j, i, u.nx, u.nx);
    return st.apply(u.v.data() + static_cast<long>(i) * u.nx, j, u.nx, 1);
}

const Vec2 kFallbackDir{1.0, 0.0};

}  // namespace

Vec2 differential(const ScalarField& u, int i, int j) {
    g_st.ensure(spacing_of(u));
    return {d_axis(u, i, j, 0, g_st.s1), d_axis(u, i, j, 1, g_st.s1)};
}

VectorFieldOnMu gradient(const Norm& n, const ScalarField& u, double delta_grad_factor,
                         Exec exec) {
    const int nx = u.nx;
    VectorFieldOnMu out;
    out.nx = nx;
    out.v.resize(static_cast<size_t>(nx) * nx);
    out.du.resize(out.v.size());
    out.mask.assign(out.v.size(), 0);

    double max_du = 0.0;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nx; ++j) {
            Vec2 d = differential(u, i, j);
            out.du[out.idx(i, j)] = d;
            max_du = std::max(max_du, norm2(d));
        }
    out.delta_grad = delta_grad_factor * max_du;

    const double dx = spacing_of(u);
    parallel_for(exec, static_cast<long>(nx) * nx, [&](long idx) {
        int i = static_cast<int>(idx / nx), j = static_cast<int>(idx % nx);
        Vec2 x{i * dx, j * dx};
        Vec2 d = out.du[idx];
        Mat2 g0 = fundamental_tensor(n, x, kFallbackDir);
        Vec2 fallback = inverse(g0) * d;
        if (norm2(d) == 0.0) {
            out.v[idx] = fallback;
            return;
        }
        Vec2 y = legendre(n, x, d, fallback);
        double fstar = std::sqrt(n.f2(x, y));
        if (fstar < out.delta_grad) {
            out.v[idx] = fallback;
        } else {
            out.v[idx] = y;
            out.mask[idx] = 1;
        }
    });
    return out;
}

Mat2 hessian(const Norm& n, const ScalarField& u, int i, int j, const Vec2& V) {
    g_st.ensure(spacing_of(u));
    const double dx = spacing_of(u);
    Mat2 h;
    h(0, 0) = d_axis(u, i, j, 0, g_st.s2);
    h(1, 1) = d_axis(u, i, j, 1, g_st.s2);
    double mixed = 0.0;
    for (int o = -g_st.s1.half; o <= g_st.s1.half; ++o) {
        int jj = (((j + o) % u.nx) + u.nx) % u.nx;
        double col = g_st.s1.apply(u.v.data() + jj, i, u.nx, u.nx);
        mixed += g_st.s1.w[o + g_st.s1.half] * col;
    }
    h(0, 1) = h(1, 0) = mixed;

    Ten3 gamma = chern_connection(n, {i * dx, j * dx}, V);
    Vec2 du = differential(u, i, j);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int k = 0; k < 2; ++k) h(a, b) -= gamma(k, a, b) * du[k];
    return h;
}

namespace {

ScalarField divergence_mu(const ScalarField& log_sigma, const std::vector<Vec2>& V, int nx,
                          double time, Exec exec) {
    ScalarField out(nx, time);
    const double dx = 2.0 * M_PI / nx;
    CenteredStencil s1(1, 2, dx);
    // component fields so stencils stride contiguously
    ScalarField v0(nx), v1(nx);
    for (long idx = 0; idx < static_cast<long>(nx) * nx; ++idx) {
        v0.v[idx] = V[idx][0];
        v1.v[idx] = V[idx][1];
    }
    parallel_for(exec, static_cast<long>(nx) * nx, [&](long idx) {
        int i = static_cast<int>(idx / nx), j = static_cast<int>(idx % nx);
        double div = d_axis(v0, i, j, 0, s1) + d_axis(v1, i, j, 1, s1);
        // mu = sigma dx => Psi = -ln sigma, div_mu V = div V + V . d(ln sigma)
        Vec2 dls{d_axis(log_sigma, i, j, 0, s1), d_axis(log_sigma, i, j, 1, s1)};
        out.v[idx] = div + V[idx][0] * dls[0] + V[idx][1] * dls[1];
    });
    return out;
}

}  // namespace

ScalarField laplacian(const Norm& n, const ScalarField& log_sigma, const ScalarField& u,
                      double delta_grad_factor, Exec exec) {
    VectorFieldOnMu grad = gradient(n, u, delta_grad_factor, exec);
    return divergence_mu(log_sigma, grad.v, u.nx, u.time, exec);
}

double trace_identity_residual(const Norm& n, const ScalarField& log_sigma,
                               const ScalarField& u, int i, int j) {
    VectorFieldOnMu grad = gradient(n, u);
    if (!grad.on_mask(i, j)) throw std::runtime_error("trace_identity_residual: masked point");
    ScalarField lap = laplacian(n, log_sigma, u);
    const double dx = spacing_of(u);
    Vec2 x{i * dx, j * dx};
    Vec2 V = grad.v[grad.idx(i, j)];
    Mat2 h = hessian(n, u, i, j, V);
    Mat2 ginv = inverse(fundamental_tensor(n, x, V));
    double tr = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) tr += ginv(a, b) * h(a, b);
    return std::abs(lap.at(i, j) - (tr - s_curvature(n, x, V)));
}

ScalarField linearized_laplacian(const Norm& n, const ScalarField& log_sigma,
                                 const VectorFieldOnMu& V, const ScalarField& phi,
                                 Exec exec) {
    const int nx = phi.nx;
    const double dx = 2.0 * M_PI / nx;
    std::vector<Vec2> w(static_cast<size_t>(nx) * nx);
    parallel_for(exec, static_cast<long>(nx) * nx, [&](long idx) {
        int i = static_cast<int>(idx / nx), j = static_cast<int>(idx % nx);
        Vec2 x{i * dx, j * dx};
        Vec2 ref = V.mask[idx] ? V.v[idx] : kFallbackDir;
        Mat2 g = fundamental_tensor(n, x, ref);
        Vec2 dphi = differential(phi, i, j);
        w[idx] = inverse(g) * dphi;
    });
    return divergence_mu(log_sigma, w, nx, phi.time, exec);
}

BochnerResult bochner_residual(const Norm& n, const ScalarField& log_sigma,
                               const ScalarField& u, Exec exec) {
    const int nx = u.nx;
    const double dx = 2.0 * M_PI / nx;
    VectorFieldOnMu grad = gradient(n, u, 1e-7, exec);
    ScalarField lap = laplacian(n, log_sigma, u, 1e-7, exec);

    // phi = F^2(grad u)/2 = Du(grad u)/2
    ScalarField phi(nx, u.time);
    for (long idx = 0; idx < static_cast<long>(nx) * nx; ++idx)
        phi.v[idx] = 0.5 * dot(grad.du[idx], grad.v[idx]);
    ScalarField lhs1 = linearized_laplacian(n, log_sigma, grad, phi, exec);

    // F*^2 is not C^2 at the origin for non-quadratic norms, so stencils near
    // critical points of u never converge; gate on |du| like the trace check.
    double max_du = 0.0;
    for (const Vec2& d : grad.du) max_du = std::max(max_du, norm2(d));

    BochnerResult out;
    out.residual = ScalarField(nx, u.time);
    out.mask = grad.mask;
    for (long idx = 0; idx < static_cast<long>(nx) * nx; ++idx)
        if (norm2(grad.du[idx]) < 0.5 * max_du) out.mask[idx] = 0;
    parallel_for(exec, static_cast<long>(nx) * nx, [&](long idx) {
        if (!out.mask[idx]) return;
        int i = static_cast<int>(idx / nx), j = static_cast<int>(idx % nx);
        Vec2 x{i * dx, j * dx};
        Vec2 V = grad.v[idx];
        Vec2 dlap = differential(lap, i, j);
        double lhs = lhs1.v[idx] - dot(dlap, V);
        Mat2 h = hessian(n, u, i, j, V);
        Mat2 ginv = inverse(fundamental_tensor(n, x, V));
        double hs = 0.0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c)
                    for (int d = 0; d < 2; ++d)
                        hs += ginv(a, c) * ginv(b, d) * h(a, b) * h(c, d);
        double rhs = weighted_ricci_infinity(n, x, V) + hs;
        out.residual.v[idx] = lhs - rhs;
    });
    for (double r : out.residual.v) out.max_residual = std::max(out.max_residual, std::abs(r));
    return out;
}

ScalarField log_field(const ScalarField& sigma) {
    ScalarField out(sigma.nx, sigma.time);
    for (size_t i = 0; i < sigma.v.size(); ++i) out.v[i] = std::log(sigma.v[i]);
    return out;
}

double integral_dm(const ScalarField& f, const ScalarField& sigma) {
    double dx = 2.0 * M_PI / f.nx;
    double acc = 0.0;
    for (size_t i = 0; i < f.v.size(); ++i) acc += f.v[i] * sigma.v[i];
    return acc * dx * dx;
}

}  // namespace ffl
