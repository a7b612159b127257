#include "ffl/norm.hpp"

#include <cmath>
#include <limits>

#include "ffl/errors.hpp"
#include "ffl/jet.hpp"

namespace ffl {

namespace {

template <class T>
T f2_impl(NormKind kind, const std::vector<double>& p, const T x[2], const T y[2]) {
    switch (kind) {
        case NormKind::Euclidean:
            return y[0] * y[0] + y[1] * y[1];
        case NormKind::RiemannianDiag:
            return p[0] * (y[0] * y[0]) + p[1] * (y[1] * y[1]);
        case NormKind::RiemannianConformal: {
            T phi = p[0] * (cos(x[0]) * cos(x[1]));
            return exp(2.0 * phi) * (y[0] * y[0] + y[1] * y[1]);
        }
        case NormKind::Quartic: {
            T a = y[0] * y[0], b = y[1] * y[1];
            T q = a + b;
            return q + p[0] * ((a * a + b * b) / q);
        }
    }
    return T(0.0);
}

// Nested-jet variable seeded with unit derivative in its component at every
// nesting level.
template <class T>
struct SeedAll;
template <>
struct SeedAll<double> {
    static double make(double v, int) { return v; }
};
template <class T>
struct SeedAll<Jet<T>> {
    static Jet<T> make(double v, int comp) {
        Jet<T> r;
        r.v = SeedAll<T>::make(v, comp);
        r.d[comp] = T(1.0);
        r.d[1 - comp] = T(0.0);
        return r;
    }
};

}  // namespace

double Norm::indicatrix_area(const Vec2& x) const {
    const int nq = 256;
    const double dth = 2.0 * M_PI / nq;
    double acc = 0.0;
    for (int k = 0; k < nq; ++k) {
        double th = k * dth;
        double h = f2(x, {std::cos(th), std::sin(th)});
        if (!(h > 0.0)) throw ConvexityError("indicatrix_area: F^2 <= 0 on the fiber circle");
        acc += 1.0 / h;
    }
    return 0.5 * acc * dth;
}

AnalyticNorm::AnalyticNorm(NormKind kind, std::vector<double> params)
    : kind_(kind), params_(std::move(params)) {}

double AnalyticNorm::f2(const Vec2& x, const Vec2& y) const {
    double xs[2] = {x[0], x[1]};
    double ys[2] = {y[0], y[1]};
    return f2_impl(kind_, params_, xs, ys);
}

FiberDerivs AnalyticNorm::fiber(const Vec2& x, const Vec2& y, int order) const {
    if (y[0] == 0.0 && y[1] == 0.0) throw ZeroVectorError("fiber derivatives at y = 0");
    J4 xs[2] = {J4(x[0]), J4(x[1])};
    J4 ys[2] = {SeedAll<J4>::make(y[0], 0), SeedAll<J4>::make(y[1], 1)};
    J4 r = f2_impl(kind_, params_, xs, ys);

    FiberDerivs out;
    out.order = order;
    out.f2 = value_of(r);
    for (int i = 0; i < 2; ++i) {
        out.d1[i] = value_of(r.d[i]);
        for (int j = 0; j < 2; ++j) {
            out.d2(i, j) = value_of(r.d[i].d[j]);
            for (int k = 0; k < 2; ++k) {
                out.d3(i, j, k) = value_of(r.d[i].d[j].d[k]);
                for (int l = 0; l < 2; ++l) out.d4(i, j, k, l) = r.d[i].d[j].d[k].d[l];
            }
        }
    }
    return out;
}

BaseDerivs AnalyticNorm::base_derivs(const Vec2& x, const Vec2& y) const {
    if (y[0] == 0.0 && y[1] == 0.0) throw ZeroVectorError("base derivatives at y = 0");
    // Outermost jet level carries the x seeds, the inner three carry y.
    J4 xs[2], ys[2];
    for (int c = 0; c < 2; ++c) {
        xs[c].v = J3(x[c]);
        xs[c].d[c] = J3(1.0);
        xs[c].d[1 - c] = J3(0.0);
        ys[c].v = SeedAll<J3>::make(y[c], c);
        ys[c].d[0] = J3(0.0);
        ys[c].d[1] = J3(0.0);
    }
    J4 r = f2_impl(kind_, params_, xs, ys);

    BaseDerivs out;
    for (int l = 0; l < 2; ++l)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                out.dg_dx(l, i, j) = 0.5 * value_of(r.d[l].d[i].d[j]);
                for (int k = 0; k < 2; ++k)
                    out.d2g_dxdy(l, k, i, j) = 0.5 * r.d[l].d[i].d[j].d[k];
            }
    return out;
}

std::string AnalyticNorm::name() const {
    switch (kind_) {
        case NormKind::Euclidean: return "euclidean";
        case NormKind::RiemannianDiag: return "riemannian_diag";
        case NormKind::RiemannianConformal: return "riemannian_conformal";
        case NormKind::Quartic: return "quartic";
    }
    return "?";
}

AnalyticNorm AnalyticNorm::from_catalog(const std::string& name,
                                        const std::vector<double>& params) {
    auto expect = [&](size_t n) {
        if (params.size() != n)
            throw ConfigError("norm '" + name + "' expects " + std::to_string(n) +
                              " parameter(s), got " + std::to_string(params.size()));
    };
    if (name == "euclidean") {
        expect(0);
        return {NormKind::Euclidean, {}};
    }
    if (name == "riemannian_diag") {
        expect(2);
        if (params[0] <= 0.0 || params[1] <= 0.0)
            throw ConfigError("riemannian_diag parameters must be positive");
        return {NormKind::RiemannianDiag, params};
    }
    if (name == "riemannian_conformal") {
        expect(1);
        return {NormKind::RiemannianConformal, params};
    }
    if (name == "quartic") {
        expect(1);
        if (params[0] < 0.0) throw ConfigError("quartic eps must be >= 0");
        return {NormKind::Quartic, params};
    }
    throw ConfigError("unknown norm '" + name + "'");
}

// --- operations -----------------------------------------------------------

double norm_eval(const Norm& n, const Vec2& x, const Vec2& y) {
    if (y[0] == 0.0 && y[1] == 0.0) throw ZeroVectorError("norm_eval at y = 0");
    return std::sqrt(n.f2(x, y));
}

Mat2 fundamental_tensor(const Norm& n, const Vec2& x, const Vec2& y) {
    if (y[0] == 0.0 && y[1] == 0.0) throw ZeroVectorError("fundamental_tensor at y = 0");
    FiberDerivs fd = n.fiber(x, y, 2);
    Mat2 g = 0.5 * fd.d2;
    if (!positive_definite(g))
        throw ConvexityError("fundamental tensor not positive definite (F3 violation)");
    return g;
}

double cartan_tensor(const Norm& n, const Vec2& x, const Vec2& y, const Vec2& u,
                     const Vec2& v, const Vec2& w) {
    if (y[0] == 0.0 && y[1] == 0.0) throw ZeroVectorError("cartan_tensor at y = 0");
    FiberDerivs fd = n.fiber(x, y, 3);
    double acc = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) acc += fd.d3(i, j, k) * u[i] * v[j] * w[k];
    return 0.25 * acc;
}

Vec2 legendre(const Norm& n, const Vec2& x, const Vec2& omega, std::optional<Vec2> warm_start) {
    if (omega[0] == 0.0 && omega[1] == 0.0) throw ZeroVectorError("legendre at omega = 0");
    Vec2 y = warm_start.value_or(omega);
    if (y[0] == 0.0 && y[1] == 0.0) y = omega;
    double wn = norm2(omega);
    Vec2 best = y;
    double best_res = std::numeric_limits<double>::infinity();
    int stall = 0;
    for (int it = 0; it < 50; ++it) {
        Mat2 g = fundamental_tensor(n, x, y);
        Vec2 r = g * y - omega;
        double res = norm2(r);
        if (res <= 1e-13 * wn) return y;
        if (res < 0.5 * best_res) {
            stall = 0;
        } else if (++stall >= 5) {
            break;  // round-off floor of sampled-norm tables; keep the best
        }
        if (res < best_res) {
            best_res = res;
            best = y;
        }
        // Euler's theorem makes g_y the exact Jacobian of y -> g_y y.
        y = y - inverse(g) * r;
    }
    if (best_res <= 1e-10 * wn) return best;
    throw ConvergenceError("legendre Newton failed to converge in 50 steps", best_res);
}

Vec2 legendre_inverse(const Norm& n, const Vec2& x, const Vec2& y) {
    if (y[0] == 0.0 && y[1] == 0.0) throw ZeroVectorError("legendre_inverse at y = 0");
    return fundamental_tensor(n, x, y) * y;
}

double dual_norm(const Norm& n, const Vec2& x, const Vec2& omega) {
    if (omega[0] == 0.0 && omega[1] == 0.0) return 0.0;
    Vec2 y = legendre(n, x, omega);
    return norm_eval(n, x, y);
}

}  // namespace ffl
