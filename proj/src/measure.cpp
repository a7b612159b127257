#include "ffl/measure.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ffl/errors.hpp"

namespace ffl {

double bh_density(const Norm& n, const Vec2& x) { return M_PI / n.indicatrix_area(x); }

MeasureDensity bh_measure(const GridNorm& n, Exec exec) {
    const TorusGrid& g = n.grid();
    MeasureDensity m;
    m.sigma = ScalarField(g.nx, n.field().time);
    parallel_for(exec, static_cast<long>(g.nx) * g.nx, [&](long idx) {
        int i = static_cast<int>(idx / g.nx), j = static_cast<int>(idx % g.nx);
        m.sigma.v[idx] = bh_density(n, g.x(i, j));
    });
    return m;
}

void export_sigma_csv(const MeasureDensity& m, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << "x1,x2,sigma\n";
    int nx = m.sigma.nx;
    double dx = 2.0 * M_PI / nx;
    char buf[96];
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nx; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", i * dx, j * dx,
                          m.sigma.at(i, j));
            os << buf;
        }
}

double s_curvature(const Norm& n, const Vec2& x, const Vec2& y) {
    if (y[0] == 0.0 && y[1] == 0.0) throw ZeroVectorError("s_curvature at y = 0");
    SprayData sp = spray_coefficients(n, x, y);
    double tr = sp.Gj(0, 0) + sp.Gj(1, 1);

    // y^i d_i ln sigma_F by 4th-order central differences
    double h = n.x_fd_step();
    double drift = 0.0;
    for (int l = 0; l < 2; ++l) {
        if (y[l] == 0.0) continue;
        Vec2 e{l == 0 ? 1.0 : 0.0, l == 1 ? 1.0 : 0.0};
        double lp1 = std::log(bh_density(n, x + h * e));
        double lm1 = std::log(bh_density(n, x - h * e));
        double lp2 = std::log(bh_density(n, x + 2 * h * e));
        double lm2 = std::log(bh_density(n, x - 2 * h * e));
        drift += y[l] * (-lp2 + 8 * lp1 - 8 * lm1 + lm2) / (12 * h);
    }
    return tr - drift;
}

namespace {

struct PhaseState {
    Vec2 x, y;
};

PhaseState spray_rk4(const Norm& n, PhaseState s, double dt) {
    auto rhs = [&](const PhaseState& p) {
        SprayData sp = spray_coefficients(n, p.x, p.y);
        return PhaseState{p.y, -2.0 * sp.G};
    };
    auto add = [](const PhaseState& a, double c, const PhaseState& b) {
        return PhaseState{a.x + c * b.x, a.y + c * b.y};
    };
    PhaseState k1 = rhs(s);
    PhaseState k2 = rhs(add(s, 0.5 * dt, k1));
    PhaseState k3 = rhs(add(s, 0.5 * dt, k2));
    PhaseState k4 = rhs(add(s, dt, k3));
    PhaseState out = s;
    out.x = s.x + (dt / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    out.y = s.y + (dt / 6.0) * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
    return out;
}

double psi_at(const Norm& n, const PhaseState& s) {
    Mat2 g = fundamental_tensor(n, s.x, s.y);
    return std::log(std::sqrt(det(g)) / bh_density(n, s.x));
}

}  // namespace

double weighted_ricci_infinity(const Norm& n, const Vec2& x, const Vec2& v) {
    if (v[0] == 0.0 && v[1] == 0.0) throw ZeroVectorError("weighted ricci at v = 0");
    double f2v = n.f2(x, v);
    Vec2 vh = v / std::sqrt(f2v);

    const double delta = 1e-3;
    // states at +-delta/2 and +-delta along the unit-speed geodesic
    PhaseState c{x, vh};
    PhaseState ph = spray_rk4(n, c, 0.5 * delta);
    PhaseState pf = spray_rk4(n, ph, 0.5 * delta);
    PhaseState mh = spray_rk4(n, c, -0.5 * delta);
    PhaseState mf = spray_rk4(n, mh, -0.5 * delta);

    double p0 = psi_at(n, c);
    double second_full = (psi_at(n, pf) - 2.0 * p0 + psi_at(n, mf)) / (delta * delta);
    double second_half =
        (psi_at(n, ph) - 2.0 * p0 + psi_at(n, mh)) / (0.25 * delta * delta);
    double psi2 = (4.0 * second_half - second_full) / 3.0;

    return ricci_scalar(n, x, v) + f2v * psi2;
}

}  // namespace ffl
