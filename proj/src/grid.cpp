#include "ffl/grid.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>

#include "ffl/errors.hpp"
#include "ffl/jet.hpp"

namespace ffl {

TorusGrid::TorusGrid(int nx_, int ntheta_) : nx(nx_), ntheta(ntheta_) {
    if (nx < 16 || ntheta < 16 || nx % 2 != 0 || ntheta % 2 != 0)
        throw ConfigError("grid sizes must be even and >= 16");
}

SphereBundleField sample_norm(const Norm& n, const TorusGrid& grid) {
    SphereBundleField f(grid);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.nx; ++j) {
            Vec2 x = grid.x(i, j);
            for (int k = 0; k < grid.ntheta; ++k) {
                double th = grid.theta(k);
                Vec2 e{std::cos(th), std::sin(th)};
                double h = n.f2(x, e);
                if (!(h > 0.0))
                    throw ConvexityError("sample_norm: F^2 <= 0 at site (" + std::to_string(i) +
                                         "," + std::to_string(j) + "," + std::to_string(k) + ")");
                try {
                    (void)fundamental_tensor(n, x, e);
                } catch (const ConvexityError&) {
                    throw ConvexityError("sample_norm: F3 violated at site (" + std::to_string(i) +
                                         "," + std::to_string(j) + "," + std::to_string(k) + ")");
                }
                f.at(i, j, k) = h;
            }
        }
    return f;
}

// --- binary / CSV io ------------------------------------------------------

namespace {
void write_u64(std::ofstream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), 8);
}
std::uint64_t read_u64(std::ifstream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
void write_f64(std::ofstream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }
double read_f64(std::ifstream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
}  // namespace

void SphereBundleField::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    write_u64(os, static_cast<std::uint64_t>(grid.nx));
    write_u64(os, static_cast<std::uint64_t>(grid.ntheta));
    write_f64(os, time);
    os.write(reinterpret_cast<const char*>(h.data()),
             static_cast<std::streamsize>(h.size() * 8));
}

SphereBundleField SphereBundleField::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for read: " + path);
    int nx = static_cast<int>(read_u64(is));
    int nt = static_cast<int>(read_u64(is));
    double t = read_f64(is);
    SphereBundleField f(TorusGrid(nx, nt), t);
    is.read(reinterpret_cast<char*>(f.h.data()), static_cast<std::streamsize>(f.h.size() * 8));
    if (!is) throw std::runtime_error("truncated field file: " + path);
    return f;
}

void SphereBundleField::export_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << "x1,x2,theta,h\n";
    char buf[128];
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.nx; ++j)
            for (int k = 0; k < grid.ntheta; ++k) {
                std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", grid.x1(i),
                              grid.x2(j), grid.theta(k), at(i, j, k));
                os << buf;
            }
}

void ScalarField::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    write_u64(os, static_cast<std::uint64_t>(nx));
    write_f64(os, time);
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
}

ScalarField ScalarField::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for read: " + path);
    int nx = static_cast<int>(read_u64(is));
    double t = read_f64(is);
    ScalarField f(nx, t);
    is.read(reinterpret_cast<char*>(f.v.data()), static_cast<std::streamsize>(f.v.size() * 8));
    if (!is) throw std::runtime_error("truncated field file: " + path);
    return f;
}

HBaseDerivs x_derivatives(const SphereBundleField& f, int i, int j, int k, int order) {
    if (order < 1 || order > 2) throw ConfigError("x_derivatives: order must be 1 or 2");
    const TorusGrid& g = f.grid;
    static thread_local CenteredStencil s1, s2;
    static thread_local double cached_dx = -1.0;
    if (cached_dx != g.dx()) {
        s1 = CenteredStencil(1, 2, g.dx());
        s2 = CenteredStencil(2, 2, g.dx());
        cached_dx = g.dx();
    }
    const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(g.nx) * g.ntheta;
    const std::ptrdiff_t sj = g.ntheta;
    const double* base_i = f.h.data() + static_cast<long>(j) * g.ntheta + k;
    const double* base_j = f.h.data() + static_cast<long>(i) * si + k;

    HBaseDerivs out;
    out.d1[0] = s1.apply(base_i, i, g.nx, si);
    out.d1[1] = s1.apply(base_j, j, g.nx, sj);
    if (order == 2) {
        out.d2(0, 0) = s2.apply(base_i, i, g.nx, si);
        out.d2(1, 1) = s2.apply(base_j, j, g.nx, sj);
        // mixed derivative: first-derivative stencil in x2 applied to the
        // first-derivative stencil in x1
        double acc = 0.0;
        for (int o = -s1.half; o <= s1.half; ++o) {
            int jj = g.wrap_x(j + o);
            const double* col = f.h.data() + static_cast<long>(jj) * g.ntheta + k;
            acc += s1.w[o + s1.half] * s1.apply(col, i, g.nx, si);
        }
        out.d2(0, 1) = out.d2(1, 0) = acc;
    }
    return out;
}

// --- GridNorm -------------------------------------------------------------

GridNorm::GridNorm(const SphereBundleField& field, Exec exec) : field_(&field) {
    const TorusGrid& g = field.grid;
    const double dth = g.dtheta();
    for (int m = 1; m <= 4; ++m) theta_st_[m] = CenteredStencil(m, m <= 2 ? 4 : 5, dth);
    x_st1_ = CenteredStencil(1, 2, g.dx());

    dth_[0] = field.h;
    for (int m = 1; m <= 4; ++m) dth_[m].assign(g.sites(), 0.0);
    for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 4; ++m) dxdth_[l][m].assign(g.sites(), 0.0);

    const long nrows = static_cast<long>(g.nx) * g.nx;
    parallel_for(exec, nrows, [&](long row) {
        const double* src = field.h.data() + row * g.ntheta;
        for (int m = 1; m <= 4; ++m) {
            double* dst = dth_[m].data() + row * g.ntheta;
            for (int k = 0; k < g.ntheta; ++k) dst[k] = theta_st_[m].apply(src, k, g.ntheta, 1);
        }
    });
    const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(g.nx) * g.ntheta;
    const std::ptrdiff_t sj = g.ntheta;
    parallel_for(exec, g.sites(), [&](long idx) {
        int k = static_cast<int>(idx % g.ntheta);
        long row = idx / g.ntheta;
        int j = static_cast<int>(row % g.nx);
        int i = static_cast<int>(row / g.nx);
        for (int m = 0; m < 4; ++m) {
            const double* tab = dth_[m].data();
            dxdth_[0][m][idx] = x_st1_.apply(tab + static_cast<long>(j) * sj + k, i, g.nx, si);
            dxdth_[1][m][idx] = x_st1_.apply(tab + static_cast<long>(i) * si + k, j, g.nx, sj);
        }
    });
}

void GridNorm::nearest_site(const Vec2& x, int& i, int& j) const {
    const TorusGrid& g = field_->grid;
    i = g.wrap_x(static_cast<int>(std::lround(x[0] / g.dx())));
    j = g.wrap_x(static_cast<int>(std::lround(x[1] / g.dx())));
}

namespace {

// Normalized barycentric weights of one periodic axis; an on-node coordinate
// collapses to a single unit entry so the nodal value is returned exactly.
struct AxisWeights {
    int node = -1;  // >= 0: exact node index
    std::vector<double> w;

    void build(int n, double spacing, double coord) {
        const double two_pi = 2.0 * M_PI;
        coord -= two_pi * std::floor(coord / two_pi);
        double pos = coord / spacing;
        int near = static_cast<int>(std::lround(pos));
        if (std::abs(pos - near) < 1e-9) {
            node = near % n;
            return;
        }
        w.resize(n);
        double den = 0.0;
        for (int j = 0; j < n; ++j) {
            double a = 0.5 * (coord - j * spacing);
            double wj = ((j & 1) ? -1.0 : 1.0) / std::tan(a);
            w[j] = wj;
            den += wj;
        }
        for (int j = 0; j < n; ++j) w[j] /= den;
    }
};

}  // namespace

double GridNorm::series(int l, int m, const Vec2& x, double theta) const {
    const TorusGrid& g = field_->grid;
    const std::vector<double>& tab = (l < 0) ? dth_[m] : dxdth_[l][m];
    AxisWeights wi, wj, wk;
    wi.build(g.nx, g.dx(), x[0]);
    wj.build(g.nx, g.dx(), x[1]);
    wk.build(g.ntheta, g.dtheta(), theta);
    const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(g.nx) * g.ntheta;
    const std::ptrdiff_t sj = g.ntheta;
    auto theta_sum = [&](const double* row) {
        if (wk.node >= 0) return row[wk.node];
        double acc = 0.0;
        for (int k = 0; k < g.ntheta; ++k) acc += wk.w[k] * row[k];
        return acc;
    };
    auto x2_sum = [&](int ii) {
        const double* base = tab.data() + ii * si;
        if (wj.node >= 0) return theta_sum(base + wj.node * sj);
        double acc = 0.0;
        for (int jj = 0; jj < g.nx; ++jj) acc += wj.w[jj] * theta_sum(base + jj * sj);
        return acc;
    };
    if (wi.node >= 0) return x2_sum(wi.node);
    double acc = 0.0;
    for (int ii = 0; ii < g.nx; ++ii) acc += wi.w[ii] * x2_sum(ii);
    return acc;
}

namespace {

constexpr double kInvFact[5] = {1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0};

// F^2 = (y1^2 + y2^2) * P(atan2(y2,y1)) in jet arithmetic, where P is the
// truncated Taylor polynomial of the angular trace about theta0. Evaluated
// exactly at theta0 this reproduces the polar chain rule to `order`.
template <class T>
T polar_f2(const double* hm, int order, double theta0, const T y[2]) {
    T r2 = y[0] * y[0] + y[1] * y[1];
    T dt = atan2(y[1], y[0]) - theta0;
    T p = T(hm[order] * kInvFact[order]);
    for (int m = order - 1; m >= 0; --m) p = p * dt + hm[m] * kInvFact[m];
    return r2 * p;
}

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

double GridNorm::f2(const Vec2& x, const Vec2& y) const {
    if (y[0] == 0.0 && y[1] == 0.0) throw ZeroVectorError("f2 at y = 0");
    double theta = std::atan2(y[1], y[0]);
    double h0 = series(-1, 0, x, theta);
    return (y[0] * y[0] + y[1] * y[1]) * h0;
}

FiberDerivs GridNorm::fiber(const Vec2& x, const Vec2& y, int order) const {
    if (y[0] == 0.0 && y[1] == 0.0) throw ZeroVectorError("fiber derivatives at y = 0");
    double theta0 = std::atan2(y[1], y[0]);
    double hm[5] = {0, 0, 0, 0, 0};
    int ord = std::max(order, 2);
    for (int m = 0; m <= ord; ++m) hm[m] = series(-1, m, x, theta0);
    J4 ys[2] = {SeedAll<J4>::make(y[0], 0), SeedAll<J4>::make(y[1], 1)};
    J4 r = polar_f2(hm, ord, theta0, ys);

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

BaseDerivs GridNorm::base_derivs(const Vec2& x, const Vec2& y) const {
    if (y[0] == 0.0 && y[1] == 0.0) throw ZeroVectorError("base derivatives at y = 0");
    double theta0 = std::atan2(y[1], y[0]);
    J3 ys[2] = {SeedAll<J3>::make(y[0], 0), SeedAll<J3>::make(y[1], 1)};
    BaseDerivs out;
    for (int l = 0; l < 2; ++l) {
        double gm[4];
        for (int m = 0; m <= 3; ++m) gm[m] = series(l, m, x, theta0);
        J3 r = polar_f2(gm, 3, theta0, ys);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                out.dg_dx(l, i, j) = 0.5 * value_of(r.d[i].d[j]);
                for (int k = 0; k < 2; ++k)
                    out.d2g_dxdy(l, k, i, j) = 0.5 * r.d[i].d[j].d[k];
            }
    }
    return out;
}

double GridNorm::indicatrix_area(const Vec2& x) const {
    const TorusGrid& g = field_->grid;
    double acc = 0.0;
    int i, j;
    double pi0 = x[0] / g.dx(), pj0 = x[1] / g.dx();
    nearest_site(x, i, j);
    bool on_node = std::abs(pi0 - std::lround(pi0)) < 1e-9 &&
                   std::abs(pj0 - std::lround(pj0)) < 1e-9;
    for (int k = 0; k < g.ntheta; ++k) {
        double h = on_node ? field_->at(i, j, k) : series(-1, 0, x, g.theta(k));
        if (!(h > 0.0)) throw ConvexityError("indicatrix_area: nonpositive F^2 sample");
        acc += 1.0 / h;
    }
    return 0.5 * acc * g.dtheta();
}

FiberDerivs GridNorm::y_derivatives(int i, int j, const Vec2& y, int order) const {
    return fiber(field_->grid.x(i, j), y, order);
}

BaseDerivs GridNorm::base_derivs_at(int i, int j, const Vec2& y) const {
    return base_derivs(field_->grid.x(i, j), y);
}

}  // namespace ffl
