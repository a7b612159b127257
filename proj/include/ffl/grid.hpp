#pragma once

#include <string>
#include <vector>

#include "ffl/fd.hpp"
#include "ffl/linalg.hpp"
#include "ffl/norm.hpp"
#include "ffl/parallel.hpp"

namespace ffl {

// Periodic grid on the flat-chart square torus [0,2pi)^2 with an angular
// fiber grid; all three axes are periodic with uniform spacing.
struct TorusGrid {
    int nx = 64;
    int ntheta = 64;

    TorusGrid() = default;
    TorusGrid(int nx_, int ntheta_);

    double dx() const { return 2.0 * M_PI / nx; }
    double dtheta() const { return 2.0 * M_PI / ntheta; }
    double x1(int i) const { return i * dx(); }
    double x2(int j) const { return j * dx(); }
    double theta(int k) const { return k * dtheta(); }
    Vec2 x(int i, int j) const { return {x1(i), x2(j)}; }
    long sites() const { return static_cast<long>(nx) * nx * ntheta; }
    int wrap_x(int i) const { return ((i % nx) + nx) % nx; }
    int wrap_t(int k) const { return ((k % ntheta) + ntheta) % ntheta; }

    bool operator==(const TorusGrid&) const = default;
};

// Angular trace of F^2 on the sphere bundle: h[i,j,k] = F^2(x_ij, e(theta_k)).
// By 2-homogeneity this determines F^2 on the whole fiber.
struct SphereBundleField {
    TorusGrid grid;
    double time = 0.0;
    std::vector<double> h;

    SphereBundleField() = default;
    explicit SphereBundleField(const TorusGrid& g, double t = 0.0)
        : grid(g), time(t), h(g.sites(), 0.0) {}

    long idx(int i, int j, int k) const {
        return (static_cast<long>(i) * grid.nx + j) * grid.ntheta + k;
    }
    double& at(int i, int j, int k) { return h[idx(i, j, k)]; }
    double at(int i, int j, int k) const { return h[idx(i, j, k)]; }

    void save(const std::string& path) const;
    static SphereBundleField load(const std::string& path);
    void export_csv(const std::string& path) const;
};

// Samples an analytic norm on the bundle grid, verifying F3 at every sample.
SphereBundleField sample_norm(const Norm& n, const TorusGrid& grid);

// Base derivatives of h at a site by 4th-order periodic stencils.
// order 1: (dh/dx1, dh/dx2); order 2 fills the symmetric second-derivative
// matrix as well.
struct HBaseDerivs {
    Vec2 d1;
    Mat2 d2;
};
HBaseDerivs x_derivatives(const SphereBundleField& f, int i, int j, int k, int order);

// Scalar field on the x-grid (heat solutions, sigma, residual maps).
struct ScalarField {
    int nx = 0;
    double time = 0.0;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(int n, double t = 0.0)
        : nx(n), time(t), v(static_cast<size_t>(n) * n, 0.0) {}

    long idx(int i, int j) const { return static_cast<long>(i) * nx + j; }
    double& at(int i, int j) { return v[idx(i, j)]; }
    double at(int i, int j) const { return v[idx(i, j)]; }

    void save(const std::string& path) const;
    static ScalarField load(const std::string& path);
};

// Norm interface over a sampled field. Construction precomputes the angular
// derivative tables (8th-order stencils) and their base derivatives
// (4th-order); queries combine them with the exact radial dependence through
// the same jet machinery the analytic norms use. Base-derivative queries snap
// to the nearest x node; plain F^2 accepts arbitrary x via trigonometric
// interpolation.
class GridNorm final : public Norm {
  public:
    explicit GridNorm(const SphereBundleField& field, Exec exec = Exec::Parallel);

    double f2(const Vec2& x, const Vec2& y) const override;
    FiberDerivs fiber(const Vec2& x, const Vec2& y, int order) const override;
    BaseDerivs base_derivs(const Vec2& x, const Vec2& y) const override;
    double x_fd_step() const override { return field_->grid.dx(); }
    bool x_step_is_grid() const override { return true; }
    double indicatrix_area(const Vec2& x) const override;

    const SphereBundleField& field() const { return *field_; }
    const TorusGrid& grid() const { return field_->grid; }

    // Fiber derivatives with the basepoint given as a grid site.
    FiberDerivs y_derivatives(int i, int j, const Vec2& y, int order) const;
    BaseDerivs base_derivs_at(int i, int j, const Vec2& y) const;

    // theta-derivative tables of h (m = 0..4) and of dh/dx_l (m = 0..3).
    double table_h(int m, long idx) const { return dth_[m][idx]; }
    double table_dxh(int l, int m, long idx) const { return dxdth_[l][m][idx]; }

  private:
    const SphereBundleField* field_;
    std::vector<double> dth_[5];
    std::vector<double> dxdth_[2][4];
    CenteredStencil theta_st_[5];  // index = derivative order, [0] unused
    CenteredStencil x_st1_;

    void nearest_site(const Vec2& x, int& i, int& j) const;
    // m-th theta derivative of h (l = -1) or of dh/dx_l at (x, theta).
    double series(int l, int m, const Vec2& x, double theta) const;
};

}  // namespace ffl
