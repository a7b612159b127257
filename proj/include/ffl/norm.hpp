#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ffl/linalg.hpp"

namespace ffl {

// Fiber derivatives of F^2 at a basepoint, filled up to `order`.
struct FiberDerivs {
    int order = 0;
    double f2 = 0.0;
    Vec2 d1;   // dF^2/dy^i
    Mat2 d2;   // d^2F^2/dy^i dy^j   (g = d2/2)
    Ten3 d3;
    Ten4 d4;
};

// First base-derivatives of the metric and the mixed base/fiber derivative,
// inputs to the spray and Chern coefficients.
struct BaseDerivs {
    Ten3 dg_dx;     // (l,i,j) = d g_ij / d x_l
    Ten4 d2g_dxdy;  // (l,k,i,j) = d^2 g_ij / d x_l d y^k
};

// A Finsler structure on the flat-chart 2-torus seen through its F^2
// derivative jets. Analytic catalog norms and sampled sphere-bundle fields
// both implement this surface; every geometric quantity downstream is built
// from it.
class Norm {
  public:
    virtual ~Norm() = default;

    virtual double f2(const Vec2& x, const Vec2& y) const = 0;
    virtual FiberDerivs fiber(const Vec2& x, const Vec2& y, int order) const = 0;
    virtual BaseDerivs base_derivs(const Vec2& x, const Vec2& y) const = 0;

    // Step for finite differencing x-dependent quantities (grid-backed norms
    // report their x spacing so shifted evaluations land on nodes).
    virtual double x_fd_step() const { return 5e-4; }
    virtual bool x_step_is_grid() const { return false; }

    // 1/sigma_F numerator integrand support: indicatrix area via the theta
    // quadrature. Overridden by grid-backed norms to reuse their samples.
    virtual double indicatrix_area(const Vec2& x) const;
};

enum class NormKind { Euclidean, RiemannianDiag, RiemannianConformal, Quartic };

// Closed-form catalog norm; expressions are evaluated in (possibly nested)
// jet arithmetic so fiber derivatives up to order 4 and one base derivative
// are exact.
class AnalyticNorm final : public Norm {
  public:
    AnalyticNorm(NormKind kind, std::vector<double> params);

    double f2(const Vec2& x, const Vec2& y) const override;
    FiberDerivs fiber(const Vec2& x, const Vec2& y, int order) const override;
    BaseDerivs base_derivs(const Vec2& x, const Vec2& y) const override;

    NormKind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }
    std::string name() const;

    // Catalog lookup: "euclidean", "riemannian_diag", "riemannian_conformal",
    // "quartic". Throws ConfigError for unknown names or bad arity.
    static AnalyticNorm from_catalog(const std::string& name,
                                     const std::vector<double>& params);

  private:
    NormKind kind_;
    std::vector<double> params_;
};

// --- norm-core operations -------------------------------------------------

double norm_eval(const Norm& n, const Vec2& x, const Vec2& y);

// g_y = 1/2 * fiber Hessian of F^2; throws ConvexityError if not SPD.
Mat2 fundamental_tensor(const Norm& n, const Vec2& x, const Vec2& y);

// C_y(u,v,w) = 1/4 d^3 F^2 (u,v,w).
double cartan_tensor(const Norm& n, const Vec2& x, const Vec2& y, const Vec2& u,
                     const Vec2& v, const Vec2& w);

// Solves g_y y = omega by Newton with g_y as the exact Jacobian; the optional
// warm start is the previous solution at the same site.
Vec2 legendre(const Norm& n, const Vec2& x, const Vec2& omega,
              std::optional<Vec2> warm_start = std::nullopt);

Vec2 legendre_inverse(const Norm& n, const Vec2& x, const Vec2& y);

double dual_norm(const Norm& n, const Vec2& x, const Vec2& omega);

}  // namespace ffl
