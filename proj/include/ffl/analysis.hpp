#pragma once

#include <cstdint>
#include <vector>

#include "ffl/geometry.hpp"
#include "ffl/grid.hpp"
#include "ffl/measure.hpp"
#include "ffl/norm.hpp"

namespace ffl {

// Finsler gradient field on M_u = {F*(Du) >= delta_grad}. Off-mask nodes
// carry the linear g_{y0}-fallback gradient (y0 = (1,0)) so field stencils
// stay defined; the mask records where the nonlinear value is trustworthy.
struct VectorFieldOnMu {
    int nx = 0;
    std::vector<Vec2> v;          // gradient vectors
    std::vector<Vec2> du;         // raw differentials Du
    std::vector<std::uint8_t> mask;
    double delta_grad = 0.0;

    long idx(int i, int j) const { return static_cast<long>(i) * nx + j; }
    bool on_mask(int i, int j) const { return mask[idx(i, j)] != 0; }
};

// 4th-order periodic differential of a scalar field.
Vec2 differential(const ScalarField& u, int i, int j);

VectorFieldOnMu gradient(const Norm& n, const ScalarField& u,
                         double delta_grad_factor = 1e-7, Exec exec = Exec::Parallel);

// Finsler Hessian at a node with reference vector V: d2u/dxidxj - Gamma^k_ij du/dxk.
Mat2 hessian(const Norm& n, const ScalarField& u, int i, int j, const Vec2& V);

// Distributional Laplacian div_mu(grad u) with mu = sigma_F dx.
ScalarField laplacian(const Norm& n, const ScalarField& log_sigma, const ScalarField& u,
                      double delta_grad_factor = 1e-7, Exec exec = Exec::Parallel);

// |Delta u - (tr_{g_grad u} Hess u - S(grad u))| at one masked node.
double trace_identity_residual(const Norm& n, const ScalarField& log_sigma,
                               const ScalarField& u, int i, int j);

// Linearized Laplacian in the frozen metric g_V: div_mu(g_V^{-1} D phi).
ScalarField linearized_laplacian(const Norm& n, const ScalarField& log_sigma,
                                 const VectorFieldOnMu& V, const ScalarField& phi,
                                 Exec exec = Exec::Parallel);

// Pointwise Bochner identity residual on the mask (0 off-mask):
// Delta^{grad u}(F^2(grad u)/2) - D(Delta u)(grad u) - Ric_inf - |Hess|^2_HS.
struct BochnerResult {
    ScalarField residual;
    std::vector<std::uint8_t> mask;
    double max_residual = 0.0;
};
BochnerResult bochner_residual(const Norm& n, const ScalarField& log_sigma,
                               const ScalarField& u, Exec exec = Exec::Parallel);

// helpers shared with evolution/harnack
ScalarField log_field(const ScalarField& sigma);
double integral_dm(const ScalarField& f, const ScalarField& sigma);

}  // namespace ffl
