#pragma once

#include "ffl/geometry.hpp"
#include "ffl/grid.hpp"
#include "ffl/norm.hpp"

namespace ffl {

// Busemann-Hausdorff density sigma_F against Lebesgue dx1^dx2.
double bh_density(const Norm& n, const Vec2& x);

// sigma_F sampled over the x-grid (the `time` stamp mirrors the field).
struct MeasureDensity {
    ScalarField sigma;
};

MeasureDensity bh_measure(const GridNorm& n, Exec exec = Exec::Parallel);
void export_sigma_csv(const MeasureDensity& m, const std::string& path);

// S(y) = tr G^i_j - y^i d_i ln sigma_F.
double s_curvature(const Norm& n, const Vec2& x, const Vec2& y);

// Ric_infty(v) = Ric(v) + (Psi o gamma)''(0), extended 2-homogeneously;
// gamma is the unit-speed spray geodesic through (x, v/F(v)).
double weighted_ricci_infinity(const Norm& n, const Vec2& x, const Vec2& v);

}  // namespace ffl
