#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ffl/analysis.hpp"
#include "ffl/config.hpp"
#include "ffl/grid.hpp"
#include "ffl/measure.hpp"

namespace ffl {

struct FlowState {
    SphereBundleField field;
    ScalarField sigma;      // BH density of the current field
    ScalarField log_sigma;
    ScalarField u;          // heat solution
    double t = 0.0;
};

struct SnapshotStats {
    double t = 0.0, min_u = 0.0, max_u = 0.0, mass = 0.0, k1 = 0.0, k2 = 0.0;
};

struct FlowTrajectory {
    std::vector<FlowState> snaps;
    std::vector<SnapshotStats> stats;
    double dt_snap = 0.0;
    RunConfig config;

    void save(const std::string& dir) const;
    static FlowTrajectory load(const std::string& dir);
};

// Smallest eigenvalue ratio of g over the bundle; feeds the CFL bound.
struct MetricRange {
    double lambda_min = 0.0, lambda_max = 0.0;
};
MetricRange metric_eigen_range(const GridNorm& n, Exec exec = Exec::Parallel);

double dt_max(const GridNorm& n, Exec exec = Exec::Parallel);

// One Finsler-Ricci flow step (RK2 midpoint) of the angular trace:
// dh/dt = -2 Ric(x, e(theta)). Re-verifies F3 on the result.
SphereBundleField frf_step(const SphereBundleField& f, double dt, Exec exec = Exec::Parallel);

// Explicit Euler heat step with the given state's metric and measure.
ScalarField heat_step(const FlowState& s, double dt, double delta_grad_factor,
                      Exec exec = Exec::Parallel);

FlowState make_state(SphereBundleField field, ScalarField u, Exec exec = Exec::Parallel);

using ProgressFn = std::function<void(double t, int step)>;

// Operator-split coupled run: flow step, measure recompute, heat step;
// snapshots every config.time.snap_every steps (plus t = 0).
FlowTrajectory run_coupled(const RunConfig& cfg, Exec exec = Exec::Parallel,
                           ProgressFn progress = nullptr);

// Max over the test-function catalog of the distributional heat residual
// |int phi (u_{k+1}-u_k)/dt dm + int Dphi(grad u) dm| at snapshot midpoints.
double weak_form_residual(const FlowTrajectory& traj, Exec exec = Exec::Parallel);

// Lemma: d/dt legendre(omega) = 2 Ric^i_r y^r at fixed omega.
double legendre_evolution_residual(const FlowTrajectory& traj, const Vec2& omega,
                                   const std::vector<std::pair<int, int>>& sites);

// Evolution of F^2(grad f), f = log u: reports the flow form
// (2 D(df/dt)(grad f) + 2 Ric^{ij} f_i f_j) and the metric-derivative form
// (2 g^{ij}[d f/dt]_i f_j + [d g^{ij}/dt] f_i f_j) against the time
// difference.
struct GradnormResidual {
    double flow_form = 0.0;    // Lemma with the Ricci term
    double metric_form = 0.0;  // intermediate identity
};
GradnormResidual gradnorm_evolution_residual(const FlowTrajectory& traj,
                                             const std::vector<std::pair<int, int>>& sites);

// Initial heat data catalog: cos_x1, cos_x1_cos_x2, bump.
ScalarField make_u0(const std::string& preset, double amplitude, int nx);

// Standing hypothesis of the main estimate: max |S| over the grid.
double max_s_curvature(const GridNorm& n, Exec exec = Exec::Parallel);

}  // namespace ffl
