#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ffl/evolution.hpp"

namespace ffl {

// n theta^2/t + n theta^3 C1/(theta-1) + n^{3/2} theta^2 sqrt(C2),
// C1 = K1, C2 = max{K1^2, K2^2}. Requires theta > 1, t > 0, K1, K2 >= 0.
double harnack_bound(int n, double theta, double t, double k1, double k2);

// Corollary envelope constant: C(n,eps) = 4 n eps^2/(2 eps - 1) + 2 n^{3/2} eps.
double corollary_constant(int n, double eps);

struct HarnackCheckEntry {
    double theta = 0.0;
    double t = 0.0;
    double max_lhs = 0.0;  // max over mask of F^2(grad f) - theta d_t f
    double bound = 0.0;
    double margin = 0.0;  // bound + slack - max_lhs (>= 0 means pass)
    bool ok = false;
};

struct HarnackReport {
    double k1 = 0.0, k2 = 0.0;
    double slack = 0.0;
    std::vector<HarnackCheckEntry> entries;
    bool all_ok = true;

    void save_json(const std::string& path) const;
    void save_csv(const std::string& path) const;
};

// Checks the differential estimate at every interior snapshot (d_t f by
// centered snapshot differences; trajectory endpoints excluded) on the
// gradient mask, for each theta. Slack absorbs the discretization error:
// 10 (dt + dx^2) (1 + max|f| + max F^2(grad f)).
HarnackReport differential_harnack_check(const FlowTrajectory& traj,
                                         const std::vector<double>& thetas,
                                         Exec exec = Exec::Parallel);

// Max-over-mask residual of the parabolic equality for sigma = t d_t f at
// interior snapshot k (needs k in [2, count-3] for the time stencils):
// Delta^V sigma - d_t sigma + sigma/t + 2 D sigma(grad f)
//   = t { -2 Ric^{ij} f_i f_j - 2 Ric^{kl} f_{kl} }.
double sigma_identity_residual(const FlowTrajectory& traj, size_t k, Exec exec = Exec::Parallel);

// Worst (most negative) value over the mask of LHS - RHS of the key
// inequality for alpha = t(F^2(grad f) - theta d_t f) at snapshot k:
// Delta^V alpha + 2 D alpha(grad f) - d_t alpha
//   >= -alpha/t + (t/n)(F^2 - d_t f)^2 - 2 t theta C1 F^2 - t theta^2 n^2 C2.
double alpha_inequality_residual(const FlowTrajectory& traj, size_t k, double theta,
                                 Exec exec = Exec::Parallel);

struct IntegratedCheck {
    double lhs = 0.0;  // u(x, t1)
    double rhs = 0.0;  // Harnack majorant at (y, t2)
    double path_energy = 0.0;
    bool ok = false;
};

// Integrated Harnack between grid sites a (at snapshot ka) and b (at
// snapshot kb > ka) along the straight periodic chart segment.
IntegratedCheck integrated_harnack_check(const FlowTrajectory& traj, std::pair<int, int> a,
                                         size_t ka, std::pair<int, int> b, size_t kb,
                                         double eps, int nquad = 64);

}  // namespace ffl
