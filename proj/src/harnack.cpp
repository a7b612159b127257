#include "ffl/harnack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ffl/analysis.hpp"
#include "ffl/errors.hpp"
#include "ffl/geometry.hpp"
#include "json.hpp"

namespace ffl {

double harnack_bound(int n, double theta, double t, double k1, double k2) {
    if (n < 2) throw ConfigError("harnack_bound: dimension must be >= 2");
    if (!(theta > 1.0)) throw ConfigError("harnack_bound: theta must exceed 1");
    if (!(t > 0.0)) throw ConfigError("harnack_bound: t must be positive");
    if (k1 < 0.0 || k2 < 0.0) throw ConfigError("harnack_bound: curvature bounds must be >= 0");
    double c1 = k1;
    double c2 = std::max(k1 * k1, k2 * k2);
    double nn = (double)n;
    return nn * theta * theta / t + nn * theta * theta * theta * c1 / (theta - 1.0) +
           std::pow(nn, 1.5) * theta * theta * std::sqrt(c2);
}

double corollary_constant(int n, double eps) {
    if (!(eps > 0.5)) throw ConfigError("corollary_constant: eps must exceed 1/2");
    double nn = (double)n;
    return 4.0 * nn * eps * eps / (2.0 * eps - 1.0) + 2.0 * std::pow(nn, 1.5) * eps;
}

namespace {

struct SnapshotFrame {
    const FlowState* s;
    ScalarField f;           // log u
    VectorFieldOnMu grad;    // grad f
    std::vector<double> f2;  // F^2(grad f) per node (fallback value off-mask)
};

SnapshotFrame make_frame(const FlowState& s, double dgf, Exec exec) {
    SnapshotFrame fr;
    fr.s = &s;
    fr.f = log_field(s.u);
    GridNorm n(s.field, exec);
    fr.grad = gradient(n, fr.f, dgf, exec);
    long nn = (long)s.u.v.size();
    fr.f2.resize(nn);
    const TorusGrid& g = s.field.grid;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nx; ++j) {
            double fs = dual_norm(n, g.x(i, j), fr.grad.du[fr.grad.idx(i, j)]);
            fr.f2[fr.grad.idx(i, j)] = fs * fs;
        }
    return fr;
}

}  // namespace

HarnackReport differential_harnack_check(const FlowTrajectory& traj,
                                         const std::vector<double>& thetas, Exec exec) {
    if (traj.snaps.size() < 3) throw ConfigError("need at least three snapshots");
    double dgf = traj.config.tolerances.delta_grad;
    const TorusGrid& g = traj.snaps[0].field.grid;
    double dx = g.dx();
    double dt_step = traj.dt_snap / traj.config.time.snap_every;

    HarnackReport rep;
    for (const auto& st : traj.stats) {
        rep.k1 = std::max(rep.k1, st.k1);
        rep.k2 = std::max(rep.k2, st.k2);
    }

    std::vector<SnapshotFrame> frames;
    frames.reserve(traj.snaps.size());
    for (const auto& s : traj.snaps) frames.push_back(make_frame(s, dgf, exec));

    double max_f = 0.0, max_f2 = 0.0;
    for (const auto& fr : frames) {
        for (double v : fr.f.v) max_f = std::max(max_f, std::abs(v));
        for (long q = 0; q < (long)fr.f2.size(); ++q)
            if (fr.grad.mask[q]) max_f2 = std::max(max_f2, fr.f2[q]);
    }
    rep.slack = 10.0 * (dt_step + dx * dx) * (1.0 + max_f + max_f2);

    for (double theta : thetas) {
        for (size_t k = 1; k + 1 < traj.snaps.size(); ++k) {
            const SnapshotFrame& fc = frames[k];
            double dt2 = traj.snaps[k + 1].t - traj.snaps[k - 1].t;
            double t = traj.snaps[k].t;
            HarnackCheckEntry e;
            e.theta = theta;
            e.t = t;
            e.max_lhs = -std::numeric_limits<double>::infinity();
            for (long q = 0; q < (long)fc.f2.size(); ++q) {
                if (!fc.grad.mask[q]) continue;
                double dtf = (frames[k + 1].f.v[q] - frames[k - 1].f.v[q]) / dt2;
                e.max_lhs = std::max(e.max_lhs, fc.f2[q] - theta * dtf);
            }
            e.bound = harnack_bound(2, theta, t, rep.k1, rep.k2);
            e.margin = e.bound + rep.slack - e.max_lhs;
            e.ok = e.margin >= 0.0;
            rep.all_ok = rep.all_ok && e.ok;
            rep.entries.push_back(e);
        }
    }
    return rep;
}

void HarnackReport::save_json(const std::string& path) const {
    nlohmann::json j;
    j["K1"] = k1;
    j["K2"] = k2;
    j["slack"] = slack;
    j["all_ok"] = all_ok;
    for (const auto& e : entries)
        j["entries"].push_back({{"theta", e.theta},
                                {"t", e.t},
                                {"max_lhs", e.max_lhs},
                                {"bound", e.bound},
                                {"margin", e.margin},
                                {"ok", e.ok}});
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

void HarnackReport::save_csv(const std::string& path) const {
    std::ofstream out(path);
    out.precision(17);
    out << "theta,t,max_lhs,bound,margin,ok\n";
    for (const auto& e : entries)
        out << e.theta << "," << e.t << "," << e.max_lhs << "," << e.bound << "," << e.margin
            << "," << (e.ok ? 1 : 0) << "\n";
}

namespace {

// sigma = t d_t f at snapshot k, by centered snapshot differences.
ScalarField sigma_field(const FlowTrajectory& traj, size_t k) {
    const ScalarField& um = traj.snaps[k - 1].u;
    const ScalarField& up = traj.snaps[k + 1].u;
    double dt2 = traj.snaps[k + 1].t - traj.snaps[k - 1].t;
    double t = traj.snaps[k].t;
    ScalarField s(um.nx, t);
    for (size_t q = 0; q < s.v.size(); ++q)
        s.v[q] = t * (std::log(up.v[q]) - std::log(um.v[q])) / dt2;
    return s;
}

}  // namespace

double sigma_identity_residual(const FlowTrajectory& traj, size_t k, Exec exec) {
    if (k < 2 || k + 2 >= traj.snaps.size())
        throw ConfigError("sigma_identity_residual: k must leave two snapshots on each side");
    double dgf = traj.config.tolerances.delta_grad;
    const FlowState& sc = traj.snaps[k];
    GridNorm n(sc.field, exec);
    const TorusGrid& g = sc.field.grid;

    ScalarField f = log_field(sc.u);
    VectorFieldOnMu V = gradient(n, f, dgf, exec);
    ScalarField sig = sigma_field(traj, k);
    ScalarField sig_m = sigma_field(traj, k - 1);
    ScalarField sig_p = sigma_field(traj, k + 1);
    double dt2 = traj.snaps[k + 1].t - traj.snaps[k - 1].t;
    double t = sc.t;

    ScalarField lap_sig = linearized_laplacian(n, sc.log_sigma, V, sig, exec);

    double worst = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nx; ++j) {
            long q = V.idx(i, j);
            if (!V.mask[q]) continue;
            Vec2 x = g.x(i, j);
            Vec2 y = V.v[q];
            Vec2 df = V.du[q];
            // d_t sigma = d_t (t d_t f); sigma fields at k-1,k+1 carry their
            // own t factors, so differentiate sigma/t and add back.
            double dts = (sig_p.v[q] / traj.snaps[k + 1].t - sig_m.v[q] / traj.snaps[k - 1].t) /
                             dt2 * t +
                         sig.v[q] / t;
            Vec2 dsig = differential(sig, i, j);
            double lhs = lap_sig.v[q] - dts + sig.v[q] / t + 2.0 * dot(dsig, y);

            Mat2 gv = fundamental_tensor(n, x, y);
            Mat2 gi = inverse(gv);
            Mat2 ric = akbarzadeh_ricci(n, x, y);
            Mat2 ric_up;  // Ric^{ij} = g^{ir} g^{js} Ric_rs
            {
                Mat2 tmp = gi * ric;
                ric_up = tmp * gi;
            }
            double term1 = -2.0 * quad_form(ric_up, df, df);
            Mat2 hess = hessian(n, f, i, j, y);
            double term2 = -2.0 * (ric_up.m[0][0] * hess.m[0][0] + ric_up.m[1][1] * hess.m[1][1] +
                                   2.0 * ric_up.m[0][1] * hess.m[0][1]);
            double rhs = t * (term1 + term2);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    return worst;
}

double alpha_inequality_residual(const FlowTrajectory& traj, size_t k, double theta, Exec exec) {
    if (k < 2 || k + 2 >= traj.snaps.size())
        throw ConfigError("alpha_inequality_residual: k must leave two snapshots on each side");
    double dgf = traj.config.tolerances.delta_grad;
    const int n_dim = 2;
    double k1 = 0.0, k2 = 0.0;
    for (const auto& st : traj.stats) {
        k1 = std::max(k1, st.k1);
        k2 = std::max(k2, st.k2);
    }
    double c1 = k1, c2 = std::max(k1 * k1, k2 * k2);

    // alpha at snapshots k-1, k, k+1 (each needs its own d_t f).
    auto alpha_field = [&](size_t m) {
        const FlowState& s = traj.snaps[m];
        GridNorm n(s.field, exec);
        ScalarField f = log_field(s.u);
        VectorFieldOnMu V = gradient(n, f, dgf, exec);
        ScalarField sig = sigma_field(traj, m);
        const TorusGrid& g = s.field.grid;
        ScalarField a(f.nx, s.t);
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.nx; ++j) {
                long q = V.idx(i, j);
                double fs = dual_norm(n, g.x(i, j), V.du[q]);
                a.v[q] = s.t * fs * fs - theta * sig.v[q];
            }
        return a;
    };

    const FlowState& sc = traj.snaps[k];
    GridNorm n(sc.field, exec);
    const TorusGrid& g = sc.field.grid;
    ScalarField f = log_field(sc.u);
    VectorFieldOnMu V = gradient(n, f, dgf, exec);
    ScalarField am = alpha_field(k - 1), ac = alpha_field(k), ap = alpha_field(k + 1);
    ScalarField sig = sigma_field(traj, k);
    double dt2 = traj.snaps[k + 1].t - traj.snaps[k - 1].t;
    double t = sc.t;

    ScalarField lap_a = linearized_laplacian(n, sc.log_sigma, V, ac, exec);

    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nx; ++j) {
            long q = V.idx(i, j);
            if (!V.mask[q]) continue;
            double f2 = 0.0;
            {
                double fs = dual_norm(n, g.x(i, j), V.du[q]);
                f2 = fs * fs;
            }
            double dtf = sig.v[q] / t;
            double dta = (ap.v[q] - am.v[q]) / dt2;
            Vec2 da = differential(ac, i, j);
            double lhs = lap_a.v[q] + 2.0 * dot(da, V.v[q]) - dta;
            double rhs = -ac.v[q] / t + (t / n_dim) * (f2 - dtf) * (f2 - dtf) -
                         2.0 * t * theta * c1 * f2 - t * theta * theta * n_dim * n_dim * c2;
            worst = std::min(worst, lhs - rhs);
        }
    return worst;
}

IntegratedCheck integrated_harnack_check(const FlowTrajectory& traj, std::pair<int, int> a,
                                         size_t ka, std::pair<int, int> b, size_t kb, double eps,
                                         int nquad) {
    if (!(eps > 0.5)) throw ConfigError("integrated_harnack_check: eps must exceed 1/2");
    if (ka >= kb || kb >= traj.snaps.size())
        throw ConfigError("integrated_harnack_check: need snapshot times t1 < t2");
    const TorusGrid& g = traj.snaps[0].field.grid;
    double t1 = traj.snaps[ka].t, t2 = traj.snaps[kb].t;
    if (!(t1 > 0.0)) throw ConfigError("integrated_harnack_check: t1 must be positive");

    Vec2 xa = g.x(a.first, a.second);  // gamma(1) = x, evaluated at t1
    Vec2 xb = g.x(b.first, b.second);  // gamma(0) = y, evaluated at t2
    Vec2 d = xa - xb;
    for (int c = 0; c < 2; ++c) {  // minimal periodic image
        while (d.c[c] > M_PI) d.c[c] -= 2.0 * M_PI;
        while (d.c[c] < -M_PI) d.c[c] += 2.0 * M_PI;
    }

    std::vector<GridNorm> norms;
    norms.reserve(traj.snaps.size());
    for (const auto& s : traj.snaps) norms.emplace_back(s.field, Exec::Serial);

    // F^2(gamma'(s)) at flow time tau(s), linear interpolation in time.
    auto speed2 = [&](double s) {
        double tau = (1.0 - s) * t2 + s * t1;
        Vec2 xs = xb + d * s;
        size_t lo = 0;
        while (lo + 1 < traj.snaps.size() && traj.snaps[lo + 1].t <= tau + 1e-14) ++lo;
        if (lo + 1 >= traj.snaps.size()) return norms[lo].f2(xs, d);
        double ta = traj.snaps[lo].t, tb = traj.snaps[lo + 1].t;
        double w = (tau - ta) / (tb - ta);
        return (1.0 - w) * norms[lo].f2(xs, d) + w * norms[lo + 1].f2(xs, d);
    };

    double energy = 0.0;  // trapezoid over s in [0,1]; constant path has zero energy
    if (d[0] != 0.0 || d[1] != 0.0) {
        for (int q = 0; q <= nquad; ++q) {
            double s = (double)q / nquad;
            double wq = (q == 0 || q == nquad) ? 0.5 : 1.0;
            energy += wq * speed2(s);
        }
        energy /= nquad;
    }

    double k1 = 0.0, k2 = 0.0;
    for (const auto& st : traj.stats) {
        k1 = std::max(k1, st.k1);
        k2 = std::max(k2, st.k2);
    }
    double c1 = k1, c2 = std::max(k1 * k1, k2 * k2);

    IntegratedCheck res;
    res.path_energy = energy;
    res.lhs = traj.snaps[ka].u.at(a.first, a.second);
    double expo = eps * energy / (2.0 * (t2 - t1)) +
                  corollary_constant(2, eps) * (t2 - t1) * (c1 + std::sqrt(c2));
    res.rhs = traj.snaps[kb].u.at(b.first, b.second) * std::pow(t2 / t1, 4.0 * eps) *
              std::exp(expo);
    double dx = g.dx();
    double dt_step = traj.dt_snap / traj.config.time.snap_every;
    double slack = 10.0 * (dt_step + dx * dx) * (1.0 + std::abs(std::log(res.lhs)) +
                                                 std::abs(std::log(res.rhs)) + energy);
    res.ok = res.lhs <= res.rhs * std::exp(slack);
    return res;
}

}  // namespace ffl
