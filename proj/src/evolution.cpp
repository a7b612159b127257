#include "ffl/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "ffl/errors.hpp"
#include "ffl/geometry.hpp"
#include "json.hpp"

namespace ffl {

namespace {

Vec2 unit(double theta) { return {std::cos(theta), std::sin(theta)}; }

std::vector<double> catalog_params(const RunConfig& cfg) {
    const auto& p = cfg.norm.params;
    auto get = [&](const char* k, double dflt) {
        auto it = p.find(k);
        return it == p.end() ? dflt : it->second;
    };
    if (cfg.norm.name == "riemannian_diag") return {get("a", 4.0), get("b", 1.0)};
    if (cfg.norm.name == "riemannian_conformal") return {get("a", 0.1)};
    if (cfg.norm.name == "quartic") return {get("eps", 0.1)};
    return {};
}

void check_field(const SphereBundleField& f, Exec exec, const char* stage) {
    for (double v : f.h)
        if (!(v > 0.0) || !std::isfinite(v))
            throw FlowDegenerationError(std::string("F^2 lost positivity during ") + stage +
                                        " at t=" + std::to_string(f.time));
    GridNorm n(f, exec);
    MetricRange r = metric_eigen_range(n, exec);
    if (!(r.lambda_min > 0.0))
        throw FlowDegenerationError(std::string("F3 broke down during ") + stage + " at t=" +
                                    std::to_string(f.time) +
                                    " (lambda_min=" + std::to_string(r.lambda_min) + ")");
}

}  // namespace

// The discrete Ricci operator couples base and fiber oscillations with gain
// ~ c (m1^2+m2^2) q^2 for the (m1,m2;q) trigonometric mode, which exceeds the
// dx^2-based CFL once q is large. Physical catalog trajectories carry no
// content there (Riemannian metrics are fiber-degree 0, Minkowski norms are
// base-constant), so the flow right-hand side is damped spectrally on that
// mixed corner: rhat *= 1/(1 + dt c (m1^2+m2^2) q^2). This caps the effective
// step eigenvalue near c/kFilterGain while leaving q = 0 and base-constant
// modes untouched.
constexpr double kFilterGain = 0.5;

namespace {

struct DftPlan {
    int n = 0;
    std::vector<double> cs, sn;  // cos/sin(2 pi r / n), r = 0..n-1
    explicit DftPlan(int n_) : n(n_), cs(n_), sn(n_) {
        for (int r = 0; r < n; ++r) {
            cs[r] = std::cos(2.0 * M_PI * r / n);
            sn[r] = std::sin(2.0 * M_PI * r / n);
        }
    }
    // X_f = sum_k x_k e^{-2 pi i f k / n} (sign < 0) or the conjugate kernel.
    void line(const double* re, const double* im, long stride, int sign, double* out_re,
              double* out_im) const {
        for (int f = 0; f < n; ++f) {
            double ar = 0.0, ai = 0.0;
            for (int k = 0; k < n; ++k) {
                int r = (int)(((long)f * k) % n);
                double c = cs[r], s = sign < 0 ? -sn[r] : sn[r];
                double xr = re[k * stride], xi = im ? im[k * stride] : 0.0;
                ar += xr * c - xi * s;
                ai += xr * s + xi * c;
            }
            out_re[f] = ar;
            out_im[f] = ai;
        }
    }
};

int signed_freq(int f, int n) { return f <= n / 2 ? f : f - n; }

// Max fiber harmonic the flow integrator carries; covers the catalog
// (Riemannian: degree 2; quartic: degree 4).
constexpr int kThetaDegree = 4;

void mixed_mode_filter(std::vector<double>& r, const TorusGrid& g, double dt, Exec exec) {
    const int nx = g.nx, nt = g.ntheta;
    const int nq = 2 * kThetaDegree + 1;  // q = -4..4
    DftPlan px(nx), pt(nt);
    const long nrows = (long)nx * nx;

    // theta harmonics a_q(i,j), q = 0..4 (conjugates implied; field is real)
    std::vector<double> hr((kThetaDegree + 1) * nrows), hi((kThetaDegree + 1) * nrows);
    parallel_for(exec, nrows, [&](long row) {
        const double* src = r.data() + row * nt;
        for (int q = 0; q <= kThetaDegree; ++q) {
            double ar = 0.0, ai = 0.0;
            for (int k = 0; k < nt; ++k) {
                int idx = (int)(((long)q * k) % nt);
                ar += src[k] * pt.cs[idx];
                ai -= src[k] * pt.sn[idx];
            }
            hr[q * nrows + row] = ar / nt;
            hi[q * nrows + row] = ai / nt;
        }
    });

    // per harmonic: 2D base DFT, damp the mixed corner, transform back
    for (int q = 1; q <= kThetaDegree; ++q) {
        double* pr = hr.data() + q * nrows;
        double* pi = hi.data() + q * nrows;
        // forward along j (stride 1) then i (stride nx)
        auto pass = [&](long nlines, long stride, long lbase, int sign) {
            parallel_for(exec, nlines, [&](long l) {
                std::vector<double> or_(nx), oi(nx);
                long b = lbase == 1 ? l * nx : l;
                px.line(pr + b, pi + b, stride, sign, or_.data(), oi.data());
                for (int k = 0; k < nx; ++k) {
                    pr[b + k * stride] = or_[k];
                    pi[b + k * stride] = oi[k];
                }
            });
        };
        pass(nx, 1, 1, -1);
        pass(nx, nx, 0, -1);
        parallel_for(exec, (long)nx, [&](long i) {
            int m1 = signed_freq((int)i, nx);
            for (int j = 0; j < nx; ++j) {
                int m2 = signed_freq(j, nx);
                double mm = (double)m1 * m1 + (double)m2 * m2;
                double fac = 1.0 / (1.0 + dt * kFilterGain * mm * (double)q * q);
                pr[i * nx + j] *= fac;
                pi[i * nx + j] *= fac;
            }
        });
        pass(nx, nx, 0, 1);
        pass(nx, 1, 1, 1);
        double norm = 1.0 / ((double)nx * nx);
        for (long l = 0; l < nrows; ++l) {
            pr[l] *= norm;
            pi[l] *= norm;
        }
    }

    // resynthesize; harmonics above kThetaDegree are dropped
    parallel_for(exec, nrows, [&](long row) {
        double* dst = r.data() + row * nt;
        for (int k = 0; k < nt; ++k) {
            double v = hr[row];
            for (int q = 1; q <= kThetaDegree; ++q) {
                int idx = (int)(((long)q * k) % nt);
                v += 2.0 * (hr[q * nrows + row] * pt.cs[idx] - hi[q * nrows + row] * pt.sn[idx]);
            }
            dst[k] = v;
        }
    });
    (void)nq;
}

}  // namespace

MetricRange metric_eigen_range(const GridNorm& n, Exec exec) {
    const TorusGrid& g = n.grid();
    std::vector<double> lo(g.nx, std::numeric_limits<double>::infinity());
    std::vector<double> hi(g.nx, -std::numeric_limits<double>::infinity());
    parallel_for(exec, g.nx, [&](long i) {
        for (int j = 0; j < g.nx; ++j)
            for (int k = 0; k < g.ntheta; ++k) {
                FiberDerivs fd = n.y_derivatives((int)i, j, unit(g.theta(k)), 2);
                Mat2 gm = 0.5 * fd.d2;
                auto ev = sym_eigenvalues(gm);
                lo[i] = std::min(lo[i], ev[0]);
                hi[i] = std::max(hi[i], ev[1]);
            }
    });
    MetricRange r{lo[0], hi[0]};
    for (int i = 1; i < g.nx; ++i) {
        r.lambda_min = std::min(r.lambda_min, lo[i]);
        r.lambda_max = std::max(r.lambda_max, hi[i]);
    }
    return r;
}

double dt_max(const GridNorm& n, Exec exec) {
    MetricRange r = metric_eigen_range(n, exec);
    if (!(r.lambda_min > 0.0)) throw FlowDegenerationError("metric not positive definite");
    double dx = n.grid().dx();
    return 0.2 * dx * dx * r.lambda_min / r.lambda_max;
}

SphereBundleField frf_step(const SphereBundleField& f, double dt, Exec exec) {
    GridNorm n0(f, exec);
    std::vector<double> ric0 = ricci_field(n0, exec);
    mixed_mode_filter(ric0, f.grid, dt, exec);

    SphereBundleField mid = f;
    mid.time = f.time + 0.5 * dt;
    for (size_t q = 0; q < mid.h.size(); ++q) mid.h[q] = f.h[q] - dt * ric0[q];
    check_field(mid, exec, "flow midpoint");

    GridNorm nm(mid, exec);
    std::vector<double> ric1 = ricci_field(nm, exec);
    mixed_mode_filter(ric1, f.grid, dt, exec);

    SphereBundleField out = f;
    out.time = f.time + dt;
    for (size_t q = 0; q < out.h.size(); ++q) out.h[q] = f.h[q] - 2.0 * dt * ric1[q];
    // damp the state too: a few discrete mixed modes are amplified outright,
    // and the right-hand-side cap alone leaves them slowly growing
    mixed_mode_filter(out.h, f.grid, dt, exec);
    check_field(out, exec, "flow step");
    return out;
}

ScalarField heat_step(const FlowState& s, double dt, double delta_grad_factor, Exec exec) {
    GridNorm n(s.field, exec);
    ScalarField lap = laplacian(n, s.log_sigma, s.u, delta_grad_factor, exec);
    ScalarField out = s.u;
    out.time = s.u.time + dt;
    for (size_t q = 0; q < out.v.size(); ++q) {
        out.v[q] += dt * lap.v[q];
        if (!(out.v[q] > 0.0) || !std::isfinite(out.v[q]))
            throw StepSizeError("heat solution lost positivity at t=" + std::to_string(out.time) +
                                "; reduce dt");
    }
    return out;
}

FlowState make_state(SphereBundleField field, ScalarField u, Exec exec) {
    FlowState s;
    s.t = field.time;
    s.field = std::move(field);
    GridNorm n(s.field, exec);
    s.sigma = bh_measure(n, exec).sigma;
    s.log_sigma = log_field(s.sigma);
    s.u = std::move(u);
    return s;
}

double max_s_curvature(const GridNorm& n, Exec exec) {
    const TorusGrid& g = n.grid();
    MeasureDensity m = bh_measure(n, exec);
    ScalarField lsig = log_field(m.sigma);
    std::vector<double> row_max(g.nx, 0.0);
    parallel_for(exec, g.nx, [&](long i) {
        for (int j = 0; j < g.nx; ++j) {
            Vec2 dls = differential(lsig, (int)i, j);
            for (int k = 0; k < g.ntheta; ++k) {
                Vec2 y = unit(g.theta(k));
                SprayData sp = spray_coefficients(n, g.x((int)i, j), y);
                double s = trace(sp.Gj) - dot(y, dls);
                row_max[i] = std::max(row_max[i], std::abs(s));
            }
        }
    });
    return *std::max_element(row_max.begin(), row_max.end());
}

ScalarField make_u0(const std::string& preset, double amplitude, int nx) {
    ScalarField u(nx, 0.0);
    TorusGrid g(nx, std::max(16, nx));
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nx; ++j) {
            double x1 = g.x1(i), x2 = g.x2(j);
            double p;
            if (preset == "cos_x1")
                p = std::cos(x1);
            else if (preset == "cos_x1_cos_x2")
                p = std::cos(x1) * std::cos(x2);
            else if (preset == "bump")
                p = std::exp(std::cos(x1) + std::cos(x2) - 2.0);
            else
                throw ConfigError("unknown u0 preset '" + preset + "'");
            u.at(i, j) = 1.0 + amplitude * p;
        }
    return u;
}

FlowTrajectory run_coupled(const RunConfig& cfg, Exec exec, ProgressFn progress) {
    cfg.validate();
    TorusGrid grid(cfg.grid.nx, cfg.grid.ntheta);
    AnalyticNorm base = AnalyticNorm::from_catalog(cfg.norm.name, catalog_params(cfg));
    SphereBundleField field = sample_norm(base, grid);
    ScalarField u0 = make_u0(cfg.heat.u0, cfg.heat.amplitude, cfg.grid.nx);
    FlowState state = make_state(std::move(field), std::move(u0), exec);

    double dt = cfg.time.dt;
    {
        GridNorm n0(state.field, exec);
        double s0 = max_s_curvature(n0, exec);
        if (s0 > cfg.tolerances.s_gate)
            throw ConfigError("S-curvature gate violated at t=0: max|S|=" + std::to_string(s0) +
                              " > " + std::to_string(cfg.tolerances.s_gate));
        if (dt <= 0.0) dt = dt_max(n0, exec);
    }
    int nsteps = std::max(1, (int)std::ceil(cfg.time.T / dt - 1e-12));
    dt = cfg.time.T / nsteps;

    FlowTrajectory traj;
    traj.config = cfg;
    traj.dt_snap = dt * cfg.time.snap_every;

    auto record = [&](const FlowState& s) {
        GridNorm n(s.field, exec);
        RicciBounds rb = ricci_bounds(n, s.field.grid.nx >= 48 ? 2 : 1, exec);
        SnapshotStats st;
        st.t = s.t;
        st.min_u = *std::min_element(s.u.v.begin(), s.u.v.end());
        st.max_u = *std::max_element(s.u.v.begin(), s.u.v.end());
        st.mass = integral_dm(s.u, s.sigma);
        st.k1 = rb.k1;
        st.k2 = rb.k2;
        traj.stats.push_back(st);
        traj.snaps.push_back(s);
        double ms = max_s_curvature(n, exec);
        if (ms > cfg.tolerances.s_gate)
            throw ConfigError("S-curvature gate violated at t=" + std::to_string(s.t) +
                              ": max|S|=" + std::to_string(ms));
    };

    record(state);
    for (int step = 1; step <= nsteps; ++step) {
        SphereBundleField next = frf_step(state.field, dt, exec);
        FlowState ns = make_state(std::move(next), state.u, exec);
        // two heat substeps: the Euler Nyquist amplification at the flow CFL
        // is marginally above the stability bound
        ns.u = heat_step(ns, 0.5 * dt, cfg.tolerances.delta_grad, exec);
        ns.u = heat_step(ns, 0.5 * dt, cfg.tolerances.delta_grad, exec);
        ns.t = ns.field.time;
        state = std::move(ns);
        if (step % cfg.time.snap_every == 0 || step == nsteps) record(state);
        if (progress) progress(state.t, step);
    }
    return traj;
}

void FlowTrajectory::save(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json man;
    man["version"] = 1;
    man["config"] = nlohmann::json::parse(dump_config(config));
    man["dt_snap"] = dt_snap;
    man["count"] = snaps.size();
    for (size_t k = 0; k < snaps.size(); ++k) {
        man["times"].push_back(snaps[k].t);
        snaps[k].field.save(dir + "/snap_" + std::to_string(k) + ".field.bin");
        snaps[k].u.save(dir + "/snap_" + std::to_string(k) + ".u.bin");
    }
    std::ofstream mf(dir + "/manifest.json");
    mf << man.dump(2) << "\n";
    std::ofstream cf(dir + "/summary.csv");
    cf << "t,min_u,max_u,mass,K1,K2\n";
    cf.precision(17);
    for (const auto& st : stats)
        cf << st.t << "," << st.min_u << "," << st.max_u << "," << st.mass << "," << st.k1 << ","
           << st.k2 << "\n";
}

FlowTrajectory FlowTrajectory::load(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) throw ConfigError("cannot open " + dir + "/manifest.json");
    nlohmann::json man = nlohmann::json::parse(mf);
    FlowTrajectory traj;
    traj.dt_snap = man["dt_snap"].get<double>();
    traj.config = parse_config("");  // defaults; overwritten below from the manifest
    {
        const auto& jc = man["config"];
        RunConfig c;
        c.norm.name = jc["norm"]["name"].get<std::string>();
        for (const char* p : {"eps", "a", "b"})
            if (jc["norm"].contains(p)) c.norm.params[p] = jc["norm"][p].get<double>();
        c.grid.nx = jc["grid"]["nx"].get<int>();
        c.grid.ntheta = jc["grid"]["ntheta"].get<int>();
        c.time.T = jc["time"]["T"].get<double>();
        c.time.dt = jc["time"]["dt"].get<double>();
        c.time.snap_every = jc["time"]["snap_every"].get<int>();
        c.heat.u0 = jc["heat"]["u0"].get<std::string>();
        c.heat.amplitude = jc["heat"]["amplitude"].get<double>();
        c.tolerances.delta_grad = jc["tolerances"]["delta_grad"].get<double>();
        c.tolerances.s_gate = jc["tolerances"]["s_gate"].get<double>();
        c.harnack.theta = jc["harnack"]["theta"].get<double>();
        c.harnack.eps = jc["harnack"]["eps"].get<double>();
        c.output_dir = jc["output"]["dir"].get<std::string>();
        c.seed = jc["output"]["seed"].get<unsigned>();
        traj.config = c;
    }
    size_t count = man["count"].get<size_t>();
    for (size_t k = 0; k < count; ++k) {
        SphereBundleField f =
            SphereBundleField::load(dir + "/snap_" + std::to_string(k) + ".field.bin");
        ScalarField u = ScalarField::load(dir + "/snap_" + std::to_string(k) + ".u.bin");
        traj.snaps.push_back(make_state(std::move(f), std::move(u)));
    }
    std::ifstream cf(dir + "/summary.csv");
    std::string line;
    std::getline(cf, line);  // header
    while (std::getline(cf, line)) {
        SnapshotStats st;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &st.t, &st.min_u, &st.max_u,
                        &st.mass, &st.k1, &st.k2) == 6)
            traj.stats.push_back(st);
    }
    return traj;
}

namespace {

struct TestFn {
    const char* name;
    double (*phi)(double, double);
    Vec2 (*dphi)(double, double);
};

const TestFn kTestFns[] = {
    {"one", [](double, double) { return 1.0; },
     [](double, double) { return Vec2{0.0, 0.0}; }},
    {"cos_x1", [](double a, double) { return std::cos(a); },
     [](double a, double) { return Vec2{-std::sin(a), 0.0}; }},
    {"sin_x2", [](double, double b) { return std::sin(b); },
     [](double, double b) { return Vec2{0.0, std::cos(b)}; }},
    {"cos_x1_cos_x2", [](double a, double b) { return std::cos(a) * std::cos(b); },
     [](double a, double b) {
         return Vec2{-std::sin(a) * std::cos(b), -std::cos(a) * std::sin(b)};
     }},
    {"bump", [](double a, double b) { return std::exp(std::cos(a) + std::cos(b) - 2.0); },
     [](double a, double b) {
         double p = std::exp(std::cos(a) + std::cos(b) - 2.0);
         return Vec2{-p * std::sin(a), -p * std::sin(b)};
     }},
};

// int Dphi(grad u) dm for one snapshot.
double flux_integral(const FlowState& s, const TestFn& fn, double dgf, Exec exec) {
    GridNorm n(s.field, exec);
    VectorFieldOnMu grad = gradient(n, s.u, dgf, exec);
    const TorusGrid& g = n.grid();
    double dx = g.dx();
    double acc = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nx; ++j) {
            Vec2 dphi = fn.dphi(g.x1(i), g.x2(j));
            acc += dot(dphi, grad.v[grad.idx(i, j)]) * s.sigma.at(i, j);
        }
    return acc * dx * dx;
}

}  // namespace

double weak_form_residual(const FlowTrajectory& traj, Exec exec) {
    if (traj.snaps.size() < 2) throw ConfigError("need at least two snapshots");
    double dgf = traj.config.tolerances.delta_grad;
    const TorusGrid& g = traj.snaps[0].field.grid;
    double dx = g.dx();
    double worst = 0.0;
    for (size_t k = 0; k + 1 < traj.snaps.size(); ++k) {
        const FlowState& a = traj.snaps[k];
        const FlowState& b = traj.snaps[k + 1];
        double dt = b.t - a.t;
        for (const TestFn& fn : kTestFns) {
            double lhs = 0.0;
            for (int i = 0; i < g.nx; ++i)
                for (int j = 0; j < g.nx; ++j) {
                    double du = (b.u.at(i, j) - a.u.at(i, j)) / dt;
                    double sbar = 0.5 * (a.sigma.at(i, j) + b.sigma.at(i, j));
                    lhs += fn.phi(g.x1(i), g.x2(j)) * du * sbar;
                }
            lhs *= dx * dx;
            double flux = 0.5 * (flux_integral(a, fn, dgf, exec) + flux_integral(b, fn, dgf, exec));
            worst = std::max(worst, std::abs(lhs + flux));
        }
    }
    return worst;
}

double legendre_evolution_residual(const FlowTrajectory& traj, const Vec2& omega,
                                   const std::vector<std::pair<int, int>>& sites) {
    if (traj.snaps.size() < 3) throw ConfigError("need at least three snapshots");
    double worst = 0.0;
    for (size_t k = 1; k + 1 < traj.snaps.size(); ++k) {
        GridNorm nm(traj.snaps[k - 1].field, Exec::Serial);
        GridNorm nc(traj.snaps[k].field, Exec::Serial);
        GridNorm np(traj.snaps[k + 1].field, Exec::Serial);
        double dt2 = traj.snaps[k + 1].t - traj.snaps[k - 1].t;
        for (auto [i, j] : sites) {
            Vec2 x = traj.snaps[k].field.grid.x(i, j);
            Vec2 yc = legendre(nc, x, omega);
            Vec2 ym = legendre(nm, x, omega, yc);
            Vec2 yp = legendre(np, x, omega, yc);
            Vec2 rate = (yp - ym) * (1.0 / dt2);
            Mat2 gv = fundamental_tensor(nc, x, yc);
            Mat2 ric = akbarzadeh_ricci(nc, x, yc);
            Vec2 pred = 2.0 * (inverse(gv) * (ric * yc));
            worst = std::max(worst, std::max(std::abs(rate[0] - pred[0]),
                                            std::abs(rate[1] - pred[1])));
        }
    }
    return worst;
}

GradnormResidual gradnorm_evolution_residual(const FlowTrajectory& traj,
                                             const std::vector<std::pair<int, int>>& sites) {
    if (traj.snaps.size() < 3) throw ConfigError("need at least three snapshots");
    GradnormResidual res;
    for (size_t k = 1; k + 1 < traj.snaps.size(); ++k) {
        const FlowState& sm = traj.snaps[k - 1];
        const FlowState& sc = traj.snaps[k];
        const FlowState& sp = traj.snaps[k + 1];
        GridNorm nm(sm.field, Exec::Serial);
        GridNorm nc(sc.field, Exec::Serial);
        GridNorm np(sp.field, Exec::Serial);
        ScalarField fm = log_field(sm.u), fc = log_field(sc.u), fp = log_field(sp.u);
        double dt2 = sp.t - sm.t;
        for (auto [i, j] : sites) {
            Vec2 x = sc.field.grid.x(i, j);
            Vec2 dfm = differential(fm, i, j);
            Vec2 dfc = differential(fc, i, j);
            Vec2 dfp = differential(fp, i, j);

            double f2m = dual_norm(nm, x, dfm);
            double f2p = dual_norm(np, x, dfp);
            double lhs = (f2p * f2p - f2m * f2m) / dt2;

            Vec2 dfdt = (dfp - dfm) * (1.0 / dt2);
            Vec2 y = legendre(nc, x, dfc);
            Mat2 gi = inverse(fundamental_tensor(nc, x, y));
            Vec2 gid = gi * dfc;
            double common = 2.0 * dot(dfdt, gid);

            Mat2 ric = akbarzadeh_ricci(nc, x, y);
            double ric_up = 2.0 * quad_form(ric, gid, gid);
            res.flow_form = std::max(res.flow_form, std::abs(lhs - common - ric_up));

            // d g^{ij}/dt at the frozen covariant differential dfc.
            Vec2 ymm = legendre(nm, x, dfc, y);
            Vec2 ypp = legendre(np, x, dfc, y);
            Mat2 gim = inverse(fundamental_tensor(nm, x, ymm));
            Mat2 gip = inverse(fundamental_tensor(np, x, ypp));
            Mat2 dgi = (1.0 / dt2) * (gip - gim);
            double metric_term = quad_form(dgi, dfc, dfc);
            res.metric_form = std::max(res.metric_form, std::abs(lhs - common - metric_term));
        }
    }
    return res;
}

}  // namespace ffl
