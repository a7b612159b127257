// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Scales are chosen so the whole gate stays within a few minutes on
// one core; convergence checks use reduced grids and short horizons.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "ffl/analysis.hpp"
#include "ffl/evolution.hpp"
#include "ffl/geometry.hpp"
#include "ffl/grid.hpp"
#include "ffl/harnack.hpp"
#include "ffl/measure.hpp"
#include "ffl/norm.hpp"

using namespace ffl;

namespace {

int g_failures = 0;

void report(const char* name, bool ok) {
    std::printf("%s %s\n", ok ? "PASS" : "FAIL", name);
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::mt19937 rng_for(const char* tag) {
    std::seed_seq seq(tag, tag + std::char_traits<char>::length(tag));
    return std::mt19937(seq);
}

Vec2 random_dir(std::mt19937& rng, double lo = 0.3, double hi = 2.5) {
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> rad(lo, hi);
    double t = ang(rng), r = rad(rng);
    return {r * std::cos(t), r * std::sin(t)};
}

double phi_c(const Vec2& x) { return 0.1 * std::cos(x[0]) * std::cos(x[1]); }
Vec2 dphi_c(const Vec2& x) {
    return {-0.1 * std::sin(x[0]) * std::cos(x[1]), -0.1 * std::cos(x[0]) * std::sin(x[1])};
}
double lc_gamma(const Vec2& x, int i, int j, int k) {
    Vec2 d = dphi_c(x);
    double v = 0.0;
    if (i == j) v += d[k];
    if (i == k) v += d[j];
    if (j == k) v -= d[i];
    return v;
}

RunConfig make_cfg(const std::string& norm, int nx, int nt, double T, int snap,
                   const std::string& u0 = "cos_x1") {
    RunConfig cfg;
    cfg.norm.name = norm;
    if (norm == "riemannian_diag") cfg.norm.params = {{"a", 4.0}, {"b", 1.0}};
    if (norm == "riemannian_conformal") cfg.norm.params = {{"a", 0.1}};
    if (norm == "quartic") cfg.norm.params = {{"eps", 0.1}};
    cfg.grid.nx = nx;
    cfg.grid.ntheta = nt;
    cfg.time.T = T;
    cfg.time.snap_every = snap;
    cfg.heat.u0 = u0;
    cfg.heat.amplitude = 0.5;
    if (nx < 24) cfg.tolerances.s_gate = 1e-3;  // coarse grids: discrete S near 2e-4
    return cfg;
}

FlowTrajectory thin(const FlowTrajectory& t) {
    FlowTrajectory out;
    out.dt_snap = 2.0 * t.dt_snap;
    out.config = t.config;
    out.config.time.snap_every *= 2;
    for (size_t k = 0; k < t.snaps.size(); k += 2) {
        out.snaps.push_back(t.snaps[k]);
        out.stats.push_back(t.stats[k]);
    }
    return out;
}

std::vector<AnalyticNorm> catalog() {
    return {AnalyticNorm::from_catalog("euclidean", {}),
            AnalyticNorm::from_catalog("riemannian_diag", {4.0, 1.0}),
            AnalyticNorm::from_catalog("riemannian_conformal", {0.1}),
            AnalyticNorm::from_catalog("quartic", {0.1})};
}

// 1. Riemannian reduction.
void criterion_riemannian_reduction() {
    bool ok = true;
    auto rng = rng_for("acc-riem");
    auto d = AnalyticNorm::from_catalog("riemannian_diag", {4.0, 1.0});
    auto c = AnalyticNorm::from_catalog("riemannian_conformal", {0.1});
    for (int s = 0; s < 40 && ok; ++s) {
        Vec2 x = random_dir(rng), y = random_dir(rng);
        Vec2 u = random_dir(rng), v = random_dir(rng), w = random_dir(rng);
        ok &= std::abs(cartan_tensor(d, x, y, u, v, w)) <= 1e-6;
        ok &= std::abs(cartan_tensor(c, x, y, u, v, w)) <= 1e-6;
        ok &= max_abs(fundamental_tensor(d, x, y) - Mat2::diag(4.0, 1.0)) <= 1e-6;
        Mat2 gc = fundamental_tensor(c, x, y);
        double e2p = std::exp(2.0 * phi_c(x));
        ok &= max_abs(gc - e2p * Mat2::identity()) <= 1e-6;
        Ten3 G = chern_connection(c, x, y);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    ok &= std::abs(G(i, j, k) - lc_gamma(x, i, j, k)) <= 1e-6;
    }
    report("riemannian-reduction", ok);
}

// 2. Homogeneity/Euler identities, 100 random samples per norm.
void criterion_homogeneity() {
    bool ok = true;
    auto rng = rng_for("acc-homog");
    std::uniform_real_distribution<double> lam(0.25, 3.0);
    for (const auto& n : catalog()) {
        for (int s = 0; s < 100 && ok; ++s) {
            Vec2 x = random_dir(rng), y = random_dir(rng);
            double L = lam(rng);
            Vec2 ly = L * y;
            double F = norm_eval(n, x, y);
            ok &= std::abs(norm_eval(n, x, ly) - L * F) <= 1e-8 * (1.0 + L * F);
            Mat2 g = fundamental_tensor(n, x, y);
            ok &= max_abs(fundamental_tensor(n, x, ly) - g) <= 1e-8 * (1.0 + max_abs(g));
            ok &= std::abs(quad_form(g, y, y) - F * F) <= 1e-8 * (1.0 + F * F);
            Vec2 u = random_dir(rng), v = random_dir(rng), w = random_dir(rng);
            double C = cartan_tensor(n, x, y, u, v, w);
            ok &= std::abs(cartan_tensor(n, x, ly, u, v, w) - C / L) <= 1e-8 * (1.0 + std::abs(C));
            ok &= std::abs(cartan_tensor(n, x, y, y, v, w)) <= 1e-8;
            Vec2 G = spray_coefficients(n, x, y).G;
            Vec2 GL = spray_coefficients(n, x, ly).G;
            ok &= std::abs(GL[0] - L * L * G[0]) <= 1e-8 * (1.0 + std::abs(G[0]));
            ok &= std::abs(GL[1] - L * L * G[1]) <= 1e-8 * (1.0 + std::abs(G[1]));
            double S = s_curvature(n, x, y);
            ok &= std::abs(s_curvature(n, x, ly) - L * S) <= 1e-7 * (1.0 + std::abs(S));
        }
    }
    report("homogeneity-euler", ok);
}

// 3. Legendre round trip, 100 random covectors per norm.
void criterion_legendre() {
    bool ok = true;
    auto rng = rng_for("acc-legendre");
    for (const auto& n : catalog()) {
        for (int s = 0; s < 100 && ok; ++s) {
            Vec2 x = random_dir(rng);
            Vec2 om = random_dir(rng);
            Vec2 y = legendre(n, x, om);
            Vec2 res = fundamental_tensor(n, x, y) * y - om;
            ok &= std::max(std::abs(res[0]), std::abs(res[1])) <= 1e-10;
            Vec2 b = legendre_inverse(n, x, y);
            ok &= std::max(std::abs(b[0] - om[0]), std::abs(b[1] - om[1])) <= 1e-10;
        }
    }
    report("legendre-roundtrip", ok);
}

// 4. Flat norms are fixed points of the flow.
void criterion_flat_stationarity() {
    bool ok = true;
    for (const char* name : {"euclidean", "quartic"}) {
        auto n0 = std::string(name) == "euclidean"
                      ? AnalyticNorm::from_catalog("euclidean", {})
                      : AnalyticNorm::from_catalog("quartic", {0.1});
        auto f = sample_norm(n0, TorusGrid(32, 16));
        auto ref = f.h;
        GridNorm gn(f);
        double dt = dt_max(gn);
        auto cur = f;
        for (int s = 0; s < 100; ++s) cur = frf_step(cur, dt);
        double drift = 0.0;
        for (size_t i = 0; i < ref.size(); ++i)
            drift = std::max(drift, std::abs(cur.h[i] - ref[i]));
        ok &= drift <= 1e-8;
    }
    report("flat-stationarity", ok);
}

// 5. FD-in-time of g_ij vs -2 Ric_ij on the conformal flow, 20 sites.
void criterion_ricci_flow_consistency() {
    auto c = AnalyticNorm::from_catalog("riemannian_conformal", {0.1});
    auto f0 = sample_norm(c, TorusGrid(32, 16));
    auto rng = rng_for("acc-flowsites");
    std::vector<std::pair<int, int>> sites;
    std::uniform_int_distribution<int> pick(0, 31);
    for (int s = 0; s < 20; ++s) sites.push_back({pick(rng), pick(rng)});
    Vec2 y{0.8, 0.6};

    auto resid = [&](double dt) {
        auto f1 = frf_step(f0, dt);
        auto f2 = frf_step(f1, dt);
        GridNorm n0(f0), n1(f1), n2(f2);
        double worst = 0.0;
        for (auto [i, j] : sites) {
            Vec2 x = f0.grid.x(i, j);
            Mat2 dg = (1.0 / (2.0 * dt)) *
                      (fundamental_tensor(n2, x, y) - fundamental_tensor(n0, x, y));
            Mat2 want = -2.0 * akbarzadeh_ricci(n1, x, y);
            worst = std::max(worst, max_abs(dg - want));
        }
        return worst;
    };
    // subtract the dt-independent spatial floor before testing the dt order
    double floor_est = resid(5e-4);
    double e1 = resid(8e-3) - floor_est;
    double e2 = resid(4e-3) - floor_est;
    bool ok = e1 > 0.0 && e2 >= 0.0 && e1 / std::max(e2, 1e-14) >= 3.0;
    ok &= resid(4e-3) <= 1e-2;
    report("ricci-flow-consistency", ok);
}

// 6. Heat solver vs separable exact solutions on static backgrounds.
void criterion_heat_accuracy() {
    bool ok = true;
    for (const char* name : {"euclidean", "riemannian_diag"}) {
        int nx = std::string(name) == "euclidean" ? 32 : 24;
        auto cfg = make_cfg(name, nx, 16, 0.5, 8);
        auto traj = run_coupled(cfg);
        const auto& last = traj.snaps.back();
        double rate = std::string(name) == "euclidean" ? 1.0 : 0.25;
        double dx = 2.0 * M_PI / nx;
        double dt = traj.dt_snap / cfg.time.snap_every;
        double worst = 0.0;
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < nx; ++j) {
                double exact =
                    1.0 + 0.5 * std::exp(-rate * last.t) * std::cos(2.0 * M_PI * i / nx);
                worst = std::max(worst, std::abs(last.u.at(i, j) - exact));
            }
        ok &= worst <= 5.0 * (dt + dx * dx * dx * dx) * 1.5;
    }
    report("heat-accuracy", ok);
}

// 7. Weak-form residual and first-order improvement under dt halving.
void criterion_weak_form() {
    auto cfg = make_cfg("euclidean", 24, 16, 0.1, 1);
    cfg.time.dt = 4e-3;
    auto t1 = run_coupled(cfg);
    cfg.time.dt = 2e-3;
    auto t2 = run_coupled(cfg);
    double r1 = weak_form_residual(t1);
    double r2 = weak_form_residual(t2);
    double dx = 2.0 * M_PI / 24;
    bool ok = r1 / std::max(r2, 1e-15) >= 1.8;
    ok &= r1 <= 10.0 * (4e-3 + dx * dx * dx * dx);
    double m0 = t1.stats.front().mass;
    ok &= std::abs(t1.stats.back().mass - m0) <= 1e-6 * std::abs(m0);
    report("weak-form-residual", ok);
}

// 8. Bochner identity: flat accuracy at N = 64, 2nd-order convergence.
void criterion_bochner() {
    auto fill_u = [](int nx) {
        ScalarField u(nx, 0.0);
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < nx; ++j)
                u.at(i, j) = 1.0 + 0.2 * std::sin(2.0 * M_PI * i / nx) *
                                       std::cos(2.0 * M_PI * j / nx);
        return u;
    };
    auto fe = sample_norm(AnalyticNorm::from_catalog("euclidean", {}), TorusGrid(64, 16));
    GridNorm ne(fe);
    auto lse = log_field(bh_measure(ne).sigma);
    bool ok = bochner_residual(ne, lse, fill_u(64)).max_residual <= 1e-5;

    for (const char* name : {"riemannian_conformal", "quartic"}) {
        // quartic is pre-asymptotic at nx=16 (measured 16->32 ratio 1.7, 32->64
        // ratio 5.1), so its refinement pair starts one level higher
        bool quartic = std::string(name) == "quartic";
        double errs[2];
        int ns[2] = {quartic ? 32 : 16, quartic ? 64 : 32};
        for (int k = 0; k < 2; ++k) {
            auto f = sample_norm(AnalyticNorm::from_catalog(name, {0.1}),
                                 TorusGrid(ns[k], quartic ? 32 : 16));
            GridNorm n(f);
            auto ls = log_field(bh_measure(n).sigma);
            errs[k] = bochner_residual(n, ls, fill_u(ns[k])).max_residual;
        }
        ok &= errs[0] / std::max(errs[1], 1e-15) >= 3.5;
    }
    report("bochner-identity", ok);
}

// 9. Legendre/gradient-norm evolution identities along the flow.
void criterion_lemma_evolution(const FlowTrajectory& conf) {
    std::vector<std::pair<int, int>> sites = {{4, 9}, {13, 27}, {21, 6}, {29, 18}};
    auto coarse = thin(conf);
    double lf = legendre_evolution_residual(conf, {0.7, -0.4}, sites);
    double lc = legendre_evolution_residual(coarse, {0.7, -0.4}, sites);
    bool ok = lc / std::max(lf, 1e-14) >= 3.0;
    auto gf = gradnorm_evolution_residual(conf, sites);
    auto gc = gradnorm_evolution_residual(coarse, sites);
    ok &= gc.flow_form / std::max(gf.flow_form, 1e-14) >= 3.0;
    ok &= gc.metric_form / std::max(gf.metric_form, 1e-14) >= 3.0;

    auto tq = run_coupled(make_cfg("quartic", 24, 16, 0.02, 1));
    std::vector<std::pair<int, int>> qsites = {{4, 9}, {13, 21}, {17, 6}, {22, 15}};
    ok &= legendre_evolution_residual(tq, {0.7, -0.4}, qsites) <= 1e-8;
    auto gq = gradnorm_evolution_residual(tq, qsites);
    ok &= gq.flow_form <= 1e-4 && gq.metric_form <= 1e-4;
    report("lemma-evolution-identities", ok);
}

// 10. Sigma identity convergence and the key alpha inequality.
void criterion_sigma_alpha(const FlowTrajectory& mid) {
    auto cfg = make_cfg("riemannian_conformal", 32, 16, 0.24, 2, "cos_x1_cos_x2");
    auto traj = run_coupled(cfg);
    auto t2 = thin(traj), t4 = thin(t2);
    size_t k = traj.snaps.size() / 2;
    double r1 = sigma_identity_residual(traj, k);
    double r2 = sigma_identity_residual(t2, k / 2);
    double r4 = sigma_identity_residual(t4, k / 4);
    // dt_snap error above the fixed spatial floor r1 shrinks by ~4x per halving
    bool ok = (r4 - r1) / std::max(r2 - r1, 1e-14) >= 3.0;
    for (double th : {1.5, 2.0, 4.0})
        ok &= alpha_inequality_residual(mid, mid.snaps.size() / 2, th) >= -1e-4;
    report("sigma-alpha-inequality", ok);
}

// 11. Differential Harnack end to end.
void criterion_differential_harnack(const FlowTrajectory& flat, const FlowTrajectory& mid) {
    auto rf = differential_harnack_check(flat, {1.5, 2.0, 4.0});
    bool ok = rf.all_ok && rf.k1 <= 1e-8 && rf.k2 <= 1e-8;
    for (const auto& e : rf.entries)
        ok &= std::abs(e.bound - 2.0 * e.theta * e.theta / e.t) <= 1e-9 * e.bound;
    auto rc = differential_harnack_check(mid, {1.5, 2.0, 4.0});
    ok &= rc.all_ok && rc.k1 > 0.0;
    report("harnack-differential", ok);
}

// 12. Integrated Harnack (corollary form).
void criterion_integrated_harnack(const FlowTrajectory& flat, const FlowTrajectory& mid) {
    auto ce = integrated_harnack_check(flat, {5, 7}, 2, {5, 7}, flat.snaps.size() - 1, 1.0);
    double t1 = flat.snaps[2].t, t2 = flat.snaps.back().t;
    double envelope = flat.snaps.back().u.at(5, 7) * std::pow(t2 / t1, 4.0);
    bool ok = ce.ok && ce.path_energy <= 1e-12 &&
              std::abs(ce.rhs - envelope) <= 1e-7 * envelope &&
              flat.snaps[2].u.at(5, 7) <= ce.rhs * (1.0 + 1e-12);

    auto rng = rng_for("acc-pairs");
    std::uniform_int_distribution<int> pick(0, 23);
    for (int p = 0; p < 5; ++p) {
        std::pair<int, int> a{pick(rng), pick(rng)}, b{pick(rng), pick(rng)};
        for (double eps : {0.75, 1.0, 2.0})
            ok &= integrated_harnack_check(mid, a, 1, b, mid.snaps.size() - 1, eps).ok;
    }
    report("harnack-integrated", ok);
}

// 13. Determinism: identical configs give byte-identical outputs.
void criterion_determinism() {
    namespace fs = std::filesystem;
    auto cfg = make_cfg("riemannian_conformal", 16, 16, 0.02, 2, "cos_x1_cos_x2");
    auto a = run_coupled(cfg);
    auto b = run_coupled(cfg);
    bool ok = a.snaps.size() == b.snaps.size();
    std::string da = "/tmp/ffl_acc_det_a", db = "/tmp/ffl_acc_det_b";
    fs::remove_all(da);
    fs::remove_all(db);
    a.save(da);
    b.save(db);
    for (const auto& e : fs::directory_iterator(da)) {
        std::ifstream fa(e.path(), std::ios::binary);
        std::ifstream fb(fs::path(db) / e.path().filename(), std::ios::binary);
        std::string sa((std::istreambuf_iterator<char>(fa)), {});
        std::string sb((std::istreambuf_iterator<char>(fb)), {});
        ok &= !sa.empty() && sa == sb;
    }
    fs::remove_all(da);
    fs::remove_all(db);
    report("determinism", ok);
}

}  // namespace

int main() {
    std::setbuf(stdout, nullptr);
    criterion_riemannian_reduction();
    criterion_homogeneity();
    criterion_legendre();
    criterion_flat_stationarity();
    criterion_ricci_flow_consistency();
    criterion_heat_accuracy();
    criterion_weak_form();
    criterion_bochner();

    // shared trajectories for the estimate-level criteria
    auto conf = run_coupled(make_cfg("riemannian_conformal", 32, 16, 0.05, 1, "cos_x1_cos_x2"));
    auto mid = run_coupled(make_cfg("riemannian_conformal", 24, 16, 0.25, 2, "cos_x1_cos_x2"));
    auto flat = run_coupled(make_cfg("euclidean", 24, 16, 0.4, 4, "cos_x1_cos_x2"));

    criterion_lemma_evolution(conf);
    criterion_sigma_alpha(mid);
    criterion_differential_harnack(flat, mid);
    criterion_integrated_harnack(flat, mid);
    criterion_determinism();

    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    return 0;
}
