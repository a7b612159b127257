#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ffl/errors.hpp"
#include "ffl/evolution.hpp"
#include "ffl/geometry.hpp"
#include "ffl/harnack.hpp"
#include "ffl/norm.hpp"

using namespace ffl;

namespace {

RunConfig base_config(const std::string& norm, int nx, int nt, double T) {
    RunConfig cfg;
    cfg.norm.name = norm;
    if (norm == "riemannian_diag") cfg.norm.params = {{"a", 4.0}, {"b", 1.0}};
    if (norm == "riemannian_conformal") cfg.norm.params = {{"a", 0.1}};
    if (norm == "quartic") cfg.norm.params = {{"eps", 0.1}};
    cfg.grid.nx = nx;
    cfg.grid.ntheta = nt;
    cfg.time.T = T;
    cfg.time.snap_every = 1;
    cfg.heat.u0 = "cos_x1";
    cfg.heat.amplitude = 0.5;
    return cfg;
}

// dt_snap-coarsened view of a trajectory: every 2nd snapshot.
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

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double r = 0.0;
    for (size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
    return r;
}

}  // namespace

TEST_CASE("flat norms are fixed points of the flow") {
    for (const char* name : {"euclidean", "quartic"}) {
        auto n0 = std::string(name) == "euclidean"
                      ? AnalyticNorm::from_catalog("euclidean", {})
                      : AnalyticNorm::from_catalog("quartic", {0.1});
        auto f = sample_norm(n0, TorusGrid(24, 16));
        auto ref = f.h;
        GridNorm gn(f, Exec::Serial);
        double dt = dt_max(gn, Exec::Serial);
        auto cur = f;
        for (int s = 0; s < 100; ++s) cur = frf_step(cur, dt, Exec::Serial);
        double drift = sup_diff(cur.h, ref);
        if (std::string(name) == "euclidean")
            CHECK(drift <= 1e-10);
        else
            CHECK(drift <= 1e-8);
    }
}

TEST_CASE("dt_max tracks the metric anisotropy") {
    auto fe = sample_norm(AnalyticNorm::from_catalog("euclidean", {}), TorusGrid(32, 16));
    GridNorm ne(fe, Exec::Serial);
    double dx = fe.grid.dx();
    CHECK(dt_max(ne, Exec::Serial) == doctest::Approx(0.2 * dx * dx).epsilon(1e-10));

    auto fd = sample_norm(AnalyticNorm::from_catalog("riemannian_diag", {4.0, 1.0}),
                          TorusGrid(32, 16));
    GridNorm nd(fd, Exec::Serial);
    CHECK(dt_max(nd, Exec::Serial) == doctest::Approx(0.2 * dx * dx * 0.25).epsilon(1e-6));
}

TEST_CASE("metric evolution follows -2 Ric_ij") {
    auto c = AnalyticNorm::from_catalog("riemannian_conformal", {0.1});
    auto f0 = sample_norm(c, TorusGrid(32, 16));
    std::vector<std::pair<int, int>> sites = {{3, 5}, {11, 20}, {17, 2}, {25, 29}, {8, 14}};
    Vec2 y{0.8, 0.6};

    double res[2];
    for (int lvl = 0; lvl < 2; ++lvl) {
        double dt = 2e-3 / (1 << lvl);
        auto f1 = frf_step(f0, dt, Exec::Serial);
        auto f2 = frf_step(f1, dt, Exec::Serial);
        GridNorm n0(f0, Exec::Serial), n1(f1, Exec::Serial), n2(f2, Exec::Serial);
        auto ric = ricci_field(n1, Exec::Serial);
        auto akb = akbarzadeh_field(n1, ric, Exec::Serial);
        double worst = 0.0;
        for (auto [i, j] : sites) {
            Vec2 x = f0.grid.x(i, j);
            Mat2 dg = (1.0 / (2.0 * dt)) *
                      (fundamental_tensor(n2, x, y) - fundamental_tensor(n0, x, y));
            // compare against the Akbarzadeh tensor at the e(theta(y)) node scale
            Mat2 want = -2.0 * akbarzadeh_ricci(n1, x, y);
            worst = std::max(worst, max_abs(dg - want));
        }
        res[lvl] = worst;
    }
    CHECK(res[0] <= 1e-3);
    CHECK(res[1] <= res[0] + 1e-10);
}

TEST_CASE("static heat runs match separable exact solutions") {
    for (const char* name : {"euclidean", "riemannian_diag"}) {
        auto cfg = base_config(name, 24, 16, 0.5);
        cfg.time.snap_every = 8;
        auto traj = run_coupled(cfg, Exec::Serial);
        const auto& last = traj.snaps.back();
        CHECK(last.t == doctest::Approx(0.5).epsilon(1e-12));
        double rate = std::string(name) == "euclidean" ? 1.0 : 0.25;
        double dx = 2.0 * M_PI / 24;
        double dt = traj.dt_snap / cfg.time.snap_every;
        double worst = 0.0;
        for (int i = 0; i < 24; ++i)
            for (int j = 0; j < 24; ++j) {
                double x1 = 2.0 * M_PI * i / 24;
                double exact = 1.0 + 0.5 * std::exp(-rate * last.t) * std::cos(x1);
                worst = std::max(worst, std::abs(last.u.at(i, j) - exact));
            }
        CHECK(worst <= 5.0 * (dt + dx * dx * dx * dx) * 1.5);

        // mass conservation on a static background
        double m0 = traj.stats.front().mass, m1 = traj.stats.back().mass;
        CHECK(std::abs(m1 - m0) <= 1e-8 * std::abs(m0));
        // positivity preserved
        CHECK(traj.stats.back().min_u > 0.0);
    }
}

TEST_CASE("coupled quartic run: stationary metric, conserved mass") {
    auto cfg = base_config("quartic", 24, 16, 0.05);
    cfg.heat.u0 = "bump";
    auto traj = run_coupled(cfg, Exec::Serial);
    CHECK(sup_diff(traj.snaps.back().field.h, traj.snaps.front().field.h) <= 1e-8);
    CHECK(traj.stats.back().k1 <= 1e-6);
    CHECK(traj.stats.back().k2 <= 1e-6);
    double m0 = traj.stats.front().mass;
    CHECK(std::abs(traj.stats.back().mass - m0) <= 1e-8 * std::abs(m0));
    CHECK(traj.stats.back().min_u > 0.0);
}

TEST_CASE("weak-form residual: mass test function and dt refinement") {
    auto cfg = base_config("euclidean", 24, 16, 0.1);
    cfg.time.dt = 4e-3;
    auto traj = run_coupled(cfg, Exec::Serial);
    double r1 = weak_form_residual(traj, Exec::Serial);

    cfg.time.dt = 2e-3;
    auto traj2 = run_coupled(cfg, Exec::Serial);
    double r2 = weak_form_residual(traj2, Exec::Serial);

    CHECK(r1 / std::max(r2, 1e-15) >= 1.8);

    // phi = 1 row of the residual is mass conservation
    double m0 = traj.stats.front().mass;
    CHECK(std::abs(traj.stats.back().mass - m0) <= 1e-8 * std::abs(m0));
}

TEST_CASE("Legendre-transform evolution along the conformal flow") {
    auto cfg = base_config("riemannian_conformal", 32, 16, 0.05);
    cfg.heat.u0 = "cos_x1_cos_x2";
    auto traj = run_coupled(cfg, Exec::Serial);
    std::vector<std::pair<int, int>> sites = {{4, 9}, {13, 27}, {21, 6}, {29, 18}};

    double fine = legendre_evolution_residual(traj, {0.7, -0.4}, sites);
    double coarse = legendre_evolution_residual(thin(traj), {0.7, -0.4}, sites);
    CHECK(coarse / std::max(fine, 1e-15) >= 3.0);  // ~2nd order in dt_snap

    // stationary flows: residual at the round-off floor
    auto cfq = base_config("quartic", 24, 16, 0.02);
    auto tq = run_coupled(cfq, Exec::Serial);
    std::vector<std::pair<int, int>> qsites = {{4, 9}, {13, 21}, {17, 6}, {22, 15}};
    CHECK(legendre_evolution_residual(tq, {0.7, -0.4}, qsites) <= 1e-8);
}

TEST_CASE("gradient-norm evolution identities") {
    auto cfg = base_config("riemannian_conformal", 32, 16, 0.05);
    cfg.heat.u0 = "cos_x1_cos_x2";
    auto traj = run_coupled(cfg, Exec::Serial);
    std::vector<std::pair<int, int>> sites = {{4, 9}, {13, 27}, {21, 6}, {29, 18}};

    auto fine = gradnorm_evolution_residual(traj, sites);
    auto coarse = gradnorm_evolution_residual(thin(traj), sites);
    CHECK(coarse.flow_form / std::max(fine.flow_form, 1e-14) >= 3.0);
    CHECK(coarse.metric_form / std::max(fine.metric_form, 1e-14) >= 3.0);

    // static flat background: both forms collapse to the time-FD error
    auto cfq = base_config("quartic", 24, 16, 0.02);
    auto tq = run_coupled(cfq, Exec::Serial);
    std::vector<std::pair<int, int>> qsites = {{4, 9}, {13, 21}, {17, 6}, {22, 15}};
    auto rq = gradnorm_evolution_residual(tq, qsites);
    CHECK(rq.flow_form <= 1e-4);
    CHECK(rq.metric_form <= 1e-4);
}

TEST_CASE("u0 catalog and config validation") {
    auto u = make_u0("cos_x1", 0.5, 24);
    CHECK(u.at(0, 0) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(u.at(12, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(make_u0("gaussian", 0.5, 24), ConfigError);

    auto cfg = base_config("euclidean", 24, 16, 0.1);
    cfg.heat.amplitude = 1.2;  // u0 would touch zero
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = base_config("nonsense", 24, 16, 0.1);
    CHECK_THROWS_AS(run_coupled(cfg, Exec::Serial), ConfigError);
}

TEST_CASE("trajectory save/load round trip is bit-exact and deterministic") {
    namespace fs = std::filesystem;
    auto cfg = base_config("quartic", 16, 16, 0.02);
    cfg.time.snap_every = 2;
    auto t1 = run_coupled(cfg, Exec::Serial);
    auto t2 = run_coupled(cfg, Exec::Serial);
    REQUIRE(t1.snaps.size() == t2.snaps.size());
    for (size_t k = 0; k < t1.snaps.size(); ++k) {
        CHECK(t1.snaps[k].field.h == t2.snaps[k].field.h);
        CHECK(t1.snaps[k].u.v == t2.snaps[k].u.v);
    }

    std::string dir = "/tmp/ffl_test_traj";
    fs::remove_all(dir);
    t1.save(dir);
    auto t3 = FlowTrajectory::load(dir);
    REQUIRE(t3.snaps.size() == t1.snaps.size());
    for (size_t k = 0; k < t1.snaps.size(); ++k) {
        CHECK(t3.snaps[k].field.h == t1.snaps[k].field.h);
        CHECK(t3.snaps[k].u.v == t1.snaps[k].u.v);
        CHECK(t3.snaps[k].t == doctest::Approx(t1.snaps[k].t).epsilon(1e-12));
    }

    // identical configs produce byte-identical output directories
    std::string dir2 = "/tmp/ffl_test_traj2";
    fs::remove_all(dir2);
    t2.save(dir2);
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream a(e.path(), std::ios::binary);
        std::ifstream b(fs::path(dir2) / e.path().filename(), std::ios::binary);
        std::string sa((std::istreambuf_iterator<char>(a)), {});
        std::string sb((std::istreambuf_iterator<char>(b)), {});
        CHECK(sa == sb);
    }
    fs::remove_all(dir);
    fs::remove_all(dir2);
}
