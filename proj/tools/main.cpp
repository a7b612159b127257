#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include "CLI11.hpp"
#include "ffl/analysis.hpp"
#include "ffl/config.hpp"
#include "ffl/errors.hpp"
#include "ffl/evolution.hpp"
#include "ffl/geometry.hpp"
#include "ffl/harnack.hpp"
#include "ffl/measure.hpp"
#include "ffl/norm.hpp"
#include "ffl/parallel.hpp"
#include "json.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

// exit codes: 0 ok, 1 check failed, 2 bad config/usage, 3 numerical failure
enum { kOk = 0, kCheckFailed = 1, kBadConfig = 2, kNumerical = 3 };

ffl::RunConfig load_or_default(const std::string& path) {
    if (path.empty()) return ffl::parse_config("");
    return ffl::load_config(path);
}

std::vector<double> params_of(const ffl::RunConfig& cfg) {
    const auto& p = cfg.norm.params;
    auto get = [&](const char* k, double d) {
        auto it = p.find(k);
        return it == p.end() ? d : it->second;
    };
    if (cfg.norm.name == "riemannian_diag") return {get("a", 4.0), get("b", 1.0)};
    if (cfg.norm.name == "riemannian_conformal") return {get("a", 0.1)};
    if (cfg.norm.name == "quartic") return {get("eps", 0.1)};
    return {};
}

void write_meta(const std::string& dir, const ffl::RunConfig& cfg) {
    std::filesystem::create_directories(dir);
    nlohmann::json j;
    j["version"] = kVersion;
    j["config"] = nlohmann::json::parse(ffl::dump_config(cfg));
    std::ofstream out(dir + "/run.json");
    out << j.dump(2) << "\n";
}

// "name:p1,p2" -> catalog norm
ffl::AnalyticNorm norm_from_spec(const std::string& spec) {
    std::string name = spec;
    std::vector<double> params;
    if (auto colon = spec.find(':'); colon != std::string::npos) {
        name = spec.substr(0, colon);
        std::string rest = spec.substr(colon + 1);
        size_t pos = 0;
        while (pos < rest.size()) {
            size_t used = 0;
            params.push_back(std::stod(rest.substr(pos), &used));
            pos += used;
            if (pos < rest.size() && rest[pos] == ',') ++pos;
        }
    }
    return ffl::AnalyticNorm::from_catalog(name, params);
}

// point evaluation: g, Cartan sample, spray G^i, Ricci scalar as JSON on stdout
int cmd_tensors_point(const std::string& norm_spec, const std::string& x_spec, double theta) {
    ffl::AnalyticNorm n = norm_from_spec(norm_spec);
    size_t used = 0;
    ffl::Vec2 x;
    x[0] = std::stod(x_spec, &used);
    if (used >= x_spec.size() || x_spec[used] != ',')
        throw ffl::ConfigError("--x expects two comma-separated coordinates");
    x[1] = std::stod(x_spec.substr(used + 1));
    ffl::Vec2 y{std::cos(theta), std::sin(theta)};

    ffl::Mat2 g = ffl::fundamental_tensor(n, x, y);
    double c = ffl::cartan_tensor(n, x, y, {1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0});
    ffl::Vec2 G = ffl::spray_coefficients(n, x, y).G;
    double ric = ffl::ricci_scalar(n, x, y);

    nlohmann::json j;
    j["version"] = kVersion;
    j["norm"] = norm_spec;
    j["x"] = {x[0], x[1]};
    j["theta"] = theta;
    j["F2"] = n.f2(x, y);
    j["g"] = {{g.m[0][0], g.m[0][1]}, {g.m[1][0], g.m[1][1]}};
    j["cartan_sample"] = c;
    j["spray"] = {G[0], G[1]};
    j["ricci_scalar"] = ric;
    std::cout << j.dump(2) << "\n";
    return kOk;
}

int cmd_tensors(const ffl::RunConfig& cfg, ffl::Exec exec) {
    ffl::TorusGrid grid(cfg.grid.nx, cfg.grid.ntheta);
    ffl::AnalyticNorm base = ffl::AnalyticNorm::from_catalog(cfg.norm.name, params_of(cfg));
    ffl::SphereBundleField field = ffl::sample_norm(base, grid);
    ffl::GridNorm n(field, exec);

    write_meta(cfg.output_dir, cfg);
    field.export_csv(cfg.output_dir + "/h.csv");
    ffl::MeasureDensity m = ffl::bh_measure(n, exec);
    ffl::export_sigma_csv(m, cfg.output_dir + "/sigma.csv");

    std::vector<double> ric = ffl::ricci_field(n, exec);
    {
        std::ofstream out(cfg.output_dir + "/ric.csv");
        out.precision(17);
        out << "x1,x2,theta,ric\n";
        for (int i = 0; i < grid.nx; ++i)
            for (int j = 0; j < grid.nx; ++j)
                for (int k = 0; k < grid.ntheta; ++k)
                    out << grid.x1(i) << "," << grid.x2(j) << "," << grid.theta(k) << ","
                        << ric[field.idx(i, j, k)] << "\n";
    }
    ffl::RicciBounds rb = ffl::ricci_bounds(n, grid.nx >= 48 ? 2 : 1, exec);
    double ms = ffl::max_s_curvature(n, exec);
    std::printf("norm=%s grid=%dx%dx%d\n", cfg.norm.name.c_str(), grid.nx, grid.nx, grid.ntheta);
    std::printf("K1=%.6e K2=%.6e max|S|=%.3e\n", rb.k1, rb.k2, ms);
    std::printf("wrote h.csv sigma.csv ric.csv run.json to %s\n", cfg.output_dir.c_str());
    return kOk;
}

int cmd_flow(const ffl::RunConfig& cfg, ffl::Exec exec) {
    write_meta(cfg.output_dir, cfg);
    ffl::FlowTrajectory traj = ffl::run_coupled(cfg, exec, [](double t, int step) {
        if (step % 25 == 0) std::printf("  t=%.5f (step %d)\n", t, step);
    });
    traj.save(cfg.output_dir);
    const auto& st = traj.stats.back();
    std::printf("final t=%.5f min_u=%.6f max_u=%.6f mass=%.8f K1=%.4e K2=%.4e\n", st.t, st.min_u,
                st.max_u, st.mass, st.k1, st.k2);
    std::printf("wrote %zu snapshots to %s\n", traj.snaps.size(), cfg.output_dir.c_str());
    return kOk;
}

int cmd_heat(const ffl::RunConfig& cfg, ffl::Exec exec) {
    // heat on the static initial metric (no flow coupling)
    ffl::TorusGrid grid(cfg.grid.nx, cfg.grid.ntheta);
    ffl::AnalyticNorm base = ffl::AnalyticNorm::from_catalog(cfg.norm.name, params_of(cfg));
    ffl::SphereBundleField field = ffl::sample_norm(base, grid);
    ffl::FlowState s = ffl::make_state(
        std::move(field), ffl::make_u0(cfg.heat.u0, cfg.heat.amplitude, cfg.grid.nx), exec);
    ffl::GridNorm n(s.field, exec);
    double dt = cfg.time.dt > 0.0 ? cfg.time.dt : ffl::dt_max(n, exec);
    int nsteps = std::max(1, (int)std::ceil(cfg.time.T / dt - 1e-12));
    dt = cfg.time.T / nsteps;
    double mass0 = ffl::integral_dm(s.u, s.sigma);
    for (int k = 0; k < nsteps; ++k)
        s.u = ffl::heat_step(s, dt, cfg.tolerances.delta_grad, exec);
    double mass1 = ffl::integral_dm(s.u, s.sigma);
    write_meta(cfg.output_dir, cfg);
    s.u.save(cfg.output_dir + "/u_final.bin");
    std::printf("heat: %d steps, dt=%.3e, mass drift=%.3e\n", nsteps, dt,
                std::abs(mass1 - mass0));
    return kOk;
}

int cmd_verify_harnack(const ffl::RunConfig& cfg, const std::string& traj_dir,
                       std::vector<double> thetas, ffl::Exec exec) {
    ffl::FlowTrajectory traj;
    if (!traj_dir.empty()) {
        traj = ffl::FlowTrajectory::load(traj_dir);
    } else {
        traj = ffl::run_coupled(cfg, exec);
    }
    if (thetas.empty()) thetas = {cfg.harnack.theta, 2.0 * cfg.harnack.eps};
    ffl::HarnackReport rep = ffl::differential_harnack_check(traj, thetas, exec);
    write_meta(cfg.output_dir, traj.config);
    rep.save_json(cfg.output_dir + "/harnack.json");
    rep.save_csv(cfg.output_dir + "/harnack.csv");

    size_t kb = traj.snaps.size() - 1;
    size_t ka = kb / 2 > 0 ? kb / 2 : 1;
    int nx = traj.snaps[0].field.grid.nx;
    ffl::IntegratedCheck ic = ffl::integrated_harnack_check(
        traj, {nx / 4, nx / 3}, ka, {2 * nx / 3, nx / 5}, kb, cfg.harnack.eps);
    std::printf("differential: K1=%.4e K2=%.4e slack=%.3e all_ok=%d\n", rep.k1, rep.k2, rep.slack,
                (int)rep.all_ok);
    std::printf("integrated: u(x,t1)=%.6f majorant=%.6f ok=%d\n", ic.lhs, ic.rhs, (int)ic.ok);
    return (rep.all_ok && ic.ok) ? kOk : kCheckFailed;
}

int cmd_bochner(const ffl::RunConfig& cfg, double tol, ffl::Exec exec) {
    ffl::TorusGrid grid(cfg.grid.nx, cfg.grid.ntheta);
    ffl::AnalyticNorm base = ffl::AnalyticNorm::from_catalog(cfg.norm.name, params_of(cfg));
    ffl::SphereBundleField field = ffl::sample_norm(base, grid);
    ffl::GridNorm n(field, exec);
    ffl::MeasureDensity m = ffl::bh_measure(n, exec);
    ffl::ScalarField lsig = ffl::log_field(m.sigma);
    ffl::ScalarField u = ffl::make_u0(cfg.heat.u0, cfg.heat.amplitude, cfg.grid.nx);
    ffl::BochnerResult br = ffl::bochner_residual(n, lsig, u, exec);
    std::printf("bochner: max residual on mask = %.6e (tol %.1e)\n", br.max_residual, tol);
    return br.max_residual <= tol ? kOk : kCheckFailed;
}

int cmd_selftest(ffl::Exec exec) {
    int fails = 0;
    auto check = [&](bool ok, const char* what) {
        std::printf("%s %s\n", ok ? "PASS" : "FAIL", what);
        if (!ok) ++fails;
    };
    check(std::abs(ffl::harnack_bound(2, 2.0, 1.0, 0.0, 0.0) - 8.0) < 1e-12,
          "flat harnack bound value");
    check(std::abs(ffl::harnack_bound(2, 2.0, 1.0, 1.0, 0.0) - (24.0 + 8.0 * std::sqrt(2.0))) <
              1e-12,
          "curved harnack bound value");
    {
        ffl::AnalyticNorm q = ffl::AnalyticNorm::from_catalog("quartic", {0.1});
        ffl::Vec2 x{0.3, 1.1}, y{0.7, -0.4};
        double f2 = q.f2(x, y);
        double f2s = q.f2(x, y * 3.0);
        check(std::abs(f2s - 9.0 * f2) < 1e-12 * f2s, "2-homogeneity");
        ffl::Vec2 om = ffl::legendre_inverse(q, x, y);
        ffl::Vec2 yy = ffl::legendre(q, x, om);
        check(std::hypot(yy[0] - y[0], yy[1] - y[1]) < 1e-9, "legendre round trip");
    }
    {
        ffl::AnalyticNorm d = ffl::AnalyticNorm::from_catalog("riemannian_diag", {4.0, 1.0});
        check(std::abs(ffl::bh_density(d, {0.0, 0.0}) - 2.0) < 1e-10, "bh density diag(4,1)");
    }
    {
        ffl::TorusGrid grid(16, 16);
        ffl::AnalyticNorm q = ffl::AnalyticNorm::from_catalog("quartic", {0.1});
        ffl::SphereBundleField f = ffl::sample_norm(q, grid);
        ffl::GridNorm n(f, exec);
        double err = std::abs(n.f2({grid.x1(3), grid.x2(5)}, {0.6, 0.8}) -
                              q.f2({grid.x1(3), grid.x2(5)}, {0.6, 0.8}));
        check(err < 1e-10, "grid adapter agrees with analytic norm");
    }
    return fails == 0 ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    ffl::init_threads_from_env();
    CLI::App app{"finsler-flow-lab: Finsler-Ricci flow laboratory on the 2-torus"};
    app.set_version_flag("--version", kVersion);

    std::string config_path, out_override, traj_dir;
    bool serial = false;
    double tol = 1e-4;
    app.add_option("-c,--config", config_path, "TOML run configuration");
    app.add_option("-o,--output", out_override, "override output directory");
    app.add_flag("--serial", serial, "run serial kernels");

    std::string norm_spec, x_spec;
    double theta_pt = 0.0;
    std::vector<double> thetas;
    auto* t = app.add_subcommand("tensors", "export curvature/measure tables for a catalog norm");
    t->add_option("--norm", norm_spec, "catalog norm as name:p1,p2 for point evaluation");
    t->add_option("--x", x_spec, "base point x1,x2 (point evaluation mode)");
    t->add_option("--theta", theta_pt, "fiber angle for the reference vector");
    auto* fl = app.add_subcommand("flow", "run the coupled Finsler-Ricci flow + heat system");
    auto* he = app.add_subcommand("heat", "run heat flow on the static initial metric");
    auto* vh = app.add_subcommand("verify-harnack", "check differential/integrated estimates");
    vh->add_option("--trajectory,--traj", traj_dir, "load a saved trajectory instead of running");
    vh->add_option("--theta", thetas, "Harnack parameter theta > 1 (repeatable)");
    auto* bo = app.add_subcommand("bochner-check", "pointwise Bochner identity residual");
    bo->add_option("--tol", tol, "pass/fail threshold");
    auto* st = app.add_subcommand("selftest", "quick invariant checks");
    // allow -c/--config etc. after the subcommand name
    for (auto* sub : {t, fl, he, vh, bo, st}) sub->fallthrough();
    app.require_subcommand(1);

    CLI11_PARSE(app, argc, argv);
    ffl::Exec exec = serial ? ffl::Exec::Serial : ffl::Exec::Parallel;

    try {
        ffl::RunConfig cfg = load_or_default(config_path);
        if (!out_override.empty()) cfg.output_dir = out_override;
        if (t->parsed()) {
            if (!norm_spec.empty() || !x_spec.empty()) {
                if (norm_spec.empty() || x_spec.empty())
                    throw ffl::ConfigError("point mode needs both --norm and --x");
                return cmd_tensors_point(norm_spec, x_spec, theta_pt);
            }
            return cmd_tensors(cfg, exec);
        }
        if (fl->parsed()) return cmd_flow(cfg, exec);
        if (he->parsed()) return cmd_heat(cfg, exec);
        if (vh->parsed()) return cmd_verify_harnack(cfg, traj_dir, thetas, exec);
        if (bo->parsed()) return cmd_bochner(cfg, tol, exec);
        if (st->parsed()) return cmd_selftest(exec);
    } catch (const ffl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kBadConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kBadConfig;
}
