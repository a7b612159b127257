// Serial vs OpenMP kernel timings on the default-size bundle grid.
#include <chrono>
#include <cstdio>
#include <string>

#include "ffl/evolution.hpp"
#include "ffl/geometry.hpp"
#include "ffl/grid.hpp"
#include "ffl/measure.hpp"
#include "ffl/norm.hpp"
#include "ffl/parallel.hpp"

using Clock = std::chrono::steady_clock;

static double seconds(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

template <class F>
static double timed(F&& f) {
    auto t0 = Clock::now();
    f();
    return seconds(t0, Clock::now());
}

int main(int argc, char** argv) {
    ffl::init_threads_from_env();
    int nx = argc > 1 ? std::stoi(argv[1]) : 64;
    int nt = argc > 2 ? std::stoi(argv[2]) : nx;
    std::printf("grid %dx%dx%d, %d threads\n", nx, nx, nt, ffl::max_threads());

    ffl::AnalyticNorm q = ffl::AnalyticNorm::from_catalog("quartic", {0.1});
    ffl::TorusGrid grid(nx, nt);
    ffl::SphereBundleField field = ffl::sample_norm(q, grid);

    struct Row {
        const char* name;
        double serial, parallel;
    };
    Row rows[4];

    {
        double s = timed([&] { ffl::GridNorm n(field, ffl::Exec::Serial); });
        double p = timed([&] { ffl::GridNorm n(field, ffl::Exec::Parallel); });
        rows[0] = {"table build", s, p};
    }
    ffl::GridNorm n(field, ffl::Exec::Parallel);
    {
        double s = timed([&] { ffl::ricci_field(n, ffl::Exec::Serial); });
        double p = timed([&] { ffl::ricci_field(n, ffl::Exec::Parallel); });
        rows[1] = {"ricci field", s, p};
    }
    {
        double s = timed([&] { ffl::bh_measure(n, ffl::Exec::Serial); });
        double p = timed([&] { ffl::bh_measure(n, ffl::Exec::Parallel); });
        rows[2] = {"bh measure", s, p};
    }
    {
        double dt = 1e-4;
        double s = timed([&] { ffl::frf_step(field, dt, ffl::Exec::Serial); });
        double p = timed([&] { ffl::frf_step(field, dt, ffl::Exec::Parallel); });
        rows[3] = {"flow step", s, p};
    }

    std::printf("%-12s %10s %10s %8s\n", "kernel", "serial[s]", "omp[s]", "speedup");
    for (const Row& r : rows)
        std::printf("%-12s %10.4f %10.4f %8.2f\n", r.name, r.serial, r.parallel,
                    r.serial / r.parallel);
    return 0;
}
