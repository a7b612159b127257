#include <cmath>
#include <random>

#include "doctest.h"
#include "ffl/errors.hpp"
#include "ffl/norm.hpp"

using namespace ffl;

namespace {

AnalyticNorm euclidean() { return AnalyticNorm::from_catalog("euclidean", {}); }
AnalyticNorm diag41() { return AnalyticNorm::from_catalog("riemannian_diag", {4.0, 1.0}); }
AnalyticNorm conformal() { return AnalyticNorm::from_catalog("riemannian_conformal", {0.1}); }
AnalyticNorm quartic() { return AnalyticNorm::from_catalog("quartic", {0.1}); }

// Central-difference Hessian of F^2 in y, 4th order; oracle for g.
Mat2 fd_hessian_f2(const Norm& n, const Vec2& x, const Vec2& y, double h) {
    auto f = [&](double a, double b) { return n.f2(x, {y[0] + a, y[1] + b}); };
    auto d2 = [&](int i, int j) {
        Vec2 ei{i == 0 ? 1.0 : 0.0, i == 0 ? 0.0 : 1.0};
        Vec2 ej{j == 0 ? 1.0 : 0.0, j == 0 ? 0.0 : 1.0};
        double s = 0.0;
        const double w[4] = {1.0, -8.0, 8.0, -1.0};
        const double c[4] = {-2.0, -1.0, 1.0, 2.0};
        for (int a = 0; a < 4; ++a) {
            double ga = 0.0;
            for (int b = 0; b < 4; ++b)
                ga += w[b] * f(c[a] * h * ei[0] + c[b] * h * ej[0],
                               c[a] * h * ei[1] + c[b] * h * ej[1]);
            s += w[a] * ga / (12.0 * h);
        }
        return s / (12.0 * h);
    };
    return {d2(0, 0), d2(0, 1), d2(1, 0), d2(1, 1)};
}

std::mt19937 rng_for(const char* tag) {
    std::seed_seq seq(tag, tag + std::char_traits<char>::length(tag));
    return std::mt19937(seq);
}

Vec2 random_dir(std::mt19937& rng) {
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> rad(0.3, 3.0);
    double t = ang(rng), r = rad(rng);
    return {r * std::cos(t), r * std::sin(t)};
}

}  // namespace

TEST_CASE("norm values") {
    auto e = euclidean();
    CHECK(norm_eval(e, {0.3, 0.7}, {3.0, 4.0}) == doctest::Approx(5.0).epsilon(1e-14));
    auto q = quartic();
    CHECK(norm_eval(q, {0.0, 0.0}, {1.0, 0.0}) ==
          doctest::Approx(std::sqrt(1.1)).epsilon(1e-14));
    CHECK_THROWS_AS(norm_eval(e, {0.0, 0.0}, {0.0, 0.0}), ZeroVectorError);
}

TEST_CASE("fundamental tensor vs closed forms and FD oracle") {
    auto e = euclidean();
    Mat2 ge = fundamental_tensor(e, {0.1, 0.2}, {0.6, -1.1});
    CHECK(max_abs(ge - Mat2::identity()) <= 1e-13);

    auto d = diag41();
    Mat2 gd = fundamental_tensor(d, {1.0, 2.0}, {0.4, 0.9});
    CHECK(max_abs(gd - Mat2::diag(4.0, 1.0)) <= 1e-12);

    auto q = quartic();
    auto rng = rng_for("norm-g-fd");
    for (int s = 0; s < 20; ++s) {
        Vec2 y = random_dir(rng);
        Mat2 g = fundamental_tensor(q, {0.0, 0.0}, y);
        Mat2 num = 0.5 * fd_hessian_f2(q, {0.0, 0.0}, y, 1e-2 * norm2(y));
        CHECK(max_abs(g - num) <= 1e-6);
        CHECK(positive_definite(g));
    }
}

TEST_CASE("cartan tensor: Riemannian zero, Euler identity, FD oracle") {
    auto e = euclidean();
    auto c = conformal();
    auto q = quartic();
    auto rng = rng_for("norm-cartan");
    for (int s = 0; s < 30; ++s) {
        Vec2 y = random_dir(rng);
        Vec2 u = random_dir(rng), v = random_dir(rng), w = random_dir(rng);
        Vec2 x{0.4, -0.8};
        CHECK(std::abs(cartan_tensor(e, x, y, u, v, w)) <= 1e-12);
        CHECK(std::abs(cartan_tensor(c, x, y, u, v, w)) <= 1e-10);
        // C_y(y, ., .) = 0 by 0-homogeneity of g.
        CHECK(std::abs(cartan_tensor(q, x, y, y, v, w)) <= 1e-10);

        // FD oracle: directional derivative of quad_form(g, v, w) along u.
        double h = 1e-4 * norm2(y);
        auto gq = [&](double s1) {
            Mat2 g = fundamental_tensor(q, x, {y[0] + s1 * u[0], y[1] + s1 * u[1]});
            return quad_form(g, v, w);
        };
        double num = (gq(-2.0 * h) - 8.0 * gq(-h) + 8.0 * gq(h) - gq(2.0 * h)) / (12.0 * h);
        CHECK(std::abs(2.0 * cartan_tensor(q, x, y, u, v, w) - num) <= 1e-6);
    }
}

TEST_CASE("homogeneity suite over random samples") {
    auto rng = rng_for("norm-homog");
    std::uniform_real_distribution<double> lam(0.2, 4.0);
    for (auto* np : {"euclidean", "riemannian_diag", "riemannian_conformal", "quartic"}) {
        AnalyticNorm n = AnalyticNorm::from_catalog(
            np, std::string(np) == "riemannian_diag"
                    ? std::vector<double>{4.0, 1.0}
                    : (std::string(np) == "euclidean" ? std::vector<double>{}
                                                      : std::vector<double>{0.1}));
        for (int s = 0; s < 100; ++s) {
            Vec2 x{lam(rng), lam(rng)};
            Vec2 y = random_dir(rng);
            double L = lam(rng);
            Vec2 ly{L * y[0], L * y[1]};
            double F = norm_eval(n, x, y);
            CHECK(norm_eval(n, x, ly) == doctest::Approx(L * F).epsilon(1e-12));
            Mat2 g = fundamental_tensor(n, x, y);
            CHECK(max_abs(fundamental_tensor(n, x, ly) - g) <= 1e-10 * max_abs(g));
            // Euler: g_y(y, y) = F^2.
            CHECK(quad_form(g, y, y) == doctest::Approx(F * F).epsilon(1e-11));
            // Cartan is (-1)-homogeneous and annihilates y.
            Vec2 u = random_dir(rng), v = random_dir(rng), w = random_dir(rng);
            double C = cartan_tensor(n, x, y, u, v, w);
            CHECK(cartan_tensor(n, x, ly, u, v, w) == doctest::Approx(C / L).epsilon(1e-9));
            CHECK(std::abs(cartan_tensor(n, x, y, y, v, w)) <= 1e-9);
        }
    }
}

TEST_CASE("legendre transform: values, residual, round trip") {
    auto e = euclidean();
    Vec2 y = legendre(e, {0.0, 0.0}, {0.3, -1.2});
    CHECK(std::abs(y[0] - 0.3) <= 1e-12);
    CHECK(std::abs(y[1] + 1.2) <= 1e-12);

    auto d = diag41();
    Vec2 yd = legendre(d, {0.0, 0.0}, {2.0, 0.0});
    CHECK(std::abs(yd[0] - 0.5) <= 1e-12);
    CHECK(std::abs(yd[1]) <= 1e-12);

    auto q = quartic();
    auto rng = rng_for("norm-legendre");
    for (int s = 0; s < 100; ++s) {
        Vec2 x{0.0, 0.0};
        Vec2 om = random_dir(rng);
        Vec2 yy = legendre(q, x, om);
        Mat2 g = fundamental_tensor(q, x, yy);
        Vec2 res = g * yy - om;
        CHECK(std::max(std::abs(res[0]), std::abs(res[1])) <= 1e-10);
        Vec2 back = legendre_inverse(q, x, yy);
        CHECK(std::abs(back[0] - om[0]) <= 1e-10);
        CHECK(std::abs(back[1] - om[1]) <= 1e-10);
    }
}

TEST_CASE("dual norm: self-dual Euclidean, diagonal value, brute-force oracle") {
    auto e = euclidean();
    CHECK(dual_norm(e, {0.0, 0.0}, {3.0, 4.0}) == doctest::Approx(5.0).epsilon(1e-12));
    auto d = diag41();
    CHECK(dual_norm(d, {0.0, 0.0}, {2.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));

    auto q = quartic();
    auto rng = rng_for("norm-dual");
    for (int s = 0; s < 5; ++s) {
        Vec2 om = random_dir(rng);
        // F*(om) = max over the unit sphere of <om, y>/F(y).
        double best = 0.0;
        int m = 4096;
        for (int k = 0; k < m; ++k) {
            double t = 2.0 * M_PI * k / m;
            Vec2 yy{std::cos(t), std::sin(t)};
            best = std::max(best, dot(om, yy) / norm_eval(q, {0.0, 0.0}, yy));
        }
        CHECK(dual_norm(q, {0.0, 0.0}, om) == doctest::Approx(best).epsilon(1e-4));
    }
}

TEST_CASE("catalog rejects unknown names and bad arity") {
    CHECK_THROWS_AS(AnalyticNorm::from_catalog("randers", {0.1}), ConfigError);
    CHECK_THROWS_AS(AnalyticNorm::from_catalog("riemannian_diag", {4.0}), ConfigError);
    CHECK_THROWS_AS(AnalyticNorm::from_catalog("quartic", {}), ConfigError);
}
