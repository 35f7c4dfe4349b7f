#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cutflow/env.hpp"
#include "cutflow/report.hpp"
#include "cutflow/rng.hpp"

using namespace cutflow;

namespace {
EnvSpec poisson_spec(EnvVariant variant = EnvVariant::symmetric) {
    EnvSpec s;
    s.d1 = 5;
    s.d2 = 1;
    s.kappa = 0.1;
    s.range_R = 0.5;
    s.variant = variant;
    s.intensity = intensity_for_support_count(s, 0.5);
    s.master_seed = 101;
    return s;
}

Vec random_point(Rng& rng, int d, double box = 4.0) {
    Vec x(d);
    for (double& c : x) c = rng.uniform(-box, box);
    return x;
}
}  // namespace

TEST_CASE("zero variant is identically zero") {
    EnvSpec s = poisson_spec(EnvVariant::zero);
    Environment env(s);
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const Vec b = env.drift(random_point(rng, s.dim()));
        for (double c : b) CHECK(c == 0.0);
    }
}

TEST_CASE("intensity zero gives the empty field") {
    EnvSpec s = poisson_spec();
    s.intensity = 0.0;
    Environment env(s);
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        const Vec b = env.drift(random_point(rng, s.dim()));
        for (double c : b) CHECK(c == 0.0);
    }
}

TEST_CASE("constant variant") {
    EnvSpec s = poisson_spec(EnvVariant::constant);
    s.constant_c = 0.07;
    Environment env(s);
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const Vec b = env.drift(random_point(rng, s.dim()));
        for (int c = 0; c + 1 < s.dim(); ++c) CHECK(b[c] == 0.0);
        CHECK(b.back() == 0.07);
    }
}

TEST_CASE("evaluation is order independent and purges cleanly") {
    EnvSpec s = poisson_spec();
    Environment a(s), b(s);
    Rng rng(4);
    std::vector<Vec> pts;
    for (int i = 0; i < 100; ++i) pts.push_back(random_point(rng, s.dim()));
    std::vector<Vec> va, vb;
    for (const Vec& x : pts) va.push_back(a.drift(x));
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) vb.push_back(b.drift(*it));
    std::reverse(vb.begin(), vb.end());
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (int c = 0; c < s.dim(); ++c) CHECK(va[i][c] == vb[i][c]);
    a.purge_cache();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec again = a.drift(pts[i]);
        for (int c = 0; c < s.dim(); ++c) CHECK(again[c] == va[i][c]);
    }
}

TEST_CASE("norm bound, Lipschitz bound and vanishing block hold exactly") {
    EnvSpec s = poisson_spec();
    Environment env(s);
    Rng rng(5);
    for (int i = 0; i < 20000; ++i) {
        const Vec x = random_point(rng, s.dim());
        Vec y = x;
        for (double& c : y) c += rng.uniform(-0.5, 0.5);
        const Vec bx = env.drift(x), by = env.drift(y);
        for (int c = 0; c < s.d1; ++c) {
            REQUIRE(bx[c] == 0.0);
            REQUIRE(by[c] == 0.0);
        }
        REQUIRE(norm2(bx) <= s.kappa + 1e-12);
        double diff = 0.0;
        for (int c = 0; c < s.dim(); ++c) diff += (bx[c] - by[c]) * (bx[c] - by[c]);
        REQUIRE(std::sqrt(diff) <= s.kappa * dist2(x, y) + 1e-12);
    }
}

TEST_CASE("support arithmetic: no influence beyond R/2") {
    // points in a cell can only move the field within R/4 of themselves; two
    // evaluations separated by more than R/2 from every point of a far cell
    // see nothing from it. Empirically: fields at distance > R/2 from all
    // support differ only through their own local cells.
    EnvSpec s = poisson_spec();
    s.intensity = 5.0;
    Environment env(s);
    // a query point far from the origin-centered block of cells cannot feel it
    Vec x(s.dim(), 100.0);
    const Vec b1 = env.drift(x);
    env.purge_cache();
    const Vec b2 = env.drift(x);
    for (int c = 0; c < s.dim(); ++c) CHECK(b1[c] == b2[c]);
}

TEST_CASE("antipodal symmetry of the ensemble") {
    // moments of b*(Rx, .) match those of -b*(x, .) across environments
    EnvSpec s = poisson_spec(EnvVariant::symmetric);
    Rng rng(6);
    Vec x = random_point(rng, s.dim(), 1.0);
    Vec rx = x;
    for (int c = s.d1; c < s.dim(); ++c) rx[c] = -rx[c];
    RunningStat direct, reflected;
    const std::size_t n_envs = 10000;
    for (std::size_t e = 0; e < n_envs; ++e) {
        EnvSpec se = s;
        se.master_seed = hash_combine(s.master_seed, 0x717 + e);
        Environment env(se);
        Vec bx(s.d2), brx(s.d2);
        env.drift_star(x, bx.data());
        env.drift_star(rx, brx.data());
        direct.add(-bx[0]);
        reflected.add(brx[0]);
    }
    const double se = std::sqrt(direct.std_error() * direct.std_error() +
                                reflected.std_error() * reflected.std_error());
    CHECK(std::abs(direct.mean() - reflected.mean()) <= 3.0 * se + 1e-12);
}

TEST_CASE("stationarity of the ensemble mean") {
    EnvSpec s = poisson_spec();
    Rng rng(7);
    const Vec x = random_point(rng, s.dim(), 2.0);
    const Vec y = random_point(rng, s.dim(), 2.0);
    RunningStat at_x, at_y;
    for (std::size_t e = 0; e < 4000; ++e) {
        EnvSpec se = s;
        se.master_seed = hash_combine(s.master_seed, 0x5a7 + e);
        Environment env(se);
        Vec bx(s.d2), by(s.d2);
        env.drift_star(x, bx.data());
        env.drift_star(y, by.data());
        at_x.add(bx[0]);
        at_y.add(by[0]);
    }
    const double se = std::sqrt(at_x.std_error() * at_x.std_error() +
                                at_y.std_error() * at_y.std_error());
    CHECK(std::abs(at_x.mean() - at_y.mean()) <= 3.0 * se + 1e-12);
}

TEST_CASE("dependence probe") {
    EnvSpec s = poisson_spec();
    SUBCASE("separated points decorrelate") {
        Vec x(s.dim(), 0.0), y(s.dim(), 0.0);
        y[0] = 1.5 * s.range_R;
        const EstimateReport rep = dependence_probe(s, x, y, 2000);
        CHECK(std::abs(rep.value) <= 3.0 * rep.std_error + 1e-12);
    }
    SUBCASE("coincident points give positive variance") {
        Vec x(s.dim(), 0.0);
        const EstimateReport rep = dependence_probe(s, x, x, 2000);
        CHECK(rep.value - 3.0 * rep.std_error > 0.0);
    }
    SUBCASE("zero variant is exactly zero") {
        EnvSpec z = poisson_spec(EnvVariant::zero);
        Vec x(z.dim(), 0.0), y(z.dim(), 0.1);
        const EstimateReport rep = dependence_probe(z, x, y, 200);
        CHECK(rep.value == 0.0);
    }
}

TEST_CASE("spec validation") {
    EnvSpec s = poisson_spec();
    s.kappa = -1.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = poisson_spec(EnvVariant::constant);
    s.constant_c = 0.5;  // exceeds kappa
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    CHECK_THROWS_AS(Environment(poisson_spec(), poisson_spec().range_R), std::invalid_argument);
}
