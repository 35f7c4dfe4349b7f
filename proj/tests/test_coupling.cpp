#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cutflow/coupling.hpp"
#include "cutflow/hypothesis.hpp"

using namespace cutflow;

namespace {
EnvSpec spec_of(EnvVariant v, int d2 = 1) {
    EnvSpec s;
    s.d1 = 2;
    s.d2 = d2;
    s.kappa = 0.1;
    s.range_R = 0.5;
    s.variant = v;
    s.intensity = (v == EnvVariant::symmetric || v == EnvVariant::asymmetric)
                      ? intensity_for_support_count(s, 0.5)
                      : 0.0;
    s.master_seed = 17;
    return s;
}

SimConfig run_cfg(double horizon, std::uint64_t seed) {
    SimConfig cfg;
    cfg.dt = 1e-2;
    cfg.horizon_T = horizon;
    cfg.path_seed = seed;
    return cfg;
}

BridgeConfig bridge_cfg(std::size_t n_bridges = 16) {
    BridgeConfig b;
    b.n_bridges = n_bridges;
    b.steps_per_unit = 25;  // divides the 100-step simulation grid
    b.seed = 3;
    return b;
}
}  // namespace

TEST_CASE("x1 block of a coupled run is the frozen brownian block") {
    Environment env(spec_of(EnvVariant::zero));
    const SimConfig cfg = run_cfg(5.0, 71);
    const CoupledRun run = simulate_coupled(env, cfg, 0.2, bridge_cfg(4));
    const auto w = brownian_block(2, cfg);
    REQUIRE(run.trajectory.x1.size() == w.size());
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(run.trajectory.x1[i] == w[i]);
    CHECK(run.lambdas.size() == 5);
}

TEST_CASE("mark marginal is Bernoulli(eps)") {
    // for the zero variant the density estimate is exact, so with eps below
    // the clipping threshold the acceptance ratio equals eps * u(Y) / p(Y)
    // exactly and the marginal mark probability integrates to eps
    Environment env(spec_of(EnvVariant::zero));
    const double eps = 0.2;
    RunningStat marks;
    std::size_t clipped = 0;
    for (int r = 0; r < 40; ++r) {
        const CoupledRun run = simulate_coupled(env, run_cfg(50.0, 100 + r), eps, bridge_cfg(4));
        for (int l : run.lambdas) marks.add(static_cast<double>(l));
        clipped += run.n_clipped;
    }
    CHECK(clipped == 0);
    CHECK(marks.report().within_se(eps, 3.0));
}

TEST_CASE("marked increments are uniform on the unit ball") {
    // conditional law given lambda = 1 is proportional to p * (eps u / p) = u
    Environment env(spec_of(EnvVariant::zero, 2));
    const double eps = 0.2;
    std::vector<std::vector<double>> increments;
    for (int r = 0; r < 30; ++r) {
        const CoupledRun run = simulate_coupled(env, run_cfg(30.0, 300 + r), eps, bridge_cfg(4));
        const Trajectory& tr = run.trajectory;
        const std::size_t spu = static_cast<std::size_t>(std::llround(1.0 / tr.dt));
        for (std::size_t m = 0; m < run.lambdas.size(); ++m) {
            if (run.lambdas[m] != 1) continue;
            std::vector<double> inc(2);
            for (int c = 0; c < 2; ++c)
                inc[c] = tr.x2_at((m + 1) * spu)[c] - tr.x2_at(m * spu)[c];
            increments.push_back(std::move(inc));
        }
    }
    REQUIRE(increments.size() > 100);
    for (const auto& inc : increments)
        CHECK(std::sqrt(inc[0] * inc[0] + inc[1] * inc[1]) <= 1.0 + 1e-12);
    CHECK_FALSE(uniform_on_ball_test(increments).reject(0.005));
}

TEST_CASE("marking leaves the Y-marginal untouched") {
    // the marks are assigned post hoc, so the x2 skeleton of a coupled run
    // must match the law of the plain quenched simulation
    const EnvSpec s = spec_of(EnvVariant::symmetric);
    Environment env(s);
    std::vector<std::vector<double>> coupled, quenched;
    for (int r = 0; r < 300; ++r) {
        const CoupledRun run = simulate_coupled(env, run_cfg(2.0, 500 + r), 0.2, bridge_cfg(4));
        const Trajectory& tr = run.trajectory;
        coupled.push_back({tr.x2_at(tr.n_steps())[0]});
        const Trajectory tq = simulate_quenched(env, run_cfg(2.0, 90000 + r));
        quenched.push_back({tq.x2_at(tq.n_steps())[0]});
    }
    CHECK_FALSE(energy_distance_test(coupled, quenched).reject(0.01));
}

TEST_CASE("large eps triggers the clip diagnostic") {
    // d2 = 1 zero variant: max ratio = eps * (1/2) / (e^{-1/2}/sqrt(2 pi)),
    // which exceeds 1 once eps > 0.484
    Environment env(spec_of(EnvVariant::zero));
    std::size_t clipped = 0;
    for (int r = 0; r < 10; ++r)
        clipped += simulate_coupled(env, run_cfg(20.0, 700 + r), 0.8, bridge_cfg(4)).n_clipped;
    CHECK(clipped > 0);
}

TEST_CASE("chained kernel means") {
    const EnvSpec s = spec_of(EnvVariant::zero);
    Environment env(s);
    SimConfig cfg = run_cfg(4.0, 41);
    const auto w = brownian_block(s.d1, cfg);
    BridgeConfig bc = bridge_cfg(4);
    bc.steps_per_unit = 100;  // kernel steps reuse the full simulation grid
    SUBCASE("all-marked chain is a sum of uniform ball draws") {
        const auto res = chained_kernel_mean(env, w, {1, 1}, 2, 0.2, bc, 4000, 81);
        CHECK(std::abs(res.mean[0]) <= 3.0 * res.se[0]);
        CHECK(res.n_samples == 4000);
    }
    SUBCASE("unmarked chain under the zero variant stays centered") {
        const auto res = chained_kernel_mean(env, w, {0, 0}, 2, 0.2, bc, 800, 82);
        CHECK(std::abs(res.mean[0]) <= 3.0 * res.se[0]);
    }
    SUBCASE("mixed chain matches the coupled-run conditional mean") {
        // lambda = (1, 0): X_2 = uniform step + residual step; the residual
        // kernel under the zero variant is a reweighted Gaussian with even
        // weight, so the mean stays 0
        const auto res = chained_kernel_mean(env, w, {1, 0}, 2, 0.2, bc, 800, 83);
        CHECK(std::abs(res.mean[0]) <= 3.0 * res.se[0]);
    }
}

TEST_CASE("argument validation") {
    Environment env(spec_of(EnvVariant::zero));
    SimConfig cfg = run_cfg(4.0, 1);
    CHECK_THROWS_AS(simulate_coupled(env, cfg, 1.5, bridge_cfg(4)), std::invalid_argument);
    cfg.horizon_T = 2.5;
    CHECK_THROWS_AS(simulate_coupled(env, cfg, 0.2, bridge_cfg(4)), std::invalid_argument);
    const auto w = brownian_block(2, run_cfg(4.0, 1));
    BridgeConfig bc = bridge_cfg(4);
    bc.steps_per_unit = 100;
    CHECK_THROWS_AS(chained_kernel_mean(env, w, {1}, 0, 0.2, bc, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(chained_kernel_mean(env, w, {1}, 2, 0.2, bc, 10, 1), std::invalid_argument);
}
