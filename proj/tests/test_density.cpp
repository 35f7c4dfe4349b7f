#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cutflow/density.hpp"
#include "cutflow/dynamics.hpp"
#include "cutflow/env.hpp"

using namespace cutflow;

namespace {
EnvSpec spec_of(EnvVariant v, int d2 = 1) {
    EnvSpec s;
    s.d1 = 2;
    s.d2 = d2;
    s.kappa = 0.1;
    s.range_R = 0.5;
    s.intensity = v == EnvVariant::symmetric || v == EnvVariant::asymmetric ? 50.0 : 0.0;
    s.variant = v;
    s.master_seed = 9;
    return s;
}

std::vector<double> unit_w(int d1, std::size_t steps, std::uint64_t seed) {
    SimConfig cfg;
    cfg.dt = 1.0 / static_cast<double>(steps);
    cfg.horizon_T = 1.0;
    cfg.path_seed = seed;
    return brownian_block(d1, cfg);
}
}  // namespace

TEST_CASE("bridge endpoints are pinned") {
    Vec y = {0.3, -0.2}, y2 = {1.0, 0.5};
    const auto path = sample_bridge(y, y2, 50, std::uint64_t{11});
    CHECK(path[0] == y[0]);
    CHECK(path[1] == y[1]);
    CHECK(path[100] == y2[0]);
    CHECK(path[101] == y2[1]);
}

TEST_CASE("bridge midpoint law") {
    Vec y = {0.0}, y2 = {1.0};
    RunningStat mid;
    for (int r = 0; r < 10000; ++r) {
        const auto path = sample_bridge(y, y2, 50, std::uint64_t{100 + r});
        mid.add(path[25]);
    }
    CHECK(mid.report().within_se(0.5, 3.0));
    CHECK(std::abs(mid.variance() - 0.25) < 3.0 * 0.25 * std::sqrt(2.0 / 10000.0));
}

TEST_CASE("bridge from 0 to 0 is time-reversal symmetric in variance") {
    Vec y = {0.0}, y2 = {0.0};
    RunningStat early, late;
    for (int r = 0; r < 10000; ++r) {
        const auto path = sample_bridge(y, y2, 50, std::uint64_t{999 + r});
        early.add(path[10] * path[10]);
        late.add(path[40] * path[40]);
    }
    const double se = std::sqrt(early.std_error() * early.std_error() +
                                late.std_error() * late.std_error());
    CHECK(std::abs(early.mean() - late.mean()) <= 3.0 * se);
}

TEST_CASE("stochastic exponential closed forms") {
    const std::size_t steps = 100;
    SUBCASE("zero variant is exactly 1") {
        Environment env(spec_of(EnvVariant::zero));
        const auto w = unit_w(2, steps, 21);
        const auto bridge = sample_bridge({0.0}, {0.7}, steps, std::uint64_t{22});
        CHECK(stochastic_exponential(w, env, bridge) == 1.0);
    }
    SUBCASE("constant variant telescopes") {
        EnvSpec s = spec_of(EnvVariant::constant);
        s.constant_c = 0.09;
        Environment env(s);
        const auto w = unit_w(2, steps, 23);
        Vec y = {-0.2}, y2 = {0.6};
        const auto bridge = sample_bridge(y, y2, steps, std::uint64_t{24});
        const double expected = std::exp(0.09 * (y2[0] - y[0]) - 0.09 * 0.09 / 2.0);
        CHECK(stochastic_exponential(w, env, bridge) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("Jensen bound on the bridge mean") {
    Environment env(spec_of(EnvVariant::symmetric));
    const std::size_t steps = 50;
    const auto w = unit_w(2, steps, 31);
    Rng rng(hash_combine(32, 0xb21d));
    RunningStat val, expo;
    for (int m = 0; m < 2000; ++m) {
        const auto bridge = sample_bridge({0.0}, {0.4}, steps, rng);
        const double e = stochastic_exponential(w, env, bridge);
        val.add(e);
        expo.add(std::log(e));
    }
    CHECK(val.mean() >= std::exp(expo.mean()) - 1e-12);
}

TEST_CASE("density closed forms for the zero variant") {
    BridgeConfig bcfg;
    bcfg.n_bridges = 64;
    bcfg.steps_per_unit = 50;
    bcfg.seed = 41;
    SUBCASE("d2=1 on the diagonal") {
        Environment env(spec_of(EnvVariant::zero, 1));
        const auto w = unit_w(2, bcfg.steps_per_unit, 42);
        const auto est = estimate_transition_density(w, env, {0.0}, {0.0}, bcfg);
        CHECK(est.value == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-12));
        CHECK(est.std_error == 0.0);
        CHECK(est.bridge_mean == 1.0);
    }
    SUBCASE("d2=2 at unit offset") {
        Environment env(spec_of(EnvVariant::zero, 2));
        const auto w = unit_w(2, bcfg.steps_per_unit, 43);
        const auto est = estimate_transition_density(w, env, {0.0, 0.0}, {1.0, 0.0}, bcfg);
        CHECK(est.value ==
              doctest::Approx(std::exp(-0.5) / (2.0 * M_PI)).epsilon(1e-12));
    }
}

TEST_CASE("constant drift shifts the Gaussian") {
    EnvSpec s = spec_of(EnvVariant::constant);
    s.constant_c = 0.08;
    Environment env(s);
    BridgeConfig bcfg;
    bcfg.n_bridges = 64;
    bcfg.steps_per_unit = 50;
    bcfg.seed = 51;
    const auto w = unit_w(2, bcfg.steps_per_unit, 52);
    Rng rng(53);
    for (int k = 0; k < 20; ++k) {
        Vec y = {rng.uniform(-0.5, 0.5)}, y2 = {rng.uniform(-1.5, 1.5)};
        BridgeConfig bc = bcfg;
        bc.seed = hash_combine(51, k);
        const auto est = estimate_transition_density(w, env, y, y2, bc);
        const Vec shifted = {y[0] + 0.08};
        const double target = gaussian_kernel(1, 1.0, shifted, y2);
        CHECK(std::abs(est.value - target) <= 3.0 * est.std_error + 1e-12);
    }
}

TEST_CASE("density integrates to one") {
    Environment env(spec_of(EnvVariant::symmetric));
    BridgeConfig bcfg;
    bcfg.n_bridges = 128;
    bcfg.steps_per_unit = 50;
    bcfg.seed = 61;
    const auto w = unit_w(2, bcfg.steps_per_unit, 62);
    const double h = 0.1;
    double mass = 0.0;
    int k = 0;
    for (double yp = -6.0; yp <= 6.0; yp += h, ++k) {
        BridgeConfig bc = bcfg;
        bc.seed = hash_combine(61, k);
        mass += h * estimate_transition_density(w, env, {0.0}, {yp}, bc).value;
    }
    CHECK(std::abs(mass - 1.0) < 0.02);
}

TEST_CASE("reflection symmetry of the ensemble-averaged density") {
    // the symmetric drift law is invariant under negating the d2 coordinates,
    // so the environment-averaged density at (y, y') matches (-y, -y')
    BridgeConfig bcfg;
    bcfg.n_bridges = 32;
    bcfg.steps_per_unit = 50;
    const auto w = unit_w(2, bcfg.steps_per_unit, 81);
    Vec y = {0.3}, y2 = {-0.5};
    Vec ry = {-0.3}, ry2 = {0.5};
    RunningStat direct, reflected;
    for (int e = 0; e < 400; ++e) {
        EnvSpec s = spec_of(EnvVariant::symmetric);
        s.master_seed = hash_combine(9, 0x8e1 + e);
        Environment env(s);
        BridgeConfig bc = bcfg;
        bc.seed = hash_combine(81, e);
        direct.add(estimate_transition_density(w, env, y, y2, bc).value);
        reflected.add(estimate_transition_density(w, env, ry, ry2, bc).value);
    }
    const double se = std::sqrt(direct.std_error() * direct.std_error() +
                                reflected.std_error() * reflected.std_error());
    CHECK(std::abs(direct.mean() - reflected.mean()) <= 3.0 * se + 1e-12);
}

TEST_CASE("epsilon calibration closed forms") {
    BridgeConfig bcfg;
    bcfg.n_bridges = 32;
    bcfg.steps_per_unit = 50;
    bcfg.seed = 71;
    SUBCASE("zero variant, d2=1") {
        Environment env(spec_of(EnvVariant::zero, 1));
        const auto w = unit_w(2, bcfg.steps_per_unit, 72);
        const EpsilonCalibration cal =
            calibrate_epsilon({&env}, {w}, {Vec{0.0}}, bcfg);
        CHECK(cal.epsilon_raw ==
              doctest::Approx(std::exp(-0.5) / std::sqrt(2.0 * M_PI)).epsilon(1e-9));
        CHECK(cal.epsilon == doctest::Approx(0.5 * cal.epsilon_raw));
    }
    SUBCASE("zero variant, d2=2") {
        Environment env(spec_of(EnvVariant::zero, 2));
        const auto w = unit_w(2, bcfg.steps_per_unit, 73);
        const EpsilonCalibration cal =
            calibrate_epsilon({&env}, {w}, {Vec{0.0, 0.0}}, bcfg);
        CHECK(cal.epsilon_raw == doctest::Approx(std::exp(-0.5) / 4.0).epsilon(1e-9));
    }
    SUBCASE("poisson variant gives a positive epsilon") {
        Environment env(spec_of(EnvVariant::symmetric, 1));
        const auto w = unit_w(2, bcfg.steps_per_unit, 74);
        BridgeConfig bc = bcfg;
        bc.n_bridges = 128;
        const EpsilonCalibration cal = calibrate_epsilon({&env}, {w}, {Vec{0.0}}, bc);
        CHECK(cal.min_density - 1.96 * cal.min_density_se > 0.0);
        CHECK(cal.epsilon > 0.0);
        CHECK(cal.epsilon < 1.0);
    }
}
