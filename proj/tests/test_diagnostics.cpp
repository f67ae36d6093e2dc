#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <dcsamp/cover.hpp>
#include <dcsamp/diagnostics.hpp>
#include <dcsamp/merge.hpp>
#include <dcsamp/proportion.hpp>
#include <dcsamp/rng.hpp>
#include <dcsamp/run.hpp>
#include <dcsamp/subset_sampler.hpp>
#include <dcsamp/target.hpp>

#include "oracles.hpp"

using namespace dcsamp;

TEST_CASE("stationary law of small kernels") {
    SECTION("symmetric two-state") {
        const auto pi = stationary_distribution({{0.9, 0.1}, {0.1, 0.9}});
        REQUIRE(pi[0] == Catch::Approx(0.5).margin(1e-12));
        REQUIRE(pi[1] == Catch::Approx(0.5).margin(1e-12));
    }
    SECTION("seven-state benchmark kernel vs closed form") {
        for (double a : {0.2, 0.03, 0.003}) {
            const auto pi = stationary_distribution(seven_state_chain(a).kernel);
            const auto ref = oracle::seven_state_lambda(a);
            for (std::size_t s = 0; s < 7; ++s)
                REQUIRE(pi[s] == Catch::Approx(ref[s]).margin(1e-12));
        }
    }
    SECTION("hard-instance values, frozen") {
        const auto pi = stationary_distribution(seven_state_chain(0.003).kernel);
        for (std::size_t s = 0; s < 7; ++s)
            REQUIRE(pi[s] == Catch::Approx(oracle::kSevenStateHard[s]).epsilon(5e-4));
    }
    SECTION("rejects broken kernels") {
        REQUIRE_THROWS_AS(stationary_distribution({}), std::invalid_argument);
        REQUIRE_THROWS_AS(stationary_distribution({{1.0, 0.0}, {0.0, 1.0}}),
                          std::invalid_argument);  // reducible
        REQUIRE_THROWS_AS(stationary_distribution({{0.5, 0.5}}), std::invalid_argument);
        REQUIRE_THROWS_AS(stationary_distribution({{0.6, 0.5}, {0.5, 0.5}}),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(stationary_distribution({{1.5, -0.5}, {0.5, 0.5}}),
                          std::invalid_argument);
    }
}

TEST_CASE("long kernel simulation settles on the stationary law") {
    const DiscreteTarget target = seven_state_chain(0.03);
    const auto chain = discrete_chain(target, 2000000, 0, 17);
    const auto lambda = oracle::seven_state_lambda(0.03);
    REQUIRE(tv_discrete(chain, lambda).tv < 0.02);
}

TEST_CASE("autocorrelation estimates") {
    SECTION("AR(1) decays geometrically") {
        Rng rng(23);
        const double phi = 0.9;
        double x = 0.0;
        for (int t = 0; t < 1000; ++t) x = phi * x + rng.normal();
        std::vector<double> series(200000);
        for (auto& v : series) {
            x = phi * x + rng.normal();
            v = x;
        }
        const auto r = autocorrelation(series, 10);
        REQUIRE(r[0] == 1.0);
        REQUIRE(r[1] == Catch::Approx(phi).margin(0.03));
        REQUIRE(r[5] == Catch::Approx(std::pow(phi, 5)).margin(0.05));
        REQUIRE(r[10] == Catch::Approx(std::pow(phi, 10)).margin(0.05));
    }
    SECTION("independent draws decorrelate") {
        Rng rng(29);
        std::vector<double> series(100000);
        for (auto& v : series) v = rng.normal();
        const auto r = autocorrelation(series, 5);
        for (int k = 1; k <= 5; ++k) REQUIRE(std::abs(r[static_cast<std::size_t>(k)]) < 0.02);
    }
    SECTION("rejects degenerate input") {
        std::vector<double> flat(100, 3.0);
        REQUIRE_THROWS_AS(autocorrelation(flat, 5), std::invalid_argument);
        std::vector<double> tiny = {1.0, 2.0, 3.0};
        REQUIRE_THROWS_AS(autocorrelation(tiny, 3), std::invalid_argument);
        REQUIRE_THROWS_AS(autocorrelation(tiny, -1), std::invalid_argument);
    }
}

TEST_CASE("kolmogorov distance against an exact cdf") {
    SECTION("single point splits the difference") {
        const std::vector<double> one = {0.5};
        const double d = ks_distance(one, [](double x) { return x; });
        REQUIRE(d == 0.5);
    }
    SECTION("uniform draws against the identity cdf") {
        Rng rng(31);
        std::vector<double> u(10000);
        for (auto& v : u) v = rng.uniform();
        REQUIRE(ks_distance(u, [](double x) { return x; }) < 0.02);
    }
    SECTION("gamma draws through the quantile against the matching cdf") {
        const TargetModel target = gamma_target(4.0, 1.0);
        Rng rng(37);
        std::vector<double> x(10000);
        for (auto& v : x) v = target.quantile(rng.uniform());
        REQUIRE(ks_distance(x, target.cdf) < 0.02);
    }
    SECTION("empty sample") {
        REQUIRE_THROWS_AS(ks_distance({}, [](double x) { return x; }), std::invalid_argument);
    }
}

TEST_CASE("two-sample kolmogorov distance") {
    const std::vector<double> a = {1.0, 3.0};
    const std::vector<double> b = {2.0, 4.0};
    REQUIRE(ks_two_sample(a, a) == 0.0);
    REQUIRE(ks_two_sample(a, b) == 0.5);
    const std::vector<double> lo = {1.0, 2.0}, hi = {5.0, 6.0};
    REQUIRE(ks_two_sample(lo, hi) == 1.0);
    REQUIRE_THROWS_AS(ks_two_sample({}, a), std::invalid_argument);

    SECTION("threshold constants") {
        REQUIRE(ks_two_sample_threshold(0.001, 100, 200) ==
                Catch::Approx(1.9494745 * std::sqrt(300.0 / 20000.0)).epsilon(1e-6));
        REQUIRE(ks_two_sample_threshold(0.05, 50, 50) ==
                Catch::Approx(1.3581015 * std::sqrt(100.0 / 2500.0)).epsilon(1e-6));
        REQUIRE_THROWS_AS(ks_two_sample_threshold(0.0, 10, 10), std::invalid_argument);
        REQUIRE_THROWS_AS(ks_two_sample_threshold(0.1, 0, 10), std::invalid_argument);
    }
    SECTION("same law stays under the threshold, shifted law does not") {
        Rng rng(41);
        std::vector<double> x(4000), y(4000), z(4000);
        for (auto& v : x) v = rng.normal();
        for (auto& v : y) v = rng.normal();
        for (auto& v : z) v = rng.normal() + 0.5;
        REQUIRE(ks_two_sample(x, y) < ks_two_sample_threshold(0.001, 4000, 4000));
        REQUIRE(ks_two_sample(x, z) > ks_two_sample_threshold(0.001, 4000, 4000));
    }
}

TEST_CASE("total-variation statistics") {
    SECTION("from counts") {
        const std::vector<long> counts = {5, 5};
        const std::vector<double> lambda = {0.3, 0.7};
        const TVReport r = tv_from_counts(counts, lambda, "demo");
        REQUIRE(r.tv == Catch::Approx(0.2).margin(1e-15));
        REQUIRE(r.N == 10);
        REQUIRE(r.label == "demo");
        REQUIRE_THROWS_AS(tv_from_counts(std::vector<long>{1}, lambda), std::invalid_argument);
        REQUIRE_THROWS_AS(tv_from_counts(std::vector<long>{0, 0}, lambda),
                          std::invalid_argument);
    }
    SECTION("from state chains") {
        const std::vector<int> chain = {0, 1, 1, 1};
        const std::vector<double> lambda = {0.25, 0.75};
        REQUIRE(tv_discrete(chain, lambda).tv == 0.0);
        const std::vector<int> bad = {0, 2};
        REQUIRE_THROWS_AS(tv_discrete(bad, lambda), std::out_of_range);
    }
    SECTION("from lattice draws, tail lumped") {
        const std::vector<double> draws = {0.0, 1.0, 7.0};
        const std::vector<double> lambda = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        REQUIRE(tv_lattice(draws, lambda).tv == Catch::Approx(0.0).margin(1e-12));
        const std::vector<double> neg = {-1.0};
        REQUIRE_THROWS_AS(tv_lattice(neg, lambda), std::out_of_range);
    }
}

TEST_CASE("split pipeline quality improves with chain length") {
    // Same construction at three per-chain budgets; the median quality
    // across seeds has to fall as the budget grows.
    const double a = 0.03;
    const DiscreteTarget target = seven_state_chain(a);
    const DiscreteCover cover(7, {{0, 1, 2, 3}, {3, 4, 5, 6}});
    const auto lambda = oracle::seven_state_lambda(a);

    std::vector<double> medians;
    for (long M : {1000L, 10000L, 100000L}) {
        std::vector<double> tvs;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            std::vector<SubsetSample> samples;
            for (std::size_t j = 0; j < 2; ++j) {
                SubsetChainConfig cfg;
                cfg.M = M;
                cfg.burn_in = 500;
                cfg.seed = Rng::stream(seed, j).next_u64();
                samples.push_back(discrete_subset_chain(target, cover, j, cfg));
            }
            const ProportionEstimate props =
                detail::exact_props_from(true_proportions(lambda, cover), samples);
            const MergedSample m = merge(samples, props, Rng::stream(seed, "merge").next_u64());
            tvs.push_back(tv_lattice(m.draws, lambda).tv);
        }
        medians.push_back(oracle::median(tvs));
    }
    REQUIRE(medians[1] < medians[0]);
    REQUIRE(medians[2] < medians[1]);
}
