// SPDX-License-Identifier: Apache-2.0
//
// pfair: proportional-fair scheduling over time-varying multi-channel links
// Copyright (C) 2026 The pfair Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "pfair/ensemble.hpp"

using namespace pfair;

namespace {

std::vector<RateDistribution> two_level_users() {
    return {RateDistribution::discrete({1.0, 2.0}, {0.5, 0.5}), RateDistribution::discrete({1.0, 2.0}, {0.5, 0.5})};
}

// Exhaustive PF search over a two-user virtual-channel problem.
double grid_two_user_utility(const Matrix& virtual_rates, std::size_t steps) {
    const std::size_t V = virtual_rates.cols();
    std::vector<std::size_t> pick(V, 0);
    double best = -INFINITY;
    while (true) {
        double t0 = 0.0, t1 = 0.0;
        for (std::size_t v = 0; v < V; ++v) {
            const double p = static_cast<double>(pick[v]) / static_cast<double>(steps);
            t0 += p * virtual_rates(0, v);
            t1 += (1.0 - p) * virtual_rates(1, v);
        }
        if (t0 > 0.0 && t1 > 0.0)
            best = std::max(best, std::log(t0) + std::log(t1));
        std::size_t v = 0;
        while (v < V && ++pick[v] > steps)
            pick[v++] = 0;
        if (v == V)
            return best;
    }
}

} // namespace

TEST_SUITE("ensemble") {

TEST_CASE("rate distributions") {
    const auto d = RateDistribution::discrete({1.0, 2.0}, {0.25, 0.75});
    CHECK(d.mean() == doctest::Approx(1.75));
    CHECK(d.cdf(0.5) == 0.0);
    CHECK(d.cdf(1.0) == doctest::Approx(0.25));
    CHECK(d.cdf(5.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(RateDistribution::discrete({1.0}, {0.9}), std::invalid_argument);
    CHECK_THROWS_AS(RateDistribution::discrete({-1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(RateDistribution::exponential_snr(0.0), std::invalid_argument);

    const auto c = RateDistribution::exponential_snr_db(13.0);
    CHECK(c.mean() == doctest::Approx(oracle::simpson_mean_rate(c.mean_snr())).epsilon(1e-7));
    // F(b) = 1 - exp(-(2^b - 1) / mean)
    CHECK(c.cdf(2.0) == doctest::Approx(1.0 - std::exp(-3.0 / c.mean_snr())));
}

TEST_CASE("virtual channels for two users with two rates") {
    const auto dists = two_level_users();
    const auto vcs = build_virtual_channels(dists, 1);
    REQUIRE(vcs.size() == 4);
    double total = 0.0;
    for (const auto& vc : vcs) {
        total += vc.probability;
        for (std::size_t i = 0; i < 2; ++i)
            CHECK(vc.virtual_rates[i] == vc.rates(i, 0) * vc.probability);
        if (vc.rates(0, 0) == 2.0 && vc.rates(1, 0) == 1.0) {
            CHECK(vc.virtual_rates[0] == doctest::Approx(0.5));
            CHECK(vc.virtual_rates[1] == doctest::Approx(0.25));
            CHECK(vc.key() == "1,0");
        }
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("probabilities sum to one per physical channel") {
    const std::vector<RateDistribution> dists{RateDistribution::discrete({1.0, 2.0, 4.0}, {0.2, 0.3, 0.5}),
                                              RateDistribution::discrete({0.5, 3.0}, {0.6, 0.4})};
    const auto vcs = build_virtual_channels(dists, 2);
    CHECK(vcs.size() == 2 * 36);
    std::vector<double> total(2, 0.0);
    for (const auto& vc : vcs)
        total[vc.physical_channel] += vc.probability;
    CHECK(total[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(total[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("size guard") {
    const auto d = RateDistribution::discrete({1.0, 2.0, 3.0, 4.0}, {0.25, 0.25, 0.25, 0.25});
    const std::vector<RateDistribution> dists(3, d);
    CHECK_NOTHROW(build_virtual_channels(dists, 1));
    CHECK_THROWS_AS(build_virtual_channels(dists, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_virtual_channels(std::vector<RateDistribution>{RateDistribution::exponential_snr(1.0)}, 1),
                    std::invalid_argument);
}

TEST_CASE("point masses reduce to the deterministic problem") {
    const std::vector<RateDistribution> dists{RateDistribution::discrete({1.0}, {1.0}),
                                              RateDistribution::discrete({1.0}, {1.0})};
    const auto vcs = build_virtual_channels(dists, 1);
    REQUIRE(vcs.size() == 1);
    CHECK(vcs[0].virtual_rates == std::vector<double>{1.0, 1.0});
    const auto policy = solve_ensemble_discrete(dists, 1);
    CHECK(policy.expected_throughputs[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(policy.expected_throughputs[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(table_lookup(policy, "0,0")(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("discrete two-user example") {
    const auto dists = two_level_users();
    const auto policy = solve_ensemble_discrete(dists, 1);
    CHECK(policy.provenance == Provenance::discrete_exact);
    CHECK(policy.expected_throughputs[0] == doctest::Approx(0.875).epsilon(1e-9));
    CHECK(policy.expected_throughputs[1] == doctest::Approx(0.875).epsilon(1e-9));
    // The crossed realizations go entirely to the better user.
    CHECK(table_lookup(policy, "1,0")(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(table_lookup(policy, "0,1")(1, 0) == doctest::Approx(1.0).epsilon(1e-6));

    const auto vcs = build_virtual_channels(dists, 1);
    Matrix r(2, vcs.size());
    for (std::size_t v = 0; v < vcs.size(); ++v)
        for (std::size_t i = 0; i < 2; ++i)
            r(i, v) = vcs[v].virtual_rates[i];
    const double grid = grid_two_user_utility(r, 20);
    CHECK(2.0 * std::log(0.875) == doctest::Approx(grid).epsilon(1e-9));
    CHECK(ensemble_kkt_violation(policy, dists) <= 1e-6);
}

TEST_CASE("identically distributed channels scale the throughput") {
    const std::vector<RateDistribution> dists{RateDistribution::discrete({1.0, 2.0}, {0.5, 0.5}),
                                              RateDistribution::discrete({0.5, 3.0}, {0.3, 0.7})};
    const auto single = solve_ensemble_discrete(dists, 1);
    const auto joint = solve_ensemble_discrete(dists, 2);
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(std::abs(joint.expected_throughputs[i] - 2.0 * single.expected_throughputs[i]) <= 1e-6);

    const auto replicated = replicate_single_channel(single, dists, 2);
    CHECK(replicated.allocation_table.size() == 16);
    CHECK(ensemble_kkt_violation(replicated, dists) <= 1e-6);
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(replicated.expected_throughputs[i] == doctest::Approx(2.0 * single.expected_throughputs[i]).epsilon(1e-12));
}

TEST_CASE("a perturbed table violates the optimality conditions") {
    const auto dists = two_level_users();
    auto policy = solve_ensemble_discrete(dists, 1);
    policy.allocation_table.at("1,0") = Matrix{{0.0}, {1.0}};
    CHECK(ensemble_kkt_violation(policy, dists) > 0.1);
}

TEST_CASE("single user takes the mean rate") {
    const std::vector<RateDistribution> dists{RateDistribution::exponential_snr_db(13.0)};
    const auto p = solve_fixed_point(dists, 1);
    CHECK(p.expected_throughputs[0] == doctest::Approx(oracle::simpson_mean_rate(std::pow(10.0, 1.3))).epsilon(1e-6));
    const auto p16 = solve_fixed_point(dists, 16);
    CHECK(p16.expected_throughputs[0] == doctest::Approx(16.0 * p.expected_throughputs[0]).epsilon(1e-9));
}

TEST_CASE("two i.i.d. users share the max order statistic") {
    const double mean = std::pow(10.0, 1.3);
    const std::vector<RateDistribution> dists(2, RateDistribution::exponential_snr(mean));
    const auto p = solve_fixed_point(dists, 1);
    CHECK(p.expected_throughputs[0] == p.expected_throughputs[1]);
    const double mc = oracle::mc_max_order_share(mean, 2, 1000000, 17);
    CHECK(p.expected_throughputs[0] == doctest::Approx(mc).epsilon(0.01));
}

TEST_CASE("symmetric users: dispatch equals max rate and G(T) = T") {
    const std::vector<RateDistribution> dists(4, RateDistribution::exponential_snr_db(13.0));
    const auto p = solve_fixed_point(dists, 16);
    for (double t : p.expected_throughputs)
        CHECK(t == doctest::Approx(p.expected_throughputs[0]).epsilon(1e-6));
    const auto g = fixed_point_map(dists, 16, p.expected_throughputs);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::abs(g[i] - p.expected_throughputs[i]) / p.expected_throughputs[i] <= 1e-6);

    std::mt19937_64 rng(8);
    for (int t = 0; t < 200; ++t) {
        Matrix b(4, 16);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t k = 0; k < 16; ++k)
                b(i, k) = dists[i].sample(rng);
        CHECK(ensemble_dispatch(p, b).airtime == max_rate_dispatch(b).airtime);
    }
}

TEST_CASE("heterogeneous fixed point") {
    std::vector<RateDistribution> dists;
    for (double db : {10.0, 12.0, 14.0, 16.0})
        dists.push_back(RateDistribution::exponential_snr_db(db));
    const auto p = solve_fixed_point(dists, 16);
    CHECK(p.residual <= 1e-6);
    for (std::size_t i = 1; i < 4; ++i)
        CHECK(p.expected_throughputs[i] > p.expected_throughputs[i - 1]);

    FixedPointOptions few;
    few.max_iterations = 2;
    CHECK_THROWS_AS(solve_fixed_point(dists, 16, few), std::runtime_error);
    FixedPointOptions bad;
    bad.damping = 0.0;
    CHECK_THROWS_AS(solve_fixed_point(dists, 16, bad), std::invalid_argument);
}

TEST_CASE("dispatch rules") {
    EnsemblePolicy p;
    p.expected_throughputs = {1.0, 1.0};
    p.num_channels = 1;
    auto a = ensemble_dispatch(p, Matrix{{3.0}, {2.0}});
    CHECK(a.airtime(0, 0) == 1.0);
    CHECK(a.airtime(1, 0) == 0.0);

    p.expected_throughputs = {4.0, 1.0};
    a = ensemble_dispatch(p, Matrix{{3.0}, {2.0}});
    CHECK(a.airtime(1, 0) == 1.0);

    const auto tie = max_rate_dispatch(Matrix{{2.0, 1.0}, {2.0, 3.0}, {2.0, 3.0}});
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(tie.airtime(i, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(tie.airtime(0, 1) == 0.0);
    CHECK(tie.airtime(1, 1) == 0.5);

    const auto masked = max_rate_dispatch(Matrix{{5.0}, {1.0}}, {false, true});
    CHECK(masked.airtime(1, 0) == 1.0);
    CHECK_THROWS_AS(max_rate_dispatch(Matrix{{5.0}}, {false}), std::invalid_argument);
    CHECK_THROWS_AS(ensemble_dispatch(p, Matrix{{1.0}}), std::invalid_argument);
}

TEST_CASE("policy JSON round trip") {
    const auto dists = two_level_users();
    const auto p = solve_ensemble_discrete(dists, 1);
    const auto back = policy_from_json(nlohmann::json::parse(policy_to_json(p).dump()));
    CHECK(back.expected_throughputs == p.expected_throughputs);
    CHECK(back.provenance == p.provenance);
    CHECK(back.allocation_table.size() == 4);
    CHECK(table_lookup(back, "1,1") == table_lookup(p, "1,1"));
    CHECK_THROWS_AS(table_lookup(back, "2,2"), std::out_of_range);

    auto bad = policy_to_json(p);
    bad["provenance"] = "guess";
    CHECK_THROWS_AS(policy_from_json(bad), std::invalid_argument);
    auto negative = policy_to_json(p);
    negative["expected_throughputs"] = {1.0, -1.0};
    CHECK_THROWS_AS(policy_from_json(negative), std::invalid_argument);
    CHECK_THROWS(policy_from_json(nlohmann::json::object()));
}

} // TEST_SUITE
