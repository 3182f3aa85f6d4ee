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
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"

#include "pfair/channel.hpp"

using namespace pfair;

namespace {

ChannelConfig short_config(double duration = 0.05) {
    ChannelConfig c;
    c.duration = duration;
    return c;
}

double mean_power(const std::vector<Matrix>& gains, std::size_t user) {
    double m = 0.0;
    for (const auto& g : gains)
        for (std::size_t k = 0; k < g.cols(); ++k)
            m += g(user, k);
    return m / static_cast<double>(gains.size() * gains.front().cols());
}

} // namespace

TEST_SUITE("channel") {

TEST_CASE("config validation") {
    ChannelConfig c;
    CHECK_NOTHROW(c.validate());

    SUBCASE("subcarriers must be a power of two") {
        c.num_subcarriers = 12;
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    }
    SUBCASE("one mean SNR per user") {
        c.mean_snr_db = {13.0};
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    }
    SUBCASE("negative Doppler") {
        c.doppler_hz = -1.0;
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    }
    SUBCASE("no users") {
        c.num_users = 0;
        c.mean_snr_db.clear();
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    }
}

TEST_CASE("slot count") {
    ChannelConfig c;
    CHECK(c.num_slots() == 1000);
    c.duration = 0.2;
    CHECK(c.num_slots() == 200);
    c.duration = 0.0105;
    CHECK(c.num_slots() == 10);
}

TEST_CASE("normalized Doppler") {
    ChannelConfig c;
    CHECK(normalized_doppler(c, 200) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(normalized_doppler(c, 1) == doctest::Approx(0.03).epsilon(1e-12));
    c.doppler_hz = 0.0;
    CHECK(normalized_doppler(c, 77) == 0.0);
    CHECK_THROWS_AS(normalized_doppler(c, 0), std::invalid_argument);
}

TEST_CASE("delay profile hits the requested RMS spread") {
    const double ts = 4e-6 / 16;
    for (double rms : {50e-9, 216.5e-9, 600e-9, 1083e-9}) {
        CAPTURE(rms);
        const auto pdp = exponential_delay_profile(rms, ts, 16);
        double total = 0.0;
        for (double p : pdp.powers)
            total += p;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(pdp.rms_delay() == doctest::Approx(rms).epsilon(1e-6));
        CHECK(pdp.powers.size() <= 16);
        for (std::size_t l = 1; l < pdp.powers.size(); ++l)
            CHECK(pdp.powers[l] < pdp.powers[l - 1]);
    }
}

TEST_CASE("delay profile at 216.5 ns decays by about a third per tap") {
    // Untruncated exponential profile on the tap grid: rms / Ts = sqrt(q) / (1 - q),
    // which is 0.866 = sqrt(3)/2 at q = 1/3. Truncation nudges q up slightly.
    const auto pdp = exponential_delay_profile(216.5e-9, 250e-9, 16);
    REQUIRE(pdp.powers.size() >= 3);
    CHECK(pdp.powers[1] / pdp.powers[0] == doctest::Approx(1.0 / 3.0).epsilon(0.03));
}

TEST_CASE("delay profile edge cases") {
    const auto flat = exponential_delay_profile(0.0, 250e-9, 16);
    CHECK(flat.powers.size() == 1);
    CHECK(flat.powers[0] == 1.0);
    // A flat profile over 16 taps at 250 ns has an RMS spread of about 1.15 us.
    CHECK_THROWS_AS(exponential_delay_profile(1.2e-6, 250e-9, 16), std::invalid_argument);
    CHECK_THROWS_AS(exponential_delay_profile(-1e-9, 250e-9, 16), std::invalid_argument);
}

TEST_CASE("generate_trace rejects an unrepresentable delay spread") {
    ChannelConfig c = short_config();
    c.rms_delay_spread = 5e-6;
    CHECK_THROWS_AS(generate_trace(c), std::invalid_argument);
}

TEST_CASE("trace shape and rate map") {
    const ChannelConfig c = short_config();
    const auto tr = generate_trace(c);
    REQUIRE(tr.num_slots() == 50);
    for (const auto& r : tr.rates) {
        CHECK(r.rows() == 4);
        CHECK(r.cols() == 16);
        for (double v : r.data())
            CHECK(v >= 0.0);
    }
    // b = log2(1 + snr |H|^2) with snr = 10^(13/10)
    const auto gains = power_gains(generate_taps(c), c.num_subcarriers);
    const double snr = std::pow(10.0, 1.3);
    CHECK(tr.rates[7](2, 5) == doctest::Approx(std::log2(1.0 + snr * gains[7](2, 5))).epsilon(1e-12));
}

TEST_CASE("flat fading gives identical rates on every subcarrier") {
    ChannelConfig c = short_config(0.2);
    c.rms_delay_spread = 0.0;
    const auto tr = generate_trace(c);
    for (const auto& r : tr.rates)
        for (std::size_t i = 0; i < r.rows(); ++i)
            for (std::size_t k = 1; k < r.cols(); ++k)
                REQUIRE(r(i, k) == r(i, 0));
}

TEST_CASE("determinism") {
    const ChannelConfig c = short_config();
    const auto a = generate_trace(c), b = generate_trace(c);
    CHECK(a.rates == b.rates);
    ChannelConfig other = c;
    other.seed = c.seed + 1;
    CHECK_FALSE(generate_trace(other).rates == a.rates);
}

TEST_CASE("users are generated independently of the user count") {
    ChannelConfig c = short_config();
    ChannelConfig two = c;
    two.num_users = 2;
    two.mean_snr_db = {13.0, 13.0};
    const auto a = generate_trace(c), b = generate_trace(two);
    for (std::size_t n = 0; n < a.num_slots(); ++n)
        for (std::size_t k = 0; k < 16; ++k)
            REQUIRE(a.rates[n](1, k) == b.rates[n](1, k));
}

TEST_CASE("power normalization over a one-second trace") {
    ChannelConfig c;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        c.seed = seed;
        const auto gains = power_gains(generate_taps(c), c.num_subcarriers);
        double all = 0.0;
        for (std::size_t u = 0; u < c.num_users; ++u) {
            const double m = mean_power(gains, u);
            CAPTURE(seed);
            CAPTURE(u);
            CHECK(m == doctest::Approx(1.0).epsilon(0.10));
            all += m / static_cast<double>(c.num_users);
        }
        CHECK(all == doctest::Approx(1.0).epsilon(0.05));
    }
}

TEST_CASE("tap autocorrelation follows J0") {
    ChannelConfig c = short_config(0.1);
    const std::size_t max_lag = 10;
    std::vector<double> num(max_lag + 1, 0.0);
    double den = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        c.seed = seed;
        const auto taps = generate_taps(c);
        for (std::size_t u = 0; u < taps.users(); ++u)
            for (std::size_t n = 0; n + max_lag < taps.slots(); ++n) {
                const auto h0 = taps.at(u, n, 0);
                den += std::norm(h0);
                for (std::size_t l = 0; l <= max_lag; ++l)
                    num[l] += std::real(h0 * std::conj(taps.at(u, n + l, 0)));
            }
    }
    for (std::size_t l = 0; l <= max_lag; ++l) {
        const double tau = static_cast<double>(l) * c.slot_duration;
        CAPTURE(l);
        CHECK(std::abs(num[l] / den - oracle::j0(2.0 * std::numbers::pi * c.doppler_hz * tau)) <= 0.1);
    }
}

TEST_CASE("adjacent subcarriers decorrelate as the delay spread grows") {
    auto adjacent_correlation = [](double rms) {
        double sxy = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, count = 0.0;
        for (std::uint64_t seed = 1; seed <= 100; ++seed) {
            ChannelConfig c;
            c.duration = 0.02;
            c.rms_delay_spread = rms;
            c.seed = seed;
            for (const auto& g : power_gains(generate_taps(c), c.num_subcarriers))
                for (std::size_t u = 0; u < g.rows(); ++u)
                    for (std::size_t k = 0; k + 1 < g.cols(); ++k) {
                        const double x = std::sqrt(g(u, k)), y = std::sqrt(g(u, k + 1));
                        sxy += x * y;
                        sx += x;
                        sy += y;
                        sxx += x * x;
                        syy += y * y;
                        count += 1.0;
                    }
        }
        const double cov = sxy / count - (sx / count) * (sy / count);
        return cov / std::sqrt((sxx / count - sx * sx / count / count) * (syy / count - sy * sy / count / count));
    };
    const double flat = adjacent_correlation(0.0);
    const double mid = adjacent_correlation(216.5e-9);
    const double wide = adjacent_correlation(1083e-9);
    CHECK(flat == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mid < flat);
    CHECK(wide < mid);
}

TEST_CASE("trace CSV round trip") {
    const auto tr = generate_trace(short_config(0.003));
    std::stringstream ss;
    write_trace_csv(tr, ss);
    const std::string text = ss.str();
    CHECK(text.rfind("slot,user,subcarrier,rate_bits_per_symbol\n", 0) == 0);

    const auto back = read_trace_csv(ss);
    REQUIRE(back.num_slots() == tr.num_slots());
    CHECK(back.config.num_users == 4);
    CHECK(back.config.num_subcarriers == 16);
    for (std::size_t n = 0; n < tr.num_slots(); ++n)
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t k = 0; k < 16; ++k)
                CHECK(back.rates[n](i, k) == doctest::Approx(tr.rates[n](i, k)).epsilon(1e-8));
}

TEST_CASE("trace CSV import rejects malformed input") {
    std::stringstream bad_header("slot,user,rate\n0,0,1\n");
    CHECK_THROWS(read_trace_csv(bad_header));
    std::stringstream bad_row("slot,user,subcarrier,rate_bits_per_symbol\n0,0,x,1\n");
    CHECK_THROWS(read_trace_csv(bad_row));
}

} // TEST_SUITE
