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

#include "pfair/channel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pfair {

namespace {

constexpr double kTruncationResidual = 1e-3;

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

// Unit-power truncated geometric profile q^l, l = 0..taps-1.
std::vector<double> geometric_profile(double q, std::size_t taps) {
    std::vector<double> p(taps);
    double w = 1.0, total = 0.0;
    for (std::size_t l = 0; l < taps; ++l) {
        p[l] = w;
        total += w;
        w *= q;
    }
    for (auto& v : p)
        v /= total;
    return p;
}

double profile_rms(const std::vector<double>& p, double spacing) {
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t l = 0; l < p.size(); ++l) {
        const double t = static_cast<double>(l) * spacing;
        m1 += p[l] * t;
        m2 += p[l] * t * t;
    }
    return std::sqrt(std::max(0.0, m2 - m1 * m1));
}

} // namespace

void ChannelConfig::validate() const {
    if (num_users < 1)
        throw std::invalid_argument("ChannelConfig: num_users must be >= 1");
    if (!is_power_of_two(num_subcarriers))
        throw std::invalid_argument("ChannelConfig: num_subcarriers must be a power of two");
    if (!(symbol_duration > 0.0))
        throw std::invalid_argument("ChannelConfig: symbol_duration must be > 0");
    if (!(slot_duration > 0.0))
        throw std::invalid_argument("ChannelConfig: slot_duration must be > 0");
    if (!(doppler_hz >= 0.0))
        throw std::invalid_argument("ChannelConfig: doppler_hz must be >= 0");
    if (!(rms_delay_spread >= 0.0))
        throw std::invalid_argument("ChannelConfig: rms_delay_spread must be >= 0");
    if (!(duration > 0.0))
        throw std::invalid_argument("ChannelConfig: duration must be > 0");
    if (mean_snr_db.size() != num_users)
        throw std::invalid_argument("ChannelConfig: mean_snr_db must have num_users entries");
    for (double s : mean_snr_db)
        if (!std::isfinite(s))
            throw std::invalid_argument("ChannelConfig: mean_snr_db entries must be finite");
}

std::size_t ChannelConfig::num_slots() const {
    // 1.0 / 1e-3 lands a hair below 1000 in binary floating point
    return static_cast<std::size_t>(std::floor(duration / slot_duration + 1e-9));
}

double PowerDelayProfile::mean_delay() const {
    double m1 = 0.0;
    for (std::size_t l = 0; l < powers.size(); ++l)
        m1 += powers[l] * static_cast<double>(l) * tap_spacing;
    return m1;
}

double PowerDelayProfile::rms_delay() const { return profile_rms(powers, tap_spacing); }

PowerDelayProfile exponential_delay_profile(double rms_delay, double tap_spacing, std::size_t max_taps) {
    if (!(rms_delay >= 0.0) || !(tap_spacing > 0.0) || max_taps < 1)
        throw std::invalid_argument("exponential_delay_profile: invalid arguments");

    PowerDelayProfile pdp;
    pdp.tap_spacing = tap_spacing;
    if (rms_delay == 0.0) {
        pdp.powers = {1.0};
        return pdp;
    }

    // Untruncated geometric profile: rms / spacing = sqrt(q) / (1 - q).
    const double r = rms_delay / tap_spacing;
    const double s = (-1.0 + std::sqrt(1.0 + 4.0 * r * r)) / (2.0 * r);
    const double q_inf = s * s;
    std::size_t taps = 2;
    if (q_inf > 0.0 && q_inf < 1.0) {
        const double needed = std::ceil(std::log(kTruncationResidual) / std::log(q_inf));
        taps = std::max<std::size_t>(2, static_cast<std::size_t>(needed));
    }
    taps = std::min(taps, max_taps);

    const double ceiling = profile_rms(geometric_profile(1.0, taps), tap_spacing);
    if (taps < 2 || rms_delay > ceiling * (1.0 + 1e-12))
        throw std::invalid_argument("exponential_delay_profile: RMS delay spread " + std::to_string(rms_delay) +
                                    " s cannot be represented with " + std::to_string(max_taps) + " taps");

    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (profile_rms(geometric_profile(mid, taps), tap_spacing) < rms_delay)
            lo = mid;
        else
            hi = mid;
    }
    const double q = 0.5 * (lo + hi);
    pdp.powers = geometric_profile(q, taps);
    pdp.decay = q < 1.0 ? -tap_spacing / std::log(q) : std::numeric_limits<double>::infinity();
    return pdp;
}

FadingTaps generate_taps(const ChannelConfig& cfg) {
    cfg.validate();
    const PowerDelayProfile pdp =
        exponential_delay_profile(cfg.rms_delay_spread, cfg.tap_spacing(), cfg.num_subcarriers);
    const std::size_t slots = cfg.num_slots();
    const std::size_t taps = pdp.powers.size();
    FadingTaps out(cfg.num_users, slots, taps);

    constexpr double two_pi = 2.0 * std::numbers::pi;
    std::uniform_real_distribution<double> angle(0.0, two_pi);

    for (std::size_t u = 0; u < cfg.num_users; ++u) {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(u)};
        std::mt19937_64 rng(seq);
        for (std::size_t l = 0; l < taps; ++l) {
            std::array<double, kSinusoidsPerTap> omega{};
            std::array<double, kSinusoidsPerTap> phase{};
            // One arrival angle per stratum of (0, pi), shifted by a common
            // random offset: each angle is still uniform on its own, but no two
            // Doppler shifts coincide, so time averages of |h|^2 settle on the
            // tap power instead of beating between near-equal frequencies.
            const double offset = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            for (std::size_t m = 0; m < kSinusoidsPerTap; ++m) {
                const double theta =
                    std::numbers::pi * (static_cast<double>(m) + offset) / static_cast<double>(kSinusoidsPerTap);
                omega[m] = two_pi * cfg.doppler_hz * std::cos(theta);
                phase[m] = angle(rng);
            }
            const double amp = std::sqrt(pdp.powers[l] / static_cast<double>(kSinusoidsPerTap));
            for (std::size_t n = 0; n < slots; ++n) {
                const double t = static_cast<double>(n) * cfg.slot_duration;
                std::complex<double> g{};
                for (std::size_t m = 0; m < kSinusoidsPerTap; ++m)
                    g += std::polar(amp, omega[m] * t + phase[m]);
                out.at(u, n, l) = g;
            }
        }
    }
    return out;
}

std::vector<Matrix> power_gains(const FadingTaps& taps, std::size_t num_subcarriers) {
    const std::size_t S = num_subcarriers;
    std::vector<std::complex<double>> twiddle(S);
    for (std::size_t j = 0; j < S; ++j)
        twiddle[j] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(S));

    std::vector<Matrix> out(taps.slots(), Matrix(taps.users(), S));
    for (std::size_t n = 0; n < taps.slots(); ++n) {
        for (std::size_t u = 0; u < taps.users(); ++u) {
            for (std::size_t k = 0; k < S; ++k) {
                std::complex<double> h{};
                for (std::size_t l = 0; l < taps.taps(); ++l)
                    h += taps.at(u, n, l) * twiddle[(k * l) % S];
                out[n](u, k) = std::norm(h);
            }
        }
    }
    return out;
}

ChannelTrace generate_trace(const ChannelConfig& cfg) {
    const FadingTaps taps = generate_taps(cfg);
    ChannelTrace trace;
    trace.config = cfg;
    trace.rates = power_gains(taps, cfg.num_subcarriers);

    std::vector<double> snr(cfg.num_users);
    for (std::size_t u = 0; u < cfg.num_users; ++u)
        snr[u] = std::pow(10.0, cfg.mean_snr_db[u] / 10.0);
    for (auto& m : trace.rates)
        for (std::size_t u = 0; u < m.rows(); ++u)
            for (auto& v : m.row(u))
                v = std::log2(1.0 + snr[u] * v);
    return trace;
}

double normalized_doppler(const ChannelConfig& cfg, std::size_t window_slots) {
    if (window_slots < 1)
        throw std::invalid_argument("normalized_doppler: window_slots must be >= 1");
    return cfg.doppler_hz * static_cast<double>(window_slots) * cfg.slot_duration;
}

void write_trace_csv(const ChannelTrace& trace, std::ostream& os) {
    os << "slot,user,subcarrier,rate_bits_per_symbol\n";
    char buf[64];
    for (std::size_t n = 0; n < trace.rates.size(); ++n) {
        const Matrix& m = trace.rates[n];
        for (std::size_t u = 0; u < m.rows(); ++u) {
            for (std::size_t k = 0; k < m.cols(); ++k) {
                std::snprintf(buf, sizeof buf, "%.9g", m(u, k));
                os << n << ',' << u << ',' << k << ',' << buf << '\n';
            }
        }
    }
}

ChannelTrace read_trace_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("slot,user,subcarrier,rate_bits_per_symbol", 0) != 0)
        throw std::runtime_error("read_trace_csv: missing or malformed header");

    struct Entry {
        std::size_t n, u, k;
        double rate;
    };
    std::vector<Entry> entries;
    std::size_t slots = 0, users = 0, subcarriers = 0;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r")
            continue;
        std::istringstream ls(line);
        Entry e{};
        char c1 = 0, c2 = 0, c3 = 0;
        if (!(ls >> e.n >> c1 >> e.u >> c2 >> e.k >> c3 >> e.rate) || c1 != ',' || c2 != ',' || c3 != ',')
            throw std::runtime_error("read_trace_csv: malformed row at line " + std::to_string(line_no));
        if (!(e.rate >= 0.0))
            throw std::runtime_error("read_trace_csv: negative rate at line " + std::to_string(line_no));
        slots = std::max(slots, e.n + 1);
        users = std::max(users, e.u + 1);
        subcarriers = std::max(subcarriers, e.k + 1);
        entries.push_back(e);
    }
    if (entries.size() != slots * users * subcarriers)
        throw std::runtime_error("read_trace_csv: trace is not a complete slot x user x subcarrier grid");

    ChannelTrace trace;
    trace.config.num_users = users;
    trace.config.num_subcarriers = subcarriers;
    trace.config.mean_snr_db.assign(users, 0.0);
    trace.config.duration = static_cast<double>(slots) * trace.config.slot_duration;
    trace.rates.assign(slots, Matrix(users, subcarriers));
    for (const auto& e : entries)
        trace.rates[e.n](e.u, e.k) = e.rate;
    return trace;
}

} // namespace pfair
