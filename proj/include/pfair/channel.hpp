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

#pragma once

// Frequency-selective Rayleigh fading for an OFDM downlink.
//
// Each user sees an independent tapped-delay-line channel. Taps sit at
// integer multiples of the OFDM sample period (symbol duration / number of
// subcarriers) and follow an exponential power delay profile. Every tap
// evolves in time as a Clarke sum of equal-power complex sinusoids, so its
// autocorrelation is J0(2*pi*f_d*tau). Subcarrier gains are the S-point DFT
// of the taps and rates follow the Shannon map b = log2(1 + SNR).

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "pfair/matrix.hpp"

namespace pfair {

struct ChannelConfig {
    std::size_t num_users = 4;
    std::size_t num_subcarriers = 16;
    double symbol_duration = 4e-6;     // s
    double slot_duration = 1e-3;       // s
    double doppler_hz = 30.0;          // maximum Doppler shift f_d
    double rms_delay_spread = 216.5e-9; // s
    std::vector<double> mean_snr_db = {13.0, 13.0, 13.0, 13.0};
    double duration = 1.0;             // s
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument on a violated invariant.
    void validate() const;

    /// floor(duration / slot_duration)
    std::size_t num_slots() const;

    /// OFDM sample period, the spacing of the delay taps.
    double tap_spacing() const { return symbol_duration / static_cast<double>(num_subcarriers); }
};

/// Truncated, unit-power exponential power delay profile on a uniform tap grid.
struct PowerDelayProfile {
    double tap_spacing = 0.0;
    double decay = 0.0; // tau_0 in exp(-l * tap_spacing / tau_0); 0 for a single tap
    std::vector<double> powers;

    double mean_delay() const;
    double rms_delay() const;
};

/// Builds the exponential profile whose RMS delay equals `rms_delay`.
///
/// The tap count is the smallest L for which the untruncated profile leaves
/// less than 0.1% of its power beyond tap L, capped at `max_taps`. The decay
/// constant is then solved by bisection on the truncated, renormalized
/// profile. Throws std::invalid_argument when even a flat profile over
/// `max_taps` taps cannot reach the requested spread.
PowerDelayProfile exponential_delay_profile(double rms_delay, double tap_spacing, std::size_t max_taps);

/// Complex tap gains indexed (user, slot, tap).
class FadingTaps {
  public:
    FadingTaps(std::size_t users, std::size_t slots, std::size_t taps)
        : users_(users), slots_(slots), taps_(taps), gains_(users * slots * taps) {}

    std::size_t users() const { return users_; }
    std::size_t slots() const { return slots_; }
    std::size_t taps() const { return taps_; }

    std::complex<double>& at(std::size_t u, std::size_t n, std::size_t l) {
        return gains_[(u * slots_ + n) * taps_ + l];
    }
    const std::complex<double>& at(std::size_t u, std::size_t n, std::size_t l) const {
        return gains_[(u * slots_ + n) * taps_ + l];
    }

  private:
    std::size_t users_, slots_, taps_;
    std::vector<std::complex<double>> gains_;
};

/// Number of sinusoids summed per tap.
inline constexpr std::size_t kSinusoidsPerTap = 16;

FadingTaps generate_taps(const ChannelConfig& cfg);

/// |H_{i,k}[n]|^2 per slot, from the S-point DFT of the taps.
std::vector<Matrix> power_gains(const FadingTaps& taps, std::size_t num_subcarriers);

struct ChannelTrace {
    ChannelConfig config;
    std::vector<Matrix> rates; // per slot, U x S, bits/symbol

    std::size_t num_slots() const { return rates.size(); }
};

ChannelTrace generate_trace(const ChannelConfig& cfg);

/// f_d * W * slot_duration, the W-normalized Doppler frequency.
double normalized_doppler(const ChannelConfig& cfg, std::size_t window_slots);

/// CSV with header `slot,user,subcarrier,rate_bits_per_symbol`, 9 significant digits.
void write_trace_csv(const ChannelTrace& trace, std::ostream& os);

/// Inverse of write_trace_csv. Only the shape fields of the config are recovered.
ChannelTrace read_trace_csv(std::istream& is);

} // namespace pfair
