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

#include <cstddef>
#include <string>
#include <vector>

#include "pfair/matrix.hpp"

namespace pfair {

/// Per-slot user throughputs T_i[n] (rows are slots, columns are users)
/// and the window used for look-back smoothing.
struct ThroughputSeries {
    Matrix per_slot; // N x U
    std::size_t window = 1;

    std::size_t slots() const { return per_slot.rows(); }
    std::size_t users() const { return per_slot.cols(); }

    /// T_i^(W)[n] = (1/min(n,W)) sum_{m=max(1,n-W+1)}^{n} T_i[m], N x U.
    Matrix smoothed() const;
};

/// Time average of the per-slot Jain index of the smoothed throughputs.
/// Slots where every smoothed throughput is zero are skipped. With
/// `skip_warmup`, slots n < W are skipped as well. Throws std::domain_error
/// when no slot is left.
double jain_index(const ThroughputSeries& series, bool skip_warmup = false);

/// Jain index of one vector: (sum x)^2 / (U sum x^2).
double jain_index(const std::vector<double>& x);

/// Time average of sum_i T_i[n].
double system_throughput(const ThroughputSeries& series);

/// Time average of T_i[n] per user.
std::vector<double> user_mean_throughput(const ThroughputSeries& series);

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;     // sample standard deviation
    double half_width = 0.0; // 1.96 s / sqrt(R)
};

/// Mean, sample standard deviation and 95% normal-approximation half-width.
/// Needs at least two values.
MetricSummary summarize(const std::vector<double>& values);

} // namespace pfair
