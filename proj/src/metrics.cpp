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

#include "pfair/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pfair {

Matrix ThroughputSeries::smoothed() const {
    if (window < 1)
        throw std::invalid_argument("ThroughputSeries: window must be >= 1");
    const std::size_t N = slots(), U = users();
    Matrix out(N, U);
    std::vector<double> prefix(N + 1);
    for (std::size_t i = 0; i < U; ++i) {
        for (std::size_t n = 0; n < N; ++n)
            prefix[n + 1] = prefix[n] + per_slot(n, i);
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t count = std::min(n + 1, window);
            out(n, i) = std::max(0.0, prefix[n + 1] - prefix[n + 1 - count]) / static_cast<double>(count);
        }
    }
    return out;
}

double jain_index(const std::vector<double>& x) {
    double s = 0.0, s2 = 0.0;
    for (double v : x) {
        s += v;
        s2 += v * v;
    }
    if (!(s2 > 0.0))
        throw std::domain_error("jain_index: all-zero throughput vector");
    return s * s / (static_cast<double>(x.size()) * s2);
}

double jain_index(const ThroughputSeries& series, bool skip_warmup) {
    const Matrix sm = series.smoothed();
    const std::size_t U = series.users();
    // Running mean, so a constant per-slot index averages to itself exactly.
    double mean = 0.0;
    std::size_t included = 0;
    for (std::size_t n = 0; n < series.slots(); ++n) {
        if (skip_warmup && n + 1 < series.window)
            continue;
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < U; ++i) {
            s += sm(n, i);
            s2 += sm(n, i) * sm(n, i);
        }
        if (!(s2 > 0.0))
            continue;
        ++included;
        mean += (s * s / (static_cast<double>(U) * s2) - mean) / static_cast<double>(included);
    }
    if (included == 0)
        throw std::domain_error("jain_index: no slot with positive throughput");
    return mean;
}

double system_throughput(const ThroughputSeries& series) {
    if (series.slots() == 0)
        throw std::domain_error("system_throughput: empty series");
    const auto d = series.per_slot.data();
    return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(series.slots());
}

std::vector<double> user_mean_throughput(const ThroughputSeries& series) {
    if (series.slots() == 0)
        throw std::domain_error("user_mean_throughput: empty series");
    std::vector<double> out(series.users(), 0.0);
    for (std::size_t n = 0; n < series.slots(); ++n)
        for (std::size_t i = 0; i < series.users(); ++i)
            out[i] += series.per_slot(n, i);
    for (auto& v : out)
        v /= static_cast<double>(series.slots());
    return out;
}

MetricSummary summarize(const std::vector<double>& values) {
    if (values.size() < 2)
        throw std::invalid_argument("summarize: at least two replications are required");
    const double R = static_cast<double>(values.size());
    MetricSummary s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / R;
    double ss = 0.0;
    for (double v : values)
        ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (R - 1.0));
    s.half_width = 1.96 * s.stddev / std::sqrt(R);
    return s;
}

} // namespace pfair
