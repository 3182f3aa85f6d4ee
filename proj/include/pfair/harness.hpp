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

// Replicated scheduling experiments over a parameter sweep.
//
// For every (sweep value, replication) one channel trace is generated with
// seed base_seed + replication and every scheduler runs on that same trace.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pfair/channel.hpp"
#include "pfair/ensemble.hpp"
#include "pfair/metrics.hpp"
#include "pfair/schedulers.hpp"

namespace pfair {

enum class SweepAxis { window_slots, doppler_hz, rms_delay_spread };

std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

struct ExperimentConfig {
    ChannelConfig channel;
    std::vector<SchedulerType> schedulers = {SchedulerType::pf_lookback, SchedulerType::pf_w1,
                                             SchedulerType::pf_infinite, SchedulerType::max_throughput,
                                             SchedulerType::maxmin_lookback};
    SweepAxis axis = SweepAxis::window_slots;
    std::vector<double> values = {1, 50, 200, 1000};
    std::size_t window_slots = 200; // application window when the sweep is not over W
    std::size_t replications = 10;
    std::uint64_t base_seed = 1;
    bool skip_warmup = false;
    BacklogMode backlog = BacklogMode::saturated;
    std::string output_path = "results.csv";
    std::size_t threads = 0; // 0: one per hardware thread
    PfSolverOptions solver;
    FixedPointOptions fixed_point;

    void validate() const;

    /// Channel configuration and application window at one sweep point.
    ChannelConfig channel_at(double sweep_value) const;
    std::size_t window_at(double sweep_value) const;
};

/// Desk scale: 10 replications of 0.2 s. Paper scale: 100 replications of 1 s.
void apply_scale(ExperimentConfig& cfg, const std::string& scale);

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

struct ResultRow {
    double sweep_value = 0.0;
    std::string scheduler;
    std::size_t replication = 0;
    double system_throughput = 0.0;
    double jain_index = 0.0;
    std::vector<double> user_throughputs;
};

struct AggregateRow {
    double sweep_value = 0.0;
    std::string scheduler;
    MetricSummary system_throughput;
    MetricSummary jain_index;
    std::vector<MetricSummary> user_throughputs;
};

struct FailureRow {
    double sweep_value = 0.0;
    std::size_t replication = 0;
    std::string message;
};

struct ExperimentResult {
    SweepAxis axis = SweepAxis::window_slots;
    std::vector<ResultRow> rows;           // (sweep, scheduler, replication) order
    std::vector<AggregateRow> aggregates;  // (sweep, scheduler) order; needs >= 2 replications
    std::vector<FailureRow> failures;

    bool ok() const { return failures.empty(); }
    /// Rows for one (sweep value, scheduler) pair, in replication order.
    std::vector<const ResultRow*> select(double sweep_value, const std::string& scheduler) const;
    const AggregateRow* aggregate(double sweep_value, const std::string& scheduler) const;
};

struct RunRecord {
    ThroughputSeries series;
    std::vector<Allocation> allocations; // only when requested
};

/// Runs one scheduler over a trace. `backlog` holds per-slot flags (empty: saturated).
RunRecord simulate(const SchedulerKind& kind, const ChannelTrace& trace, std::size_t metric_window,
                   const std::vector<BacklogFlags>& backlog = {}, bool keep_allocations = false,
                   const PfSolverOptions& opts = {});

/// Builds the scheduler list for one sweep point (look-back kinds use `window`).
std::vector<SchedulerKind> make_schedulers(const ExperimentConfig& cfg, std::size_t window,
                                           std::shared_ptr<const EnsemblePolicy> policy);

/// Fixed-point policy for the users' Rayleigh channels on `cfg.num_subcarriers` subcarriers.
std::shared_ptr<const EnsemblePolicy> rayleigh_policy(const ChannelConfig& cfg, const FixedPointOptions& opts = {});

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Header `sweep_axis,sweep_value,scheduler,replication,system_throughput,jain_index,user_throughputs`.
void emit_csv(const ExperimentResult& result, std::ostream& os);
void emit_csv(const ExperimentResult& result, const std::string& path);

} // namespace pfair
