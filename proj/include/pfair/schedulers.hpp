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

// Slot-by-slot schedulers driven by a per-user sliding throughput window.
//
// Slots are numbered from 1. Before slot n is scheduled the window holds the
// throughputs of slots max(1, n - W + 1) .. n - 1, so the look-back credit is
// a_i[n-1] = (sum of those) / min(n, W) and the smoothed throughput after the
// slot is a_i[n-1] + T_i[n] / min(n, W).

#include <cstddef>
#include <deque>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pfair/ensemble.hpp"
#include "pfair/maxmin.hpp"
#include "pfair/pf_solver.hpp"

namespace pfair {

using BacklogFlags = std::vector<bool>;

enum class BacklogMode {
    saturated,  // every user always has data; flags are ignored
    credit,     // idle slots stay in the window as zero throughput
    busy_period // the window restarts at the beginning of each busy period
};

std::string to_string(BacklogMode m);
BacklogMode backlog_mode_from_string(const std::string& s);

enum class SchedulerType { pf_w1, pf_lookback, pf_infinite, max_throughput, maxmin_lookback };

struct SchedulerKind {
    SchedulerType type = SchedulerType::pf_w1;
    std::size_t window = 1; // look-back kinds only
    std::shared_ptr<const EnsemblePolicy> policy; // pf_infinite only
    BacklogMode backlog = BacklogMode::saturated;

    static SchedulerKind pf_w1();
    static SchedulerKind pf_lookback(std::size_t window);
    static SchedulerKind pf_infinite(std::shared_ptr<const EnsemblePolicy> policy);
    static SchedulerKind max_throughput();
    static SchedulerKind maxmin_lookback(std::size_t window);

    std::string name() const;
    void validate() const;
};

/// Parses the CSV names produced by SchedulerKind::name().
SchedulerType scheduler_type_from_string(const std::string& s);

/// Marks an unbounded window (history average over all n slots).
inline constexpr std::size_t kUnboundedWindow = std::numeric_limits<std::size_t>::max();

/// Start of the busy period containing the current slot, per user.
class BusyTrace {
  public:
    explicit BusyTrace(std::size_t users) : backlogged_(users, false), start_(users, 0) {}

    /// n_i[n] if user i is backlogged in slot n (given the previous slot's flags).
    std::size_t start(std::size_t user, std::size_t slot) const {
        return backlogged_[user] ? start_[user] : slot;
    }
    bool was_backlogged(std::size_t user) const { return backlogged_[user]; }

    void record(const BacklogFlags& flags, std::size_t slot);

  private:
    std::vector<bool> backlogged_;
    std::vector<std::size_t> start_;
};

class WindowState {
  public:
    WindowState(std::size_t users, std::size_t window);
    explicit WindowState(std::vector<std::size_t> windows);

    std::size_t users() const { return windows_.size(); }
    /// The slot about to be scheduled (1-based).
    std::size_t slot() const { return slot_; }
    std::size_t window(std::size_t user) const { return windows_[user]; }

    /// min(n, W_i)
    double divisor(std::size_t user) const;
    /// a_i[n-1] over the full window (saturated and credit modes).
    double baseline(std::size_t user) const;

    /// min(n - n_i + 1, W_i) for a busy period starting at n_i.
    double busy_divisor(std::size_t user, std::size_t busy_start) const;
    /// sum_{m = max(n_i, n - W_i + 1)}^{n-1} T_i[m] / busy_divisor.
    double busy_baseline(std::size_t user, std::size_t busy_start) const;

    const BusyTrace& busy() const { return busy_; }

    /// Number of past throughputs currently held for a user (at most W_i - 1).
    std::size_t stored(std::size_t user) const { return history_[user].size(); }

    /// Appends T_i[n] and advances to slot n + 1.
    void record(std::span<const double> throughputs, const BacklogFlags& backlog);

  private:
    std::vector<std::size_t> windows_;
    std::vector<std::deque<double>> history_;
    std::size_t slot_ = 1;
    BusyTrace busy_;
};

/// Baselines, divisors and served set for slot n under the given backlog mode.
SlotProblem lookback_problem(const WindowState& state, const Matrix& rates, const BacklogFlags& backlog,
                             BacklogMode mode);

Allocation schedule_slot(const SchedulerKind& kind, const WindowState& state, const Matrix& rates,
                         const BacklogFlags& backlog, const PfSolverOptions& opts = {});

/// Per-slot throughput T_i[n] = sum_k P_{i,k} b_{i,k} is appended for every user (zero when idle).
void update_state(WindowState& state, const Allocation& alloc, const Matrix& rates, const BacklogFlags& backlog);

/// Max-min of the look-back smoothed throughput over backlogged users.
MaxMinReport maxmin_slot(const WindowState& state, const Matrix& rates, const BacklogFlags& backlog,
                         BacklogMode mode = BacklogMode::saturated);

} // namespace pfair
