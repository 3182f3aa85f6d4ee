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

#include "pfair/schedulers.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace pfair {

namespace {

bool backlogged(const BacklogFlags& flags, std::size_t user) { return flags.empty() || flags[user]; }

void check_flags(const BacklogFlags& flags, std::size_t users) {
    if (!flags.empty() && flags.size() != users)
        throw std::invalid_argument("backlog flags must have one entry per user");
}

} // namespace

std::string to_string(BacklogMode m) {
    switch (m) {
    case BacklogMode::saturated: return "saturated";
    case BacklogMode::credit: return "credit";
    case BacklogMode::busy_period: return "busy_period";
    }
    return "?";
}

BacklogMode backlog_mode_from_string(const std::string& s) {
    if (s == "saturated")
        return BacklogMode::saturated;
    if (s == "credit")
        return BacklogMode::credit;
    if (s == "busy_period")
        return BacklogMode::busy_period;
    throw std::invalid_argument("unknown backlog mode '" + s + "'");
}

SchedulerKind SchedulerKind::pf_w1() { return {SchedulerType::pf_w1, 1, nullptr, BacklogMode::saturated}; }

SchedulerKind SchedulerKind::pf_lookback(std::size_t window) {
    return {SchedulerType::pf_lookback, window, nullptr, BacklogMode::saturated};
}

SchedulerKind SchedulerKind::pf_infinite(std::shared_ptr<const EnsemblePolicy> policy) {
    return {SchedulerType::pf_infinite, kUnboundedWindow, std::move(policy), BacklogMode::saturated};
}

SchedulerKind SchedulerKind::max_throughput() {
    return {SchedulerType::max_throughput, 1, nullptr, BacklogMode::saturated};
}

SchedulerKind SchedulerKind::maxmin_lookback(std::size_t window) {
    return {SchedulerType::maxmin_lookback, window, nullptr, BacklogMode::saturated};
}

std::string SchedulerKind::name() const {
    switch (type) {
    case SchedulerType::pf_w1: return "pf_w1";
    case SchedulerType::pf_lookback: return "pf_lookback";
    case SchedulerType::pf_infinite: return "pf_infinite";
    case SchedulerType::max_throughput: return "max_throughput";
    case SchedulerType::maxmin_lookback: return "maxmin";
    }
    return "?";
}

SchedulerType scheduler_type_from_string(const std::string& s) {
    if (s == "pf_w1")
        return SchedulerType::pf_w1;
    if (s == "pf_lookback")
        return SchedulerType::pf_lookback;
    if (s == "pf_infinite")
        return SchedulerType::pf_infinite;
    if (s == "max_throughput" || s == "mt")
        return SchedulerType::max_throughput;
    if (s == "maxmin" || s == "maxmin_lookback")
        return SchedulerType::maxmin_lookback;
    throw std::invalid_argument("unknown scheduler '" + s + "'");
}

void SchedulerKind::validate() const {
    if (window < 1)
        throw std::invalid_argument("SchedulerKind: window must be >= 1");
    if (type == SchedulerType::pf_infinite) {
        if (!policy)
            throw std::invalid_argument("SchedulerKind: pf_infinite needs an ensemble policy");
        policy->validate();
    }
}

void BusyTrace::record(const BacklogFlags& flags, std::size_t slot) {
    for (std::size_t i = 0; i < backlogged_.size(); ++i) {
        if (backlogged(flags, i)) {
            if (!backlogged_[i])
                start_[i] = slot;
            backlogged_[i] = true;
        } else {
            backlogged_[i] = false;
        }
    }
}

WindowState::WindowState(std::size_t users, std::size_t window)
    : WindowState(std::vector<std::size_t>(users, window)) {}

WindowState::WindowState(std::vector<std::size_t> windows)
    : windows_(std::move(windows)), history_(windows_.size()), busy_(windows_.size()) {
    if (windows_.empty())
        throw std::invalid_argument("WindowState: no users");
    for (std::size_t w : windows_)
        if (w < 1)
            throw std::invalid_argument("WindowState: window must be >= 1");
}

double WindowState::divisor(std::size_t user) const {
    return static_cast<double>(std::min(slot_, windows_[user]));
}

double WindowState::baseline(std::size_t user) const {
    const auto& h = history_[user];
    return std::accumulate(h.begin(), h.end(), 0.0) / divisor(user);
}

double WindowState::busy_divisor(std::size_t user, std::size_t busy_start) const {
    if (busy_start < 1 || busy_start > slot_)
        throw std::invalid_argument("WindowState: busy period start outside [1, n]");
    return static_cast<double>(std::min(slot_ - busy_start + 1, windows_[user]));
}

double WindowState::busy_baseline(std::size_t user, std::size_t busy_start) const {
    const double d = busy_divisor(user, busy_start);
    const auto& h = history_[user];
    const std::size_t count = std::min<std::size_t>(slot_ - busy_start, h.size());
    return std::accumulate(h.end() - static_cast<std::ptrdiff_t>(count), h.end(), 0.0) / d;
}

void WindowState::record(std::span<const double> throughputs, const BacklogFlags& backlog) {
    if (throughputs.size() != users())
        throw std::invalid_argument("WindowState::record: one throughput per user required");
    check_flags(backlog, users());
    for (std::size_t i = 0; i < users(); ++i) {
        auto& h = history_[i];
        h.push_back(throughputs[i]);
        if (windows_[i] != kUnboundedWindow)
            while (h.size() > windows_[i] - 1)
                h.pop_front();
    }
    busy_.record(backlog, slot_);
    ++slot_;
}

SlotProblem lookback_problem(const WindowState& state, const Matrix& rates, const BacklogFlags& backlog,
                             BacklogMode mode) {
    const std::size_t U = state.users();
    if (rates.rows() != U)
        throw std::invalid_argument("lookback_problem: rate matrix and window disagree on the user count");
    check_flags(backlog, U);

    SlotProblem p;
    p.rates = rates;
    p.baseline.resize(U);
    p.divisor.resize(U);
    p.active.resize(U);
    for (std::size_t i = 0; i < U; ++i) {
        p.active[i] = mode == BacklogMode::saturated || backlogged(backlog, i);
        if (mode == BacklogMode::busy_period && p.active[i]) {
            const std::size_t start = state.busy().start(i, state.slot());
            p.divisor[i] = state.busy_divisor(i, start);
            p.baseline[i] = state.busy_baseline(i, start);
        } else {
            p.divisor[i] = state.divisor(i);
            p.baseline[i] = state.baseline(i);
        }
    }
    if (std::none_of(p.active.begin(), p.active.end(), [](bool a) { return a; }))
        throw std::invalid_argument("schedule_slot: no backlogged user");
    return p;
}

Allocation schedule_slot(const SchedulerKind& kind, const WindowState& state, const Matrix& rates,
                         const BacklogFlags& backlog, const PfSolverOptions& opts) {
    switch (kind.type) {
    case SchedulerType::pf_w1: {
        SlotProblem p = lookback_problem(state, rates, backlog, kind.backlog);
        std::fill(p.baseline.begin(), p.baseline.end(), 0.0);
        std::fill(p.divisor.begin(), p.divisor.end(), 1.0);
        return solve_pf_slot(p, opts).allocation;
    }
    case SchedulerType::pf_lookback:
        return solve_pf_slot(lookback_problem(state, rates, backlog, kind.backlog), opts).allocation;
    case SchedulerType::maxmin_lookback:
        return maxmin_slot(state, rates, backlog, kind.backlog).allocation;
    case SchedulerType::pf_infinite: {
        if (!kind.policy)
            throw std::invalid_argument("schedule_slot: pf_infinite without a policy");
        const SlotProblem p = lookback_problem(state, rates, backlog, kind.backlog);
        return ensemble_dispatch(*kind.policy, rates, p.active);
    }
    case SchedulerType::max_throughput: {
        const SlotProblem p = lookback_problem(state, rates, backlog, kind.backlog);
        return max_rate_dispatch(rates, p.active);
    }
    }
    throw std::logic_error("schedule_slot: unknown scheduler type");
}

void update_state(WindowState& state, const Allocation& alloc, const Matrix& rates, const BacklogFlags& backlog) {
    auto t = alloc.user_throughput(rates);
    for (std::size_t i = 0; i < t.size(); ++i)
        if (!backlogged(backlog, i))
            t[i] = 0.0;
    state.record(t, backlog);
}

MaxMinReport maxmin_slot(const WindowState& state, const Matrix& rates, const BacklogFlags& backlog,
                         BacklogMode mode) {
    return solve_maxmin_slot(lookback_problem(state, rates, backlog, mode));
}

} // namespace pfair
