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
#include <vector>

#include "pfair/pf_solver.hpp"

namespace pfair {

struct MaxMinReport {
    Allocation allocation;
    double min_throughput = 0.0; // min_i a_i + (1/d_i) sum_k P_{i,k} b_{i,k} over served users
    std::size_t pivots = 0;
    std::vector<std::size_t> excluded_users;
};

/// Smoothed throughput a_i + x_i / d_i of every user (0 for users outside the active set).
std::vector<double> smoothed_throughput(const SlotProblem& prob, const Allocation& alloc);

/// Maximizes the minimum smoothed throughput over the active users.
///
/// The program is linear, so it is solved exactly as an LP: maximize z
/// subject to z <= a_i + (1/d_i) sum_k P_{i,k} b_{i,k} and per-channel
/// airtime sums <= 1, by a dense simplex with Bland's rule. Airtime left
/// over on a channel (only possible when no minimum user can use it) goes to
/// the served user with the highest rate there. Users with zero baseline and
/// no positive rate are excluded, as in the PF solver.
MaxMinReport solve_maxmin_slot(const SlotProblem& prob);

} // namespace pfair
