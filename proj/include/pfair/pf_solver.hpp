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

// Per-slot proportional-fair airtime allocation.
//
// Maximizes  sum_{i in active} log(a_i + (1/d_i) * sum_k P_{i,k} b_{i,k})
// subject to sum_i P_{i,k} = 1 and P >= 0, where a_i is the look-back
// throughput credit and d_i = min(n, W_i) the smoothing divisor. With a = 0
// and d = 1 this is the W = 1 (memoryless) problem.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfair/matrix.hpp"

namespace pfair {

struct SlotProblem {
    Matrix rates;                  // U x S, bits/symbol
    std::vector<double> baseline;  // a_i[n-1]
    std::vector<double> divisor;   // min(n, W_i), >= 1
    std::vector<bool> active;      // users that may receive airtime

    /// a = 0, d = 1, all users active.
    static SlotProblem memoryless(Matrix rates);
    /// Shared divisor for every user, all users active.
    static SlotProblem lookback(Matrix rates, std::vector<double> baseline, double divisor);

    std::size_t users() const { return rates.rows(); }
    std::size_t channels() const { return rates.cols(); }

    /// Shape and sign checks. Throws std::invalid_argument.
    void validate() const;

    /// An active user with zero baseline and no positive rate: its log term is -inf whatever we do.
    bool degenerate(std::size_t user) const;
};

struct Allocation {
    Matrix airtime; // U x S, columns sum to 1 over the served users

    /// sum_k P_{i,k} b_{i,k} per user.
    std::vector<double> user_throughput(const Matrix& rates) const;
};

struct SolveReport {
    Allocation allocation;
    double utility = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
    std::vector<std::size_t> excluded_users;
    std::vector<std::string> warnings;
};

/// Raised when the iteration cap is hit; carries the best allocation found.
class ConvergenceError : public std::runtime_error {
  public:
    ConvergenceError(const std::string& what, SolveReport best)
        : std::runtime_error(what), best_(std::move(best)) {}
    const SolveReport& best() const { return best_; }

  private:
    SolveReport best_;
};

struct PfSolverOptions {
    double tol = 1e-6;
    std::size_t max_iterations = 10000;
};

inline constexpr double kSupportThreshold = 1e-9;

/// d y / d P_{i,k} = b_{i,k} / (d_i a_i + sum_k P_{i,k} b_{i,k}).
/// Zero whenever b_{i,k} = 0; throws std::domain_error on a zero denominator otherwise.
double shadow_price(const SlotProblem& prob, const Allocation& alloc, std::size_t user, std::size_t channel);

/// Objective value over the active, non-degenerate users (natural log).
double pf_utility(const SlotProblem& prob, const Allocation& alloc);

/// max_k [ max_i price(i,k) - min_{i : P_{i,k} > 1e-9} price(i,k) ] over active, non-degenerate users.
double kkt_residual(const SlotProblem& prob, const Allocation& alloc);

/// Uniform airtime over the active, non-degenerate users.
Allocation uniform_allocation(const SlotProblem& prob);

/// Pairwise conditional-gradient ascent over the product of per-channel simplices.
///
/// Each sweep visits every channel and shifts airtime from the served user
/// with the lowest shadow price to the user with the highest one, using an
/// exact line search on the two-term log segment. Terminates once the KKT
/// residual is within `tol`.
SolveReport solve_pf_slot(const SlotProblem& prob, const PfSolverOptions& opts = {});

SolveReport solve_pf_w1(const Matrix& rates, const PfSolverOptions& opts = {});

/// Exhaustive search over the grid {0, h, 2h, ..., 1} on every channel simplex.
/// Only for U <= 3 and S <= 3; used as a test oracle.
SolveReport brute_force_pf(const SlotProblem& prob, double grid_step);

} // namespace pfair
