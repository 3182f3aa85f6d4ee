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

#include "pfair/maxmin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pfair {

namespace {

constexpr double kPivotEps = 1e-12;

// Dense tableau for  max c^T x  s.t.  A x <= b, x >= 0, with b >= 0 so the
// slack basis is feasible from the start.
class Tableau {
  public:
    Tableau(std::size_t rows, std::size_t vars)
        : m_(rows), n_(vars), width_(vars + rows + 1), t_((rows + 1) * width_, 0.0), basis_(rows) {
        for (std::size_t r = 0; r < m_; ++r) {
            at(r, n_ + r) = 1.0;
            basis_[r] = n_ + r;
        }
    }

    double& at(std::size_t r, std::size_t c) { return t_[r * width_ + c]; }
    double& rhs(std::size_t r) { return at(r, width_ - 1); }
    double& cost(std::size_t c) { return at(m_, c); }

    void set_objective(std::size_t var, double coeff) { cost(var) = -coeff; }

    std::size_t solve() {
        std::size_t pivots = 0;
        const std::size_t limit = 50 * (m_ + n_) + 1000;
        while (pivots < limit) {
            // Bland: first improving column, then lowest-index basic variable among min-ratio ties.
            std::size_t enter = width_;
            for (std::size_t c = 0; c + 1 < width_; ++c) {
                if (cost(c) < -kPivotEps) {
                    enter = c;
                    break;
                }
            }
            if (enter == width_)
                return pivots;

            std::size_t leave = m_;
            double best_ratio = 0.0;
            for (std::size_t r = 0; r < m_; ++r) {
                const double a = at(r, enter);
                if (a <= kPivotEps)
                    continue;
                const double ratio = rhs(r) / a;
                if (leave == m_ || ratio < best_ratio - kPivotEps ||
                    (ratio <= best_ratio + kPivotEps && basis_[r] < basis_[leave])) {
                    leave = r;
                    best_ratio = ratio;
                }
            }
            if (leave == m_)
                throw std::logic_error("solve_maxmin_slot: LP unbounded");
            pivot(leave, enter);
            ++pivots;
        }
        throw std::runtime_error("solve_maxmin_slot: simplex pivot limit reached");
    }

    double value(std::size_t var) {
        for (std::size_t r = 0; r < m_; ++r)
            if (basis_[r] == var)
                return rhs(r);
        return 0.0;
    }

  private:
    void pivot(std::size_t row, std::size_t col) {
        const double p = at(row, col);
        for (std::size_t c = 0; c < width_; ++c)
            at(row, c) /= p;
        for (std::size_t r = 0; r <= m_; ++r) {
            if (r == row)
                continue;
            const double f = at(r, col);
            if (f == 0.0)
                continue;
            for (std::size_t c = 0; c < width_; ++c)
                at(r, c) -= f * at(row, c);
        }
        basis_[row] = col;
    }

    std::size_t m_, n_, width_;
    std::vector<double> t_;
    std::vector<std::size_t> basis_;
};

} // namespace

std::vector<double> smoothed_throughput(const SlotProblem& prob, const Allocation& alloc) {
    auto x = alloc.user_throughput(prob.rates);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = prob.active[i] ? prob.baseline[i] + x[i] / prob.divisor[i] : 0.0;
    return x;
}

MaxMinReport solve_maxmin_slot(const SlotProblem& prob) {
    prob.validate();
    MaxMinReport rep;
    std::vector<std::size_t> users;
    for (std::size_t i = 0; i < prob.users(); ++i) {
        if (!prob.active[i])
            continue;
        if (prob.degenerate(i))
            rep.excluded_users.push_back(i);
        else
            users.push_back(i);
    }
    if (users.empty())
        throw std::invalid_argument("solve_maxmin_slot: no active user can be served");

    const std::size_t A = users.size();
    const std::size_t S = prob.channels();
    // Variable 0 is z, variable 1 + u*S + k is P_{users[u],k}.
    Tableau lp(A + S, 1 + A * S);
    lp.set_objective(0, 1.0);
    for (std::size_t u = 0; u < A; ++u) {
        const std::size_t i = users[u];
        lp.at(u, 0) = 1.0;
        for (std::size_t k = 0; k < S; ++k)
            lp.at(u, 1 + u * S + k) = -prob.rates(i, k) / prob.divisor[i];
        lp.rhs(u) = prob.baseline[i];
    }
    for (std::size_t k = 0; k < S; ++k) {
        for (std::size_t u = 0; u < A; ++u)
            lp.at(A + k, 1 + u * S + k) = 1.0;
        lp.rhs(A + k) = 1.0;
    }
    rep.pivots = lp.solve();

    Allocation alloc{Matrix(prob.users(), S)};
    for (std::size_t k = 0; k < S; ++k) {
        double used = 0.0;
        for (std::size_t u = 0; u < A; ++u) {
            const double p = std::max(0.0, lp.value(1 + u * S + k));
            alloc.airtime(users[u], k) = p;
            used += p;
        }
        if (used < 1.0) {
            std::size_t best = users.front();
            for (std::size_t i : users)
                if (prob.rates(i, k) > prob.rates(best, k))
                    best = i;
            alloc.airtime(best, k) += 1.0 - used;
            used = 1.0;
        }
        for (std::size_t i : users)
            alloc.airtime(i, k) /= used;
    }

    const auto smoothed = smoothed_throughput(prob, alloc);
    rep.min_throughput = smoothed[users.front()];
    for (std::size_t i : users)
        rep.min_throughput = std::min(rep.min_throughput, smoothed[i]);
    rep.allocation = std::move(alloc);
    return rep;
}

} // namespace pfair
