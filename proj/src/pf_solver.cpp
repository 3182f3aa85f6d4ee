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

#include "pfair/pf_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>

#include <Eigen/Dense>

namespace pfair {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> served_users(const SlotProblem& prob) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < prob.users(); ++i)
        if (prob.active[i] && !prob.degenerate(i))
            out.push_back(i);
    return out;
}

// d_i a_i + sum_k P_{i,k} b_{i,k}
double denominator(const SlotProblem& prob, std::size_t i, double throughput) {
    return prob.divisor[i] * prob.baseline[i] + throughput;
}

double price(double rate, double denom) {
    if (rate == 0.0)
        return 0.0;
    return denom > 0.0 ? rate / denom : kInf;
}

SolveReport make_report(const SlotProblem& prob, Allocation alloc, std::size_t iterations) {
    SolveReport rep;
    rep.utility = pf_utility(prob, alloc);
    rep.kkt_residual = kkt_residual(prob, alloc);
    rep.allocation = std::move(alloc);
    rep.iterations = iterations;
    for (std::size_t i = 0; i < prob.users(); ++i) {
        if (prob.active[i] && prob.degenerate(i)) {
            rep.excluded_users.push_back(i);
            rep.warnings.push_back("user " + std::to_string(i) +
                                   " has zero baseline and no positive rate; excluded from the optimization");
        }
    }
    return rep;
}

struct Edge {
    std::size_t user, channel;
};

struct ForestSolution {
    Allocation alloc;
    std::optional<Edge> negative; // most negative edge airtime, if any
};

// Exact stationary point on a spanning forest of `edges` (taken in order,
// skipping cycle-closing ones). On every forest edge the prices agree,
// b_{i,k} / y_i = lambda_k, which fixes y up to one scale per connected
// component. Airtime conservation per channel and the definition
// y_i = d_i a_i + sum_k P_{i,k} b_{i,k} then form a square linear system in
// the edge airtimes and the component scales.
std::optional<ForestSolution> solve_on_forest(const SlotProblem& prob, const std::vector<Edge>& edges) {
    const std::size_t U = prob.users(), S = prob.channels();

    // Nodes: users 0..U-1, channels U..U+S-1.
    std::vector<std::size_t> parent(U + S);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t v) {
        while (parent[v] != v)
            v = parent[v] = parent[parent[v]];
        return v;
    };
    std::vector<Edge> forest;
    std::vector<std::vector<std::size_t>> adjacent(U + S);
    for (const Edge& e : edges) {
        const std::size_t a = find(e.user), b = find(U + e.channel);
        if (a == b)
            continue;
        parent[a] = b;
        adjacent[e.user].push_back(forest.size());
        adjacent[U + e.channel].push_back(forest.size());
        forest.push_back(e);
    }
    for (std::size_t k = 0; k < S; ++k)
        if (adjacent[U + k].empty())
            return std::nullopt;

    // Log price levels: log y_i - log lambda_k = log b_{i,k} on every edge.
    std::vector<double> level(U + S, 0.0);
    std::vector<std::size_t> component(U + S, SIZE_MAX);
    std::size_t components = 0;
    for (std::size_t root = 0; root < U + S; ++root) {
        if (component[root] != SIZE_MAX || adjacent[root].empty())
            continue;
        std::vector<std::size_t> stack{root}, members{root};
        component[root] = components;
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            for (std::size_t ei : adjacent[v]) {
                const Edge& e = forest[ei];
                const std::size_t w = v < U ? U + e.channel : e.user;
                if (component[w] != SIZE_MAX)
                    continue;
                const double lb = std::log(prob.rates(e.user, e.channel));
                level[w] = v < U ? level[v] - lb : level[v] + lb;
                component[w] = components;
                stack.push_back(w);
                members.push_back(w);
            }
        }
        double top = -kInf;
        for (std::size_t v : members)
            if (v < U)
                top = std::max(top, level[v]);
        for (std::size_t v : members)
            if (v < U)
                level[v] -= top;
        ++components;
    }

    const std::size_t unknowns = forest.size() + components;
    std::vector<std::size_t> row_of(U + S, SIZE_MAX);
    std::size_t rows = 0;
    for (std::size_t v = 0; v < U + S; ++v)
        if (!adjacent[v].empty())
            row_of[v] = rows++;
    if (rows != unknowns)
        return std::nullopt;

    using Eigen::Index;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Index>(rows), static_cast<Index>(unknowns));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Index>(rows));
    for (std::size_t ei = 0; ei < forest.size(); ++ei) {
        const Edge& e = forest[ei];
        A(static_cast<Index>(row_of[U + e.channel]), static_cast<Index>(ei)) = 1.0;
        A(static_cast<Index>(row_of[e.user]), static_cast<Index>(ei)) = prob.rates(e.user, e.channel);
    }
    for (std::size_t v = 0; v < U + S; ++v) {
        if (row_of[v] == SIZE_MAX)
            continue;
        const auto r = static_cast<Index>(row_of[v]);
        if (v < U) {
            A(r, static_cast<Index>(forest.size() + component[v])) = -std::exp(level[v]);
            rhs(r) = -prob.divisor[v] * prob.baseline[v];
        } else {
            rhs(r) = 1.0;
        }
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible())
        return std::nullopt;
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite())
        return std::nullopt;
    for (std::size_t c = 0; c < components; ++c)
        if (!(sol(static_cast<Index>(forest.size() + c)) > 0.0))
            return std::nullopt;

    ForestSolution out{Allocation{Matrix(U, S)}, std::nullopt};
    double most_negative = -1e-12;
    for (std::size_t ei = 0; ei < forest.size(); ++ei) {
        const double p = sol(static_cast<Index>(ei));
        if (p < most_negative) {
            most_negative = p;
            out.negative = forest[ei];
        }
        out.alloc.airtime(forest[ei].user, forest[ei].channel) = std::max(0.0, p);
    }
    for (std::size_t k = 0; k < S; ++k) {
        double col = 0.0;
        for (std::size_t i = 0; i < U; ++i)
            col += out.alloc.airtime(i, k);
        for (std::size_t i = 0; i < U; ++i)
            out.alloc.airtime(i, k) /= col;
    }
    return out;
}

// Active-set refinement of a near-optimal allocation. Starts from its
// support, ordered by how close each price is to the channel's best one,
// then drops edges that come out negative and adds the worst price violator
// until the KKT residual is within `tol` or the round budget is spent.
std::optional<Allocation> polish(const SlotProblem& prob, const Allocation& alloc,
                                 const std::vector<std::size_t>& users, double tol) {
    const std::size_t S = prob.channels();
    const auto x = alloc.user_throughput(prob.rates);
    std::vector<std::pair<double, Edge>> ranked;
    for (std::size_t k = 0; k < S; ++k) {
        double best = 0.0;
        for (std::size_t i : users)
            best = std::max(best, price(prob.rates(i, k), denominator(prob, i, x[i])));
        for (std::size_t i : users)
            if (alloc.airtime(i, k) > 0.0 && prob.rates(i, k) > 0.0)
                ranked.push_back({1.0 - price(prob.rates(i, k), denominator(prob, i, x[i])) / best, {i, k}});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Edge> edges;
    for (const auto& r : ranked)
        edges.push_back(r.second);

    const std::size_t rounds = 2 * (users.size() + S);
    for (std::size_t round = 0; round < rounds; ++round) {
        auto sol = solve_on_forest(prob, edges);
        if (!sol)
            return std::nullopt;
        if (sol->negative) {
            const Edge bad = *sol->negative;
            std::erase_if(edges, [&](const Edge& e) { return e.user == bad.user && e.channel == bad.channel; });
            continue;
        }
        if (kkt_residual(prob, sol->alloc) <= tol)
            return std::move(sol->alloc);

        // Bring in the unserved pair whose price beats its channel's the most.
        const auto y = sol->alloc.user_throughput(prob.rates);
        double worst = 0.0;
        std::optional<Edge> entering;
        for (std::size_t k = 0; k < S; ++k) {
            double served = kInf;
            for (std::size_t i : users)
                if (sol->alloc.airtime(i, k) > kSupportThreshold)
                    served = std::min(served, price(prob.rates(i, k), denominator(prob, i, y[i])));
            for (std::size_t i : users) {
                if (sol->alloc.airtime(i, k) > kSupportThreshold || prob.rates(i, k) <= 0.0)
                    continue;
                const double excess = price(prob.rates(i, k), denominator(prob, i, y[i])) / served - 1.0;
                if (excess > worst) {
                    worst = excess;
                    entering = Edge{i, k};
                }
            }
        }
        if (!entering)
            return std::nullopt;
        std::erase_if(edges, [&](const Edge& e) { return e.user == entering->user && e.channel == entering->channel; });
        edges.insert(edges.begin(), *entering);
    }
    return std::nullopt;
}

constexpr std::size_t kPolishInterval = 16;

} // namespace

SlotProblem SlotProblem::memoryless(Matrix rates) {
    SlotProblem p;
    const std::size_t U = rates.rows();
    p.rates = std::move(rates);
    p.baseline.assign(U, 0.0);
    p.divisor.assign(U, 1.0);
    p.active.assign(U, true);
    return p;
}

SlotProblem SlotProblem::lookback(Matrix rates, std::vector<double> baseline, double divisor) {
    SlotProblem p;
    const std::size_t U = rates.rows();
    p.rates = std::move(rates);
    p.baseline = std::move(baseline);
    p.divisor.assign(U, divisor);
    p.active.assign(U, true);
    return p;
}

void SlotProblem::validate() const {
    const std::size_t U = users();
    if (U == 0 || channels() == 0)
        throw std::invalid_argument("SlotProblem: empty rate matrix");
    if (baseline.size() != U || divisor.size() != U || active.size() != U)
        throw std::invalid_argument("SlotProblem: per-user vectors must have one entry per user");
    for (double b : rates.data())
        if (!(b >= 0.0) || !std::isfinite(b))
            throw std::invalid_argument("SlotProblem: rates must be finite and >= 0");
    for (std::size_t i = 0; i < U; ++i) {
        if (!(baseline[i] >= 0.0) || !std::isfinite(baseline[i]))
            throw std::invalid_argument("SlotProblem: baselines must be finite and >= 0");
        if (!(divisor[i] >= 1.0))
            throw std::invalid_argument("SlotProblem: window divisor must be >= 1");
    }
    if (std::none_of(active.begin(), active.end(), [](bool a) { return a; }))
        throw std::invalid_argument("SlotProblem: active set is empty");
}

bool SlotProblem::degenerate(std::size_t user) const {
    if (baseline[user] > 0.0)
        return false;
    const auto r = rates.row(user);
    return std::none_of(r.begin(), r.end(), [](double b) { return b > 0.0; });
}

std::vector<double> Allocation::user_throughput(const Matrix& rates) const {
    std::vector<double> x(rates.rows(), 0.0);
    for (std::size_t i = 0; i < rates.rows(); ++i)
        for (std::size_t k = 0; k < rates.cols(); ++k)
            x[i] += airtime(i, k) * rates(i, k);
    return x;
}

double shadow_price(const SlotProblem& prob, const Allocation& alloc, std::size_t user, std::size_t channel) {
    const double b = prob.rates(user, channel);
    if (b == 0.0)
        return 0.0;
    double x = 0.0;
    for (std::size_t k = 0; k < prob.channels(); ++k)
        x += alloc.airtime(user, k) * prob.rates(user, k);
    const double denom = denominator(prob, user, x);
    if (!(denom > 0.0))
        throw std::domain_error("shadow_price: user " + std::to_string(user) +
                                " has zero baseline and zero allocated rate");
    return b / denom;
}

double pf_utility(const SlotProblem& prob, const Allocation& alloc) {
    const auto x = alloc.user_throughput(prob.rates);
    double y = 0.0;
    for (std::size_t i : served_users(prob)) {
        const double arg = prob.baseline[i] + x[i] / prob.divisor[i];
        y += arg > 0.0 ? std::log(arg) : -kInf;
    }
    return y;
}

double kkt_residual(const SlotProblem& prob, const Allocation& alloc) {
    const auto users = served_users(prob);
    const auto x = alloc.user_throughput(prob.rates);
    double worst = 0.0;
    for (std::size_t k = 0; k < prob.channels(); ++k) {
        double hi = -kInf, lo = kInf;
        for (std::size_t i : users) {
            const double g = price(prob.rates(i, k), denominator(prob, i, x[i]));
            hi = std::max(hi, g);
            if (alloc.airtime(i, k) > kSupportThreshold)
                lo = std::min(lo, g);
        }
        if (lo == kInf)
            continue; // nobody served on this channel; counted by feasibility, not KKT
        const double gap = hi - lo;
        worst = std::max(worst, std::isnan(gap) ? kInf : gap);
    }
    return worst;
}

Allocation uniform_allocation(const SlotProblem& prob) {
    const auto users = served_users(prob);
    Allocation a{Matrix(prob.users(), prob.channels())};
    if (users.empty())
        return a;
    const double share = 1.0 / static_cast<double>(users.size());
    for (std::size_t i : users)
        for (std::size_t k = 0; k < prob.channels(); ++k)
            a.airtime(i, k) = share;
    return a;
}

SolveReport solve_pf_slot(const SlotProblem& prob, const PfSolverOptions& opts) {
    prob.validate();
    if (!(opts.tol > 0.0))
        throw std::invalid_argument("solve_pf_slot: tol must be > 0");
    const auto users = served_users(prob);
    if (users.empty())
        throw std::invalid_argument("solve_pf_slot: no active user can be served (infeasible active set)");

    const std::size_t S = prob.channels();
    Allocation alloc = uniform_allocation(prob);
    if (users.size() == 1)
        return make_report(prob, std::move(alloc), 0);

    std::vector<double> x(prob.users());
    std::size_t iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        x = alloc.user_throughput(prob.rates);
        if (kkt_residual(prob, alloc) <= opts.tol)
            return make_report(prob, std::move(alloc), iter);
        if (iter > 0 && iter % kPolishInterval == 0) {
            if (auto exact = polish(prob, alloc, users, opts.tol))
                return make_report(prob, std::move(*exact), iter);
        }

        for (std::size_t k = 0; k < S; ++k) {
            // Toward vertex: highest price (lowest index on ties). Away vertex: lowest price among served.
            std::size_t to = users.front(), from = users.front();
            double g_to = -kInf, g_from = kInf;
            for (std::size_t i : users) {
                const double g = price(prob.rates(i, k), denominator(prob, i, x[i]));
                if (g > g_to) {
                    g_to = g;
                    to = i;
                }
                if (alloc.airtime(i, k) > 0.0 && g < g_from) {
                    g_from = g;
                    from = i;
                }
            }
            if (to == from || !(g_to > g_from))
                continue;

            const double b_to = prob.rates(to, k), b_from = prob.rates(from, k);
            const double mass = alloc.airtime(from, k);
            double t = mass;
            if (b_from > 0.0) {
                // argmax_t log(D_to + t b_to) + log(D_from - t b_from)
                const double d_to = denominator(prob, to, x[to]);
                const double d_from = denominator(prob, from, x[from]);
                t = std::clamp((b_to * d_from - b_from * d_to) / (2.0 * b_to * b_from), 0.0, mass);
            }
            if (t <= 0.0)
                continue;
            if (t >= mass) {
                alloc.airtime(to, k) += mass;
                alloc.airtime(from, k) = 0.0;
                t = mass;
            } else {
                alloc.airtime(to, k) += t;
                alloc.airtime(from, k) -= t;
            }
            x[to] += t * b_to;
            x[from] -= t * b_from;
        }
    }

    if (auto exact = polish(prob, alloc, users, opts.tol))
        return make_report(prob, std::move(*exact), iter);
    SolveReport best = make_report(prob, std::move(alloc), iter);
    if (best.kkt_residual <= opts.tol)
        return best;
    throw ConvergenceError("solve_pf_slot: KKT residual " + std::to_string(best.kkt_residual) + " above tolerance after " +
                               std::to_string(iter) + " iterations",
                           std::move(best));
}

SolveReport solve_pf_w1(const Matrix& rates, const PfSolverOptions& opts) {
    return solve_pf_slot(SlotProblem::memoryless(rates), opts);
}

SolveReport brute_force_pf(const SlotProblem& prob, double grid_step) {
    prob.validate();
    if (prob.users() > 3 || prob.channels() > 3)
        throw std::invalid_argument("brute_force_pf: limited to U <= 3 and S <= 3");
    if (!(grid_step > 0.0 && grid_step <= 0.5))
        throw std::invalid_argument("brute_force_pf: grid_step must lie in (0, 0.5]");
    const auto users = served_users(prob);
    if (users.empty())
        throw std::invalid_argument("brute_force_pf: no active user can be served");

    const auto steps = static_cast<std::size_t>(std::ceil(1.0 / grid_step - 1e-9));
    const double h = 1.0 / static_cast<double>(steps);

    // All ways to split `steps` grid units among the served users.
    std::vector<std::vector<std::size_t>> parts;
    std::vector<std::size_t> cur(users.size(), 0);
    auto fill = [&](auto&& self, std::size_t pos, std::size_t left) -> void {
        if (pos + 1 == users.size()) {
            cur[pos] = left;
            parts.push_back(cur);
            return;
        }
        for (std::size_t c = 0; c <= left; ++c) {
            cur[pos] = c;
            self(self, pos + 1, left - c);
        }
    };
    fill(fill, 0, steps);

    const std::size_t S = prob.channels();
    std::vector<std::size_t> pick(S, 0);
    std::vector<std::size_t> best_pick = pick;
    double best = -kInf;
    std::size_t evaluated = 0;
    while (true) {
        double y = 0.0;
        for (std::size_t u = 0; u < users.size(); ++u) {
            const std::size_t i = users[u];
            double x = 0.0;
            for (std::size_t k = 0; k < S; ++k)
                x += static_cast<double>(parts[pick[k]][u]) * h * prob.rates(i, k);
            const double arg = prob.baseline[i] + x / prob.divisor[i];
            y += arg > 0.0 ? std::log(arg) : -kInf;
        }
        ++evaluated;
        if (y > best || evaluated == 1) {
            best = y;
            best_pick = pick;
        }
        std::size_t k = 0;
        while (k < S && ++pick[k] == parts.size())
            pick[k++] = 0;
        if (k == S)
            break;
    }

    Allocation alloc{Matrix(prob.users(), S)};
    for (std::size_t k = 0; k < S; ++k)
        for (std::size_t u = 0; u < users.size(); ++u)
            alloc.airtime(users[u], k) = static_cast<double>(parts[best_pick[k]][u]) * h;
    return make_report(prob, std::move(alloc), evaluated);
}

} // namespace pfair
