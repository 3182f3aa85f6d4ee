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

#include "pfair/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/expint.hpp>

namespace pfair {

namespace {

// 1 - 1e-9 quantile of the exponential SNR law, in units of its mean.
const double kSnrTailSpan = std::log(1e9);
constexpr double kMinDamping = 1e-6;

void require_discrete(std::span<const RateDistribution> dists) {
    if (dists.empty())
        throw std::invalid_argument("ensemble: at least one user distribution is required");
    for (const auto& d : dists)
        if (!d.is_discrete())
            throw std::invalid_argument("ensemble: discrete distributions required");
}

void require_continuous(std::span<const RateDistribution> dists) {
    if (dists.empty())
        throw std::invalid_argument("ensemble: at least one user distribution is required");
    for (const auto& d : dists)
        if (d.is_discrete())
            throw std::invalid_argument("ensemble: continuous (exponential SNR) distributions required");
}

// Visits every joint realization of a U x S rate matrix in lexicographic key order.
template <typename Fn>
void for_each_realization(std::span<const RateDistribution> dists, std::size_t S, Fn&& fn) {
    const std::size_t U = dists.size();
    std::vector<std::size_t> idx(U * S, 0);
    Matrix rates(U, S);
    while (true) {
        double p = 1.0;
        for (std::size_t i = 0; i < U; ++i) {
            for (std::size_t k = 0; k < S; ++k) {
                const std::size_t m = idx[i * S + k];
                rates(i, k) = dists[i].rates()[m];
                p *= dists[i].probs()[m];
            }
        }
        fn(idx, rates, p);
        std::size_t pos = idx.size();
        while (pos > 0) {
            --pos;
            if (++idx[pos] < dists[pos / S].rates().size())
                break;
            idx[pos] = 0;
            if (pos == 0)
                return;
        }
    }
}

std::string join_key(std::span<const std::size_t> idx) {
    std::string key;
    for (std::size_t n = 0; n < idx.size(); ++n) {
        if (n)
            key += ',';
        key += std::to_string(idx[n]);
    }
    return key;
}

std::size_t realization_count(std::span<const RateDistribution> dists, std::size_t S) {
    double count = 1.0;
    for (const auto& d : dists)
        count *= std::pow(static_cast<double>(d.rates().size()), static_cast<double>(S));
    if (count > static_cast<double>(kMaxJointRealizations))
        throw std::invalid_argument("ensemble: " + std::to_string(count) + " joint realizations exceed the limit of " +
                                    std::to_string(kMaxJointRealizations));
    return static_cast<std::size_t>(count);
}

template <typename Score>
Allocation exclusive_dispatch(const Matrix& rates, const UserMask& active, Score&& score) {
    const std::size_t U = rates.rows();
    if (!active.empty() && active.size() != U)
        throw std::invalid_argument("dispatch: active mask size mismatch");
    auto served = [&](std::size_t i) { return active.empty() || active[i]; };
    Allocation alloc{Matrix(U, rates.cols())};
    for (std::size_t k = 0; k < rates.cols(); ++k) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t ties = 0;
        for (std::size_t i = 0; i < U; ++i) {
            if (!served(i))
                continue;
            const double s = score(i, k);
            if (s > best) {
                best = s;
                ties = 1;
            } else if (s == best) {
                ++ties;
            }
        }
        if (ties == 0)
            throw std::invalid_argument("dispatch: no active user");
        const double share = 1.0 / static_cast<double>(ties);
        for (std::size_t i = 0; i < U; ++i)
            if (served(i) && score(i, k) == best)
                alloc.airtime(i, k) = share;
    }
    return alloc;
}

} // namespace

RateDistribution RateDistribution::discrete(std::vector<double> rates, std::vector<double> probs) {
    if (rates.empty() || rates.size() != probs.size())
        throw std::invalid_argument("RateDistribution: need M >= 1 rates with matching probabilities");
    double total = 0.0;
    for (std::size_t m = 0; m < rates.size(); ++m) {
        if (!(rates[m] >= 0.0) || !std::isfinite(rates[m]))
            throw std::invalid_argument("RateDistribution: rates must be finite and >= 0");
        if (!(probs[m] >= 0.0))
            throw std::invalid_argument("RateDistribution: probabilities must be >= 0");
        total += probs[m];
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("RateDistribution: probabilities must sum to 1");
    RateDistribution d;
    d.kind_ = Kind::discrete;
    d.rates_ = std::move(rates);
    d.probs_ = std::move(probs);
    return d;
}

RateDistribution RateDistribution::exponential_snr(double mean_snr_linear) {
    if (!(mean_snr_linear > 0.0) || !std::isfinite(mean_snr_linear))
        throw std::invalid_argument("RateDistribution: mean SNR must be finite and > 0");
    RateDistribution d;
    d.kind_ = Kind::exponential_snr;
    d.mean_snr_ = mean_snr_linear;
    return d;
}

RateDistribution RateDistribution::exponential_snr_db(double mean_snr_db) {
    return exponential_snr(std::pow(10.0, mean_snr_db / 10.0));
}

double RateDistribution::cdf(double rate) const {
    if (kind_ == Kind::discrete) {
        double c = 0.0;
        for (std::size_t m = 0; m < rates_.size(); ++m)
            if (rates_[m] <= rate)
                c += probs_[m];
        return std::min(c, 1.0);
    }
    if (rate <= 0.0)
        return 0.0;
    const double snr = std::exp2(rate) - 1.0;
    return -std::expm1(-snr / mean_snr_);
}

double RateDistribution::mean() const {
    if (kind_ == Kind::discrete)
        return std::inner_product(rates_.begin(), rates_.end(), probs_.begin(), 0.0);
    // E[ln(1 + X)] = e^{1/m} E1(1/m) for X ~ Exp(mean m)
    const double z = 1.0 / mean_snr_;
    return std::exp(z) * boost::math::expint(1, z) / std::numbers::ln2;
}

double RateDistribution::sample(std::mt19937_64& rng) const {
    if (kind_ == Kind::discrete) {
        std::discrete_distribution<std::size_t> pick(probs_.begin(), probs_.end());
        return rates_[pick(rng)];
    }
    std::exponential_distribution<double> snr(1.0 / mean_snr_);
    return std::log2(1.0 + snr(rng));
}

std::string VirtualChannel::key() const { return join_key(realization); }

std::vector<VirtualChannel> build_virtual_channels(std::span<const RateDistribution> dists, std::size_t S) {
    require_discrete(dists);
    if (S < 1)
        throw std::invalid_argument("build_virtual_channels: need at least one channel");
    const std::size_t count = realization_count(dists, S);
    const std::size_t U = dists.size();

    std::vector<VirtualChannel> out;
    out.reserve(count * S);
    for (std::size_t k = 0; k < S; ++k) {
        for_each_realization(dists, S, [&](const std::vector<std::size_t>& idx, const Matrix& rates, double p) {
            VirtualChannel vc;
            vc.physical_channel = k;
            vc.realization = idx;
            vc.rates = rates;
            vc.probability = p;
            vc.virtual_rates.resize(U);
            for (std::size_t i = 0; i < U; ++i)
                vc.virtual_rates[i] = rates(i, k) * p;
            out.push_back(std::move(vc));
        });
    }
    return out;
}

std::string to_string(Provenance p) {
    return p == Provenance::discrete_exact ? "discrete-exact" : "continuous-fixed-point";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "discrete-exact")
        return Provenance::discrete_exact;
    if (s == "continuous-fixed-point")
        return Provenance::continuous_fixed_point;
    throw std::invalid_argument("unknown policy provenance '" + s + "'");
}

void EnsemblePolicy::validate() const {
    if (expected_throughputs.empty())
        throw std::invalid_argument("EnsemblePolicy: no users");
    for (double t : expected_throughputs)
        if (!(t > 0.0) || !std::isfinite(t))
            throw std::invalid_argument("EnsemblePolicy: expected throughputs must be finite and > 0");
    if (!(residual >= 0.0))
        throw std::invalid_argument("EnsemblePolicy: residual must be >= 0");
    if (num_channels < 1)
        throw std::invalid_argument("EnsemblePolicy: num_channels must be >= 1");
    for (const auto& [key, p] : allocation_table)
        if (p.rows() != expected_throughputs.size() || p.cols() != num_channels)
            throw std::invalid_argument("EnsemblePolicy: allocation table entry '" + key + "' has the wrong shape");
}

EnsemblePolicy solve_ensemble_discrete(std::span<const RateDistribution> dists, std::size_t S,
                                       const PfSolverOptions& opts) {
    const auto vcs = build_virtual_channels(dists, S);
    const std::size_t U = dists.size();

    Matrix virtual_rates(U, vcs.size());
    for (std::size_t v = 0; v < vcs.size(); ++v)
        for (std::size_t i = 0; i < U; ++i)
            virtual_rates(i, v) = vcs[v].virtual_rates[i];

    const SolveReport rep = solve_pf_w1(virtual_rates, opts);
    if (!rep.excluded_users.empty())
        throw std::invalid_argument("solve_ensemble_discrete: user " + std::to_string(rep.excluded_users.front()) +
                                    " has zero rate in every realization");

    EnsemblePolicy policy;
    policy.provenance = Provenance::discrete_exact;
    policy.num_channels = S;
    policy.residual = rep.kkt_residual;
    policy.expected_throughputs = rep.allocation.user_throughput(virtual_rates);
    for (std::size_t v = 0; v < vcs.size(); ++v) {
        auto [it, inserted] = policy.allocation_table.try_emplace(vcs[v].key(), U, S);
        for (std::size_t i = 0; i < U; ++i)
            it->second(i, vcs[v].physical_channel) = rep.allocation.airtime(i, v);
    }
    policy.validate();
    return policy;
}

EnsemblePolicy replicate_single_channel(const EnsemblePolicy& single, std::span<const RateDistribution> dists,
                                        std::size_t S) {
    require_discrete(dists);
    if (single.num_channels != 1)
        throw std::invalid_argument("replicate_single_channel: source policy must be single-channel");
    realization_count(dists, S);
    const std::size_t U = dists.size();

    EnsemblePolicy out;
    out.provenance = Provenance::discrete_exact;
    out.num_channels = S;
    out.residual = single.residual;
    std::vector<std::size_t> column(U);
    for_each_realization(dists, S, [&](const std::vector<std::size_t>& idx, const Matrix&, double) {
        Matrix p(U, S);
        for (std::size_t k = 0; k < S; ++k) {
            for (std::size_t i = 0; i < U; ++i)
                column[i] = idx[i * S + k];
            const Matrix& src = table_lookup(single, join_key(column));
            for (std::size_t i = 0; i < U; ++i)
                p(i, k) = src(i, 0);
        }
        out.allocation_table.emplace(join_key(idx), std::move(p));
    });
    out.expected_throughputs = table_throughputs(out, dists);
    out.validate();
    return out;
}

std::vector<double> table_throughputs(const EnsemblePolicy& policy, std::span<const RateDistribution> dists) {
    require_discrete(dists);
    const std::size_t U = dists.size(), S = policy.num_channels;
    std::vector<double> t(U, 0.0);
    for_each_realization(dists, S, [&](const std::vector<std::size_t>& idx, const Matrix& rates, double p) {
        const Matrix& alloc = table_lookup(policy, join_key(idx));
        for (std::size_t i = 0; i < U; ++i)
            for (std::size_t k = 0; k < S; ++k)
                t[i] += alloc(i, k) * rates(i, k) * p;
    });
    return t;
}

double ensemble_kkt_violation(const EnsemblePolicy& policy, std::span<const RateDistribution> dists,
                              double support_threshold) {
    const auto t = table_throughputs(policy, dists);
    const std::size_t U = dists.size(), S = policy.num_channels;
    double worst = 0.0;
    for_each_realization(dists, S, [&](const std::vector<std::size_t>& idx, const Matrix& rates, double p) {
        if (p <= 0.0)
            return;
        const Matrix& alloc = table_lookup(policy, join_key(idx));
        for (std::size_t k = 0; k < S; ++k) {
            for (std::size_t i = 0; i < U; ++i) {
                if (alloc(i, k) <= support_threshold)
                    continue;
                const double ri = rates(i, k) / t[i];
                for (std::size_t j = 0; j < U; ++j) {
                    if (j == i)
                        continue;
                    const double rj = rates(j, k) / t[j];
                    const double v = alloc(j, k) > support_threshold ? std::abs(ri - rj) : std::max(0.0, rj - ri);
                    worst = std::max(worst, v);
                }
            }
        }
    });
    return worst;
}

std::vector<double> fixed_point_map(std::span<const RateDistribution> dists, std::size_t S,
                                    std::span<const double> throughputs, double quadrature_tol) {
    require_continuous(dists);
    const std::size_t U = dists.size();
    if (throughputs.size() != U)
        throw std::invalid_argument("fixed_point_map: one throughput per user required");

    using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    std::vector<double> g(U);
    for (std::size_t i = 0; i < U; ++i) {
        const double mean = dists[i].mean_snr();
        auto integrand = [&](double x) {
            const double b = std::log2(1.0 + x);
            double v = b * std::exp(-x / mean) / mean;
            for (std::size_t j = 0; j < U && v != 0.0; ++j)
                if (j != i)
                    v *= dists[j].cdf(b * throughputs[j] / throughputs[i]);
            return v;
        };
        const double upper = mean * kSnrTailSpan;
        // split at the mean where most of the mass sits
        const double a = Quad::integrate(integrand, 0.0, mean, 15, quadrature_tol);
        const double b = Quad::integrate(integrand, mean, upper, 15, quadrature_tol);
        g[i] = static_cast<double>(S) * (a + b);
    }
    return g;
}

EnsemblePolicy solve_fixed_point(std::span<const RateDistribution> dists, std::size_t S,
                                 const FixedPointOptions& opts) {
    require_continuous(dists);
    if (S < 1)
        throw std::invalid_argument("solve_fixed_point: need at least one channel");
    if (!(opts.tol > 0.0))
        throw std::invalid_argument("solve_fixed_point: tol must be > 0");
    if (!(opts.damping > 0.0 && opts.damping <= 1.0))
        throw std::invalid_argument("solve_fixed_point: damping must lie in (0, 1]");

    const std::size_t U = dists.size();
    std::vector<double> t(U);
    for (std::size_t i = 0; i < U; ++i)
        t[i] = static_cast<double>(S) * dists[i].mean() / static_cast<double>(U);

    auto residual_of = [&](const std::vector<double>& x, const std::vector<double>& gx) {
        double r = 0.0;
        for (std::size_t i = 0; i < U; ++i)
            r = std::max(r, std::abs(gx[i] - x[i]) / x[i]);
        return r;
    };

    // G is steep in the throughput ratios for unequal SNRs, so a fixed step
    // can oscillate. The step is halved whenever the residual grows and
    // allowed to recover towards opts.damping after an accepted step.
    auto g = fixed_point_map(dists, S, t, opts.quadrature_tol);
    double residual = residual_of(t, g);
    double step = opts.damping;
    for (std::size_t it = 0;; ++it) {
        if (residual <= opts.tol) {
            EnsemblePolicy policy;
            policy.expected_throughputs = t;
            policy.residual = residual;
            policy.provenance = Provenance::continuous_fixed_point;
            policy.num_channels = S;
            policy.validate();
            return policy;
        }
        if (it == opts.max_iterations || step < kMinDamping)
            break;
        std::vector<double> next(U);
        for (std::size_t i = 0; i < U; ++i)
            next[i] = (1.0 - step) * t[i] + step * g[i];
        auto g_next = fixed_point_map(dists, S, next, opts.quadrature_tol);
        const double r_next = residual_of(next, g_next);
        if (r_next > residual) {
            step *= 0.5;
            continue;
        }
        t = std::move(next);
        g = std::move(g_next);
        residual = r_next;
        step = std::min(opts.damping, 1.5 * step);
    }
    throw std::runtime_error("solve_fixed_point: no convergence after " + std::to_string(opts.max_iterations) +
                             " map evaluations (residual " + std::to_string(residual) + ")");
}

Allocation ensemble_dispatch(const EnsemblePolicy& policy, const Matrix& rates, const UserMask& active) {
    const auto& t = policy.expected_throughputs;
    if (t.size() != rates.rows())
        throw std::invalid_argument("ensemble_dispatch: policy and rate matrix disagree on the user count");
    return exclusive_dispatch(rates, active, [&](std::size_t i, std::size_t k) { return rates(i, k) / t[i]; });
}

Allocation max_rate_dispatch(const Matrix& rates, const UserMask& active) {
    return exclusive_dispatch(rates, active, [&](std::size_t i, std::size_t k) { return rates(i, k); });
}

const Matrix& table_lookup(const EnsemblePolicy& policy, const std::string& key) {
    const auto it = policy.allocation_table.find(key);
    if (it == policy.allocation_table.end())
        throw std::out_of_range("policy has no allocation for realization '" + key + "'");
    return it->second;
}

nlohmann::json policy_to_json(const EnsemblePolicy& policy) {
    nlohmann::json j;
    j["expected_throughputs"] = policy.expected_throughputs;
    j["provenance"] = to_string(policy.provenance);
    j["residual"] = policy.residual;
    j["num_channels"] = policy.num_channels;
    if (!policy.allocation_table.empty()) {
        nlohmann::json table = nlohmann::json::object();
        for (const auto& [key, p] : policy.allocation_table)
            table[key] = std::vector<double>(p.data().begin(), p.data().end());
        j["allocation_table"] = std::move(table);
    }
    return j;
}

EnsemblePolicy policy_from_json(const nlohmann::json& j) {
    EnsemblePolicy policy;
    policy.expected_throughputs = j.at("expected_throughputs").get<std::vector<double>>();
    policy.provenance = provenance_from_string(j.at("provenance").get<std::string>());
    policy.residual = j.at("residual").get<double>();
    policy.num_channels = j.value("num_channels", std::size_t{1});
    const std::size_t U = policy.expected_throughputs.size();
    if (j.contains("allocation_table")) {
        for (const auto& [key, value] : j.at("allocation_table").items()) {
            auto flat = value.get<std::vector<double>>();
            if (flat.size() != U * policy.num_channels)
                throw std::invalid_argument("policy_from_json: table entry '" + key + "' has the wrong length");
            policy.allocation_table.emplace(key, Matrix(U, policy.num_channels, std::move(flat)));
        }
    }
    policy.validate();
    return policy;
}

} // namespace pfair
