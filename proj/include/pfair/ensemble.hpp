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

// Infinite-window proportional fairness on ensemble-averaged throughput.
//
// Every joint rate realization b of a physical channel k becomes a virtual
// channel (k, b) on which user i has rate b_{i,k} * Pr[b]. The problem is then
// the deterministic multi-channel PF problem. For continuous rates the
// optimum is exclusive: channel k goes to argmax_i b_{i,k} / E[T_i*], and the
// expected throughputs E[T_i*] solve
//
//   E[T_i] = S * integral b f_i(b) prod_{j != i} F_j(b E[T_j] / E[T_i]) db.

#include <cstddef>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "pfair/matrix.hpp"
#include "pfair/pf_solver.hpp"

namespace pfair {

/// Marginal law of one user's rate on one channel (identical across channels).
class RateDistribution {
  public:
    enum class Kind { discrete, exponential_snr };

    /// Point masses at `rates` with probabilities `probs` (sum to 1 within 1e-12).
    static RateDistribution discrete(std::vector<double> rates, std::vector<double> probs);
    /// Rayleigh fading: SNR ~ Exponential(mean), b = log2(1 + SNR).
    static RateDistribution exponential_snr(double mean_snr_linear);
    static RateDistribution exponential_snr_db(double mean_snr_db);

    Kind kind() const { return kind_; }
    bool is_discrete() const { return kind_ == Kind::discrete; }
    std::span<const double> rates() const { return rates_; }
    std::span<const double> probs() const { return probs_; }
    double mean_snr() const { return mean_snr_; }

    double cdf(double rate) const;
    double mean() const;
    double sample(std::mt19937_64& rng) const;

  private:
    Kind kind_ = Kind::discrete;
    std::vector<double> rates_;
    std::vector<double> probs_;
    double mean_snr_ = 0.0;
};

struct VirtualChannel {
    std::size_t physical_channel = 0;
    std::vector<std::size_t> realization; // rate index per (user, channel), row-major U x S
    Matrix rates;                         // the realized U x S rate matrix
    double probability = 0.0;
    std::vector<double> virtual_rates;    // b_{i,k} * probability

    /// Comma-joined rate indices, row-major.
    std::string key() const;
};

inline constexpr std::size_t kMaxJointRealizations = 10000;

/// Enumerates the M^(S*U) joint realizations for every physical channel,
/// assuming independence across users and channels.
std::vector<VirtualChannel> build_virtual_channels(std::span<const RateDistribution> dists, std::size_t num_channels);

enum class Provenance { discrete_exact, continuous_fixed_point };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct EnsemblePolicy {
    std::vector<double> expected_throughputs;
    double residual = 0.0;
    Provenance provenance = Provenance::continuous_fixed_point;
    std::size_t num_channels = 0;
    /// Discrete policies only: realization key -> U x S airtime matrix.
    std::map<std::string, Matrix> allocation_table;

    void validate() const;
};

/// Solves the virtual-channel PF problem exactly (up to `opts.tol` on the KKT residual).
EnsemblePolicy solve_ensemble_discrete(std::span<const RateDistribution> dists, std::size_t num_channels,
                                       const PfSolverOptions& opts = {1e-10, 100000});

/// Replicates a single-channel table onto `num_channels` identically distributed
/// channels: P_{.,k | b} = P*_{. | b_k}.
EnsemblePolicy replicate_single_channel(const EnsemblePolicy& single, std::span<const RateDistribution> dists,
                                        std::size_t num_channels);

/// Expected throughputs implied by a discrete allocation table.
std::vector<double> table_throughputs(const EnsemblePolicy& policy, std::span<const RateDistribution> dists);

/// Largest violation of the optimality conditions on every virtual channel (k, b):
///  - both users served:       |b_{i,k}/E[T_i] - b_{j,k}/E[T_j]|
///  - i served, j not served:  max(0, b_{j,k}/E[T_j] - b_{i,k}/E[T_i])
/// with E[T] recomputed from the table itself.
double ensemble_kkt_violation(const EnsemblePolicy& policy, std::span<const RateDistribution> dists,
                              double support_threshold = 1e-9);

struct FixedPointOptions {
    double tol = 1e-6;
    double damping = 0.5;
    std::size_t max_iterations = 1000;
    double quadrature_tol = 1e-12;
};

/// G(T): one application of the fixed-point map for continuous distributions.
std::vector<double> fixed_point_map(std::span<const RateDistribution> dists, std::size_t num_channels,
                                    std::span<const double> throughputs, double quadrature_tol = 1e-12);

/// Damped iteration T <- (1 - a) T + a G(T) from T_i = S E[b_i] / U, with
/// a = `damping` at most. A step that increases the residual
/// max_i |G_i(T) - T_i| / T_i is retried with half the damping.
/// Throws std::runtime_error carrying the residual after `max_iterations` map evaluations.
EnsemblePolicy solve_fixed_point(std::span<const RateDistribution> dists, std::size_t num_channels,
                                 const FixedPointOptions& opts = {});

/// Served-user mask; an empty mask means every user.
using UserMask = std::vector<bool>;

/// Per channel, all airtime to argmax_i rate/E[T_i*]; exact ties split 1/w_k.
Allocation ensemble_dispatch(const EnsemblePolicy& policy, const Matrix& rates, const UserMask& active = {});

/// Per channel, all airtime to argmax_i rate; exact ties split 1/w_k.
Allocation max_rate_dispatch(const Matrix& rates, const UserMask& active = {});

/// Table look-up for a discrete policy; throws std::out_of_range for an unknown key.
const Matrix& table_lookup(const EnsemblePolicy& policy, const std::string& key);

nlohmann::json policy_to_json(const EnsemblePolicy& policy);
EnsemblePolicy policy_from_json(const nlohmann::json& j);

} // namespace pfair
