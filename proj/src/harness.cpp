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

#include "pfair/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace pfair {

namespace {

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string join_reals(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            out += ';';
        out += format_real(v[i]);
    }
    return out;
}

std::string scheduler_name(SchedulerType t) {
    SchedulerKind k;
    k.type = t;
    return k.name();
}

// CSV-safe single-line diagnostic.
std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r')
            c = ' ';
    return s;
}

bool is_whole(double v) { return std::floor(v) == v; }

} // namespace

std::string to_string(SweepAxis a) {
    switch (a) {
    case SweepAxis::window_slots: return "window_slots";
    case SweepAxis::doppler_hz: return "doppler_hz";
    case SweepAxis::rms_delay_spread: return "rms_delay_spread";
    }
    return "?";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "window_slots")
        return SweepAxis::window_slots;
    if (s == "doppler_hz")
        return SweepAxis::doppler_hz;
    if (s == "rms_delay_spread")
        return SweepAxis::rms_delay_spread;
    throw std::invalid_argument("unknown sweep axis '" + s + "'");
}

void ExperimentConfig::validate() const {
    channel.validate();
    if (schedulers.empty())
        throw std::invalid_argument("experiment: no scheduler selected");
    if (values.empty())
        throw std::invalid_argument("experiment: empty sweep");
    if (replications < 1)
        throw std::invalid_argument("experiment: replications must be >= 1");
    if (window_slots < 1)
        throw std::invalid_argument("experiment: window_slots must be >= 1");
    for (double v : values) {
        if (!std::isfinite(v))
            throw std::invalid_argument("experiment: non-finite sweep value");
        switch (axis) {
        case SweepAxis::window_slots:
            if (v < 1 || !is_whole(v))
                throw std::invalid_argument("experiment: window sweep values must be integers >= 1");
            break;
        case SweepAxis::doppler_hz:
        case SweepAxis::rms_delay_spread:
            if (v < 0)
                throw std::invalid_argument("experiment: sweep values must be >= 0");
            break;
        }
        channel_at(v).validate();
    }
}

ChannelConfig ExperimentConfig::channel_at(double sweep_value) const {
    ChannelConfig c = channel;
    if (axis == SweepAxis::doppler_hz)
        c.doppler_hz = sweep_value;
    else if (axis == SweepAxis::rms_delay_spread)
        c.rms_delay_spread = sweep_value;
    return c;
}

std::size_t ExperimentConfig::window_at(double sweep_value) const {
    return axis == SweepAxis::window_slots ? static_cast<std::size_t>(sweep_value) : window_slots;
}

void apply_scale(ExperimentConfig& cfg, const std::string& scale) {
    if (scale == "desk") {
        cfg.replications = 10;
        cfg.channel.duration = 200 * cfg.channel.slot_duration;
    } else if (scale == "paper") {
        cfg.replications = 100;
        cfg.channel.duration = 1000 * cfg.channel.slot_duration;
    } else {
        throw std::invalid_argument("unknown scale '" + scale + "' (expected desk or paper)");
    }
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (!j.is_object())
        throw std::invalid_argument("config: top level must be an object");
    if (auto it = j.find("channel"); it != j.end()) {
        auto& c = cfg.channel;
        const auto& jc = *it;
        c.num_users = jc.value("num_users", c.num_users);
        c.num_subcarriers = jc.value("num_subcarriers", c.num_subcarriers);
        c.symbol_duration = jc.value("symbol_duration", c.symbol_duration);
        c.slot_duration = jc.value("slot_duration", c.slot_duration);
        c.doppler_hz = jc.value("doppler_hz", c.doppler_hz);
        c.rms_delay_spread = jc.value("rms_delay_spread", c.rms_delay_spread);
        c.duration = jc.value("duration", c.duration);
        if (jc.contains("mean_snr_db"))
            c.mean_snr_db = jc.at("mean_snr_db").get<std::vector<double>>();
        else
            c.mean_snr_db.assign(c.num_users, c.mean_snr_db.empty() ? 13.0 : c.mean_snr_db.front());
    }
    if (j.contains("schedulers")) {
        cfg.schedulers.clear();
        for (const auto& s : j.at("schedulers"))
            cfg.schedulers.push_back(scheduler_type_from_string(s.get<std::string>()));
    }
    if (auto it = j.find("sweep"); it != j.end()) {
        cfg.axis = sweep_axis_from_string(it->at("axis").get<std::string>());
        cfg.values = it->at("values").get<std::vector<double>>();
    }
    cfg.window_slots = j.value("window_slots", cfg.window_slots);
    cfg.replications = j.value("replications", cfg.replications);
    cfg.base_seed = j.value("base_seed", cfg.base_seed);
    cfg.skip_warmup = j.value("skip_warmup", cfg.skip_warmup);
    cfg.output_path = j.value("output_path", cfg.output_path);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("backlog_mode"))
        cfg.backlog = backlog_mode_from_string(j.at("backlog_mode").get<std::string>());
    cfg.channel.seed = cfg.base_seed;
    return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    const auto& c = cfg.channel;
    j["channel"] = {{"num_users", c.num_users},
                    {"num_subcarriers", c.num_subcarriers},
                    {"symbol_duration", c.symbol_duration},
                    {"slot_duration", c.slot_duration},
                    {"doppler_hz", c.doppler_hz},
                    {"rms_delay_spread", c.rms_delay_spread},
                    {"mean_snr_db", c.mean_snr_db},
                    {"duration", c.duration}};
    auto names = nlohmann::json::array();
    for (auto t : cfg.schedulers)
        names.push_back(scheduler_name(t));
    j["schedulers"] = names;
    j["sweep"] = {{"axis", to_string(cfg.axis)}, {"values", cfg.values}};
    j["window_slots"] = cfg.window_slots;
    j["replications"] = cfg.replications;
    j["base_seed"] = cfg.base_seed;
    j["skip_warmup"] = cfg.skip_warmup;
    j["output_path"] = cfg.output_path;
    j["threads"] = cfg.threads;
    j["backlog_mode"] = to_string(cfg.backlog);
    return j;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

std::vector<const ResultRow*> ExperimentResult::select(double sweep_value, const std::string& scheduler) const {
    std::vector<const ResultRow*> out;
    for (const auto& r : rows)
        if (r.sweep_value == sweep_value && r.scheduler == scheduler)
            out.push_back(&r);
    return out;
}

const AggregateRow* ExperimentResult::aggregate(double sweep_value, const std::string& scheduler) const {
    for (const auto& a : aggregates)
        if (a.sweep_value == sweep_value && a.scheduler == scheduler)
            return &a;
    return nullptr;
}

RunRecord simulate(const SchedulerKind& kind, const ChannelTrace& trace, std::size_t metric_window,
                   const std::vector<BacklogFlags>& backlog, bool keep_allocations, const PfSolverOptions& opts) {
    kind.validate();
    const std::size_t N = trace.num_slots();
    if (N == 0)
        throw std::invalid_argument("simulate: empty trace");
    if (!backlog.empty() && backlog.size() != N)
        throw std::invalid_argument("simulate: backlog flags must cover every slot");
    const std::size_t U = trace.rates.front().rows();

    WindowState state(U, kind.window);
    RunRecord rec;
    rec.series.per_slot = Matrix(N, U);
    rec.series.window = metric_window;
    static const BacklogFlags saturated;
    for (std::size_t n = 0; n < N; ++n) {
        const BacklogFlags& flags = backlog.empty() ? saturated : backlog[n];
        Allocation a = schedule_slot(kind, state, trace.rates[n], flags, opts);
        update_state(state, a, trace.rates[n], flags);
        auto t = a.user_throughput(trace.rates[n]);
        for (std::size_t i = 0; i < U; ++i)
            rec.series.per_slot(n, i) = (flags.empty() || flags[i]) ? t[i] : 0.0;
        if (keep_allocations)
            rec.allocations.push_back(std::move(a));
    }
    return rec;
}

std::vector<SchedulerKind> make_schedulers(const ExperimentConfig& cfg, std::size_t window,
                                           std::shared_ptr<const EnsemblePolicy> policy) {
    std::vector<SchedulerKind> out;
    for (auto t : cfg.schedulers) {
        SchedulerKind k;
        switch (t) {
        case SchedulerType::pf_w1: k = SchedulerKind::pf_w1(); break;
        case SchedulerType::pf_lookback: k = SchedulerKind::pf_lookback(window); break;
        case SchedulerType::pf_infinite: k = SchedulerKind::pf_infinite(policy); break;
        case SchedulerType::max_throughput: k = SchedulerKind::max_throughput(); break;
        case SchedulerType::maxmin_lookback: k = SchedulerKind::maxmin_lookback(window); break;
        }
        k.backlog = cfg.backlog;
        out.push_back(std::move(k));
    }
    return out;
}

std::shared_ptr<const EnsemblePolicy> rayleigh_policy(const ChannelConfig& cfg, const FixedPointOptions& opts) {
    std::vector<RateDistribution> dists;
    for (double snr : cfg.mean_snr_db)
        dists.push_back(RateDistribution::exponential_snr_db(snr));
    return std::make_shared<const EnsemblePolicy>(solve_fixed_point(dists, cfg.num_subcarriers, opts));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::size_t P = cfg.values.size(), R = cfg.replications, K = cfg.schedulers.size();

    // The ensemble policy only depends on the SNR profile and S, neither of which is swept.
    std::shared_ptr<const EnsemblePolicy> policy;
    if (std::find(cfg.schedulers.begin(), cfg.schedulers.end(), SchedulerType::pf_infinite) != cfg.schedulers.end())
        policy = rayleigh_policy(cfg.channel, cfg.fixed_point);

    struct Item {
        std::vector<ResultRow> rows; // one per scheduler
        std::string error;
    };
    std::vector<Item> items(P * R);

    auto work = [&](std::size_t idx) {
        const std::size_t p = idx / R, r = idx % R;
        const double value = cfg.values[p];
        Item& item = items[idx];
        try {
            ChannelConfig cc = cfg.channel_at(value);
            cc.seed = cfg.base_seed + r;
            const ChannelTrace trace = generate_trace(cc);
            const std::size_t W = cfg.window_at(value);
            for (const auto& kind : make_schedulers(cfg, W, policy)) {
                const RunRecord rec = simulate(kind, trace, W, {}, false, cfg.solver);
                ResultRow row;
                row.sweep_value = value;
                row.scheduler = kind.name();
                row.replication = r;
                row.system_throughput = system_throughput(rec.series);
                row.jain_index = jain_index(rec.series, cfg.skip_warmup);
                row.user_throughputs = user_mean_throughput(rec.series);
                item.rows.push_back(std::move(row));
            }
        } catch (const std::exception& e) {
            item.error = e.what();
        }
    };

    std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, items.size());
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < items.size(); i = next++)
                    work(i);
            });
    }

    ExperimentResult res;
    res.axis = cfg.axis;
    for (std::size_t p = 0; p < P; ++p) {
        bool point_ok = true;
        for (std::size_t r = 0; r < R; ++r) {
            const Item& it = items[p * R + r];
            if (!it.error.empty()) {
                res.failures.push_back({cfg.values[p], r, it.error});
                point_ok = false;
            }
        }
        for (std::size_t s = 0; s < K; ++s) {
            std::vector<double> sys, jain;
            std::vector<std::vector<double>> users;
            for (std::size_t r = 0; r < R; ++r) {
                const Item& it = items[p * R + r];
                if (!it.error.empty())
                    continue;
                const ResultRow& row = it.rows[s];
                res.rows.push_back(row);
                sys.push_back(row.system_throughput);
                jain.push_back(row.jain_index);
                users.resize(row.user_throughputs.size());
                for (std::size_t i = 0; i < users.size(); ++i)
                    users[i].push_back(row.user_throughputs[i]);
            }
            if (!point_ok || R < 2)
                continue;
            AggregateRow agg;
            agg.sweep_value = cfg.values[p];
            agg.scheduler = res.rows.back().scheduler;
            agg.system_throughput = summarize(sys);
            agg.jain_index = summarize(jain);
            for (const auto& u : users)
                agg.user_throughputs.push_back(summarize(u));
            res.aggregates.push_back(std::move(agg));
        }
    }
    return res;
}

void emit_csv(const ExperimentResult& result, std::ostream& os) {
    if (result.rows.empty() && result.failures.empty())
        throw std::invalid_argument("emit_csv: empty result");
    const std::string axis = to_string(result.axis);
    os << "sweep_axis,sweep_value,scheduler,replication,system_throughput,jain_index,user_throughputs\n";

    auto emit_aggregates = [&](double value, const std::string& scheduler) {
        const AggregateRow* a = result.aggregate(value, scheduler);
        if (!a)
            return;
        std::vector<double> mean, ci;
        for (const auto& u : a->user_throughputs) {
            mean.push_back(u.mean);
            ci.push_back(u.half_width);
        }
        os << axis << ',' << format_real(value) << ',' << scheduler << ",mean," << format_real(a->system_throughput.mean)
           << ',' << format_real(a->jain_index.mean) << ',' << join_reals(mean) << '\n';
        os << axis << ',' << format_real(value) << ',' << scheduler << ",ci95,"
           << format_real(a->system_throughput.half_width) << ',' << format_real(a->jain_index.half_width) << ','
           << join_reals(ci) << '\n';
    };

    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const ResultRow& r = result.rows[i];
        os << axis << ',' << format_real(r.sweep_value) << ',' << r.scheduler << ',' << r.replication << ','
           << format_real(r.system_throughput) << ',' << format_real(r.jain_index) << ','
           << join_reals(r.user_throughputs) << '\n';
        const bool group_end = i + 1 == result.rows.size() || result.rows[i + 1].sweep_value != r.sweep_value ||
                               result.rows[i + 1].scheduler != r.scheduler;
        if (group_end)
            emit_aggregates(r.sweep_value, r.scheduler);
    }
    for (const auto& f : result.failures)
        os << axis << ',' << format_real(f.sweep_value) << ",failed," << f.replication << ",,," << sanitize(f.message)
           << '\n';
    if (!os)
        throw std::runtime_error("emit_csv: write failed");
}

void emit_csv(const ExperimentResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("emit_csv: cannot open '" + path + "'");
    emit_csv(result, static_cast<std::ostream&>(out));
    out.flush();
    if (!out)
        throw std::runtime_error("emit_csv: write to '" + path + "' failed");
}

} // namespace pfair
