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

// pfsim: command-line front end for the scheduling experiments.
//
//   pfsim run --config exp.json --scale desk --out results.csv
//   pfsim fixed-point --snr-db 10 12 14 16 --subcarriers 16
//   pfsim policy export --snr-db 13 13 13 13 --out policy.json
//   pfsim policy import policy.json
//   pfsim trace export --config exp.json --seed 7 --out trace.csv

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pfair/channel.hpp"
#include "pfair/ensemble.hpp"
#include "pfair/harness.hpp"

namespace {

using namespace pfair;

struct RunArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replications;
    std::optional<std::string> out;
    std::optional<std::size_t> threads;
    bool skip_warmup = false;
    std::string scale;
};

struct PolicyArgs {
    std::vector<double> snr_db = {13, 13, 13, 13};
    std::size_t subcarriers = 16;
    double tol = 1e-6;
    double damping = 0.5;
    std::size_t max_iterations = 1000;
    std::string out;
};

struct TraceArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<double> doppler;
    std::optional<double> rms_delay;
    std::optional<double> duration;
    std::string out;
};

void add_policy_options(CLI::App* cmd, PolicyArgs& a) {
    cmd->add_option("--snr-db", a.snr_db, "Mean SNR per user in dB")->expected(1, -1);
    cmd->add_option("--subcarriers", a.subcarriers, "Number of identically distributed subcarriers")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tol", a.tol, "Relative fixed-point tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--damping", a.damping, "Damping factor in (0, 1]")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--max-iterations", a.max_iterations, "Iteration cap");
}

EnsemblePolicy solve_policy(const PolicyArgs& a) {
    std::vector<RateDistribution> dists;
    for (double s : a.snr_db)
        dists.push_back(RateDistribution::exponential_snr_db(s));
    FixedPointOptions opts;
    opts.tol = a.tol;
    opts.damping = a.damping;
    opts.max_iterations = a.max_iterations;
    return solve_fixed_point(dists, a.subcarriers, opts);
}

int cmd_run(const RunArgs& a) {
    ExperimentConfig cfg = a.config.empty() ? ExperimentConfig{} : load_config(a.config);
    if (!a.scale.empty())
        apply_scale(cfg, a.scale);
    if (a.seed)
        cfg.base_seed = *a.seed;
    if (a.replications)
        cfg.replications = *a.replications;
    if (a.out)
        cfg.output_path = *a.out;
    if (a.threads)
        cfg.threads = *a.threads;
    if (a.skip_warmup)
        cfg.skip_warmup = true;

    const ExperimentResult res = run_experiment(cfg);
    if (cfg.output_path == "-")
        emit_csv(res, std::cout);
    else
        emit_csv(res, cfg.output_path);
    for (const auto& f : res.failures)
        std::cerr << "pfsim: sweep value " << f.sweep_value << ", replication " << f.replication
                  << " failed: " << f.message << '\n';
    return res.ok() ? 0 : 1;
}

int cmd_fixed_point(const PolicyArgs& a) {
    const EnsemblePolicy p = solve_policy(a);
    std::cout << "residual " << p.residual << '\n';
    for (std::size_t i = 0; i < p.expected_throughputs.size(); ++i)
        std::printf("user %zu  snr %.3g dB  E[T*] %.9g\n", i, a.snr_db[i], p.expected_throughputs[i]);
    return 0;
}

int cmd_policy_export(const PolicyArgs& a) {
    const auto j = policy_to_json(solve_policy(a));
    if (a.out.empty() || a.out == "-") {
        std::cout << j.dump(2) << '\n';
        return 0;
    }
    std::ofstream out(a.out);
    out << j.dump(2) << '\n';
    if (!out)
        throw std::runtime_error("cannot write '" + a.out + "'");
    return 0;
}

int cmd_policy_import(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    const EnsemblePolicy p = policy_from_json(j);
    std::cout << "provenance " << to_string(p.provenance) << "\nchannels " << p.num_channels << "\nresidual "
              << p.residual << "\ntable entries " << p.allocation_table.size() << '\n';
    for (std::size_t i = 0; i < p.expected_throughputs.size(); ++i)
        std::printf("user %zu  E[T*] %.9g\n", i, p.expected_throughputs[i]);
    return 0;
}

int cmd_trace_export(const TraceArgs& a) {
    ChannelConfig c = a.config.empty() ? ChannelConfig{} : load_config(a.config).channel;
    if (a.seed)
        c.seed = *a.seed;
    if (a.doppler)
        c.doppler_hz = *a.doppler;
    if (a.rms_delay)
        c.rms_delay_spread = *a.rms_delay;
    if (a.duration)
        c.duration = *a.duration;
    const ChannelTrace t = generate_trace(c);
    if (a.out.empty() || a.out == "-") {
        write_trace_csv(t, std::cout);
        return 0;
    }
    std::ofstream out(a.out);
    write_trace_csv(t, out);
    if (!out)
        throw std::runtime_error("cannot write '" + a.out + "'");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Proportional-fair scheduling simulator"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run a replicated experiment sweep and write CSV");
    run_cmd->add_option("--config", run.config, "JSON experiment configuration")->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", run.seed, "Base seed (replication r uses seed + r)");
    run_cmd->add_option("--replications", run.replications, "Replications per sweep point")
        ->check(CLI::PositiveNumber);
    run_cmd->add_option("--out", run.out, "Output CSV path, '-' for stdout");
    run_cmd->add_option("--threads", run.threads, "Worker threads (0: hardware concurrency)");
    run_cmd->add_flag("--skip-warmup", run.skip_warmup, "Exclude slots n < W from the Jain index");
    run_cmd->add_option("--scale", run.scale, "desk: 10 x 0.2 s, paper: 100 x 1 s")
        ->check(CLI::IsMember({"desk", "paper"}));

    PolicyArgs fp;
    auto* fp_cmd = app.add_subcommand("fixed-point", "Solve the infinite-window expected throughputs");
    add_policy_options(fp_cmd, fp);

    auto* policy_cmd = app.add_subcommand("policy", "Export or import an ensemble policy as JSON");
    policy_cmd->require_subcommand(1);
    PolicyArgs pe;
    auto* export_cmd = policy_cmd->add_subcommand("export", "Solve and write a policy");
    add_policy_options(export_cmd, pe);
    export_cmd->add_option("--out", pe.out, "Output path, '-' for stdout");
    std::string import_path;
    auto* import_cmd = policy_cmd->add_subcommand("import", "Read, validate and summarize a policy");
    import_cmd->add_option("path", import_path, "Policy JSON")->required()->check(CLI::ExistingFile);

    auto* trace_cmd = app.add_subcommand("trace", "Channel trace utilities");
    trace_cmd->require_subcommand(1);
    TraceArgs tr;
    auto* trace_export = trace_cmd->add_subcommand("export", "Write a channel rate trace as CSV");
    trace_export->add_option("--config", tr.config, "JSON experiment configuration")->check(CLI::ExistingFile);
    trace_export->add_option("--seed", tr.seed, "Trace seed");
    trace_export->add_option("--doppler", tr.doppler, "Maximum Doppler shift in Hz");
    trace_export->add_option("--rms-delay", tr.rms_delay, "RMS delay spread in seconds");
    trace_export->add_option("--duration", tr.duration, "Trace duration in seconds");
    trace_export->add_option("--out", tr.out, "Output path, '-' for stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd)
            return cmd_run(run);
        if (*fp_cmd)
            return cmd_fixed_point(fp);
        if (*export_cmd)
            return cmd_policy_export(pe);
        if (*import_cmd)
            return cmd_policy_import(import_path);
        if (*trace_export)
            return cmd_trace_export(tr);
    } catch (const std::exception& e) {
        std::cerr << "pfsim: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
