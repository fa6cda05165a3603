/*
 * Copyright (c) 2026, migsim authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "migsim/audit.hpp"
#include "migsim/engine.hpp"
#include "migsim/harness.hpp"
#include "migsim/scenario.hpp"
#include "migsim/trace.hpp"

namespace {

// Failures print one machine-readable record on stderr and exit nonzero.
int fail(const std::string& kind, const std::string& message, const std::string& where = {}) {
    nlohmann::ordered_json err;
    err["error"] = kind;
    err["message"] = message;
    if (!where.empty()) err["where"] = where;
    std::cerr << err.dump() << "\n";
    return 1;
}

int cmd_run(const std::string& scenario_path, uint64_t seed, const std::string& out_dir, bool no_traces) {
    auto spec = migsim::scenario::load_scenario(scenario_path);
    migsim::engine::RunOptions opt;
    opt.seed = seed;
    opt.out_dir = out_dir;
    opt.write_traces = !no_traces;
    auto result = migsim::engine::run_scenario(spec, opt);

    auto report = migsim::audit::audit_run(spec, result);
    for (const auto& issue : report.issues) {
        std::cerr << "audit: " << issue.rule << ": " << issue.message << "\n";
    }

    const auto& focus = result.tenants;
    std::printf("scenario %s seed %llu: %zu tenants, %zu actions, %zu pauses, wall %.2fs\n",
                result.scenario_name.c_str(), static_cast<unsigned long long>(result.seed), focus.size(),
                result.actions.size(), result.pauses.size(), result.wall_s);
    for (const auto& [id, t] : result.tenants) {
        std::printf("  %-14s n=%-7llu p50=%-9.2f p99=%-9.2f miss=%-7.4f thr=%.2f/s\n", id.c_str(),
                    static_cast<unsigned long long>(t.completed_window), t.p50_ms, t.p99_ms, t.miss_rate,
                    t.throughput_hz);
    }
    if (result.stability.analytic_oversubscribed || result.stability.unbounded_growth) {
        for (const auto& note : result.stability.notes) std::printf("  stability: %s\n", note.c_str());
    }
    if (!report.ok()) return 2;
    return 0;
}

int cmd_experiment(const std::string& plan, const std::string& scenario_path, int seeds,
                   uint64_t seed_base, const std::string& out_dir, const std::string& focus, int jobs) {
    migsim::harness::PlanOptions opt;
    opt.plan = plan;
    opt.scenario_path = scenario_path;
    opt.seeds = seeds;
    opt.seed_base = seed_base;
    opt.out_dir = out_dir;
    opt.focus_tenant = focus;
    opt.jobs = jobs;
    auto result = migsim::harness::run_plan(opt);
    std::cout << migsim::harness::render_report(migsim::harness::experiment_json(result));
    std::printf("\n%zu runs in %.1fs", result.runs.size(), result.wall_s);
    if (!out_dir.empty()) std::printf(", artifacts in %s", out_dir.c_str());
    std::printf("\n");
    return 0;
}

int cmd_report(const std::string& in_dir) {
    const std::string path = in_dir + "/experiment.json";
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("no experiment.json under " + in_dir);
    }
    nlohmann::json experiment = nlohmann::json::parse(in);
    std::cout << migsim::harness::render_report(experiment);
    return 0;
}

int cmd_validate(const std::string& scenario_path) {
    auto spec = migsim::scenario::load_scenario(scenario_path);
    std::printf("%s: ok (%zu tenants, %zu hosts, %.0fs horizon)\n", spec.name.c_str(),
                spec.tenants.size(), spec.topology.hosts.size(), spec.duration_s);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SLO-driven multi-tenant GPU fabric simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir, in_dir, plan = "e1", focus;
    uint64_t seed = 1, seed_base = 1;
    int seeds = 7, jobs = 0;
    bool no_traces = false;

    auto* run = app.add_subcommand("run", "Simulate one scenario");
    run->add_option("--scenario", scenario_path, "Scenario file")->required();
    run->add_option("--seed", seed, "RNG seed");
    run->add_option("--out", out_dir, "Artifact directory");
    run->add_flag("--no-traces", no_traces, "Skip per-request and per-second trace streams");

    auto* experiment = app.add_subcommand("experiment", "Run a multi-seed experiment plan");
    experiment->add_option("--plan", plan, "Plan: e1, e2, e3 or llm")
        ->check(CLI::IsMember({"e1", "e2", "e3", "llm"}));
    experiment->add_option("--scenario", scenario_path, "Scenario file")->required();
    experiment->add_option("--seeds", seeds, "Seed count")->check(CLI::PositiveNumber);
    experiment->add_option("--seed-base", seed_base, "First seed");
    experiment->add_option("--out", out_dir, "Artifact directory");
    experiment->add_option("--tenant", focus, "Tenant to aggregate (default: tightest SLO)");
    experiment->add_option("--jobs", jobs, "Parallel runs (default: cores)");

    auto* report = app.add_subcommand("report", "Render a saved experiment");
    report->add_option("--in", in_dir, "Experiment artifact directory")->required();

    auto* validate = app.add_subcommand("validate", "Parse and validate a scenario file");
    validate->add_option("--scenario", scenario_path, "Scenario file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(run)) return cmd_run(scenario_path, seed, out_dir, no_traces);
        if (app.got_subcommand(experiment)) {
            return cmd_experiment(plan, scenario_path, seeds, seed_base, out_dir, focus, jobs);
        }
        if (app.got_subcommand(report)) return cmd_report(in_dir);
        if (app.got_subcommand(validate)) return cmd_validate(scenario_path);
    } catch (const migsim::model::ConfigError& e) {
        return fail("config", e.what(), e.where());
    } catch (const std::exception& e) {
        return fail("runtime", e.what());
    }
    return 1;
}
