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
#include "migsim/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace migsim::harness {

Interval confidence_interval(const std::vector<double>& values) {
    Interval ci;
    if (values.empty()) return ci;
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    ci.mean = sum / n;
    double ss = 0.0;
    for (double v : values) ss += (v - ci.mean) * (v - ci.mean);
    ci.half_width = 1.96 * std::sqrt(ss / n) / std::sqrt(n);
    return ci;
}

std::vector<Variant> ablation_variants() {
    return {
        {"full", true, true, true, true},
        {"mig-only", true, true, false, false},
        {"placement-only", true, false, true, false},
        {"guards-only", true, false, false, true},
        {"static", false, false, false, false},
    };
}

std::vector<Variant> main_variants() {
    return {
        {"full", true, true, true, true},
        {"static", false, false, false, false},
    };
}

scenario::ScenarioSpec apply_variant(const scenario::ScenarioSpec& base, const Variant& v) {
    scenario::ScenarioSpec spec = base;
    spec.controller.enabled = v.enabled;
    spec.controller.enable_mig = v.enable_mig;
    spec.controller.enable_placement = v.enable_placement;
    spec.controller.enable_guardrails = v.enable_guardrails;
    return spec;
}

namespace {

struct Job {
    std::string variant;
    scenario::ScenarioSpec spec;
    uint64_t seed = 0;
    std::string out_dir;
};

std::string pick_focus_tenant(const scenario::ScenarioSpec& spec) {
    const scenario::TenantEntry* best = nullptr;
    for (const auto& t : spec.tenants) {
        if (!best || t.spec.slo_tail_ms < best->spec.slo_tail_ms) best = &t;
    }
    if (!best) throw model::ConfigError("scenario has no tenants");
    return best->spec.id;
}

std::vector<std::pair<std::string, std::function<void(model::ControllerConfig&)>>> sweep_points() {
    std::vector<std::pair<std::string, std::function<void(model::ControllerConfig&)>>> points;
    for (double dt : {1.0, 2.0, 5.0}) {
        char name[48];
        std::snprintf(name, sizeof(name), "interval=%.0fs", dt);
        points.emplace_back(name, [dt](model::ControllerConfig& c) { c.sample_interval_s = dt; });
    }
    for (int y : {2, 3, 5}) {
        char name[48];
        std::snprintf(name, sizeof(name), "persistence=%d", y);
        points.emplace_back(name, [y](model::ControllerConfig& c) { c.persistence_windows = y; });
    }
    for (int d : {128, 256, 512}) {
        char name[48];
        std::snprintf(name, sizeof(name), "dwell=%d", d);
        points.emplace_back(name, [d](model::ControllerConfig& c) {
            c.dwell_obs = d;
            c.cooldown_obs = d / 2;
        });
    }
    return points;
}

}  // namespace

ExperimentResult run_plan(const PlanOptions& opt) {
    const auto wall_start = std::chrono::steady_clock::now();
    if (opt.seeds < 1) throw model::ConfigError("experiment needs at least one seed");
    scenario::ScenarioSpec base = scenario::load_scenario(opt.scenario_path);

    ExperimentResult result;
    result.plan = opt.plan;
    result.scenario_name = base.name;
    result.focus_tenant = opt.focus_tenant.empty() ? pick_focus_tenant(base) : opt.focus_tenant;
    base.tenant(result.focus_tenant);  // throws if missing

    std::vector<Job> jobs;
    auto add_jobs = [&](const std::string& name, const scenario::ScenarioSpec& spec) {
        for (int s = 0; s < opt.seeds; ++s) {
            Job j;
            j.variant = name;
            j.spec = spec;
            j.seed = opt.seed_base + static_cast<uint64_t>(s);
            if (!opt.out_dir.empty()) {
                j.out_dir = opt.out_dir + "/" + name + "/seed" + std::to_string(j.seed);
            }
            jobs.push_back(std::move(j));
        }
    };

    if (opt.plan == "e1" || opt.plan == "llm") {
        for (const auto& v : main_variants()) add_jobs(v.name, apply_variant(base, v));
    } else if (opt.plan == "e2") {
        for (const auto& v : ablation_variants()) add_jobs(v.name, apply_variant(base, v));
    } else if (opt.plan == "e3") {
        for (const auto& [name, mutate] : sweep_points()) {
            scenario::ScenarioSpec spec = base;
            mutate(spec.controller);
            spec.controller.validate();
            add_jobs(name, spec);
        }
    } else {
        throw model::ConfigError("unknown experiment plan '" + opt.plan + "'");
    }

    // Fan out, then collect in plan order: aggregation below never depends on
    // completion order.
    unsigned jobs_limit = opt.jobs > 0 ? static_cast<unsigned>(opt.jobs)
                                       : std::max(1u, std::thread::hardware_concurrency());
    std::vector<engine::RunResult> runs(jobs.size());
    size_t next = 0;
    while (next < jobs.size()) {
        const size_t batch = std::min<size_t>(jobs_limit, jobs.size() - next);
        std::vector<std::future<engine::RunResult>> futs;
        futs.reserve(batch);
        for (size_t i = 0; i < batch; ++i) {
            const Job& j = jobs[next + i];
            futs.push_back(std::async(std::launch::async, [&j]() {
                engine::RunOptions ro;
                ro.seed = j.seed;
                ro.out_dir = j.out_dir;
                ro.write_traces = false;  // summary + actions only, runs stay light
                return engine::run_scenario(j.spec, ro);
            }));
        }
        for (size_t i = 0; i < batch; ++i) runs[next + i] = futs[i].get();
        next += batch;
    }

    // Aggregate per variant in insertion order.
    std::vector<std::string> order;
    std::map<std::string, VariantOutcome> agg;
    for (size_t i = 0; i < jobs.size(); ++i) {
        const auto& name = jobs[i].variant;
        if (!agg.count(name)) {
            order.push_back(name);
            agg[name].variant = name;
        }
        auto& out = agg[name];
        const auto& run = runs[i];
        const auto it = run.tenants.find(result.focus_tenant);
        if (it == run.tenants.end()) throw std::runtime_error("focus tenant missing from run summary");
        out.seeds.push_back(jobs[i].seed);
        out.p99_ms.push_back(it->second.p99_ms);
        out.miss_rate.push_back(it->second.miss_rate);
        double thr = 0.0;
        for (const auto& [id, t] : run.tenants) thr += t.throughput_hz;
        out.throughput_hz.push_back(thr);
    }
    for (const auto& name : order) {
        auto& out = agg[name];
        out.p99_ci = confidence_interval(out.p99_ms);
        out.miss_ci = confidence_interval(out.miss_rate);
        out.throughput_ci = confidence_interval(out.throughput_hz);
        result.variants.push_back(std::move(out));
    }
    result.runs = std::move(runs);
    result.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

    if (!opt.out_dir.empty()) {
        std::filesystem::create_directories(opt.out_dir);
        std::ofstream jf(opt.out_dir + "/experiment.json");
        jf << experiment_json(result).dump(2) << "\n";
        std::ofstream cf(opt.out_dir + "/summary.csv");
        cf << experiment_csv(result);
    }
    return result;
}

namespace {

nlohmann::ordered_json interval_json(const Interval& ci) {
    nlohmann::ordered_json j;
    j["mean"] = ci.mean;
    j["half_width"] = ci.half_width;
    return j;
}

const VariantOutcome* find_variant(const ExperimentResult& r, const std::string& name) {
    for (const auto& v : r.variants) {
        if (v.variant == name) return &v;
    }
    return nullptr;
}

}  // namespace

nlohmann::ordered_json experiment_json(const ExperimentResult& r) {
    nlohmann::ordered_json j;
    j["plan"] = r.plan;
    j["scenario"] = r.scenario_name;
    j["focus_tenant"] = r.focus_tenant;
    j["wall_s"] = r.wall_s;

    const VariantOutcome* base = find_variant(r, "static");
    nlohmann::ordered_json variants = nlohmann::ordered_json::array();
    for (const auto& v : r.variants) {
        nlohmann::ordered_json e;
        e["name"] = v.variant;
        e["seeds"] = v.seeds;
        e["p99_ms"] = v.p99_ms;
        e["miss_rate"] = v.miss_rate;
        e["throughput_hz"] = v.throughput_hz;
        e["p99_ci"] = interval_json(v.p99_ci);
        e["miss_ci"] = interval_json(v.miss_ci);
        e["throughput_ci"] = interval_json(v.throughput_ci);
        if (base && v.variant != "static" && base->p99_ci.mean > 0.0) {
            e["p99_delta_pct"] = 100.0 * (v.p99_ci.mean - base->p99_ci.mean) / base->p99_ci.mean;
            if (base->miss_ci.mean > 0.0) {
                e["miss_delta_pct"] = 100.0 * (v.miss_ci.mean - base->miss_ci.mean) / base->miss_ci.mean;
            }
            if (base->throughput_ci.mean > 0.0) {
                e["throughput_delta_pct"] =
                    100.0 * (v.throughput_ci.mean - base->throughput_ci.mean) / base->throughput_ci.mean;
            }
        }
        variants.push_back(std::move(e));
    }
    j["variants"] = std::move(variants);
    return j;
}

std::string experiment_csv(const ExperimentResult& r) {
    std::string out = "variant,seed,p99_ms,miss_rate,throughput_hz\n";
    char buf[160];
    for (const auto& v : r.variants) {
        for (size_t i = 0; i < v.seeds.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s,%llu,%.9g,%.9g,%.9g\n", v.variant.c_str(),
                          static_cast<unsigned long long>(v.seeds[i]), v.p99_ms[i], v.miss_rate[i],
                          v.throughput_hz[i]);
            out += buf;
        }
    }
    return out;
}

std::string render_report(const nlohmann::json& experiment) {
    std::ostringstream out;
    out << "plan: " << experiment.value("plan", std::string("?"))
        << "  scenario: " << experiment.value("scenario", std::string("?"))
        << "  tenant: " << experiment.value("focus_tenant", std::string("?")) << "\n\n";
    char line[240];
    std::snprintf(line, sizeof(line), "%-16s %7s %22s %14s %16s %12s\n", "variant", "seeds", "p99_ms (CI)",
                  "vs static", "miss_rate", "thr_hz");
    out << line;
    out << std::string(92, '-') << "\n";
    if (!experiment.contains("variants")) return out.str();
    for (const auto& v : experiment["variants"]) {
        const auto& p99 = v["p99_ci"];
        char ci[48];
        std::snprintf(ci, sizeof(ci), "%.2f +/- %.2f", p99["mean"].get<double>(),
                      p99["half_width"].get<double>());
        char delta[24];
        if (v.contains("p99_delta_pct")) {
            std::snprintf(delta, sizeof(delta), "%+.1f%%", v["p99_delta_pct"].get<double>());
        } else {
            std::snprintf(delta, sizeof(delta), "-");
        }
        std::snprintf(line, sizeof(line), "%-16s %7zu %22s %14s %16.4f %12.2f\n",
                      v["name"].get<std::string>().c_str(), v["seeds"].size(), ci, delta,
                      v["miss_ci"]["mean"].get<double>(), v["throughput_ci"]["mean"].get<double>());
        out << line;
    }
    return out.str();
}

}  // namespace migsim::harness
