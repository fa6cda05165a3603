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
#pragma once

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

#include "migsim/engine.hpp"
#include "migsim/scenario.hpp"

namespace migsim::harness {

/// Normal-approximation confidence interval over independent per-seed values.
struct Interval {
    double mean = 0.0;
    double half_width = 0.0;  // 1.96 * sigma / sqrt(n), population sigma
    double lo() const { return mean - half_width; }
    double hi() const { return mean + half_width; }
};

Interval confidence_interval(const std::vector<double>& values);

/// One controller configuration under comparison.
struct Variant {
    std::string name;
    bool enabled = true;
    bool enable_mig = true;
    bool enable_placement = true;
    bool enable_guardrails = true;
};

/// Ablation grid: every subsystem on, each one alone, and everything off.
std::vector<Variant> ablation_variants();
/// Two-arm comparison: full controller against the static baseline.
std::vector<Variant> main_variants();

scenario::ScenarioSpec apply_variant(const scenario::ScenarioSpec& base, const Variant& v);

/// Per-variant aggregate over seeds for one tenant of interest.
struct VariantOutcome {
    std::string variant;
    std::vector<uint64_t> seeds;
    std::vector<double> p99_ms;        // per seed, tenant of interest
    std::vector<double> miss_rate;     // per seed
    std::vector<double> throughput_hz; // per seed, sum over tenants
    Interval p99_ci;
    Interval miss_ci;
    Interval throughput_ci;
};

struct ExperimentResult {
    std::string plan;
    std::string scenario_name;
    std::string focus_tenant;
    std::vector<VariantOutcome> variants;
    std::vector<engine::RunResult> runs;  // row-major: variant-major, seed-minor
    double wall_s = 0.0;
};

/// Named experiment plans over a scenario file:
///   e1    full controller vs static baseline, headline deltas;
///   e2    five-variant ablation;
///   e3    sensitivity sweep over sampling interval, threshold, dwell;
///   llm   e1 comparison on the LLM time-to-first-token scenario.
struct PlanOptions {
    std::string plan = "e1";
    std::string scenario_path;
    int seeds = 7;
    uint64_t seed_base = 1;
    std::string out_dir;
    std::string focus_tenant;  // empty: tenant with the smallest tail SLO
    int jobs = 0;              // 0: hardware concurrency
};

ExperimentResult run_plan(const PlanOptions& opt);

/// Sensitivity sweep point for the e3 plan.
struct SweepPoint {
    std::string param;
    double value = 0.0;
    Interval p99_ci;
    Interval miss_ci;
};

nlohmann::ordered_json experiment_json(const ExperimentResult& r);
std::string experiment_csv(const ExperimentResult& r);

/// Render a saved experiment.json into a human-readable comparison table.
std::string render_report(const nlohmann::json& experiment);

}  // namespace migsim::harness
