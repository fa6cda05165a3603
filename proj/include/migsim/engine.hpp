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

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "migsim/controller.hpp"
#include "migsim/model.hpp"
#include "migsim/scenario.hpp"

namespace migsim::engine {

// Reconfiguration pause model: truncated normal, seconds.
inline constexpr double kReconfigPauseMean = 18.0;
inline constexpr double kReconfigPauseSd = 6.0;
inline constexpr double kReconfigPauseLo = 5.0;
inline constexpr double kReconfigPauseHi = 30.0;
// Live moves checkpoint less state: half the reconfiguration envelope.
inline constexpr double kMovePauseMean = 9.0;
inline constexpr double kMovePauseSd = 3.0;
inline constexpr double kMovePauseLo = 2.5;
inline constexpr double kMovePauseHi = 15.0;

// Service inflation per unit of co-resident SM pressure on shared devices.
inline constexpr double kMpsKappa = 0.5;

/// Normal(mean, sd) resampled into [lo, hi].
double sample_truncated_normal(std::mt19937_64& rng, double mean, double sd, double lo, double hi);

struct CompletionRecord {
    std::string tenant;
    uint64_t seq = 0;
    double arrived_s = 0.0;
    double done_s = 0.0;
    double total_ms = 0.0;
    double compute_ms = 0.0;
    double transfer_ms = 0.0;
    double noise_ms = 0.0;  // waits plus drawn noise; total - compute - transfer exactly
    double transfer_bytes = 0.0;
};

struct PauseEvent {
    double t_s = 0.0;
    std::string tenant;
    control::ActionKind kind = control::ActionKind::none;
    double duration_s = 0.0;
};

/// Per-tenant steady-state statistics over [measure_start, duration].
struct TenantSummary {
    std::string id;
    uint64_t completed_total = 0;
    uint64_t completed_window = 0;
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double p99_ms = 0.0;
    double miss_rate = 0.0;       // fraction of window completions over tau
    double throughput_hz = 0.0;   // window completions / window length
    double slo_tail_ms = 0.0;
};

struct EndState {
    model::Placement placement;
    std::string profile;
    double claim_Bps = 0.0;
    model::TenantStatus status = model::TenantStatus::admitted;
    bool cpu_pinned = false;
};

struct StabilityReport {
    bool analytic_oversubscribed = false;  // sum of claims >= capacity on some root
    bool unbounded_growth = false;         // backlog kept growing through the run
    std::vector<std::string> notes;
};

struct RunOptions {
    uint64_t seed = 1;
    std::string out_dir;          // empty: no files
    bool write_traces = true;
    bool keep_completions = false;
};

struct RunResult {
    std::string scenario_name;
    uint64_t seed = 1;
    double duration_s = 0.0;
    double measure_start_s = 0.0;
    std::map<std::string, TenantSummary> tenants;
    std::map<std::string, EndState> end_states;
    std::vector<control::ActionRecord> actions;
    std::vector<PauseEvent> pauses;
    StabilityReport stability;
    std::vector<CompletionRecord> completions;  // only when keep_completions
    double wall_s = 0.0;
};

/// Simulate one scenario run. Deterministic in (spec, seed): identical
/// inputs produce byte-identical artifacts.
RunResult run_scenario(const scenario::ScenarioSpec& spec, const RunOptions& opt);

}  // namespace migsim::engine
