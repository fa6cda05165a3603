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

#include <string>
#include <vector>

#include "migsim/model.hpp"
#include "migsim/workload.hpp"

namespace migsim::scenario {

inline constexpr const char* kScenarioVersion = "scenario-v1";

/// One tenant as configured by a scenario: workload spec, pinned initial
/// placement, and its activity schedule.
struct TenantEntry {
    model::TenantSpec spec;
    model::Placement placement;
    std::string profile_name;  // initial MIG profile
    workload::InterferenceSchedule schedule;
};

/// Host-interrupt storm source: while active, unpinned tenants on the named
/// core group pay extra per-request noise.
struct IrqBurstSpec {
    int host = 0;
    int core_group = 0;
    double extra_noise_ms = 0.0;
    workload::InterferenceSchedule schedule;
};

struct ScenarioSpec {
    std::string name;
    double duration_s = 0.0;
    double measure_start_s = 0.0;      // steady-state window start for summaries
    bool fabric_redistribute = false;  // re-share capped tenants' leftover
    model::TopologySpec topology;
    std::vector<TenantEntry> tenants;
    std::vector<IrqBurstSpec> irq_bursts;
    model::ControllerConfig controller;

    /// Cross-checks placements against the topology (existence, slice
    /// packing, profile/slice agreement). Throws ConfigError.
    void validate() const;

    const TenantEntry& tenant(const std::string& id) const;
};

/// Parse a scenario document. Rejects version mismatches and unknown keys;
/// ConfigError::where() carries "<source>:<line>".
ScenarioSpec parse_scenario(const std::string& yaml_text, const std::string& source_name);

/// Load and parse a scenario file.
ScenarioSpec load_scenario(const std::string& path);

}  // namespace migsim::scenario
