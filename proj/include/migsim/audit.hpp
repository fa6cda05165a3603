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

#include "migsim/engine.hpp"
#include "migsim/scenario.hpp"

namespace migsim::audit {

struct AuditIssue {
    std::string rule;     // short rule id, e.g. "dwell", "mig-run", "guardrail-bounds"
    std::string message;  // what was violated, with numbers
};

struct AuditReport {
    std::vector<AuditIssue> issues;
    bool ok() const { return issues.empty(); }
};

/// Check one finished run against the control policy's hard invariants:
///  - dwell: at least cfg.dwell_obs observations between consecutive control
///    decisions for a tenant (expiries and rollbacks are reactions, exempt);
///  - mig-run: at most 4 consecutive capacity upgrades per tenant without an
///    intervening different action;
///  - guardrail-bounds: throttles within [100e6, 500e6] B/s, quotas within
///    [50, 100] percent;
///  - claims: per-root sum of admitted bandwidth claims stays below capacity.
AuditReport audit_run(const scenario::ScenarioSpec& spec, const engine::RunResult& result);

struct PauseStats {
    size_t count = 0;
    double mean_s = 0.0;
    double max_s = 0.0;
};

/// Stats over pauses of one action kind (move / mig_up / mig_down / rollback).
PauseStats pause_stats(const std::vector<engine::PauseEvent>& pauses, control::ActionKind kind);

/// Reconfiguration pauses of every kind pooled together.
PauseStats pause_stats_all(const std::vector<engine::PauseEvent>& pauses);

/// Tenant moves per hour of simulated time.
double moves_per_hour(const engine::RunResult& result);

}  // namespace migsim::audit
