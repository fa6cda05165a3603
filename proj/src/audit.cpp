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
#include "migsim/audit.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace migsim::audit {

using control::ActionKind;

namespace {

std::string fmt(const char* format, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), format, a, b);
    return buf;
}

bool is_decision(ActionKind k) {
    switch (k) {
        case ActionKind::guardrail_io_throttle:
        case ActionKind::guardrail_mps_quota:
        case ActionKind::move:
        case ActionKind::mig_up:
        case ActionKind::mig_down:
            return true;
        case ActionKind::none:
        case ActionKind::rollback:
        case ActionKind::guardrail_expire:
            return false;
    }
    return false;
}

}  // namespace

AuditReport audit_run(const scenario::ScenarioSpec& spec, const engine::RunResult& result) {
    AuditReport report;
    const auto& cfg = spec.controller;

    // Dwell: observation distance between consecutive decisions per tenant.
    std::map<std::string, bool> seen;
    for (const auto& a : result.actions) {
        if (!is_decision(a.kind)) continue;
        if (seen[a.tenant] && a.obs_since_prev < static_cast<size_t>(cfg.dwell_obs)) {
            char buf[200];
            std::snprintf(buf, sizeof(buf),
                          "%s: action #%d (%s) after %zu observations, dwell requires %d", a.tenant.c_str(),
                          a.seq, control::to_string(a.kind), a.obs_since_prev, cfg.dwell_obs);
            report.issues.push_back({"dwell", buf});
        }
        seen[a.tenant] = true;
    }

    // Capacity upgrades: no more than 4 in a row per tenant.
    std::map<std::string, int> up_run;
    for (const auto& a : result.actions) {
        if (!is_decision(a.kind) && a.kind != ActionKind::rollback) continue;
        int& run = up_run[a.tenant];
        if (a.kind == ActionKind::mig_up) {
            run += 1;
            if (run > 4) {
                char buf[160];
                std::snprintf(buf, sizeof(buf), "%s: %d consecutive capacity upgrades (limit 4)",
                              a.tenant.c_str(), run);
                report.issues.push_back({"mig-run", buf});
            }
        } else {
            run = 0;
        }
    }

    // Guardrail actuation bounds.
    for (const auto& a : result.actions) {
        if (a.kind == ActionKind::guardrail_io_throttle) {
            if (a.throttle_Bps < model::kIoThrottleMinBps || a.throttle_Bps > model::kIoThrottleMaxBps) {
                report.issues.push_back(
                    {"guardrail-bounds", a.target + ": " + fmt("io throttle %.6g B/s outside [%.6g, 5e8]",
                                                               a.throttle_Bps, model::kIoThrottleMinBps)});
            }
        } else if (a.kind == ActionKind::guardrail_mps_quota) {
            if (a.quota_pct < model::kMpsQuotaMinPct || a.quota_pct > model::kMpsQuotaMaxPct) {
                report.issues.push_back(
                    {"guardrail-bounds", a.target + ": " + fmt("mps quota %.1f%% outside [%.0f, 100]",
                                                               a.quota_pct, model::kMpsQuotaMinPct)});
            }
        }
    }

    // Admission invariant: per-root sum of admitted claims below capacity.
    std::map<std::pair<int, int>, double> claims;
    for (const auto& [id, end] : result.end_states) {
        if (end.status != model::TenantStatus::admitted) continue;
        const auto& gpu = spec.topology.gpu(end.placement.host, end.placement.gpu);
        claims[{end.placement.host, gpu.pcie_root_id}] += end.claim_Bps;
    }
    for (const auto& [key, total] : claims) {
        const double cap = spec.topology.pcie_root(key.first, key.second).capacity_Bps;
        if (total >= cap) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "host %d root %d: claims %.6g B/s >= capacity %.6g B/s",
                          key.first, key.second, total, cap);
            report.issues.push_back({"claims", buf});
        }
    }
    return report;
}

PauseStats pause_stats(const std::vector<engine::PauseEvent>& pauses, control::ActionKind kind) {
    PauseStats s;
    double sum = 0.0;
    for (const auto& p : pauses) {
        if (p.kind != kind) continue;
        s.count += 1;
        sum += p.duration_s;
        s.max_s = std::max(s.max_s, p.duration_s);
    }
    if (s.count) s.mean_s = sum / static_cast<double>(s.count);
    return s;
}

PauseStats pause_stats_all(const std::vector<engine::PauseEvent>& pauses) {
    PauseStats s;
    double sum = 0.0;
    for (const auto& p : pauses) {
        s.count += 1;
        sum += p.duration_s;
        s.max_s = std::max(s.max_s, p.duration_s);
    }
    if (s.count) s.mean_s = sum / static_cast<double>(s.count);
    return s;
}

double moves_per_hour(const engine::RunResult& result) {
    if (result.duration_s <= 0.0) return 0.0;
    size_t moves = 0;
    for (const auto& a : result.actions) {
        if (a.kind == ActionKind::move) moves += 1;
    }
    return static_cast<double>(moves) * 3600.0 / result.duration_s;
}

}  // namespace migsim::audit
