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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "migsim/model.hpp"
#include "migsim/telemetry.hpp"

namespace migsim::control {

enum class Diagnosis { none, io_pressure, compute_contention };
const char* to_string(Diagnosis d);

enum class ActionKind {
    none,
    guardrail_io_throttle,
    guardrail_mps_quota,
    guardrail_expire,
    move,
    mig_up,
    mig_down,
    rollback,
};
const char* to_string(ActionKind k);

/// A remediation the engine must apply. Guardrails actuate `target_tenant`
/// without a pause; move/mig_up/mig_down pause `tenant` while applying.
struct Action {
    ActionKind kind = ActionKind::none;
    std::string tenant;         // SLO tenant the action is for
    std::string target_tenant;  // actuated tenant (guardrails), else == tenant
    Diagnosis diagnosis = Diagnosis::none;
    model::Placement new_placement;  // move / mig_up / mig_down / rollback
    std::string new_profile;         // mig_up / mig_down / rollback
    double throttle_Bps = 0.0;       // guardrail_io_throttle
    double quota_pct = 100.0;        // guardrail_mps_quota
    double expires_at_s = 0.0;       // guardrail expiry
    bool pin_cpu = false;            // moves re-pin affinity off hot cores
    bool restore_throttle = false;   // rollback of a guardrail clears it
};

/// Log entry, one per decision or expiry, serialized to actions.jsonl.
struct ActionRecord {
    int seq = 0;
    double t_s = 0.0;
    std::string tenant;
    std::string target;
    ActionKind kind = ActionKind::none;
    Diagnosis diagnosis = Diagnosis::none;
    double p99_pre_ms = 0.0;
    double ema_p99_ms = 0.0;
    int breach_windows = 0;
    size_t obs_since_prev = 0;  // tenant observations since its previous action
    double throttle_Bps = 0.0;  // guardrail_io_throttle only
    double quota_pct = 0.0;     // guardrail_mps_quota only
    std::string detail;
    // Filled by the engine when the action carries a pause.
    double pause_s = 0.0;
    // Validation verdict for the action, written by a later rollback record
    // via `rolled_back_seq` pointing here.
    int rolled_back_seq = -1;
};

/// Instantaneous cluster load, assembled by the engine for each controller
/// evaluation. Rates are current grants/demands, not window averages.
struct ClusterSnapshot {
    double t_s = 0.0;
    std::map<std::pair<int, int>, double> root_offered_Bps;    // (host, root)
    std::map<std::pair<int, int>, double> root_capacity_Bps;   // (host, root)
    std::map<int, double> host_io_Bps;                         // host -> demand
    std::map<int, double> host_io_capacity_Bps;                // host -> capacity
    std::map<std::pair<int, int>, double> gpu_sm_util;         // (host, gpu) -> sum of tenant utils
    std::map<std::string, double> tenant_pcie_Bps;             // current grant per tenant
    std::map<std::string, double> tenant_host_io_Bps;          // current host-I/O per tenant
    std::map<std::string, double> tenant_sm_util;              // current SM occupancy per tenant
    std::map<std::string, size_t> tenant_queue_len;            // in-flight + queued requests
    std::set<std::pair<int, int>> irq_recent;                  // (host, core_group) with a burst in lookback
};

using TenantStates = std::map<std::string, model::TenantState>;

/// Free contiguous slice run of length `count` on `gpu`, given the admitted
/// tenants already there. Prefers a run containing `prefer_first`, else the
/// leftmost fit. `ignore` is excluded from occupancy (the mover itself).
std::optional<model::SliceRange> find_slice_run(const model::GpuSpec& gpu, const TenantStates& states,
                                                int host, int count,
                                                std::optional<int> prefer_first = std::nullopt,
                                                const std::string& ignore = {});

struct SlotScore {
    double pcie = 0.0;
    double numa_io = 0.0;
    double irq = 0.0;
    double total() const { return pcie + numa_io + irq; }
};

/// Interference score of placing `tenant` at (host, gpu): PCIe pressure from
/// bandwidth-heavy neighbors on the slot's root, NUMA-local block-I/O
/// pressure, and recent-IRQ exposure. Lower is better.
SlotScore placement_score(const model::TopologySpec& topo, const TenantStates& states,
                          const ClusterSnapshot& snap, const std::string& tenant, int host, int gpu);

enum class AdmissionOutcome { admitted, queued, rejected };

struct AdmissionDecision {
    AdmissionOutcome outcome = AdmissionOutcome::rejected;
    model::Placement placement;
    std::string profile;
    std::string reason;
};

class Controller {
public:
    Controller(const model::ControllerConfig& cfg, const model::TopologySpec& topo);

    /// One completed request of `tenant`. `arrived_s` is its arrival time
    /// (validation windows only count post-resume arrivals). Returns an
    /// action for the engine to apply, if any.
    std::optional<Action> on_observation(const std::string& tenant, double latency_ms, double t_s,
                                         double arrived_s, const ClusterSnapshot& snap,
                                         const TenantStates& states);

    /// Engine callback once an action has been applied (post-pause). Records
    /// the drawn pause length and opens the validation window.
    void on_action_applied(const Action& action, double t_s, double pause_s);

    /// Engine callback for guardrail expiry bookkeeping.
    void on_guardrail_expired(const std::string& target, ActionKind kind, double t_s);

    /// Admission control for a new tenant: picks the best-scoring feasible
    /// slot whose bandwidth claim keeps the root's aggregate claims under
    /// capacity. Queued tenants time out to rejected after
    /// `admission_queue_timeout_epochs` retries.
    AdmissionDecision admit(const model::TenantSpec& spec, const std::string& profile_name,
                            const ClusterSnapshot& snap, const TenantStates& states);

    /// Bandwidth claim used by admission and the post-admission audit:
    /// the declared cap when present, else the mean offered rate.
    static double bandwidth_claim(const model::TenantSpec& spec);

    const std::vector<ActionRecord>& log() const { return log_; }
    const model::ControllerConfig& config() const { return cfg_; }

    /// Diagnosis for `tenant` under the current snapshot (exposed for tests).
    Diagnosis diagnose(const std::string& tenant, const ClusterSnapshot& snap,
                       const TenantStates& states) const;

private:
    struct TenantCtl {
        telemetry::TailWindow window;
        telemetry::SmoothedSignal ema;
        telemetry::SloAccount slo;
        int breach_windows = 0;
        double window_end_s = 0.0;
        size_t obs_in_window = 0;
        size_t obs_since_action = 0;
        bool acted_ever = false;
        bool last_action_backfired = false;  // rolled back or validated-worse
        int next_rung = 0;                   // 0 guardrail, 1 move, 2 mig step
        size_t relax_run = 0;                // consecutive obs with p99 < psi*tau
        size_t obs_total = 0;
        bool none_logged = false;            // one 'none' record per episode
        double ignore_before_s = 0.0;        // samples that arrived earlier are stale
        std::string relax_blocked_profile;   // shrinking from this profile was rolled back
        // validation
        bool validating = false;
        bool drain_seen = false;
        double validation_start_s = 0.0;
        double pre_p99_ms = 0.0;
        int action_seq = -1;
        Action applied;
        telemetry::TailWindow validation_window;
        // pre-action state for rollbacks
        model::Placement prior_placement;
        std::string prior_profile;
        TenantCtl(const model::ControllerConfig& cfg);
    };

    TenantCtl& ctl_for(const std::string& tenant, const TenantStates& states);
    void reset_signal(TenantCtl& ctl, double t_s);
    std::optional<Action> evaluate_breach(const std::string& tenant, TenantCtl& ctl,
                                          const ClusterSnapshot& snap, const TenantStates& states);
    std::optional<Action> try_guardrail(const std::string& tenant, Diagnosis diag,
                                        const ClusterSnapshot& snap, const TenantStates& states);
    std::optional<Action> try_move(const std::string& tenant, const ClusterSnapshot& snap,
                                   const TenantStates& states);
    std::optional<Action> try_mig_up(const std::string& tenant, const TenantStates& states);
    std::optional<Action> try_relax(const std::string& tenant, TenantCtl& ctl, const ClusterSnapshot& snap,
                                    const TenantStates& states);
    std::optional<Action> finish_validation(const std::string& tenant, TenantCtl& ctl, double t_s);
    int record(const Action& a, double t_s, const TenantCtl& ctl);

    model::ControllerConfig cfg_;
    model::TopologySpec topo_;
    std::map<std::string, TenantCtl> ctl_;
    std::map<std::string, int> queue_epochs_;  // admission retries per queued tenant
    std::vector<ActionRecord> log_;
    int next_seq_ = 0;
};

}  // namespace migsim::control
