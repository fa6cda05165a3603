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
#include "migsim/controller.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace migsim::control {

namespace {

double snap_get(const std::map<std::string, double>& m, const std::string& k) {
    auto it = m.find(k);
    return it == m.end() ? 0.0 : it->second;
}

double snap_get(const std::map<std::pair<int, int>, double>& m, std::pair<int, int> k) {
    auto it = m.find(k);
    return it == m.end() ? 0.0 : it->second;
}

double snap_get(const std::map<int, double>& m, int k) {
    auto it = m.find(k);
    return it == m.end() ? 0.0 : it->second;
}

std::string format_bps(double bps) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.0f MB/s", bps / 1e6);
    return buf;
}

}  // namespace

const char* to_string(Diagnosis d) {
    switch (d) {
        case Diagnosis::none: return "none";
        case Diagnosis::io_pressure: return "io_pressure";
        case Diagnosis::compute_contention: return "compute_contention";
    }
    return "?";
}

const char* to_string(ActionKind k) {
    switch (k) {
        case ActionKind::none: return "none";
        case ActionKind::guardrail_io_throttle: return "guardrail_io_throttle";
        case ActionKind::guardrail_mps_quota: return "guardrail_mps_quota";
        case ActionKind::guardrail_expire: return "guardrail_expire";
        case ActionKind::move: return "move";
        case ActionKind::mig_up: return "mig_up";
        case ActionKind::mig_down: return "mig_down";
        case ActionKind::rollback: return "rollback";
    }
    return "?";
}

std::optional<model::SliceRange> find_slice_run(const model::GpuSpec& gpu, const TenantStates& states,
                                                int host, int count, std::optional<int> prefer_first,
                                                const std::string& ignore) {
    if (count <= 0 || count > gpu.total_slices) return std::nullopt;
    std::vector<bool> used(static_cast<size_t>(gpu.total_slices), false);
    for (const auto& [id, st] : states) {
        if (id == ignore) continue;
        if (st.status != model::TenantStatus::admitted) continue;
        if (st.placement.host != host || st.placement.gpu != gpu.id) continue;
        for (int s = st.placement.slices.first; s < st.placement.slices.end(); ++s) {
            if (s >= 0 && s < gpu.total_slices) used[static_cast<size_t>(s)] = true;
        }
    }
    auto fits = [&](int first) {
        if (first < 0 || first + count > gpu.total_slices) return false;
        for (int s = first; s < first + count; ++s) {
            if (used[static_cast<size_t>(s)]) return false;
        }
        return true;
    };
    if (prefer_first && fits(*prefer_first)) {
        return model::SliceRange{*prefer_first, count};
    }
    for (int first = 0; first + count <= gpu.total_slices; ++first) {
        if (fits(first)) return model::SliceRange{first, count};
    }
    return std::nullopt;
}

SlotScore placement_score(const model::TopologySpec& topo, const TenantStates& states,
                          const ClusterSnapshot& snap, const std::string& tenant, int host, int gpu) {
    SlotScore score;
    const auto& g = topo.gpu(host, gpu);
    const auto& root = topo.pcie_root(host, g.pcie_root_id);
    const auto& h = topo.hosts.at(static_cast<size_t>(host));

    for (const auto& [id, st] : states) {
        if (id == tenant || st.status != model::TenantStatus::admitted || !st.spec) continue;
        if (st.placement.host != host) continue;
        const auto& other_gpu = topo.gpu(host, st.placement.gpu);
        if (st.spec->tclass == model::TenantClass::bandwidth_heavy && other_gpu.pcie_root_id == g.pcie_root_id) {
            score.pcie += snap_get(snap.tenant_pcie_Bps, id) / root.capacity_Bps;
        }
        if (other_gpu.numa_id == g.numa_id) {
            score.numa_io += snap_get(snap.tenant_host_io_Bps, id) / h.io_capacity_Bps;
        }
    }
    if (snap.irq_recent.count({host, g.core_group})) {
        score.irq = 1.0;
    }
    return score;
}

Controller::TenantCtl::TenantCtl(const model::ControllerConfig& cfg)
    : window(static_cast<size_t>(cfg.dwell_obs)),
      ema(cfg.ema_alpha, cfg.tail_threshold_ms, cfg.hysteresis_clear_ratio * cfg.tail_threshold_ms),
      slo(static_cast<size_t>(cfg.dwell_obs), cfg.tail_threshold_ms),
      window_end_s(cfg.sample_interval_s),
      validation_window(static_cast<size_t>(cfg.validation_obs)) {}

Controller::Controller(const model::ControllerConfig& cfg, const model::TopologySpec& topo)
    : cfg_(cfg), topo_(topo) {
    cfg_.validate();
    topo_.validate();
}

Controller::TenantCtl& Controller::ctl_for(const std::string& tenant, const TenantStates& states) {
    auto it = ctl_.find(tenant);
    if (it != ctl_.end()) return it->second;
    TenantCtl ctl(cfg_);
    auto st = states.find(tenant);
    if (st != states.end() && st->second.spec && st->second.spec->slo_tail_ms > 0.0) {
        const double tau = st->second.spec->slo_tail_ms;
        ctl.ema.set_levels(tau, cfg_.hysteresis_clear_ratio * tau);
        ctl.slo = telemetry::SloAccount(static_cast<size_t>(cfg_.dwell_obs), tau);
    }
    return ctl_.emplace(tenant, std::move(ctl)).first->second;
}

// Drop the accumulated tail signal so the next decision judges the current
// configuration alone rather than the transient that preceded it.  Ladder
// position, dwell counters, and the backfire flag survive on purpose.
void Controller::reset_signal(TenantCtl& ctl, double t_s) {
    const double trigger = ctl.ema.trigger_level();
    const double clear = ctl.ema.clear_level();
    ctl.window = telemetry::TailWindow(static_cast<size_t>(cfg_.dwell_obs));
    ctl.ema = telemetry::SmoothedSignal(cfg_.ema_alpha, trigger, clear);
    ctl.slo = telemetry::SloAccount(static_cast<size_t>(cfg_.dwell_obs), trigger);
    ctl.breach_windows = 0;
    ctl.obs_in_window = 0;
    ctl.relax_run = 0;
    ctl.window_end_s = t_s + cfg_.sample_interval_s;
}

double Controller::bandwidth_claim(const model::TenantSpec& spec) {
    if (spec.pcie_cap_Bps > 0.0) return spec.pcie_cap_Bps;
    return spec.arrival_rate_hz * spec.mean_transfer_bytes();
}

Diagnosis Controller::diagnose(const std::string& tenant, const ClusterSnapshot& snap,
                               const TenantStates& states) const {
    const auto& st = states.at(tenant);
    const auto& gpu = topo_.gpu(st.placement.host, st.placement.gpu);
    const auto root_key = std::make_pair(st.placement.host, gpu.pcie_root_id);
    const double root_cap = topo_.pcie_root(st.placement.host, gpu.pcie_root_id).capacity_Bps;
    const double root_util = snap_get(snap.root_offered_Bps, root_key) / root_cap;
    const double io_cap = topo_.hosts.at(static_cast<size_t>(st.placement.host)).io_capacity_Bps;
    const double io_util = snap_get(snap.host_io_Bps, st.placement.host) / io_cap;
    if (root_util > cfg_.diag_pcie_util_threshold || io_util > cfg_.diag_host_io_threshold) {
        return Diagnosis::io_pressure;
    }
    const double gpu_util = snap_get(snap.gpu_sm_util, {st.placement.host, st.placement.gpu});
    const double own = snap_get(snap.tenant_sm_util, tenant);
    if (gpu_util - own > cfg_.diag_sm_util_threshold) {
        return Diagnosis::compute_contention;
    }
    return Diagnosis::none;
}

std::optional<Action> Controller::try_guardrail(const std::string& tenant, Diagnosis diag,
                                                const ClusterSnapshot& snap, const TenantStates& states) {
    const auto& st = states.at(tenant);
    if (diag == Diagnosis::io_pressure) {
        const auto& gpu = topo_.gpu(st.placement.host, st.placement.gpu);
        const double io_cap = topo_.hosts.at(static_cast<size_t>(st.placement.host)).io_capacity_Bps;
        const bool io_disjunct =
            snap_get(snap.host_io_Bps, st.placement.host) / io_cap > cfg_.diag_host_io_threshold;
        // Offender: heaviest other tenant by the pressure metric that fired.
        std::string offender;
        double best = 0.0;
        for (const auto& [id, other] : states) {
            if (id == tenant || other.status != model::TenantStatus::admitted || !other.spec) continue;
            if (other.spec->tclass == model::TenantClass::latency_sensitive) continue;
            if (other.placement.host != st.placement.host) continue;
            double load;
            if (io_disjunct) {
                load = snap_get(snap.tenant_host_io_Bps, id);
            } else {
                const auto& og = topo_.gpu(other.placement.host, other.placement.gpu);
                if (og.pcie_root_id != gpu.pcie_root_id) continue;
                load = snap_get(snap.tenant_pcie_Bps, id);
            }
            if (load > best) {
                best = load;
                offender = id;
            }
        }
        if (offender.empty() || best <= 0.0) return std::nullopt;
        if (states.at(offender).io_throttle_Bps) return std::nullopt;  // already throttled
        Action a;
        a.kind = ActionKind::guardrail_io_throttle;
        a.tenant = tenant;
        a.target_tenant = offender;
        a.diagnosis = diag;
        a.throttle_Bps = cfg_.guardrail_io_throttle_Bps;
        a.expires_at_s = snap.t_s + cfg_.throttle_duration_s;
        return a;
    }
    if (diag == Diagnosis::compute_contention) {
        const auto& gpu = topo_.gpu(st.placement.host, st.placement.gpu);
        if (gpu.mig_enabled) return std::nullopt;  // slices already isolate SM
        std::string offender;
        double best = 0.0;
        for (const auto& [id, other] : states) {
            if (id == tenant || other.status != model::TenantStatus::admitted || !other.spec) continue;
            if (other.spec->tclass == model::TenantClass::latency_sensitive) continue;
            if (other.placement.host != st.placement.host || other.placement.gpu != st.placement.gpu) continue;
            const double util = snap_get(snap.tenant_sm_util, id);
            if (util > best) {
                best = util;
                offender = id;
            }
        }
        if (offender.empty()) return std::nullopt;
        if (states.at(offender).mps_quota_pct < model::kMpsQuotaMaxPct) return std::nullopt;
        Action a;
        a.kind = ActionKind::guardrail_mps_quota;
        a.tenant = tenant;
        a.target_tenant = offender;
        a.diagnosis = diag;
        a.quota_pct = cfg_.guardrail_mps_quota_pct;
        a.expires_at_s = snap.t_s + cfg_.quota_duration_s;
        return a;
    }
    return std::nullopt;
}

std::optional<Action> Controller::try_move(const std::string& tenant, const ClusterSnapshot& snap,
                                           const TenantStates& states) {
    const auto& st = states.at(tenant);
    const double current =
        placement_score(topo_, states, snap, tenant, st.placement.host, st.placement.gpu).total();
    const double claim = bandwidth_claim(*st.spec);

    std::optional<model::Placement> best_slot;
    double best_score = 0.0;
    for (size_t h = 0; h < topo_.hosts.size(); ++h) {
        for (const auto& gpu : topo_.hosts[h].gpus) {
            const int host = static_cast<int>(h);
            if (host == st.placement.host && gpu.id == st.placement.gpu) continue;
            auto run = find_slice_run(gpu, states, host, st.placement.slices.count, std::nullopt, tenant);
            if (!run) continue;
            // The move must keep the target root's aggregate claims feasible.
            double claims = claim;
            for (const auto& [id, other] : states) {
                if (id == tenant || other.status != model::TenantStatus::admitted || !other.spec) continue;
                if (other.placement.host != host) continue;
                if (topo_.gpu(host, other.placement.gpu).pcie_root_id != gpu.pcie_root_id) continue;
                claims += bandwidth_claim(*other.spec);
            }
            if (claims >= topo_.pcie_root(host, gpu.pcie_root_id).capacity_Bps) continue;
            const double score = placement_score(topo_, states, snap, tenant, host, gpu.id).total();
            model::Placement cand{host, gpu.id, *run};
            if (!best_slot || score < best_score ||
                (score == best_score &&
                 std::tie(cand.host, cand.gpu, cand.slices.first) <
                     std::tie(best_slot->host, best_slot->gpu, best_slot->slices.first))) {
                best_slot = cand;
                best_score = score;
            }
        }
    }
    if (!best_slot) return std::nullopt;
    if (current - best_score < cfg_.move_margin) return std::nullopt;
    Action a;
    a.kind = ActionKind::move;
    a.tenant = tenant;
    a.target_tenant = tenant;
    a.new_placement = *best_slot;
    a.pin_cpu = true;
    return a;
}

std::optional<Action> Controller::try_mig_up(const std::string& tenant, const TenantStates& states) {
    const auto& st = states.at(tenant);
    auto next = model::mig_lattice_step(st.profile, model::LatticeDirection::up);
    if (!next) return std::nullopt;
    const auto& gpu = topo_.gpu(st.placement.host, st.placement.gpu);
    auto run = find_slice_run(gpu, states, st.placement.host, next->slices, st.placement.slices.first, tenant);
    if (!run) return std::nullopt;
    Action a;
    a.kind = ActionKind::mig_up;
    a.tenant = tenant;
    a.target_tenant = tenant;
    a.new_placement = {st.placement.host, st.placement.gpu, *run};
    a.new_profile = next->name;
    return a;
}

std::optional<Action> Controller::try_relax(const std::string& tenant, TenantCtl& ctl,
                                            const ClusterSnapshot& snap, const TenantStates& states) {
    const auto& st = states.at(tenant);
    auto down = model::mig_lattice_step(st.profile, model::LatticeDirection::down);
    if (!down) return std::nullopt;
    // A shrink from this exact profile was already tried and rolled back;
    // the safe oversized state is the equilibrium, not a retry loop.
    if (!ctl.relax_blocked_profile.empty() && st.profile.name == ctl.relax_blocked_profile)
        return std::nullopt;
    if (ctl.window.size() < static_cast<size_t>(cfg_.dwell_obs)) return std::nullopt;
    // Miss-rate gate: sustained headroom must not hide SLO misses.
    auto m = ctl.slo.miss_rate();
    if (!m || *m > 1.0 - cfg_.throughput_floor) return std::nullopt;
    const double score =
        placement_score(topo_, states, snap, tenant, st.placement.host, st.placement.gpu).total();
    if (score >= cfg_.relax_score_threshold) return std::nullopt;
    Action a;
    a.kind = ActionKind::mig_down;
    a.tenant = tenant;
    a.target_tenant = tenant;
    a.new_placement = {st.placement.host, st.placement.gpu,
                       model::SliceRange{st.placement.slices.first, down->slices}};
    a.new_profile = down->name;
    return a;
}

int Controller::record(const Action& a, double t_s, const TenantCtl& ctl) {
    ActionRecord r;
    r.seq = next_seq_++;
    r.t_s = t_s;
    r.tenant = a.tenant;
    r.target = a.target_tenant;
    r.kind = a.kind;
    r.diagnosis = a.diagnosis;
    r.p99_pre_ms = ctl.window.quantile(0.99).value_or(0.0);
    r.ema_p99_ms = ctl.ema.value().value_or(0.0);
    r.breach_windows = ctl.breach_windows;
    r.obs_since_prev = ctl.acted_ever ? ctl.obs_since_action : ctl.obs_total;
    if (a.kind == ActionKind::guardrail_io_throttle) r.throttle_Bps = a.throttle_Bps;
    if (a.kind == ActionKind::guardrail_mps_quota) r.quota_pct = a.quota_pct;
    switch (a.kind) {
        case ActionKind::guardrail_io_throttle:
            r.detail = "throttle " + a.target_tenant + " to " + format_bps(a.throttle_Bps);
            break;
        case ActionKind::guardrail_mps_quota: {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "quota %s to %.0f%%", a.target_tenant.c_str(), a.quota_pct);
            r.detail = buf;
            break;
        }
        case ActionKind::move: {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "move to host%d gpu%d slices [%d,%d)", a.new_placement.host,
                          a.new_placement.gpu, a.new_placement.slices.first, a.new_placement.slices.end());
            r.detail = buf;
            break;
        }
        case ActionKind::mig_up:
        case ActionKind::mig_down: {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%s -> %s slices [%d,%d)",
                          a.kind == ActionKind::mig_up ? "grow" : "shrink", a.new_profile.c_str(),
                          a.new_placement.slices.first, a.new_placement.slices.end());
            r.detail = buf;
            break;
        }
        case ActionKind::rollback:
            r.detail = "restore previous configuration";
            break;
        case ActionKind::none:
            r.detail = "no feasible action";
            break;
        case ActionKind::guardrail_expire:
            r.detail = "guardrail expired";
            break;
    }
    log_.push_back(r);
    return r.seq;
}

std::optional<Action> Controller::evaluate_breach(const std::string& tenant, TenantCtl& ctl,
                                                  const ClusterSnapshot& snap, const TenantStates& states) {
    const Diagnosis diag = diagnose(tenant, snap, states);
    for (int rung = ctl.next_rung; rung <= 2; ++rung) {
        std::optional<Action> act;
        if (rung == 0 && cfg_.enable_guardrails) {
            act = try_guardrail(tenant, diag, snap, states);
        } else if (rung == 1 && cfg_.enable_placement) {
            // Relocation removes interference, worth a few milliseconds at
            // the tail. A tail several times over the trigger is a capacity
            // problem; when growth is available, skip straight to it rather
            // than pay a pause for a move that cannot close the gap.
            if (cfg_.enable_mig &&
                ctl.ema.value() > cfg_.move_futility_ratio * ctl.ema.trigger_level())
                continue;
            act = try_move(tenant, snap, states);
            if (act) act->diagnosis = diag;
        } else if (rung == 2 && cfg_.enable_mig) {
            act = try_mig_up(tenant, states);
            if (act) act->diagnosis = diag;
        }
        if (act) {
            // The next escalation (if the breach survives) starts one rung up.
            ctl.next_rung = std::min(rung + 1, 2);
            return act;
        }
    }
    if (!ctl.none_logged) {
        Action a;
        a.kind = ActionKind::none;
        a.tenant = tenant;
        a.target_tenant = tenant;
        a.diagnosis = diag;
        record(a, snap.t_s, ctl);
        ctl.none_logged = true;
    }
    // Re-arm from the bottom rung: a later episode may find the lower rungs
    // feasible again (an expired guardrail, a freed slot).
    ctl.next_rung = 0;
    ctl.breach_windows = 0;
    return std::nullopt;
}

std::optional<Action> Controller::finish_validation(const std::string& tenant, TenantCtl& ctl, double t_s) {
    ctl.validating = false;
    const double post = ctl.validation_window.quantile(0.99).value_or(0.0);
    bool ok;
    if (ctl.applied.kind == ActionKind::mig_down) {
        // Downsizing always costs something; accept while the tail stays
        // clear of the hysteresis band.
        ok = post < ctl.ema.clear_level();
    } else {
        // A tail that lands under the trigger is the objective itself; keep
        // the action even when a relieved pre-measurement makes the relative
        // band a coin flip.
        ok = post <= (1.0 + cfg_.rollback_regress_ratio) * ctl.pre_p99_ms ||
             post < ctl.ema.trigger_level();
    }
    if (ok) {
        ctl.last_action_backfired = false;
        reset_signal(ctl, t_s);
        return std::nullopt;
    }
    ctl.last_action_backfired = true;
    if (ctl.applied.kind == ActionKind::mig_down) ctl.relax_blocked_profile = ctl.prior_profile;
    Action rb;
    rb.kind = ActionKind::rollback;
    rb.tenant = tenant;
    rb.diagnosis = ctl.applied.diagnosis;
    switch (ctl.applied.kind) {
        case ActionKind::guardrail_io_throttle:
        case ActionKind::guardrail_mps_quota:
            rb.target_tenant = ctl.applied.target_tenant;
            rb.restore_throttle = true;
            break;
        default:
            rb.target_tenant = tenant;
            rb.new_placement = ctl.prior_placement;
            rb.new_profile = ctl.prior_profile;
            break;
    }
    const int seq = record(rb, t_s, ctl);
    log_[static_cast<size_t>(seq)].rolled_back_seq = ctl.action_seq;
    ctl.obs_since_action = 0;
    reset_signal(ctl, t_s);
    return rb;
}

std::optional<Action> Controller::on_observation(const std::string& tenant, double latency_ms, double t_s,
                                                 double arrived_s, const ClusterSnapshot& snap,
                                                 const TenantStates& states) {
    if (!cfg_.enabled) return std::nullopt;
    auto st_it = states.find(tenant);
    if (st_it == states.end() || st_it->second.status != model::TenantStatus::admitted) return std::nullopt;

    TenantCtl& ctl = ctl_for(tenant, states);
    ctl.obs_total += 1;
    if (ctl.acted_ever) ctl.obs_since_action += 1;

    if (ctl.validating) {
        if (!ctl.drain_seen) {
            auto q = snap.tenant_queue_len.find(tenant);
            if (q == snap.tenant_queue_len.end() || q->second <= 1) {
                ctl.drain_seen = true;
                ctl.validation_start_s = t_s;
            } else if (t_s - ctl.validation_start_s > 180.0) {
                // Backlog refuses to drain under the new configuration.
                ctl.validation_window.push(latency_ms);
                return finish_validation(tenant, ctl, t_s);
            }
        } else if (arrived_s >= ctl.validation_start_s) {
            ctl.validation_window.push(latency_ms);
            if (ctl.validation_window.size() >= static_cast<size_t>(cfg_.validation_obs)) {
                return finish_validation(tenant, ctl, t_s);
            }
        }
        return std::nullopt;
    }

    // Requests that arrived before the last reconfiguration finished describe
    // the configuration the controller already replaced; reacting to them
    // turns every pause into the trigger for the next action.
    if (arrived_s < ctl.ignore_before_s) return std::nullopt;

    // Close every elapsed decision window; empty windows neither count nor
    // reset the breach streak.
    while (t_s >= ctl.window_end_s) {
        if (ctl.obs_in_window > 0) {
            const auto ema = ctl.ema.value();
            if (ema) {
                if (*ema > ctl.ema.trigger_level()) {
                    ctl.breach_windows += 1;
                } else if (*ema < ctl.ema.clear_level()) {
                    ctl.breach_windows = 0;
                    ctl.next_rung = 0;
                    ctl.none_logged = false;
                }
            }
            ctl.obs_in_window = 0;
        }
        ctl.window_end_s += cfg_.sample_interval_s;
    }

    ctl.window.push(latency_ms);
    ctl.slo.record(latency_ms);
    const double p99 = *ctl.window.quantile(0.99);
    ctl.ema.update(p99);
    ctl.obs_in_window += 1;

    const double tau = ctl.ema.trigger_level();
    if (p99 < cfg_.relax_stability_ratio * tau) {
        ctl.relax_run += 1;
    } else {
        ctl.relax_run = 0;
    }

    // Warm-up: the first windows describe the cold-start ramp, not steady
    // state; acting on them buys rollbacks.
    if (t_s < cfg_.warmup_s) return std::nullopt;

    // Dwell/cooldown gate: a fresh configuration must accumulate enough
    // observations before the controller may touch this tenant again.
    size_t required = static_cast<size_t>(cfg_.dwell_obs);
    if (ctl.last_action_backfired) required += static_cast<size_t>(cfg_.cooldown_obs);
    const bool gates_open = !ctl.acted_ever || ctl.obs_since_action >= required;

    const bool breach_eligible =
        st_it->second.spec && st_it->second.spec->tclass == model::TenantClass::latency_sensitive;
    if (breach_eligible && ctl.breach_windows >= cfg_.persistence_windows && gates_open) {
        auto act = evaluate_breach(tenant, ctl, snap, states);
        if (act) {
            if (act->kind == ActionKind::mig_up) ctl.relax_blocked_profile = act->new_profile;
            ctl.pre_p99_ms = p99;
            ctl.prior_placement = st_it->second.placement;
            ctl.prior_profile = st_it->second.profile.name;
            ctl.applied = *act;
            ctl.action_seq = record(*act, t_s, ctl);
            ctl.breach_windows = 0;
            ctl.obs_since_action = 0;
            ctl.acted_ever = true;
            ctl.none_logged = false;
            return act;
        }
        return std::nullopt;
    }

    if (cfg_.enable_mig && gates_open && ctl.relax_run >= static_cast<size_t>(cfg_.dwell_obs) &&
        ctl.ema.state() == telemetry::SmoothedSignal::State::clear) {
        auto act = try_relax(tenant, ctl, snap, states);
        if (act) {
            ctl.pre_p99_ms = p99;
            ctl.prior_placement = st_it->second.placement;
            ctl.prior_profile = st_it->second.profile.name;
            ctl.applied = *act;
            ctl.action_seq = record(*act, t_s, ctl);
            ctl.relax_run = 0;
            ctl.obs_since_action = 0;
            ctl.acted_ever = true;
            return act;
        }
    }
    return std::nullopt;
}

void Controller::on_action_applied(const Action& action, double t_s, double pause_s) {
    auto it = ctl_.find(action.tenant);
    if (it == ctl_.end()) return;
    TenantCtl& ctl = it->second;
    if (ctl.action_seq >= 0 && ctl.action_seq < static_cast<int>(log_.size())) {
        log_[static_cast<size_t>(ctl.action_seq)].pause_s = pause_s;
    }
    if (action.kind == ActionKind::rollback) {
        ctl.validating = false;
        ctl.ignore_before_s = t_s;
        reset_signal(ctl, t_s);
        return;
    }
    ctl.validating = true;
    ctl.drain_seen = false;
    ctl.validation_start_s = t_s;
    ctl.ignore_before_s = t_s;
    ctl.validation_window = telemetry::TailWindow(static_cast<size_t>(cfg_.validation_obs));
}

void Controller::on_guardrail_expired(const std::string& target, ActionKind kind, double t_s) {
    ActionRecord r;
    r.seq = next_seq_++;
    r.t_s = t_s;
    r.tenant = target;
    r.target = target;
    r.kind = ActionKind::guardrail_expire;
    r.diagnosis = Diagnosis::none;
    r.detail = std::string("guardrail expired (") + to_string(kind) + ")";
    log_.push_back(r);
}

AdmissionDecision Controller::admit(const model::TenantSpec& spec, const std::string& profile_name,
                                    const ClusterSnapshot& snap, const TenantStates& states) {
    AdmissionDecision d;
    const auto& prof = model::mig_profile(profile_name);
    const double mu = model::effective_service_rate(prof, spec);
    if (spec.arrival_rate_hz >= mu) {
        d.outcome = AdmissionOutcome::rejected;
        d.reason = "offered rate exceeds service rate at profile " + profile_name;
        return d;
    }
    const double claim = bandwidth_claim(spec);
    std::optional<model::Placement> best_slot;
    double best_score = 0.0;
    for (size_t h = 0; h < topo_.hosts.size(); ++h) {
        const int host = static_cast<int>(h);
        for (const auto& gpu : topo_.hosts[h].gpus) {
            auto run = find_slice_run(gpu, states, host, prof.slices);
            if (!run) continue;
            double claims = claim;
            for (const auto& [id, other] : states) {
                if (other.status != model::TenantStatus::admitted || !other.spec) continue;
                if (other.placement.host != host) continue;
                if (topo_.gpu(host, other.placement.gpu).pcie_root_id != gpu.pcie_root_id) continue;
                claims += bandwidth_claim(*other.spec);
            }
            if (claims >= topo_.pcie_root(host, gpu.pcie_root_id).capacity_Bps) continue;
            const double score = placement_score(topo_, states, snap, spec.id, host, gpu.id).total();
            model::Placement cand{host, gpu.id, *run};
            if (!best_slot || score < best_score ||
                (score == best_score &&
                 std::tie(cand.host, cand.gpu, cand.slices.first) <
                     std::tie(best_slot->host, best_slot->gpu, best_slot->slices.first))) {
                best_slot = cand;
                best_score = score;
            }
        }
    }
    if (best_slot) {
        queue_epochs_.erase(spec.id);
        d.outcome = AdmissionOutcome::admitted;
        d.placement = *best_slot;
        d.profile = profile_name;
        return d;
    }
    int& epochs = queue_epochs_[spec.id];
    epochs += 1;
    if (epochs > cfg_.admission_queue_timeout_epochs) {
        queue_epochs_.erase(spec.id);
        d.outcome = AdmissionOutcome::rejected;
        d.reason = "queued past timeout without a feasible slot";
    } else {
        d.outcome = AdmissionOutcome::queued;
        d.reason = "no feasible slot; retry " + std::to_string(epochs);
    }
    return d;
}

}  // namespace migsim::control
