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
#include <doctest.h>

#include <functional>
#include <optional>
#include <string>

#include "migsim/controller.hpp"

using namespace migsim;
using control::Action;
using control::ActionKind;
using control::Diagnosis;

namespace {

// Two-GPU host: gpu0 on root0/numa0/cores0 (IRQ-hot), gpu1 on root1/numa1/cores1.
// "vic" is a latency-sensitive tenant at 2g on gpu0; "agg" a bandwidth-heavy
// bulk mover at 1g on the same GPU.
struct Rig {
    model::TopologySpec topo;
    model::TenantSpec vic_spec;
    model::TenantSpec agg_spec;
    control::TenantStates states;
    model::ControllerConfig cfg;

    Rig() {
        model::HostSpec host;
        host.numa_domains = 2;
        host.io_capacity_Bps = 500e6;
        host.irq_hot_core_groups = {0};
        host.pcie_roots = {{0, 16e9}, {1, 16e9}};
        model::GpuSpec g0;
        g0.id = 0;
        model::GpuSpec g1;
        g1.id = 1;
        g1.pcie_root_id = 1;
        g1.numa_id = 1;
        g1.core_group = 1;
        host.gpus = {g0, g1};
        topo.hosts = {host};

        vic_spec.id = "vic";
        vic_spec.tclass = model::TenantClass::latency_sensitive;
        vic_spec.arrival_rate_hz = 50.0;
        vic_spec.transfer_mix = {{2e6, 1.0}};
        vic_spec.base_compute_ms = 2.2;
        vic_spec.slo_tail_ms = 15.0;
        vic_spec.host_io_Bps = 20e6;
        vic_spec.sm_demand = 0.9;

        agg_spec.id = "agg";
        agg_spec.tclass = model::TenantClass::bandwidth_heavy;
        agg_spec.arrival_rate_hz = 6.0;
        agg_spec.transfer_mix = {{1.2e9, 1.0}};
        agg_spec.base_compute_ms = 8.0;
        agg_spec.slo_tail_ms = 300000.0;
        agg_spec.weight = 4.0;
        agg_spec.pcie_cap_Bps = 9.5e9;
        agg_spec.host_io_Bps = 450e6;
        agg_spec.sm_demand = 0.15;

        model::TenantState vic;
        vic.spec = &vic_spec;
        vic.placement = {0, 0, {0, 2}};
        vic.profile = model::mig_profile("2g.20gb");
        vic.status = model::TenantStatus::admitted;
        states["vic"] = vic;

        model::TenantState agg;
        agg.spec = &agg_spec;
        agg.placement = {0, 0, {6, 1}};
        agg.profile = model::mig_profile("1g.10gb");
        agg.status = model::TenantStatus::admitted;
        states["agg"] = agg;

        // Short horizons keep the tests fast; semantics are unchanged.
        cfg.warmup_s = 0.0;
        cfg.dwell_obs = 8;
        cfg.cooldown_obs = 4;
        cfg.persistence_windows = 3;
        cfg.sample_interval_s = 1.0;
        cfg.validation_obs = 4;
    }

    // Fabric and host I/O both saturated by "agg", IRQ storm on core group 0.
    control::ClusterSnapshot io_heavy(double t) const {
        control::ClusterSnapshot s;
        s.t_s = t;
        s.root_offered_Bps[{0, 0}] = 14e9;
        s.root_offered_Bps[{0, 1}] = 0.0;
        s.root_capacity_Bps[{0, 0}] = 16e9;
        s.root_capacity_Bps[{0, 1}] = 16e9;
        s.host_io_Bps[0] = 470e6;
        s.host_io_capacity_Bps[0] = 500e6;
        s.tenant_pcie_Bps = {{"vic", 1e8}, {"agg", 9.5e9}};
        s.tenant_host_io_Bps = {{"vic", 20e6}, {"agg", 450e6}};
        s.tenant_sm_util = {{"vic", 0.25}, {"agg", 0.02}};
        s.gpu_sm_util[{0, 0}] = 0.27;
        s.tenant_queue_len = {{"vic", 0}, {"agg", 3}};
        s.irq_recent = {{0, 0}};
        return s;
    }

    // No pressure anywhere.
    control::ClusterSnapshot quiet(double t) const {
        control::ClusterSnapshot s;
        s.t_s = t;
        s.root_offered_Bps[{0, 0}] = 1e8;
        s.root_offered_Bps[{0, 1}] = 0.0;
        s.root_capacity_Bps[{0, 0}] = 16e9;
        s.root_capacity_Bps[{0, 1}] = 16e9;
        s.host_io_Bps[0] = 40e6;
        s.host_io_capacity_Bps[0] = 500e6;
        s.tenant_pcie_Bps = {{"vic", 1e8}};
        s.tenant_host_io_Bps = {{"vic", 20e6}};
        s.tenant_sm_util = {{"vic", 0.25}};
        s.gpu_sm_util[{0, 0}] = 0.25;
        s.tenant_queue_len = {{"vic", 0}};
        return s;
    }
};

using SnapFn = std::function<control::ClusterSnapshot(double)>;

// Feeds fixed-latency completions every 0.25 s until the controller returns
// an action or the budget runs out.
std::optional<Action> drive(control::Controller& c, Rig& rig, const std::string& tenant, double latency_ms,
                            double& t, int max_obs, const SnapFn& snap) {
    for (int i = 0; i < max_obs; ++i) {
        t += 0.25;
        auto a = c.on_observation(tenant, latency_ms, t, t - 0.01, snap(t), rig.states);
        if (a) return a;
    }
    return std::nullopt;
}

// Engine stand-in: mutate states the way the simulator would, then ack.
void apply(Rig& rig, control::Controller& c, const Action& a, double t, double pause_s = 0.0) {
    switch (a.kind) {
        case ActionKind::guardrail_io_throttle:
            rig.states.at(a.target_tenant).io_throttle_Bps = a.throttle_Bps;
            break;
        case ActionKind::guardrail_mps_quota:
            rig.states.at(a.target_tenant).mps_quota_pct = a.quota_pct;
            break;
        case ActionKind::move: {
            auto& st = rig.states.at(a.tenant);
            st.placement = a.new_placement;
            if (a.pin_cpu) st.cpu_pinned = true;
            break;
        }
        case ActionKind::mig_up:
        case ActionKind::mig_down: {
            auto& st = rig.states.at(a.tenant);
            st.placement = a.new_placement;
            st.profile = model::mig_profile(a.new_profile);
            break;
        }
        case ActionKind::rollback: {
            if (a.restore_throttle) {
                auto& st = rig.states.at(a.target_tenant);
                st.io_throttle_Bps.reset();
                st.mps_quota_pct = 100.0;
            } else {
                auto& st = rig.states.at(a.tenant);
                st.placement = a.new_placement;
                st.profile = model::mig_profile(a.new_profile);
            }
            break;
        }
        default:
            break;
    }
    c.on_action_applied(a, t, pause_s);
}

}  // namespace

TEST_CASE("diagnosis separates fabric pressure from compute contention") {
    Rig rig;
    control::Controller c(rig.cfg, rig.topo);

    CHECK(c.diagnose("vic", rig.io_heavy(10.0), rig.states) == Diagnosis::io_pressure);
    CHECK(c.diagnose("vic", rig.quiet(10.0), rig.states) == Diagnosis::none);

    SUBCASE("host block-I/O alone can trip io_pressure") {
        auto s = rig.quiet(10.0);
        s.host_io_Bps[0] = 470e6;  // 0.94 of capacity, fabric idle
        CHECK(c.diagnose("vic", s, rig.states) == Diagnosis::io_pressure);
    }
    SUBCASE("foreign SM load on the same GPU is compute contention") {
        auto s = rig.quiet(10.0);
        s.gpu_sm_util[{0, 0}] = 1.1;
        s.tenant_sm_util["vic"] = 0.25;  // gap 0.85 > 0.7
        CHECK(c.diagnose("vic", s, rig.states) == Diagnosis::compute_contention);
    }
}

TEST_CASE("persistent breaches walk the escalation ladder") {
    Rig rig;
    control::Controller c(rig.cfg, rig.topo);
    double t = 0.0;
    SnapFn snap = [&](double ts) { return rig.io_heavy(ts); };

    // Rung 0: throttle the I/O offender.
    auto a1 = drive(c, rig, "vic", 30.0, t, 40, snap);
    REQUIRE(a1);
    CHECK(a1->kind == ActionKind::guardrail_io_throttle);
    CHECK(a1->target_tenant == "agg");
    CHECK(a1->diagnosis == Diagnosis::io_pressure);
    CHECK(a1->throttle_Bps == 250e6);
    CHECK(a1->expires_at_s == doctest::Approx(t + 30.0));
    apply(rig, c, *a1, t);

    // Rung 1: still breaching after dwell, move the victim to the clean GPU.
    auto a2 = drive(c, rig, "vic", 30.0, t, 60, snap);
    REQUIRE(a2);
    CHECK(a2->kind == ActionKind::move);
    CHECK(a2->tenant == "vic");
    CHECK(a2->new_placement.host == 0);
    CHECK(a2->new_placement.gpu == 1);
    CHECK(a2->new_placement.slices.first == 0);
    CHECK(a2->new_placement.slices.count == 2);
    CHECK(a2->pin_cpu);
    apply(rig, c, *a2, t, 9.0);

    // Rung 2: grow the slice in place.
    auto a3 = drive(c, rig, "vic", 30.0, t, 60, snap);
    REQUIRE(a3);
    CHECK(a3->kind == ActionKind::mig_up);
    CHECK(a3->new_profile == "3g.40gb");
    CHECK(a3->new_placement.gpu == 1);
    CHECK(a3->new_placement.slices.first == 0);
    CHECK(a3->new_placement.slices.count == 3);
    apply(rig, c, *a3, t, 18.0);

    // Decision spacing: every non-first decision waited out the dwell.
    int decisions = 0;
    for (const auto& r : c.log()) {
        if (r.kind == ActionKind::guardrail_expire || r.kind == ActionKind::rollback ||
            r.kind == ActionKind::none) {
            continue;
        }
        ++decisions;
        if (decisions > 1) CHECK(r.obs_since_prev >= 8);
    }
    CHECK(decisions == 3);

    // The recorded pause lengths came from the engine ack.
    CHECK(c.log()[1].pause_s == doctest::Approx(9.0));
    CHECK(c.log()[2].pause_s == doctest::Approx(18.0));
}

TEST_CASE("guardrails re-arm after expiry") {
    Rig rig;
    rig.cfg.enable_placement = false;
    rig.cfg.enable_mig = false;
    control::Controller c(rig.cfg, rig.topo);
    double t = 0.0;
    SnapFn snap = [&](double ts) { return rig.io_heavy(ts); };

    auto a1 = drive(c, rig, "vic", 30.0, t, 40, snap);
    REQUIRE(a1);
    REQUIRE(a1->kind == ActionKind::guardrail_io_throttle);
    apply(rig, c, *a1, t);

    // Guardrail expires; the engine clears the throttle and reports it.
    rig.states.at("agg").io_throttle_Bps.reset();
    c.on_guardrail_expired("agg", ActionKind::guardrail_io_throttle, t + 30.0);
    t += 30.0;

    // The ladder exhausted (move and resize disabled), so the controller
    // re-armed from the bottom rung and throttles again.
    auto a2 = drive(c, rig, "vic", 30.0, t, 120, snap);
    REQUIRE(a2);
    CHECK(a2->kind == ActionKind::guardrail_io_throttle);
    CHECK(a2->target_tenant == "agg");

    int throttles = 0, expiries = 0;
    for (const auto& r : c.log()) {
        if (r.kind == ActionKind::guardrail_io_throttle) ++throttles;
        if (r.kind == ActionKind::guardrail_expire) ++expiries;
    }
    CHECK(throttles == 2);
    CHECK(expiries == 1);
}

TEST_CASE("ladder exhaustion logs one 'none' per episode") {
    Rig rig;
    rig.cfg.enable_guardrails = false;
    rig.cfg.enable_placement = false;
    rig.states.at("vic").profile = model::mig_profile("7g.80gb");
    rig.states.at("vic").placement = {0, 1, {0, 7}};
    control::Controller c(rig.cfg, rig.topo);
    double t = 0.0;
    SnapFn snap = [&](double ts) { return rig.io_heavy(ts); };

    // Nothing is feasible: no action, a single 'none' record.
    CHECK_FALSE(drive(c, rig, "vic", 30.0, t, 80, snap));
    int nones = 0;
    for (const auto& r : c.log()) {
        if (r.kind == ActionKind::none) ++nones;
    }
    CHECK(nones == 1);

    // Clearing the breach ends the episode; the next breach logs one more.
    // 13 ms sits below the clear level (13.5) but above the relax zone (12),
    // so the episode resets without triggering a slice shrink.
    CHECK_FALSE(drive(c, rig, "vic", 13.0, t, 80, snap));
    CHECK_FALSE(drive(c, rig, "vic", 30.0, t, 80, snap));
    nones = 0;
    for (const auto& r : c.log()) {
        if (r.kind == ActionKind::none) ++nones;
    }
    CHECK(nones == 2);
}

TEST_CASE("validation rolls back regressions and respects the cooldown") {
    Rig rig;
    control::Controller c(rig.cfg, rig.topo);
    double t = 0.0;
    SnapFn snap = [&](double ts) { return rig.io_heavy(ts); };

    auto a1 = drive(c, rig, "vic", 30.0, t, 40, snap);
    REQUIRE(a1);
    REQUIRE(a1->kind == ActionKind::guardrail_io_throttle);
    const int first_seq = c.log().back().seq;
    apply(rig, c, *a1, t);

    // The tail collapses under the new configuration: rollback.
    auto rb = drive(c, rig, "vic", 200.0, t, 10, snap);
    REQUIRE(rb);
    CHECK(rb->kind == ActionKind::rollback);
    CHECK(rb->restore_throttle);
    CHECK(rb->target_tenant == "agg");
    apply(rig, c, *rb, t);
    CHECK_FALSE(rig.states.at("agg").io_throttle_Bps);

    const auto& rec = c.log().back();
    CHECK(rec.kind == ActionKind::rollback);
    CHECK(rec.rolled_back_seq == first_seq);

    // Backfired: the next decision must wait dwell + cooldown observations.
    auto a2 = drive(c, rig, "vic", 30.0, t, 120, snap);
    REQUIRE(a2);
    CHECK(c.log().back().obs_since_prev >= 12);
}

TEST_CASE("validation waits for the queue to drain") {
    Rig rig;
    control::Controller c(rig.cfg, rig.topo);
    double t = 0.0;
    int vic_queue = 5;
    SnapFn snap = [&](double ts) {
        auto s = rig.io_heavy(ts);
        s.tenant_queue_len["vic"] = static_cast<size_t>(vic_queue);
        return s;
    };

    auto a1 = drive(c, rig, "vic", 30.0, t, 40, snap);
    REQUIRE(a1);
    apply(rig, c, *a1, t);

    // Backlogged: many observations pass without a verdict.
    CHECK_FALSE(drive(c, rig, "vic", 30.0, t, 30, snap));

    // Drained: pre-drain arrivals are excluded, then the window fills and
    // the verdict lands (30 ms against a 30 ms baseline: accepted).
    vic_queue = 0;
    CHECK_FALSE(drive(c, rig, "vic", 30.0, t, 5, snap));
    const auto& log = c.log();
    bool rolled = false;
    for (const auto& r : log) rolled = rolled || r.kind == ActionKind::rollback;
    CHECK_FALSE(rolled);

    SUBCASE("a queue that never drains forces the verdict at the timeout") {
        Rig rig2;
        control::Controller c2(rig2.cfg, rig2.topo);
        double t2 = 0.0;
        SnapFn stuck = [&](double ts) {
            auto s = rig2.io_heavy(ts);
            s.tenant_queue_len["vic"] = 9;
            return s;
        };
        auto b1 = drive(c2, rig2, "vic", 30.0, t2, 40, stuck);
        REQUIRE(b1);
        apply(rig2, c2, *b1, t2);
        // 181 s of backlog at 0.25 s per observation, latencies regressed.
        auto rb = drive(c2, rig2, "vic", 200.0, t2, 730, stuck);
        REQUIRE(rb);
        CHECK(rb->kind == ActionKind::rollback);
    }
}

TEST_CASE("sustained headroom relaxes the slice, validated against the clear band") {
    Rig rig;
    rig.states.at("vic").placement = {0, 1, {0, 3}};
    rig.states.at("vic").profile = model::mig_profile("3g.40gb");
    control::Controller c(rig.cfg, rig.topo);
    double t = 0.0;
    SnapFn snap = [&](double ts) { return rig.quiet(ts); };

    // p99 well under psi*tau = 12 for a full dwell window: shrink in place.
    auto a1 = drive(c, rig, "vic", 5.0, t, 40, snap);
    REQUIRE(a1);
    CHECK(a1->kind == ActionKind::mig_down);
    CHECK(a1->new_profile == "2g.20gb");
    CHECK(a1->new_placement.slices.first == 0);
    CHECK(a1->new_placement.slices.count == 2);
    apply(rig, c, *a1, t, 18.0);

    // Post-change tail stays clear of the hysteresis band: accepted.
    CHECK_FALSE(drive(c, rig, "vic", 5.0, t, 6, snap));
    for (const auto& r : c.log()) CHECK(r.kind != ActionKind::rollback);

    SUBCASE("a tail inside the band rolls the shrink back") {
        // Next relax epoch, down to 1g; 14 ms is below tau but not below
        // clear (13.5), so the shrink is rejected.
        auto a2 = drive(c, rig, "vic", 5.0, t, 40, snap);
        REQUIRE(a2);
        CHECK(a2->kind == ActionKind::mig_down);
        CHECK(a2->new_profile == "1g.10gb");
        apply(rig, c, *a2, t, 18.0);

        auto rb = drive(c, rig, "vic", 14.0, t, 10, snap);
        REQUIRE(rb);
        CHECK(rb->kind == ActionKind::rollback);
        CHECK(rb->new_profile == "2g.20gb");
        CHECK(rb->new_placement.slices.count == 2);
    }
    SUBCASE("relaxation requires the resize policy") {
        Rig rig2;
        rig2.cfg.enable_mig = false;
        rig2.states.at("vic").placement = {0, 1, {0, 3}};
        rig2.states.at("vic").profile = model::mig_profile("3g.40gb");
        control::Controller c2(rig2.cfg, rig2.topo);
        double t2 = 0.0;
        CHECK_FALSE(drive(c2, rig2, "vic", 5.0, t2, 200, [&](double ts) { return rig2.quiet(ts); }));
    }
}

TEST_CASE("MPS quota guardrail fires only on shared devices") {
    Rig rig;
    // Rebuild gpu0 as a non-MIG device shared by two tenants.
    rig.topo.hosts[0].gpus[0].mig_enabled = false;
    rig.states.at("vic").placement = {0, 0, {0, 7}};
    rig.states.at("vic").profile = model::mig_profile("7g.80gb");
    rig.states.at("agg").placement = {0, 0, {0, 7}};
    rig.states.at("agg").profile = model::mig_profile("7g.80gb");
    control::Controller c(rig.cfg, rig.topo);
    double t = 0.0;
    SnapFn snap = [&](double ts) {
        auto s = rig.quiet(ts);
        s.tenant_sm_util = {{"vic", 0.3}, {"agg", 0.9}};
        s.gpu_sm_util[{0, 0}] = 1.2;  // gap 0.9 > 0.7
        s.tenant_queue_len = {{"vic", 0}, {"agg", 2}};
        return s;
    };

    CHECK(c.diagnose("vic", snap(1.0), rig.states) == Diagnosis::compute_contention);
    auto a = drive(c, rig, "vic", 30.0, t, 40, snap);
    REQUIRE(a);
    CHECK(a->kind == ActionKind::guardrail_mps_quota);
    CHECK(a->target_tenant == "agg");
    CHECK(a->quota_pct == 50.0);

    SUBCASE("slices already isolate SM on MIG devices") {
        Rig rig2;
        control::Controller c2(rig2.cfg, rig2.topo);
        double t2 = 0.0;
        SnapFn snap2 = [&](double ts) {
            auto s = rig2.quiet(ts);
            s.tenant_sm_util = {{"vic", 0.1}, {"agg", 0.95}};
            s.gpu_sm_util[{0, 0}] = 1.05;
            // NUMA-local I/O from the neighbor gives the move enough margin.
            s.tenant_host_io_Bps["agg"] = 450e6;
            return s;
        };
        CHECK(c2.diagnose("vic", snap2(1.0), rig2.states) == Diagnosis::compute_contention);
        // Rung 0 finds nothing on a MIG GPU; the ladder moves the tenant out.
        auto b = drive(c2, rig2, "vic", 30.0, t2, 40, snap2);
        REQUIRE(b);
        CHECK(b->kind == ActionKind::move);
    }
}

TEST_CASE("slice-run search honors occupancy, preference, and the mover") {
    Rig rig;
    const auto& gpu0 = rig.topo.gpu(0, 0);
    // Occupied: vic [0,2), agg [6,7). Free: [2,6).
    auto r3 = control::find_slice_run(gpu0, rig.states, 0, 3);
    REQUIRE(r3);
    CHECK(r3->first == 2);

    SUBCASE("preferred start wins when it fits") {
        auto r = control::find_slice_run(gpu0, rig.states, 0, 3, 3);
        REQUIRE(r);
        CHECK(r->first == 3);
    }
    SUBCASE("unusable preference falls back to leftmost") {
        auto r = control::find_slice_run(gpu0, rig.states, 0, 3, 5);
        REQUIRE(r);
        CHECK(r->first == 2);
    }
    SUBCASE("the mover's own slices do not block it") {
        auto r = control::find_slice_run(gpu0, rig.states, 0, 7, 0, "vic");
        CHECK_FALSE(r);  // agg still holds slice 6
        auto r6 = control::find_slice_run(gpu0, rig.states, 0, 6, 0, "vic");
        REQUIRE(r6);
        CHECK(r6->first == 0);
    }
    SUBCASE("queued tenants do not occupy slices") {
        rig.states.at("agg").status = model::TenantStatus::queued;
        auto r = control::find_slice_run(gpu0, rig.states, 0, 5, std::nullopt, "");
        REQUIRE(r);
        CHECK(r->first == 2);
    }
    SUBCASE("impossible requests return nothing") {
        CHECK_FALSE(control::find_slice_run(gpu0, rig.states, 0, 8));
        CHECK_FALSE(control::find_slice_run(gpu0, rig.states, 0, 0));
    }
}

TEST_CASE("placement scoring adds fabric, NUMA I/O, and IRQ terms") {
    Rig rig;
    auto snap = rig.io_heavy(5.0);

    auto s0 = control::placement_score(rig.topo, rig.states, snap, "vic", 0, 0);
    CHECK(s0.pcie == doctest::Approx(9.5e9 / 16e9).epsilon(1e-12));
    CHECK(s0.numa_io == doctest::Approx(450e6 / 500e6).epsilon(1e-12));
    CHECK(s0.irq == 1.0);
    CHECK(s0.total() == doctest::Approx(9.5e9 / 16e9 + 0.9 + 1.0).epsilon(1e-12));

    auto s1 = control::placement_score(rig.topo, rig.states, snap, "vic", 0, 1);
    CHECK(s1.total() == 0.0);

    SUBCASE("only bandwidth-heavy neighbors add fabric pressure") {
        rig.agg_spec.tclass = model::TenantClass::compute_heavy;
        auto s = control::placement_score(rig.topo, rig.states, snap, "vic", 0, 0);
        CHECK(s.pcie == 0.0);
        CHECK(s.numa_io == doctest::Approx(0.9).epsilon(1e-12));
    }
}

TEST_CASE("admission prefers clean slots and queues when nothing fits") {
    Rig rig;
    control::Controller c(rig.cfg, rig.topo);
    auto snap = rig.io_heavy(1.0);

    model::TenantSpec fresh;
    fresh.id = "new";
    fresh.tclass = model::TenantClass::latency_sensitive;
    fresh.arrival_rate_hz = 10.0;
    fresh.transfer_mix = {{2e6, 1.0}};
    fresh.base_compute_ms = 2.0;
    fresh.slo_tail_ms = 20.0;

    auto d = c.admit(fresh, "2g.20gb", snap, rig.states);
    CHECK(d.outcome == control::AdmissionOutcome::admitted);
    CHECK(d.placement.gpu == 1);  // interference-free GPU wins
    CHECK(d.placement.slices.first == 0);
    CHECK(d.profile == "2g.20gb");

    SUBCASE("overload at the requested profile is rejected outright") {
        fresh.arrival_rate_hz = 1000.0;  // mu at 2g is 2/7 / 2ms ~ 143/s
        auto r = c.admit(fresh, "2g.20gb", snap, rig.states);
        CHECK(r.outcome == control::AdmissionOutcome::rejected);
        CHECK(r.reason.find("service rate") != std::string::npos);
    }
    SUBCASE("bandwidth claims keep roots under capacity") {
        // Block gpu1 entirely, then claim more than root0 has left.
        model::TenantSpec big;
        big.id = "big";
        big.arrival_rate_hz = 1.0;
        big.transfer_mix = {{1e6, 1.0}};
        big.base_compute_ms = 1.0;
        big.slo_tail_ms = 1000.0;
        model::TenantState bst;
        bst.spec = &big;
        bst.placement = {0, 1, {0, 7}};
        bst.profile = model::mig_profile("7g.80gb");
        bst.status = model::TenantStatus::admitted;
        rig.states["big"] = bst;

        fresh.pcie_cap_Bps = 7e9;  // 9.5e9 (agg) + 7e9 >= 16e9
        auto q = c.admit(fresh, "2g.20gb", snap, rig.states);
        CHECK(q.outcome == control::AdmissionOutcome::queued);

        // Repeated failures age the request out of the queue.
        control::AdmissionDecision last;
        for (int i = 0; i < rig.cfg.admission_queue_timeout_epochs; ++i) {
            last = c.admit(fresh, "2g.20gb", snap, rig.states);
        }
        CHECK(last.outcome == control::AdmissionOutcome::rejected);
        CHECK(last.reason.find("timeout") != std::string::npos);

        // A successful admission resets the ageing.
        fresh.pcie_cap_Bps = 1e9;
        auto ok = c.admit(fresh, "2g.20gb", snap, rig.states);
        CHECK(ok.outcome == control::AdmissionOutcome::admitted);
        CHECK(ok.placement.gpu == 0);
        CHECK(ok.placement.slices.first == 2);
    }
}

TEST_CASE("bandwidth claims fall back to the mean offered rate") {
    Rig rig;
    CHECK(control::Controller::bandwidth_claim(rig.agg_spec) == 9.5e9);
    CHECK(control::Controller::bandwidth_claim(rig.vic_spec) == doctest::Approx(50.0 * 2e6).epsilon(1e-12));
}

TEST_CASE("non-admitted tenants are ignored") {
    Rig rig;
    rig.states.at("vic").status = model::TenantStatus::queued;
    control::Controller c(rig.cfg, rig.topo);
    double t = 0.0;
    CHECK_FALSE(drive(c, rig, "vic", 500.0, t, 100, [&](double ts) { return rig.io_heavy(ts); }));
    CHECK(c.log().empty());

    SUBCASE("a disabled controller does nothing") {
        Rig rig2;
        rig2.cfg.enabled = false;
        control::Controller c2(rig2.cfg, rig2.topo);
        double t2 = 0.0;
        CHECK_FALSE(drive(c2, rig2, "vic", 500.0, t2, 100, [&](double ts) { return rig2.io_heavy(ts); }));
        CHECK(c2.log().empty());
    }
}
