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
#include "migsim/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <queue>

#include "migsim/fabric.hpp"
#include "migsim/telemetry.hpp"
#include "migsim/trace.hpp"
#include "migsim/workload.hpp"

namespace migsim::engine {

double sample_truncated_normal(std::mt19937_64& rng, double mean, double sd, double lo, double hi) {
    std::normal_distribution<double> n(mean, sd);
    for (;;) {
        const double v = n(rng);
        if (v >= lo && v <= hi) return v;
    }
}

namespace {

using control::Action;
using control::ActionKind;
using scenario::ScenarioSpec;

// Transfers below this many bytes are complete: rounding residue, not payload.
constexpr double kEpsBytes = 1e-6;

enum class EventKind : int {
    resume = 0,
    guardrail_expire = 1,
    transfer_complete = 2,
    compute_complete = 3,
    arrival = 4,
    tick = 5,
};

struct Event {
    double t = 0.0;
    EventKind kind = EventKind::tick;
    uint64_t seq = 0;  // insertion order breaks remaining ties
    std::string tenant;
    uint64_t gen = 0;  // stale-detection for cancellable events
    // arrival payload
    workload::Arrival arrival;
};

struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
        if (a.t != b.t) return a.t > b.t;
        if (a.kind != b.kind) return static_cast<int>(a.kind) > static_cast<int>(b.kind);
        return a.seq > b.seq;
    }
};

struct Request {
    uint64_t seq = 0;
    double arrived_s = 0.0;
    double bytes = 0.0;
    double remaining_bytes = 0.0;
    double service_mult = 1.0;
    double noise_ms = 0.0;
    double transfer_started_s = -1.0;
    double transfer_ms = 0.0;      // accumulated flowing time
    double compute_done_ms = 0.0;  // service completed before a pause
};

struct TenantRt {
    const scenario::TenantEntry* entry = nullptr;
    workload::ArrivalGen gen;
    std::mt19937_64 pause_rng;
    std::mt19937_64 irq_rng;
    uint64_t arrivals_emitted = 0;

    std::deque<Request> transfer_q;
    bool transferring = false;
    Request current_transfer;
    double last_settle_s = 0.0;
    double grant_Bps = 0.0;
    uint64_t transfer_gen = 0;

    std::deque<Request> compute_q;
    bool computing = false;
    Request current_compute;
    double compute_end_s = 0.0;
    double compute_service_ms = 0.0;
    double compute_extra_ms = 0.0;  // drawn noise applied at this stage
    uint64_t compute_gen = 0;

    uint64_t expire_gen = 0;
    uint64_t resume_gen = 0;

    uint64_t completed = 0;
    telemetry::TailWindow trace_window{256};
    std::vector<std::pair<double, double>> window_samples;  // (done_s, total_ms)
    double sum_total_ms = 0.0;
    uint64_t window_misses = 0;

    TenantRt(const scenario::TenantEntry& e, uint64_t seed)
        : entry(&e),
          gen(e.spec, seed),
          pause_rng(workload::make_substream(seed, e.spec.id, workload::StreamPurpose::pause)),
          irq_rng(workload::make_substream(seed, e.spec.id, workload::StreamPurpose::irq)) {}

    size_t queue_len() const {
        return transfer_q.size() + compute_q.size() + (transferring ? 1 : 0) + (computing ? 1 : 0);
    }
};

struct RootRt {
    int host = 0;
    int id = 0;
    double capacity_Bps = 0.0;
    std::vector<std::string> active;  // tenants with a flow in progress
};

class Sim {
public:
    Sim(const ScenarioSpec& spec, const RunOptions& opt)
        : spec_(spec), opt_(opt), controller_(spec.controller, spec.topology) {}

    RunResult run();

private:
    // --- setup ---------------------------------------------------------
    void init_tenants();
    void open_traces();

    // --- event dispatch ------------------------------------------------
    void push_event(Event e) {
        e.seq = next_event_seq_++;
        heap_.push(std::move(e));
    }
    void on_arrival(const Event& e);
    void on_transfer_complete(const Event& e);
    void on_compute_complete(const Event& e);
    void on_resume(const Event& e);
    void on_guardrail_expire(const Event& e);
    void on_tick(const Event& e);

    // --- stages --------------------------------------------------------
    void start_transfer(const std::string& id);
    void start_compute(const std::string& id);
    void settle_root(RootRt& root);
    void reallocate_root(RootRt& root);
    RootRt& root_of(const std::string& id);
    RootRt& root_at(int host, int root_id);

    // --- controller glue ----------------------------------------------
    control::ClusterSnapshot snapshot() const;
    void run_controller(const std::string& id, const CompletionRecord& rec);
    void apply_action(const Action& a);
    void pause_tenant(const std::string& id, double duration_s, const Action& cause);
    bool paused(const TenantRt& rt) const;

    // --- bookkeeping ---------------------------------------------------
    const model::GpuSpec& gpu_of(const model::TenantState& st) const {
        return spec_.topology.gpu(st.placement.host, st.placement.gpu);
    }
    double sm_fraction(const model::TenantState& st) const;
    double effective_host_io(const std::string& id) const;
    bool irq_exposed(const model::TenantState& st) const;
    void finish(RunResult& result);

    const ScenarioSpec& spec_;
    RunOptions opt_;
    control::Controller controller_;

    std::priority_queue<Event, std::vector<Event>, EventOrder> heap_;
    uint64_t next_event_seq_ = 0;
    double now_ = 0.0;

    control::TenantStates states_;
    std::map<std::string, TenantRt> rt_;
    std::map<std::pair<int, int>, RootRt> roots_;
    std::map<std::string, std::pair<Action, double>> pending_pause_cause_;

    std::vector<PauseEvent> pauses_;
    std::vector<CompletionRecord> kept_;
    std::map<std::pair<int, int>, std::vector<double>> backlog_series_;

    std::ofstream requests_f_, counters_f_, fabric_f_;
};

bool Sim::paused(const TenantRt& rt) const {
    const auto& st = states_.at(rt.entry->spec.id);
    return st.paused_until_s.has_value();
}

double Sim::sm_fraction(const model::TenantState& st) const {
    const auto& gpu = gpu_of(st);
    if (!gpu.mig_enabled) return 1.0;
    return st.profile.sm_fraction(gpu.total_slices);
}

double Sim::effective_host_io(const std::string& id) const {
    const auto& st = states_.at(id);
    const auto& rt = rt_.at(id);
    if (st.status != model::TenantStatus::admitted || st.paused_until_s) return 0.0;
    if (rt.queue_len() == 0) return 0.0;
    double io = st.spec->host_io_Bps;
    if (st.io_throttle_Bps && *st.io_throttle_Bps < io) io = *st.io_throttle_Bps;
    return io;
}

bool Sim::irq_exposed(const model::TenantState& st) const {
    if (st.cpu_pinned) return false;
    const auto& gpu = gpu_of(st);
    for (const auto& irq : spec_.irq_bursts) {
        if (irq.host == st.placement.host && irq.core_group == gpu.core_group &&
            irq.schedule.active(now_)) {
            return true;
        }
    }
    return false;
}

void Sim::init_tenants() {
    for (size_t h = 0; h < spec_.topology.hosts.size(); ++h) {
        for (const auto& r : spec_.topology.hosts[h].pcie_roots) {
            RootRt root;
            root.host = static_cast<int>(h);
            root.id = r.id;
            root.capacity_Bps = r.capacity_Bps;
            roots_[{root.host, root.id}] = root;
        }
    }
    for (const auto& entry : spec_.tenants) {
        model::TenantState st;
        st.spec = &entry.spec;
        st.placement = entry.placement;
        st.profile = model::mig_profile(entry.profile_name);
        st.status = model::TenantStatus::admitted;
        states_[entry.spec.id] = st;
        rt_.emplace(entry.spec.id, TenantRt(entry, opt_.seed));

        // First arrival (schedule-thinned).
        auto& rt = rt_.at(entry.spec.id);
        for (;;) {
            workload::Arrival a = rt.gen.next();
            if (a.t_s >= spec_.duration_s) break;
            if (!entry.schedule.active(a.t_s)) continue;
            Event e;
            e.t = a.t_s;
            e.kind = EventKind::arrival;
            e.tenant = entry.spec.id;
            e.arrival = a;
            push_event(std::move(e));
            break;
        }
    }
    Event tick;
    tick.t = 1.0;
    tick.kind = EventKind::tick;
    push_event(std::move(tick));
}

void Sim::open_traces() {
    if (opt_.out_dir.empty()) return;
    std::filesystem::create_directories(opt_.out_dir);
    if (!opt_.write_traces) return;
    requests_f_.open(opt_.out_dir + "/requests.csv");
    counters_f_.open(opt_.out_dir + "/counters.csv");
    fabric_f_.open(opt_.out_dir + "/fabric.csv");
    requests_f_ << trace::kRequestHeader << "\n";
    counters_f_ << trace::kCounterHeader << "\n";
    fabric_f_ << trace::kFabricHeader << "\n";
}

RootRt& Sim::root_at(int host, int root_id) { return roots_.at({host, root_id}); }

RootRt& Sim::root_of(const std::string& id) {
    const auto& st = states_.at(id);
    return root_at(st.placement.host, gpu_of(st).pcie_root_id);
}

void Sim::settle_root(RootRt& root) {
    for (const auto& id : root.active) {
        auto& rt = rt_.at(id);
        const double dt = now_ - rt.last_settle_s;
        if (dt > 0.0 && rt.grant_Bps > 0.0) {
            rt.current_transfer.remaining_bytes =
                std::max(0.0, rt.current_transfer.remaining_bytes - rt.grant_Bps * dt);
            if (rt.current_transfer.remaining_bytes < kEpsBytes)
                rt.current_transfer.remaining_bytes = 0.0;
        }
        rt.last_settle_s = now_;
    }
}

void Sim::reallocate_root(RootRt& root) {
    std::vector<fabric::FlowRequest> flows;
    flows.reserve(root.active.size());
    for (const auto& id : root.active) {
        const auto& st = states_.at(id);
        fabric::FlowRequest f;
        f.tenant = id;
        f.weight = st.spec->weight;
        const double cap = st.effective_pcie_cap_Bps();
        if (cap > 0.0) f.cap_Bps = cap;
        flows.push_back(std::move(f));
    }
    const auto grant = fabric::allocate_bandwidth(flows, root.capacity_Bps, spec_.fabric_redistribute);
    for (const auto& id : root.active) {
        auto& rt = rt_.at(id);
        rt.grant_Bps = grant.grant_for(id);
        rt.last_settle_s = now_;
        rt.transfer_gen += 1;
        if (rt.grant_Bps > 0.0 && rt.current_transfer.remaining_bytes > kEpsBytes) {
            Event e;
            e.t = now_ + rt.current_transfer.remaining_bytes / rt.grant_Bps;
            e.kind = EventKind::transfer_complete;
            e.tenant = id;
            e.gen = rt.transfer_gen;
            push_event(std::move(e));
        } else if (rt.current_transfer.remaining_bytes <= kEpsBytes) {
            Event e;
            e.t = now_;
            e.kind = EventKind::transfer_complete;
            e.tenant = id;
            e.gen = rt.transfer_gen;
            push_event(std::move(e));
        }
        // grant == 0 with bytes left: starved, wait for the next epoch
    }
}

void Sim::start_transfer(const std::string& id) {
    auto& rt = rt_.at(id);
    if (rt.transferring || paused(rt)) return;
    while (!rt.transfer_q.empty()) {
        Request req = rt.transfer_q.front();
        rt.transfer_q.pop_front();
        if (req.bytes <= 0.0) {
            rt.compute_q.push_back(std::move(req));
            start_compute(id);
            continue;
        }
        req.transfer_started_s = now_;
        rt.current_transfer = std::move(req);
        rt.transferring = true;
        auto& root = root_of(id);
        settle_root(root);
        root.active.push_back(id);
        std::sort(root.active.begin(), root.active.end());
        reallocate_root(root);
        return;
    }
}

void Sim::start_compute(const std::string& id) {
    auto& rt = rt_.at(id);
    if (rt.computing || paused(rt) || rt.compute_q.empty()) return;
    auto& st = states_.at(id);
    Request req = rt.compute_q.front();
    rt.compute_q.pop_front();

    const double frac = sm_fraction(st);
    double service_ms = st.spec->base_compute_ms * req.service_mult / frac;
    const auto& gpu = gpu_of(st);
    if (!gpu.mig_enabled) {
        service_ms *= 100.0 / st.mps_quota_pct;
        double pressure = 0.0;
        for (const auto& [oid, ost] : states_) {
            if (oid == id || ost.status != model::TenantStatus::admitted || ost.paused_until_s) continue;
            if (ost.placement.host != st.placement.host || ost.placement.gpu != st.placement.gpu) continue;
            if (!rt_.at(oid).computing) continue;
            pressure += ost.spec->sm_demand * ost.mps_quota_pct / 100.0;
        }
        service_ms *= 1.0 + kMpsKappa * pressure;
    }

    double extra_ms = req.noise_ms;
    if (irq_exposed(st)) {
        const auto* burst = [&]() -> const scenario::IrqBurstSpec* {
            for (const auto& b : spec_.irq_bursts) {
                if (b.host == st.placement.host && b.core_group == gpu.core_group) return &b;
            }
            return nullptr;
        }();
        if (burst && burst->extra_noise_ms > 0.0) {
            std::exponential_distribution<double> eps(1.0 / burst->extra_noise_ms);
            extra_ms += eps(rt.irq_rng);
        }
    }

    rt.current_compute = std::move(req);
    rt.computing = true;
    rt.compute_service_ms = service_ms;
    rt.compute_extra_ms = extra_ms;
    rt.compute_end_s = now_ + (service_ms + extra_ms) / 1000.0;
    rt.compute_gen += 1;
    Event e;
    e.t = rt.compute_end_s;
    e.kind = EventKind::compute_complete;
    e.tenant = id;
    e.gen = rt.compute_gen;
    push_event(std::move(e));
}

void Sim::on_arrival(const Event& e) {
    auto& rt = rt_.at(e.tenant);
    Request req;
    req.seq = rt.arrivals_emitted++;
    req.arrived_s = e.arrival.t_s;
    req.bytes = e.arrival.transfer_bytes;
    req.remaining_bytes = e.arrival.transfer_bytes;
    req.service_mult = e.arrival.service_mult;
    req.noise_ms = e.arrival.noise_ms;
    rt.transfer_q.push_back(std::move(req));
    start_transfer(e.tenant);

    // Next arrival for this tenant.
    for (;;) {
        workload::Arrival a = rt.gen.next();
        if (a.t_s >= spec_.duration_s) break;
        if (!rt.entry->schedule.active(a.t_s)) continue;
        Event next;
        next.t = a.t_s;
        next.kind = EventKind::arrival;
        next.tenant = e.tenant;
        next.arrival = a;
        push_event(std::move(next));
        break;
    }
}

void Sim::on_transfer_complete(const Event& e) {
    auto& rt = rt_.at(e.tenant);
    if (e.gen != rt.transfer_gen || !rt.transferring) return;
    auto& root = root_of(e.tenant);
    settle_root(root);
    const double rem = rt.current_transfer.remaining_bytes;
    // Done when the residue is noise or when no representable time remains;
    // otherwise the reallocation below schedules a strictly later completion.
    const bool done = rem <= kEpsBytes || (rt.grant_Bps > 0.0 && now_ + rem / rt.grant_Bps <= now_);
    if (!done) {
        reallocate_root(root);
        return;
    }
    rt.current_transfer.remaining_bytes = 0.0;
    rt.transferring = false;
    Request req = std::move(rt.current_transfer);
    req.transfer_ms += (now_ - req.transfer_started_s) * 1000.0;
    root.active.erase(std::find(root.active.begin(), root.active.end(), e.tenant));
    rt.grant_Bps = 0.0;
    reallocate_root(root);
    rt.compute_q.push_back(std::move(req));
    start_compute(e.tenant);
    start_transfer(e.tenant);
}

void Sim::on_compute_complete(const Event& e) {
    auto& rt = rt_.at(e.tenant);
    if (e.gen != rt.compute_gen || !rt.computing) return;
    rt.computing = false;
    Request req = std::move(rt.current_compute);

    CompletionRecord rec;
    rec.tenant = e.tenant;
    rec.seq = req.seq;
    rec.arrived_s = req.arrived_s;
    rec.done_s = now_;
    rec.total_ms = (now_ - req.arrived_s) * 1000.0;
    rec.compute_ms = req.compute_done_ms + rt.compute_service_ms;
    rec.transfer_ms = req.transfer_ms;
    rec.noise_ms = rec.total_ms - rec.compute_ms - rec.transfer_ms;
    // Sub-nanosecond negative residue is rounding, not a timeline violation.
    if (rec.noise_ms < 0.0 && rec.noise_ms > -1e-9) rec.noise_ms = 0.0;
    // Re-derive the total as the sum of its parts so the decomposition
    // identity holds bitwise for every consumer; the shift is at most 1 ulp.
    rec.total_ms = rec.compute_ms + rec.transfer_ms + rec.noise_ms;
    rec.transfer_bytes = req.bytes;

    rt.completed += 1;
    rt.trace_window.push(rec.total_ms);
    if (now_ >= spec_.measure_start_s) {
        rt.window_samples.emplace_back(now_, rec.total_ms);
        rt.sum_total_ms += rec.total_ms;
        if (rec.total_ms > rt.entry->spec.slo_tail_ms) rt.window_misses += 1;
    }
    if (requests_f_.is_open()) requests_f_ << trace::request_row(rec) << "\n";
    if (opt_.keep_completions) kept_.push_back(rec);

    start_compute(e.tenant);
    run_controller(e.tenant, rec);
}

void Sim::run_controller(const std::string& id, const CompletionRecord& rec) {
    if (!spec_.controller.enabled) return;
    auto snap = snapshot();
    auto action =
        controller_.on_observation(id, rec.total_ms, rec.done_s, rec.arrived_s, snap, states_);
    if (action) apply_action(*action);
}

control::ClusterSnapshot Sim::snapshot() const {
    control::ClusterSnapshot snap;
    snap.t_s = now_;
    for (const auto& [key, root] : roots_) {
        double offered = 0.0;
        for (const auto& id : root.active) offered += rt_.at(id).grant_Bps;
        snap.root_offered_Bps[key] = offered;
        snap.root_capacity_Bps[key] = root.capacity_Bps;
    }
    for (size_t h = 0; h < spec_.topology.hosts.size(); ++h) {
        snap.host_io_capacity_Bps[static_cast<int>(h)] = spec_.topology.hosts[h].io_capacity_Bps;
        snap.host_io_Bps[static_cast<int>(h)] = 0.0;
    }
    for (const auto& [id, st] : states_) {
        if (st.status != model::TenantStatus::admitted) continue;
        const auto& rt = rt_.at(id);
        const double io = effective_host_io(id);
        snap.host_io_Bps[st.placement.host] += io;
        snap.tenant_host_io_Bps[id] = io;
        snap.tenant_pcie_Bps[id] = rt.transferring ? rt.grant_Bps : 0.0;
        const double util = (rt.computing && !st.paused_until_s)
                                ? st.spec->sm_demand * sm_fraction(st) * st.mps_quota_pct / 100.0
                                : 0.0;
        snap.tenant_sm_util[id] = util;
        snap.gpu_sm_util[{st.placement.host, st.placement.gpu}] += util;
        snap.tenant_queue_len[id] = rt.queue_len();
    }
    for (const auto& irq : spec_.irq_bursts) {
        if (irq.schedule.active_within(now_ - spec_.controller.irq_lookback_s, now_)) {
            snap.irq_recent.insert({irq.host, irq.core_group});
        }
    }
    return snap;
}

void Sim::apply_action(const Action& a) {
    auto& target = states_.at(a.target_tenant);
    switch (a.kind) {
        case ActionKind::guardrail_io_throttle: {
            target.io_throttle_Bps = a.throttle_Bps;
            auto& trt = rt_.at(a.target_tenant);
            trt.expire_gen += 1;
            Event e;
            e.t = a.expires_at_s;
            e.kind = EventKind::guardrail_expire;
            e.tenant = a.target_tenant;
            e.gen = trt.expire_gen;
            push_event(std::move(e));
            if (trt.transferring) {
                auto& root = root_of(a.target_tenant);
                settle_root(root);
                reallocate_root(root);
            }
            controller_.on_action_applied(a, now_, 0.0);
            break;
        }
        case ActionKind::guardrail_mps_quota: {
            target.mps_quota_pct = a.quota_pct;
            auto& trt = rt_.at(a.target_tenant);
            trt.expire_gen += 1;
            Event e;
            e.t = a.expires_at_s;
            e.kind = EventKind::guardrail_expire;
            e.tenant = a.target_tenant;
            e.gen = trt.expire_gen;
            push_event(std::move(e));
            controller_.on_action_applied(a, now_, 0.0);
            break;
        }
        case ActionKind::move: {
            auto& rt = rt_.at(a.tenant);
            const double pause =
                sample_truncated_normal(rt.pause_rng, kMovePauseMean, kMovePauseSd, kMovePauseLo, kMovePauseHi);
            pause_tenant(a.tenant, pause, a);
            auto& st = states_.at(a.tenant);
            st.placement = a.new_placement;
            if (a.pin_cpu) st.cpu_pinned = true;
            break;
        }
        case ActionKind::mig_up:
        case ActionKind::mig_down: {
            auto& rt = rt_.at(a.tenant);
            const double pause = sample_truncated_normal(rt.pause_rng, kReconfigPauseMean, kReconfigPauseSd,
                                                         kReconfigPauseLo, kReconfigPauseHi);
            pause_tenant(a.tenant, pause, a);
            auto& st = states_.at(a.tenant);
            st.placement = a.new_placement;
            st.profile = model::mig_profile(a.new_profile);
            break;
        }
        case ActionKind::rollback: {
            if (a.restore_throttle) {
                target.io_throttle_Bps.reset();
                target.mps_quota_pct = 100.0;
                auto& trt = rt_.at(a.target_tenant);
                trt.expire_gen += 1;  // cancels the pending expiry
                if (trt.transferring) {
                    auto& root = root_of(a.target_tenant);
                    settle_root(root);
                    reallocate_root(root);
                }
                controller_.on_action_applied(a, now_, 0.0);
                break;
            }
            auto& st = states_.at(a.tenant);
            auto& rt = rt_.at(a.tenant);
            const bool profile_change = st.profile.name != a.new_profile;
            const double pause =
                profile_change
                    ? sample_truncated_normal(rt.pause_rng, kReconfigPauseMean, kReconfigPauseSd,
                                              kReconfigPauseLo, kReconfigPauseHi)
                    : sample_truncated_normal(rt.pause_rng, kMovePauseMean, kMovePauseSd, kMovePauseLo,
                                              kMovePauseHi);
            pause_tenant(a.tenant, pause, a);
            st.placement = a.new_placement;
            st.profile = model::mig_profile(a.new_profile);
            break;
        }
        case ActionKind::none:
        case ActionKind::guardrail_expire:
            break;
    }
}

void Sim::pause_tenant(const std::string& id, double duration_s, const Action& cause) {
    auto& st = states_.at(id);
    auto& rt = rt_.at(id);

    // Freeze the transfer stage: progress settles, the flow leaves its root.
    if (rt.transferring) {
        auto& root = root_of(id);  // still the old placement
        settle_root(root);
        root.active.erase(std::find(root.active.begin(), root.active.end(), id));
        rt.grant_Bps = 0.0;
        rt.transfer_gen += 1;
        if (rt.current_transfer.transfer_started_s >= 0.0) {
            rt.current_transfer.transfer_ms += (now_ - rt.current_transfer.transfer_started_s) * 1000.0;
            rt.current_transfer.transfer_started_s = -1.0;
        }
        reallocate_root(root);
    }
    // Freeze compute: split remaining stage time into service work (rescaled
    // to full-device units under the old slice fraction) and residual noise.
    if (rt.computing) {
        const double remaining_ms = std::max(0.0, (rt.compute_end_s - now_) * 1000.0);
        const double stage_ms = rt.compute_service_ms + rt.compute_extra_ms;
        const double frac = stage_ms > 0.0 ? remaining_ms / stage_ms : 0.0;
        const double rem_service = rt.compute_service_ms * frac;
        rt.current_compute.compute_done_ms += rt.compute_service_ms - rem_service;
        rt.compute_service_ms = rem_service * sm_fraction(st);
        rt.compute_extra_ms *= frac;
        rt.compute_gen += 1;
    }

    st.paused_until_s = now_ + duration_s;
    pauses_.push_back({now_, id, cause.kind, duration_s});
    pending_pause_cause_[id] = {cause, duration_s};

    rt.resume_gen += 1;
    Event e;
    e.t = *st.paused_until_s;
    e.kind = EventKind::resume;
    e.tenant = id;
    e.gen = rt.resume_gen;
    push_event(std::move(e));
}

void Sim::on_resume(const Event& e) {
    auto& rt = rt_.at(e.tenant);
    if (e.gen != rt.resume_gen) return;
    auto& st = states_.at(e.tenant);
    st.paused_until_s.reset();

    if (rt.computing) {
        // Remaining work rescales to the (possibly new) slice fraction.
        const double service_ms = rt.compute_service_ms / sm_fraction(st);
        rt.compute_service_ms = service_ms;
        rt.compute_end_s = now_ + (service_ms + rt.compute_extra_ms) / 1000.0;
        rt.compute_gen += 1;
        Event ev;
        ev.t = rt.compute_end_s;
        ev.kind = EventKind::compute_complete;
        ev.tenant = e.tenant;
        ev.gen = rt.compute_gen;
        push_event(std::move(ev));
    }
    if (rt.transferring) {
        rt.current_transfer.transfer_started_s = now_;
        auto& root = root_of(e.tenant);  // new placement's root
        settle_root(root);
        root.active.push_back(e.tenant);
        std::sort(root.active.begin(), root.active.end());
        reallocate_root(root);
    }
    start_transfer(e.tenant);
    start_compute(e.tenant);

    auto cause = pending_pause_cause_.find(e.tenant);
    if (cause != pending_pause_cause_.end()) {
        controller_.on_action_applied(cause->second.first, now_, cause->second.second);
        pending_pause_cause_.erase(cause);
    }
}

void Sim::on_guardrail_expire(const Event& e) {
    auto& rt = rt_.at(e.tenant);
    if (e.gen != rt.expire_gen) return;
    auto& st = states_.at(e.tenant);
    ActionKind kind = ActionKind::guardrail_io_throttle;
    if (st.io_throttle_Bps) {
        st.io_throttle_Bps.reset();
        kind = ActionKind::guardrail_io_throttle;
    } else if (st.mps_quota_pct < model::kMpsQuotaMaxPct) {
        st.mps_quota_pct = 100.0;
        kind = ActionKind::guardrail_mps_quota;
    } else {
        return;
    }
    if (rt.transferring) {
        auto& root = root_of(e.tenant);
        settle_root(root);
        reallocate_root(root);
    }
    controller_.on_guardrail_expired(e.tenant, kind, now_);
}

void Sim::on_tick(const Event& e) {
    (void)e;
    for (auto& [key, root] : roots_) {
        double offered = 0.0;
        double backlog = 0.0;
        for (const auto& id : root.active) {
            offered += rt_.at(id).grant_Bps;
        }
        for (const auto& [id, st] : states_) {
            if (st.status != model::TenantStatus::admitted) continue;
            if (st.placement.host != key.first || gpu_of(st).pcie_root_id != key.second) continue;
            const auto& rt = rt_.at(id);
            if (rt.transferring) backlog += rt.current_transfer.remaining_bytes;
            for (const auto& q : rt.transfer_q) backlog += q.remaining_bytes;
        }
        backlog_series_[key].push_back(backlog);
        if (fabric_f_.is_open()) {
            fabric_f_ << trace::fabric_row(now_, key.first, key.second, offered, root.capacity_Bps,
                                           root.active.size(), backlog)
                      << "\n";
        }
    }
    if (counters_f_.is_open()) {
        for (const auto& [id, st] : states_) {
            const auto& rt = rt_.at(id);
            counters_f_ << trace::counter_row(now_, id, rt.completed, rt.queue_len(),
                                              rt.trace_window.quantile(0.99).value_or(0.0),
                                              rt.transferring ? rt.grant_Bps : 0.0, st.profile.name,
                                              st.placement.host, st.placement.gpu)
                        << "\n";
        }
    }
    if (now_ + 1.0 <= spec_.duration_s) {
        Event next;
        next.t = now_ + 1.0;
        next.kind = EventKind::tick;
        push_event(std::move(next));
    }
}

void Sim::finish(RunResult& result) {
    result.scenario_name = spec_.name;
    result.seed = opt_.seed;
    result.duration_s = spec_.duration_s;
    result.measure_start_s = spec_.measure_start_s;
    result.actions = controller_.log();
    result.pauses = pauses_;
    if (opt_.keep_completions) result.completions = std::move(kept_);

    const double window_s = spec_.duration_s - spec_.measure_start_s;
    for (auto& [id, rt] : rt_) {
        TenantSummary s;
        s.id = id;
        s.completed_total = rt.completed;
        s.completed_window = rt.window_samples.size();
        s.slo_tail_ms = rt.entry->spec.slo_tail_ms;
        if (!rt.window_samples.empty()) {
            std::vector<double> lat;
            lat.reserve(rt.window_samples.size());
            for (const auto& [t, v] : rt.window_samples) lat.push_back(v);
            std::sort(lat.begin(), lat.end());
            auto rank = [&](double q) {
                size_t r = static_cast<size_t>(std::ceil(q * static_cast<double>(lat.size())));
                if (r < 1) r = 1;
                return lat[r - 1];
            };
            s.p50_ms = rank(0.50);
            s.p95_ms = rank(0.95);
            s.p99_ms = rank(0.99);
            s.mean_ms = rt.sum_total_ms / static_cast<double>(lat.size());
            s.miss_rate = static_cast<double>(rt.window_misses) / static_cast<double>(lat.size());
            s.throughput_hz = static_cast<double>(lat.size()) / window_s;
        }
        result.tenants[id] = s;
    }
    for (const auto& [id, st] : states_) {
        EndState es;
        es.placement = st.placement;
        es.profile = st.profile.name;
        es.claim_Bps = control::Controller::bandwidth_claim(*st.spec);
        es.status = st.status;
        es.cpu_pinned = st.cpu_pinned;
        result.end_states[id] = es;
    }

    // Stability: analytic claim check per root, and backlog growth over the
    // tick series.
    for (const auto& [key, root] : roots_) {
        double claims = 0.0;
        for (const auto& [id, st] : states_) {
            if (st.status != model::TenantStatus::admitted) continue;
            if (st.placement.host != key.first || gpu_of(st).pcie_root_id != key.second) continue;
            claims += control::Controller::bandwidth_claim(*st.spec);
        }
        if (claims >= root.capacity_Bps) {
            result.stability.analytic_oversubscribed = true;
            char buf[128];
            std::snprintf(buf, sizeof(buf), "host %d root %d: claims %.3g B/s >= capacity %.3g B/s",
                          key.first, key.second, claims, root.capacity_Bps);
            result.stability.notes.push_back(buf);
        }
        const auto& series = backlog_series_[key];
        if (series.size() >= 10) {
            const size_t third = series.size() / 3;
            double first = 0.0, last = 0.0;
            for (size_t i = 0; i < third; ++i) first += series[i];
            for (size_t i = series.size() - third; i < series.size(); ++i) last += series[i];
            first /= static_cast<double>(third);
            last /= static_cast<double>(third);
            if (last > 3.0 * std::max(first, 1.0) && last > root.capacity_Bps) {
                result.stability.unbounded_growth = true;
                char buf[128];
                std::snprintf(buf, sizeof(buf), "host %d root %d: backlog grew %.3g -> %.3g bytes",
                              key.first, key.second, first, last);
                result.stability.notes.push_back(buf);
            }
        }
    }
}

RunResult Sim::run() {
    const auto wall_start = std::chrono::steady_clock::now();
    open_traces();
    init_tenants();

    while (!heap_.empty()) {
        Event e = heap_.top();
        heap_.pop();
        if (e.t > spec_.duration_s) break;
        now_ = e.t;
        switch (e.kind) {
            case EventKind::resume: on_resume(e); break;
            case EventKind::guardrail_expire: on_guardrail_expire(e); break;
            case EventKind::transfer_complete: on_transfer_complete(e); break;
            case EventKind::compute_complete: on_compute_complete(e); break;
            case EventKind::arrival: on_arrival(e); break;
            case EventKind::tick: on_tick(e); break;
        }
    }
    now_ = spec_.duration_s;

    RunResult result;
    finish(result);
    result.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

    if (!opt_.out_dir.empty()) {
        trace::write_actions_jsonl(opt_.out_dir + "/actions.jsonl", result.actions);
        trace::write_summary(opt_.out_dir + "/summary.json", result);
    }
    return result;
}

}  // namespace

RunResult run_scenario(const scenario::ScenarioSpec& spec, const RunOptions& opt) {
    spec.validate();
    Sim sim(spec, opt);
    return sim.run();
}

}  // namespace migsim::engine
