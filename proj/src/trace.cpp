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
#include "migsim/trace.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace migsim::trace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string request_row(const engine::CompletionRecord& r) {
    std::string row;
    row.reserve(128);
    row += fmt_double(r.done_s);
    row += ',';
    row += r.tenant;
    row += ',';
    row += std::to_string(r.seq);
    row += ',';
    row += fmt_double(r.arrived_s);
    row += ',';
    row += fmt_double(r.total_ms);
    row += ',';
    row += fmt_double(r.compute_ms);
    row += ',';
    row += fmt_double(r.transfer_ms);
    row += ',';
    row += fmt_double(r.noise_ms);
    row += ',';
    row += fmt_double(r.transfer_bytes);
    return row;
}

std::string counter_row(double t_s, const std::string& tenant, uint64_t completed, size_t queue_len,
                        double window_p99_ms, double grant_Bps, const std::string& profile, int host,
                        int gpu) {
    std::string row;
    row.reserve(128);
    row += fmt_double(t_s);
    row += ',';
    row += tenant;
    row += ',';
    row += std::to_string(completed);
    row += ',';
    row += std::to_string(queue_len);
    row += ',';
    row += fmt_double(window_p99_ms);
    row += ',';
    row += fmt_double(grant_Bps);
    row += ',';
    row += profile;
    row += ',';
    row += std::to_string(host);
    row += ',';
    row += std::to_string(gpu);
    return row;
}

std::string fabric_row(double t_s, int host, int root, double offered_Bps, double capacity_Bps,
                       size_t active_flows, double backlog_bytes) {
    std::string row;
    row.reserve(96);
    row += fmt_double(t_s);
    row += ',';
    row += std::to_string(host);
    row += ',';
    row += std::to_string(root);
    row += ',';
    row += fmt_double(offered_Bps);
    row += ',';
    row += fmt_double(capacity_Bps);
    row += ',';
    row += std::to_string(active_flows);
    row += ',';
    row += fmt_double(backlog_bytes);
    return row;
}

nlohmann::ordered_json action_json(const control::ActionRecord& r) {
    nlohmann::ordered_json j;
    j["seq"] = r.seq;
    j["t_s"] = r.t_s;
    j["tenant"] = r.tenant;
    j["target"] = r.target;
    j["kind"] = control::to_string(r.kind);
    j["diagnosis"] = control::to_string(r.diagnosis);
    j["p99_pre_ms"] = r.p99_pre_ms;
    j["ema_p99_ms"] = r.ema_p99_ms;
    j["breach_windows"] = r.breach_windows;
    j["obs_since_prev"] = r.obs_since_prev;
    if (r.kind == control::ActionKind::guardrail_io_throttle) j["throttle_Bps"] = r.throttle_Bps;
    if (r.kind == control::ActionKind::guardrail_mps_quota) j["quota_pct"] = r.quota_pct;
    if (r.pause_s > 0.0) j["pause_s"] = r.pause_s;
    if (r.rolled_back_seq >= 0) j["rolled_back_seq"] = r.rolled_back_seq;
    if (!r.detail.empty()) j["detail"] = r.detail;
    return j;
}

nlohmann::ordered_json summary_json(const engine::RunResult& result) {
    nlohmann::ordered_json j;
    j["scenario"] = result.scenario_name;
    j["seed"] = result.seed;
    j["duration_s"] = result.duration_s;
    j["measure_start_s"] = result.measure_start_s;

    nlohmann::ordered_json tenants = nlohmann::ordered_json::object();
    for (const auto& [id, s] : result.tenants) {
        nlohmann::ordered_json t;
        t["completed_total"] = s.completed_total;
        t["completed_window"] = s.completed_window;
        t["mean_ms"] = s.mean_ms;
        t["p50_ms"] = s.p50_ms;
        t["p95_ms"] = s.p95_ms;
        t["p99_ms"] = s.p99_ms;
        t["miss_rate"] = s.miss_rate;
        t["throughput_hz"] = s.throughput_hz;
        t["slo_tail_ms"] = s.slo_tail_ms;
        tenants[id] = std::move(t);
    }
    j["tenants"] = std::move(tenants);

    nlohmann::ordered_json ends = nlohmann::ordered_json::object();
    for (const auto& [id, e] : result.end_states) {
        nlohmann::ordered_json t;
        t["host"] = e.placement.host;
        t["gpu"] = e.placement.gpu;
        t["first_slice"] = e.placement.slices.first;
        t["profile"] = e.profile;
        t["claim_Bps"] = e.claim_Bps;
        t["status"] = model::to_string(e.status);
        t["cpu_pinned"] = e.cpu_pinned;
        ends[id] = std::move(t);
    }
    j["end_states"] = std::move(ends);

    std::map<std::string, std::pair<int, double>> pause_kinds;  // kind -> (count, sum)
    double pause_max = 0.0;
    for (const auto& p : result.pauses) {
        auto& agg = pause_kinds[control::to_string(p.kind)];
        agg.first += 1;
        agg.second += p.duration_s;
        pause_max = std::max(pause_max, p.duration_s);
    }
    nlohmann::ordered_json pauses = nlohmann::ordered_json::object();
    pauses["count"] = result.pauses.size();
    pauses["max_s"] = pause_max;
    nlohmann::ordered_json by_kind = nlohmann::ordered_json::object();
    for (const auto& [kind, agg] : pause_kinds) {
        nlohmann::ordered_json k;
        k["count"] = agg.first;
        k["mean_s"] = agg.second / agg.first;
        by_kind[kind] = std::move(k);
    }
    pauses["by_kind"] = std::move(by_kind);
    j["pauses"] = std::move(pauses);

    std::map<std::string, int> action_counts;
    for (const auto& a : result.actions) action_counts[control::to_string(a.kind)] += 1;
    nlohmann::ordered_json actions = nlohmann::ordered_json::object();
    actions["total"] = result.actions.size();
    for (const auto& [kind, n] : action_counts) actions[kind] = n;
    j["actions"] = std::move(actions);

    nlohmann::ordered_json stab;
    stab["analytic_oversubscribed"] = result.stability.analytic_oversubscribed;
    stab["unbounded_growth"] = result.stability.unbounded_growth;
    stab["notes"] = result.stability.notes;
    j["stability"] = std::move(stab);
    return j;
}

void write_actions_jsonl(const std::string& path, const std::vector<control::ActionRecord>& actions) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    for (const auto& a : actions) out << action_json(a).dump() << "\n";
}

void write_summary(const std::string& path, const engine::RunResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << summary_json(result).dump(2) << "\n";
}

}  // namespace migsim::trace
