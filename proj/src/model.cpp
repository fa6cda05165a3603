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
#include "migsim/model.hpp"

#include <algorithm>
#include <cmath>

namespace migsim::model {

const std::vector<MigProfile>& mig_lattice() {
    static const std::vector<MigProfile> lattice = {
        {"1g.10gb", 1, 10.0},
        {"2g.20gb", 2, 20.0},
        {"3g.40gb", 3, 40.0},
        {"4g.40gb", 4, 40.0},
        {"7g.80gb", 7, 80.0},
    };
    return lattice;
}

const MigProfile& mig_profile(const std::string& name) {
    for (const auto& p : mig_lattice()) {
        if (p.name == name) return p;
    }
    throw ConfigError("unknown MIG profile '" + name + "'");
}

int mig_lattice_index(const MigProfile& profile) {
    const auto& lattice = mig_lattice();
    for (size_t i = 0; i < lattice.size(); ++i) {
        if (lattice[i].name == profile.name) return static_cast<int>(i);
    }
    throw ConfigError("unknown MIG profile '" + profile.name + "'");
}

std::optional<MigProfile> mig_lattice_step(const MigProfile& profile, LatticeDirection direction) {
    const auto& lattice = mig_lattice();
    const int idx = mig_lattice_index(profile);
    const int next = direction == LatticeDirection::up ? idx + 1 : idx - 1;
    if (next < 0 || next >= static_cast<int>(lattice.size())) return std::nullopt;
    return lattice[next];
}

void TopologySpec::validate() const {
    if (hosts.empty()) throw ConfigError("topology has no hosts");
    for (size_t h = 0; h < hosts.size(); ++h) {
        const auto& host = hosts[h];
        if (host.pcie_roots.empty()) throw ConfigError("host " + std::to_string(h) + " has no PCIe roots");
        if (host.io_capacity_Bps <= 0.0)
            throw ConfigError("host " + std::to_string(h) + " has non-positive I/O capacity");
        std::set<int> root_ids;
        for (const auto& r : host.pcie_roots) {
            if (r.capacity_Bps <= 0.0)
                throw ConfigError("PCIe root " + std::to_string(r.id) + " has non-positive capacity");
            if (!root_ids.insert(r.id).second)
                throw ConfigError("duplicate PCIe root id " + std::to_string(r.id));
        }
        std::set<int> gpu_ids;
        for (const auto& g : host.gpus) {
            if (!gpu_ids.insert(g.id).second)
                throw ConfigError("duplicate GPU id " + std::to_string(g.id));
            if (!root_ids.count(g.pcie_root_id))
                throw ConfigError("GPU " + std::to_string(g.id) + " references unknown PCIe root " +
                                  std::to_string(g.pcie_root_id));
            if (g.numa_id < 0 || g.numa_id >= host.numa_domains)
                throw ConfigError("GPU " + std::to_string(g.id) + " references unknown NUMA domain " +
                                  std::to_string(g.numa_id));
            if (g.total_slices <= 0)
                throw ConfigError("GPU " + std::to_string(g.id) + " has non-positive slice count");
        }
    }
}

const GpuSpec& TopologySpec::gpu(int host, int gpu_id) const {
    for (const auto& g : hosts.at(host).gpus) {
        if (g.id == gpu_id) return g;
    }
    throw ConfigError("unknown GPU " + std::to_string(gpu_id) + " on host " + std::to_string(host));
}

const PcieRootSpec& TopologySpec::pcie_root(int host, int root_id) const {
    for (const auto& r : hosts.at(host).pcie_roots) {
        if (r.id == root_id) return r;
    }
    throw ConfigError("unknown PCIe root " + std::to_string(root_id) + " on host " + std::to_string(host));
}

const char* to_string(TenantClass c) {
    switch (c) {
        case TenantClass::latency_sensitive: return "latency_sensitive";
        case TenantClass::bandwidth_heavy: return "bandwidth_heavy";
        case TenantClass::compute_heavy: return "compute_heavy";
    }
    return "?";
}

const char* to_string(TenantStatus s) {
    switch (s) {
        case TenantStatus::admitted: return "admitted";
        case TenantStatus::queued: return "queued";
        case TenantStatus::rejected: return "rejected";
    }
    return "?";
}

TenantClass tenant_class_from_string(const std::string& s) {
    if (s == "latency_sensitive") return TenantClass::latency_sensitive;
    if (s == "bandwidth_heavy") return TenantClass::bandwidth_heavy;
    if (s == "compute_heavy") return TenantClass::compute_heavy;
    throw ConfigError("unknown tenant class '" + s + "'");
}

double TenantSpec::mean_transfer_bytes() const {
    double total_w = 0.0, acc = 0.0;
    for (const auto& e : transfer_mix) {
        total_w += e.weight;
        acc += e.weight * e.bytes;
    }
    return total_w > 0.0 ? acc / total_w : 0.0;
}

void TenantSpec::validate() const {
    if (id.empty()) throw ConfigError("tenant id is empty");
    if (arrival_rate_hz <= 0.0) throw ConfigError("tenant " + id + ": arrival rate must be > 0");
    if (arrival_cv < 0.0) throw ConfigError("tenant " + id + ": arrival_cv must be >= 0");
    if (base_compute_ms <= 0.0) throw ConfigError("tenant " + id + ": base_compute_ms must be > 0");
    if (service_cv < 0.0) throw ConfigError("tenant " + id + ": service_cv must be >= 0");
    if (weight <= 0.0) throw ConfigError("tenant " + id + ": weight must be > 0");
    if (pcie_cap_Bps < 0.0) throw ConfigError("tenant " + id + ": pcie_cap must be >= 0");
    if (sm_demand < 0.0 || sm_demand > 1.0) throw ConfigError("tenant " + id + ": sm_demand must be in [0,1]");
    if (noise_mean_ms < 0.0) throw ConfigError("tenant " + id + ": noise_mean_ms must be >= 0");
    double mix_w = 0.0;
    for (const auto& e : transfer_mix) {
        if (e.bytes < 0.0) throw ConfigError("tenant " + id + ": transfer bytes must be >= 0");
        if (e.weight < 0.0) throw ConfigError("tenant " + id + ": transfer mix weight must be >= 0");
        mix_w += e.weight;
    }
    if (!transfer_mix.empty() && mix_w <= 0.0)
        throw ConfigError("tenant " + id + ": transfer mix has zero total weight");
}

double TenantState::effective_pcie_cap_Bps() const {
    const double base = spec ? spec->pcie_cap_Bps : 0.0;
    if (!io_throttle_Bps) return base;
    return base > 0.0 ? std::min(base, *io_throttle_Bps) : *io_throttle_Bps;
}

void validate_slice_packing(const GpuSpec& gpu, const std::vector<const TenantState*>& tenants_on_gpu) {
    if (!gpu.mig_enabled) return;
    int used = 0;
    for (size_t i = 0; i < tenants_on_gpu.size(); ++i) {
        const auto& a = *tenants_on_gpu[i];
        if (a.status != TenantStatus::admitted) continue;
        const auto& r = a.placement.slices;
        if (r.first < 0 || r.count <= 0 || r.end() > gpu.total_slices)
            throw ConfigError("tenant " + a.spec->id + ": slice range [" + std::to_string(r.first) + "," +
                              std::to_string(r.end()) + ") outside GPU " + std::to_string(gpu.id));
        used += r.count;
        for (size_t j = i + 1; j < tenants_on_gpu.size(); ++j) {
            const auto& b = *tenants_on_gpu[j];
            if (b.status != TenantStatus::admitted) continue;
            if (r.overlaps(b.placement.slices))
                throw ConfigError("tenants " + a.spec->id + " and " + b.spec->id +
                                  " overlap on GPU " + std::to_string(gpu.id));
        }
    }
    if (used > gpu.total_slices)
        throw ConfigError("GPU " + std::to_string(gpu.id) + " slice packing exceeds total_slices");
}

void ControllerConfig::validate() const {
    if (sample_interval_s < 1.0 || sample_interval_s > 5.0)
        throw ConfigError("sample_interval_s must lie in [1,5]");
    if (tail_threshold_ms <= 0.0) throw ConfigError("tail_threshold_ms must be > 0");
    if (persistence_windows < 1) throw ConfigError("persistence_windows must be >= 1");
    if (dwell_obs < 1) throw ConfigError("dwell_obs must be >= 1");
    if (cooldown_obs < 0) throw ConfigError("cooldown_obs must be >= 0");
    if (ema_alpha <= 0.0 || ema_alpha > 1.0) throw ConfigError("ema_alpha must be in (0,1]");
    if (hysteresis_clear_ratio <= 0.0 || hysteresis_clear_ratio >= 1.0)
        throw ConfigError("hysteresis_clear_ratio must be in (0,1)");
    if (relax_stability_ratio <= 0.0 || relax_stability_ratio >= 1.0)
        throw ConfigError("relax_stability_ratio must be in (0,1)");
    if (validation_obs < 1) throw ConfigError("validation_obs must be >= 1");
    if (rollback_regress_ratio < 0.0) throw ConfigError("rollback_regress_ratio must be >= 0");
    if (warmup_s < 0.0) throw ConfigError("warmup_s must be >= 0");
    if (move_futility_ratio <= 0.0) throw ConfigError("move_futility_ratio must be > 0");
    if (guardrail_io_throttle_Bps < kIoThrottleMinBps || guardrail_io_throttle_Bps > kIoThrottleMaxBps)
        throw ConfigError("guardrail_io_throttle outside the 100-500 MB/s bounds");
    if (guardrail_mps_quota_pct < kMpsQuotaMinPct || guardrail_mps_quota_pct > kMpsQuotaMaxPct)
        throw ConfigError("guardrail_mps_quota outside the 50-100% bounds");
    if (throttle_duration_s <= 0.0 || quota_duration_s <= 0.0)
        throw ConfigError("guardrail durations must be > 0");
}

double effective_service_rate(const MigProfile& profile, const TenantSpec& spec) {
    const double frac = profile.sm_fraction();
    if (frac <= 0.0) throw ConfigError("profile " + profile.name + " has non-positive sm_fraction");
    return frac / (spec.base_compute_ms / 1000.0);
}

}  // namespace migsim::model
