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
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace migsim::model {

/// Raised for invalid scenario/config input. `where` carries "file:line"
/// when the problem comes from a scenario document.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg, std::string where = {})
        : std::runtime_error(where.empty() ? msg : where + ": " + msg), where_(std::move(where)) {}
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

// ---------------------------------------------------------------------------
// MIG profile lattice
// ---------------------------------------------------------------------------

/// One rung of the device's isolation lattice. Profiles are totally ordered
/// by slice count; sm_fraction = slices / total_slices of the device.
struct MigProfile {
    std::string name;   // e.g. "1g.10gb"
    int slices = 0;     // in {1,2,3,4,7} for the default device model
    double mem_gb = 0.0;

    double sm_fraction(int total_slices = 7) const {
        return static_cast<double>(slices) / static_cast<double>(total_slices);
    }
    bool operator==(const MigProfile& o) const { return name == o.name; }
};

enum class LatticeDirection { up, down };

/// The A100 lattice: 1g.10gb, 2g.20gb, 3g.40gb, 4g.40gb, 7g.80gb.
const std::vector<MigProfile>& mig_lattice();

/// Look up a profile by name. Throws ConfigError for unknown names.
const MigProfile& mig_profile(const std::string& name);

/// Adjacent profile in slice order, or nullopt at the lattice boundary.
std::optional<MigProfile> mig_lattice_step(const MigProfile& profile, LatticeDirection direction);

/// Index of `profile` within the lattice (0 = smallest).
int mig_lattice_index(const MigProfile& profile);

// ---------------------------------------------------------------------------
// Cluster topology
// ---------------------------------------------------------------------------

struct PcieRootSpec {
    int id = 0;
    double capacity_Bps = 0.0;  // shared fabric capacity B, bytes/s
};

struct GpuSpec {
    int id = 0;
    int pcie_root_id = 0;
    int numa_id = 0;
    int core_group = 0;       // adjacent CPU core group (IRQ locality)
    int total_slices = 7;
    bool mig_enabled = true;  // false: tenants share the whole device via MPS
};

struct HostSpec {
    std::vector<GpuSpec> gpus;
    int numa_domains = 1;
    std::vector<PcieRootSpec> pcie_roots;
    std::set<int> irq_hot_core_groups;
    double io_capacity_Bps = 1e9;  // shared block-I/O bandwidth of the host
};

struct TopologySpec {
    std::vector<HostSpec> hosts;

    /// Checks referential integrity (GPU -> root/NUMA) and capacity > 0.
    /// Throws ConfigError on violation.
    void validate() const;

    const GpuSpec& gpu(int host, int gpu_id) const;
    const PcieRootSpec& pcie_root(int host, int root_id) const;
};

// ---------------------------------------------------------------------------
// Tenants
// ---------------------------------------------------------------------------

enum class TenantClass { latency_sensitive, bandwidth_heavy, compute_heavy };

const char* to_string(TenantClass c);
TenantClass tenant_class_from_string(const std::string& s);

/// One component of the request transfer-size mixture.
struct TransferMixEntry {
    double bytes = 0.0;
    double weight = 0.0;
};

struct TenantSpec {
    std::string id;
    TenantClass tclass = TenantClass::latency_sensitive;
    double arrival_rate_hz = 0.0;   // lambda, requests/s
    double arrival_cv = 1.0;        // c_a
    std::vector<TransferMixEntry> transfer_mix;  // s_i, bytes/request
    double base_compute_ms = 0.0;   // c_base at the full-GPU profile
    double service_cv = 0.0;        // c_s
    double slo_tail_ms = 0.0;       // tau
    double weight = 1.0;            // w_i, PS share weight
    double pcie_cap_Bps = 0.0;      // g_default: demand cap when active (0 = uncapped)
    double host_io_Bps = 0.0;       // block-I/O demand when active
    double sm_demand = 1.0;         // occupancy of its own slice while computing, [0,1]
    double noise_mean_ms = 0.0;     // mean of the additive per-request noise term

    double mean_transfer_bytes() const;
    void validate() const;
};

struct SliceRange {
    int first = 0;
    int count = 0;
    int end() const { return first + count; }
    bool overlaps(const SliceRange& o) const { return first < o.end() && o.first < end(); }
};

struct Placement {
    int host = 0;
    int gpu = 0;
    SliceRange slices;
};

enum class TenantStatus { admitted, queued, rejected };

const char* to_string(TenantStatus s);

// Table 1 guardrail bounds.
inline constexpr double kMpsQuotaMinPct = 50.0;
inline constexpr double kMpsQuotaMaxPct = 100.0;
inline constexpr double kIoThrottleMinBps = 100e6;  // 100 MB/s
inline constexpr double kIoThrottleMaxBps = 500e6;  // 500 MB/s

struct TenantState {
    const TenantSpec* spec = nullptr;
    Placement placement;
    MigProfile profile;
    double mps_quota_pct = 100.0;
    std::optional<double> io_throttle_Bps;  // bounded cgroup-style throttle
    std::optional<double> paused_until_s;
    TenantStatus status = TenantStatus::queued;
    bool cpu_pinned = false;               // affinity moved away from IRQ-hot cores

    /// Effective PCIe cap: min(spec cap, active throttle); 0 means uncapped.
    double effective_pcie_cap_Bps() const;
};

/// Slice-packing check for one GPU: ranges of admitted tenants must fit
/// within total_slices and must not overlap (MIG-enabled devices only).
void validate_slice_packing(const GpuSpec& gpu, const std::vector<const TenantState*>& tenants_on_gpu);

// ---------------------------------------------------------------------------
// Controller configuration (defaults from the key-parameter table)
// ---------------------------------------------------------------------------

struct ControllerConfig {
    bool enabled = true;
    bool enable_mig = true;
    bool enable_placement = true;
    bool enable_guardrails = true;

    double tail_threshold_ms = 15.0;   // tau
    int persistence_windows = 3;       // Y
    int dwell_obs = 256;
    int cooldown_obs = 128;
    double sample_interval_s = 2.0;    // Delta, must lie in [1, 5]
    double warmup_s = 60.0;            // no actions until the signal matures
    double move_futility_ratio = 2.0;  // beyond this multiple of the trigger, grow instead of move
    double throttle_duration_s = 30.0; // Z (I/O throttle)
    double quota_duration_s = 30.0;    // Z for MPS quota guardrails
    double ema_alpha = 0.2;
    double hysteresis_clear_ratio = 0.9;
    double relax_stability_ratio = 0.8;   // psi: relax zone is p99 < psi*tau
    double relax_score_threshold = 0.3;   // theta_relax
    int validation_obs = 64;              // V
    double rollback_regress_ratio = 0.05; // delta

    // Diagnosis thresholds (scenario-overridable, swept in E3).
    double diag_pcie_util_threshold = 0.8;  // theta_pcie
    double diag_host_io_threshold = 0.8;    // theta_io
    double diag_sm_util_threshold = 0.7;    // theta_sm

    double move_margin = 0.25;
    int admission_queue_timeout_epochs = 10;

    // Values applied by guardrail actions.
    double guardrail_io_throttle_Bps = 250e6;
    double guardrail_mps_quota_pct = 50.0;

    double irq_lookback_s = 30.0;
    double throughput_floor = 0.95;  // throughput_ok(): T = lambda*(1-M) >= floor*lambda

    void validate() const;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Service rate of `spec` when granted `profile`:
/// mu = sm_fraction / (base_compute in seconds). Strictly increasing in slices.
double effective_service_rate(const MigProfile& profile, const TenantSpec& spec);

}  // namespace migsim::model
