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

#include <optional>
#include <string>
#include <vector>

#include "migsim/model.hpp"

namespace migsim::fabric {

/// One tenant's demand on a PS fabric epoch.
struct FlowRequest {
    std::string tenant;
    double weight = 1.0;
    std::optional<double> cap_Bps;  // g_i; nullopt = uncapped
};

/// Result of one allocation: b_i per tenant plus unallocated residual.
/// Sum of grants + residual equals B (1e-9 relative).
struct BandwidthGrant {
    struct Entry {
        std::string tenant;
        double bandwidth_Bps = 0.0;
    };
    std::vector<Entry> grants;
    double residual_Bps = 0.0;
    double capacity_Bps = 0.0;

    double grant_for(const std::string& tenant) const;
};

/// PS allocation: share_i = B*w_i/sum(w), b_i = min(share_i, g_i).
/// Leftover from capped tenants is not redistributed unless `water_filling`
/// is set, in which case it is re-shared among unsaturated tenants by weight.
BandwidthGrant allocate_bandwidth(const std::vector<FlowRequest>& active, double capacity_Bps,
                                  bool water_filling = false);

/// Per-request latency decomposition: total = compute + transfer + noise, exact.
struct LatencySample {
    std::string tenant;
    double compute_ms = 0.0;
    double transfer_ms = 0.0;
    double noise_ms = 0.0;
    double total_ms = 0.0;
    double timestamp_s = 0.0;
};

/// Raised when a transfer is requested with zero bandwidth: the request
/// stalls until bandwidth reappears, it is never dropped.
class StarvationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// L = c + (s/b)*1000 + eps, all in ms.
LatencySample transfer_latency(const model::TenantSpec& spec, double transfer_bytes, double grant_Bps,
                               double compute_ms, double noise_ms, double timestamp_s = 0.0);

/// Raised by kingman_wait when rho >= 1; the caller must treat the queue
/// as unstable.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// E[Wq] = rho/(1-rho) * (c_a^2 + c_s^2)/2 * E[S].  Units follow E[S].
double kingman_wait(double rho, double arrival_cv, double service_cv, double mean_service);

struct StabilityResult {
    bool stable = true;
    std::string reason;  // names the violated condition when unstable
};

/// Stable iff sum(g_j) < B and lambda < mu.
StabilityResult check_stability(const std::vector<double>& caps_Bps, double capacity_Bps,
                                double arrival_rate_hz, double service_rate_hz);

}  // namespace migsim::fabric
