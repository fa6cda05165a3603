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
#include "migsim/fabric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace migsim::fabric {

double BandwidthGrant::grant_for(const std::string& tenant) const {
    for (const auto& e : grants) {
        if (e.tenant == tenant) return e.bandwidth_Bps;
    }
    return 0.0;
}

BandwidthGrant allocate_bandwidth(const std::vector<FlowRequest>& active, double capacity_Bps,
                                  bool water_filling) {
    if (capacity_Bps <= 0.0) throw model::ConfigError("fabric capacity must be > 0");
    BandwidthGrant out;
    out.capacity_Bps = capacity_Bps;
    if (active.empty()) {
        out.residual_Bps = capacity_Bps;
        return out;
    }

    double weight_sum = 0.0;
    for (const auto& f : active) {
        if (f.weight <= 0.0) throw model::ConfigError("PS weights must be > 0");
        if (f.cap_Bps && *f.cap_Bps < 0.0) throw model::ConfigError("caps must be nonnegative");
        weight_sum += f.weight;
    }

    out.grants.reserve(active.size());
    double granted = 0.0;
    for (const auto& f : active) {
        const double share = capacity_Bps * f.weight / weight_sum;
        const double b = f.cap_Bps ? std::min(share, *f.cap_Bps) : share;
        out.grants.push_back({f.tenant, b});
        granted += b;
    }

    if (water_filling) {
        // Re-share residual among tenants whose cap is not yet saturated,
        // proportionally to weight, until nothing moves.
        double residual = capacity_Bps - granted;
        for (int iter = 0; iter < 64 && residual > 1e-9 * capacity_Bps; ++iter) {
            double open_weight = 0.0;
            for (size_t i = 0; i < active.size(); ++i) {
                const auto& f = active[i];
                if (!f.cap_Bps || out.grants[i].bandwidth_Bps < *f.cap_Bps - 1e-12) open_weight += f.weight;
            }
            if (open_weight <= 0.0) break;
            double moved = 0.0;
            for (size_t i = 0; i < active.size(); ++i) {
                const auto& f = active[i];
                auto& g = out.grants[i].bandwidth_Bps;
                if (f.cap_Bps && g >= *f.cap_Bps - 1e-12) continue;
                double add = residual * f.weight / open_weight;
                if (f.cap_Bps) add = std::min(add, *f.cap_Bps - g);
                g += add;
                moved += add;
            }
            residual -= moved;
            if (moved <= 1e-12 * capacity_Bps) break;
        }
        granted = 0.0;
        for (const auto& g : out.grants) granted += g.bandwidth_Bps;
    }

    out.residual_Bps = capacity_Bps - granted;
    return out;
}

LatencySample transfer_latency(const model::TenantSpec& spec, double transfer_bytes, double grant_Bps,
                               double compute_ms, double noise_ms, double timestamp_s) {
    if (transfer_bytes > 0.0 && grant_Bps <= 0.0)
        throw StarvationError("tenant " + spec.id + ": transfer of " + std::to_string(transfer_bytes) +
                              " bytes with zero bandwidth");
    LatencySample s;
    s.tenant = spec.id;
    s.compute_ms = compute_ms;
    s.transfer_ms = transfer_bytes > 0.0 ? transfer_bytes / grant_Bps * 1000.0 : 0.0;
    s.noise_ms = noise_ms;
    s.total_ms = s.compute_ms + s.transfer_ms + s.noise_ms;
    s.timestamp_s = timestamp_s;
    return s;
}

double kingman_wait(double rho, double arrival_cv, double service_cv, double mean_service) {
    if (rho < 0.0) throw model::ConfigError("rho must be >= 0");
    if (mean_service <= 0.0) throw model::ConfigError("mean service time must be > 0");
    if (rho >= 1.0) throw DivergenceError("rho >= 1: queue diverges");
    return rho / (1.0 - rho) * (arrival_cv * arrival_cv + service_cv * service_cv) / 2.0 * mean_service;
}

StabilityResult check_stability(const std::vector<double>& caps_Bps, double capacity_Bps,
                                double arrival_rate_hz, double service_rate_hz) {
    const double cap_sum = std::accumulate(caps_Bps.begin(), caps_Bps.end(), 0.0);
    if (cap_sum >= capacity_Bps) return {false, "fabric oversubscribed"};
    if (arrival_rate_hz >= service_rate_hz) return {false, "tenant overload"};
    return {true, ""};
}

}  // namespace migsim::fabric
