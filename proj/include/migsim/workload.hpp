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
#include <random>
#include <string>
#include <vector>

#include "migsim/model.hpp"

namespace migsim::workload {

/// Purpose tag for a deterministic RNG substream. Streams for different
/// purposes never interleave, so adding draws to one purpose leaves every
/// other purpose's sequence untouched.
enum class StreamPurpose : uint64_t {
    arrivals = 1,
    transfer_size = 2,
    service = 3,
    noise = 4,
    pause = 5,
    irq = 6,
};

/// Independent mt19937_64 substream keyed by (seed, name, purpose).
std::mt19937_64 make_substream(uint64_t seed, const std::string& name, StreamPurpose purpose);

/// One generated request. Every random quantity is drawn at generation time
/// so paired runs (same seed, different controller policy) see an identical
/// offered load.
struct Arrival {
    double t_s = 0.0;
    double transfer_bytes = 0.0;
    double service_mult = 1.0;  // lognormal, mean 1, cv = service_cv
    double noise_ms = 0.0;      // exponential, mean = noise_mean_ms
};

/// On/off activity pattern.
///   always:      active everywhere
///   square_wave: active on [k*period, k*period + duty*period)
///   phases:      active on each [start, end)
struct InterferenceSchedule {
    enum class Kind { always, square_wave, phases };
    struct Phase {
        double start_s = 0.0;
        double end_s = 0.0;
    };

    Kind kind = Kind::always;
    double period_s = 0.0;  // square_wave
    double duty = 1.0;      // square_wave, fraction of the period spent active
    double offset_s = 0.0;  // square_wave phase shift
    std::vector<Phase> phases;

    bool active(double t_s) const;
    /// True if any instant of [t0_s, t1_s] is active. Conservative sampling
    /// at phase edges plus both endpoints; exact for the supported kinds.
    bool active_within(double t0_s, double t1_s) const;
    void validate() const;
};

/// Gamma-renewal arrival generator: interarrival Gamma(k=1/cv^2, theta=1/(lambda*k)),
/// mean 1/lambda. cv=0 degenerates to a deterministic clock, cv=1 to Poisson.
class ArrivalGen {
public:
    ArrivalGen(const model::TenantSpec& spec, uint64_t seed);

    /// Next request strictly after the previous one. Size/service/noise are
    /// drawn even for arrivals later discarded by a schedule, keeping the
    /// stream aligned across schedule edits.
    Arrival next();

private:
    const model::TenantSpec& spec_;
    std::mt19937_64 arrivals_;
    std::mt19937_64 sizes_;
    std::mt19937_64 service_;
    std::mt19937_64 noise_;
    double clock_s_ = 0.0;
    double gamma_shape_ = 1.0;
    double gamma_scale_ = 1.0;
    bool deterministic_ = false;
    std::vector<double> mix_cdf_;
    double service_mu_ = 0.0;     // lognormal location for mean-1 multiplier
    double service_sigma_ = 0.0;
};

/// All arrivals of one tenant in [0, horizon), honoring `schedule` by
/// thinning (off-phase arrivals are dropped, the stream itself never skips).
std::vector<Arrival> generate_arrivals(const model::TenantSpec& spec, uint64_t seed, double horizon_s,
                                       const InterferenceSchedule& schedule = {});

/// Named tenant templates: "t1-inference", "t2-etl", "t3-train", "llm-ttft".
/// Scenario files start from a preset and override fields.
model::TenantSpec workload_preset(const std::string& name);
std::vector<std::string> workload_preset_names();

}  // namespace migsim::workload
