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
#include "migsim/workload.hpp"

#include <cmath>

namespace migsim::workload {

namespace {

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

std::mt19937_64 make_substream(uint64_t seed, const std::string& name, StreamPurpose purpose) {
    uint64_t mixed = splitmix64(seed);
    mixed = splitmix64(mixed ^ fnv1a(name));
    mixed = splitmix64(mixed ^ static_cast<uint64_t>(purpose));
    return std::mt19937_64(mixed);
}

bool InterferenceSchedule::active(double t_s) const {
    switch (kind) {
        case Kind::always:
            return true;
        case Kind::square_wave: {
            double phase = std::fmod(t_s - offset_s, period_s);
            if (phase < 0.0) phase += period_s;
            return phase < duty * period_s;
        }
        case Kind::phases:
            for (const auto& p : phases) {
                if (t_s >= p.start_s && t_s < p.end_s) return true;
            }
            return false;
    }
    return true;
}

bool InterferenceSchedule::active_within(double t0_s, double t1_s) const {
    if (t1_s < t0_s) return false;
    switch (kind) {
        case Kind::always:
            return true;
        case Kind::square_wave: {
            if (duty <= 0.0) return false;
            if (t1_s - t0_s >= period_s * (1.0 - duty)) return true;
            // Interval shorter than the gap: active iff an on-phase start or
            // either endpoint lands inside it.
            if (active(t0_s) || active(t1_s)) return true;
            const double k = std::ceil((t0_s - offset_s) / period_s);
            const double next_on = offset_s + k * period_s;
            return next_on >= t0_s && next_on <= t1_s;
        }
        case Kind::phases:
            for (const auto& p : phases) {
                if (p.end_s > t0_s && p.start_s <= t1_s) return true;
            }
            return false;
    }
    return true;
}

void InterferenceSchedule::validate() const {
    if (kind == Kind::square_wave) {
        if (period_s <= 0.0) throw model::ConfigError("square_wave schedule needs period > 0");
        if (duty < 0.0 || duty > 1.0) throw model::ConfigError("square_wave duty must lie in [0,1]");
    }
    if (kind == Kind::phases) {
        for (const auto& p : phases) {
            if (p.end_s <= p.start_s) throw model::ConfigError("schedule phase must have end > start");
        }
    }
}

ArrivalGen::ArrivalGen(const model::TenantSpec& spec, uint64_t seed)
    : spec_(spec),
      arrivals_(make_substream(seed, spec.id, StreamPurpose::arrivals)),
      sizes_(make_substream(seed, spec.id, StreamPurpose::transfer_size)),
      service_(make_substream(seed, spec.id, StreamPurpose::service)),
      noise_(make_substream(seed, spec.id, StreamPurpose::noise)) {
    const double cv = spec.arrival_cv;
    if (cv <= 0.0) {
        deterministic_ = true;
    } else {
        gamma_shape_ = 1.0 / (cv * cv);
        gamma_scale_ = 1.0 / (spec.arrival_rate_hz * gamma_shape_);
    }
    double acc = 0.0;
    for (const auto& e : spec.transfer_mix) {
        acc += e.weight;
        mix_cdf_.push_back(acc);
    }
    if (spec.service_cv > 0.0) {
        // Lognormal with mean 1: sigma^2 = ln(1 + cv^2), mu = -sigma^2/2.
        const double s2 = std::log(1.0 + spec.service_cv * spec.service_cv);
        service_sigma_ = std::sqrt(s2);
        service_mu_ = -0.5 * s2;
    }
}

Arrival ArrivalGen::next() {
    Arrival a;
    if (deterministic_) {
        clock_s_ += 1.0 / spec_.arrival_rate_hz;
    } else {
        std::gamma_distribution<double> gap(gamma_shape_, gamma_scale_);
        clock_s_ += gap(arrivals_);
    }
    a.t_s = clock_s_;

    if (!mix_cdf_.empty()) {
        std::uniform_real_distribution<double> u(0.0, mix_cdf_.back());
        const double pick = u(sizes_);
        size_t idx = 0;
        while (idx + 1 < mix_cdf_.size() && pick >= mix_cdf_[idx]) ++idx;
        a.transfer_bytes = spec_.transfer_mix[idx].bytes;
    }

    if (service_sigma_ > 0.0) {
        std::lognormal_distribution<double> mult(service_mu_, service_sigma_);
        a.service_mult = mult(service_);
    }

    if (spec_.noise_mean_ms > 0.0) {
        std::exponential_distribution<double> eps(1.0 / spec_.noise_mean_ms);
        a.noise_ms = eps(noise_);
    }
    return a;
}

std::vector<Arrival> generate_arrivals(const model::TenantSpec& spec, uint64_t seed, double horizon_s,
                                       const InterferenceSchedule& schedule) {
    schedule.validate();
    ArrivalGen gen(spec, seed);
    std::vector<Arrival> out;
    for (;;) {
        Arrival a = gen.next();
        if (a.t_s >= horizon_s) break;
        if (schedule.active(a.t_s)) out.push_back(a);
    }
    return out;
}

model::TenantSpec workload_preset(const std::string& name) {
    using model::TenantClass;
    model::TenantSpec t;
    if (name == "t1-inference") {
        t.id = "t1";
        t.tclass = TenantClass::latency_sensitive;
        t.arrival_rate_hz = 40.0;
        t.arrival_cv = 1.3;
        t.transfer_mix = {{2e6, 0.70}, {8e6, 0.25}, {24e6, 0.05}};
        t.base_compute_ms = 2.2;
        t.service_cv = 0.28;
        t.slo_tail_ms = 15.0;
        t.weight = 1.0;
        t.pcie_cap_Bps = 0.0;
        t.host_io_Bps = 20e6;
        t.sm_demand = 0.9;
        t.noise_mean_ms = 0.15;
    } else if (name == "t2-etl") {
        t.id = "t2";
        t.tclass = TenantClass::bandwidth_heavy;
        t.arrival_rate_hz = 8.0;
        t.arrival_cv = 1.0;
        t.transfer_mix = {{1.2e9, 0.85}, {2.4e9, 0.15}};
        t.base_compute_ms = 8.0;
        t.service_cv = 0.4;
        t.slo_tail_ms = 30000.0;
        t.weight = 4.0;
        t.pcie_cap_Bps = 9.5e9;
        t.host_io_Bps = 450e6;
        t.sm_demand = 0.15;
        t.noise_mean_ms = 0.0;
    } else if (name == "t3-train") {
        t.id = "t3";
        t.tclass = TenantClass::compute_heavy;
        t.arrival_rate_hz = 3.0;
        t.arrival_cv = 1.0;
        t.transfer_mix = {{4e6, 1.0}};
        t.base_compute_ms = 30.0;
        t.service_cv = 0.3;
        t.slo_tail_ms = 30000.0;
        t.weight = 1.0;
        t.pcie_cap_Bps = 1e9;
        t.host_io_Bps = 50e6;
        t.sm_demand = 0.6;
        t.noise_mean_ms = 0.0;
    } else if (name == "llm-ttft") {
        t.id = "llm";
        t.tclass = TenantClass::latency_sensitive;
        t.arrival_rate_hz = 3.0;
        t.arrival_cv = 1.2;
        t.transfer_mix = {{1e6, 0.55}, {4e6, 0.30}, {12e6, 0.15}};
        t.base_compute_ms = 52.0;
        t.service_cv = 0.35;
        t.slo_tail_ms = 200.0;
        t.weight = 1.0;
        t.pcie_cap_Bps = 0.0;
        t.host_io_Bps = 30e6;
        t.sm_demand = 0.9;
        t.noise_mean_ms = 0.5;
    } else {
        throw model::ConfigError("unknown workload preset '" + name + "'");
    }
    t.validate();
    return t;
}

std::vector<std::string> workload_preset_names() {
    return {"t1-inference", "t2-etl", "t3-train", "llm-ttft"};
}

}  // namespace migsim::workload
