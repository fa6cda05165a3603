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

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

namespace migsim::telemetry {

/// Sliding window of the last `capacity` latency samples with exact
/// nearest-rank quantile queries: q-quantile of n sorted samples is the
/// element at 1-based index ceil(q*n).
class TailWindow {
public:
    explicit TailWindow(size_t capacity);

    void push(double latency_ms);

    /// Nearest-rank quantile over the current window; nullopt when empty.
    std::optional<double> quantile(double q) const;

    size_t size() const { return samples_.size(); }
    size_t capacity() const { return capacity_; }
    bool empty() const { return samples_.empty(); }

private:
    size_t capacity_;
    std::deque<double> samples_;
    mutable std::vector<double> sorted_;
    mutable bool sorted_valid_ = false;
};

/// Push one sample and return the nearest-rank q-quantile of the updated
/// window.
std::optional<double> push_and_quantile(TailWindow& window, double latency_ms, double q);

/// EMA-smoothed signal with two-level hysteresis. State moves clear ->
/// triggered when the smoothed value exceeds the trigger level and back only
/// below the clear level (clear < trigger).
class SmoothedSignal {
public:
    enum class State { clear, triggered };

    SmoothedSignal(double alpha, double trigger_level, double clear_level);

    /// ema' = alpha*sample + (1-alpha)*ema; first sample seeds the EMA.
    /// Returns the updated EMA value.
    double update(double sample);

    std::optional<double> value() const { return ema_; }
    State state() const { return state_; }
    double trigger_level() const { return trigger_; }
    double clear_level() const { return clear_; }
    void set_levels(double trigger_level, double clear_level);

private:
    double alpha_;
    double trigger_;
    double clear_;
    std::optional<double> ema_;
    State state_ = State::clear;
};

/// SLO bookkeeping over a sliding window: miss-rate M = Pr(L > tau) and the
/// completion count backing the throughput signal T = lambda * (1 - M).
class SloAccount {
public:
    SloAccount(size_t window, double tau_ms);

    void record(double latency_ms);

    /// Fraction of windowed samples with latency > tau; nullopt when empty.
    std::optional<double> miss_rate() const;

    /// Miss-rate against an explicit threshold (window contents unchanged).
    std::optional<double> miss_rate(double tau_ms) const;

    /// Normalized throughput T/lambda = 1 - M; nullopt when empty.
    std::optional<double> normalized_throughput() const;

    size_t completed() const { return completed_; }
    double tau_ms() const { return tau_ms_; }
    size_t window_size() const { return window_.size(); }

private:
    size_t capacity_;
    double tau_ms_;
    std::deque<double> window_;
    size_t misses_ = 0;
    size_t completed_ = 0;
};

}  // namespace migsim::telemetry
