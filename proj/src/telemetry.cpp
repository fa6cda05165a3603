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
#include "migsim/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace migsim::telemetry {

TailWindow::TailWindow(size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
        throw std::invalid_argument("TailWindow capacity must be positive");
    }
}

void TailWindow::push(double latency_ms) {
    if (samples_.size() == capacity_) {
        samples_.pop_front();
    }
    samples_.push_back(latency_ms);
    sorted_valid_ = false;
}

std::optional<double> TailWindow::quantile(double q) const {
    if (q < 0.0 || q > 1.0) {
        throw std::invalid_argument("quantile q must lie in [0, 1]");
    }
    if (samples_.empty()) {
        return std::nullopt;
    }
    if (!sorted_valid_) {
        sorted_.assign(samples_.begin(), samples_.end());
        std::sort(sorted_.begin(), sorted_.end());
        sorted_valid_ = true;
    }
    const size_t n = sorted_.size();
    // 1-based nearest rank: ceil(q*n), clamped to [1, n] so q=0 reads the min.
    size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    return sorted_[rank - 1];
}

std::optional<double> push_and_quantile(TailWindow& window, double latency_ms, double q) {
    window.push(latency_ms);
    return window.quantile(q);
}

SmoothedSignal::SmoothedSignal(double alpha, double trigger_level, double clear_level)
    : alpha_(alpha), trigger_(trigger_level), clear_(clear_level) {
    if (alpha <= 0.0 || alpha > 1.0) {
        throw std::invalid_argument("EMA alpha must lie in (0, 1]");
    }
    if (clear_level > trigger_level) {
        throw std::invalid_argument("hysteresis clear level must not exceed trigger level");
    }
}

void SmoothedSignal::set_levels(double trigger_level, double clear_level) {
    if (clear_level > trigger_level) {
        throw std::invalid_argument("hysteresis clear level must not exceed trigger level");
    }
    trigger_ = trigger_level;
    clear_ = clear_level;
}

double SmoothedSignal::update(double sample) {
    if (!ema_) {
        ema_ = sample;
    } else {
        ema_ = alpha_ * sample + (1.0 - alpha_) * *ema_;
    }
    // Transitions happen only at level crossings; between clear and trigger
    // the state holds.
    if (state_ == State::clear && *ema_ > trigger_) {
        state_ = State::triggered;
    } else if (state_ == State::triggered && *ema_ < clear_) {
        state_ = State::clear;
    }
    return *ema_;
}

SloAccount::SloAccount(size_t window, double tau_ms) : capacity_(window), tau_ms_(tau_ms) {
    if (window == 0) {
        throw std::invalid_argument("SloAccount window must be positive");
    }
    if (tau_ms <= 0.0) {
        throw std::invalid_argument("SloAccount tau must be positive");
    }
}

void SloAccount::record(double latency_ms) {
    if (window_.size() == capacity_) {
        if (window_.front() > tau_ms_) {
            --misses_;
        }
        window_.pop_front();
    }
    window_.push_back(latency_ms);
    if (latency_ms > tau_ms_) {
        ++misses_;
    }
    ++completed_;
}

std::optional<double> SloAccount::miss_rate() const {
    if (window_.empty()) {
        return std::nullopt;
    }
    return static_cast<double>(misses_) / static_cast<double>(window_.size());
}

std::optional<double> SloAccount::miss_rate(double tau_ms) const {
    if (window_.empty()) {
        return std::nullopt;
    }
    size_t misses = 0;
    for (double v : window_) {
        if (v > tau_ms) {
            ++misses;
        }
    }
    return static_cast<double>(misses) / static_cast<double>(window_.size());
}

std::optional<double> SloAccount::normalized_throughput() const {
    auto m = miss_rate();
    if (!m) {
        return std::nullopt;
    }
    return 1.0 - *m;
}

}  // namespace migsim::telemetry
