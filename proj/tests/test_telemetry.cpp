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
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <vector>

#include "migsim/telemetry.hpp"

using namespace migsim;

namespace {

// Independent nearest-rank oracle: sort a copy, take the 1-based
// ceil(q*n)-th element, clamped to [1, n].
double nearest_rank(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(v.size())));
    rank = std::clamp<size_t>(rank, 1, v.size());
    return v[rank - 1];
}

}  // namespace

TEST_CASE("nearest-rank quantiles on a small window") {
    telemetry::TailWindow w(8);
    CHECK_FALSE(w.quantile(0.5));

    // Shuffled input; the quantile must not depend on arrival order.
    for (double v : {30.0, 10.0, 40.0, 20.0}) w.push(v);
    CHECK(*w.quantile(0.25) == 10.0);  // rank ceil(1.0) = 1
    CHECK(*w.quantile(0.5) == 20.0);   // rank 2
    CHECK(*w.quantile(0.75) == 30.0);  // rank 3
    CHECK(*w.quantile(0.99) == 40.0);  // rank ceil(3.96) = 4
    CHECK(*w.quantile(1.0) == 40.0);
    CHECK(*w.quantile(0.0) == 10.0);   // clamped to the minimum

    SUBCASE("single sample answers every quantile") {
        telemetry::TailWindow one(4);
        one.push(7.5);
        for (double q : {0.0, 0.01, 0.5, 0.99, 1.0}) CHECK(*one.quantile(q) == 7.5);
    }
    SUBCASE("window evicts the oldest sample") {
        telemetry::TailWindow small(4);
        for (double v : {1.0, 2.0, 3.0, 4.0, 5.0}) small.push(v);
        CHECK(small.size() == 4);
        CHECK(*small.quantile(0.0) == 2.0);
        CHECK(*small.quantile(1.0) == 5.0);
    }
    SUBCASE("out-of-range q is rejected") {
        CHECK_THROWS_AS(w.quantile(-0.01), std::invalid_argument);
        CHECK_THROWS_AS(w.quantile(1.01), std::invalid_argument);
    }
    SUBCASE("zero capacity is rejected") {
        CHECK_THROWS_AS(telemetry::TailWindow(0), std::invalid_argument);
    }
}

TEST_CASE("windowed quantiles match a full-sort oracle") {
    telemetry::TailWindow w(64);
    std::deque<double> shadow;
    std::mt19937_64 rng(0x7e1e);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    const double qs[] = {0.01, 0.25, 0.5, 0.9, 0.95, 0.99, 1.0};

    for (int i = 0; i < 10000; ++i) {
        const double v = u(rng);
        if (shadow.size() == 64) shadow.pop_front();
        shadow.push_back(v);
        const double got = *push_and_quantile(w, v, 0.99);
        REQUIRE(got == nearest_rank({shadow.begin(), shadow.end()}, 0.99));
        for (double q : qs) {
            REQUIRE(*w.quantile(q) == nearest_rank({shadow.begin(), shadow.end()}, q));
        }
    }
}

TEST_CASE("EMA smoothing and hysteresis") {
    telemetry::SmoothedSignal sig(0.2, 15.0, 13.5);
    CHECK_FALSE(sig.value());

    // First sample seeds the EMA; then ema' = 0.2*x + 0.8*ema.
    CHECK(sig.update(10.0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(sig.update(20.0) == doctest::Approx(12.0).epsilon(1e-12));
    CHECK(sig.state() == telemetry::SmoothedSignal::State::clear);

    SUBCASE("triggers only above the trigger level") {
        // ema climbs: 12 -> 13.6 -> 14.88 -> 15.904 (crosses 15 here).
        sig.update(20.0);
        CHECK(sig.state() == telemetry::SmoothedSignal::State::clear);
        sig.update(20.0);
        CHECK(sig.state() == telemetry::SmoothedSignal::State::clear);
        sig.update(20.0);
        CHECK(sig.state() == telemetry::SmoothedSignal::State::triggered);

        // A steady 14.0 keeps the EMA inside the dead band [13.5, 15]:
        // the triggered state holds.
        for (int i = 0; i < 50; ++i) sig.update(14.0);
        CHECK(*sig.value() > 13.5);
        CHECK(*sig.value() < 15.0);
        CHECK(sig.state() == telemetry::SmoothedSignal::State::triggered);

        // Only a drop below the clear level releases it.
        while (*sig.value() >= 13.5) sig.update(5.0);
        CHECK(sig.state() == telemetry::SmoothedSignal::State::clear);
    }
    SUBCASE("levels can move but clear stays below trigger") {
        sig.set_levels(30.0, 27.0);
        CHECK(sig.trigger_level() == 30.0);
        CHECK(sig.clear_level() == 27.0);
        CHECK_THROWS_AS(sig.set_levels(10.0, 11.0), std::invalid_argument);
        CHECK_THROWS_AS(telemetry::SmoothedSignal(0.0, 1.0, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(telemetry::SmoothedSignal(0.2, 1.0, 2.0), std::invalid_argument);
    }
}

TEST_CASE("SLO account tracks windowed miss rate") {
    telemetry::SloAccount acct(4, 10.0);
    CHECK_FALSE(acct.miss_rate());

    acct.record(5.0);
    acct.record(12.0);
    CHECK(*acct.miss_rate() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(*acct.normalized_throughput() == doctest::Approx(0.5).epsilon(1e-12));

    acct.record(8.0);
    acct.record(9.0);
    CHECK(*acct.miss_rate() == doctest::Approx(0.25).epsilon(1e-12));

    // Eviction drops the old miss from the window.
    acct.record(3.0);
    acct.record(4.0);
    CHECK(*acct.miss_rate() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(acct.completed() == 6);

    SUBCASE("explicit threshold reads the same window") {
        CHECK(*acct.miss_rate(3.5) == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(*acct.miss_rate(100.0) == 0.0);
    }
    SUBCASE("exponential latencies miss at exp(-tau/mean)") {
        // Pr(L > 3) for exp(1) is e^-3 ~ 0.0498; CLT bound well inside 0.01.
        telemetry::SloAccount big(200000, 3.0);
        std::mt19937_64 rng(0x510a);
        std::exponential_distribution<double> exp1(1.0);
        for (int i = 0; i < 200000; ++i) big.record(exp1(rng));
        CHECK(*big.miss_rate() == doctest::Approx(std::exp(-3.0)).epsilon(0.2));
        CHECK(std::fabs(*big.miss_rate() - std::exp(-3.0)) < 0.01);
        CHECK(*big.normalized_throughput() == doctest::Approx(1.0 - *big.miss_rate()).epsilon(1e-12));
    }
    SUBCASE("degenerate parameters are rejected") {
        CHECK_THROWS_AS(telemetry::SloAccount(0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(telemetry::SloAccount(8, 0.0), std::invalid_argument);
    }
}
