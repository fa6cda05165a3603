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

#include <cmath>
#include <map>
#include <vector>

#include "migsim/workload.hpp"

using namespace migsim;

namespace {

model::TenantSpec basic_spec(double rate_hz, double arrival_cv) {
    model::TenantSpec t;
    t.id = "gen";
    t.arrival_rate_hz = rate_hz;
    t.arrival_cv = arrival_cv;
    t.transfer_mix = {{1e6, 1.0}};
    t.base_compute_ms = 1.0;
    t.slo_tail_ms = 100.0;
    return t;
}

struct GapStats {
    double mean = 0.0;
    double cv = 0.0;
};

GapStats gap_stats(const std::vector<workload::Arrival>& arrivals) {
    std::vector<double> gaps;
    for (size_t i = 1; i < arrivals.size(); ++i) gaps.push_back(arrivals[i].t_s - arrivals[i - 1].t_s);
    double sum = 0.0;
    for (double g : gaps) sum += g;
    const double mean = sum / static_cast<double>(gaps.size());
    double var = 0.0;
    for (double g : gaps) var += (g - mean) * (g - mean);
    var /= static_cast<double>(gaps.size());
    return {mean, std::sqrt(var) / mean};
}

}  // namespace

TEST_CASE("substreams are reproducible and mutually independent") {
    auto a1 = workload::make_substream(7, "t1", workload::StreamPurpose::arrivals);
    auto a2 = workload::make_substream(7, "t1", workload::StreamPurpose::arrivals);
    CHECK(a1() == a2());
    CHECK(a1() == a2());

    SUBCASE("purpose, name, and seed each move the stream") {
        auto base = workload::make_substream(7, "t1", workload::StreamPurpose::arrivals);
        auto svc = workload::make_substream(7, "t1", workload::StreamPurpose::service);
        auto other = workload::make_substream(7, "t2", workload::StreamPurpose::arrivals);
        auto seed = workload::make_substream(8, "t1", workload::StreamPurpose::arrivals);
        const uint64_t b = base();
        CHECK(b != svc());
        CHECK(b != other());
        CHECK(b != seed());
    }
}

TEST_CASE("deterministic arrivals tick at exactly 1/lambda") {
    auto spec = basic_spec(4.0, 0.0);
    auto arrivals = workload::generate_arrivals(spec, 1, 2.0);
    REQUIRE(arrivals.size() == 7);  // 0.25, 0.5, ..., 1.75
    for (size_t i = 0; i < arrivals.size(); ++i) {
        CHECK(arrivals[i].t_s == doctest::Approx(0.25 * static_cast<double>(i + 1)).epsilon(1e-12));
    }
}

TEST_CASE("gamma renewal arrivals match the requested rate and burstiness") {
    SUBCASE("cv 0.5") {
        auto spec = basic_spec(50.0, 0.5);
        auto arrivals = workload::generate_arrivals(spec, 3, 400.0);
        REQUIRE(arrivals.size() > 15000);
        auto s = gap_stats(arrivals);
        CHECK(s.mean == doctest::Approx(0.02).epsilon(0.02));
        CHECK(s.cv == doctest::Approx(0.5).epsilon(0.05));
    }
    SUBCASE("cv 1 is Poisson") {
        auto spec = basic_spec(50.0, 1.0);
        auto arrivals = workload::generate_arrivals(spec, 3, 400.0);
        auto s = gap_stats(arrivals);
        CHECK(s.mean == doctest::Approx(0.02).epsilon(0.03));
        CHECK(s.cv == doctest::Approx(1.0).epsilon(0.05));
    }
    SUBCASE("arrivals are strictly increasing") {
        auto spec = basic_spec(200.0, 1.4);
        auto arrivals = workload::generate_arrivals(spec, 9, 50.0);
        for (size_t i = 1; i < arrivals.size(); ++i) REQUIRE(arrivals[i].t_s > arrivals[i - 1].t_s);
    }
}

TEST_CASE("per-request marks follow their distributions") {
    auto spec = basic_spec(100.0, 1.0);
    spec.transfer_mix = {{1e6, 3.0}, {4e6, 1.0}};
    spec.service_cv = 0.5;
    spec.noise_mean_ms = 2.0;
    auto arrivals = workload::generate_arrivals(spec, 11, 300.0);
    REQUIRE(arrivals.size() > 20000);

    std::map<double, int> size_counts;
    double mult_sum = 0.0, noise_sum = 0.0;
    for (const auto& a : arrivals) {
        ++size_counts[a.transfer_bytes];
        mult_sum += a.service_mult;
        noise_sum += a.noise_ms;
        REQUIRE(a.service_mult > 0.0);
        REQUIRE(a.noise_ms >= 0.0);
    }
    const double n = static_cast<double>(arrivals.size());

    // Mix draws only the listed sizes, at their weights.
    REQUIRE(size_counts.size() == 2);
    CHECK(static_cast<double>(size_counts[1e6]) / n == doctest::Approx(0.75).epsilon(0.02));
    CHECK(static_cast<double>(size_counts[4e6]) / n == doctest::Approx(0.25).epsilon(0.05));

    // Service multiplier is mean-1 lognormal with the requested cv.
    CHECK(mult_sum / n == doctest::Approx(1.0).epsilon(0.015));
    double var = 0.0;
    for (const auto& a : arrivals) var += (a.service_mult - mult_sum / n) * (a.service_mult - mult_sum / n);
    CHECK(std::sqrt(var / n) / (mult_sum / n) == doctest::Approx(0.5).epsilon(0.06));

    // Noise is exponential with the requested mean.
    CHECK(noise_sum / n == doctest::Approx(2.0).epsilon(0.04));
}

TEST_CASE("schedules gate activity by time") {
    workload::InterferenceSchedule sq;
    sq.kind = workload::InterferenceSchedule::Kind::square_wave;
    sq.period_s = 120.0;
    sq.duty = 0.2;
    sq.offset_s = 30.0;

    // On-phases are [30, 54), [150, 174), ...
    CHECK(sq.active(30.0));
    CHECK(sq.active(53.9));
    CHECK_FALSE(sq.active(54.0));
    CHECK_FALSE(sq.active(29.9));
    CHECK(sq.active(150.0));

    SUBCASE("active_within finds on-phases that touch the interval") {
        CHECK(sq.active_within(40.0, 45.0));    // fully inside an on-phase
        CHECK(sq.active_within(20.0, 31.0));    // straddles the phase start
        CHECK(sq.active_within(53.0, 80.0));    // straddles the phase end
        CHECK_FALSE(sq.active_within(60.0, 70.0));
        CHECK_FALSE(sq.active_within(54.0, 149.9));
        CHECK(sq.active_within(140.0, 155.0));  // next on-phase starts inside
        CHECK(sq.active_within(60.0, 156.0));   // spans a full off-gap
        CHECK_FALSE(sq.active_within(70.0, 60.0));
    }
    SUBCASE("phase lists honor half-open bounds") {
        workload::InterferenceSchedule ph;
        ph.kind = workload::InterferenceSchedule::Kind::phases;
        ph.phases = {{10.0, 20.0}, {40.0, 45.0}};
        CHECK(ph.active(10.0));
        CHECK_FALSE(ph.active(20.0));
        CHECK(ph.active_within(0.0, 10.0));
        CHECK_FALSE(ph.active_within(0.0, 9.99));
        CHECK(ph.active_within(19.0, 25.0));
        CHECK_FALSE(ph.active_within(20.0, 39.99));
        CHECK(ph.active_within(44.0, 100.0));
    }
    SUBCASE("always is active everywhere") {
        workload::InterferenceSchedule al;
        CHECK(al.active(0.0));
        CHECK(al.active_within(1e6, 1e6));
    }
    SUBCASE("bad schedules are rejected") {
        workload::InterferenceSchedule bad = sq;
        bad.period_s = 0.0;
        CHECK_THROWS_AS(bad.validate(), model::ConfigError);
        bad = sq;
        bad.duty = 1.5;
        CHECK_THROWS_AS(bad.validate(), model::ConfigError);
        workload::InterferenceSchedule ph;
        ph.kind = workload::InterferenceSchedule::Kind::phases;
        ph.phases = {{5.0, 5.0}};
        CHECK_THROWS_AS(ph.validate(), model::ConfigError);
    }
}

TEST_CASE("schedule thinning drops arrivals without skipping the stream") {
    auto spec = basic_spec(20.0, 1.0);
    spec.service_cv = 0.3;
    spec.noise_mean_ms = 1.0;

    workload::InterferenceSchedule sq;
    sq.kind = workload::InterferenceSchedule::Kind::square_wave;
    sq.period_s = 10.0;
    sq.duty = 0.4;

    auto all = workload::generate_arrivals(spec, 5, 200.0);
    auto thinned = workload::generate_arrivals(spec, 5, 200.0, sq);
    REQUIRE(!thinned.empty());
    REQUIRE(thinned.size() < all.size());

    // Every retained arrival appears verbatim in the unthinned stream, and
    // exactly the on-phase arrivals survive.
    size_t j = 0;
    for (const auto& a : all) {
        if (sq.active(a.t_s)) {
            REQUIRE(j < thinned.size());
            REQUIRE(thinned[j].t_s == a.t_s);
            REQUIRE(thinned[j].transfer_bytes == a.transfer_bytes);
            REQUIRE(thinned[j].service_mult == a.service_mult);
            REQUIRE(thinned[j].noise_ms == a.noise_ms);
            ++j;
        }
    }
    CHECK(j == thinned.size());
    CHECK(static_cast<double>(thinned.size()) / static_cast<double>(all.size()) ==
          doctest::Approx(0.4).epsilon(0.08));
}

TEST_CASE("workload presets are valid and named consistently") {
    auto names = workload::workload_preset_names();
    REQUIRE(names.size() == 4);
    for (const auto& n : names) {
        auto spec = workload::workload_preset(n);
        CHECK_NOTHROW(spec.validate());
        CHECK(!spec.id.empty());
    }

    auto t2 = workload::workload_preset("t2-etl");
    CHECK(t2.tclass == model::TenantClass::bandwidth_heavy);
    CHECK(t2.pcie_cap_Bps == 9.5e9);

    auto llm = workload::workload_preset("llm-ttft");
    CHECK(llm.slo_tail_ms == 200.0);
    CHECK(llm.tclass == model::TenantClass::latency_sensitive);

    CHECK_THROWS_AS(workload::workload_preset("nope"), model::ConfigError);
}
