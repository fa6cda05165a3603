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

#include "migsim/harness.hpp"

using namespace migsim;

TEST_CASE("confidence intervals use the normal approximation") {
    // n=2, mean 10, population sigma 2: half width 1.96*2/sqrt(2).
    auto ci = harness::confidence_interval({8.0, 12.0});
    CHECK(ci.mean == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(ci.half_width == doctest::Approx(1.96 * 2.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(ci.lo() == doctest::Approx(10.0 - ci.half_width).epsilon(1e-12));
    CHECK(ci.hi() == doctest::Approx(10.0 + ci.half_width).epsilon(1e-12));

    SUBCASE("identical values collapse the interval") {
        auto c = harness::confidence_interval({5.0, 5.0, 5.0});
        CHECK(c.mean == 5.0);
        CHECK(c.half_width == 0.0);
    }
    SUBCASE("single sample has zero width") {
        auto c = harness::confidence_interval({7.0});
        CHECK(c.mean == 7.0);
        CHECK(c.half_width == 0.0);
    }
}

TEST_CASE("the ablation grid covers each subsystem alone") {
    auto v = harness::ablation_variants();
    REQUIRE(v.size() == 5);
    CHECK(v[0].name == "full");
    CHECK(v[0].enabled);
    CHECK(v[0].enable_mig);
    CHECK(v[0].enable_placement);
    CHECK(v[0].enable_guardrails);

    CHECK(v[1].name == "mig-only");
    CHECK(v[1].enable_mig);
    CHECK_FALSE(v[1].enable_placement);
    CHECK_FALSE(v[1].enable_guardrails);

    CHECK(v[2].name == "placement-only");
    CHECK_FALSE(v[2].enable_mig);
    CHECK(v[2].enable_placement);
    CHECK_FALSE(v[2].enable_guardrails);

    CHECK(v[3].name == "guards-only");
    CHECK_FALSE(v[3].enable_mig);
    CHECK_FALSE(v[3].enable_placement);
    CHECK(v[3].enable_guardrails);

    CHECK(v[4].name == "static");
    CHECK_FALSE(v[4].enabled);

    auto m = harness::main_variants();
    REQUIRE(m.size() == 2);
    CHECK(m[0].name == "full");
    CHECK(m[1].name == "static");
}

TEST_CASE("variants rewrite only the controller switches") {
    scenario::ScenarioSpec base;
    base.name = "x";
    base.controller.enabled = true;
    base.controller.tail_threshold_ms = 12.5;

    auto off = harness::apply_variant(base, harness::ablation_variants()[4]);
    CHECK_FALSE(off.controller.enabled);
    CHECK(off.controller.tail_threshold_ms == 12.5);
    CHECK(off.name == "x");

    auto guards = harness::apply_variant(base, harness::ablation_variants()[3]);
    CHECK(guards.controller.enabled);
    CHECK_FALSE(guards.controller.enable_mig);
    CHECK_FALSE(guards.controller.enable_placement);
    CHECK(guards.controller.enable_guardrails);
}
