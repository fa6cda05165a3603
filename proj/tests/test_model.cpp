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

#include <random>

#include "migsim/model.hpp"

using namespace migsim;

TEST_CASE("mig lattice is ordered and closed under stepping") {
    const auto& lattice = model::mig_lattice();
    REQUIRE(lattice.size() == 5);
    CHECK(lattice.front().name == "1g.10gb");
    CHECK(lattice.back().name == "7g.80gb");

    // Slices strictly increase; memory never shrinks (3g and 4g share 40gb).
    for (size_t i = 1; i < lattice.size(); ++i) {
        CHECK(lattice[i].slices > lattice[i - 1].slices);
        CHECK(lattice[i].mem_gb >= lattice[i - 1].mem_gb);
    }

    SUBCASE("round trip: up then down returns the same profile") {
        for (size_t i = 0; i + 1 < lattice.size(); ++i) {
            auto up = model::mig_lattice_step(lattice[i], model::LatticeDirection::up);
            REQUIRE(up);
            auto back = model::mig_lattice_step(*up, model::LatticeDirection::down);
            REQUIRE(back);
            CHECK(back->name == lattice[i].name);
        }
        CHECK_FALSE(model::mig_lattice_step(lattice.back(), model::LatticeDirection::up));
        CHECK_FALSE(model::mig_lattice_step(lattice.front(), model::LatticeDirection::down));
    }

    SUBCASE("lookup by name agrees with index") {
        for (const auto& p : lattice) {
            const auto& found = model::mig_profile(p.name);
            CHECK(found.slices == p.slices);
            CHECK(model::mig_lattice_index(found) >= 0);
        }
        CHECK_THROWS_AS(model::mig_profile("9g.120gb"), model::ConfigError);
    }
}

TEST_CASE("sm fraction and effective service rate") {
    model::TenantSpec spec;
    spec.id = "x";
    spec.arrival_rate_hz = 1.0;
    spec.transfer_mix = {{1e6, 1.0}};
    spec.base_compute_ms = 10.0;
    spec.slo_tail_ms = 100.0;

    // Full device: 10 ms base compute means 100 requests per second.
    CHECK(model::effective_service_rate(model::mig_profile("7g.80gb"), spec) == doctest::Approx(100.0).epsilon(1e-12));
    // One slice of seven.
    CHECK(model::effective_service_rate(model::mig_profile("1g.10gb"), spec) ==
          doctest::Approx(100.0 / 7.0).epsilon(1e-12));
    // Three slices of seven.
    CHECK(model::effective_service_rate(model::mig_profile("3g.40gb"), spec) ==
          doctest::Approx(300.0 / 7.0).epsilon(1e-12));

    SUBCASE("service rate is monotone in the lattice") {
        const auto& lattice = model::mig_lattice();
        for (size_t i = 1; i < lattice.size(); ++i) {
            CHECK(model::effective_service_rate(lattice[i], spec) >
                  model::effective_service_rate(lattice[i - 1], spec));
        }
    }
}

TEST_CASE("slice ranges and packing validation") {
    model::SliceRange a{0, 2};
    model::SliceRange b{2, 3};
    model::SliceRange c{4, 3};
    CHECK(a.end() == 2);
    CHECK_FALSE(a.overlaps(b));
    CHECK(b.overlaps(c));

    model::GpuSpec gpu;
    gpu.id = 0;
    gpu.pcie_root_id = 0;

    model::TenantSpec sx, sy;
    sx.id = "x";
    sy.id = "y";
    auto admitted = [&](const model::TenantSpec& spec, int first, int count) {
        model::TenantState st;
        st.spec = &spec;
        st.placement.slices = {first, count};
        st.status = model::TenantStatus::admitted;
        return st;
    };

    model::TenantState x = admitted(sx, 0, 2);
    model::TenantState y = admitted(sy, 2, 3);
    CHECK_NOTHROW(model::validate_slice_packing(gpu, {&x, &y}));

    SUBCASE("overlapping ranges are rejected") {
        y.placement.slices = {1, 3};
        CHECK_THROWS_AS(model::validate_slice_packing(gpu, {&x, &y}), model::ConfigError);
    }
    SUBCASE("range past the last slice is rejected") {
        y.placement.slices = {5, 3};
        CHECK_THROWS_AS(model::validate_slice_packing(gpu, {&y}), model::ConfigError);
    }
    SUBCASE("queued tenants do not occupy slices") {
        y.placement.slices = {1, 3};
        y.status = model::TenantStatus::queued;
        CHECK_NOTHROW(model::validate_slice_packing(gpu, {&x, &y}));
    }
    SUBCASE("non-MIG devices skip the packing check") {
        gpu.mig_enabled = false;
        y.placement.slices = {1, 3};
        CHECK_NOTHROW(model::validate_slice_packing(gpu, {&x, &y}));
    }
}

TEST_CASE("tenant and topology validation reject bad input") {
    model::TenantSpec t;
    t.id = "t";
    t.arrival_rate_hz = 1.0;
    t.transfer_mix = {{1e6, 1.0}};
    t.base_compute_ms = 1.0;
    t.slo_tail_ms = 10.0;
    CHECK_NOTHROW(t.validate());

    SUBCASE("rate must be positive") {
        t.arrival_rate_hz = 0.0;
        CHECK_THROWS_AS(t.validate(), model::ConfigError);
    }
    SUBCASE("mix weights must be positive") {
        t.transfer_mix = {{1e6, 0.0}};
        CHECK_THROWS_AS(t.validate(), model::ConfigError);
    }
    SUBCASE("negative noise rejected") {
        t.noise_mean_ms = -0.1;
        CHECK_THROWS_AS(t.validate(), model::ConfigError);
    }
    SUBCASE("mean transfer bytes is the weighted mix mean") {
        t.transfer_mix = {{2e6, 3.0}, {8e6, 1.0}};
        CHECK(t.mean_transfer_bytes() == doctest::Approx(3.5e6).epsilon(1e-12));
    }
}

TEST_CASE("controller config bounds") {
    model::ControllerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    SUBCASE("sampling interval is clamped to the supported band") {
        cfg.sample_interval_s = 0.5;
        CHECK_THROWS_AS(cfg.validate(), model::ConfigError);
        cfg.sample_interval_s = 6.0;
        CHECK_THROWS_AS(cfg.validate(), model::ConfigError);
    }
    SUBCASE("guardrail actuation must stay inside the envelope") {
        cfg.guardrail_io_throttle_Bps = 50e6;
        CHECK_THROWS_AS(cfg.validate(), model::ConfigError);
        cfg.guardrail_io_throttle_Bps = 250e6;
        cfg.guardrail_mps_quota_pct = 40.0;
        CHECK_THROWS_AS(cfg.validate(), model::ConfigError);
    }
    SUBCASE("hysteresis must clear below the trigger") {
        cfg.hysteresis_clear_ratio = 1.1;
        CHECK_THROWS_AS(cfg.validate(), model::ConfigError);
    }
}

TEST_CASE("tenant state derives the effective transfer cap") {
    model::TenantSpec spec;
    spec.id = "t";
    spec.arrival_rate_hz = 1.0;
    spec.transfer_mix = {{1e6, 1.0}};
    spec.base_compute_ms = 1.0;
    spec.slo_tail_ms = 10.0;
    spec.pcie_cap_Bps = 4e9;

    model::TenantState st;
    st.spec = &spec;
    CHECK(st.effective_pcie_cap_Bps() == doctest::Approx(4e9));
    st.io_throttle_Bps = 250e6;
    CHECK(st.effective_pcie_cap_Bps() == doctest::Approx(250e6));
    spec.pcie_cap_Bps = 0.0;  // uncapped tenant still honors a throttle
    CHECK(st.effective_pcie_cap_Bps() == doctest::Approx(250e6));
    st.io_throttle_Bps.reset();
    CHECK(st.effective_pcie_cap_Bps() == 0.0);
}
