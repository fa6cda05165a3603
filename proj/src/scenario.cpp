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
#include "migsim/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace migsim::scenario {

namespace {

using model::ConfigError;

std::string mark_of(const std::string& source, const YAML::Node& node) {
    return source + ":" + std::to_string(node.Mark().line + 1);
}

[[noreturn]] void fail(const std::string& source, const YAML::Node& node, const std::string& msg) {
    throw ConfigError(msg, mark_of(source, node));
}

/// Every map in the document is checked against an allowlist so typos fail
/// loudly instead of being ignored.
void check_keys(const std::string& source, const YAML::Node& node, const std::string& context,
                const std::set<std::string>& allowed) {
    if (!node.IsMap()) fail(source, node, context + " must be a mapping");
    for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        if (!allowed.count(key)) {
            fail(source, kv.first, "unknown key '" + key + "' in " + context);
        }
    }
}

double get_double(const std::string& source, const YAML::Node& node, const std::string& key) {
    try {
        return node.as<double>();
    } catch (const YAML::Exception&) {
        fail(source, node, "value of '" + key + "' is not a number");
    }
}

int get_int(const std::string& source, const YAML::Node& node, const std::string& key) {
    try {
        return node.as<int>();
    } catch (const YAML::Exception&) {
        fail(source, node, "value of '" + key + "' is not an integer");
    }
}

bool get_bool(const std::string& source, const YAML::Node& node, const std::string& key) {
    try {
        return node.as<bool>();
    } catch (const YAML::Exception&) {
        fail(source, node, "value of '" + key + "' is not a boolean");
    }
}

workload::InterferenceSchedule parse_schedule(const std::string& source, const YAML::Node& node) {
    using workload::InterferenceSchedule;
    check_keys(source, node, "schedule", {"kind", "period_s", "duty", "offset_s", "phases"});
    InterferenceSchedule s;
    if (!node["kind"]) fail(source, node, "schedule needs a 'kind'");
    const std::string kind = node["kind"].as<std::string>();
    if (kind == "always") {
        s.kind = InterferenceSchedule::Kind::always;
    } else if (kind == "square_wave") {
        s.kind = InterferenceSchedule::Kind::square_wave;
        if (!node["period_s"]) fail(source, node, "square_wave schedule needs 'period_s'");
        s.period_s = get_double(source, node["period_s"], "period_s");
        if (node["duty"]) s.duty = get_double(source, node["duty"], "duty");
        if (node["offset_s"]) s.offset_s = get_double(source, node["offset_s"], "offset_s");
    } else if (kind == "phases") {
        s.kind = InterferenceSchedule::Kind::phases;
        if (!node["phases"] || !node["phases"].IsSequence())
            fail(source, node, "phases schedule needs a 'phases' list");
        for (const auto& p : node["phases"]) {
            check_keys(source, p, "phase", {"start_s", "end_s"});
            workload::InterferenceSchedule::Phase ph;
            if (!p["start_s"] || !p["end_s"]) fail(source, p, "phase needs 'start_s' and 'end_s'");
            ph.start_s = get_double(source, p["start_s"], "start_s");
            ph.end_s = get_double(source, p["end_s"], "end_s");
            s.phases.push_back(ph);
        }
    } else {
        fail(source, node["kind"], "unknown schedule kind '" + kind + "'");
    }
    try {
        s.validate();
    } catch (const ConfigError& e) {
        fail(source, node, e.what());
    }
    return s;
}

model::TopologySpec parse_topology(const std::string& source, const YAML::Node& node) {
    model::TopologySpec topo;
    check_keys(source, node, "topology", {"hosts"});
    if (!node["hosts"] || !node["hosts"].IsSequence()) fail(source, node, "topology needs a 'hosts' list");
    for (const auto& hn : node["hosts"]) {
        check_keys(source, hn, "host",
                   {"numa_domains", "io_capacity_Bps", "irq_hot_core_groups", "pcie_roots", "gpus"});
        model::HostSpec host;
        if (hn["numa_domains"]) host.numa_domains = get_int(source, hn["numa_domains"], "numa_domains");
        if (hn["io_capacity_Bps"])
            host.io_capacity_Bps = get_double(source, hn["io_capacity_Bps"], "io_capacity_Bps");
        if (hn["irq_hot_core_groups"]) {
            for (const auto& g : hn["irq_hot_core_groups"])
                host.irq_hot_core_groups.insert(get_int(source, g, "irq_hot_core_groups"));
        }
        if (!hn["pcie_roots"] || !hn["pcie_roots"].IsSequence())
            fail(source, hn, "host needs a 'pcie_roots' list");
        for (const auto& rn : hn["pcie_roots"]) {
            check_keys(source, rn, "pcie_root", {"id", "capacity_Bps"});
            model::PcieRootSpec root;
            if (!rn["id"] || !rn["capacity_Bps"]) fail(source, rn, "pcie_root needs 'id' and 'capacity_Bps'");
            root.id = get_int(source, rn["id"], "id");
            root.capacity_Bps = get_double(source, rn["capacity_Bps"], "capacity_Bps");
            host.pcie_roots.push_back(root);
        }
        if (!hn["gpus"] || !hn["gpus"].IsSequence()) fail(source, hn, "host needs a 'gpus' list");
        for (const auto& gn : hn["gpus"]) {
            check_keys(source, gn, "gpu",
                       {"id", "pcie_root_id", "numa_id", "core_group", "total_slices", "mig_enabled"});
            model::GpuSpec gpu;
            if (!gn["id"] || !gn["pcie_root_id"]) fail(source, gn, "gpu needs 'id' and 'pcie_root_id'");
            gpu.id = get_int(source, gn["id"], "id");
            gpu.pcie_root_id = get_int(source, gn["pcie_root_id"], "pcie_root_id");
            if (gn["numa_id"]) gpu.numa_id = get_int(source, gn["numa_id"], "numa_id");
            if (gn["core_group"]) gpu.core_group = get_int(source, gn["core_group"], "core_group");
            if (gn["total_slices"]) gpu.total_slices = get_int(source, gn["total_slices"], "total_slices");
            if (gn["mig_enabled"]) gpu.mig_enabled = get_bool(source, gn["mig_enabled"], "mig_enabled");
            host.gpus.push_back(gpu);
        }
        topo.hosts.push_back(host);
    }
    return topo;
}

void apply_tenant_overrides(const std::string& source, const YAML::Node& node, model::TenantSpec& t) {
    check_keys(source, node, "tenant",
               {"preset", "id", "class", "arrival_rate_hz", "arrival_cv", "transfer_mix", "base_compute_ms",
                "service_cv", "slo_tail_ms", "weight", "pcie_cap_Bps", "host_io_Bps", "sm_demand",
                "noise_mean_ms", "placement", "schedule"});
    if (node["id"]) t.id = node["id"].as<std::string>();
    if (node["class"]) {
        try {
            t.tclass = model::tenant_class_from_string(node["class"].as<std::string>());
        } catch (const ConfigError& e) {
            fail(source, node["class"], e.what());
        }
    }
    if (node["arrival_rate_hz"]) t.arrival_rate_hz = get_double(source, node["arrival_rate_hz"], "arrival_rate_hz");
    if (node["arrival_cv"]) t.arrival_cv = get_double(source, node["arrival_cv"], "arrival_cv");
    if (node["transfer_mix"]) {
        if (!node["transfer_mix"].IsSequence()) fail(source, node["transfer_mix"], "transfer_mix must be a list");
        t.transfer_mix.clear();
        for (const auto& mn : node["transfer_mix"]) {
            check_keys(source, mn, "transfer_mix entry", {"bytes", "weight"});
            model::TransferMixEntry e;
            if (!mn["bytes"]) fail(source, mn, "transfer_mix entry needs 'bytes'");
            e.bytes = get_double(source, mn["bytes"], "bytes");
            e.weight = mn["weight"] ? get_double(source, mn["weight"], "weight") : 1.0;
            t.transfer_mix.push_back(e);
        }
    }
    if (node["base_compute_ms"]) t.base_compute_ms = get_double(source, node["base_compute_ms"], "base_compute_ms");
    if (node["service_cv"]) t.service_cv = get_double(source, node["service_cv"], "service_cv");
    if (node["slo_tail_ms"]) t.slo_tail_ms = get_double(source, node["slo_tail_ms"], "slo_tail_ms");
    if (node["weight"]) t.weight = get_double(source, node["weight"], "weight");
    if (node["pcie_cap_Bps"]) t.pcie_cap_Bps = get_double(source, node["pcie_cap_Bps"], "pcie_cap_Bps");
    if (node["host_io_Bps"]) t.host_io_Bps = get_double(source, node["host_io_Bps"], "host_io_Bps");
    if (node["sm_demand"]) t.sm_demand = get_double(source, node["sm_demand"], "sm_demand");
    if (node["noise_mean_ms"]) t.noise_mean_ms = get_double(source, node["noise_mean_ms"], "noise_mean_ms");
}

TenantEntry parse_tenant(const std::string& source, const YAML::Node& node) {
    TenantEntry entry;
    if (node["preset"]) {
        try {
            entry.spec = workload::workload_preset(node["preset"].as<std::string>());
        } catch (const ConfigError& e) {
            fail(source, node["preset"], e.what());
        }
    }
    apply_tenant_overrides(source, node, entry.spec);
    if (!node["placement"]) fail(source, node, "tenant needs a 'placement'");
    const auto& pn = node["placement"];
    check_keys(source, pn, "placement", {"host", "gpu", "profile", "first_slice"});
    if (!pn["gpu"] || !pn["profile"]) fail(source, pn, "placement needs 'gpu' and 'profile'");
    entry.placement.host = pn["host"] ? get_int(source, pn["host"], "host") : 0;
    entry.placement.gpu = get_int(source, pn["gpu"], "gpu");
    entry.profile_name = pn["profile"].as<std::string>();
    try {
        const auto& prof = model::mig_profile(entry.profile_name);
        entry.placement.slices.count = prof.slices;
    } catch (const ConfigError& e) {
        fail(source, pn["profile"], e.what());
    }
    entry.placement.slices.first = pn["first_slice"] ? get_int(source, pn["first_slice"], "first_slice") : 0;
    if (node["schedule"]) entry.schedule = parse_schedule(source, node["schedule"]);
    try {
        entry.spec.validate();
    } catch (const ConfigError& e) {
        fail(source, node, e.what());
    }
    return entry;
}

void apply_controller_overrides(const std::string& source, const YAML::Node& node, model::ControllerConfig& c) {
    check_keys(source, node, "controller",
               {"enabled", "enable_mig", "enable_placement", "enable_guardrails", "tail_threshold_ms",
                "persistence_windows", "dwell_obs", "cooldown_obs", "sample_interval_s", "warmup_s", "move_futility_ratio", "throttle_duration_s",
                "quota_duration_s", "ema_alpha", "hysteresis_clear_ratio", "relax_stability_ratio",
                "relax_score_threshold", "validation_obs", "rollback_regress_ratio", "diag_pcie_util_threshold",
                "diag_host_io_threshold", "diag_sm_util_threshold", "move_margin",
                "admission_queue_timeout_epochs", "guardrail_io_throttle_Bps", "guardrail_mps_quota_pct",
                "irq_lookback_s", "throughput_floor"});
    if (node["enabled"]) c.enabled = get_bool(source, node["enabled"], "enabled");
    if (node["enable_mig"]) c.enable_mig = get_bool(source, node["enable_mig"], "enable_mig");
    if (node["enable_placement"]) c.enable_placement = get_bool(source, node["enable_placement"], "enable_placement");
    if (node["enable_guardrails"])
        c.enable_guardrails = get_bool(source, node["enable_guardrails"], "enable_guardrails");
    if (node["tail_threshold_ms"]) c.tail_threshold_ms = get_double(source, node["tail_threshold_ms"], "tail_threshold_ms");
    if (node["persistence_windows"]) c.persistence_windows = get_int(source, node["persistence_windows"], "persistence_windows");
    if (node["dwell_obs"]) c.dwell_obs = get_int(source, node["dwell_obs"], "dwell_obs");
    if (node["cooldown_obs"]) c.cooldown_obs = get_int(source, node["cooldown_obs"], "cooldown_obs");
    if (node["sample_interval_s"]) c.sample_interval_s = get_double(source, node["sample_interval_s"], "sample_interval_s");
    if (node["warmup_s"]) c.warmup_s = get_double(source, node["warmup_s"], "warmup_s");
    if (node["move_futility_ratio"])
        c.move_futility_ratio = get_double(source, node["move_futility_ratio"], "move_futility_ratio");
    if (node["throttle_duration_s"]) c.throttle_duration_s = get_double(source, node["throttle_duration_s"], "throttle_duration_s");
    if (node["quota_duration_s"]) c.quota_duration_s = get_double(source, node["quota_duration_s"], "quota_duration_s");
    if (node["ema_alpha"]) c.ema_alpha = get_double(source, node["ema_alpha"], "ema_alpha");
    if (node["hysteresis_clear_ratio"]) c.hysteresis_clear_ratio = get_double(source, node["hysteresis_clear_ratio"], "hysteresis_clear_ratio");
    if (node["relax_stability_ratio"]) c.relax_stability_ratio = get_double(source, node["relax_stability_ratio"], "relax_stability_ratio");
    if (node["relax_score_threshold"]) c.relax_score_threshold = get_double(source, node["relax_score_threshold"], "relax_score_threshold");
    if (node["validation_obs"]) c.validation_obs = get_int(source, node["validation_obs"], "validation_obs");
    if (node["rollback_regress_ratio"]) c.rollback_regress_ratio = get_double(source, node["rollback_regress_ratio"], "rollback_regress_ratio");
    if (node["diag_pcie_util_threshold"]) c.diag_pcie_util_threshold = get_double(source, node["diag_pcie_util_threshold"], "diag_pcie_util_threshold");
    if (node["diag_host_io_threshold"]) c.diag_host_io_threshold = get_double(source, node["diag_host_io_threshold"], "diag_host_io_threshold");
    if (node["diag_sm_util_threshold"]) c.diag_sm_util_threshold = get_double(source, node["diag_sm_util_threshold"], "diag_sm_util_threshold");
    if (node["move_margin"]) c.move_margin = get_double(source, node["move_margin"], "move_margin");
    if (node["admission_queue_timeout_epochs"])
        c.admission_queue_timeout_epochs = get_int(source, node["admission_queue_timeout_epochs"], "admission_queue_timeout_epochs");
    if (node["guardrail_io_throttle_Bps"]) c.guardrail_io_throttle_Bps = get_double(source, node["guardrail_io_throttle_Bps"], "guardrail_io_throttle_Bps");
    if (node["guardrail_mps_quota_pct"]) c.guardrail_mps_quota_pct = get_double(source, node["guardrail_mps_quota_pct"], "guardrail_mps_quota_pct");
    if (node["irq_lookback_s"]) c.irq_lookback_s = get_double(source, node["irq_lookback_s"], "irq_lookback_s");
    if (node["throughput_floor"]) c.throughput_floor = get_double(source, node["throughput_floor"], "throughput_floor");
}

}  // namespace

void ScenarioSpec::validate() const {
    if (duration_s <= 0.0) throw ConfigError("scenario duration must be > 0");
    if (measure_start_s < 0.0 || measure_start_s >= duration_s)
        throw ConfigError("measure_start_s must lie in [0, duration)");
    topology.validate();
    controller.validate();
    if (tenants.empty()) throw ConfigError("scenario has no tenants");

    std::set<std::string> ids;
    for (const auto& t : tenants) {
        t.spec.validate();
        if (!ids.insert(t.spec.id).second) throw ConfigError("duplicate tenant id '" + t.spec.id + "'");
        const auto& gpu = topology.gpu(t.placement.host, t.placement.gpu);
        const auto& prof = model::mig_profile(t.profile_name);
        if (t.placement.slices.count != prof.slices)
            throw ConfigError("tenant " + t.spec.id + ": slice count disagrees with profile " + t.profile_name);
        if (gpu.mig_enabled &&
            (t.placement.slices.first < 0 || t.placement.slices.end() > gpu.total_slices))
            throw ConfigError("tenant " + t.spec.id + ": slices outside GPU " + std::to_string(gpu.id));
    }
    // Pairwise packing per MIG-enabled GPU.
    for (size_t h = 0; h < topology.hosts.size(); ++h) {
        for (const auto& gpu : topology.hosts[h].gpus) {
            if (!gpu.mig_enabled) continue;
            for (size_t i = 0; i < tenants.size(); ++i) {
                const auto& a = tenants[i];
                if (a.placement.host != static_cast<int>(h) || a.placement.gpu != gpu.id) continue;
                for (size_t j = i + 1; j < tenants.size(); ++j) {
                    const auto& b = tenants[j];
                    if (b.placement.host != static_cast<int>(h) || b.placement.gpu != gpu.id) continue;
                    if (a.placement.slices.overlaps(b.placement.slices))
                        throw ConfigError("tenants " + a.spec.id + " and " + b.spec.id + " overlap on GPU " +
                                          std::to_string(gpu.id));
                }
            }
        }
    }
    for (const auto& irq : irq_bursts) {
        if (irq.host < 0 || irq.host >= static_cast<int>(topology.hosts.size()))
            throw ConfigError("irq_burst references unknown host " + std::to_string(irq.host));
        if (irq.extra_noise_ms < 0.0) throw ConfigError("irq_burst extra_noise_ms must be >= 0");
        irq.schedule.validate();
    }
}

const TenantEntry& ScenarioSpec::tenant(const std::string& id) const {
    for (const auto& t : tenants) {
        if (t.spec.id == id) return t;
    }
    throw ConfigError("unknown tenant '" + id + "'");
}

ScenarioSpec parse_scenario(const std::string& yaml_text, const std::string& source_name) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(std::string("YAML parse error: ") + e.msg,
                          source_name + ":" + std::to_string(e.mark.line + 1));
    }
    if (!root.IsMap()) throw ConfigError("scenario document must be a mapping", source_name + ":1");

    check_keys(source_name, root, "scenario",
               {"version", "name", "duration_s", "measure_start_s", "fabric", "topology", "tenants",
                "irq_bursts", "controller"});

    if (!root["version"]) throw ConfigError("scenario is missing 'version'", source_name + ":1");
    const std::string version = root["version"].as<std::string>();
    if (version != kScenarioVersion)
        fail(source_name, root["version"],
             "unsupported scenario version '" + version + "' (expected " + std::string(kScenarioVersion) + ")");

    ScenarioSpec spec;
    spec.name = root["name"] ? root["name"].as<std::string>() : "unnamed";
    if (!root["duration_s"]) throw ConfigError("scenario is missing 'duration_s'", source_name + ":1");
    spec.duration_s = get_double(source_name, root["duration_s"], "duration_s");
    if (root["measure_start_s"])
        spec.measure_start_s = get_double(source_name, root["measure_start_s"], "measure_start_s");
    if (root["fabric"]) {
        check_keys(source_name, root["fabric"], "fabric", {"redistribute"});
        if (root["fabric"]["redistribute"])
            spec.fabric_redistribute = get_bool(source_name, root["fabric"]["redistribute"], "redistribute");
    }
    if (!root["topology"]) throw ConfigError("scenario is missing 'topology'", source_name + ":1");
    spec.topology = parse_topology(source_name, root["topology"]);
    if (!root["tenants"] || !root["tenants"].IsSequence())
        throw ConfigError("scenario needs a 'tenants' list", source_name + ":1");
    for (const auto& tn : root["tenants"]) spec.tenants.push_back(parse_tenant(source_name, tn));
    if (root["irq_bursts"]) {
        for (const auto& in : root["irq_bursts"]) {
            check_keys(source_name, in, "irq_burst", {"host", "core_group", "extra_noise_ms", "schedule"});
            IrqBurstSpec irq;
            if (in["host"]) irq.host = get_int(source_name, in["host"], "host");
            if (in["core_group"]) irq.core_group = get_int(source_name, in["core_group"], "core_group");
            if (in["extra_noise_ms"])
                irq.extra_noise_ms = get_double(source_name, in["extra_noise_ms"], "extra_noise_ms");
            if (in["schedule"]) irq.schedule = parse_schedule(source_name, in["schedule"]);
            spec.irq_bursts.push_back(irq);
        }
    }
    if (root["controller"]) apply_controller_overrides(source_name, root["controller"], spec.controller);

    spec.validate();
    return spec;
}

ScenarioSpec load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path);
}

}  // namespace migsim::scenario
