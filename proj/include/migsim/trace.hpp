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

#include <json.hpp>

#include <string>

#include "migsim/controller.hpp"
#include "migsim/engine.hpp"

namespace migsim::trace {

// Column orders are part of the artifact format; readers rely on them.
inline constexpr const char* kRequestHeader =
    "t_s,tenant,seq,arrived_s,total_ms,compute_ms,transfer_ms,noise_ms,transfer_bytes";
inline constexpr const char* kCounterHeader =
    "t_s,tenant,completed,queue_len,window_p99_ms,grant_Bps,profile,host,gpu";
inline constexpr const char* kFabricHeader =
    "t_s,host,root,offered_Bps,capacity_Bps,active_flows,backlog_bytes";

/// Stable numeric formatting ("%.9g") shared by every trace stream.
std::string fmt_double(double v);

std::string request_row(const engine::CompletionRecord& r);
std::string counter_row(double t_s, const std::string& tenant, uint64_t completed, size_t queue_len,
                        double window_p99_ms, double grant_Bps, const std::string& profile, int host,
                        int gpu);
std::string fabric_row(double t_s, int host, int root, double offered_Bps, double capacity_Bps,
                       size_t active_flows, double backlog_bytes);

/// One actions.jsonl line (fixed key order, no trailing newline).
nlohmann::ordered_json action_json(const control::ActionRecord& r);

nlohmann::ordered_json summary_json(const engine::RunResult& result);

void write_actions_jsonl(const std::string& path, const std::vector<control::ActionRecord>& actions);
void write_summary(const std::string& path, const engine::RunResult& result);

}  // namespace migsim::trace
