/*
 * Copyright 2026 The mcoll Authors
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

/**
 * @file    cost_model.hpp
 * @brief   Bulk-synchronous alpha-beta-gap timing of schedules.
 *
 * A schedule's time is the sum of its phase times. Internode rounds are
 * charged per node as
 *
 *     alpha + max( max_r (msgs_r * gap + bytes_r * beta_inter),
 *                  sum_r bytes_r * beta_node )
 *
 * so several concurrent senders on one node only help until the node's
 * injection bandwidth binds. Intranode phases are charged according to the
 * shared-memory transport in use.
 *
 * All times are in seconds.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mcoll/schedule.hpp"

namespace mcoll {

struct NetParams {
  double alpha_inter = 1e-6;          ///< per message launch
  double beta_inter = 0.08e-9;        ///< per byte, one process stream
  double beta_node = 0.08e-9;         ///< per byte, node injection (100 Gbps)
  double gap_proc = 1.0 / 97e6;       ///< between messages of one process (97 M msg/s)
  bool sync_per_round = false;        ///< extra sync_const before every InterRound
};

enum class TransportKind { pip, posix_shmem, cma, xpmem };

std::string to_string(TransportKind kind);
/// Throws std::invalid_argument for unknown names.
TransportKind parse_transport(std::string_view name);

/// Raw per-transport constants that a preset supplies.
struct TransportCosts {
  double copy_beta = 0.1e-9;       ///< per byte of memcpy
  double cma_overhead = 400e-9;    ///< syscall + page-fault cost per operation
  double xpmem_attach = 600e-9;    ///< expose/attach, paid once per pair
  double sync_const = 200e-9;      ///< per intranode phase
};

struct TransportModel {
  TransportKind kind = TransportKind::pip;
  double copy_beta = 0.0;
  double per_op_overhead = 0.0;
  int copies_per_transfer = 1;
  double sync_const = 0.0;
  bool overhead_cached_per_pair = false;
};

TransportModel make_transport(TransportKind kind, const TransportCosts& costs = {});

struct CostPreset {
  std::string name;
  NetParams net;
  TransportCosts intra;
};

/// "opa-broadwell", "pip-mpich-baseline" or "zero". Throws std::invalid_argument otherwise.
CostPreset named_preset(std::string_view name);
std::vector<std::string> preset_names();
/**
 * "custom": starts from `base` and overrides any of alpha_inter, beta_inter,
 * beta_node, gap_proc, sync_per_round, copy_beta, cma_overhead,
 * xpmem_attach, sync_const. Unknown keys are rejected.
 */
CostPreset custom_preset(const nlohmann::json& overrides,
                         const CostPreset& base = named_preset("opa-broadwell"));

/// Tracks which (accessor, owner) buffer pairs are already attached.
class AttachCache {
 public:
  /// True the first time a pair is seen.
  bool first_touch(int accessor, int owner) { return pairs_.emplace(accessor, owner).second; }

 private:
  std::set<std::pair<int, int>> pairs_;
};

/// Every action is treated as an internode message.
double inter_round_time(const InterRound& round, const BlockLayout& layout, const NetParams& params);

/**
 * Same, but actions whose peer shares the actor's node are charged as
 * transport copies. Only process-granular schedules have such actions.
 */
double inter_round_time(const InterRound& round, const Schedule& schedule, const NetParams& params,
                        const TransportModel& transport, AttachCache* cache = nullptr);

/**
 * IntraGather, Rotate or IntraBcast (InterRound yields 0). Without a cache
 * every attach is due.
 */
double intra_phase_time(const Phase& phase, const Topology& topo, const BlockLayout& layout,
                        const TransportModel& transport, AttachCache* cache = nullptr);

struct RunReport {
  std::string algo;
  TransportKind transport = TransportKind::pip;
  int nodes = 0;
  int ppn = 0;
  std::size_t per_proc_bytes = 0;
  double sim_time = 0.0;
  int inter_rounds = 0;
  int msgs_per_rank_max = 0;
  std::size_t bytes_on_wire_total = 0;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

RunReport simulate(const Schedule& schedule, const NetParams& params,
                   const TransportModel& transport);

/// Per-process message size where a single-copy transport with per-operation
/// overhead starts beating a double-copy one: overhead / extra copy cost.
double analytic_crossover_bytes(const TransportModel& single_copy,
                                const TransportModel& double_copy);

/**
 * Smallest per-process size at which the IntraGather time of `single_copy`
 * is strictly below that of `double_copy`, found by searching the phase
 * model. Returns -1 if none exists below `limit`.
 */
std::int64_t measured_crossover_bytes(const TransportModel& single_copy,
                                      const TransportModel& double_copy,
                                      std::int64_t limit = std::int64_t{1} << 40);

}  // namespace mcoll
