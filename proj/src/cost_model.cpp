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

#include "mcoll/cost_model.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace mcoll {

std::string to_string(TransportKind kind) {
  switch (kind) {
    case TransportKind::pip: return "pip";
    case TransportKind::posix_shmem: return "posix_shmem";
    case TransportKind::cma: return "cma";
    case TransportKind::xpmem: return "xpmem";
  }
  return "unknown";
}

TransportKind parse_transport(std::string_view name) {
  for (auto kind : {TransportKind::pip, TransportKind::posix_shmem, TransportKind::cma,
                    TransportKind::xpmem}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown transport '" + std::string(name) + "'");
}

TransportModel make_transport(TransportKind kind, const TransportCosts& costs) {
  TransportModel t;
  t.kind = kind;
  t.copy_beta = costs.copy_beta;
  t.sync_const = costs.sync_const;
  switch (kind) {
    case TransportKind::pip:
      break;
    case TransportKind::posix_shmem:
      t.copies_per_transfer = 2;  // into the shared segment, then out of it
      break;
    case TransportKind::cma:
      t.per_op_overhead = costs.cma_overhead;
      break;
    case TransportKind::xpmem:
      t.per_op_overhead = costs.xpmem_attach;
      t.overhead_cached_per_pair = true;
      break;
  }
  return t;
}

CostPreset named_preset(std::string_view name) {
  if (name == "opa-broadwell") return CostPreset{"opa-broadwell", NetParams{}, TransportCosts{}};
  if (name == "pip-mpich-baseline") {
    CostPreset p{"pip-mpich-baseline", NetParams{}, TransportCosts{}};
    p.net.sync_per_round = true;
    return p;
  }
  if (name == "zero") {
    return CostPreset{"zero", NetParams{0.0, 0.0, 0.0, 0.0, false}, TransportCosts{0.0, 0.0, 0.0, 0.0}};
  }
  throw std::invalid_argument("unknown parameter preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
  return {"opa-broadwell", "pip-mpich-baseline", "zero", "custom"};
}

CostPreset custom_preset(const nlohmann::json& overrides, const CostPreset& base) {
  if (!overrides.is_object()) throw std::invalid_argument("custom parameters must be a JSON object");
  CostPreset p = base;
  p.name = "custom";
  const std::map<std::string, double*> reals{
      {"alpha_inter", &p.net.alpha_inter}, {"beta_inter", &p.net.beta_inter},
      {"beta_node", &p.net.beta_node},     {"gap_proc", &p.net.gap_proc},
      {"copy_beta", &p.intra.copy_beta},   {"cma_overhead", &p.intra.cma_overhead},
      {"xpmem_attach", &p.intra.xpmem_attach}, {"sync_const", &p.intra.sync_const}};
  for (const auto& [key, value] : overrides.items()) {
    if (key == "preset") continue;
    if (key == "sync_per_round") {
      if (!value.is_boolean()) throw std::invalid_argument("sync_per_round must be a boolean");
      p.net.sync_per_round = value.get<bool>();
      continue;
    }
    const auto it = reals.find(key);
    if (it == reals.end()) throw std::invalid_argument("unknown parameter '" + key + "'");
    if (!value.is_number() || value.get<double>() < 0.0) {
      throw std::invalid_argument("parameter '" + key + "' must be a non-negative number");
    }
    *it->second = value.get<double>();
  }
  return p;
}

namespace {

double overhead_due(const TransportModel& t, AttachCache* cache, int accessor, int owner) {
  if (t.per_op_overhead == 0.0) return 0.0;
  if (t.overhead_cached_per_pair && cache != nullptr && !cache->first_touch(accessor, owner)) {
    return 0.0;
  }
  return t.per_op_overhead;
}

struct NodeLoad {
  std::unordered_map<int, std::pair<int, double>> per_rank;  // rank -> (messages, bytes)
  double total_bytes = 0.0;
  double intra_time = 0.0;
};

double node_network_time(const NodeLoad& load, const NetParams& params) {
  if (load.per_rank.empty()) return 0.0;
  double stream = 0.0;
  for (const auto& [rank, mb] : load.per_rank) {
    stream = std::max(stream, mb.first * params.gap_proc + mb.second * params.beta_inter);
  }
  return params.alpha_inter + std::max(stream, load.total_bytes * params.beta_node);
}

void add_message(NodeLoad& load, int rank, double bytes) {
  auto& mb = load.per_rank[rank];
  mb.first += 1;
  mb.second += bytes;
  load.total_bytes += bytes;
}

}  // namespace

double inter_round_time(const InterRound& round, const BlockLayout& layout,
                        const NetParams& params) {
  std::map<int, NodeLoad> nodes;
  for (const auto& a : round.actions) {
    add_message(nodes[a.actor.node_id], a.actor.global_rank,
                static_cast<double>(a.send.length) * static_cast<double>(layout.block_bytes));
  }
  double worst = 0.0;
  for (const auto& [node, load] : nodes) worst = std::max(worst, node_network_time(load, params));
  return worst;
}

double inter_round_time(const InterRound& round, const Schedule& s, const NetParams& params,
                        const TransportModel& transport, AttachCache* cache) {
  std::map<int, NodeLoad> nodes;
  for (const auto& a : round.actions) {
    const double bytes =
        static_cast<double>(a.send.length) * static_cast<double>(s.layout.block_bytes);
    auto& load = nodes[a.actor.node_id];
    if (s.topo.decompose(a.dst_rank).node_id == a.actor.node_id) {
      const double t = transport.copies_per_transfer * bytes * transport.copy_beta +
                       overhead_due(transport, cache, a.actor.global_rank, a.dst_rank);
      load.intra_time = std::max(load.intra_time, t);
    } else {
      add_message(load, a.actor.global_rank, bytes);
    }
  }
  double worst = 0.0;
  for (const auto& [node, load] : nodes) {
    worst = std::max(worst, std::max(node_network_time(load, params), load.intra_time));
  }
  return worst;
}

double intra_phase_time(const Phase& phase, const Topology& topo, const BlockLayout& layout,
                        const TransportModel& t, AttachCache* cache) {
  const int p = topo.procs_per_node();
  const double m = static_cast<double>(layout.per_proc_bytes);
  const double full = static_cast<double>(layout.total_bytes());
  const bool per_process = layout.granularity == Granularity::process;

  if (std::holds_alternative<Rotate>(phase)) return full * t.copy_beta;

  if (std::holds_alternative<IntraGather>(phase)) {
    if (per_process) return m * t.copy_beta;  // own contribution into the work buffer
    if (p == 1) return 0.0;
    double worst = 0.0;
    for (int r = 1; r < p; ++r) {
      worst = std::max(worst, t.copies_per_transfer * m * t.copy_beta + overhead_due(t, cache, r, 0));
    }
    return worst + t.sync_const;
  }

  if (std::holds_alternative<IntraBcast>(phase)) {
    if (per_process || p == 1) return 0.0;
    double due = 0.0;
    for (int r = 1; r < p; ++r) due = std::max(due, overhead_due(t, cache, r, 0));
    return t.copies_per_transfer * full * t.copy_beta + due + t.sync_const;
  }
  return 0.0;
}

RunReport simulate(const Schedule& schedule, const NetParams& params,
                   const TransportModel& transport) {
  AttachCache cache;
  double total = 0.0;
  for (const auto& phase : schedule.phases) {
    if (const auto* round = std::get_if<InterRound>(&phase)) {
      total += inter_round_time(*round, schedule, params, transport, &cache);
      if (params.sync_per_round) total += transport.sync_const;
    } else {
      total += intra_phase_time(phase, schedule.topo, schedule.layout, transport, &cache);
    }
  }
  const auto stats = schedule_stats(schedule);
  RunReport report;
  report.algo = schedule.algorithm;
  report.transport = transport.kind;
  report.nodes = schedule.topo.num_nodes();
  report.ppn = schedule.topo.procs_per_node();
  report.per_proc_bytes = schedule.layout.per_proc_bytes;
  report.sim_time = total;
  report.inter_rounds = stats.inter_rounds;
  report.msgs_per_rank_max = stats.msgs_per_rank_max;
  report.bytes_on_wire_total = stats.bytes_on_wire_total;
  return report;
}

double analytic_crossover_bytes(const TransportModel& single_copy,
                                const TransportModel& double_copy) {
  const double slope = double_copy.copies_per_transfer * double_copy.copy_beta -
                       single_copy.copies_per_transfer * single_copy.copy_beta;
  if (slope <= 0.0) return std::numeric_limits<double>::infinity();
  return (single_copy.per_op_overhead - double_copy.per_op_overhead) / slope;
}

std::int64_t measured_crossover_bytes(const TransportModel& single_copy,
                                      const TransportModel& double_copy, std::int64_t limit) {
  const Topology pair(1, 2);
  auto single_wins = [&](std::int64_t m) {
    const auto layout = BlockLayout::per_node(pair, static_cast<std::size_t>(m));
    return intra_phase_time(IntraGather{}, pair, layout, single_copy) <
           intra_phase_time(IntraGather{}, pair, layout, double_copy);
  };
  if (!single_wins(limit)) return -1;
  std::int64_t lo = 0;
  std::int64_t hi = limit;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (single_wins(mid)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

}  // namespace mcoll
