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

#include "mcoll/algorithms.hpp"

#include <algorithm>
#include <functional>

namespace mcoll {

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::mcoll: return "mcoll";
    case Algorithm::bruck2: return "bruck2";
    case Algorithm::recursive_doubling: return "recursive_doubling";
    case Algorithm::ring: return "ring";
    case Algorithm::flat_bruck: return "flat_bruck";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (auto algo : all_algorithms()) {
    if (to_string(algo) == name) return algo;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> algos{Algorithm::mcoll, Algorithm::bruck2,
                                            Algorithm::recursive_doubling, Algorithm::ring,
                                            Algorithm::flat_bruck};
  return algos;
}

RoundPlan mcoll_round_plan(int num_nodes, int procs_per_node) {
  if (num_nodes < 1 || procs_per_node < 1) {
    throw std::invalid_argument("round plan needs N >= 1 and P >= 1");
  }
  McollRoundState state{1, static_cast<std::int64_t>(procs_per_node) + 1, 0};
  RoundPlan plan;
  plan.radix = state.radix;
  // Integer form of "step <= N / radix".
  while (state.step * state.radix <= num_nodes) {
    plan.full_round_steps.push_back(state.step);
    state.step *= state.radix;
    ++state.round_index;
  }
  plan.final_step = state.step;
  return plan;
}

std::int64_t RemainderPlan::total() const {
  std::int64_t sum = 0;
  for (auto c : per_local_rank_counts) sum += c;
  return sum;
}

RemainderPlan remainder_plan(int num_nodes, int procs_per_node, std::int64_t final_step) {
  const std::int64_t n = num_nodes;
  const std::int64_t s = final_step;
  if (procs_per_node < 1 || s < 1 || s > n || s * (procs_per_node + 1) <= n) {
    throw std::invalid_argument("remainder plan requires S <= N < S * (P + 1)");
  }
  RemainderPlan plan;
  plan.per_local_rank_counts.reserve(procs_per_node);
  plan.start_offsets.reserve(procs_per_node);
  for (std::int64_t r = 0; r < procs_per_node; ++r) {
    plan.per_local_rank_counts.push_back(std::max<std::int64_t>(std::min(s, (n - s) - s * r), 0));
    plan.start_offsets.push_back(s * (r + 1));
  }
  return plan;
}

std::vector<int> rotate_permutation(int num_blocks, int unit_id) {
  if (num_blocks < 1 || unit_id < 0 || unit_id >= num_blocks) {
    throw std::domain_error("rotation index outside [0, num_blocks)");
  }
  std::vector<int> perm(num_blocks);
  for (int m = 0; m < num_blocks; ++m) {
    perm[m] = static_cast<int>(euclid_mod(m - unit_id, num_blocks));
  }
  return perm;
}

namespace {

void require_layout(const Topology& topo, const BlockLayout& layout) {
  if (layout != BlockLayout::per_node(topo, layout.per_proc_bytes)) {
    throw std::invalid_argument("multi-object allgather needs a node-granular layout for the topology");
  }
}

SendRecv exchange(const Topology& topo, int actor_rank, int dst_rank, int src_rank,
                  BlockRange send, BlockRange recv) {
  return SendRecv{topo.decompose(actor_rank), dst_rank, src_rank, send, recv};
}

// Radix-2 dissemination over `units` peers. Unit u holds the data of unit
// (u + j) mod units at index j once all rounds are done.
void append_radix2_rounds(Schedule& s, int units, const std::function<int(int)>& rank_of) {
  for (std::int64_t dist = 1; dist < units; dist *= 2) {
    const std::int64_t count = std::min<std::int64_t>(dist, units - dist);
    InterRound round;
    round.actions.reserve(units);
    for (int u = 0; u < units; ++u) {
      const int dst = static_cast<int>(euclid_mod(u - dist, units));
      const int src = static_cast<int>(euclid_mod(u + dist, units));
      round.actions.push_back(exchange(s.topo, rank_of(u), rank_of(dst), rank_of(src),
                                       BlockRange{0, count}, BlockRange{dist, count}));
    }
    s.phases.emplace_back(std::move(round));
  }
}

Schedule build_bruck2(const Topology& topo, std::size_t m) {
  Schedule s{"bruck2", topo, BlockLayout::per_node(topo, m), {IntraGather{}}};
  append_radix2_rounds(s, topo.num_nodes(), [&](int node) { return topo.compose(node, 0); });
  s.phases.emplace_back(Rotate{});
  s.phases.emplace_back(IntraBcast{});
  return s;
}

Schedule build_flat_bruck(const Topology& topo, std::size_t m) {
  Schedule s{"flat_bruck", topo, BlockLayout::per_process(topo, m), {IntraGather{}}};
  append_radix2_rounds(s, topo.total_ranks(), [](int rank) { return rank; });
  s.phases.emplace_back(Rotate{});
  s.phases.emplace_back(IntraBcast{});
  return s;
}

Schedule build_ring(const Topology& topo, std::size_t m) {
  const int n = topo.num_nodes();
  Schedule s{"ring", topo, BlockLayout::per_node(topo, m), {IntraGather{}}};
  for (std::int64_t t = 0; t + 1 < n; ++t) {
    InterRound round;
    for (int node = 0; node < n; ++node) {
      const auto pair = paired_nodes(topo, node, 1);
      round.actions.push_back(exchange(topo, topo.compose(node, 0), topo.compose(pair.dst_node, 0),
                                       topo.compose(pair.src_node, 0), BlockRange{t, 1},
                                       BlockRange{t + 1, 1}));
    }
    s.phases.emplace_back(std::move(round));
  }
  s.phases.emplace_back(Rotate{});
  s.phases.emplace_back(IntraBcast{});
  return s;
}

// Works in absolute block order: the leading Rotate moves each node's own
// block to index node_id, then partners at XOR distance swap aligned groups.
Schedule build_recursive_doubling(const Topology& topo, std::size_t m) {
  const int n = topo.num_nodes();
  if ((n & (n - 1)) != 0) {
    throw UnsupportedShape("recursive_doubling requires power-of-two nodes, got " +
                           std::to_string(n));
  }
  Schedule s{"recursive_doubling", topo, BlockLayout::per_node(topo, m), {IntraGather{}, Rotate{}}};
  for (int dist = 1; dist < n; dist *= 2) {
    InterRound round;
    for (int node = 0; node < n; ++node) {
      const int partner = node ^ dist;
      const int peer_rank = topo.compose(partner, 0);
      round.actions.push_back(exchange(topo, topo.compose(node, 0), peer_rank, peer_rank,
                                       BlockRange{node & ~(dist - 1), dist},
                                       BlockRange{partner & ~(dist - 1), dist}));
    }
    s.phases.emplace_back(std::move(round));
  }
  s.phases.emplace_back(IntraBcast{});
  return s;
}

}  // namespace

Schedule build_mcoll_allgather(const Topology& topo, const BlockLayout& layout) {
  require_layout(topo, layout);
  const int n = topo.num_nodes();
  const int p = topo.procs_per_node();
  const auto plan = mcoll_round_plan(n, p);

  Schedule s{"mcoll", topo, layout, {IntraGather{}}};

  // Every local rank fetches a distinct chunk of S blocks per round.
  for (const auto step : plan.full_round_steps) {
    InterRound round;
    round.actions.reserve(static_cast<std::size_t>(n) * p);
    for (int node = 0; node < n; ++node) {
      for (int r = 0; r < p; ++r) {
        const std::int64_t offset = step * (r + 1);
        const auto pair = paired_nodes(topo, node, offset);
        round.actions.push_back(exchange(topo, topo.compose(node, r), topo.compose(pair.dst_node, r),
                                         topo.compose(pair.src_node, r), BlockRange{0, step},
                                         BlockRange{offset, step}));
      }
    }
    s.phases.emplace_back(std::move(round));
  }

  const auto rem = remainder_plan(n, p, plan.final_step);
  if (rem.total() > 0) {
    InterRound round;
    for (int node = 0; node < n; ++node) {
      for (int r = 0; r < p; ++r) {
        const auto count = rem.per_local_rank_counts[r];
        if (count == 0) continue;
        const auto offset = rem.start_offsets[r];
        const auto pair = paired_nodes(topo, node, offset);
        round.actions.push_back(exchange(topo, topo.compose(node, r), topo.compose(pair.dst_node, r),
                                         topo.compose(pair.src_node, r), BlockRange{0, count},
                                         BlockRange{offset, count}));
      }
    }
    s.phases.emplace_back(std::move(round));
  }

  s.phases.emplace_back(Rotate{});
  s.phases.emplace_back(IntraBcast{});
  return s;
}

Schedule build_baseline(Algorithm kind, const Topology& topo, const BlockLayout& layout) {
  const auto m = layout.per_proc_bytes;
  switch (kind) {
    case Algorithm::bruck2: return build_bruck2(topo, m);
    case Algorithm::recursive_doubling: return build_recursive_doubling(topo, m);
    case Algorithm::ring: return build_ring(topo, m);
    case Algorithm::flat_bruck: return build_flat_bruck(topo, m);
    case Algorithm::mcoll: break;
  }
  throw std::invalid_argument("mcoll is not a baseline");
}

Schedule build_schedule(Algorithm algo, const Topology& topo, std::size_t per_proc_bytes) {
  if (algo == Algorithm::mcoll) {
    return build_mcoll_allgather(topo, BlockLayout::per_node(topo, per_proc_bytes));
  }
  return build_baseline(algo, topo, BlockLayout::per_node(topo, per_proc_bytes));
}

}  // namespace mcoll
