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
 * @file    algorithms.hpp
 * @brief   Allgather schedule builders.
 *
 * `mcoll` is the multi-object hierarchical Bruck: every local rank of a node
 * is a concurrent sender/receiver on the node's shared buffer, so each round
 * multiplies the number of held blocks by P + 1 instead of 2. The baselines
 * use a single sender per node (the local root), except `flat_bruck`, which
 * ignores the node hierarchy altogether.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mcoll/schedule.hpp"
#include "mcoll/topology.hpp"

namespace mcoll {

enum class Algorithm { mcoll, bruck2, recursive_doubling, ring, flat_bruck };

std::string to_string(Algorithm algo);
/// Throws std::invalid_argument for unknown names.
Algorithm parse_algorithm(std::string_view name);
const std::vector<Algorithm>& all_algorithms();

/// Raised when an algorithm cannot handle the requested machine shape.
class UnsupportedShape : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Loop state of the multi-object Bruck main phase.
struct McollRoundState {
  std::int64_t step = 1;   ///< blocks held before the round
  std::int64_t radix = 2;  ///< P + 1
  int round_index = 0;
};

struct RoundPlan {
  std::int64_t radix = 2;
  std::vector<std::int64_t> full_round_steps;  ///< 1, radix, radix^2, ...
  std::int64_t final_step = 1;                 ///< blocks held after the full rounds
};

/// Full rounds run while step * (P + 1) <= N.
RoundPlan mcoll_round_plan(int num_nodes, int procs_per_node);

struct RemainderPlan {
  std::vector<std::int64_t> per_local_rank_counts;
  std::vector<std::int64_t> start_offsets;

  std::int64_t total() const;
};

/**
 * Split of the N - S outstanding blocks over the local ranks:
 * count[r] = max(min(S, (N - S) - S * r), 0), received at S * (r + 1).
 * Requires S <= N < S * (P + 1); throws std::invalid_argument otherwise.
 */
RemainderPlan remainder_plan(int num_nodes, int procs_per_node, std::int64_t final_step);

/// out[m] = working block that lands at output index m, i.e. (m - unit_id) mod num_blocks.
std::vector<int> rotate_permutation(int num_blocks, int unit_id);

/// Requires a node-granular layout built for `topo`.
Schedule build_mcoll_allgather(const Topology& topo, const BlockLayout& layout);

/**
 * Single-sender baselines and the flat (non-hierarchical) Bruck. Only
 * `layout.per_proc_bytes` is used; the builder picks the granularity.
 * recursive_doubling throws UnsupportedShape unless N is a power of two.
 */
Schedule build_baseline(Algorithm kind, const Topology& topo, const BlockLayout& layout);

/// Dispatches to the right builder for any algorithm.
Schedule build_schedule(Algorithm algo, const Topology& topo, std::size_t per_proc_bytes);

}  // namespace mcoll
