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
 * @file    schedule.hpp
 * @brief   Block-granular intermediate representation of an allgather.
 *
 * A schedule is an ordered list of bulk-synchronous phases. Internode
 * traffic is expressed in whole blocks; byte offsets are derived as
 * block_index * block_bytes.
 *
 * Two granularities exist. With `Granularity::node` every node owns one
 * shared buffer of N blocks (one block = the P contributions of a node,
 * ordered by local rank) and all of its ranks read and write that buffer
 * directly. With `Granularity::process` every rank owns a private buffer of
 * N*P single-contribution blocks, which is how non-hierarchical algorithms
 * are described.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mcoll/topology.hpp"

namespace mcoll {

enum class Granularity { node, process };

/// Half-open range of blocks [start, start + length).
struct BlockRange {
  std::int64_t start = 0;
  std::int64_t length = 0;

  std::int64_t end() const { return start + length; }
  bool overlaps(const BlockRange& o) const {
    return length > 0 && o.length > 0 && start < o.end() && o.start < end();
  }
  friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

struct BlockLayout {
  std::size_t per_proc_bytes = 0;  ///< one rank's contribution
  std::size_t block_bytes = 0;     ///< unit of exchange
  int num_blocks = 0;              ///< blocks per buffer
  Granularity granularity = Granularity::node;

  /// Node-aggregated blocks: block_bytes = P * m, num_blocks = N.
  static BlockLayout per_node(const Topology& topo, std::size_t per_proc_bytes);
  /// One block per rank: block_bytes = m, num_blocks = N * P.
  static BlockLayout per_process(const Topology& topo, std::size_t per_proc_bytes);

  std::size_t total_bytes() const { return block_bytes * static_cast<std::size_t>(num_blocks); }
  std::size_t byte_offset(std::int64_t block) const {
    return static_cast<std::size_t>(block) * block_bytes;
  }
  friend bool operator==(const BlockLayout&, const BlockLayout&) = default;
};

/**
 * Combined exchange performed by `actor`: its `send` blocks go to `dst_rank`
 * while the matching blocks from `src_rank` land in its `recv` range.
 */
struct SendRecv {
  RankCoord actor;
  int dst_rank = 0;
  int src_rank = 0;
  BlockRange send;
  BlockRange recv;
  friend bool operator==(const SendRecv&, const SendRecv&) = default;
};

struct IntraGather {
  friend bool operator==(const IntraGather&, const IntraGather&) = default;
};
struct InterRound {
  std::vector<SendRecv> actions;
  friend bool operator==(const InterRound&, const InterRound&) = default;
};
struct Rotate {
  friend bool operator==(const Rotate&, const Rotate&) = default;
};
struct IntraBcast {
  friend bool operator==(const IntraBcast&, const IntraBcast&) = default;
};

using Phase = std::variant<IntraGather, InterRound, Rotate, IntraBcast>;

std::string phase_name(const Phase& phase);

struct Schedule {
  std::string algorithm;
  Topology topo;
  BlockLayout layout;
  std::vector<Phase> phases;

  /// Number of buffers: N for node granularity, N*P for process granularity.
  int num_units() const;
  /// Buffer owned by (or shared with) `global_rank`.
  int unit_of(int global_rank) const;
};

// Validation

enum class ViolationKind {
  bad_layout,
  invalid_rank,
  range_out_of_bounds,
  length_mismatch,
  self_pairing,
  duplicate_actor,
  unmatched_send,
  unmatched_recv,
  overlapping_recv,
};

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::size_t phase_index = 0;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  explicit operator bool() const { return ok(); }
  bool has(ViolationKind kind) const;
  std::string summary() const;
};

/**
 * Structural check of a schedule. Within every InterRound:
 *  - each send to d is matched by exactly one action at d receiving from the
 *    sender with the same length, and each receive has a matching send;
 *  - receive ranges on one buffer do not overlap;
 *  - no rank acts twice;
 *  - ranges lie inside [0, num_blocks) and an actor never pairs with its own
 *    buffer.
 */
ValidationReport validate_schedule(const Schedule& schedule);

struct ScheduleStats {
  int inter_rounds = 0;
  int msgs_per_rank_max = 0;
  std::size_t bytes_on_wire_total = 0;
  friend bool operator==(const ScheduleStats&, const ScheduleStats&) = default;
};

ScheduleStats schedule_stats(const Schedule& schedule);

// Serialization. Phases are tagged by "phase"; ranges are [start, length].

nlohmann::json to_json(const Schedule& schedule);
/// Throws std::invalid_argument on malformed documents.
Schedule schedule_from_json(const nlohmann::json& doc);

}  // namespace mcoll
