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
 * @file    topology.hpp
 * @brief   Machine shape (nodes x processes per node) and the rank mapping.
 */

#pragma once

#include <cstdint>

namespace mcoll {

/// Euclidean modulo: result is always in [0, n) for n > 0.
constexpr std::int64_t euclid_mod(std::int64_t a, std::int64_t n) {
  const std::int64_t r = a % n;
  return r < 0 ? r + n : r;
}

struct RankCoord {
  int node_id = 0;
  int local_rank = 0;
  int global_rank = 0;

  bool is_local_root() const { return local_rank == 0; }
  friend bool operator==(const RankCoord&, const RankCoord&) = default;
};

/**
 * N nodes with P processes each. Ranks use block mapping:
 * global = node * P + local.
 */
class Topology {
 public:
  /// Throws std::invalid_argument unless both counts are >= 1.
  Topology(int num_nodes, int procs_per_node);

  int num_nodes() const { return num_nodes_; }
  int procs_per_node() const { return procs_per_node_; }
  int total_ranks() const { return num_nodes_ * procs_per_node_; }

  /// Throws std::domain_error for ranks outside [0, N*P).
  RankCoord decompose(int global_rank) const;
  /// Throws std::domain_error when node or local rank is out of range.
  int compose(int node_id, int local_rank) const;

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  int num_nodes_;
  int procs_per_node_;
};

inline RankCoord decompose_rank(const Topology& topo, int global_rank) {
  return topo.decompose(global_rank);
}

struct NodePair {
  int src_node = 0;
  int dst_node = 0;
};

/**
 * Peers of `node_id` at distance `offset`: data arrives from
 * (node + offset) mod N and leaves for (node - offset) mod N.
 *
 * An offset that is a multiple of N would pair a node with itself; that is a
 * builder bug and raises std::logic_error.
 */
NodePair paired_nodes(const Topology& topo, int node_id, std::int64_t offset);

}  // namespace mcoll
