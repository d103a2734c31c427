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

#include "mcoll/topology.hpp"

#include <stdexcept>
#include <string>

namespace mcoll {

Topology::Topology(int num_nodes, int procs_per_node)
    : num_nodes_(num_nodes), procs_per_node_(procs_per_node) {
  if (num_nodes < 1 || procs_per_node < 1) {
    throw std::invalid_argument("topology needs at least one node and one process per node, got " +
                                std::to_string(num_nodes) + "x" + std::to_string(procs_per_node));
  }
}

RankCoord Topology::decompose(int global_rank) const {
  if (global_rank < 0 || global_rank >= total_ranks()) {
    throw std::domain_error("rank " + std::to_string(global_rank) + " outside [0, " +
                            std::to_string(total_ranks()) + ")");
  }
  return RankCoord{global_rank / procs_per_node_, global_rank % procs_per_node_, global_rank};
}

int Topology::compose(int node_id, int local_rank) const {
  if (node_id < 0 || node_id >= num_nodes_ || local_rank < 0 || local_rank >= procs_per_node_) {
    throw std::domain_error("coordinate (" + std::to_string(node_id) + ", " +
                            std::to_string(local_rank) + ") outside topology");
  }
  return node_id * procs_per_node_ + local_rank;
}

NodePair paired_nodes(const Topology& topo, int node_id, std::int64_t offset) {
  const std::int64_t n = topo.num_nodes();
  if (node_id < 0 || node_id >= n) {
    throw std::domain_error("node " + std::to_string(node_id) + " outside topology");
  }
  if (euclid_mod(offset, n) == 0) {
    throw std::logic_error("offset " + std::to_string(offset) + " pairs node " +
                           std::to_string(node_id) + " with itself");
  }
  return NodePair{static_cast<int>(euclid_mod(node_id + offset, n)),
                  static_cast<int>(euclid_mod(node_id - offset, n))};
}

}  // namespace mcoll
