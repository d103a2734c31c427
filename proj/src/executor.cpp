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

#include "mcoll/executor.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <random>
#include <unordered_map>

#include "mcoll/algorithms.hpp"

namespace mcoll {

std::vector<Bytes> random_contributions(const Topology& topo, std::size_t per_proc_bytes,
                                        std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::vector<Bytes> out(topo.total_ranks(), Bytes(per_proc_bytes));
  for (auto& contribution : out) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < contribution.size(); ++i) {
      if (i % 8 == 0) bits = engine();
      contribution[i] = static_cast<std::uint8_t>(bits >> (8 * (i % 8)));
    }
  }
  return out;
}

Bytes oracle_result(std::span<const Bytes> contributions) {
  Bytes all;
  for (const auto& c : contributions) all.insert(all.end(), c.begin(), c.end());
  return all;
}

std::vector<Bytes> oracle_allgather(std::span<const Bytes> contributions) {
  std::vector<Bytes> outputs;
  outputs.reserve(contributions.size());
  for (std::size_t r = 0; r < contributions.size(); ++r) {
    Bytes out;
    for (const auto& c : contributions) out.insert(out.end(), c.begin(), c.end());
    outputs.push_back(std::move(out));
  }
  return outputs;
}

namespace {

using Order = std::function<std::vector<std::size_t>(std::size_t)>;

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

std::string range_str(const BlockRange& r) {
  return "[" + std::to_string(r.start) + "+" + std::to_string(r.length) + ")";
}

// Buffers of `Cell`, `stride` cells per block. Bytes use stride = block_bytes,
// labels use stride = 1.
template <typename Cell>
class Machine {
 public:
  Machine(const Schedule& s, std::size_t stride, Cell empty)
      : s_(s),
        stride_(stride),
        units_(static_cast<std::size_t>(s.num_units()),
               std::vector<Cell>(stride * static_cast<std::size_t>(s.layout.num_blocks), empty)) {}

  std::vector<Cell>& unit(int u) { return units_[static_cast<std::size_t>(u)]; }
  int num_units() const { return static_cast<int>(units_.size()); }

  void inter_round(const InterRound& round, const std::vector<std::size_t>& order) {
    const auto& actions = round.actions;
    std::unordered_map<int, std::size_t> by_actor;
    std::unordered_map<int, std::vector<BlockRange>> writes;
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const auto& a = actions[i];
      if (!by_actor.emplace(a.actor.global_rank, i).second) {
        throw ExecutionFault("rank " + std::to_string(a.actor.global_rank) + " acts twice");
      }
      check_bounds(a.recv, a.actor.global_rank);
      auto& ranges = writes[s_.unit_of(a.actor.global_rank)];
      for (const auto& other : ranges) {
        if (other.overlaps(a.recv)) {
          throw ExecutionFault("overlapping writes " + range_str(other) + " and " +
                               range_str(a.recv) + " on buffer " +
                               std::to_string(s_.unit_of(a.actor.global_rank)));
        }
      }
      ranges.push_back(a.recv);
    }

    // Resolve the sender of every receive.
    std::vector<std::size_t> source(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const auto& a = actions[i];
      const auto it = by_actor.find(a.src_rank);
      if (it == by_actor.end() || actions[it->second].dst_rank != a.actor.global_rank) {
        throw ExecutionFault("rank " + std::to_string(a.actor.global_rank) +
                             " receives from rank " + std::to_string(a.src_rank) +
                             " which does not send to it");
      }
      const auto& b = actions[it->second];
      check_bounds(b.send, b.actor.global_rank);
      if (b.send.length != a.recv.length) {
        throw ExecutionFault("send " + range_str(b.send) + " does not fit receive " +
                             range_str(a.recv));
      }
      source[i] = it->second;
    }

    // Snapshot only send ranges that this round also writes to.
    std::unordered_map<std::size_t, std::vector<Cell>> snapshots;
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const auto& b = actions[i];
      const auto w = writes.find(s_.unit_of(b.actor.global_rank));
      if (w == writes.end()) continue;
      const bool clobbered = std::any_of(w->second.begin(), w->second.end(),
                                         [&](const BlockRange& r) { return r.overlaps(b.send); });
      if (clobbered) {
        const auto span = cells(s_.unit_of(b.actor.global_rank), b.send);
        snapshots.emplace(i, std::vector<Cell>(span.begin(), span.end()));
      }
    }

    for (const auto i : order) {
      const auto& a = actions.at(i);
      const auto& b = actions[source[i]];
      auto dst = cells(s_.unit_of(a.actor.global_rank), a.recv);
      if (const auto snap = snapshots.find(source[i]); snap != snapshots.end()) {
        std::copy(snap->second.begin(), snap->second.end(), dst.begin());
      } else {
        const auto src = cells(s_.unit_of(b.actor.global_rank), b.send);
        std::copy(src.begin(), src.end(), dst.begin());
      }
    }
  }

  void rotate() {
    const int nb = s_.layout.num_blocks;
    std::vector<Cell> tmp;
    for (int u = 0; u < num_units(); ++u) {
      auto& buf = unit(u);
      tmp.assign(buf.size(), Cell{});
      const auto perm = rotate_permutation(nb, u);
      for (int m = 0; m < nb; ++m) {
        std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(perm[m] * stride_), stride_,
                    tmp.begin() + static_cast<std::ptrdiff_t>(m * stride_));
      }
      buf.swap(tmp);
    }
  }

 private:
  void check_bounds(const BlockRange& r, int rank) const {
    if (r.start < 0 || r.length < 0 || r.end() > s_.layout.num_blocks) {
      throw ExecutionFault("range " + range_str(r) + " of rank " + std::to_string(rank) +
                           " outside buffer of " + std::to_string(s_.layout.num_blocks) +
                           " blocks");
    }
  }

  std::span<Cell> cells(int u, const BlockRange& r) {
    return std::span<Cell>(unit(u)).subspan(static_cast<std::size_t>(r.start) * stride_,
                                            static_cast<std::size_t>(r.length) * stride_);
  }

  const Schedule& s_;
  std::size_t stride_;
  std::vector<std::vector<Cell>> units_;
};

template <typename Cell, typename Gather, typename Bcast>
void run_phases(const Schedule& s, Machine<Cell>& machine, std::size_t stop_before,
                const Order& order, Gather&& gather, Bcast&& bcast) {
  stop_before = std::min(stop_before, s.phases.size());
  for (std::size_t pi = 0; pi < stop_before; ++pi) {
    const auto& phase = s.phases[pi];
    if (std::holds_alternative<IntraGather>(phase)) {
      gather();
    } else if (const auto* round = std::get_if<InterRound>(&phase)) {
      machine.inter_round(*round, order(round->actions.size()));
    } else if (std::holds_alternative<Rotate>(phase)) {
      machine.rotate();
    } else {
      bcast();
    }
  }
}

void execute_impl(const Schedule& s, std::span<const Bytes> contributions, const OutputSink& sink,
                  const Order& order) {
  const auto& topo = s.topo;
  const auto m = s.layout.per_proc_bytes;
  if (contributions.size() != static_cast<std::size_t>(topo.total_ranks())) {
    throw std::invalid_argument("expected one contribution per rank");
  }
  for (const auto& c : contributions) {
    if (c.size() != m) throw std::invalid_argument("contribution size differs from layout");
  }

  Machine<std::uint8_t> machine(s, s.layout.block_bytes, 0);
  auto gather = [&] {
    // Local rank r's bytes sit at offset r * m of block 0 (node granularity).
    for (int rank = 0; rank < topo.total_ranks(); ++rank) {
      const auto coord = topo.decompose(rank);
      auto& buf = machine.unit(s.unit_of(rank));
      const std::size_t offset =
          s.layout.granularity == Granularity::node ? static_cast<std::size_t>(coord.local_rank) * m : 0;
      std::copy(contributions[rank].begin(), contributions[rank].end(),
                buf.begin() + static_cast<std::ptrdiff_t>(offset));
    }
  };
  auto bcast = [&] {
    for (int rank = 0; rank < topo.total_ranks(); ++rank) {
      sink(rank, machine.unit(s.unit_of(rank)));
    }
  };
  run_phases(s, machine, s.phases.size(), order, gather, bcast);
}

}  // namespace

void execute(const Schedule& schedule, std::span<const Bytes> contributions,
             const OutputSink& sink) {
  execute_impl(schedule, contributions, sink, identity_order);
}

std::vector<Bytes> execute_with_order(const Schedule& schedule,
                                      std::span<const Bytes> contributions, const Order& order) {
  std::vector<Bytes> outputs(static_cast<std::size_t>(schedule.topo.total_ranks()));
  execute_impl(
      schedule, contributions,
      [&](int rank, std::span<const std::uint8_t> bytes) {
        outputs[rank].assign(bytes.begin(), bytes.end());
      },
      order);
  return outputs;
}

std::vector<Bytes> execute(const Schedule& schedule, std::span<const Bytes> contributions) {
  return execute_with_order(schedule, contributions, identity_order);
}

VerifyResult verify_against_oracle(const Schedule& schedule,
                                   std::span<const Bytes> contributions) {
  constexpr std::size_t kMaxReported = 4;
  const Bytes expected = oracle_result(contributions);
  VerifyResult result;
  std::vector<bool> seen(static_cast<std::size_t>(schedule.topo.total_ranks()), false);
  auto report = [&](int rank, std::size_t byte, std::string detail) {
    ++result.mismatched_ranks;
    if (result.mismatches.size() < kMaxReported) {
      result.mismatches.push_back(Mismatch{rank, byte, std::move(detail)});
    }
  };

  execute(schedule, contributions, [&](int rank, std::span<const std::uint8_t> got) {
    seen[rank] = true;
    ++result.ranks_checked;
    if (got.size() != expected.size()) {
      report(rank, 0, "output has " + std::to_string(got.size()) + " bytes, expected " +
                          std::to_string(expected.size()));
      return;
    }
    if (std::memcmp(got.data(), expected.data(), expected.size()) == 0) return;
    const auto diff = std::mismatch(got.begin(), got.end(), expected.begin());
    const auto at = static_cast<std::size_t>(diff.first - got.begin());
    report(rank, at, "byte " + std::to_string(at) + " is " + std::to_string(*diff.first) +
                         ", expected " + std::to_string(*diff.second));
  });
  for (std::size_t r = 0; r < seen.size(); ++r) {
    if (!seen[r]) report(static_cast<int>(r), 0, "no output produced");
  }
  result.ok = result.mismatched_ranks == 0;
  return result;
}

std::vector<std::vector<int>> trace_block_origins(const Schedule& s, std::size_t stop_before) {
  Machine<int> machine(s, 1, -1);
  auto gather = [&] {
    for (int u = 0; u < machine.num_units(); ++u) machine.unit(u)[0] = u;
  };
  run_phases(s, machine, stop_before, identity_order, gather, [] {});
  std::vector<std::vector<int>> labels;
  labels.reserve(static_cast<std::size_t>(machine.num_units()));
  for (int u = 0; u < machine.num_units(); ++u) labels.push_back(machine.unit(u));
  return labels;
}

std::optional<std::string> check_block_coverage(const Schedule& s) {
  std::size_t last_round = 0;
  std::optional<std::size_t> last_rotate;
  for (std::size_t pi = 0; pi < s.phases.size(); ++pi) {
    if (std::holds_alternative<InterRound>(s.phases[pi])) last_round = pi;
    if (std::holds_alternative<Rotate>(s.phases[pi])) last_rotate = pi;
  }
  const bool relative = last_rotate && *last_rotate > last_round;
  const auto labels = trace_block_origins(s, relative ? *last_rotate : s.phases.size());
  const int units = static_cast<int>(labels.size());
  for (int u = 0; u < units; ++u) {
    for (int j = 0; j < static_cast<int>(labels[u].size()); ++j) {
      const int want = relative ? static_cast<int>(euclid_mod(u + j, units)) : j;
      if (labels[u][j] != want) {
        return "buffer " + std::to_string(u) + " block " + std::to_string(j) + " holds origin " +
               std::to_string(labels[u][j]) + ", expected " + std::to_string(want);
      }
    }
  }
  return std::nullopt;
}

}  // namespace mcoll
