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
 * @file    executor.hpp
 * @brief   Byte-exact schedule execution and the brute-force allgather oracle.
 *
 * With node granularity all ranks of a node operate on one shared buffer,
 * the way processes loaded into a single address space would. Each round's
 * actions behave as if simultaneous: send ranges are read as they were at
 * the start of the round.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcoll/schedule.hpp"

namespace mcoll {

using Bytes = std::vector<std::uint8_t>;

/// A builder produced a schedule the executor cannot apply.
class ExecutionFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-rank contributions of `per_proc_bytes` each, drawn from a seeded PRNG.
std::vector<Bytes> random_contributions(const Topology& topo, std::size_t per_proc_bytes,
                                        std::uint64_t seed);

/// Concatenation of all contributions in global rank order.
Bytes oracle_result(std::span<const Bytes> contributions);

/// Reference semantics: every rank ends with `oracle_result`.
std::vector<Bytes> oracle_allgather(std::span<const Bytes> contributions);

/// Receives each rank's final buffer as it is copied out by IntraBcast.
using OutputSink = std::function<void(int global_rank, std::span<const std::uint8_t>)>;

/**
 * Runs `schedule` over `contributions` (one per rank, each per_proc_bytes
 * long), streaming results to `sink`. Throws ExecutionFault on out-of-bounds
 * or overlapping writes and on sends without a receiver.
 */
void execute(const Schedule& schedule, std::span<const Bytes> contributions,
             const OutputSink& sink);

/// Collects every rank's output. Ranks never reached by IntraBcast stay empty.
std::vector<Bytes> execute(const Schedule& schedule, std::span<const Bytes> contributions);

struct Mismatch {
  int rank = 0;
  std::size_t first_byte = 0;
  std::string detail;
};

struct VerifyResult {
  bool ok = false;
  int ranks_checked = 0;
  std::vector<Mismatch> mismatches;  ///< capped at a handful of entries
  int mismatched_ranks = 0;
};

/// Executes and compares every rank's output with the oracle without keeping
/// all outputs in memory.
VerifyResult verify_against_oracle(const Schedule& schedule, std::span<const Bytes> contributions);

/**
 * Labeled execution: each block carries the index of the buffer it came from
 * (-1 when empty). Runs phases [0, stop_before) and returns the labels of
 * every buffer.
 */
std::vector<std::vector<int>> trace_block_origins(const Schedule& schedule,
                                                  std::size_t stop_before);

/**
 * Checks that right before the last Rotate every buffer u holds the block of
 * (u + j) mod units at index j. Returns a diagnostic on failure. Schedules
 * without a trailing Rotate are checked for absolute order at the end.
 */
std::optional<std::string> check_block_coverage(const Schedule& schedule);

/// Test hook: same as execute() but applies each round's actions in the order
/// given by `order(round_size)`.
std::vector<Bytes> execute_with_order(
    const Schedule& schedule, std::span<const Bytes> contributions,
    const std::function<std::vector<std::size_t>(std::size_t)>& order);

}  // namespace mcoll
