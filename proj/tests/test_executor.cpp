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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "mcoll/algorithms.hpp"
#include "mcoll/executor.hpp"

using namespace mcoll;

namespace {

std::vector<Bytes> single_bytes(std::initializer_list<std::uint8_t> values) {
  std::vector<Bytes> out;
  for (auto v : values) out.push_back(Bytes{v});
  return out;
}

}  // namespace

TEST_CASE("oracle_allgather is concatenation in rank order") {
  const auto four = oracle_allgather(single_bytes({'a', 'b', 'c', 'd'}));
  REQUIRE(four.size() == 4);
  for (const auto& out : four) CHECK(out == Bytes{'a', 'b', 'c', 'd'});

  const auto one = oracle_allgather(single_bytes({42}));
  REQUIRE(one.size() == 1);
  CHECK(one[0] == Bytes{42});

  const auto six = oracle_allgather(single_bytes({1, 2, 3, 4, 5, 6}));
  for (const auto& out : six) CHECK(out == Bytes{1, 2, 3, 4, 5, 6});
}

TEST_CASE("random contributions are reproducible from the seed") {
  const Topology t(3, 2);
  CHECK(random_contributions(t, 17, 5) == random_contributions(t, 17, 5));
  CHECK(random_contributions(t, 17, 5) != random_contributions(t, 17, 6));
  CHECK(random_contributions(t, 17, 5)[0].size() == 17);
}

TEST_CASE("executed schedules match the oracle") {
  SUBCASE("mcoll N=10 P=2") {
    const Topology t(10, 2);
    const auto in = random_contributions(t, 16, 1);
    CHECK(execute(build_schedule(Algorithm::mcoll, t, 16), in) == oracle_allgather(in));
  }
  SUBCASE("bruck2 N=7 P=3") {
    const Topology t(7, 3);
    const auto in = random_contributions(t, 5, 2);
    CHECK(execute(build_schedule(Algorithm::bruck2, t, 5), in) == oracle_allgather(in));
  }
  SUBCASE("degenerate N=1 P=1") {
    const Topology t(1, 1);
    const Schedule s{"degenerate", t, BlockLayout::per_node(t, 3), {IntraGather{}, Rotate{}, IntraBcast{}}};
    const auto in = random_contributions(t, 3, 3);
    CHECK(execute(s, in) == oracle_allgather(in));
  }
  SUBCASE("all builders on a few odd shapes") {
    for (int n : {1, 2, 3, 6, 8, 13}) {
      for (int p : {1, 2, 5}) {
        const Topology t(n, p);
        const auto in = random_contributions(t, 7, n * 31 + p);
        for (auto algo : all_algorithms()) {
          if (algo == Algorithm::recursive_doubling && (n & (n - 1)) != 0) continue;
          const auto res = verify_against_oracle(build_schedule(algo, t, 7), in);
          CHECK_MESSAGE(res.ok, to_string(algo), " N=", n, " P=", p);
          CHECK(res.ranks_checked == t.total_ranks());
        }
      }
    }
  }
}

TEST_CASE("round actions are order independent") {
  const Topology t(10, 2);
  const auto s = build_schedule(Algorithm::mcoll, t, 16);
  const auto in = random_contributions(t, 16, 11);
  const auto reference = execute(s, in);
  std::mt19937 rng(5);
  for (int shuffle = 0; shuffle < 100; ++shuffle) {
    const auto out = execute_with_order(s, in, [&](std::size_t n) {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::shuffle(idx.begin(), idx.end(), rng);
      return idx;
    });
    REQUIRE(out == reference);
  }
}

TEST_CASE("send ranges are read as of round start") {
  // Both nodes overwrite the block they send: a swap.
  const Topology t(2, 1);
  InterRound swap;
  swap.actions.push_back(SendRecv{t.decompose(0), 1, 1, {0, 1}, {0, 1}});
  swap.actions.push_back(SendRecv{t.decompose(1), 0, 0, {0, 1}, {0, 1}});
  const Schedule s{"swap", t, BlockLayout::per_node(t, 1), {IntraGather{}, swap, IntraBcast{}}};
  const auto in = single_bytes({10, 20});
  for (auto order : {std::vector<std::size_t>{0, 1}, std::vector<std::size_t>{1, 0}}) {
    const auto out = execute_with_order(s, in, [&](std::size_t) { return order; });
    CHECK(out[0] == Bytes{20, 0});
    CHECK(out[1] == Bytes{10, 0});
  }
}

TEST_CASE("builder bugs surface as execution faults") {
  const Topology t(3, 1);
  const auto layout = BlockLayout::per_node(t, 2);
  const auto in = random_contributions(t, 2, 0);
  auto run = [&](InterRound round) {
    const Schedule s{"broken", t, layout, {IntraGather{}, std::move(round), IntraBcast{}}};
    return execute(s, in);
  };
  SUBCASE("write past the buffer") {
    InterRound r;
    r.actions.push_back(SendRecv{t.decompose(0), 1, 1, {0, 1}, {3, 1}});
    r.actions.push_back(SendRecv{t.decompose(1), 0, 0, {0, 1}, {1, 1}});
    CHECK_THROWS_AS(run(r), ExecutionFault);
  }
  SUBCASE("overlapping writes") {
    const Topology t2(2, 2);
    const auto in2 = random_contributions(t2, 1, 0);
    InterRound r;
    r.actions.push_back(SendRecv{t2.decompose(0), 2, 2, {0, 1}, {1, 1}});
    r.actions.push_back(SendRecv{t2.decompose(1), 3, 3, {0, 1}, {1, 1}});
    r.actions.push_back(SendRecv{t2.decompose(2), 0, 0, {0, 1}, {1, 1}});
    r.actions.push_back(SendRecv{t2.decompose(3), 1, 1, {0, 1}, {1, 1}});
    const Schedule s{"broken", t2, BlockLayout::per_node(t2, 1), {IntraGather{}, r}};
    CHECK_THROWS_AS(execute(s, in2), ExecutionFault);
  }
  SUBCASE("receive without a sender") {
    InterRound r;
    r.actions.push_back(SendRecv{t.decompose(0), 1, 2, {0, 1}, {1, 1}});
    CHECK_THROWS_AS(run(r), ExecutionFault);
  }
  SUBCASE("wrong contribution size") {
    const auto s = build_schedule(Algorithm::ring, t, 2);
    CHECK_THROWS_AS(execute(s, random_contributions(t, 3, 0)), std::invalid_argument);
  }
}

TEST_CASE("oracle comparison reports broken schedules") {
  const Topology t(4, 2);
  auto s = build_schedule(Algorithm::mcoll, t, 8);
  const auto in = random_contributions(t, 8, 9);

  auto no_rotate = s;
  std::erase_if(no_rotate.phases, [](const Phase& p) { return std::holds_alternative<Rotate>(p); });
  const auto res = verify_against_oracle(no_rotate, in);
  CHECK_FALSE(res.ok);
  CHECK(res.mismatched_ranks == 6);  // node 0 needs no rotation
  CHECK_FALSE(res.mismatches.empty());

  auto no_bcast = s;
  no_bcast.phases.pop_back();
  const auto silent = verify_against_oracle(no_bcast, in);
  CHECK_FALSE(silent.ok);
  CHECK(silent.mismatched_ranks == 8);
  CHECK(silent.mismatches[0].detail == "no output produced");
}

TEST_CASE("rotation conserves block labels") {
  for (int n : {2, 5, 9}) {
    const auto s = build_schedule(Algorithm::mcoll, Topology(n, 2), 1);
    const auto rotate_at = s.phases.size() - 2;
    auto before = trace_block_origins(s, rotate_at);
    auto after = trace_block_origins(s, rotate_at + 1);
    for (std::size_t u = 0; u < before.size(); ++u) {
      for (int j = 0; j < n; ++j) CHECK(after[u][j] == j);
      std::sort(before[u].begin(), before[u].end());
      std::sort(after[u].begin(), after[u].end());
      CHECK(before[u] == after[u]);
    }
  }
}
