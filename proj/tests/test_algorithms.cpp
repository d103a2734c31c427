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

#include <random>
#include <set>
#include <string>

#include "mcoll/algorithms.hpp"
#include "mcoll/executor.hpp"

using namespace mcoll;

namespace {

// Independent route: the loop as literally stated, with a real-valued
// comparison against N / B.
std::vector<std::int64_t> literal_steps(int n, int p, std::int64_t* final_step) {
  const double radix = p + 1.0;
  std::vector<std::int64_t> steps;
  std::int64_t s = 1;
  while (static_cast<double>(s) <= n / radix) {
    steps.push_back(s);
    s *= p + 1;
  }
  *final_step = s;
  return steps;
}

// Brute-force coverage: blocks [0, S) are present, rank r adds
// [S(r+1), S(r+1) + count_r); together they must tile [0, N) exactly once.
bool remainder_tiles(int n, std::int64_t s, const RemainderPlan& plan) {
  std::vector<int> hits(static_cast<std::size_t>(n), 0);
  for (std::int64_t b = 0; b < s; ++b) ++hits[b];
  for (std::size_t r = 0; r < plan.per_local_rank_counts.size(); ++r) {
    for (std::int64_t k = 0; k < plan.per_local_rank_counts[r]; ++k) {
      const auto b = plan.start_offsets[r] + k;
      if (b >= n) return false;
      ++hits[b];
    }
  }
  for (int h : hits) {
    if (h != 1) return false;
  }
  return true;
}

// Smallest k with radix^k >= n.
int ceil_log(std::int64_t radix, std::int64_t n) {
  int k = 0;
  for (std::int64_t v = 1; v < n; v *= radix) ++k;
  return k;
}

int inter_rounds(const Schedule& s) { return schedule_stats(s).inter_rounds; }

}  // namespace

TEST_CASE("mcoll_round_plan examples") {
  auto plan = mcoll_round_plan(128, 18);
  CHECK(plan.radix == 19);
  CHECK(plan.full_round_steps == std::vector<std::int64_t>{1});
  CHECK(plan.final_step == 19);

  plan = mcoll_round_plan(64, 3);
  CHECK(plan.full_round_steps == std::vector<std::int64_t>{1, 4, 16});
  CHECK(plan.final_step == 64);

  plan = mcoll_round_plan(10, 2);
  CHECK(plan.full_round_steps == std::vector<std::int64_t>{1, 3});
  CHECK(plan.final_step == 9);

  plan = mcoll_round_plan(3, 18);
  CHECK(plan.full_round_steps.empty());
  CHECK(plan.final_step == 1);
}

TEST_CASE("integer loop condition agrees with the literal real-valued one") {
  for (int n = 1; n <= 600; ++n) {
    for (int p = 1; p <= 20; ++p) {
      std::int64_t literal_final = 0;
      const auto literal = literal_steps(n, p, &literal_final);
      const auto plan = mcoll_round_plan(n, p);
      REQUIRE(plan.full_round_steps == literal);
      REQUIRE(plan.final_step == literal_final);
    }
  }
}

TEST_CASE("remainder_plan examples") {
  auto plan = remainder_plan(128, 18, 19);
  std::vector<std::int64_t> want{19, 19, 19, 19, 19, 14};
  want.resize(18, 0);
  CHECK(plan.per_local_rank_counts == want);
  CHECK(plan.total() == 109);
  CHECK(plan.start_offsets[0] == 19);
  CHECK(plan.start_offsets[5] == 114);
  CHECK(remainder_tiles(128, 19, plan));

  plan = remainder_plan(64, 3, 64);
  CHECK(plan.per_local_rank_counts == std::vector<std::int64_t>{0, 0, 0});

  plan = remainder_plan(10, 2, 9);
  CHECK(plan.per_local_rank_counts == std::vector<std::int64_t>{1, 0});

  plan = remainder_plan(3, 18, 1);
  CHECK(plan.total() == 2);
  CHECK(remainder_tiles(3, 1, plan));
}

TEST_CASE("remainder_plan rejects states the loop cannot exit in") {
  CHECK_THROWS_AS(remainder_plan(10, 2, 3), std::invalid_argument);   // 3 * 3 <= 10
  CHECK_THROWS_AS(remainder_plan(10, 2, 11), std::invalid_argument);  // S > N
  CHECK_THROWS_AS(remainder_plan(10, 2, 0), std::invalid_argument);
}

TEST_CASE("remainder conservation, monotone counts and exact tiling") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4096);
    const int p = 1 + static_cast<int>(rng() % 64);
    const auto plan = mcoll_round_plan(n, p);
    const auto rem = remainder_plan(n, p, plan.final_step);
    REQUIRE(rem.total() == n - plan.final_step);
    for (std::size_t r = 1; r < rem.per_local_rank_counts.size(); ++r) {
      REQUIRE(rem.per_local_rank_counts[r] <= rem.per_local_rank_counts[r - 1]);
    }
    REQUIRE(remainder_tiles(n, plan.final_step, rem));
  }
}

TEST_CASE("rotate_permutation") {
  const std::vector<std::string> working{"D1", "D2", "D3", "D0"};
  const auto perm = rotate_permutation(4, 1);
  std::vector<std::string> out;
  for (int m = 0; m < 4; ++m) out.push_back(working[perm[m]]);
  CHECK(out == std::vector<std::string>{"D0", "D1", "D2", "D3"});

  CHECK(rotate_permutation(5, 0) == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(rotate_permutation(10, 7)[7] == 0);
  CHECK_THROWS_AS(rotate_permutation(4, 4), std::domain_error);
}

TEST_CASE("build_mcoll_allgather structure") {
  SUBCASE("N=10, P=2: two full rounds and a remainder") {
    const Topology t(10, 2);
    const auto s = build_mcoll_allgather(t, BlockLayout::per_node(t, 16));
    REQUIRE(s.phases.size() == 6);
    CHECK(std::holds_alternative<IntraGather>(s.phases[0]));
    CHECK(std::holds_alternative<Rotate>(s.phases[4]));
    CHECK(std::holds_alternative<IntraBcast>(s.phases[5]));
    const auto& remainder = std::get<InterRound>(s.phases[3]);
    CHECK(remainder.actions.size() == 10);  // only local rank 0 acts
    for (const auto& a : remainder.actions) {
      CHECK(a.actor.local_rank == 0);
      CHECK(a.recv == BlockRange{9, 1});
    }
    const auto& second = std::get<InterRound>(s.phases[2]);
    CHECK(second.actions.size() == 20);
    CHECK(second.actions[1].recv == BlockRange{6, 3});  // node 0, local rank 1, S = 3
    CHECK(second.actions[1].dst_rank == t.compose(4, 1));
    CHECK(second.actions[1].src_rank == t.compose(6, 1));
  }
  SUBCASE("N=128, P=18 needs 2 rounds against 7 for radix-2") {
    const Topology t(128, 18);
    CHECK(inter_rounds(build_mcoll_allgather(t, BlockLayout::per_node(t, 64))) == 2);
    CHECK(inter_rounds(build_baseline(Algorithm::bruck2, t, BlockLayout::per_node(t, 64))) == 7);
  }
  SUBCASE("single node has no internode traffic") {
    const Topology t(1, 4);
    const auto s = build_mcoll_allgather(t, BlockLayout::per_node(t, 8));
    REQUIRE(s.phases.size() == 3);
    CHECK(std::holds_alternative<IntraGather>(s.phases[0]));
    CHECK(std::holds_alternative<Rotate>(s.phases[1]));
    CHECK(std::holds_alternative<IntraBcast>(s.phases[2]));
  }
  SUBCASE("rejects a process-granular layout") {
    const Topology t(4, 2);
    CHECK_THROWS_AS(build_mcoll_allgather(t, BlockLayout::per_process(t, 8)), std::invalid_argument);
  }
}

TEST_CASE("P=1 degenerates to classic radix-2 Bruck") {
  for (int n = 1; n <= 40; ++n) {
    const Topology t(n, 1);
    const auto layout = BlockLayout::per_node(t, 4);
    const auto mcoll = build_mcoll_allgather(t, layout);
    const auto bruck = build_baseline(Algorithm::bruck2, t, layout);
    REQUIRE_MESSAGE(mcoll.phases == bruck.phases, "N=", n);
  }
}

TEST_CASE("exchange offsets stay in [1, N) and round count is ceil(log_{P+1} N)") {
  for (int n = 1; n <= 150; ++n) {
    for (int p : {1, 2, 3, 4, 5, 7, 8, 18, 31}) {
      const Topology t(n, p);
      const auto s = build_mcoll_allgather(t, BlockLayout::per_node(t, 1));
      for (const auto& phase : s.phases) {
        const auto* round = std::get_if<InterRound>(&phase);
        if (round == nullptr) continue;
        for (const auto& a : round->actions) {
          const auto offset = euclid_mod(t.decompose(a.src_rank).node_id - a.actor.node_id, n);
          REQUIRE(offset == a.recv.start);
          REQUIRE(offset >= 1);
          REQUIRE(offset < n);
        }
      }
      REQUIRE_MESSAGE(inter_rounds(s) == ceil_log(p + 1, n), "N=", n, " P=", p);
    }
  }
}

TEST_CASE("baselines") {
  const Topology t10(10, 2);
  const auto layout = BlockLayout::per_node(t10, 8);
  CHECK_THROWS_AS(build_baseline(Algorithm::recursive_doubling, t10, layout), UnsupportedShape);
  try {
    build_baseline(Algorithm::recursive_doubling, t10, layout);
  } catch (const UnsupportedShape& e) {
    CHECK(std::string(e.what()).find("requires power-of-two nodes") != std::string::npos);
  }

  const auto ring = build_baseline(Algorithm::ring, t10, layout);
  CHECK(inter_rounds(ring) == 9);
  for (const auto& phase : ring.phases) {
    if (const auto* r = std::get_if<InterRound>(&phase)) {
      CHECK(r->actions.size() == 10);
      for (const auto& a : r->actions) {
        CHECK(a.send.length == 1);
        CHECK(a.actor.is_local_root());
      }
    }
  }

  CHECK(inter_rounds(build_baseline(Algorithm::bruck2, Topology(128, 1), layout)) == 7);
  CHECK(inter_rounds(build_baseline(Algorithm::recursive_doubling, Topology(32, 3), layout)) == 5);
  const auto flat = build_baseline(Algorithm::flat_bruck, t10, layout);
  CHECK(flat.layout.granularity == Granularity::process);
  CHECK(inter_rounds(flat) == 5);  // ceil(log2 20)
  CHECK_THROWS_AS(build_baseline(Algorithm::mcoll, t10, layout), std::invalid_argument);
}

TEST_CASE("algorithm names round-trip") {
  for (auto a : all_algorithms()) CHECK(parse_algorithm(to_string(a)) == a);
  CHECK_THROWS_AS(parse_algorithm("bogus"), std::invalid_argument);
}

TEST_CASE("block coverage holds for every builder") {
  for (int n : {1, 2, 3, 5, 8, 10, 16, 19, 20, 33, 64}) {
    for (int p : {1, 2, 3, 4, 18}) {
      for (auto algo : all_algorithms()) {
        if (algo == Algorithm::recursive_doubling && (n & (n - 1)) != 0) continue;
        const auto s = build_schedule(algo, Topology(n, p), 1);
        const auto problem = check_block_coverage(s);
        REQUIRE_MESSAGE(!problem, to_string(algo), " N=", n, " P=", p, ": ", problem.value_or(""));
      }
    }
  }
}
