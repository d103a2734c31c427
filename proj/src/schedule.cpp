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

#include "mcoll/schedule.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace mcoll {

BlockLayout BlockLayout::per_node(const Topology& topo, std::size_t per_proc_bytes) {
  return BlockLayout{per_proc_bytes, per_proc_bytes * static_cast<std::size_t>(topo.procs_per_node()),
                     topo.num_nodes(), Granularity::node};
}

BlockLayout BlockLayout::per_process(const Topology& topo, std::size_t per_proc_bytes) {
  return BlockLayout{per_proc_bytes, per_proc_bytes, topo.total_ranks(), Granularity::process};
}

std::string phase_name(const Phase& phase) {
  struct Namer {
    std::string operator()(const IntraGather&) const { return "intra_gather"; }
    std::string operator()(const InterRound&) const { return "inter_round"; }
    std::string operator()(const Rotate&) const { return "rotate"; }
    std::string operator()(const IntraBcast&) const { return "intra_bcast"; }
  };
  return std::visit(Namer{}, phase);
}

int Schedule::num_units() const {
  return layout.granularity == Granularity::node ? topo.num_nodes() : topo.total_ranks();
}

int Schedule::unit_of(int global_rank) const {
  return layout.granularity == Granularity::node ? topo.decompose(global_rank).node_id
                                                 : topo.decompose(global_rank).global_rank;
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::bad_layout: return "bad layout";
    case ViolationKind::invalid_rank: return "invalid rank";
    case ViolationKind::range_out_of_bounds: return "range out of bounds";
    case ViolationKind::length_mismatch: return "length mismatch";
    case ViolationKind::self_pairing: return "self pairing";
    case ViolationKind::duplicate_actor: return "duplicate actor";
    case ViolationKind::unmatched_send: return "unmatched send";
    case ViolationKind::unmatched_recv: return "unmatched recv";
    case ViolationKind::overlapping_recv: return "overlapping recv";
  }
  return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

std::string ValidationReport::summary() const {
  if (ok()) return "valid";
  std::ostringstream os;
  os << violations.size() << " violation(s)";
  for (const auto& v : violations) {
    os << "\n  phase " << v.phase_index << ": " << to_string(v.kind) << ": " << v.detail;
  }
  return os.str();
}

namespace {

bool layout_matches(const Schedule& s) {
  const auto expected = s.layout.granularity == Granularity::node
                            ? BlockLayout::per_node(s.topo, s.layout.per_proc_bytes)
                            : BlockLayout::per_process(s.topo, s.layout.per_proc_bytes);
  return expected == s.layout;
}

std::string describe(const SendRecv& a) {
  std::ostringstream os;
  os << "rank " << a.actor.global_rank << " (dst " << a.dst_rank << ", src " << a.src_rank
     << ", send [" << a.send.start << "+" << a.send.length << "), recv [" << a.recv.start << "+"
     << a.recv.length << "))";
  return os.str();
}

void validate_round(const Schedule& s, const InterRound& round, std::size_t pi,
                    std::vector<Violation>& out) {
  const int ranks = s.topo.total_ranks();
  auto add = [&](ViolationKind k, std::string detail) {
    out.push_back(Violation{k, pi, std::move(detail)});
  };
  auto rank_ok = [ranks](int r) { return r >= 0 && r < ranks; };
  auto range_ok = [&](const BlockRange& r) {
    return r.start >= 0 && r.length >= 1 && r.end() <= s.layout.num_blocks;
  };

  // Actions that are internally consistent take part in the pairing checks.
  std::unordered_map<int, const SendRecv*> by_actor;
  std::map<int, std::vector<BlockRange>> recv_by_unit;
  for (const auto& a : round.actions) {
    if (!rank_ok(a.actor.global_rank) || !rank_ok(a.dst_rank) || !rank_ok(a.src_rank) ||
        s.topo.decompose(a.actor.global_rank) != a.actor) {
      add(ViolationKind::invalid_rank, describe(a));
      continue;
    }
    if (!range_ok(a.send) || !range_ok(a.recv)) {
      add(ViolationKind::range_out_of_bounds, describe(a));
      continue;
    }
    if (a.send.length != a.recv.length) {
      add(ViolationKind::length_mismatch, describe(a));
    }
    const int unit = s.unit_of(a.actor.global_rank);
    if (s.unit_of(a.dst_rank) == unit || s.unit_of(a.src_rank) == unit) {
      add(ViolationKind::self_pairing, describe(a));
    }
    if (!by_actor.emplace(a.actor.global_rank, &a).second) {
      add(ViolationKind::duplicate_actor, describe(a));
      continue;
    }
    recv_by_unit[unit].push_back(a.recv);
  }

  for (const auto& [rank, a] : by_actor) {
    const auto peer = by_actor.find(a->dst_rank);
    if (peer == by_actor.end() || peer->second->src_rank != rank) {
      add(ViolationKind::unmatched_send, describe(*a));
    } else if (peer->second->recv.length != a->send.length) {
      add(ViolationKind::length_mismatch, describe(*a) + " vs receiver " + describe(*peer->second));
    }
    const auto sender = by_actor.find(a->src_rank);
    if (sender == by_actor.end() || sender->second->dst_rank != rank) {
      add(ViolationKind::unmatched_recv, describe(*a));
    }
  }

  for (auto& [unit, ranges] : recv_by_unit) {
    std::sort(ranges.begin(), ranges.end(),
              [](const BlockRange& x, const BlockRange& y) { return x.start < y.start; });
    for (std::size_t i = 1; i < ranges.size(); ++i) {
      if (ranges[i - 1].overlaps(ranges[i])) {
        add(ViolationKind::overlapping_recv,
            "buffer " + std::to_string(unit) + " receives [" + std::to_string(ranges[i - 1].start) +
                "+" + std::to_string(ranges[i - 1].length) + ") and [" +
                std::to_string(ranges[i].start) + "+" + std::to_string(ranges[i].length) + ")");
      }
    }
  }
}

}  // namespace

ValidationReport validate_schedule(const Schedule& s) {
  ValidationReport report;
  if (!layout_matches(s)) {
    report.violations.push_back(
        Violation{ViolationKind::bad_layout, 0, "layout does not match topology"});
    return report;
  }
  for (std::size_t pi = 0; pi < s.phases.size(); ++pi) {
    if (const auto* round = std::get_if<InterRound>(&s.phases[pi])) {
      validate_round(s, *round, pi, report.violations);
    }
  }
  return report;
}

ScheduleStats schedule_stats(const Schedule& s) {
  ScheduleStats stats;
  std::unordered_map<int, int> msgs;
  for (const auto& phase : s.phases) {
    const auto* round = std::get_if<InterRound>(&phase);
    if (round == nullptr) continue;
    ++stats.inter_rounds;
    for (const auto& a : round->actions) {
      stats.msgs_per_rank_max = std::max(stats.msgs_per_rank_max, ++msgs[a.actor.global_rank]);
      stats.bytes_on_wire_total += static_cast<std::size_t>(a.send.length) * s.layout.block_bytes;
    }
  }
  return stats;
}

// JSON

using nlohmann::json;

json to_json(const Schedule& s) {
  json phases = json::array();
  for (const auto& phase : s.phases) {
    json p{{"phase", phase_name(phase)}};
    if (const auto* round = std::get_if<InterRound>(&phase)) {
      json actions = json::array();
      for (const auto& a : round->actions) {
        actions.push_back({{"actor", a.actor.global_rank},
                           {"dst", a.dst_rank},
                           {"src", a.src_rank},
                           {"send", {a.send.start, a.send.length}},
                           {"recv", {a.recv.start, a.recv.length}}});
      }
      p["actions"] = std::move(actions);
    }
    phases.push_back(std::move(p));
  }
  return json{{"algorithm", s.algorithm},
              {"nodes", s.topo.num_nodes()},
              {"ppn", s.topo.procs_per_node()},
              {"granularity", s.layout.granularity == Granularity::node ? "node" : "process"},
              {"per_proc_bytes", s.layout.per_proc_bytes},
              {"block_bytes", s.layout.block_bytes},
              {"num_blocks", s.layout.num_blocks},
              {"phases", std::move(phases)}};
}

namespace {

BlockRange range_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("range must be [start, length]");
  return BlockRange{j[0].get<std::int64_t>(), j[1].get<std::int64_t>()};
}

}  // namespace

Schedule schedule_from_json(const json& doc) {
  try {
    Topology topo(doc.at("nodes").get<int>(), doc.at("ppn").get<int>());
    const auto m = doc.at("per_proc_bytes").get<std::size_t>();
    const auto gran = doc.at("granularity").get<std::string>();
    BlockLayout layout;
    if (gran == "node") {
      layout = BlockLayout::per_node(topo, m);
    } else if (gran == "process") {
      layout = BlockLayout::per_process(topo, m);
    } else {
      throw std::invalid_argument("unknown granularity '" + gran + "'");
    }
    Schedule s{doc.value("algorithm", std::string{}), topo, layout, {}};
    for (const auto& p : doc.at("phases")) {
      const auto name = p.at("phase").get<std::string>();
      if (name == "intra_gather") {
        s.phases.emplace_back(IntraGather{});
      } else if (name == "rotate") {
        s.phases.emplace_back(Rotate{});
      } else if (name == "intra_bcast") {
        s.phases.emplace_back(IntraBcast{});
      } else if (name == "inter_round") {
        InterRound round;
        for (const auto& a : p.at("actions")) {
          round.actions.push_back(SendRecv{topo.decompose(a.at("actor").get<int>()),
                                           a.at("dst").get<int>(), a.at("src").get<int>(),
                                           range_from_json(a.at("send")),
                                           range_from_json(a.at("recv"))});
        }
        s.phases.emplace_back(std::move(round));
      } else {
        throw std::invalid_argument("unknown phase '" + name + "'");
      }
    }
    return s;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed schedule document: ") + e.what());
  } catch (const std::domain_error& e) {
    throw std::invalid_argument(std::string("malformed schedule document: ") + e.what());
  }
}

}  // namespace mcoll
