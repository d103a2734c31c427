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

#include "mcoll/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "mcoll/executor.hpp"
#include "mcoll/schedule.hpp"

namespace mcoll::bench {

namespace {

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> items;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) items.push_back(item.substr(b, e - b + 1));
  }
  return items;
}

std::uint64_t parse_unsigned(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const auto value = std::stoull(text, &used);
    if (used != text.size() || text.find('-') != std::string::npos) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ConfigError(std::string("invalid ") + what + " '" + text + "'");
  }
}

int parse_count(const std::string& text, const char* what) {
  const auto value = parse_unsigned(text, what);
  if (value > 1'000'000) throw ConfigError(std::string(what) + " too large: " + text);
  return static_cast<int>(value);
}

CostPreset preset_from_json(const nlohmann::json& value) {
  try {
    if (value.is_string()) {
      const auto name = value.get<std::string>();
      if (name == "custom") throw ConfigError("preset 'custom' needs an object of parameter overrides");
      return named_preset(name);
    }
    if (value.is_object()) {
      return custom_preset(value, named_preset(value.value("preset", std::string("opa-broadwell"))));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("params must be a preset name or an object");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

std::string fmt_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

}  // namespace

std::vector<Algorithm> parse_algo_list(const std::string& csv) {
  std::vector<Algorithm> algos;
  for (const auto& name : split_csv(csv)) {
    try {
      algos.push_back(parse_algorithm(name));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return algos;
}

std::vector<std::size_t> parse_size_list(const std::string& csv) {
  std::vector<std::size_t> sizes;
  for (const auto& item : split_csv(csv)) sizes.push_back(parse_unsigned(item, "size"));
  return sizes;
}

void ExperimentConfig::validate() const {
  if (nodes < 1) throw ConfigError("--nodes must be at least 1");
  if (ppn < 1) throw ConfigError("--ppn must be at least 1");
  if (algos.empty()) throw ConfigError("no algorithms selected");
  if (sizes.empty()) throw ConfigError("no message sizes selected");
  for (auto s : sizes) {
    if (s < 1) throw ConfigError("message sizes must be at least 1 byte");
  }
  for (auto a : algos) {
    if (a == Algorithm::recursive_doubling && !is_power_of_two(nodes)) {
      throw ConfigError("recursive_doubling requires power-of-two nodes, got " +
                        std::to_string(nodes));
    }
  }
}

ExperimentConfig apply_json(const nlohmann::json& doc, ExperimentConfig cfg) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "nodes") {
        cfg.nodes = value.get<int>();
      } else if (key == "ppn") {
        cfg.ppn = value.get<int>();
      } else if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else if (key == "transport") {
        cfg.transport = parse_transport(value.get<std::string>());
      } else if (key == "algos") {
        if (value.is_string()) {
          cfg.algos = parse_algo_list(value.get<std::string>());
        } else {
          cfg.algos.clear();
          for (const auto& a : value) cfg.algos.push_back(parse_algorithm(a.get<std::string>()));
        }
      } else if (key == "sizes") {
        cfg.sizes = value.is_string() ? parse_size_list(value.get<std::string>())
                                      : value.get<std::vector<std::size_t>>();
      } else if (key == "params") {
        cfg.params = preset_from_json(value);
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  return cfg;
}

int run_verify(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  const Topology topo(cfg.nodes, cfg.ppn);
  int passed = 0;
  int total = 0;
  for (auto algo : cfg.algos) {
    for (auto size : cfg.sizes) {
      ++total;
      const auto schedule = build_schedule(algo, topo, size);
      std::ostringstream label;
      label << to_string(algo) << " nodes=" << cfg.nodes << " ppn=" << cfg.ppn
            << " bytes=" << size;
      const auto report = validate_schedule(schedule);
      if (!report.ok()) {
        out << "FAIL " << label.str() << ": invalid schedule: " << report.summary() << "\n";
        continue;
      }
      const auto inputs = random_contributions(topo, size, cfg.seed);
      VerifyResult result;
      try {
        result = verify_against_oracle(schedule, inputs);
      } catch (const ExecutionFault& e) {
        out << "FAIL " << label.str() << ": execution fault: " << e.what() << "\n";
        continue;
      }
      if (result.ok) {
        ++passed;
        out << "PASS " << label.str() << " rounds=" << schedule_stats(schedule).inter_rounds
            << "\n";
      } else {
        out << "FAIL " << label.str() << ": " << result.mismatched_ranks << " of "
            << topo.total_ranks() << " rank(s) differ from the oracle\n";
        for (const auto& m : result.mismatches) {
          out << "  rank " << m.rank << ": " << m.detail << "\n";
        }
      }
    }
  }
  out << passed << "/" << total << " cases byte-exact (seed " << cfg.seed << ")\n";
  return passed == total ? kOk : kVerifyFailed;
}

std::vector<RunReport> run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const Topology topo(cfg.nodes, cfg.ppn);
  const auto transport = make_transport(cfg.transport, cfg.params.intra);
  std::vector<RunReport> reports;
  reports.reserve(cfg.algos.size() * cfg.sizes.size());
  for (auto algo : cfg.algos) {
    for (auto size : cfg.sizes) {
      reports.push_back(simulate(build_schedule(algo, topo, size), cfg.params.net, transport));
    }
  }
  return reports;
}

std::string sweep_csv(const std::vector<RunReport>& reports) {
  std::ostringstream os;
  os << kCsvHeader << "\n";
  for (const auto& r : reports) {
    os << r.algo << "," << to_string(r.transport) << "," << r.nodes << "," << r.ppn << ","
       << r.per_proc_bytes << "," << fmt_fixed(r.sim_time * 1e6, 6) << "," << r.inter_rounds
       << "," << r.msgs_per_rank_max << "," << r.bytes_on_wire_total << "\n";
  }
  return os.str();
}

std::string ratio_csv(const std::vector<RunReport>& reports) {
  std::map<std::size_t, const RunReport*> mcoll;
  std::map<std::size_t, const RunReport*> best;
  for (const auto& r : reports) {
    if (r.algo == "mcoll") {
      mcoll[r.per_proc_bytes] = &r;
    } else {
      auto& slot = best[r.per_proc_bytes];
      if (slot == nullptr || r.sim_time < slot->sim_time) slot = &r;
    }
  }
  if (mcoll.empty() || best.empty()) return {};
  std::ostringstream os;
  os << "nodes,ppn,msg_bytes,mcoll_us,best_baseline,best_baseline_us,ratio\n";
  for (const auto& [size, m] : mcoll) {
    const auto it = best.find(size);
    if (it == best.end()) continue;
    const auto* b = it->second;
    os << m->nodes << "," << m->ppn << "," << size << "," << fmt_fixed(m->sim_time * 1e6, 6) << ","
       << b->algo << "," << fmt_fixed(b->sim_time * 1e6, 6) << ","
       << (m->sim_time > 0.0 ? fmt_fixed(b->sim_time / m->sim_time, 4) : std::string("n/a"))
       << "\n";
  }
  return os.str();
}

std::string sweep_svg(const std::vector<RunReport>& reports, const std::string& title) {
  constexpr double kWidth = 800, kHeight = 500;
  constexpr double kLeft = 80, kRight = 170, kTop = 50, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::vector<std::string> algos;
  std::vector<std::size_t> sizes;
  double y_max = 0.0;
  for (const auto& r : reports) {
    if (std::find(algos.begin(), algos.end(), r.algo) == algos.end()) algos.push_back(r.algo);
    if (std::find(sizes.begin(), sizes.end(), r.per_proc_bytes) == sizes.end()) {
      sizes.push_back(r.per_proc_bytes);
    }
    y_max = std::max(y_max, r.sim_time * 1e6);
  }
  std::sort(sizes.begin(), sizes.end());
  if (y_max <= 0.0) y_max = 1.0;
  const double lx0 = sizes.empty() ? 0.0 : std::log2(static_cast<double>(sizes.front()));
  const double lx1 = sizes.empty() ? 1.0 : std::log2(static_cast<double>(sizes.back()));
  auto x_of = [&](std::size_t size) {
    if (lx1 == lx0) return kLeft + plot_w / 2;
    return kLeft + (std::log2(static_cast<double>(size)) - lx0) / (lx1 - lx0) * plot_w;
  };
  auto y_of = [&](double us) { return kTop + plot_h - us / y_max * plot_h; };
  auto f = [](double v) { return fmt_fixed(v, 2); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << f(kLeft + plot_w / 2) << "\" y=\"25\" text-anchor=\"middle\" font-size=\"15\">"
     << title << "</text>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << f(kTop + plot_h) << "\" x2=\"" << f(kLeft + plot_w)
     << "\" y2=\"" << f(kTop + plot_h) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
     << f(kTop + plot_h) << "\" stroke=\"black\"/>\n";
  for (auto size : sizes) {
    const double x = x_of(size);
    os << "<line x1=\"" << f(x) << "\" y1=\"" << f(kTop + plot_h) << "\" x2=\"" << f(x) << "\" y2=\""
       << f(kTop + plot_h + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << f(x) << "\" y=\"" << f(kTop + plot_h + 20)
       << "\" text-anchor=\"middle\">" << size << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double us = y_max * i / 5.0;
    const double y = y_of(us);
    os << "<line x1=\"" << kLeft << "\" y1=\"" << f(y) << "\" x2=\"" << f(kLeft + plot_w)
       << "\" y2=\"" << f(y) << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << f(kLeft - 8) << "\" y=\"" << f(y + 4) << "\" text-anchor=\"end\">"
       << f(us) << "</text>\n";
  }
  os << "<text x=\"" << f(kLeft + plot_w / 2) << "\" y=\"" << f(kHeight - 15)
     << "\" text-anchor=\"middle\">message size per process (bytes, log scale)</text>\n";
  os << "<text transform=\"translate(20," << f(kTop + plot_h / 2)
     << ") rotate(-90)\" text-anchor=\"middle\">simulated time (us)</text>\n";

  for (std::size_t i = 0; i < algos.size(); ++i) {
    const char* color = kColors[i % (sizeof kColors / sizeof *kColors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (const auto& r : reports) {
      if (r.algo != algos[i]) continue;
      os << (first ? "" : " ") << f(x_of(r.per_proc_bytes)) << "," << f(y_of(r.sim_time * 1e6));
      first = false;
    }
    os << "\"/>\n";
    const double ly = kTop + 20.0 * static_cast<double>(i);
    os << "<line x1=\"" << f(kLeft + plot_w + 15) << "\" y1=\"" << f(ly) << "\" x2=\""
       << f(kLeft + plot_w + 40) << "\" y2=\"" << f(ly) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << f(kLeft + plot_w + 45) << "\" y=\"" << f(ly + 4) << "\">" << algos[i]
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string report_table(const std::vector<RunReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "algo" << std::setw(13) << "transport" << std::right
     << std::setw(7) << "nodes" << std::setw(5) << "ppn" << std::setw(9) << "bytes"
     << std::setw(15) << "time_us" << std::setw(8) << "rounds" << std::setw(6) << "msgs"
     << std::setw(14) << "wire_bytes" << "\n";
  for (const auto& r : reports) {
    os << std::left << std::setw(20) << r.algo << std::setw(13) << to_string(r.transport)
       << std::right << std::setw(7) << r.nodes << std::setw(5) << r.ppn << std::setw(9)
       << r.per_proc_bytes << std::setw(15) << fmt_fixed(r.sim_time * 1e6, 3) << std::setw(8)
       << r.inter_rounds << std::setw(6) << r.msgs_per_rank_max << std::setw(14)
       << r.bytes_on_wire_total << "\n";
  }
  return os.str();
}

nlohmann::json dump_schedule(const ExperimentConfig& cfg, Algorithm algo, std::size_t size) {
  ExperimentConfig one = cfg;
  one.algos = {algo};
  one.sizes = {size};
  one.validate();
  return to_json(build_schedule(algo, Topology(cfg.nodes, cfg.ppn), size));
}

// Command line

namespace {

struct Flags {
  std::string nodes, ppn, algos, sizes, transport, params, seed, out, svg, config;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--nodes", f.nodes, "number of nodes (N)");
  sub->add_option("--ppn", f.ppn, "processes per node (P)");
  sub->add_option("--algos,--algo", f.algos,
                  "comma-separated: mcoll,bruck2,recursive_doubling,ring,flat_bruck");
  sub->add_option("--sizes", f.sizes, "comma-separated per-process message sizes in bytes");
  sub->add_option("--transport", f.transport, "pip | posix_shmem | cma | xpmem");
  sub->add_option("--params", f.params,
                  "opa-broadwell | pip-mpich-baseline | zero | custom | <overrides.json>");
  sub->add_option("--seed", f.seed, "payload seed for verify");
  sub->add_option("--out", f.out, "CSV output path");
  sub->add_option("--svg", f.svg, "SVG chart output path");
  sub->add_option("--config", f.config, "JSON config file (flags take precedence)");
}

ExperimentConfig resolve_config(const CLI::App& sub, const Flags& f, bool* algos_given = nullptr) {
  ExperimentConfig cfg;
  bool given = sub.count("--algos") > 0;
  if (const char* env = std::getenv("MCOLL_PRESET"); env != nullptr && *env != '\0') {
    try {
      cfg.params = named_preset(env);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("MCOLL_PRESET: ") + e.what());
    }
  }
  if (sub.count("--config") > 0) {
    const auto doc = read_json_file(f.config);
    cfg = apply_json(doc, cfg);
    given = given || doc.contains("algos");
  }
  if (algos_given != nullptr) *algos_given = given;

  if (sub.count("--nodes") > 0) cfg.nodes = parse_count(f.nodes, "node count");
  if (sub.count("--ppn") > 0) cfg.ppn = parse_count(f.ppn, "processes per node");
  if (sub.count("--algos") > 0) cfg.algos = parse_algo_list(f.algos);
  if (sub.count("--sizes") > 0) cfg.sizes = parse_size_list(f.sizes);
  if (sub.count("--seed") > 0) cfg.seed = parse_unsigned(f.seed, "seed");
  if (sub.count("--transport") > 0) {
    try {
      cfg.transport = parse_transport(f.transport);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (sub.count("--params") > 0) {
    if (f.params == "custom") {
      if (cfg.params.name != "custom") {
        throw ConfigError("--params custom needs overrides: pass --params <file.json> or a params object in --config");
      }
    } else if (f.params.size() > 5 && f.params.ends_with(".json")) {
      cfg.params = preset_from_json(read_json_file(f.params));
    } else {
      cfg.params = preset_from_json(nlohmann::json(f.params));
    }
  }
  return cfg;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write '" + path + "'");
  os << content;
  os.close();
  if (!os) throw IoError("failed writing '" + path + "'");
}

std::string ratio_path(const std::string& csv_path) {
  if (csv_path.size() > 4 && csv_path.ends_with(".csv")) {
    return csv_path.substr(0, csv_path.size() - 4) + "_ratio.csv";
  }
  return csv_path + "_ratio.csv";
}

std::string chart_title(const ExperimentConfig& cfg) {
  return "Simulated allgather, N=" + std::to_string(cfg.nodes) + " P=" + std::to_string(cfg.ppn) +
         ", " + to_string(cfg.transport) + ", " + cfg.params.name;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-object hierarchical allgather: verify, simulate, sweep, dump", "mcoll"};
  app.require_subcommand(1);
  Flags flags;
  auto* verify = app.add_subcommand("verify", "check every algorithm against the allgather oracle");
  auto* simulate_cmd = app.add_subcommand("simulate", "print simulated times for a configuration");
  auto* sweep = app.add_subcommand("sweep", "simulate a message-size sweep and write CSV/SVG");
  auto* dump = app.add_subcommand("dump", "print one schedule as JSON");
  for (auto* sub : {verify, simulate_cmd, sweep, dump}) add_common(sub, flags);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "mcoll: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    if (verify->parsed()) {
      const auto cfg = resolve_config(*verify, flags);
      cfg.validate();
      return run_verify(cfg, out);
    }
    if (dump->parsed()) {
      bool algos_given = false;
      auto cfg = resolve_config(*dump, flags, &algos_given);
      if (algos_given && cfg.algos.size() != 1) {
        throw ConfigError("dump takes exactly one algorithm");
      }
      if (dump->count("--sizes") > 0 && cfg.sizes.size() != 1) {
        throw ConfigError("dump takes exactly one size");
      }
      const auto algo = algos_given ? cfg.algos.front() : Algorithm::mcoll;
      out << dump_schedule(cfg, algo, cfg.sizes.front()).dump(2) << "\n";
      return kOk;
    }
    const auto* sub = simulate_cmd->parsed() ? simulate_cmd : sweep;
    const auto cfg = resolve_config(*sub, flags);
    const auto reports = run_sweep(cfg);
    if (sub == simulate_cmd) {
      out << report_table(reports);
      const auto ratios = ratio_csv(reports);
      if (!ratios.empty()) out << "\n" << ratios;
      if (!flags.out.empty()) write_file(flags.out, sweep_csv(reports));
    } else {
      const auto csv = sweep_csv(reports);
      if (flags.out.empty()) {
        out << csv;
      } else {
        write_file(flags.out, csv);
        const auto ratios = ratio_csv(reports);
        if (!ratios.empty()) write_file(ratio_path(flags.out), ratios);
        out << "wrote " << reports.size() << " rows to " << flags.out << "\n";
      }
    }
    if (!flags.svg.empty()) write_file(flags.svg, sweep_svg(reports, chart_title(cfg)));
    return kOk;
  } catch (const ConfigError& e) {
    err << "mcoll: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "mcoll: " << e.what() << "\n";
    return kIoError;
  } catch (const std::invalid_argument& e) {
    err << "mcoll: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace mcoll::bench
