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
 * @file    bench.hpp
 * @brief   Experiment configuration and the verify / simulate / sweep / dump
 *          front end shared by the command-line tool and the tests.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcoll/algorithms.hpp"
#include "mcoll/cost_model.hpp"

namespace mcoll::bench {

/// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kUsage = 2, kIoError = 3 };

/// Bad flags, config files or unsupported shapes (exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  int nodes = 128;
  int ppn = 18;
  std::vector<Algorithm> algos{Algorithm::mcoll, Algorithm::bruck2, Algorithm::ring,
                               Algorithm::flat_bruck};
  TransportKind transport = TransportKind::pip;
  std::vector<std::size_t> sizes{16, 32, 64, 128, 256, 512};
  CostPreset params = named_preset("opa-broadwell");
  std::uint64_t seed = 1;

  /// Throws ConfigError, including for algorithms that cannot run on this shape.
  void validate() const;
};

/**
 * Applies a JSON document onto `base`. Keys mirror the struct fields;
 * "algos" and "sizes" accept arrays or comma-separated strings, "params"
 * accepts a preset name or an object of overrides.
 */
ExperimentConfig apply_json(const nlohmann::json& doc, ExperimentConfig base);

std::vector<Algorithm> parse_algo_list(const std::string& csv);
std::vector<std::size_t> parse_size_list(const std::string& csv);

/// Builds, validates, executes and oracle-checks every (algo, size).
/// Writes one line per case and returns kOk or kVerifyFailed.
int run_verify(const ExperimentConfig& config, std::ostream& out);

/// Simulated reports in canonical order: algos as configured, then sizes.
std::vector<RunReport> run_sweep(const ExperimentConfig& config);

inline constexpr const char* kCsvHeader =
    "algo,transport,nodes,ppn,msg_bytes,sim_time_us,inter_rounds,max_msgs_per_rank,wire_bytes";

std::string sweep_csv(const std::vector<RunReport>& reports);

/// mcoll against the fastest other algorithm at every size; empty when the
/// sweep lacks mcoll or any baseline.
std::string ratio_csv(const std::vector<RunReport>& reports);

/// Log-x line chart of sim_time_us against msg_bytes, one line per algorithm.
std::string sweep_svg(const std::vector<RunReport>& reports, const std::string& title);

/// Human-readable table for `simulate`.
std::string report_table(const std::vector<RunReport>& reports);

nlohmann::json dump_schedule(const ExperimentConfig& config, Algorithm algo, std::size_t size);

/**
 * Entry point of the `mcoll` tool. `args` excludes the program name.
 * Honors MCOLL_PRESET unless `--params` or a config file chooses parameters.
 */
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mcoll::bench
