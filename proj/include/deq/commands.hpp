#pragma once

#include <string>
#include <vector>

#include "deq/config.hpp"

namespace deq {

struct RunOptions {
  std::string out_dir = ".";
  int threads = 1;
  bool dump_particles = false;
};

struct RunReport {
  std::string command;
  double wall_time_seconds = 0.0;
  double log_marginal = 0.0;  // where applicable
  std::vector<std::string> files;  // emitted artifacts, relative to out_dir
};

RunReport cmd_simulate(const ExperimentConfig& config, const RunOptions& opts);
RunReport cmd_quantify(const ExperimentConfig& config, const RunOptions& opts);
RunReport cmd_infer(const ExperimentConfig& config, const RunOptions& opts);
RunReport cmd_tune(const ExperimentConfig& config, const RunOptions& opts);
RunReport cmd_rate_check(const ExperimentConfig& config, const RunOptions& opts);

void write_report_json(const RunReport& report, const std::string& path);

}  // namespace deq
