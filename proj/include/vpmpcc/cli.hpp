#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vpmpcc/config.hpp"

namespace vpmpcc::cli {

struct CommonArgs {
  std::string config_path;  // empty -> defaults
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int jobs = 1;
};

struct TrackArgs {
  CommonArgs common;
  std::string action = "build";  // build | inspect
  std::string preset;            // "sharp-corner" bundles the synthetic circuit
};

struct RaceArgs {
  CommonArgs common;
  std::vector<double> theta;     // explicit 9-entry parameter vector
  std::string theta_file;        // best-theta JSON from a tuning campaign
  int laps = 1;
  std::string planner = "vpmpcc";  // vpmpcc | mpcc (forces q_v = 0)
};

struct TuneArgs {
  CommonArgs common;
  std::string objective = "ofr";  // ofr | baseline | ablation1..3
  int budget = -1;                // -1 -> config bo.N_BO; 0 is rejected
  std::string planner = "vpmpcc";
};

struct ReportArgs {
  std::vector<std::string> campaign_dirs;
  std::string out_file;  // optional CSV copy of the table
};

int cmd_track(const TrackArgs& args);
int cmd_race(const RaceArgs& args);
int cmd_tune(const TuneArgs& args);
int cmd_report(const ReportArgs& args);

/// Full argv entry point used by the binary.
int run(int argc, const char* const* argv);

}  // namespace vpmpcc::cli
