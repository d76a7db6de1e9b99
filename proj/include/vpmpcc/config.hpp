#pragma once

#include <Eigen/Core>
#include <string>

#include "vpmpcc/planner.hpp"
#include "vpmpcc/simloop.hpp"
#include "vpmpcc/tuner.hpp"
#include "vpmpcc/vehicle.hpp"

namespace vpmpcc {

/// Velocity-profile generation limits.
struct RvpConfig {
  double v_cap = 6.0;        // m/s
  double a_lat_max = 4.5;    // m/s^2
  double a_long_max = 3.5;   // m/s^2
  double a_brake_max = 4.5;  // m/s^2
};

/// Full experiment configuration. Defaults carry the reference parameter
/// set; a JSON document overrides individual keys. Every key is validated
/// against the schema (type + units) and unknown keys are rejected.
struct ExperimentConfig {
  DynParams vehicle;
  PlannerConstants mpc;
  OfrConfig ofr;
  RvpConfig rvp;
  SimOptions sim;
  double ablation1_j_fail = 35.0;  // shorter-than-reference laps need a higher ceiling

  // bo.*
  int n_bo = 200;
  int n_init = 18;
  int gp_restarts = 8;
  Eigen::VectorXd theta_lower;
  Eigen::VectorXd theta_upper;

  // track.*
  std::string track_file;     // empty -> bundled sharp-corner circuit
  std::string raceline_file;  // optional raceline override
  double half_width = 0.8;    // m, fallback when the file has no width columns

  // output.*
  bool real_timing = false;  // write measured times into logs (breaks byte determinism)

  static ExperimentConfig defaults();
  static ExperimentConfig load(const std::string& path);

  /// Parses a JSON document (exposed for tests).
  static ExperimentConfig parse(const std::string& json_text, const std::string& origin);

  /// The schema as a human-readable table (key, type, unit, default).
  static std::string schema_text();

  void validate() const;
};

/// Builds the track described by the config: file-based or the bundled
/// synthetic circuit, plus raceline/RVP attachment.
TrackModel build_track_from_config(const ExperimentConfig& cfg);

}  // namespace vpmpcc
