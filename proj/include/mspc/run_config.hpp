#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mspc/baseline.hpp"
#include "mspc/evaluate.hpp"
#include "mspc/pcnet.hpp"
#include "mspc/synthworld.hpp"

namespace mspc::cli {

// Flat key=value run configuration. Keys are grouped by prefix:
//   net.*       network config (field names of pcnet::NetworkConfig)
//   rig.*       sensor rig
//   traj.*      trajectory shape and noise
//   data.seed   seed of every generated dataset
//   baseline.*  hand-crafted descriptor parameters
//   eval.*      match thresholds and scoring
//   io.out_dir  output directory
struct RunConfig {
  pcnet::NetworkConfig network = pcnet::NetworkConfig::desk();
  world::SensorRig rig;
  world::TrajectoryNoise noise;
  double step_length = 0.04;
  // Sample spacing of the training exploration run (200 samples on the
  // default loop).
  double train_step_length = 0.0521;
  std::vector<world::Pose> waypoints = world::default_waypoints();
  std::uint64_t data_seed = 1;
  baseline::BaselineParams baseline;
  eval::MatchThresholds thresholds{0.3, 1.0};
  double angle_weight = 0.0;
  eval::RecallMode recall_mode = eval::RecallMode::standard;
  std::string out_dir = ".";

  // Throws InvalidArgument for an unknown key or a bad value.
  void set(std::string_view key, std::string_view value);
  void apply_text(std::string_view text);
  std::string to_text() const;
  std::vector<std::string> keys() const;
  void validate() const;
};

std::string waypoints_to_text(const std::vector<world::Pose>& waypoints);
std::vector<world::Pose> waypoints_from_text(std::string_view text);

}  // namespace mspc::cli
