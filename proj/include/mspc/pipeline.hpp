#pragma once

#include <span>
#include <string>
#include <vector>

#include "mspc/baseline.hpp"
#include "mspc/evaluate.hpp"
#include "mspc/pcnet.hpp"
#include "mspc/run_config.hpp"
#include "mspc/synthworld.hpp"

// End-to-end steps shared by the CLI commands and the acceptance harness.
namespace mspc::pipeline {

using cli::RunConfig;
using world::Environment;
using world::Observation;

// Which of the runs generated from one data seed.
enum class Run { a = 0, b = 1, training = 2 };

std::string run_tag(Environment env, Run run);

// Trajectory and sensor noise of each run derive from (data_seed, run) only,
// so runs a and b follow the same noisy poses in every environment.
std::vector<world::Pose> make_trajectory(const RunConfig& config, Run run);
std::vector<Observation> make_dataset(const RunConfig& config, Environment env, Run run);

struct TrajectoryPair {
  std::vector<Observation> a;
  std::vector<Observation> b;
};
TrajectoryPair make_trajectory_pair(const RunConfig& config, Environment env);

// Exploration run in E1 at the training step length.
std::vector<Observation> make_training_dataset(const RunConfig& config);

std::vector<pcnet::SensoryInput> sensory_inputs(std::span<const Observation> data);

// The network dimensions fitted to the data (input sizes taken from the
// first observation, or from the rig when the data is empty).
pcnet::NetworkConfig network_for(const RunConfig& config, std::span<const Observation> data);

pcnet::TrainResult train_network(const RunConfig& config, std::span<const Observation> data);

// Throws IncompatibleError when the observation sizes do not fit the model.
eval::TemplateSet extract_learned(std::span<const Observation> data, const pcnet::WeightSet& weights,
                                  const pcnet::NetworkConfig& network, const std::string& tag);

std::vector<baseline::HandcraftedTemplate> handcrafted_templates(
    std::span<const Observation> data, const baseline::BaselineParams& params);
baseline::ScalingFit calibrate(std::span<const Observation> calibration,
                               const baseline::BaselineParams& params);
eval::TemplateSet extract_handcrafted(std::span<const Observation> data,
                                      const baseline::BaselineParams& params,
                                      const baseline::ScalingFactors& scaling,
                                      const std::string& tag);

struct Evaluation {
  eval::MatchErrorMatrix tme;
  eval::GroundTruthMatrix gtm;
};
Evaluation evaluate_pair(const eval::TemplateSet& a, const eval::TemplateSet& b,
                         double angle_weight);

// Sweep over the distinct row minima of the TME; falls back to the given
// theta when the TME has no columns.
eval::SweepResult sweep(const Evaluation& e, const RunConfig& config);

struct ComparisonRow {
  Environment env;
  eval::Method method;
  double theta_match = 0.0;
  eval::Scores scores;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;

  const ComparisonRow& at(Environment env, eval::Method method) const;
  std::string to_csv() const;
  std::string to_text() const;
};

// For each environment, extracts both template kinds from runs a and b and
// scores them. theta_match per method is the best-F1 sweep value on E1 and
// is held for the other environments. The handcrafted factors are fitted on
// `calibration`.
ComparisonReport run_comparison(const RunConfig& config, std::span<const Environment> envs,
                                const pcnet::WeightSet& weights,
                                const pcnet::NetworkConfig& network,
                                std::span<const Observation> calibration);

}  // namespace mspc::pipeline
