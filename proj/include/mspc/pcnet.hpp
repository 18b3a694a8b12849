#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mspc/rng.hpp"

// Multi-sensory predictive coding network.
//
// Two sensory branches (visual, tactile) are stacks of layers in which each
// layer predicts the activity of the layer below it; the bottom layer of a
// branch predicts the clamped sensory input. A single multi-sensory layer
// sits on top of both branches and predicts the top layer of each. Inference
// adapts every layer's activity in parallel to reduce the local prediction
// errors; learning adjusts each projection from the presynaptic activity and
// the postsynaptic error only.
namespace mspc::pcnet {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Activation { identity, tanh };

// Sign applied to a layer's own error (activity minus the prediction it
// receives from above) in the activity update. `toward_prediction` (-1) is
// the gradient of the squared-error energy; `paper_literal` (+1) is the
// rule as printed, which pushes activity away from the top-down prediction.
enum class SecondTermSign { toward_prediction, paper_literal };

enum class InferMode { train, test };

std::string to_string(Activation a);
std::string to_string(SecondTermSign s);
Activation parse_activation(const std::string& s);
SecondTermSign parse_second_term_sign(const std::string& s);

struct NetworkConfig {
  std::vector<int> visual_layer_sizes{64, 32};  // bottom to top
  std::vector<int> tactile_layer_sizes{16};
  int multi_size = 24;
  Activation activation = Activation::identity;
  double eta_y = 1e-2;
  double eta_w = 1e-3;
  double activity_init = 0.1;
  int train_iterations = 500;
  // Activity steps per sample before each weight update while training.
  int train_inner_iterations = 20;
  int test_max_iterations = 3000;
  // Per-boundary mean squared prediction error that ends test inference.
  double test_decode_threshold = 1e-3;
  int batch_size = 150;
  SecondTermSign second_term_sign = SecondTermSign::toward_prediction;
  std::uint64_t rng_seed = 1;
  // Fixed by the dataset; stored with the model.
  int visual_input_dim = 60;
  int tactile_input_dim = 24;

  // Small network sized for the synthetic desk-scale world.
  static NetworkConfig desk();
  // Layer sizes and schedule of the original WhiskEye experiments.
  static NetworkConfig full_scale(int visual_input_dim, int tactile_input_dim);

  // Throws InvalidArgument when a field is out of range.
  void validate() const;

  bool operator==(const NetworkConfig&) const = default;
};

// One clamped sample: the layer-0 activity of each branch.
struct SensoryInput {
  VectorXd visual;
  VectorXd tactile;
};

// All prediction weights. `visual[k]` maps the activity of visual layer k+1
// (rows) to a prediction of the layer below it (columns), where the layer
// below layer 1 is the visual input. Same convention for tactile.
struct WeightSet {
  std::vector<MatrixXd> visual;
  std::vector<MatrixXd> tactile;
  MatrixXd multi_to_visual;   // multi_size x top visual size
  MatrixXd multi_to_tactile;  // multi_size x top tactile size

  static WeightSet zeros(const NetworkConfig& config);
  // Entries uniform on [-scale, scale], drawn in declaration order.
  static WeightSet uniform(const NetworkConfig& config, Rng& rng, double scale = 0.1);

  // Matrices in serialization order: visual bottom-up, tactile bottom-up,
  // multi_to_visual, multi_to_tactile.
  std::vector<const MatrixXd*> matrices() const;
  std::vector<MatrixXd*> matrices();

  // Throws ShapeError on any mismatch with the config.
  void check_shapes(const NetworkConfig& config) const;
  bool all_finite() const;

  bool operator==(const WeightSet& other) const;
};

struct NetworkState {
  std::vector<VectorXd> visual;   // layer 1 .. N_V
  std::vector<VectorXd> tactile;  // layer 1 .. N_T
  VectorXd multi;

  static NetworkState filled(const NetworkConfig& config, double value);
  void check_shapes(const NetworkConfig& config) const;

  bool operator==(const NetworkState& other) const;
};

struct Feature {
  VectorXd values;
  int iterations_used = 0;
  std::vector<double> final_decode_errors;
};

// Mean input reconstruction error per outer training iteration.
struct TrainLog {
  std::vector<double> visual_mse;
  std::vector<double> tactile_mse;
};

// Input reconstruction error of the initial state and after every step.
struct DecodeTrace {
  std::vector<double> visual_mse;
  std::vector<double> tactile_mse;
};

struct InferenceResult {
  NetworkState state;
  DecodeTrace trace;
  int iterations = 0;
  // Per-boundary MSE at the final state, see decode_errors().
  std::vector<double> decode_errors;
};

// phi(W^T * upper): the prediction a layer sends to the layer below.
VectorXd predict_layer(const VectorXd& upper, const MatrixXd& weights, Activation activation);

// Synchronous update of every non-clamped layer from the pre-step state.
NetworkState activity_step(const NetworkState& state, const SensoryInput& input,
                           const WeightSet& weights, const NetworkConfig& config);

// eta_w * y_upper * (y_lower - prediction)^T for every projection.
WeightSet weight_increment(const NetworkState& state, const SensoryInput& input,
                           const WeightSet& weights, const NetworkConfig& config);

WeightSet weight_step(const NetworkState& state, const SensoryInput& input,
                      const WeightSet& weights, const NetworkConfig& config);

// Mean squared prediction error at every layer boundary, ordered visual
// input, visual layers 1..N_V-1, visual top (predicted by the multi layer),
// then the same for tactile.
std::vector<double> decode_errors(const NetworkState& state, const SensoryInput& input,
                                  const WeightSet& weights, const NetworkConfig& config);

// Sum of squared prediction errors over every boundary.
double prediction_energy(const NetworkState& state, const SensoryInput& input,
                         const WeightSet& weights, const NetworkConfig& config);

// Starts from activity_init everywhere. Train mode runs exactly
// train_inner_iterations steps; test mode stops at test_max_iterations or
// once every decode error is below test_decode_threshold.
InferenceResult infer(const SensoryInput& input, const WeightSet& weights,
                      const NetworkConfig& config, InferMode mode);

struct TrainResult {
  WeightSet weights;
  TrainLog log;
};

// The weights train() starts from, drawn from config.rng_seed.
WeightSet initial_weights(const NetworkConfig& config);

TrainResult train(std::span<const SensoryInput> dataset, const NetworkConfig& config);

Feature extract_feature(const SensoryInput& input, const WeightSet& weights,
                        const NetworkConfig& config);

double feature_distance(const VectorXd& a, const VectorXd& b);
double feature_distance(const Feature& a, const Feature& b);

}  // namespace mspc::pcnet
