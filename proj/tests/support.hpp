#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mspc/pcnet.hpp"
#include "mspc/rng.hpp"

namespace testsupport {

using mspc::Rng;
using mspc::pcnet::NetworkConfig;
using mspc::pcnet::NetworkState;
using mspc::pcnet::SensoryInput;
using mspc::pcnet::WeightSet;

inline NetworkConfig tiny_config(std::vector<int> visual, std::vector<int> tactile, int multi,
                                 int visual_in, int tactile_in) {
  NetworkConfig c;
  c.visual_layer_sizes = std::move(visual);
  c.tactile_layer_sizes = std::move(tactile);
  c.multi_size = multi;
  c.visual_input_dim = visual_in;
  c.tactile_input_dim = tactile_in;
  return c;
}

inline int draw_size(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

// 1-2 visual layers, 1-2 tactile layers, every size in [1, max_size].
inline NetworkConfig random_config(Rng& rng, int max_size = 5) {
  NetworkConfig c;
  c.visual_layer_sizes.assign(static_cast<std::size_t>(draw_size(rng, 1, 2)), 0);
  for (int& s : c.visual_layer_sizes) s = draw_size(rng, 1, max_size);
  c.tactile_layer_sizes.assign(static_cast<std::size_t>(draw_size(rng, 1, 2)), 0);
  for (int& s : c.tactile_layer_sizes) s = draw_size(rng, 1, max_size);
  c.multi_size = draw_size(rng, 1, max_size);
  c.visual_input_dim = draw_size(rng, 1, max_size);
  c.tactile_input_dim = draw_size(rng, 1, max_size);
  return c;
}

inline Eigen::VectorXd random_vector(Rng& rng, Eigen::Index n, double lo = -1.0, double hi = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

inline NetworkState random_state(const NetworkConfig& c, Rng& rng) {
  NetworkState s = NetworkState::filled(c, 0.0);
  for (auto& v : s.visual) v = random_vector(rng, v.size());
  for (auto& v : s.tactile) v = random_vector(rng, v.size());
  s.multi = random_vector(rng, s.multi.size());
  return s;
}

inline SensoryInput random_input(const NetworkConfig& c, Rng& rng) {
  return {random_vector(rng, c.visual_input_dim, 0.0, 1.0),
          random_vector(rng, c.tactile_input_dim, 0.0, 1.0)};
}

// Activities of every layer, flattened visual, tactile, multi.
inline std::vector<double*> activity_entries(NetworkState& s) {
  std::vector<double*> out;
  for (auto& v : s.visual)
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(&v(i));
  for (auto& v : s.tactile)
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(&v(i));
  for (Eigen::Index i = 0; i < s.multi.size(); ++i) out.push_back(&s.multi(i));
  return out;
}

// Relative error ||step - expected|| / ||expected|| between the activity
// change of one step and -(eta_y / 2) times the central-difference gradient
// of the summed squared prediction errors.
inline double gradient_mismatch(const NetworkConfig& c, const NetworkState& state,
                                const SensoryInput& input, const WeightSet& w, double h = 1e-5) {
  NetworkState probe = state;
  NetworkState next = mspc::pcnet::activity_step(state, input, w, c);
  std::vector<double*> p = activity_entries(probe);
  std::vector<double*> n = activity_entries(next);
  NetworkState base = state;
  std::vector<double*> b = activity_entries(base);
  double diff2 = 0.0, ref2 = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double orig = *p[k];
    *p[k] = orig + h;
    const double up = mspc::pcnet::prediction_energy(probe, input, w, c);
    *p[k] = orig - h;
    const double down = mspc::pcnet::prediction_energy(probe, input, w, c);
    *p[k] = orig;
    const double grad = (up - down) / (2.0 * h);
    const double expected = -0.5 * c.eta_y * grad;
    const double step = *n[k] - *b[k];
    diff2 += (step - expected) * (step - expected);
    ref2 += expected * expected;
  }
  return ref2 > 0.0 ? std::sqrt(diff2 / ref2) : std::sqrt(diff2);
}

// Empty directory under the system temp dir, unique per name.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mspc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
