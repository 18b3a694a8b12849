#include "mspc/pcnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mspc/errors.hpp"

namespace mspc::pcnet {

namespace {

constexpr std::uint64_t kInitStream = 0x1;
constexpr std::uint64_t kShuffleStream = 0x2;

double apply_activation(double v, Activation a) {
  return a == Activation::tanh ? std::tanh(v) : v;
}

double mse(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.squaredNorm() / static_cast<double>(v.size());
}

// Prediction errors of one branch. errors[k] is (layer k) - (prediction of
// layer k from layer k+1), with layer 0 the clamped input and layer N+1 the
// multi-sensory layer.
std::vector<VectorXd> branch_errors(const VectorXd& input, const std::vector<VectorXd>& activity,
                                    const std::vector<MatrixXd>& weights,
                                    const MatrixXd& from_multi, const VectorXd& multi,
                                    Activation activation) {
  const std::size_t n = activity.size();
  std::vector<VectorXd> errors(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const VectorXd& lower = k == 0 ? input : activity[k - 1];
    const VectorXd& upper = k == n ? multi : activity[k];
    const MatrixXd& w = k == n ? from_multi : weights[k];
    errors[k] = lower - predict_layer(upper, w, activation);
  }
  return errors;
}

struct Errors {
  std::vector<VectorXd> visual;
  std::vector<VectorXd> tactile;
};

Errors all_errors(const NetworkState& state, const SensoryInput& input, const WeightSet& weights,
                  const NetworkConfig& config) {
  return {branch_errors(input.visual, state.visual, weights.visual, weights.multi_to_visual,
                        state.multi, config.activation),
          branch_errors(input.tactile, state.tactile, weights.tactile, weights.multi_to_tactile,
                        state.multi, config.activation)};
}

void check_finite(const VectorXd& v, const std::string& layer) {
  if (!v.allFinite()) throw DivergenceError(layer, "non-finite activity");
}

std::vector<VectorXd> step_branch(const std::vector<VectorXd>& activity,
                                  const std::vector<VectorXd>& errors,
                                  const std::vector<MatrixXd>& weights, double eta, double sign,
                                  const std::string& name) {
  std::vector<VectorXd> next(activity.size());
  for (std::size_t k = 0; k < activity.size(); ++k) {
    next[k] = activity[k] + eta * (weights[k] * errors[k] + sign * errors[k + 1]);
    check_finite(next[k], name + "." + std::to_string(k + 1));
  }
  return next;
}

NetworkState step_from_errors(const NetworkState& state, const Errors& errors,
                              const WeightSet& weights, const NetworkConfig& config) {
  const double sign = config.second_term_sign == SecondTermSign::toward_prediction ? -1.0 : 1.0;
  const double eta = config.eta_y;
  NetworkState next;
  next.visual = step_branch(state.visual, errors.visual, weights.visual, eta, sign, "visual");
  next.tactile = step_branch(state.tactile, errors.tactile, weights.tactile, eta, sign, "tactile");
  // The multi-sensory layer has nothing above it: bottom-up errors only.
  next.multi = state.multi + eta * (weights.multi_to_visual * errors.visual.back() +
                                    weights.multi_to_tactile * errors.tactile.back());
  check_finite(next.multi, "multi");
  return next;
}

std::vector<double> errors_to_mse(const Errors& errors) {
  std::vector<double> out;
  out.reserve(errors.visual.size() + errors.tactile.size());
  for (const auto& e : errors.visual) out.push_back(mse(e));
  for (const auto& e : errors.tactile) out.push_back(mse(e));
  return out;
}

void check_input(const SensoryInput& input, const NetworkConfig& config) {
  if (input.visual.size() != config.visual_input_dim ||
      input.tactile.size() != config.tactile_input_dim) {
    throw ShapeError("input dimensions (" + std::to_string(input.visual.size()) + ", " +
                     std::to_string(input.tactile.size()) + ") do not match network (" +
                     std::to_string(config.visual_input_dim) + ", " +
                     std::to_string(config.tactile_input_dim) + ")");
  }
}

void add_outer(MatrixXd& target, const VectorXd& upper, const VectorXd& error, double scale) {
  target.noalias() += scale * upper * error.transpose();
}

WeightSet increment_from_errors(const NetworkState& state, const Errors& errors,
                                const NetworkConfig& config) {
  WeightSet inc = WeightSet::zeros(config);
  const double eta = config.eta_w;
  for (std::size_t k = 0; k < state.visual.size(); ++k)
    add_outer(inc.visual[k], state.visual[k], errors.visual[k], eta);
  for (std::size_t k = 0; k < state.tactile.size(); ++k)
    add_outer(inc.tactile[k], state.tactile[k], errors.tactile[k], eta);
  add_outer(inc.multi_to_visual, state.multi, errors.visual.back(), eta);
  add_outer(inc.multi_to_tactile, state.multi, errors.tactile.back(), eta);
  return inc;
}

void accumulate(WeightSet& target, const WeightSet& inc, double scale) {
  auto dst = target.matrices();
  auto src = inc.matrices();
  for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] += scale * *src[i];
}

void check_weights_finite(const WeightSet& w) {
  auto check = [](const MatrixXd& m, const std::string& name) {
    if (!m.allFinite()) throw DivergenceError(name, "non-finite weight");
  };
  for (std::size_t k = 0; k < w.visual.size(); ++k) check(w.visual[k], "visual.w" + std::to_string(k + 1));
  for (std::size_t k = 0; k < w.tactile.size(); ++k) check(w.tactile[k], "tactile.w" + std::to_string(k + 1));
  check(w.multi_to_visual, "multi.w_visual");
  check(w.multi_to_tactile, "multi.w_tactile");
}

std::vector<std::pair<int, int>> weight_shapes(const NetworkConfig& c) {
  std::vector<std::pair<int, int>> shapes;
  int below = c.visual_input_dim;
  for (int s : c.visual_layer_sizes) {
    shapes.emplace_back(s, below);
    below = s;
  }
  below = c.tactile_input_dim;
  for (int s : c.tactile_layer_sizes) {
    shapes.emplace_back(s, below);
    below = s;
  }
  shapes.emplace_back(c.multi_size, c.visual_layer_sizes.back());
  shapes.emplace_back(c.multi_size, c.tactile_layer_sizes.back());
  return shapes;
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

std::string to_string(SecondTermSign s) {
  return s == SecondTermSign::paper_literal ? "paper_literal" : "toward_prediction";
}

Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "tanh") return Activation::tanh;
  throw InvalidArgument("unknown activation '" + s + "'");
}

SecondTermSign parse_second_term_sign(const std::string& s) {
  if (s == "toward_prediction") return SecondTermSign::toward_prediction;
  if (s == "paper_literal") return SecondTermSign::paper_literal;
  throw InvalidArgument("unknown second_term_sign '" + s + "'");
}

NetworkConfig NetworkConfig::desk() { return NetworkConfig{}; }

NetworkConfig NetworkConfig::full_scale(int visual_input_dim, int tactile_input_dim) {
  NetworkConfig c;
  c.visual_layer_sizes = {1000, 300};
  c.tactile_layer_sizes = {100};
  c.multi_size = 200;
  c.eta_y = 4e-4;
  c.eta_w = 4e-4;
  c.train_iterations = 10000;
  c.batch_size = 150;
  c.visual_input_dim = visual_input_dim;
  c.tactile_input_dim = tactile_input_dim;
  return c;
}

void NetworkConfig::validate() const {
  auto positive_sizes = [](const std::vector<int>& sizes, const char* name) {
    if (sizes.empty()) throw InvalidArgument(std::string(name) + " must have at least one layer");
    for (int s : sizes)
      if (s < 1) throw InvalidArgument(std::string(name) + " entries must be >= 1");
  };
  positive_sizes(visual_layer_sizes, "visual_layer_sizes");
  positive_sizes(tactile_layer_sizes, "tactile_layer_sizes");
  if (multi_size < 1) throw InvalidArgument("multi_size must be >= 1");
  if (!(eta_y > 0.0) || !std::isfinite(eta_y)) throw InvalidArgument("eta_y must be > 0");
  if (!(eta_w > 0.0) || !std::isfinite(eta_w)) throw InvalidArgument("eta_w must be > 0");
  if (!std::isfinite(activity_init)) throw InvalidArgument("activity_init must be finite");
  if (train_iterations < 1) throw InvalidArgument("train_iterations must be >= 1");
  if (train_inner_iterations < 1) throw InvalidArgument("train_inner_iterations must be >= 1");
  if (test_max_iterations < 1) throw InvalidArgument("test_max_iterations must be >= 1");
  if (!(test_decode_threshold > 0.0)) throw InvalidArgument("test_decode_threshold must be > 0");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (visual_input_dim < 1 || tactile_input_dim < 1)
    throw InvalidArgument("input dimensions must be >= 1");
}

WeightSet WeightSet::zeros(const NetworkConfig& config) {
  WeightSet w;
  const auto shapes = weight_shapes(config);
  const std::size_t nv = config.visual_layer_sizes.size();
  const std::size_t nt = config.tactile_layer_sizes.size();
  for (std::size_t i = 0; i < nv; ++i)
    w.visual.push_back(MatrixXd::Zero(shapes[i].first, shapes[i].second));
  for (std::size_t i = 0; i < nt; ++i)
    w.tactile.push_back(MatrixXd::Zero(shapes[nv + i].first, shapes[nv + i].second));
  w.multi_to_visual = MatrixXd::Zero(shapes[nv + nt].first, shapes[nv + nt].second);
  w.multi_to_tactile = MatrixXd::Zero(shapes[nv + nt + 1].first, shapes[nv + nt + 1].second);
  return w;
}

WeightSet WeightSet::uniform(const NetworkConfig& config, Rng& rng, double scale) {
  WeightSet w = zeros(config);
  for (MatrixXd* m : w.matrices())
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c) (*m)(r, c) = rng.uniform(-scale, scale);
  return w;
}

std::vector<const MatrixXd*> WeightSet::matrices() const {
  std::vector<const MatrixXd*> out;
  for (const auto& m : visual) out.push_back(&m);
  for (const auto& m : tactile) out.push_back(&m);
  out.push_back(&multi_to_visual);
  out.push_back(&multi_to_tactile);
  return out;
}

std::vector<MatrixXd*> WeightSet::matrices() {
  std::vector<MatrixXd*> out;
  for (auto& m : visual) out.push_back(&m);
  for (auto& m : tactile) out.push_back(&m);
  out.push_back(&multi_to_visual);
  out.push_back(&multi_to_tactile);
  return out;
}

void WeightSet::check_shapes(const NetworkConfig& config) const {
  if (visual.size() != config.visual_layer_sizes.size() ||
      tactile.size() != config.tactile_layer_sizes.size())
    throw ShapeError("weight set layer count does not match config");
  const auto shapes = weight_shapes(config);
  const auto ms = matrices();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (ms[i]->rows() != shapes[i].first || ms[i]->cols() != shapes[i].second)
      throw ShapeError("weight matrix " + std::to_string(i) + " is " +
                       std::to_string(ms[i]->rows()) + "x" + std::to_string(ms[i]->cols()) +
                       ", expected " + std::to_string(shapes[i].first) + "x" +
                       std::to_string(shapes[i].second));
  }
}

bool WeightSet::all_finite() const {
  for (const MatrixXd* m : matrices())
    if (!m->allFinite()) return false;
  return true;
}

bool WeightSet::operator==(const WeightSet& other) const {
  const auto a = matrices();
  const auto b = other.matrices();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols()) return false;
    if (*a[i] != *b[i]) return false;
  }
  return true;
}

NetworkState NetworkState::filled(const NetworkConfig& config, double value) {
  NetworkState s;
  for (int n : config.visual_layer_sizes) s.visual.push_back(VectorXd::Constant(n, value));
  for (int n : config.tactile_layer_sizes) s.tactile.push_back(VectorXd::Constant(n, value));
  s.multi = VectorXd::Constant(config.multi_size, value);
  return s;
}

void NetworkState::check_shapes(const NetworkConfig& config) const {
  auto check = [](const std::vector<VectorXd>& acts, const std::vector<int>& sizes,
                  const char* name) {
    if (acts.size() != sizes.size())
      throw ShapeError(std::string(name) + " state has wrong layer count");
    for (std::size_t k = 0; k < acts.size(); ++k)
      if (acts[k].size() != sizes[k])
        throw ShapeError(std::string(name) + " layer " + std::to_string(k + 1) +
                         " has wrong length");
  };
  check(visual, config.visual_layer_sizes, "visual");
  check(tactile, config.tactile_layer_sizes, "tactile");
  if (multi.size() != config.multi_size) throw ShapeError("multi state has wrong length");
}

bool NetworkState::operator==(const NetworkState& other) const {
  auto eq = [](const std::vector<VectorXd>& a, const std::vector<VectorXd>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].size() != b[i].size() || a[i] != b[i]) return false;
    return true;
  };
  return eq(visual, other.visual) && eq(tactile, other.tactile) &&
         multi.size() == other.multi.size() && multi == other.multi;
}

VectorXd predict_layer(const VectorXd& upper, const MatrixXd& weights, Activation activation) {
  if (upper.size() != weights.rows())
    throw ShapeError("activity length " + std::to_string(upper.size()) +
                     " does not match weight rows " + std::to_string(weights.rows()));
  VectorXd out = weights.transpose() * upper;
  if (activation != Activation::identity)
    out = out.unaryExpr([activation](double v) { return apply_activation(v, activation); });
  return out;
}

NetworkState activity_step(const NetworkState& state, const SensoryInput& input,
                           const WeightSet& weights, const NetworkConfig& config) {
  check_input(input, config);
  state.check_shapes(config);
  weights.check_shapes(config);
  return step_from_errors(state, all_errors(state, input, weights, config), weights, config);
}

WeightSet weight_increment(const NetworkState& state, const SensoryInput& input,
                           const WeightSet& weights, const NetworkConfig& config) {
  check_input(input, config);
  state.check_shapes(config);
  weights.check_shapes(config);
  WeightSet inc = increment_from_errors(state, all_errors(state, input, weights, config), config);
  check_weights_finite(inc);
  return inc;
}

WeightSet weight_step(const NetworkState& state, const SensoryInput& input,
                      const WeightSet& weights, const NetworkConfig& config) {
  WeightSet next = weights;
  accumulate(next, weight_increment(state, input, weights, config), 1.0);
  check_weights_finite(next);
  return next;
}

std::vector<double> decode_errors(const NetworkState& state, const SensoryInput& input,
                                  const WeightSet& weights, const NetworkConfig& config) {
  check_input(input, config);
  state.check_shapes(config);
  weights.check_shapes(config);
  return errors_to_mse(all_errors(state, input, weights, config));
}

double prediction_energy(const NetworkState& state, const SensoryInput& input,
                         const WeightSet& weights, const NetworkConfig& config) {
  check_input(input, config);
  state.check_shapes(config);
  weights.check_shapes(config);
  const Errors e = all_errors(state, input, weights, config);
  double total = 0.0;
  for (const auto& v : e.visual) total += v.squaredNorm();
  for (const auto& v : e.tactile) total += v.squaredNorm();
  return total;
}

InferenceResult infer(const SensoryInput& input, const WeightSet& weights,
                      const NetworkConfig& config, InferMode mode) {
  check_input(input, config);
  weights.check_shapes(config);

  InferenceResult result;
  result.state = NetworkState::filled(config, config.activity_init);
  const int limit = mode == InferMode::train ? config.train_inner_iterations
                                             : config.test_max_iterations;
  for (;;) {
    const Errors errors = all_errors(result.state, input, weights, config);
    result.trace.visual_mse.push_back(mse(errors.visual.front()));
    result.trace.tactile_mse.push_back(mse(errors.tactile.front()));
    result.decode_errors = errors_to_mse(errors);
    if (mode == InferMode::test &&
        std::all_of(result.decode_errors.begin(), result.decode_errors.end(),
                    [&](double e) { return e < config.test_decode_threshold; }))
      break;
    if (result.iterations >= limit) break;
    result.state = step_from_errors(result.state, errors, weights, config);
    ++result.iterations;
  }
  return result;
}

WeightSet initial_weights(const NetworkConfig& config) {
  Rng init_rng = Rng::derive(config.rng_seed, kInitStream, 0);
  return WeightSet::uniform(config, init_rng);
}

TrainResult train(std::span<const SensoryInput> dataset, const NetworkConfig& config) {
  config.validate();
  if (dataset.empty()) throw InvalidArgument("training dataset is empty");
  for (const auto& sample : dataset) check_input(sample, config);

  TrainResult result{initial_weights(config), {}};
  result.log.visual_mse.reserve(config.train_iterations);
  result.log.tactile_mse.reserve(config.train_iterations);

  std::vector<std::size_t> order(dataset.size());
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);

  for (int it = 0; it < config.train_iterations; ++it) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = Rng::derive(config.rng_seed, kShuffleStream, static_cast<std::uint64_t>(it));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double visual_sum = 0.0;
    double tactile_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      WeightSet sum = WeightSet::zeros(config);
      for (std::size_t i = begin; i < end; ++i) {
        const SensoryInput& sample = dataset[order[i]];
        InferenceResult r = infer(sample, result.weights, config, InferMode::train);
        visual_sum += r.trace.visual_mse.back();
        tactile_sum += r.trace.tactile_mse.back();
        const Errors errors = all_errors(r.state, sample, result.weights, config);
        accumulate(sum, increment_from_errors(r.state, errors, config), 1.0);
      }
      accumulate(result.weights, sum, 1.0 / static_cast<double>(end - begin));
      check_weights_finite(result.weights);
    }
    const double n = static_cast<double>(dataset.size());
    result.log.visual_mse.push_back(visual_sum / n);
    result.log.tactile_mse.push_back(tactile_sum / n);
  }
  return result;
}

Feature extract_feature(const SensoryInput& input, const WeightSet& weights,
                        const NetworkConfig& config) {
  InferenceResult r = infer(input, weights, config, InferMode::test);
  return {std::move(r.state.multi), r.iterations, std::move(r.decode_errors)};
}

double feature_distance(const VectorXd& a, const VectorXd& b) {
  if (a.size() != b.size())
    throw ShapeError("feature lengths differ: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  return (a - b).norm();
}

double feature_distance(const Feature& a, const Feature& b) {
  return feature_distance(a.values, b.values);
}

}  // namespace mspc::pcnet
