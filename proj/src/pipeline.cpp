#include "mspc/pipeline.hpp"

#include <cstdio>

#include "mspc/errors.hpp"
#include "mspc/persist.hpp"

namespace mspc::pipeline {

namespace {

constexpr std::uint64_t kTrajectoryStream = 0x20;
constexpr std::uint64_t kSensorStream = 0x21;

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

}  // namespace

std::string run_tag(Environment env, Run run) {
  const char* suffix = run == Run::a ? "_a" : run == Run::b ? "_b" : "_train";
  return world::to_string(env) + suffix;
}

std::vector<world::Pose> make_trajectory(const RunConfig& config, Run run) {
  Rng rng = Rng::derive(config.data_seed, kTrajectoryStream, static_cast<std::uint64_t>(run));
  const double step = run == Run::training ? config.train_step_length : config.step_length;
  return world::generate_trajectory(config.waypoints, step, config.noise, rng);
}

std::vector<Observation> make_dataset(const RunConfig& config, Environment env, Run run) {
  const std::vector<world::Pose> poses = make_trajectory(config, run);
  const std::uint64_t sensor_seed =
      Rng::derive(config.data_seed, kSensorStream, static_cast<std::uint64_t>(run)).next_u64();
  return world::build_dataset(world::preset_environment(env), poses, config.rig, sensor_seed,
                              run_tag(env, run));
}

TrajectoryPair make_trajectory_pair(const RunConfig& config, Environment env) {
  return {make_dataset(config, env, Run::a), make_dataset(config, env, Run::b)};
}

std::vector<Observation> make_training_dataset(const RunConfig& config) {
  return make_dataset(config, Environment::E1, Run::training);
}

std::vector<pcnet::SensoryInput> sensory_inputs(std::span<const Observation> data) {
  std::vector<pcnet::SensoryInput> out;
  out.reserve(data.size());
  for (const Observation& o : data) out.push_back({o.visual, o.tactile});
  return out;
}

pcnet::NetworkConfig network_for(const RunConfig& config, std::span<const Observation> data) {
  pcnet::NetworkConfig net = config.network;
  if (data.empty()) {
    net.visual_input_dim = config.rig.n_rays;
    net.tactile_input_dim = config.rig.n_whiskers;
  } else {
    net.visual_input_dim = static_cast<int>(data.front().visual.size());
    net.tactile_input_dim = static_cast<int>(data.front().tactile.size());
  }
  return net;
}

pcnet::TrainResult train_network(const RunConfig& config, std::span<const Observation> data) {
  const pcnet::NetworkConfig net = network_for(config, data);
  for (const Observation& o : data)
    if (o.visual.size() != net.visual_input_dim || o.tactile.size() != net.tactile_input_dim)
      throw ShapeError("observations in the training set differ in size");
  const auto inputs = sensory_inputs(data);
  return pcnet::train(inputs, net);
}

eval::TemplateSet extract_learned(std::span<const Observation> data, const pcnet::WeightSet& weights,
                                  const pcnet::NetworkConfig& network, const std::string& tag) {
  eval::TemplateSet set;
  set.method = eval::Method::learned;
  set.trajectory_tag = tag;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Observation& o = data[i];
    if (o.visual.size() != network.visual_input_dim ||
        o.tactile.size() != network.tactile_input_dim)
      throw IncompatibleError("observation " + std::to_string(i) + " has " +
                              std::to_string(o.visual.size()) + " visual and " +
                              std::to_string(o.tactile.size()) + " tactile values; the model expects " +
                              std::to_string(network.visual_input_dim) + " and " +
                              std::to_string(network.tactile_input_dim));
    pcnet::Feature f = pcnet::extract_feature({o.visual, o.tactile}, weights, network);
    set.entries.push_back({i, o.pose, std::move(f.values)});
  }
  return set;
}

std::vector<baseline::HandcraftedTemplate> handcrafted_templates(
    std::span<const Observation> data, const baseline::BaselineParams& params) {
  std::vector<baseline::HandcraftedTemplate> out;
  out.reserve(data.size());
  for (const Observation& o : data)
    out.push_back(baseline::make_template(o.visual, o.tactile, o.contacts, params));
  return out;
}

baseline::ScalingFit calibrate(std::span<const Observation> calibration,
                               const baseline::BaselineParams& params) {
  const auto templates = handcrafted_templates(calibration, params);
  return baseline::fit_scaling(templates);
}

eval::TemplateSet extract_handcrafted(std::span<const Observation> data,
                                      const baseline::BaselineParams& params,
                                      const baseline::ScalingFactors& scaling,
                                      const std::string& tag) {
  eval::TemplateSet set;
  set.method = eval::Method::handcrafted;
  set.trajectory_tag = tag;
  set.scaling = scaling;
  auto templates = handcrafted_templates(data, params);
  for (std::size_t i = 0; i < data.size(); ++i)
    set.entries.push_back({i, data[i].pose, std::move(templates[i])});
  return set;
}

Evaluation evaluate_pair(const eval::TemplateSet& a, const eval::TemplateSet& b,
                         double angle_weight) {
  if (a.method == eval::Method::handcrafted && a.scaling && b.scaling &&
      !(a.scaling->alpha == b.scaling->alpha && a.scaling->beta == b.scaling->beta &&
        a.scaling->gamma == b.scaling->gamma))
    throw IncompatibleError("template sets were scaled with different factors");
  const std::optional<baseline::ScalingFactors> scaling =
      a.method == eval::Method::handcrafted ? (a.scaling ? a.scaling : b.scaling) : std::nullopt;
  return {eval::compute_tme(a, b, scaling), eval::compute_gtm(a, b, angle_weight)};
}

eval::SweepResult sweep(const Evaluation& e, const RunConfig& config) {
  std::vector<double> grid = eval::candidate_thresholds(e.tme);
  if (grid.empty()) grid.push_back(config.thresholds.theta_match);
  return eval::sweep_thresholds(e.tme, e.gtm, config.thresholds.tau, grid, config.recall_mode);
}

const ComparisonRow& ComparisonReport::at(Environment env, eval::Method method) const {
  for (const ComparisonRow& r : rows)
    if (r.env == env && r.method == method) return r;
  throw InvalidArgument("no report row for " + world::to_string(env) + "/" +
                        eval::to_string(method));
}

std::string ComparisonReport::to_csv() const {
  std::string out = "environment,method,theta_match,tp,fp,fn,tn,precision,recall,f1\n";
  for (const ComparisonRow& r : rows) {
    const eval::Scores& s = r.scores;
    out += world::to_string(r.env) + ',' + eval::to_string(r.method) + ',' +
           persist::format_real(r.theta_match) + ',' + std::to_string(s.tp) + ',' +
           std::to_string(s.fp) + ',' + std::to_string(s.fn) + ',' + std::to_string(s.tn) + ',' +
           persist::format_real(s.precision) + ',' + persist::format_real(s.recall) + ',' +
           persist::format_real(s.f1) + '\n';
  }
  return out;
}

std::string ComparisonReport::to_text() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-4s %-12s %12s %5s %5s %5s %5s %8s %8s %8s\n", "env",
                "method", "theta", "TP", "FP", "FN", "TN", "P%", "R%", "F1%");
  out += line;
  for (const ComparisonRow& r : rows) {
    const eval::Scores& s = r.scores;
    std::snprintf(line, sizeof line, "%-4s %-12s %12.6g %5lld %5lld %5lld %5lld %8s %8s %8s\n",
                  world::to_string(r.env).c_str(), eval::to_string(r.method).c_str(), r.theta_match,
                  static_cast<long long>(s.tp), static_cast<long long>(s.fp),
                  static_cast<long long>(s.fn), static_cast<long long>(s.tn),
                  percent(s.precision).c_str(), percent(s.recall).c_str(), percent(s.f1).c_str());
    out += line;
  }
  bool has_e3 = false;
  for (const ComparisonRow& r : rows) has_e3 |= r.env == Environment::E3;
  if (has_e3) {
    for (const ComparisonRow& r : rows) {
      if (r.env != Environment::E3 || r.method != eval::Method::learned) continue;
      const double gap = r.scores.f1 - at(Environment::E3, eval::Method::handcrafted).scores.f1;
      out += "E3 F1 gap (learned - handcrafted): " + percent(gap) + " points\n";
    }
    out += "WhiskEye reference, E3: learned F1 72.94%, handcrafted F1 62.34%\n";
  }
  return out;
}

ComparisonReport run_comparison(const RunConfig& config, std::span<const Environment> envs,
                                const pcnet::WeightSet& weights,
                                const pcnet::NetworkConfig& network,
                                std::span<const Observation> calibration) {
  const baseline::ScalingFit fit = calibrate(calibration, config.baseline);

  struct Scored {
    Environment env;
    eval::Method method;
    Evaluation evaluation;
    eval::SweepResult sweep;
  };
  auto score_env = [&](Environment env) {
    const TrajectoryPair pair = make_trajectory_pair(config, env);
    std::vector<Scored> out;
    {
      const auto a = extract_learned(pair.a, weights, network, run_tag(env, Run::a));
      const auto b = extract_learned(pair.b, weights, network, run_tag(env, Run::b));
      Evaluation e = evaluate_pair(a, b, config.angle_weight);
      eval::SweepResult s = sweep(e, config);
      out.push_back({env, eval::Method::learned, std::move(e), std::move(s)});
    }
    {
      const auto a = extract_handcrafted(pair.a, config.baseline, fit.factors, run_tag(env, Run::a));
      const auto b = extract_handcrafted(pair.b, config.baseline, fit.factors, run_tag(env, Run::b));
      Evaluation e = evaluate_pair(a, b, config.angle_weight);
      eval::SweepResult s = sweep(e, config);
      out.push_back({env, eval::Method::handcrafted, std::move(e), std::move(s)});
    }
    return out;
  };

  std::vector<Scored> scored;
  bool e1_listed = false;
  for (Environment env : envs) e1_listed |= env == Environment::E1;
  if (!e1_listed) scored = score_env(Environment::E1);
  for (Environment env : envs) {
    auto s = score_env(env);
    scored.insert(scored.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }

  double theta[2] = {config.thresholds.theta_match, config.thresholds.theta_match};
  for (const Scored& s : scored)
    if (s.env == Environment::E1)
      theta[static_cast<int>(s.method)] = s.sweep.rows[s.sweep.best].theta;

  ComparisonReport report;
  for (Environment env : envs) {
    for (const Scored& s : scored) {
      if (s.env != env) continue;
      const double t = theta[static_cast<int>(s.method)];
      const eval::Scores scores = eval::precision_recall(
          eval::classify_matches(s.evaluation.tme, s.evaluation.gtm, {config.thresholds.tau, t}),
          config.recall_mode);
      report.rows.push_back({env, s.method, t, scores});
    }
  }
  return report;
}

}  // namespace mspc::pipeline
