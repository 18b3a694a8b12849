// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mspc/baseline.hpp"
#include "mspc/cli.hpp"
#include "mspc/errors.hpp"
#include "mspc/evaluate.hpp"
#include "mspc/pcnet.hpp"
#include "mspc/persist.hpp"
#include "mspc/pipeline.hpp"
#include "mspc/synthworld.hpp"
#include "../support.hpp"

using namespace mspc;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and sizes.
constexpr int kGradientNets = 50;
constexpr int kGradientMaxSize = 5;
constexpr double kGradientTolerance = 1e-6;
constexpr double kGradientBudgetSeconds = 10.0;

constexpr std::size_t kDescentSamples = 200;
constexpr int kDescentIterations = 500;
constexpr double kDescentRatio = 0.5;
constexpr double kDescentBudgetSeconds = 120.0;

constexpr double kTau = 0.3;

constexpr int kOracleInstances = 100;
constexpr int kOracleMaxSize = 50;

constexpr int kComparisonSeeds = 5;
constexpr double kMinimumGap = 0.0;
constexpr double kComparisonBudgetSeconds = 600.0;

constexpr int kPropertyCases = 1000;
constexpr double kTriangleSlack = 1e-12;
constexpr double kHistogramSumTolerance = 1e-12;

constexpr int kRoundTrips = 100;

constexpr double kAliasVisualGap = 1e-9;
constexpr double kAliasTactileGap = 0.1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1. Activity steps against central differences of the energy, taken here as
// half the summed squared prediction errors so that one step is -eta_y times
// its gradient.
Outcome gradient_fidelity() {
  Rng rng(2024);
  double worst = 0.0;
  const auto start = std::chrono::steady_clock::now();
  for (int n = 0; n < kGradientNets; ++n) {
    pcnet::NetworkConfig c = testsupport::random_config(rng, kGradientMaxSize);
    c.activation = pcnet::Activation::identity;
    c.second_term_sign = pcnet::SecondTermSign::toward_prediction;
    const pcnet::WeightSet w = pcnet::WeightSet::uniform(c, rng, 1.0);
    const auto state = testsupport::random_state(c, rng);
    const auto input = testsupport::random_input(c, rng);
    worst = std::max(worst, testsupport::gradient_mismatch(c, state, input, w));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst < kGradientTolerance && secs < kGradientBudgetSeconds,
          std::to_string(kGradientNets) + " nets, worst relative error " + fmt("%.3g", worst) + " (< " +
              fmt("%g", kGradientTolerance) + ")"};
}

struct ModuleMse {
  double visual = 0.0, tactile = 0.0, pooled = 0.0;
};

// Input reconstruction error after the training-time inference from the
// initial activities, averaged over the dataset.
ModuleMse reconstruction(std::span<const pcnet::SensoryInput> data, const pcnet::WeightSet& w,
                         const pcnet::NetworkConfig& c) {
  ModuleMse m;
  for (const auto& s : data) {
    const auto r = pcnet::infer(s, w, c, pcnet::InferMode::train);
    m.visual += r.trace.visual_mse.back();
    m.tactile += r.trace.tactile_mse.back();
  }
  const double n = static_cast<double>(data.size());
  m.visual /= n;
  m.tactile /= n;
  const double v = c.visual_input_dim, t = c.tactile_input_dim;
  m.pooled = (m.visual * v + m.tactile * t) / (v + t);
  return m;
}

// 2. Training on the E1 exploration run lowers the input reconstruction
// error, pooled over all sensory values, below half its starting value.
Outcome learning_descent() {
  const auto start = std::chrono::steady_clock::now();
  cli::RunConfig config;
  config.network.train_iterations = kDescentIterations;
  const auto data = pipeline::make_training_dataset(config);
  const auto inputs = pipeline::sensory_inputs(data);
  const pcnet::NetworkConfig net = pipeline::network_for(config, data);
  const ModuleMse before = reconstruction(inputs, pcnet::initial_weights(net), net);
  const pcnet::TrainResult trained = pcnet::train(inputs, net);
  const ModuleMse after = reconstruction(inputs, trained.weights, net);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double ratio = after.pooled / before.pooled;
  const bool ok = data.size() == kDescentSamples && ratio < kDescentRatio && secs < kDescentBudgetSeconds;
  return {ok, std::to_string(data.size()) + " samples, " + std::to_string(kDescentIterations) +
                  " iterations, pooled MSE " + fmt("%.4g", before.pooled) + " -> " + fmt("%.4g", after.pooled) +
                  " (ratio " + fmt("%.3f", ratio) + " < " + fmt("%g", kDescentRatio) + "); visual " +
                  fmt("%.4g", before.visual) + " -> " + fmt("%.4g", after.visual) + ", tactile " +
                  fmt("%.4g", before.tactile) + " -> " + fmt("%.4g", after.tactile) + ", " +
                  fmt("%.1f", secs) + " s"};
}

eval::TemplateSet pose_features(const std::vector<world::Pose>& poses, const std::string& tag) {
  eval::TemplateSet s;
  s.trajectory_tag = tag;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    VectorXd f(2);
    f << poses[i].x, poses[i].y;
    s.entries.push_back({i, poses[i], f});
  }
  return s;
}

// 3. Ground-truth positions as features on two noise-free traversals
// sampled at different spacings.
Outcome pose_oracle() {
  cli::RunConfig config;
  config.noise = {0.0, 0.0};
  config.thresholds.tau = kTau;
  const auto a = pipeline::make_trajectory(config, pipeline::Run::a);
  config.step_length = 0.05;
  const auto b = pipeline::make_trajectory(config, pipeline::Run::b);
  const pipeline::Evaluation e =
      pipeline::evaluate_pair(pose_features(a, "a"), pose_features(b, "b"), 0.0);
  const eval::SweepResult sw = pipeline::sweep(e, config);
  const eval::Scores& s = sw.rows[sw.best].scores;
  return {s.precision == 1.0 && s.recall == 1.0 && s.f1 == 1.0,
          std::to_string(a.size()) + "x" + std::to_string(b.size()) + " templates, P " + fmt("%.17g", s.precision) +
              " R " + fmt("%.17g", s.recall) + " F1 " + fmt("%.17g", s.f1)};
}

// 4. Independent re-implementation: distances from the raw features and
// poses, rows enumerated one by one.
Outcome classification_oracle() {
  Rng rng(4004);
  int mismatches = 0;
  for (int trial = 0; trial < kOracleInstances; ++trial) {
    const int n = testsupport::draw_size(rng, 1, kOracleMaxSize);
    const int m = testsupport::draw_size(rng, 1, kOracleMaxSize);
    const int k = testsupport::draw_size(rng, 1, 6);
    std::vector<std::vector<double>> fa(n), fb(m);
    std::vector<world::Pose> pa(n), pb(m);
    eval::TemplateSet a, b;
    for (int i = 0; i < n; ++i) {
      for (int d = 0; d < k; ++d) fa[i].push_back(rng.uniform(-1, 1));
      pa[i] = {rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(-3, 3)};
      a.entries.push_back({static_cast<std::size_t>(i), pa[i], Eigen::Map<VectorXd>(fa[i].data(), k)});
    }
    for (int j = 0; j < m; ++j) {
      for (int d = 0; d < k; ++d) fb[j].push_back(rng.uniform(-1, 1));
      pb[j] = {rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(-3, 3)};
      b.entries.push_back({static_cast<std::size_t>(j), pb[j], Eigen::Map<VectorXd>(fb[j].data(), k)});
    }
    const double tau = rng.uniform(0.1, 1.0);
    const double theta = rng.uniform(0.2, 2.0);

    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_err = std::numeric_limits<double>::infinity();
      bool near = false;
      for (int j = 0; j < m; ++j) {
        double sq = 0.0;
        for (int d = 0; d < k; ++d) sq += (fa[i][d] - fb[j][d]) * (fa[i][d] - fb[j][d]);
        const double err = std::sqrt(sq);
        if (err < best_err) {
          best_err = err;
          best = j;
        }
        near = near || std::hypot(pa[i].x - pb[j].x, pa[i].y - pb[j].y) <= tau;
      }
      if (best_err <= theta)
        (std::hypot(pa[i].x - pb[best].x, pa[i].y - pb[best].y) <= tau ? tp : fp)++;
      else
        (near ? fn : tn)++;
    }
    const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    const double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;

    const eval::Scores s = eval::precision_recall(
        eval::classify_matches(eval::compute_tme(a, b), eval::compute_gtm(a, b), {tau, theta}));
    const bool same = s.tp == tp && s.fp == fp && s.fn == fn && s.tn == tn && s.precision == p &&
                      s.recall == r && s.f1 == f && eval::f1(p, r) == f;
    if (!same) ++mismatches;
  }
  return {mismatches == 0, std::to_string(kOracleInstances) + " instances up to " + std::to_string(kOracleMaxSize) +
                               "x" + std::to_string(kOracleMaxSize) + ", " + std::to_string(mismatches) +
                               " mismatches"};
}

// 5. Desk protocol: train on E1, fix theta from the E1 sweep, score E3.
Outcome directional_comparison() {
  const auto start = std::chrono::steady_clock::now();
  double gap_sum = 0.0;
  std::string per_seed;
  const std::vector<world::Environment> envs{world::Environment::E1, world::Environment::E3};
  for (int seed = 1; seed <= kComparisonSeeds; ++seed) {
    cli::RunConfig config;
    config.data_seed = static_cast<std::uint64_t>(seed);
    config.network.rng_seed = static_cast<std::uint64_t>(seed);
    const auto training = pipeline::make_training_dataset(config);
    config.network = pipeline::network_for(config, training);
    const auto trained = pipeline::train_network(config, training);
    const auto report = pipeline::run_comparison(config, envs, trained.weights, config.network, training);
    const double learned = report.at(world::Environment::E3, eval::Method::learned).scores.f1;
    const double hand = report.at(world::Environment::E3, eval::Method::handcrafted).scores.f1;
    gap_sum += learned - hand;
    per_seed += (seed > 1 ? "; " : "") + std::string("seed ") + std::to_string(seed) + " " +
                fmt("%.2f", 100 * learned) + " vs " + fmt("%.2f", 100 * hand);
  }
  const double gap = gap_sum / kComparisonSeeds;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {gap >= kMinimumGap && secs < kComparisonBudgetSeconds,
          "E3 F1 learned vs handcrafted (%): " + per_seed + "; mean gap " + fmt("%+.2f", 100 * gap) +
              " points (reference +10.6), " + fmt("%.0f", secs) + " s"};
}

// 6. Metric and histogram properties on random cases.
Outcome invariants() {
  Rng rng(6006);
  int failures = 0;
  for (int t = 0; t < kPropertyCases; ++t) {
    const int n = testsupport::draw_size(rng, 1, 30);
    const VectorXd x = testsupport::random_vector(rng, n, -5, 5);
    const VectorXd y = testsupport::random_vector(rng, n, -5, 5);
    const VectorXd z = testsupport::random_vector(rng, n, -5, 5);
    const double xy = pcnet::feature_distance(x, y), yz = pcnet::feature_distance(y, z),
                 xz = pcnet::feature_distance(x, z);
    if (!(xz <= xy + yz + kTriangleSlack) || xy < 0 || pcnet::feature_distance(x, x) != 0 ||
        xy != pcnet::feature_distance(y, x))
      ++failures;
  }
  const baseline::BaselineParams params;
  auto random_template = [&] {
    const VectorXd visual = testsupport::random_vector(rng, 60, 0, 1);
    VectorXd defl = testsupport::random_vector(rng, 24, 0, 1);
    std::vector<Eigen::Vector2d> contacts;
    for (Eigen::Index i = 0; i < defl.size(); ++i) {
      if (rng.uniform() < 0.7)
        defl[i] = 0.0;
      else
        contacts.emplace_back(rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25));
    }
    return baseline::make_template(visual, defl, contacts, params);
  };
  for (int t = 0; t < kPropertyCases; ++t) {
    const baseline::ScalingFactors s{rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(0, 3)};
    const auto a = random_template(), b = random_template(), c = random_template();
    const double ab = baseline::handcrafted_distance(a, b, s), bc = baseline::handcrafted_distance(b, c, s),
                 ac = baseline::handcrafted_distance(a, c, s);
    if (!(ac <= ab + bc + kTriangleSlack) || ab < 0 || baseline::handcrafted_distance(a, a, s) != 0 ||
        ab != baseline::handcrafted_distance(b, a, s))
      ++failures;
  }
  for (int t = 0; t < kPropertyCases; ++t) {
    std::vector<Eigen::Vector2d> pts;
    const int n = static_cast<int>(rng.below(12));
    for (int i = 0; i < n; ++i) pts.emplace_back(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
    VectorXd defl = testsupport::random_vector(rng, 24, 0, 1);
    for (Eigen::Index i = 0; i < defl.size(); ++i)
      if (rng.uniform() < 0.8) defl[i] = 0.0;
    const VectorXd pfh = baseline::compute_pfh(pts, params.max_whisker_reach, params.pfh_bins);
    const VectorXd sda = baseline::compute_sda(defl, params.sda_bins);
    const double pfh_expect = n >= 2 ? 1.0 : 0.0;
    const double sda_expect = (defl.array() > 0).any() ? 1.0 : 0.0;
    if (std::abs(pfh.sum() - pfh_expect) > kHistogramSumTolerance || pfh.minCoeff() < 0 ||
        std::abs(sda.sum() - sda_expect) > kHistogramSumTolerance || sda.minCoeff() < 0)
      ++failures;
  }
  return {failures == 0, std::to_string(kPropertyCases) +
                             " cases each for feature_distance, handcrafted_distance and the histograms, " +
                             std::to_string(failures) + " failures"};
}

int invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

// 7. Two identical command sequences give identical files; random models
// and datasets survive a file round trip.
Outcome determinism() {
  std::vector<std::string> differing;
  int run_failures = 0;
  std::vector<fs::path> dirs;
  for (int r = 0; r < 2; ++r) {
    const fs::path dir = testsupport::scratch_dir("acceptance_det" + std::to_string(r));
    dirs.push_back(dir);
    const std::string d = dir.string();
    const std::vector<std::string> fast{"--set", "net.train_iterations=20", "--set", "net.test_max_iterations=300"};
    auto with = [&](std::vector<std::string> a) {
      a.insert(a.end(), fast.begin(), fast.end());
      return a;
    };
    run_failures += invoke({"gen-data", "--env", "E3", "--out", d, "--training"}) != 0;
    run_failures += invoke({"gen-data", "--env", "E1", "--out", d, "--training"}) != 0;
    run_failures += invoke(with({"train", "--data", d + "/E1_train.csv", "--model", d + "/m.mspc"})) != 0;
    for (const char* run : {"E3_a", "E3_b"})
      run_failures += invoke(with({"extract", "--data", d + "/" + run + ".csv", "--model", d + "/m.mspc", "--out",
                                   d + "/" + run + ".tpl"})) != 0;
    run_failures += invoke({"eval", "--a", d + "/E3_a.tpl", "--b", d + "/E3_b.tpl", "--out", d + "/eval",
                            "--sweep"}) != 0;
  }
  for (const char* f : {"E3_a.csv", "E3_b.csv", "E1_train.csv", "m.mspc", "E3_a.tpl", "eval/scores.txt",
                        "eval/tme.csv", "eval/sweep.csv"}) {
    bool same = false;
    try {
      same = persist::read_file(dirs[0] / f) == persist::read_file(dirs[1] / f);
    } catch (const Error&) {
    }
    if (!same) differing.push_back(f);
  }

  Rng rng(7007);
  int round_trip_failures = 0;
  for (int t = 0; t < kRoundTrips; ++t) {
    pcnet::NetworkConfig c = testsupport::random_config(rng, 8);
    c.rng_seed = rng.next_u64();
    const pcnet::WeightSet w = pcnet::WeightSet::uniform(c, rng, rng.uniform(0.01, 10));
    const fs::path path = dirs[0] / "rt.mspc";
    persist::save_model(w, c, path);
    const persist::LoadedModel m = persist::load_model(path);
    if (!(m.config == c) || !(m.weights == w) || persist::encode_model(m.weights, m.config) != persist::encode_model(w, c))
      ++round_trip_failures;

    std::vector<world::Observation> data;
    const int rows = testsupport::draw_size(rng, 0, 10);
    const int rays = testsupport::draw_size(rng, 1, 8), whiskers = testsupport::draw_size(rng, 1, 6);
    for (int i = 0; i < rows; ++i) {
      world::Observation o;
      o.tag = "rt";
      o.pose = {rng.uniform(0, 4), rng.uniform(0, 4), rng.uniform(-3, 3)};
      o.visual = testsupport::random_vector(rng, rays, 0, 1);
      o.tactile = testsupport::random_vector(rng, whiskers, 0, 1);
      const auto contacts = rng.below(static_cast<std::uint64_t>(whiskers) + 1);
      for (std::uint64_t k = 0; k < contacts; ++k) o.contacts.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1));
      data.push_back(std::move(o));
    }
    persist::save_dataset(data, dirs[0] / "rt.csv");
    if (!(persist::load_dataset(dirs[0] / "rt.csv") == data)) ++round_trip_failures;
  }

  std::string detail = "command runs failed: " + std::to_string(run_failures) + ", differing files: ";
  detail += differing.empty() ? "none" : "";
  for (const auto& f : differing) detail += f + " ";
  detail += "; " + std::to_string(kRoundTrips) + " model and dataset round trips, " +
            std::to_string(round_trip_failures) + " failures";
  return {run_failures == 0 && differing.empty() && round_trip_failures == 0, detail};
}

// 8. The quarter-turn pose pair of the preset arenas.
Outcome aliasing() {
  world::SensorRig rig;
  rig.visual_noise_sigma = 0.0;
  rig.whisker_noise_sigma = 0.0;
  const world::Pose p1{2.0, 0.5, -std::numbers::pi / 2}, p2{3.5, 2.0, 0.0};
  const double pose_gap = std::hypot(p1.x - p2.x, p1.y - p2.y);
  Rng rng(1);
  bool ok = pose_gap > kTau;
  std::string detail = "pose gap " + fmt("%.3f", pose_gap) + " m";
  for (world::Environment env : {world::Environment::E1, world::Environment::E2, world::Environment::E3}) {
    const world::Arena arena = world::preset_environment(env);
    const double vgap = (world::render_visual(arena, p1, rig, rng) - world::render_visual(arena, p2, rig, rng)).norm();
    const double tgap = (world::sense_whiskers(arena, p1, rig, rng).deflections -
                         world::sense_whiskers(arena, p2, rig, rng).deflections)
                            .lpNorm<1>();
    ok = ok && vgap < kAliasVisualGap;
    if (env != world::Environment::E1) ok = ok && tgap > kAliasTactileGap;
    detail += "; " + world::to_string(env) + " visual L2 " + fmt("%.2g", vgap) + " tactile L1 " + fmt("%.3f", tgap);
  }
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient fidelity", gradient_fidelity},
      {"learning descent", learning_descent},
      {"pipeline sanity oracle", pose_oracle},
      {"classification oracle equivalence", classification_oracle},
      {"directional reproduction (E3 learned >= handcrafted)", directional_comparison},
      {"metric and histogram invariants", invariants},
      {"determinism and round trips", determinism},
      {"aliasing fixtures", aliasing},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu %s: %s [%s] (%.1f s)\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
