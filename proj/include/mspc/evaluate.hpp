#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mspc/baseline.hpp"
#include "mspc/synthworld.hpp"

// Place-recognition scoring between two template sets recorded along two
// noisy traversals of the same route.
namespace mspc::eval {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Method { learned, handcrafted };

std::string to_string(Method m);
Method parse_method(const std::string& s);

struct Template {
  std::size_t index = 0;
  world::Pose pose;
  std::variant<VectorXd, baseline::HandcraftedTemplate> descriptor;
};

struct TemplateSet {
  Method method = Method::learned;
  std::string trajectory_tag;
  std::vector<Template> entries;
  // Present for handcrafted sets: the factors fitted on the calibration set.
  std::optional<baseline::ScalingFactors> scaling;

  // Throws InvalidArgument when descriptors are not of one kind and length.
  void validate() const;
};

// Rows index set A, columns set B.
using MatchErrorMatrix = MatrixXd;   // TME
using GroundTruthMatrix = MatrixXd;  // GTM

struct MatchThresholds {
  double tau = 0.3;          // metres
  double theta_match = 1.0;  // largest template error declared a match
};

enum class RecallMode { standard, paper_literal };

std::string to_string(RecallMode m);
RecallMode parse_recall_mode(const std::string& s);

struct Scores {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;  // TP + FP == 0
  bool recall_undefined = false;     // zero recall denominator
  // Set in paper_literal mode: recall uses TP / (FP + FN) and may exceed 1.
  bool recall_literal = false;

  bool operator==(const Scores&) const = default;
};

// Entry (i, j) is the feature distance (learned) or the scaled combined
// L1 distance (handcrafted). `scaling` is required for handcrafted sets and
// must be absent for learned ones.
MatchErrorMatrix compute_tme(const TemplateSet& a, const TemplateSet& b,
                             const std::optional<baseline::ScalingFactors>& scaling = std::nullopt);

// Entry (i, j) is the position distance plus angle_weight * |wrapped heading gap|.
GroundTruthMatrix compute_gtm(const TemplateSet& a, const TemplateSet& b, double angle_weight = 0.0);
GroundTruthMatrix compute_gtm(std::span<const world::Pose> a, std::span<const world::Pose> b,
                              double angle_weight = 0.0);

// Per row: best column by smallest error (lowest index on ties), declared a
// match when its error is <= theta_match. TP/FP split on the ground truth
// distance of the best column; an undeclared row is FN when any column lies
// within tau, TN otherwise.
Scores classify_matches(const MatchErrorMatrix& tme, const GroundTruthMatrix& gtm,
                        const MatchThresholds& thresholds);

Scores precision_recall(Scores scores, RecallMode mode = RecallMode::standard);

double f1(double precision, double recall);

struct SweepRow {
  double theta = 0.0;
  Scores scores;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t best = 0;  // highest F1, first on ties
};

SweepResult sweep_thresholds(const MatchErrorMatrix& tme, const GroundTruthMatrix& gtm, double tau,
                             std::span<const double> theta_grid,
                             RecallMode mode = RecallMode::standard);

// Sorted distinct per-row minima of the TME: every threshold at which the
// declared set changes.
std::vector<double> candidate_thresholds(const MatchErrorMatrix& tme);

}  // namespace mspc::eval
