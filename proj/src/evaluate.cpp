#include "mspc/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "mspc/errors.hpp"
#include "mspc/pcnet.hpp"

namespace mspc::eval {

std::string to_string(Method m) { return m == Method::handcrafted ? "handcrafted" : "learned"; }

Method parse_method(const std::string& s) {
  if (s == "learned") return Method::learned;
  if (s == "handcrafted") return Method::handcrafted;
  throw InvalidArgument("unknown method '" + s + "'");
}

std::string to_string(RecallMode m) {
  return m == RecallMode::paper_literal ? "paper_literal" : "standard";
}

RecallMode parse_recall_mode(const std::string& s) {
  if (s == "standard") return RecallMode::standard;
  if (s == "paper_literal") return RecallMode::paper_literal;
  throw InvalidArgument("unknown recall mode '" + s + "'");
}

void TemplateSet::validate() const {
  const bool learned = method == Method::learned;
  Eigen::Index len = -1;
  Eigen::Index lens[3] = {-1, -1, -1};
  for (const Template& t : entries) {
    if (learned) {
      const auto* v = std::get_if<VectorXd>(&t.descriptor);
      if (!v) throw InvalidArgument("learned template set holds a handcrafted descriptor");
      if (len >= 0 && v->size() != len) throw InvalidArgument("feature lengths differ within set");
      len = v->size();
    } else {
      const auto* h = std::get_if<baseline::HandcraftedTemplate>(&t.descriptor);
      if (!h) throw InvalidArgument("handcrafted template set holds a learned feature");
      const Eigen::Index cur[3] = {h->intensity.size(), h->pfh.size(), h->sda.size()};
      for (int c = 0; c < 3; ++c) {
        if (lens[c] >= 0 && cur[c] != lens[c])
          throw InvalidArgument("handcrafted channel lengths differ within set");
        lens[c] = cur[c];
      }
    }
  }
}

MatchErrorMatrix compute_tme(const TemplateSet& a, const TemplateSet& b,
                             const std::optional<baseline::ScalingFactors>& scaling) {
  if (a.method != b.method)
    throw IncompatibleError("template sets use different methods (" + to_string(a.method) + " vs " +
                          to_string(b.method) + ")");
  if (a.method == Method::handcrafted && !scaling)
    throw InvalidArgument("handcrafted template match errors need scaling factors");
  if (a.method == Method::learned && scaling)
    throw InvalidArgument("scaling factors apply to handcrafted templates only");
  a.validate();
  b.validate();

  const auto rows = static_cast<Eigen::Index>(a.entries.size());
  const auto cols = static_cast<Eigen::Index>(b.entries.size());
  MatchErrorMatrix tme(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto& da = a.entries[i].descriptor;
      const auto& db = b.entries[j].descriptor;
      tme(i, j) = a.method == Method::learned
                      ? pcnet::feature_distance(std::get<VectorXd>(da), std::get<VectorXd>(db))
                      : baseline::handcrafted_distance(
                            std::get<baseline::HandcraftedTemplate>(da),
                            std::get<baseline::HandcraftedTemplate>(db), *scaling);
    }
  }
  return tme;
}

GroundTruthMatrix compute_gtm(std::span<const world::Pose> a, std::span<const world::Pose> b,
                              double angle_weight) {
  GroundTruthMatrix gtm(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double dx = a[i].x - b[j].x;
      const double dy = a[i].y - b[j].y;
      double d = std::sqrt(dx * dx + dy * dy);
      if (angle_weight != 0.0)
        d += angle_weight * std::abs(world::wrap_angle(a[i].theta - b[j].theta));
      gtm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
    }
  }
  return gtm;
}

GroundTruthMatrix compute_gtm(const TemplateSet& a, const TemplateSet& b, double angle_weight) {
  std::vector<world::Pose> pa, pb;
  for (const auto& t : a.entries) pa.push_back(t.pose);
  for (const auto& t : b.entries) pb.push_back(t.pose);
  return compute_gtm(pa, pb, angle_weight);
}

Scores classify_matches(const MatchErrorMatrix& tme, const GroundTruthMatrix& gtm,
                        const MatchThresholds& thresholds) {
  if (tme.rows() != gtm.rows() || tme.cols() != gtm.cols())
    throw ShapeError("TME is " + std::to_string(tme.rows()) + "x" + std::to_string(tme.cols()) +
                     " but GTM is " + std::to_string(gtm.rows()) + "x" +
                     std::to_string(gtm.cols()));
  Scores s;
  for (Eigen::Index i = 0; i < tme.rows(); ++i) {
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < tme.cols(); ++j)
      if (best < 0 || tme(i, j) < tme(i, best)) best = j;
    const bool declared = best >= 0 && tme(i, best) <= thresholds.theta_match;
    if (declared) {
      if (gtm(i, best) <= thresholds.tau)
        ++s.tp;
      else
        ++s.fp;
    } else {
      const bool neighbour = tme.cols() > 0 && (gtm.row(i).array() <= thresholds.tau).any();
      if (neighbour)
        ++s.fn;
      else
        ++s.tn;
    }
  }
  return s;
}

Scores precision_recall(Scores s, RecallMode mode) {
  const auto ratio = [](std::int64_t num, std::int64_t den, bool& undefined) {
    undefined = den == 0;
    return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  s.precision = ratio(s.tp, s.tp + s.fp, s.precision_undefined);
  if (mode == RecallMode::standard) {
    s.recall = ratio(s.tp, s.tp + s.fn, s.recall_undefined);
    s.recall_literal = false;
  } else {
    s.recall = ratio(s.tp, s.fp + s.fn, s.recall_undefined);
    s.recall_literal = true;
  }
  s.f1 = f1(s.precision, s.recall);
  return s;
}

double f1(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

SweepResult sweep_thresholds(const MatchErrorMatrix& tme, const GroundTruthMatrix& gtm, double tau,
                             std::span<const double> theta_grid, RecallMode mode) {
  if (theta_grid.empty()) throw InvalidArgument("threshold grid is empty");
  SweepResult result;
  for (double theta : theta_grid) {
    result.rows.push_back({theta, precision_recall(classify_matches(tme, gtm, {tau, theta}), mode)});
    if (result.rows.back().scores.f1 > result.rows[result.best].scores.f1)
      result.best = result.rows.size() - 1;
  }
  return result;
}

std::vector<double> candidate_thresholds(const MatchErrorMatrix& tme) {
  std::vector<double> out;
  if (tme.cols() == 0) return out;
  for (Eigen::Index i = 0; i < tme.rows(); ++i) out.push_back(tme.row(i).minCoeff());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace mspc::eval
