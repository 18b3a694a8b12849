#include "mspc/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "mspc/errors.hpp"

namespace mspc::baseline {

namespace {

double l1(const VectorXd& a, const VectorXd& b, const char* channel) {
  if (a.size() != b.size())
    throw ShapeError(std::string(channel) + " lengths differ: " + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()));
  return (a - b).cwiseAbs().sum();
}

void normalize(VectorXd& hist) {
  const double total = hist.sum();
  if (total > 0.0) hist /= total;
}

double population_stddev(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(values.size()));
}

bool lexicographic_less(const HandcraftedTemplate& a, const HandcraftedTemplate& b) {
  auto cmp = [](const VectorXd& x, const VectorXd& y) {
    return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(),
                                        y.data() + y.size());
  };
  if (a.intensity != b.intensity) return cmp(a.intensity, b.intensity);
  if (a.pfh != b.pfh) return cmp(a.pfh, b.pfh);
  return cmp(a.sda, b.sda);
}

}  // namespace

VectorXd intensity_profile(const VectorXd& visual, int factor) {
  if (visual.size() == 0) throw InvalidArgument("intensity profile of an empty visual vector");
  if (factor < 1) throw InvalidArgument("downsample factor must be >= 1");
  if (factor == 1) return visual;
  const Eigen::Index n = visual.size();
  const Eigen::Index blocks = (n + factor - 1) / factor;
  VectorXd out(blocks);
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * factor;
    const Eigen::Index len = std::min<Eigen::Index>(factor, n - begin);
    out[b] = visual.segment(begin, len).mean();
  }
  return out;
}

VectorXd compute_pfh(std::span<const Vector2d> contacts, double max_reach, int bins) {
  if (bins < 1) throw InvalidArgument("pfh bin count must be >= 1");
  if (!(max_reach > 0.0)) throw InvalidArgument("max whisker reach must be > 0");
  VectorXd hist = VectorXd::Zero(bins);
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    for (std::size_t j = i + 1; j < contacts.size(); ++j) {
      const double r = std::clamp((contacts[i] - contacts[j]).norm() / max_reach, 0.0, 1.0);
      const int b = std::min(static_cast<int>(r * bins), bins - 1);
      hist[b] += 1.0;
    }
  }
  normalize(hist);
  return hist;
}

VectorXd compute_sda(const VectorXd& deflections, int bins) {
  if (bins < 1) throw InvalidArgument("sda bin count must be >= 1");
  VectorXd hist = VectorXd::Zero(bins);
  for (Eigen::Index i = 0; i < deflections.size(); ++i) {
    const double v = deflections[i];
    if (!(v >= 0.0 && v <= 1.0))
      throw InvalidArgument("deflection " + std::to_string(i) + " outside [0, 1]");
    if (v == 0.0) continue;
    const int b = std::clamp(static_cast<int>(std::ceil(v * bins)) - 1, 0, bins - 1);
    hist[b] += 1.0;
  }
  normalize(hist);
  return hist;
}

HandcraftedTemplate make_template(const VectorXd& visual, const VectorXd& deflections,
                                  std::span<const Vector2d> contacts,
                                  const BaselineParams& params) {
  return {intensity_profile(visual, params.downsample),
          compute_pfh(contacts, params.max_whisker_reach, params.pfh_bins),
          compute_sda(deflections, params.sda_bins)};
}

ScalingFit fit_scaling(std::span<const HandcraftedTemplate> templates) {
  if (templates.size() < 2) throw InvalidArgument("fit_scaling needs at least 2 templates");

  std::vector<HandcraftedTemplate> unique(templates.begin(), templates.end());
  std::sort(unique.begin(), unique.end(), lexicographic_less);
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

  std::array<std::vector<double>, 3> distances;
  for (std::size_t i = 0; i < unique.size(); ++i) {
    for (std::size_t j = i + 1; j < unique.size(); ++j) {
      distances[0].push_back(l1(unique[i].intensity, unique[j].intensity, "intensity"));
      distances[1].push_back(l1(unique[i].pfh, unique[j].pfh, "pfh"));
      distances[2].push_back(l1(unique[i].sda, unique[j].sda, "sda"));
    }
  }

  static constexpr const char* kNames[3] = {"intensity", "pfh", "sda"};
  ScalingFit fit;
  std::array<double, 3> factors{};
  for (int c = 0; c < 3; ++c) {
    fit.sigmas[c] = population_stddev(distances[c]);
    if (fit.sigmas[c] > 0.0) {
      factors[c] = 1.0 / fit.sigmas[c];
    } else {
      factors[c] = 0.0;
      fit.warnings.push_back(std::string(kNames[c]) +
                             " channel has zero spread; its factor is set to 0");
    }
  }
  fit.factors = {factors[0], factors[1], factors[2]};
  return fit;
}

double handcrafted_distance(const HandcraftedTemplate& a, const HandcraftedTemplate& b,
                            const ScalingFactors& s) {
  return s.alpha * l1(a.intensity, b.intensity, "intensity") + s.beta * l1(a.pfh, b.pfh, "pfh") +
         s.gamma * l1(a.sda, b.sda, "sda");
}

}  // namespace mspc::baseline
