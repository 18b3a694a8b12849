#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Hand-crafted visuo-tactile place descriptors and their combined distance
// (the ViTa-SLAM style front end the learned features are compared with).
//
// The two tactile descriptors are simplified, self-contained histograms:
//   pfh  pairwise distances between whisker contact points, normalized by
//        the maximum whisker reach;
//   sda  magnitudes of the nonzero per-whisker deflections.
namespace mspc::baseline {

using Eigen::Vector2d;
using Eigen::VectorXd;

struct HandcraftedTemplate {
  VectorXd intensity;
  VectorXd pfh;
  VectorXd sda;

  bool operator==(const HandcraftedTemplate& o) const {
    return intensity.size() == o.intensity.size() && pfh.size() == o.pfh.size() &&
           sda.size() == o.sda.size() && intensity == o.intensity && pfh == o.pfh &&
           sda == o.sda;
  }
};

// Channel weights of the combined distance.
struct ScalingFactors {
  double alpha = 1.0;  // intensity profile
  double beta = 1.0;   // pfh
  double gamma = 1.0;  // sda
};

struct ScalingFit {
  ScalingFactors factors;
  std::array<double, 3> sigmas{};  // intensity, pfh, sda
  // One entry per channel whose sigma was zero; that factor is set to 0.
  std::vector<std::string> warnings;
};

struct BaselineParams {
  int pfh_bins = 16;
  int sda_bins = 16;
  int downsample = 1;
  // Largest possible gap between two contacts, 2 x whisker length for a
  // fan spanning +-90 degrees.
  double max_whisker_reach = 0.5;
};

// Block means over `factor` consecutive samples; a shorter trailing block
// is averaged over its own length.
VectorXd intensity_profile(const VectorXd& visual, int factor = 1);

VectorXd compute_pfh(std::span<const Vector2d> contacts, double max_reach, int bins = 16);

// Entries must lie in [0, 1]. Bin b covers (b/B, (b+1)/B].
VectorXd compute_sda(const VectorXd& deflections, int bins = 16);

HandcraftedTemplate make_template(const VectorXd& visual, const VectorXd& deflections,
                                  std::span<const Vector2d> contacts,
                                  const BaselineParams& params);

// sigma per channel is the population standard deviation of the L1
// distances over all unordered pairs of distinct templates (exact duplicates
// collapse to one entry); each factor is 1/sigma.
ScalingFit fit_scaling(std::span<const HandcraftedTemplate> templates);

double handcrafted_distance(const HandcraftedTemplate& a, const HandcraftedTemplate& b,
                            const ScalingFactors& s);

}  // namespace mspc::baseline
