#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mspc/rng.hpp"

// Deterministic 2-D arenas and a simplified visuo-tactile sensor head.
//
// Vision is a fan of rays returning the brightness of the first visible
// surface; touch is a planar fan of fixed-length whiskers whose deflection is
// the normalized penetration depth of the first obstacle. Tactile-only
// landmarks are invisible to the camera but felt by the whiskers.
namespace mspc::world {

using Eigen::Vector2d;
using Eigen::VectorXd;

// Angle wrapped to (-pi, pi].
double wrap_angle(double a);

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // radians, (-pi, pi]

  bool operator==(const Pose&) const = default;
};

struct Bounds {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

  bool contains(double x, double y) const {
    return x >= xmin && x <= xmax && y >= ymin && y <= ymax;
  }
  bool operator==(const Bounds&) const = default;
};

// Periodic brightness along a surface: base + amplitude * sin(2 pi s / period + phase),
// clamped to [0, 1].
struct Pattern {
  double base = 0.5;
  double amplitude = 0.0;
  double period = 1.0;
  double phase = 0.0;

  double value(double arc_length) const;
  bool operator==(const Pattern&) const = default;
};

// Visible landmarks are shaded with this pattern id.
inline constexpr int kLandmarkPattern = 0;

struct Wall {
  Vector2d a, b;
  int pattern_id = 1;
  bool operator==(const Wall&) const = default;
};

struct Circle {
  Vector2d center;
  double radius = 0.1;
  bool tactile_only = false;
  bool operator==(const Circle&) const = default;
};

// Convex, vertices in order.
struct Polygon {
  std::vector<Vector2d> vertices;
  bool tactile_only = false;
  bool operator==(const Polygon&) const = default;
};

struct Arena {
  Bounds bounds;
  std::vector<Wall> walls;
  std::vector<Circle> circles;
  std::vector<Polygon> polygons;
  std::map<int, Pattern> patterns;

  std::size_t landmark_count() const { return circles.size() + polygons.size(); }
  // Throws InvalidArgument on degenerate geometry or a missing pattern.
  void validate() const;

  bool operator==(const Arena&) const = default;
};

struct SensorRig {
  int n_rays = 60;
  double field_of_view = 2.0943951023931957;  // 2 pi / 3
  double max_view_range = 4.0;
  int n_whiskers = 24;
  double whisker_length = 0.25;
  double visual_noise_sigma = 0.01;
  double whisker_noise_sigma = 0.02;
  // Brightness is scaled by 1 / (1 + attenuation_rate * distance).
  double attenuation_rate = 1.0;

  void validate() const;
  // Ray bearings relative to the heading, right to left.
  std::vector<double> ray_bearings() const;
  // Whisker bearings relative to the heading, -pi/2 .. pi/2.
  std::vector<double> whisker_bearings() const;
};

struct WhiskerReading {
  VectorXd deflections;
  std::vector<Vector2d> contacts;  // robot frame, x forward
};

struct Observation {
  VectorXd visual;
  VectorXd tactile;
  std::vector<Vector2d> contacts;
  Pose pose;
  std::string tag;

  bool operator==(const Observation& o) const {
    return visual.size() == o.visual.size() && tactile.size() == o.tactile.size() &&
           visual == o.visual && tactile == o.tactile && contacts == o.contacts &&
           pose == o.pose && tag == o.tag;
  }
};

struct TrajectoryNoise {
  double sigma_pos = 0.05;
  double sigma_theta = 0.02;
};

enum class Environment { E1, E2, E3 };

std::string to_string(Environment e);
Environment parse_environment(const std::string& s);

VectorXd render_visual(const Arena& arena, const Pose& pose, const SensorRig& rig, Rng& rng);

WhiskerReading sense_whiskers(const Arena& arena, const Pose& pose, const SensorRig& rig,
                              Rng& rng);

// Samples the polyline every step_length metres from its start, heading
// along the current leg, then perturbs every pose independently.
std::vector<Pose> generate_trajectory(std::span<const Pose> waypoints, double step_length,
                                      const TrajectoryNoise& noise, Rng& rng);

// Observation i draws its sensor noise from Rng::derive(seed, ., i).
std::vector<Observation> build_dataset(const Arena& arena, std::span<const Pose> trajectory,
                                       const SensorRig& rig, std::uint64_t seed,
                                       const std::string& tag);

Arena preset_environment(Environment kind);

// Rectangular loop 0.7 m inside the walls of the preset arenas.
std::vector<Pose> default_waypoints();

// Plain-text scene format, one primitive per line:
//   bounds xmin ymin xmax ymax
//   pattern id base amp period phase
//   wall x1 y1 x2 y2 pattern_id
//   circle cx cy r tactile_only
//   poly n x1 y1 ... xn yn tactile_only
// Blank lines and lines starting with '#' are ignored. Without a bounds
// line the bounding box of the walls is used.
std::string to_scene_text(const Arena& arena);
Arena parse_scene_text(const std::string& text);

}  // namespace mspc::world
