#include "mspc/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mspc/errors.hpp"

namespace mspc::world {

namespace {

constexpr std::uint64_t kObservationStream = 0x10;
constexpr double kEps = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Hit {
  double distance = kInf;
  double arc_length = 0.0;
  int pattern_id = -1;
};

double cross(const Vector2d& a, const Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

// Distance along the ray and position along the segment, if they meet.
bool intersect_segment(const Vector2d& origin, const Vector2d& dir, const Vector2d& a,
                       const Vector2d& b, double& t, double& u) {
  const Vector2d edge = b - a;
  const double denom = cross(dir, edge);
  if (std::abs(denom) < kEps) return false;
  const Vector2d rel = a - origin;
  t = cross(rel, edge) / denom;
  u = cross(rel, dir) / denom;
  return t > kEps && u >= 0.0 && u <= 1.0;
}

bool intersect_circle(const Vector2d& origin, const Vector2d& dir, const Circle& c, double& t) {
  const Vector2d rel = origin - c.center;
  const double b = dir.dot(rel);
  const double disc = b * b - (rel.squaredNorm() - c.radius * c.radius);
  if (disc < 0.0) return false;
  const double root = std::sqrt(disc);
  const double near = -b - root;
  const double far = -b + root;
  if (near > kEps) {
    t = near;
  } else if (far > kEps) {
    t = far;
  } else {
    return false;
  }
  return true;
}

void consider(Hit& best, double t, double arc, int pattern) {
  if (t < best.distance) best = Hit{t, arc, pattern};
}

Hit cast_ray(const Arena& arena, const Vector2d& origin, const Vector2d& dir, bool include_tactile_only) {
  Hit best;
  double t = 0.0, u = 0.0;
  for (const Wall& w : arena.walls) {
    if (intersect_segment(origin, dir, w.a, w.b, t, u))
      consider(best, t, u * (w.b - w.a).norm(), w.pattern_id);
  }
  for (const Circle& c : arena.circles) {
    if (c.tactile_only && !include_tactile_only) continue;
    if (intersect_circle(origin, dir, c, t)) {
      const Vector2d p = origin + t * dir - c.center;
      double angle = std::atan2(p.y(), p.x());
      if (angle < 0.0) angle += 2.0 * std::numbers::pi;
      consider(best, t, c.radius * angle, kLandmarkPattern);
    }
  }
  for (const Polygon& poly : arena.polygons) {
    if (poly.tactile_only && !include_tactile_only) continue;
    double perimeter = 0.0;
    const std::size_t n = poly.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vector2d& a = poly.vertices[i];
      const Vector2d& b = poly.vertices[(i + 1) % n];
      const double len = (b - a).norm();
      if (intersect_segment(origin, dir, a, b, t, u))
        consider(best, t, perimeter + u * len, kLandmarkPattern);
      perimeter += len;
    }
  }
  return best;
}

void check_pose(const Arena& arena, const Pose& pose) {
  if (!std::isfinite(pose.x) || !std::isfinite(pose.y) || !std::isfinite(pose.theta) ||
      !arena.bounds.contains(pose.x, pose.y))
    throw InvalidArgument("pose (" + std::to_string(pose.x) + ", " + std::to_string(pose.y) +
                          ") is outside the arena bounds");
}

Vector2d heading(double angle) { return {std::cos(angle), std::sin(angle)}; }

}  // namespace

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

double Pattern::value(double arc_length) const {
  const double v =
      base + amplitude * std::sin(2.0 * std::numbers::pi * arc_length / period + phase);
  return std::clamp(v, 0.0, 1.0);
}

void Arena::validate() const {
  if (!(bounds.xmax > bounds.xmin) || !(bounds.ymax > bounds.ymin))
    throw InvalidArgument("arena bounds are empty");
  for (const auto& [id, p] : patterns)
    if (!(p.period > 0.0)) throw InvalidArgument("pattern " + std::to_string(id) + " has period <= 0");
  for (const Wall& w : walls) {
    if ((w.b - w.a).norm() <= kEps) throw InvalidArgument("degenerate wall segment");
    if (!patterns.contains(w.pattern_id))
      throw InvalidArgument("wall references unknown pattern " + std::to_string(w.pattern_id));
  }
  bool visible_landmark = false;
  for (const Circle& c : circles) {
    if (!(c.radius > 0.0)) throw InvalidArgument("circle radius must be > 0");
    visible_landmark |= !c.tactile_only;
  }
  for (const Polygon& p : polygons) {
    const std::size_t n = p.vertices.size();
    if (n < 3) throw InvalidArgument("polygon needs at least 3 vertices");
    double sign = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vector2d e1 = p.vertices[(i + 1) % n] - p.vertices[i];
      const Vector2d e2 = p.vertices[(i + 2) % n] - p.vertices[(i + 1) % n];
      if (e1.norm() <= kEps) throw InvalidArgument("polygon has a degenerate edge");
      const double c = cross(e1, e2);
      if (std::abs(c) <= kEps) continue;
      if (sign != 0.0 && (c > 0.0) != (sign > 0.0)) throw InvalidArgument("polygon is not convex");
      sign = c;
    }
    if (sign == 0.0) throw InvalidArgument("polygon is degenerate");
    visible_landmark |= !p.tactile_only;
  }
  if (visible_landmark && !patterns.contains(kLandmarkPattern))
    throw InvalidArgument("visible landmarks need pattern 0");
}

void SensorRig::validate() const {
  if (n_rays < 1 || n_whiskers < 1) throw InvalidArgument("n_rays and n_whiskers must be >= 1");
  if (!(field_of_view > 0.0) || !(max_view_range > 0.0) || !(whisker_length > 0.0))
    throw InvalidArgument("field of view and ranges must be > 0");
  if (!(visual_noise_sigma >= 0.0) || !(whisker_noise_sigma >= 0.0))
    throw InvalidArgument("noise sigmas must be >= 0");
  if (!(attenuation_rate >= 0.0)) throw InvalidArgument("attenuation_rate must be >= 0");
}

std::vector<double> SensorRig::ray_bearings() const {
  std::vector<double> out(n_rays);
  const double step = field_of_view / n_rays;
  for (int k = 0; k < n_rays; ++k) out[k] = -0.5 * field_of_view + (k + 0.5) * step;
  return out;
}

std::vector<double> SensorRig::whisker_bearings() const {
  std::vector<double> out(n_whiskers, 0.0);
  if (n_whiskers == 1) return out;
  for (int k = 0; k < n_whiskers; ++k)
    out[k] = -0.5 * std::numbers::pi + std::numbers::pi * k / (n_whiskers - 1);
  return out;
}

std::string to_string(Environment e) {
  switch (e) {
    case Environment::E1: return "E1";
    case Environment::E2: return "E2";
    case Environment::E3: return "E3";
  }
  return "E1";
}

Environment parse_environment(const std::string& s) {
  if (s == "E1") return Environment::E1;
  if (s == "E2") return Environment::E2;
  if (s == "E3") return Environment::E3;
  throw InvalidArgument("unknown environment '" + s + "' (expected E1, E2 or E3)");
}

VectorXd render_visual(const Arena& arena, const Pose& pose, const SensorRig& rig, Rng& rng) {
  check_pose(arena, pose);
  const Vector2d origin(pose.x, pose.y);
  const std::vector<double> bearings = rig.ray_bearings();
  VectorXd out(rig.n_rays);
  for (int k = 0; k < rig.n_rays; ++k) {
    const Hit hit = cast_ray(arena, origin, heading(pose.theta + bearings[k]), false);
    double v = 0.0;
    if (hit.distance <= rig.max_view_range) {
      v = arena.patterns.at(hit.pattern_id).value(hit.arc_length) /
          (1.0 + rig.attenuation_rate * hit.distance);
    }
    out[k] = std::clamp(v + rig.visual_noise_sigma * rng.normal(), 0.0, 1.0);
  }
  return out;
}

WhiskerReading sense_whiskers(const Arena& arena, const Pose& pose, const SensorRig& rig,
                              Rng& rng) {
  check_pose(arena, pose);
  const Vector2d origin(pose.x, pose.y);
  const std::vector<double> bearings = rig.whisker_bearings();
  WhiskerReading out{VectorXd::Zero(rig.n_whiskers), {}};
  for (int k = 0; k < rig.n_whiskers; ++k) {
    const Hit hit = cast_ray(arena, origin, heading(pose.theta + bearings[k]), true);
    double v = 0.0;
    if (hit.distance < rig.whisker_length) {
      v = (rig.whisker_length - hit.distance) / rig.whisker_length;
      // Robot frame: the whisker direction rotated by its bearing only.
      out.contacts.push_back(hit.distance * heading(bearings[k]));
    }
    out.deflections[k] = std::clamp(v + rig.whisker_noise_sigma * rng.normal(), 0.0, 1.0);
  }
  return out;
}

std::vector<Pose> generate_trajectory(std::span<const Pose> waypoints, double step_length,
                                      const TrajectoryNoise& noise, Rng& rng) {
  if (waypoints.size() < 2) throw InvalidArgument("a trajectory needs at least 2 waypoints");
  if (!(step_length > 0.0)) throw InvalidArgument("step_length must be > 0");

  struct Leg {
    Vector2d start, dir;
    double begin, length;
  };
  std::vector<Leg> legs;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const Vector2d a(waypoints[i].x, waypoints[i].y);
    const Vector2d b(waypoints[i + 1].x, waypoints[i + 1].y);
    const double len = (b - a).norm();
    if (len <= kEps) continue;
    legs.push_back({a, (b - a) / len, total, len});
    total += len;
  }
  if (legs.empty()) throw InvalidArgument("all trajectory waypoints coincide");

  const auto count = static_cast<std::size_t>(std::floor(total / step_length + 1e-9)) + 1;
  std::vector<Pose> out;
  out.reserve(count);
  std::size_t leg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = static_cast<double>(k) * step_length;
    while (leg + 1 < legs.size() && s >= legs[leg].begin + legs[leg].length) ++leg;
    const Leg& l = legs[leg];
    const double along = std::min(s - l.begin, l.length);
    const Vector2d p = l.start + along * l.dir;
    Pose pose{p.x(), p.y(), std::atan2(l.dir.y(), l.dir.x())};
    pose.x += noise.sigma_pos * rng.normal();
    pose.y += noise.sigma_pos * rng.normal();
    pose.theta = wrap_angle(pose.theta + noise.sigma_theta * rng.normal());
    out.push_back(pose);
  }
  return out;
}

std::vector<Observation> build_dataset(const Arena& arena, std::span<const Pose> trajectory,
                                       const SensorRig& rig, std::uint64_t seed,
                                       const std::string& tag) {
  arena.validate();
  rig.validate();
  std::vector<Observation> out;
  out.reserve(trajectory.size());
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    Rng rng = Rng::derive(seed, kObservationStream, i);
    Observation obs;
    obs.pose = trajectory[i];
    obs.visual = render_visual(arena, obs.pose, rig, rng);
    WhiskerReading w = sense_whiskers(arena, obs.pose, rig, rng);
    obs.tactile = std::move(w.deflections);
    obs.contacts = std::move(w.contacts);
    obs.tag = tag;
    out.push_back(std::move(obs));
  }
  return out;
}

std::vector<Pose> default_waypoints() {
  return {{0.7, 0.7, 0.0}, {3.3, 0.7, 0.0}, {3.3, 3.3, 0.0}, {0.7, 3.3, 0.0}, {0.7, 0.7, 0.0}};
}

Arena preset_environment(Environment kind) {
  Arena arena;
  arena.bounds = {0.0, 0.0, 4.0, 4.0};
  arena.patterns[kLandmarkPattern] = {0.9, 0.1, 0.3, 0.0};
  arena.patterns[1] = {0.5, 0.4, 0.8, 0.0};

  // Counter-clockwise walls with the pattern restarting at each corner, so
  // the arena looks the same after any quarter turn about its centre.
  const Vector2d corners[4] = {{0.0, 0.0}, {4.0, 0.0}, {4.0, 4.0}, {0.0, 4.0}};
  for (int i = 0; i < 4; ++i) arena.walls.push_back({corners[i], corners[(i + 1) % 4], 1});
  for (const Vector2d& c : {Vector2d(0.45, 0.45), Vector2d(3.55, 0.45), Vector2d(3.55, 3.55),
                           Vector2d(0.45, 3.55)})
    arena.circles.push_back({c, 0.2, false});
  if (kind == Environment::E1) return arena;

  for (const auto& [c, r] : std::initializer_list<std::pair<Vector2d, double>>{
           {{2.25, 0.45}, 0.08},
           {{1.2, 0.95}, 0.1},
           {{3.55, 1.4}, 0.1},
           {{3.05, 2.8}, 0.1},
           {{1.6, 3.55}, 0.12},
           {{0.45, 2.3}, 0.1}})
    arena.circles.push_back({c, r, true});
  // The rock.
  arena.polygons.push_back(
      {{{1.7, 1.75}, {2.35, 1.65}, {2.45, 2.1}, {2.1, 2.4}, {1.75, 2.2}}, false});
  if (kind == Environment::E2) return arena;

  constexpr int kRing = 18;
  constexpr double kRingRadius = 1.0;
  for (int i = 0; i < kRing; ++i) {
    const double a = 2.0 * std::numbers::pi * i / kRing;
    arena.circles.push_back(
        {Vector2d(2.0 + kRingRadius * std::cos(a), 2.0 + kRingRadius * std::sin(a)), 0.2, false});
  }
  return arena;
}

}  // namespace mspc::world
