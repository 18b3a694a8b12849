#include "mspc/run_config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "mspc/errors.hpp"
#include "mspc/persist.hpp"

namespace mspc::cli {

namespace {

using persist::format_real;

double real(std::string_view v) {
  try {
    return persist::parse_real(v);
  } catch (const FormatError& e) {
    throw InvalidArgument(e.what());
  }
}

template <typename Int>
Int integer(std::string_view v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw InvalidArgument("expected an integer, got '" + std::string(v) + "'");
  return out;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define REAL_FIELD(name, member)                                             \
  Field {                                                                    \
    name, [](RunConfig& c, std::string_view v) { c.member = real(v); },      \
        [](const RunConfig& c) { return format_real(c.member); }             \
  }
#define INT_FIELD(name, member, type)                                              \
  Field {                                                                          \
    name, [](RunConfig& c, std::string_view v) { c.member = integer<type>(v); },   \
        [](const RunConfig& c) { return std::to_string(c.member); }                \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      REAL_FIELD("rig.field_of_view", rig.field_of_view),
      REAL_FIELD("rig.max_view_range", rig.max_view_range),
      INT_FIELD("rig.n_rays", rig.n_rays, int),
      INT_FIELD("rig.n_whiskers", rig.n_whiskers, int),
      REAL_FIELD("rig.whisker_length", rig.whisker_length),
      REAL_FIELD("rig.visual_noise_sigma", rig.visual_noise_sigma),
      REAL_FIELD("rig.whisker_noise_sigma", rig.whisker_noise_sigma),
      REAL_FIELD("rig.attenuation_rate", rig.attenuation_rate),
      REAL_FIELD("traj.step_length", step_length),
      REAL_FIELD("traj.train_step_length", train_step_length),
      REAL_FIELD("traj.sigma_pos", noise.sigma_pos),
      REAL_FIELD("traj.sigma_theta", noise.sigma_theta),
      Field{"traj.waypoints",
            [](RunConfig& c, std::string_view v) { c.waypoints = waypoints_from_text(v); },
            [](const RunConfig& c) { return waypoints_to_text(c.waypoints); }},
      INT_FIELD("data.seed", data_seed, std::uint64_t),
      INT_FIELD("baseline.pfh_bins", baseline.pfh_bins, int),
      INT_FIELD("baseline.sda_bins", baseline.sda_bins, int),
      INT_FIELD("baseline.downsample", baseline.downsample, int),
      REAL_FIELD("baseline.max_whisker_reach", baseline.max_whisker_reach),
      REAL_FIELD("eval.tau", thresholds.tau),
      REAL_FIELD("eval.theta_match", thresholds.theta_match),
      REAL_FIELD("eval.angle_weight", angle_weight),
      Field{"eval.recall_mode",
            [](RunConfig& c, std::string_view v) { c.recall_mode = eval::parse_recall_mode(std::string(v)); },
            [](const RunConfig& c) { return eval::to_string(c.recall_mode); }},
      Field{"io.out_dir", [](RunConfig& c, std::string_view v) { c.out_dir = std::string(v); },
            [](const RunConfig& c) { return c.out_dir; }},
  };
  return table;
}

#undef REAL_FIELD
#undef INT_FIELD

}  // namespace

std::string waypoints_to_text(const std::vector<world::Pose>& waypoints) {
  std::string out;
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    if (i) out += ';';
    out += format_real(waypoints[i].x) + ',' + format_real(waypoints[i].y);
  }
  return out;
}

std::vector<world::Pose> waypoints_from_text(std::string_view text) {
  std::vector<world::Pose> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(';', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view item = text.substr(start, end - start);
    const std::size_t comma = item.find(',');
    if (comma == std::string_view::npos)
      throw InvalidArgument("waypoint '" + std::string(item) + "' is not 'x,y'");
    out.push_back({real(item.substr(0, comma)), real(item.substr(comma + 1)), 0.0});
    start = end + 1;
  }
  if (out.size() < 2) throw InvalidArgument("traj.waypoints needs at least 2 points");
  return out;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  if (key.starts_with("net.")) {
    const std::string_view field = key.substr(4);
    bool known = false;
    try {
      known = persist::apply_config_field(network, field, value);
    } catch (const FormatError& e) {
      throw InvalidArgument(std::string(key) + ": " + e.what());
    }
    if (!known) throw InvalidArgument("unknown config key '" + std::string(key) + "'");
    return;
  }
  for (const Field& f : fields()) {
    if (key == f.key) {
      try {
        f.set(*this, value);
      } catch (const InvalidArgument& e) {
        throw InvalidArgument(std::string(key) + ": " + e.what());
      }
      return;
    }
  }
  throw InvalidArgument("unknown config key '" + std::string(key) + "'");
}

void RunConfig::apply_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config line " + std::to_string(line_no) + " lacks '='");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string RunConfig::to_text() const {
  std::string out;
  std::istringstream net(persist::config_to_text(network));
  std::string line;
  while (std::getline(net, line)) out += "net." + line + '\n';
  for (const Field& f : fields()) out += std::string(f.key) + '=' + f.get(*this) + '\n';
  return out;
}

std::vector<std::string> RunConfig::keys() const {
  std::vector<std::string> out;
  std::istringstream net(persist::config_to_text(network));
  std::string line;
  while (std::getline(net, line)) out.push_back("net." + line.substr(0, line.find('=')));
  for (const Field& f : fields()) out.emplace_back(f.key);
  return out;
}

void RunConfig::validate() const {
  network.validate();
  rig.validate();
  if (!(step_length > 0.0) || !(train_step_length > 0.0))
    throw InvalidArgument("trajectory step lengths must be > 0");
  if (!(noise.sigma_pos >= 0.0) || !(noise.sigma_theta >= 0.0))
    throw InvalidArgument("trajectory noise must be >= 0");
  if (waypoints.size() < 2) throw InvalidArgument("at least 2 waypoints are needed");
  if (baseline.pfh_bins < 1 || baseline.sda_bins < 1 || baseline.downsample < 1 ||
      !(baseline.max_whisker_reach > 0.0))
    throw InvalidArgument("baseline parameters out of range");
  if (!(thresholds.tau > 0.0) || !(thresholds.theta_match > 0.0))
    throw InvalidArgument("eval.tau and eval.theta_match must be > 0");
  if (!(angle_weight >= 0.0)) throw InvalidArgument("eval.angle_weight must be >= 0");
}

}  // namespace mspc::cli
