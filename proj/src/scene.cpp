#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

#include "mspc/errors.hpp"
#include "mspc/synthworld.hpp"

namespace mspc::world {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T read(std::istringstream& in, int line_no) {
  T v;
  if (!(in >> v))
    throw InvalidArgument("scene line " + std::to_string(line_no) + ": missing or bad value");
  return v;
}

bool read_flag(std::istringstream& in, int line_no) {
  const int v = read<int>(in, line_no);
  if (v != 0 && v != 1)
    throw InvalidArgument("scene line " + std::to_string(line_no) + ": tactile_only must be 0 or 1");
  return v == 1;
}

}  // namespace

std::string to_scene_text(const Arena& arena) {
  std::ostringstream out;
  const Bounds& b = arena.bounds;
  out << "bounds " << num(b.xmin) << ' ' << num(b.ymin) << ' ' << num(b.xmax) << ' '
      << num(b.ymax) << '\n';
  for (const auto& [id, p] : arena.patterns)
    out << "pattern " << id << ' ' << num(p.base) << ' ' << num(p.amplitude) << ' '
        << num(p.period) << ' ' << num(p.phase) << '\n';
  for (const Wall& w : arena.walls)
    out << "wall " << num(w.a.x()) << ' ' << num(w.a.y()) << ' ' << num(w.b.x()) << ' '
        << num(w.b.y()) << ' ' << w.pattern_id << '\n';
  for (const Circle& c : arena.circles)
    out << "circle " << num(c.center.x()) << ' ' << num(c.center.y()) << ' ' << num(c.radius)
        << ' ' << (c.tactile_only ? 1 : 0) << '\n';
  for (const Polygon& p : arena.polygons) {
    out << "poly " << p.vertices.size();
    for (const Vector2d& v : p.vertices) out << ' ' << num(v.x()) << ' ' << num(v.y());
    out << ' ' << (p.tactile_only ? 1 : 0) << '\n';
  }
  return out.str();
}

Arena parse_scene_text(const std::string& text) {
  Arena arena;
  bool have_bounds = false;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream in(line);
    std::string kind;
    if (!(in >> kind) || kind[0] == '#') continue;
    if (kind == "bounds") {
      arena.bounds.xmin = read<double>(in, line_no);
      arena.bounds.ymin = read<double>(in, line_no);
      arena.bounds.xmax = read<double>(in, line_no);
      arena.bounds.ymax = read<double>(in, line_no);
      have_bounds = true;
    } else if (kind == "pattern") {
      const int id = read<int>(in, line_no);
      Pattern p;
      p.base = read<double>(in, line_no);
      p.amplitude = read<double>(in, line_no);
      p.period = read<double>(in, line_no);
      p.phase = read<double>(in, line_no);
      arena.patterns[id] = p;
    } else if (kind == "wall") {
      Wall w;
      w.a.x() = read<double>(in, line_no);
      w.a.y() = read<double>(in, line_no);
      w.b.x() = read<double>(in, line_no);
      w.b.y() = read<double>(in, line_no);
      w.pattern_id = read<int>(in, line_no);
      arena.walls.push_back(w);
    } else if (kind == "circle") {
      Circle c;
      c.center.x() = read<double>(in, line_no);
      c.center.y() = read<double>(in, line_no);
      c.radius = read<double>(in, line_no);
      c.tactile_only = read_flag(in, line_no);
      arena.circles.push_back(c);
    } else if (kind == "poly") {
      const int n = read<int>(in, line_no);
      if (n < 3) throw InvalidArgument("scene line " + std::to_string(line_no) + ": poly needs n >= 3");
      Polygon p;
      for (int i = 0; i < n; ++i) {
        const double x = read<double>(in, line_no);
        const double y = read<double>(in, line_no);
        p.vertices.emplace_back(x, y);
      }
      p.tactile_only = read_flag(in, line_no);
      arena.polygons.push_back(std::move(p));
    } else {
      throw InvalidArgument("scene line " + std::to_string(line_no) + ": unknown primitive '" +
                            kind + "'");
    }
    std::string extra;
    if (in >> extra)
      throw InvalidArgument("scene line " + std::to_string(line_no) + ": trailing tokens");
  }
  if (!have_bounds) {
    if (arena.walls.empty()) throw InvalidArgument("scene has neither bounds nor walls");
    const double inf = std::numeric_limits<double>::infinity();
    Bounds b{inf, inf, -inf, -inf};
    for (const Wall& w : arena.walls) {
      for (const Vector2d& p : {w.a, w.b}) {
        b.xmin = std::min(b.xmin, p.x());
        b.ymin = std::min(b.ymin, p.y());
        b.xmax = std::max(b.xmax, p.x());
        b.ymax = std::max(b.ymax, p.y());
      }
    }
    arena.bounds = b;
  }
  arena.validate();
  return arena;
}

}  // namespace mspc::world
