#include "mspc/persist.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "mspc/errors.hpp"

namespace mspc::persist {

namespace {

using pcnet::NetworkConfig;

[[noreturn]] void malformed(const std::string& what) {
  throw FormatError(FormatErrorKind::malformed, what);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// Lines without their terminators; a final empty line is dropped.
std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out = split(text, '\n');
  if (!out.empty() && out.back().empty()) out.pop_back();
  for (auto& l : out)
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  return out;
}

std::string finite_real(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidArgument(std::string("non-finite value in ") + what);
  return format_real(v);
}

template <typename Int>
Int parse_int(std::string_view s) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    malformed("expected an integer, got '" + std::string(s) + "'");
  return v;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int> parse_int_list(std::string_view s) {
  std::vector<int> out;
  for (std::string_view part : split(s, ',')) out.push_back(parse_int<int>(part));
  return out;
}

void check_tag(const std::string& tag) {
  if (tag.find_first_of(",\n\r") != std::string::npos)
    throw InvalidArgument("tag '" + tag + "' contains a comma or line break");
}

// Little-endian byte writer/reader for the model file.
struct Writer {
  std::vector<std::uint8_t> bytes;

  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(std::string_view s) { bytes.insert(bytes.end(), s.begin(), s.end()); }
};

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (bytes.size() - pos < n)
      throw FormatError(FormatErrorKind::truncated, "model file is truncated");
  }
  std::uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view text(std::size_t n) {
    need(n);
    std::string_view s(reinterpret_cast<const char*>(bytes.data() + pos), n);
    pos += n;
    return s;
  }
};

constexpr std::size_t kHeaderBytes = 4 + 1 + 4;

std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes_of(const NetworkConfig& c) {
  const pcnet::WeightSet zero = pcnet::WeightSet::zeros(c);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  for (const auto* m : zero.matrices()) out.emplace_back(m->rows(), m->cols());
  return out;
}

}  // namespace

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_real(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    malformed("expected a number, got '" + std::string(s) + "'");
  return v;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read from '" + path.string() + "' failed");
  return ss.str();
}

std::string config_to_text(const NetworkConfig& c) {
  std::ostringstream out;
  out << "visual_layer_sizes=" << join_ints(c.visual_layer_sizes) << '\n'
      << "tactile_layer_sizes=" << join_ints(c.tactile_layer_sizes) << '\n'
      << "multi_size=" << c.multi_size << '\n'
      << "activation=" << pcnet::to_string(c.activation) << '\n'
      << "eta_y=" << format_real(c.eta_y) << '\n'
      << "eta_w=" << format_real(c.eta_w) << '\n'
      << "activity_init=" << format_real(c.activity_init) << '\n'
      << "train_iterations=" << c.train_iterations << '\n'
      << "train_inner_iterations=" << c.train_inner_iterations << '\n'
      << "test_max_iterations=" << c.test_max_iterations << '\n'
      << "test_decode_threshold=" << format_real(c.test_decode_threshold) << '\n'
      << "batch_size=" << c.batch_size << '\n'
      << "second_term_sign=" << pcnet::to_string(c.second_term_sign) << '\n'
      << "rng_seed=" << c.rng_seed << '\n'
      << "visual_input_dim=" << c.visual_input_dim << '\n'
      << "tactile_input_dim=" << c.tactile_input_dim << '\n';
  return out.str();
}

bool apply_config_field(NetworkConfig& c, std::string_view key, std::string_view value) {
  if (key == "visual_layer_sizes") c.visual_layer_sizes = parse_int_list(value);
  else if (key == "tactile_layer_sizes") c.tactile_layer_sizes = parse_int_list(value);
  else if (key == "multi_size") c.multi_size = parse_int<int>(value);
  else if (key == "activation") c.activation = pcnet::parse_activation(std::string(value));
  else if (key == "eta_y") c.eta_y = parse_real(value);
  else if (key == "eta_w") c.eta_w = parse_real(value);
  else if (key == "activity_init") c.activity_init = parse_real(value);
  else if (key == "train_iterations") c.train_iterations = parse_int<int>(value);
  else if (key == "train_inner_iterations") c.train_inner_iterations = parse_int<int>(value);
  else if (key == "test_max_iterations") c.test_max_iterations = parse_int<int>(value);
  else if (key == "test_decode_threshold") c.test_decode_threshold = parse_real(value);
  else if (key == "batch_size") c.batch_size = parse_int<int>(value);
  else if (key == "second_term_sign")
    c.second_term_sign = pcnet::parse_second_term_sign(std::string(value));
  else if (key == "rng_seed") c.rng_seed = parse_int<std::uint64_t>(value);
  else if (key == "visual_input_dim") c.visual_input_dim = parse_int<int>(value);
  else if (key == "tactile_input_dim") c.tactile_input_dim = parse_int<int>(value);
  else return false;
  return true;
}

NetworkConfig config_from_text(std::string_view text) {
  NetworkConfig c;
  for (std::string_view line : lines_of(text)) {
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) malformed("config line without '=': " + std::string(line));
    try {
      if (!apply_config_field(c, line.substr(0, eq), line.substr(eq + 1)))
        malformed("unknown config key '" + std::string(line.substr(0, eq)) + "'");
    } catch (const InvalidArgument& e) {
      malformed(e.what());
    }
  }
  return c;
}

std::vector<std::uint8_t> encode_model(const pcnet::WeightSet& weights, const NetworkConfig& config) {
  config.validate();
  weights.check_shapes(config);
  if (!weights.all_finite()) throw InvalidArgument("weights contain non-finite values");
  Writer w;
  for (char ch : kModelMagic) w.u8(static_cast<std::uint8_t>(ch));
  w.u8(kModelVersion);
  const std::string text = config_to_text(config);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.raw(text);
  for (const auto* m : weights.matrices()) {
    w.u32(static_cast<std::uint32_t>(m->rows()));
    w.u32(static_cast<std::uint32_t>(m->cols()));
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c) w.f64((*m)(r, c));
  }
  w.u32(crc32(w.bytes));
  return std::move(w.bytes);
}

LoadedModel decode_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(kModelMagic, kModelMagic + 4, bytes.begin()))
    throw FormatError(FormatErrorKind::bad_magic, "not a model file (bad magic)");
  if (bytes.size() < 5)
    throw FormatError(FormatErrorKind::truncated, "model file is truncated");
  if (bytes[4] != kModelVersion)
    throw FormatError(FormatErrorKind::version_mismatch,
                      "model format version " + std::to_string(bytes[4]) + " is not supported");
  if (bytes.size() < kHeaderBytes + 4)
    throw FormatError(FormatErrorKind::truncated, "model file is truncated");

  const auto body = bytes.first(bytes.size() - 4);
  Reader tail{bytes, bytes.size() - 4};
  const bool checksum_ok = crc32(body) == tail.u32();

  Reader in{body, 5};
  std::uint32_t text_len = 0;
  NetworkConfig config;
  try {
    text_len = in.u32();
    config = config_from_text(in.text(text_len));
    config.validate();
  } catch (const FormatError& e) {
    if (e.kind() == FormatErrorKind::truncated) throw;
    if (!checksum_ok) throw FormatError(FormatErrorKind::checksum_mismatch, "model checksum mismatch");
    throw;
  } catch (const InvalidArgument& e) {
    if (!checksum_ok) throw FormatError(FormatErrorKind::checksum_mismatch, "model checksum mismatch");
    malformed(std::string("model config: ") + e.what());
  }

  const auto shapes = shapes_of(config);
  if (!checksum_ok) {
    std::size_t expected = kHeaderBytes + text_len + 4;
    for (const auto& [r, c] : shapes) expected += 8 + 8 * static_cast<std::size_t>(r * c);
    if (bytes.size() < expected)
      throw FormatError(FormatErrorKind::truncated, "model file is truncated");
    throw FormatError(FormatErrorKind::checksum_mismatch, "model checksum mismatch");
  }

  LoadedModel out{pcnet::WeightSet::zeros(config), config};
  auto matrices = out.weights.matrices();
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    if (rows != shapes[i].first || cols != shapes[i].second)
      throw FormatError(FormatErrorKind::shape_mismatch,
                        "weight matrix " + std::to_string(i) + " is " + std::to_string(rows) + "x" +
                            std::to_string(cols) + " but the config needs " +
                            std::to_string(shapes[i].first) + "x" + std::to_string(shapes[i].second));
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) (*matrices[i])(r, c) = in.f64();
  }
  if (in.pos != body.size())
    malformed("model file has " + std::to_string(body.size() - in.pos) + " unexpected bytes");
  return out;
}

void save_model(const pcnet::WeightSet& weights, const NetworkConfig& config, const fs::path& path) {
  const auto bytes = encode_model(weights, config);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

LoadedModel load_model(const fs::path& path) {
  const std::string data = read_file(path);
  return decode_model(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::string dataset_to_csv(std::span<const world::Observation> data) {
  const Eigen::Index rays = data.empty() ? 0 : data.front().visual.size();
  const Eigen::Index whiskers = data.empty() ? 0 : data.front().tactile.size();
  std::string out = "tag,pose_x,pose_y,pose_theta";
  for (Eigen::Index i = 0; i < rays; ++i) out += ",v_" + std::to_string(i);
  for (Eigen::Index i = 0; i < whiskers; ++i) out += ",t_" + std::to_string(i);
  out += ",n_contacts";
  for (Eigen::Index i = 0; i < whiskers; ++i)
    out += ",c_" + std::to_string(i) + "_x,c_" + std::to_string(i) + "_y";
  out += '\n';

  for (const auto& obs : data) {
    if (obs.visual.size() != rays || obs.tactile.size() != whiskers)
      throw ShapeError("observations in one dataset must share dimensions");
    if (static_cast<Eigen::Index>(obs.contacts.size()) > whiskers)
      throw InvalidArgument("more contacts than whiskers");
    check_tag(obs.tag);
    out += obs.tag;
    for (double v : {obs.pose.x, obs.pose.y, obs.pose.theta}) out += ',' + finite_real(v, "pose");
    for (double v : obs.visual) out += ',' + finite_real(v, "visual");
    for (double v : obs.tactile) out += ',' + finite_real(v, "tactile");
    out += ',' + std::to_string(obs.contacts.size());
    for (Eigen::Index i = 0; i < whiskers; ++i) {
      if (i < static_cast<Eigen::Index>(obs.contacts.size())) {
        out += ',' + finite_real(obs.contacts[i].x(), "contact");
        out += ',' + finite_real(obs.contacts[i].y(), "contact");
      } else {
        out += ",,";
      }
    }
    out += '\n';
  }
  return out;
}

std::vector<world::Observation> dataset_from_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) malformed("dataset has no header row");
  const auto header = split(lines[0], ',');
  Eigen::Index rays = 0, whiskers = 0;
  for (auto h : header) {
    if (h.starts_with("v_")) ++rays;
    if (h.starts_with("t_")) ++whiskers;
  }
  {
    std::vector<std::string> expect = {"tag", "pose_x", "pose_y", "pose_theta"};
    for (Eigen::Index i = 0; i < rays; ++i) expect.push_back("v_" + std::to_string(i));
    for (Eigen::Index i = 0; i < whiskers; ++i) expect.push_back("t_" + std::to_string(i));
    expect.push_back("n_contacts");
    for (Eigen::Index i = 0; i < whiskers; ++i) {
      expect.push_back("c_" + std::to_string(i) + "_x");
      expect.push_back("c_" + std::to_string(i) + "_y");
    }
    if (header.size() != expect.size() || !std::equal(expect.begin(), expect.end(), header.begin()))
      malformed("unexpected dataset header");
  }

  std::vector<world::Observation> out;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const auto cells = split(lines[row], ',');
    if (cells.size() != header.size())
      malformed("dataset row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                " columns, expected " + std::to_string(header.size()));
    world::Observation obs;
    std::size_t k = 0;
    obs.tag = std::string(cells[k++]);
    obs.pose.x = parse_real(cells[k++]);
    obs.pose.y = parse_real(cells[k++]);
    obs.pose.theta = parse_real(cells[k++]);
    obs.visual.resize(rays);
    for (Eigen::Index i = 0; i < rays; ++i) obs.visual[i] = parse_real(cells[k++]);
    obs.tactile.resize(whiskers);
    for (Eigen::Index i = 0; i < whiskers; ++i) obs.tactile[i] = parse_real(cells[k++]);
    const auto n = parse_int<std::size_t>(cells[k++]);
    if (n > static_cast<std::size_t>(whiskers))
      malformed("dataset row " + std::to_string(row) + " has too many contacts");
    for (Eigen::Index i = 0; i < whiskers; ++i) {
      const auto cx = cells[k++];
      const auto cy = cells[k++];
      if (static_cast<std::size_t>(i) < n) {
        obs.contacts.emplace_back(parse_real(cx), parse_real(cy));
      } else if (!cx.empty() || !cy.empty()) {
        malformed("dataset row " + std::to_string(row) + " has values in unused contact slots");
      }
    }
    out.push_back(std::move(obs));
  }
  return out;
}

void save_dataset(std::span<const world::Observation> data, const fs::path& path) {
  write_file_atomic(path, dataset_to_csv(data));
}

std::vector<world::Observation> load_dataset(const fs::path& path) {
  return dataset_from_csv(read_file(path));
}

std::string matrix_to_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += finite_real(m(r, c), "matrix");
    }
    out += '\n';
  }
  return out;
}

Eigen::MatrixXd matrix_from_csv(std::string_view text) {
  const auto lines = lines_of(text);
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    std::vector<double> row;
    for (auto cell : split(lines[r], ',')) row.push_back(parse_real(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      malformed("matrix row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                " columns, expected " + std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index m = n ? static_cast<Eigen::Index>(rows.front().size()) : 0;
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < m; ++c) out(r, c) = rows[r][c];
  return out;
}

void save_matrix_csv(const Eigen::MatrixXd& m, const fs::path& path) {
  write_file_atomic(path, matrix_to_csv(m));
}

Eigen::MatrixXd load_matrix_csv(const fs::path& path) { return matrix_from_csv(read_file(path)); }

std::vector<std::uint8_t> encode_pgm(const Eigen::MatrixXd& m, PgmRange* range) {
  if (!m.allFinite()) throw InvalidArgument("non-finite value in matrix");
  PgmRange rg;
  if (m.size() > 0) {
    rg.min = m.minCoeff();
    rg.max = m.maxCoeff();
  }
  rg.constant = !(rg.max > rg.min);
  const std::string header =
      "P5\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double scaled = rg.constant ? 0.0 : (m(r, c) - rg.min) / (rg.max - rg.min) * 255.0;
      out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(scaled, 0.0, 255.0))));
    }
  }
  if (range) *range = rg;
  return out;
}

PgmRange save_matrix_pgm(const Eigen::MatrixXd& m, const fs::path& path) {
  PgmRange rg;
  const auto bytes = encode_pgm(m, &rg);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  const std::string side = "min=" + format_real(rg.min) + "\nmax=" + format_real(rg.max) +
                           "\nconstant=" + (rg.constant ? "1" : "0") + "\n";
  write_file_atomic(path.string() + ".range", side);
  return rg;
}

std::string scores_to_text(const ScoreReport& r) {
  const eval::Scores& s = r.scores;
  std::ostringstream out;
  out << "method=" << eval::to_string(r.method) << '\n'
      << "tau=" << format_real(r.thresholds.tau) << '\n'
      << "theta_match=" << format_real(r.thresholds.theta_match) << '\n'
      << "seed=" << r.seed << '\n'
      << "recall_mode=" << eval::to_string(r.recall_mode) << '\n'
      << "tp=" << s.tp << '\n'
      << "fp=" << s.fp << '\n'
      << "fn=" << s.fn << '\n'
      << "tn=" << s.tn << '\n'
      << "precision=" << format_real(s.precision) << '\n'
      << "recall=" << format_real(s.recall) << '\n'
      << "f1=" << format_real(s.f1) << '\n'
      << "precision_undefined=" << (s.precision_undefined ? 1 : 0) << '\n'
      << "recall_undefined=" << (s.recall_undefined ? 1 : 0) << '\n';
  for (const auto& [k, v] : r.extra) out << k << '=' << v << '\n';
  return out.str();
}

void save_scores(const ScoreReport& report, const fs::path& path) {
  write_file_atomic(path, scores_to_text(report));
}

std::string templates_to_csv(const eval::TemplateSet& set) {
  set.validate();
  check_tag(set.trajectory_tag);
  const bool learned = set.method == eval::Method::learned;
  if (!learned && !set.scaling) throw InvalidArgument("handcrafted template set lacks scaling factors");

  std::string out = "# mspc-templates 1\n# method=" + eval::to_string(set.method) +
                    "\n# trajectory_tag=" + set.trajectory_tag + '\n';
  if (!learned) {
    out += "# alpha=" + format_real(set.scaling->alpha) + '\n';
    out += "# beta=" + format_real(set.scaling->beta) + '\n';
    out += "# gamma=" + format_real(set.scaling->gamma) + '\n';
  }
  out += "index,pose_x,pose_y,pose_theta";
  auto columns = [&](const char* prefix, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) out += std::string(",") + prefix + std::to_string(i);
  };
  if (!set.entries.empty()) {
    const auto& d = set.entries.front().descriptor;
    if (learned) {
      columns("f_", std::get<Eigen::VectorXd>(d).size());
    } else {
      const auto& h = std::get<baseline::HandcraftedTemplate>(d);
      columns("v_", h.intensity.size());
      columns("pfh_", h.pfh.size());
      columns("sda_", h.sda.size());
    }
  }
  out += '\n';
  auto values = [&](const Eigen::VectorXd& v) {
    for (double x : v) out += ',' + finite_real(x, "template");
  };
  for (const auto& t : set.entries) {
    out += std::to_string(t.index);
    for (double v : {t.pose.x, t.pose.y, t.pose.theta}) out += ',' + finite_real(v, "pose");
    if (learned) {
      values(std::get<Eigen::VectorXd>(t.descriptor));
    } else {
      const auto& h = std::get<baseline::HandcraftedTemplate>(t.descriptor);
      values(h.intensity);
      values(h.pfh);
      values(h.sda);
    }
    out += '\n';
  }
  return out;
}

eval::TemplateSet templates_from_csv(std::string_view text) {
  const auto lines = lines_of(text);
  eval::TemplateSet set;
  std::size_t row = 0;
  bool have_method = false;
  if (lines.empty() || lines[0] != "# mspc-templates 1") malformed("not a template file");
  baseline::ScalingFactors scaling;
  int have_scaling = 0;
  for (row = 1; row < lines.size() && lines[row].starts_with("#"); ++row) {
    std::string_view l = lines[row].substr(1);
    while (!l.empty() && l.front() == ' ') l.remove_prefix(1);
    const std::size_t eq = l.find('=');
    if (eq == std::string_view::npos) malformed("bad template header line");
    const auto key = l.substr(0, eq);
    const auto value = l.substr(eq + 1);
    if (key == "method") {
      try {
        set.method = eval::parse_method(std::string(value));
      } catch (const InvalidArgument& e) {
        malformed(e.what());
      }
      have_method = true;
    } else if (key == "trajectory_tag") {
      set.trajectory_tag = std::string(value);
    } else if (key == "alpha") {
      scaling.alpha = parse_real(value);
      ++have_scaling;
    } else if (key == "beta") {
      scaling.beta = parse_real(value);
      ++have_scaling;
    } else if (key == "gamma") {
      scaling.gamma = parse_real(value);
      ++have_scaling;
    } else {
      malformed("unknown template header key '" + std::string(key) + "'");
    }
  }
  if (!have_method) malformed("template file lacks a method");
  const bool learned = set.method == eval::Method::learned;
  if (!learned) {
    if (have_scaling != 3) malformed("handcrafted template file lacks scaling factors");
    set.scaling = scaling;
  }
  if (row >= lines.size()) malformed("template file lacks a column header");
  const auto header = split(lines[row], ',');
  if (header.size() < 4 || header[0] != "index" || header[1] != "pose_x" || header[2] != "pose_y" ||
      header[3] != "pose_theta")
    malformed("unexpected template column header");
  Eigen::Index nf = 0, nv = 0, np = 0, ns = 0;
  for (std::size_t i = 4; i < header.size(); ++i) {
    const auto h = header[i];
    if (learned && h.starts_with("f_")) ++nf;
    else if (!learned && h.starts_with("v_")) ++nv;
    else if (!learned && h.starts_with("pfh_")) ++np;
    else if (!learned && h.starts_with("sda_")) ++ns;
    else malformed("unexpected template column '" + std::string(h) + "'");
  }
  for (++row; row < lines.size(); ++row) {
    const auto cells = split(lines[row], ',');
    if (cells.size() != header.size())
      malformed("template row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                " columns, expected " + std::to_string(header.size()));
    eval::Template t;
    std::size_t k = 0;
    t.index = parse_int<std::size_t>(cells[k++]);
    t.pose.x = parse_real(cells[k++]);
    t.pose.y = parse_real(cells[k++]);
    t.pose.theta = parse_real(cells[k++]);
    auto take = [&](Eigen::Index n) {
      Eigen::VectorXd v(n);
      for (Eigen::Index i = 0; i < n; ++i) v[i] = parse_real(cells[k++]);
      return v;
    };
    if (learned) {
      t.descriptor = take(nf);
    } else {
      baseline::HandcraftedTemplate h;
      h.intensity = take(nv);
      h.pfh = take(np);
      h.sda = take(ns);
      t.descriptor = std::move(h);
    }
    set.entries.push_back(std::move(t));
  }
  return set;
}

void save_templates(const eval::TemplateSet& set, const fs::path& path) {
  write_file_atomic(path, templates_to_csv(set));
}

eval::TemplateSet load_templates(const fs::path& path) { return templates_from_csv(read_file(path)); }

}  // namespace mspc::persist
