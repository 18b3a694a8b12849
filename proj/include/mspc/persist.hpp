#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mspc/evaluate.hpp"
#include "mspc/pcnet.hpp"
#include "mspc/synthworld.hpp"

// File formats. All text is UTF-8 with LF line endings, reals use 17
// significant digits so that they parse back to the same double, and binary
// integers and doubles are little-endian. Every write goes to a temporary
// file that is renamed over the target. See docs/formats.md.
namespace mspc::persist {

namespace fs = std::filesystem;

inline constexpr char kModelMagic[4] = {'M', 'S', 'P', 'C'};
inline constexpr std::uint8_t kModelVersion = 1;

std::string format_real(double v);
// Throws FormatError(malformed) unless the whole string is a number.
double parse_real(std::string_view s);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

void write_file_atomic(const fs::path& path, std::string_view bytes);
std::string read_file(const fs::path& path);

// NetworkConfig as key=value lines, keys as the struct field names.
std::string config_to_text(const pcnet::NetworkConfig& config);
pcnet::NetworkConfig config_from_text(std::string_view text);
// Applies one key=value pair; returns false if the key is not a config field.
bool apply_config_field(pcnet::NetworkConfig& config, std::string_view key, std::string_view value);

// Model file: magic, version byte, u32 config length, config text, each
// weight matrix as u32 rows, u32 cols and row-major f64 values, then the
// CRC-32 of every preceding byte.
struct LoadedModel {
  pcnet::WeightSet weights;
  pcnet::NetworkConfig config;
};

std::vector<std::uint8_t> encode_model(const pcnet::WeightSet& weights,
                                       const pcnet::NetworkConfig& config);
LoadedModel decode_model(std::span<const std::uint8_t> bytes);
void save_model(const pcnet::WeightSet& weights, const pcnet::NetworkConfig& config,
                const fs::path& path);
LoadedModel load_model(const fs::path& path);

// Dataset CSV. Contacts are padded to one slot per whisker so every row has
// the same number of columns; unused slots are empty.
std::string dataset_to_csv(std::span<const world::Observation> data);
std::vector<world::Observation> dataset_from_csv(std::string_view text);
void save_dataset(std::span<const world::Observation> data, const fs::path& path);
std::vector<world::Observation> load_dataset(const fs::path& path);

std::string matrix_to_csv(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_csv(std::string_view text);
void save_matrix_csv(const Eigen::MatrixXd& m, const fs::path& path);
Eigen::MatrixXd load_matrix_csv(const fs::path& path);

struct PgmRange {
  double min = 0.0;
  double max = 0.0;
  bool constant = false;
};

// Binary P5 graymap, values min-max scaled to 0..255 (a constant matrix maps
// to 0). The range goes to a sidecar text file at `<path>.range`.
std::vector<std::uint8_t> encode_pgm(const Eigen::MatrixXd& m, PgmRange* range = nullptr);
PgmRange save_matrix_pgm(const Eigen::MatrixXd& m, const fs::path& path);

struct ScoreReport {
  eval::Scores scores;
  eval::MatchThresholds thresholds;
  std::uint64_t seed = 0;
  eval::Method method = eval::Method::learned;
  eval::RecallMode recall_mode = eval::RecallMode::standard;
  std::vector<std::pair<std::string, std::string>> extra;
};

std::string scores_to_text(const ScoreReport& report);
void save_scores(const ScoreReport& report, const fs::path& path);

// Template set CSV: '#' header lines carrying method, trajectory tag and,
// for handcrafted sets, the scaling factors; then one row per template.
std::string templates_to_csv(const eval::TemplateSet& set);
eval::TemplateSet templates_from_csv(std::string_view text);
void save_templates(const eval::TemplateSet& set, const fs::path& path);
eval::TemplateSet load_templates(const fs::path& path);

}  // namespace mspc::persist
