#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "evpan/core.hpp"
#include "evpan/grid.hpp"

namespace evpan {

// file missing / not readable / not writable
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// bytes present but malformed (truncation, bad magic, bad counts)
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// config syntax errors and unknown keys
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// SemanticKITTI scan: little-endian f32 quadruples x, y, z, remission
PointCloud read_scan(const std::string& path);
void write_scan(const std::string& path, const PointCloud& cloud);

// .label: one little-endian u32 per point, decoded via the label codec
PanopticLabelSet read_labels(const std::string& path, const ClassTaxonomy& tax,
                             DecodeStats* stats = nullptr);
void write_labels(const std::string& path, const PanopticLabelSet& labels,
                  const ClassTaxonomy& tax);

// Evidential prediction dump: magic "EVLA", version, point count, K,
// flags, f32 alpha matrix row-major, optional u32 instance ids.
struct AlphaDump {
  uint16_t version = 1;
  uint32_t n = 0;
  uint16_t k = 0;
  bool has_instances = false;
  bool has_refined = false;
  std::vector<float> alpha;        // n*k, every entry >= 1
  std::vector<uint32_t> instance;  // n when has_instances

  DirichletField to_field() const;
  static AlphaDump from_field(const DirichletField& f);
};

AlphaDump read_alpha(const std::string& path);
void write_alpha(const std::string& path, const AlphaDump& dump);

struct SynthParams {
  int scenes = 4;
  int cars = 3, persons = 2, poles = 2, trunks = 2, signs = 1, sidewalk_sectors = 2;
  int road_points = 12000, sidewalk_points = 3000;
  int points_per_car = 500, points_per_person = 150, points_per_pole = 80,
      points_per_trunk = 100, points_per_sign = 60;
  int oor_stragglers = 0;
  uint64_t seed = 1;

  bool operator==(const SynthParams&) const = default;
};

struct CorruptParams {
  std::string mode = "calibrated";  // calibrated | overconfident | underconfident
  double gamma = 3.0;
  double q_lo = 0.7, q_hi = 0.99;
  double evidence_scale = 1.0;
  double flip_scale = 1.0;

  bool operator==(const CorruptParams&) const = default;
};

struct ToyTrainParams {
  int epochs = 200;
  double lr = 0.05;
  int train_points = 2000, test_points = 2000;
  double separation = 2.2;
  uint64_t seed = 7;

  bool operator==(const ToyTrainParams&) const = default;
};

// Whole-toolkit configuration; defaults are the reference operating
// point (grid 480x360x32, r [3,50] m, z [-3,1.5] m, NMS 5/0.1/100, pKNN
// 5/0.4, uQR N=20000, lambda_h=100, lambda_o=10, KL cap 0.065, J=10,
// Gaussian sigma 5).
struct Config {
  std::string taxonomy_file;  // empty -> built-in SemanticKITTI
  GridConfig grid;
  double gauss_sigma = 5.0;
  int nms_kernel = 5;
  double nms_threshold = 0.1;
  int nms_top_k = 100;
  int pknn_k = 5;
  double pknn_threshold = 0.4;
  uint64_t uqr_n = 20000;
  int uqr_m = 15;
  int uqr_c_mid = 64;
  double uqr_radius = 1.2;
  double uqr_sigma = 0.6;
  std::string uqr_weights;  // empty -> deterministic random init
  double lambda_h = 100.0;
  double lambda_o = 10.0;
  double kl_cap = 0.065;
  int kl_ramp_epochs = 20;
  int calib_bins = 10;
  std::string refine_order = "uqr_then_pknn";  // or pknn_then_uqr
  SynthParams synth;
  CorruptParams corrupt;
  ToyTrainParams toytrain;

  bool operator==(const Config&) const = default;
};

// Line-based `key = value` text; '#' starts a comment; unknown keys are
// errors (with line numbers) so typos never pass silently.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);
std::string serialize_config(const Config& cfg);
void save_config(const std::string& path, const Config& cfg);

// Taxonomy file: `k`, `ignore`, `ignore_raw` assignments plus repeated
// `class <train> <name> <thing|stuff> <canonical-raw>` and
// `map <raw> <train|ignore>` lines.
ClassTaxonomy load_taxonomy(const std::string& path);

// temp file + rename so readers never observe partial output
void atomic_write_bytes(const std::string& path, const std::string& bytes);

}  // namespace evpan
