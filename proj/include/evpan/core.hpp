#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace evpan {

// Per-point channels with parallel-index discipline: all vectors share
// one length.
struct PointCloud {
  std::vector<float> x, y, z, remission;
  size_t size() const { return x.size(); }
};

struct ClassTaxonomy {
  int k = 0;                             // number of evaluated classes
  std::vector<std::string> names;        // size k
  std::vector<uint8_t> is_thing;         // size k
  int ignore_id = 255;                   // train-space id excluded from metrics
  std::unordered_map<uint32_t, int> raw_to_train;
  std::vector<uint32_t> train_to_raw;    // canonical raw id per train class
  uint32_t ignore_raw = 0;               // canonical raw id for ignore

  bool thing(int cls) const {
    return cls >= 0 && cls < k && is_thing[static_cast<size_t>(cls)] != 0;
  }
  bool valid_class(int cls) const { return (cls >= 0 && cls < k) || cls == ignore_id; }

  // SemanticKITTI: 19 evaluated classes, 8 of them things, moving-object
  // raw ids folded onto their base classes.
  static ClassTaxonomy semantic_kitti();
};

// Per-point semantic train id (or ignore) and instance id; 0 means
// "no instance".
struct PanopticLabelSet {
  std::vector<int32_t> semantic;
  std::vector<uint32_t> instance;
  size_t size() const { return semantic.size(); }
};

// Dirichlet evidence over k classes for n elements (voxels or points);
// every entry is >= 1.
struct DirichletField {
  size_t n = 0;
  int k = 0;
  std::vector<double> alpha;

  DirichletField() = default;
  DirichletField(size_t n_, int k_) : n(n_), k(k_), alpha(n_ * static_cast<size_t>(k_), 1.0) {}
  double* row(size_t i) { return alpha.data() + i * static_cast<size_t>(k); }
  const double* row(size_t i) const { return alpha.data() + i * static_cast<size_t>(k); }
  double& at(size_t i, int c) { return alpha[i * static_cast<size_t>(k) + static_cast<size_t>(c)]; }
  double at(size_t i, int c) const { return alpha[i * static_cast<size_t>(k) + static_cast<size_t>(c)]; }
};

struct DecodeStats {
  uint64_t unknown_raw = 0;  // raw semantic ids missing from the taxonomy
};

// SemanticKITTI packing: low 16 bits raw semantic id, high 16 bits
// instance id. Unknown raw ids degrade to ignore (counted, never fatal);
// ignore and stuff decode with instance forced to 0.
std::pair<int32_t, uint32_t> decode_label(uint32_t raw, const ClassTaxonomy& tax,
                                          DecodeStats* stats = nullptr);

// Inverse of decode_label on valid pairs. Throws std::out_of_range for
// instance >= 2^16 and std::invalid_argument for a semantic id outside
// the taxonomy or a stuff/ignore class paired with a nonzero instance.
uint32_t encode_label(int32_t semantic, uint32_t instance, const ClassTaxonomy& tax);

struct Violation {
  size_t index;  // point index, or npos for shape-level problems
  std::string what;
};

// Reports every invariant breach; empty result means the scene is
// well-formed.
std::vector<Violation> validate(const PointCloud& cloud, const PanopticLabelSet& labels,
                                const ClassTaxonomy& tax);

}  // namespace evpan
