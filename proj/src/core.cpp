#include "evpan/core.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace evpan {

namespace {

struct RawClass {
  uint32_t raw;
  const char* name;
  bool thing;
};

// Canonical raw ids for the 19 evaluated classes, train id = table index.
constexpr RawClass kKittiClasses[] = {
    {10, "car", true},
    {11, "bicycle", true},
    {15, "motorcycle", true},
    {18, "truck", true},
    {20, "other-vehicle", true},
    {30, "person", true},
    {31, "bicyclist", true},
    {32, "motorcyclist", true},
    {40, "road", false},
    {44, "parking", false},
    {48, "sidewalk", false},
    {49, "other-ground", false},
    {50, "building", false},
    {51, "fence", false},
    {70, "vegetation", false},
    {71, "trunk", false},
    {72, "terrain", false},
    {80, "pole", false},
    {81, "traffic-sign", false},
};

}  // namespace

ClassTaxonomy ClassTaxonomy::semantic_kitti() {
  ClassTaxonomy t;
  t.k = static_cast<int>(std::size(kKittiClasses));
  t.ignore_id = 255;
  t.ignore_raw = 0;
  for (int i = 0; i < t.k; ++i) {
    const RawClass& rc = kKittiClasses[static_cast<size_t>(i)];
    t.names.push_back(rc.name);
    t.is_thing.push_back(rc.thing ? 1 : 0);
    t.train_to_raw.push_back(rc.raw);
    t.raw_to_train[rc.raw] = i;
  }
  t.raw_to_train[0] = t.ignore_id;   // unlabeled
  t.raw_to_train[1] = t.ignore_id;   // outlier
  t.raw_to_train[13] = 4;            // bus -> other-vehicle
  t.raw_to_train[16] = 4;            // on-rails -> other-vehicle
  t.raw_to_train[52] = t.ignore_id;  // other-structure
  t.raw_to_train[60] = 8;            // lane-marking -> road
  t.raw_to_train[99] = t.ignore_id;  // other-object
  t.raw_to_train[252] = 0;           // moving-car
  t.raw_to_train[253] = 6;           // moving-bicyclist
  t.raw_to_train[254] = 5;           // moving-person
  t.raw_to_train[255] = 7;           // moving-motorcyclist
  t.raw_to_train[256] = 4;           // moving-on-rails
  t.raw_to_train[257] = 4;           // moving-bus
  t.raw_to_train[258] = 3;           // moving-truck
  t.raw_to_train[259] = 4;           // moving-other-vehicle
  return t;
}

std::pair<int32_t, uint32_t> decode_label(uint32_t raw, const ClassTaxonomy& tax,
                                          DecodeStats* stats) {
  const uint32_t raw_sem = raw & 0xFFFFu;
  uint32_t instance = raw >> 16;
  int32_t semantic = tax.ignore_id;
  const auto it = tax.raw_to_train.find(raw_sem);
  if (it != tax.raw_to_train.end()) {
    semantic = it->second;
  } else if (stats) {
    ++stats->unknown_raw;
  }
  if (!tax.thing(semantic)) instance = 0;
  return {semantic, instance};
}

uint32_t encode_label(int32_t semantic, uint32_t instance, const ClassTaxonomy& tax) {
  if (!tax.valid_class(semantic)) {
    throw std::invalid_argument("encode_label: unknown semantic id " + std::to_string(semantic));
  }
  if (instance >= (1u << 16)) {
    throw std::out_of_range("encode_label: instance id " + std::to_string(instance) +
                            " does not fit in 16 bits");
  }
  if (instance != 0 && !tax.thing(semantic)) {
    throw std::invalid_argument("encode_label: non-thing class " + std::to_string(semantic) +
                                " cannot carry instance " + std::to_string(instance));
  }
  const uint32_t raw_sem = semantic == tax.ignore_id
                               ? tax.ignore_raw
                               : tax.train_to_raw[static_cast<size_t>(semantic)];
  return raw_sem | (instance << 16);
}

std::vector<Violation> validate(const PointCloud& cloud, const PanopticLabelSet& labels,
                                const ClassTaxonomy& tax) {
  constexpr size_t npos = std::numeric_limits<size_t>::max();
  std::vector<Violation> out;
  const size_t n = cloud.size();
  if (cloud.y.size() != n || cloud.z.size() != n || cloud.remission.size() != n) {
    out.push_back({npos, "point channels have mismatched lengths"});
    return out;
  }
  if (labels.semantic.size() != n || labels.instance.size() != n) {
    out.push_back({npos, "label arrays do not match the cloud size"});
    return out;
  }
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(cloud.x[i]) || !std::isfinite(cloud.y[i]) || !std::isfinite(cloud.z[i])) {
      out.push_back({i, "non-finite coordinate at point " + std::to_string(i)});
    }
    const int32_t sem = labels.semantic[i];
    if (!tax.valid_class(sem)) {
      out.push_back({i, "semantic id " + std::to_string(sem) + " out of range at point " +
                            std::to_string(i)});
      continue;
    }
    if (labels.instance[i] != 0 && !tax.thing(sem)) {
      out.push_back({i, "non-thing point " + std::to_string(i) + " carries instance " +
                            std::to_string(labels.instance[i])});
    }
  }
  return out;
}

}  // namespace evpan
