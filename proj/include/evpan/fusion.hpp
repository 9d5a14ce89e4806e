#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "evpan/core.hpp"
#include "evpan/grid.hpp"
#include "evpan/util.hpp"

namespace evpan {

struct Center {
  int r = 0, c = 0;
  double score = 0.0;
  bool operator==(const Center&) const = default;
};

// sorted by descending score, ties by (row, col); size <= top_k
using CenterSet = std::vector<Center>;

// Sliding-window NMS on the BEV heatmap, circular in the column axis. A
// cell survives when no neighbour in its kernel window strictly beats it
// and no equal-valued neighbour precedes it lexicographically.
CenterSet nms_centers(std::span<const double> heatmap, int h, int w, int kernel = 5,
                      double threshold = 0.1, int top_k = 100);

// BEV cells with at least one thing-class voxel along z. cell_classes is
// the per-occupied-cell argmax class aligned with map.cells.
std::vector<uint8_t> foreground_mask(const VoxelIndexMap& map,
                                     std::span<const int32_t> cell_classes,
                                     const GridConfig& cfg, const ClassTaxonomy& tax);

struct AssignResult {
  std::vector<int32_t> ids;   // h*w, 1-based center index, 0 for unmasked
  uint64_t unassigned = 0;    // masked cells left without a center
};

// Shift each masked cell by its offset (columns wrap) and adopt
// 1 + index of the nearest center under circular grid distance.
AssignResult assign_instances(std::span<const uint8_t> mask, std::span<const double> offsets,
                              const CenterSet& centers, int h, int w);

// Evidential majority vote: per group, the thing class with the largest
// summed probability (ties -> lower class id). Groups are instance ids
// > 0; returns (group id, class) sorted by group id.
std::vector<std::pair<int32_t, int>> majority_vote(const Mat& point_probs,
                                                   std::span<const int32_t> groups,
                                                   const ClassTaxonomy& tax);

struct FusionParams {
  int nms_kernel = 5;
  double nms_threshold = 0.1;
  int nms_top_k = 100;
};

struct FuseResult {
  PanopticLabelSet labels;
  DirichletField point_alpha;  // scattered, all-ones rows for out-of-range points
  std::vector<double> u;       // per point, 1 for out-of-range
  CenterSet centers;
  uint64_t unassigned_cells = 0;
};

// Voxel Dirichlet evidence + BEV centers/offsets -> per-point panoptic
// labels with uncertainties. Out-of-range points get the ignore class and
// u = 1; instance ids are remapped to a contiguous {1..m} after the vote.
FuseResult fuse(const DirichletField& voxel_alpha, std::span<const double> heatmap,
                std::span<const double> offsets, const VoxelIndexMap& map,
                const GridConfig& cfg, const ClassTaxonomy& tax, const FusionParams& params);

}  // namespace evpan
