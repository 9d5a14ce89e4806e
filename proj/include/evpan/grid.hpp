#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "evpan/core.hpp"

namespace evpan {

// Polar BEV grid geometry. Rows bin the range r linearly on [r_min,
// r_max], columns bin the heading angle uniformly with circular topology,
// z is binned linearly on [z_min, z_max]. Boundary values r == r_max and
// z == z_max clamp into the last bin.
struct GridConfig {
  int h = 480;  // range bins
  int w = 360;  // angular bins
  int z = 32;   // height bins
  double r_min = 3.0, r_max = 50.0;
  double z_min = -3.0, z_max = 1.5;

  bool operator==(const GridConfig&) const = default;
  size_t bev_cells() const { return static_cast<size_t>(h) * static_cast<size_t>(w); }
};

struct Polar {
  double r;
  double theta;  // in [0, 2*pi)
  double z;
};

Polar to_polar(double x, double y, double z);

struct CellIndex {
  int r, c, z;
  bool operator==(const CellIndex&) const = default;
};

// nullopt when the point falls outside the grid ranges
std::optional<CellIndex> cell_of(double x, double y, double z, const GridConfig& cfg);

// Bidirectional point <-> occupied-cell map. Out-of-range points keep a
// slot (-1) so per-point arrays stay full length.
struct VoxelIndexMap {
  struct Cell {
    CellIndex idx;
    std::vector<int32_t> points;  // ascending point indices
  };
  std::vector<int32_t> point_slot;  // per point: index into cells, or -1
  std::vector<Cell> cells;          // sorted by (r, c, z)
  size_t in_range = 0;

  size_t occupied() const { return cells.size(); }
};

VoxelIndexMap voxelize(const PointCloud& cloud, const GridConfig& cfg);

// Per-cell values (aligned with map.cells) scattered back to points;
// out-of-range points receive fill.
template <typename T>
std::vector<T> scatter_to_points(std::span<const T> cell_values, const VoxelIndexMap& map,
                                 T fill) {
  if (cell_values.size() != map.cells.size()) {
    throw std::invalid_argument("scatter_to_points: field does not cover the occupied cells");
  }
  std::vector<T> out(map.point_slot.size(), fill);
  for (size_t i = 0; i < map.point_slot.size(); ++i) {
    const int32_t slot = map.point_slot[i];
    if (slot >= 0) out[i] = cell_values[static_cast<size_t>(slot)];
  }
  return out;
}

// Row-wise variant for Dirichlet evidence: cell_alpha has one row per
// occupied cell, the result one row per point (fill_row for out-of-range).
DirichletField scatter_rows(const DirichletField& cell_alpha, const VoxelIndexMap& map,
                            std::span<const double> fill_row);

// Center-heatmap / offset ground truth on the BEV grid. The heatmap is
// the max over instances of a Gaussian around each instance's center
// cell; offsets point from a cell to its owning instance's center in
// grid-index units, with the angular component wrapped.
struct InstanceTargets {
  int h = 0, w = 0;
  std::vector<double> heatmap;   // h*w
  std::vector<double> offsets;   // h*w*2, (dr, dc) pairs
  std::vector<uint8_t> valid;    // h*w, thing-occupied cells
  size_t skipped_instances = 0;  // instances with no in-range point
};

InstanceTargets encode_instance_targets(const PanopticLabelSet& labels, const VoxelIndexMap& map,
                                        const GridConfig& cfg, const ClassTaxonomy& tax,
                                        double sigma);

}  // namespace evpan
