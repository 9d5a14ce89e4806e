#include "evpan/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <unordered_map>

#include "evpan/kernels.hpp"
#include "evpan/util.hpp"

namespace evpan {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

Polar to_polar(double x, double y, double z) {
  const double r = std::sqrt(x * x + y * y);
  const double theta = wrap_two_pi(std::atan2(y, x));
  return {r, theta, z};
}

std::optional<CellIndex> cell_of(double x, double y, double z, const GridConfig& cfg) {
  const Polar p = to_polar(x, y, z);
  if (p.r < cfg.r_min || p.r > cfg.r_max) return std::nullopt;
  if (z < cfg.z_min || z > cfg.z_max) return std::nullopt;
  int r = static_cast<int>((p.r - cfg.r_min) / (cfg.r_max - cfg.r_min) * cfg.h);
  if (r >= cfg.h) r = cfg.h - 1;
  int c = static_cast<int>(p.theta / kTwoPi * cfg.w);
  if (c >= cfg.w) c = 0;  // theta just below 2*pi can round up; the axis is circular
  int zb = static_cast<int>((z - cfg.z_min) / (cfg.z_max - cfg.z_min) * cfg.z);
  if (zb >= cfg.z) zb = cfg.z - 1;
  return CellIndex{r, c, zb};
}

VoxelIndexMap voxelize(const PointCloud& cloud, const GridConfig& cfg) {
  const size_t n = cloud.size();
  VoxelIndexMap map;
  map.point_slot.assign(n, -1);

  std::vector<int64_t> linear(n, -1);
  for (size_t i = 0; i < n; ++i) {
    const auto cell = cell_of(cloud.x[i], cloud.y[i], cloud.z[i], cfg);
    if (!cell) continue;
    linear[i] = (static_cast<int64_t>(cell->r) * cfg.w + cell->c) * cfg.z + cell->z;
    ++map.in_range;
  }

  std::vector<int64_t> ids;
  ids.reserve(map.in_range);
  for (size_t i = 0; i < n; ++i)
    if (linear[i] >= 0) ids.push_back(linear[i]);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  std::unordered_map<int64_t, int32_t> slot_of;
  slot_of.reserve(ids.size());
  map.cells.resize(ids.size());
  for (size_t s = 0; s < ids.size(); ++s) {
    const int64_t id = ids[s];
    slot_of[id] = static_cast<int32_t>(s);
    const int zb = static_cast<int>(id % cfg.z);
    const int c = static_cast<int>((id / cfg.z) % cfg.w);
    const int r = static_cast<int>(id / cfg.z / cfg.w);
    map.cells[s].idx = CellIndex{r, c, zb};
  }
  for (size_t i = 0; i < n; ++i) {
    if (linear[i] < 0) continue;
    const int32_t slot = slot_of[linear[i]];
    map.point_slot[i] = slot;
    map.cells[static_cast<size_t>(slot)].points.push_back(static_cast<int32_t>(i));
  }
  return map;
}

DirichletField scatter_rows(const DirichletField& cell_alpha, const VoxelIndexMap& map,
                            std::span<const double> fill_row) {
  if (cell_alpha.n != map.cells.size()) {
    throw std::invalid_argument("scatter_rows: field does not cover the occupied cells");
  }
  if (fill_row.size() != static_cast<size_t>(cell_alpha.k)) {
    throw std::invalid_argument("scatter_rows: fill row has wrong width");
  }
  const size_t n = map.point_slot.size();
  DirichletField out(n, cell_alpha.k);
  for (size_t i = 0; i < n; ++i) {
    const int32_t slot = map.point_slot[i];
    const double* src = slot >= 0 ? cell_alpha.row(static_cast<size_t>(slot)) : fill_row.data();
    std::copy(src, src + cell_alpha.k, out.row(i));
  }
  return out;
}

InstanceTargets encode_instance_targets(const PanopticLabelSet& labels, const VoxelIndexMap& map,
                                        const GridConfig& cfg, const ClassTaxonomy& tax,
                                        double sigma) {
  InstanceTargets t;
  t.h = cfg.h;
  t.w = cfg.w;
  t.heatmap.assign(cfg.bev_cells(), 0.0);
  t.offsets.assign(cfg.bev_cells() * 2, 0.0);
  t.valid.assign(cfg.bev_cells(), 0);

  // per-instance mass per BEV cell, instances in ascending id order
  std::map<uint32_t, std::unordered_map<int64_t, int>> mass;
  std::map<uint32_t, bool> seen;
  for (size_t i = 0; i < labels.size(); ++i) {
    const uint32_t inst = labels.instance[i];
    if (inst == 0 || !tax.thing(labels.semantic[i])) continue;
    seen[inst] = true;
    const int32_t slot = map.point_slot[i];
    if (slot < 0) continue;
    const CellIndex& ci = map.cells[static_cast<size_t>(slot)].idx;
    ++mass[inst][static_cast<int64_t>(ci.r) * cfg.w + ci.c];
  }
  for (const auto& [inst, _] : seen) {
    if (mass.find(inst) == mass.end()) ++t.skipped_instances;
  }

  struct Owner {
    uint32_t inst = 0;
    int mass = 0;
    int r0 = 0, c0 = 0;
  };
  std::unordered_map<int64_t, Owner> owner;

  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  const auto& kr = kernels::ops();
  for (const auto& [inst, cells] : mass) {
    // mass centroid of the instance's BEV cells; the angular axis uses a
    // circular mean so instances straddling theta = 0 stay put
    double total = 0.0, row_sum = 0.0, cos_sum = 0.0, sin_sum = 0.0;
    for (const auto& [cell, m] : cells) {
      const double w = static_cast<double>(m);
      const int r = static_cast<int>(cell / cfg.w);
      const int c = static_cast<int>(cell % cfg.w);
      const double phi = kTwoPi * c / cfg.w;
      total += w;
      row_sum += w * r;
      cos_sum += w * std::cos(phi);
      sin_sum += w * std::sin(phi);
    }
    int r0 = static_cast<int>(std::floor(row_sum / total));
    r0 = std::clamp(r0, 0, cfg.h - 1);
    double col_f = wrap_two_pi(std::atan2(sin_sum, cos_sum)) / kTwoPi * cfg.w;
    // cell-aligned configurations must land exactly on their cell; snap
    // away the trig round-off before flooring
    const double nearest = std::round(col_f);
    if (std::fabs(col_f - nearest) < 1e-9) col_f = nearest;
    int c0 = static_cast<int>(std::floor(col_f));
    if (c0 >= cfg.w) c0 = 0;

    for (int r = 0; r < cfg.h; ++r) {
      const double dr = static_cast<double>(r - r0);
      kr.gauss_max_row(t.heatmap.data() + static_cast<size_t>(r) * cfg.w,
                       static_cast<size_t>(cfg.w), static_cast<double>(c0), dr * dr,
                       inv_two_sigma2);
    }

    for (const auto& [cell, m] : cells) {
      Owner& o = owner[cell];
      if (m > o.mass) o = Owner{inst, m, r0, c0};  // ties keep the lower id (map order)
    }
  }

  for (const auto& [cell, o] : owner) {
    const int r = static_cast<int>(cell / cfg.w);
    const int c = static_cast<int>(cell % cfg.w);
    t.valid[static_cast<size_t>(cell)] = 1;
    t.offsets[static_cast<size_t>(cell) * 2] = static_cast<double>(o.r0 - r);
    t.offsets[static_cast<size_t>(cell) * 2 + 1] =
        wrap_signed(static_cast<double>(o.c0 - c), static_cast<double>(cfg.w));
  }
  return t;
}

}  // namespace evpan
