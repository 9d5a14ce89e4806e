#include "evpan/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "evpan/evidential.hpp"
#include "evpan/kernels.hpp"

namespace evpan {

CenterSet nms_centers(std::span<const double> heatmap, int h, int w, int kernel,
                      double threshold, int top_k) {
  if (heatmap.size() != static_cast<size_t>(h) * static_cast<size_t>(w)) {
    throw std::invalid_argument("nms_centers: heatmap shape mismatch");
  }
  if (kernel < 1 || kernel % 2 == 0) {
    throw std::invalid_argument("nms_centers: kernel must be odd and positive");
  }
  const int half = kernel / 2;
  CenterSet out;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double v = heatmap[static_cast<size_t>(r) * w + c];
      if (!(v > threshold)) continue;
      bool keep = true;
      for (int dr = -half; dr <= half && keep; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= h) continue;  // radial edge, window clipped
        for (int dc = -half; dc <= half; ++dc) {
          const int cc = ((c + dc) % w + w) % w;  // angular wrap
          if (rr == r && cc == c) continue;
          const double nv = heatmap[static_cast<size_t>(rr) * w + cc];
          if (nv > v || (nv == v && (rr < r || (rr == r && cc < c)))) {
            keep = false;
            break;
          }
        }
      }
      if (keep) out.push_back({r, c, v});
    }
  }
  std::sort(out.begin(), out.end(), [](const Center& a, const Center& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.r != b.r) return a.r < b.r;
    return a.c < b.c;
  });
  if (static_cast<int>(out.size()) > top_k) out.resize(static_cast<size_t>(top_k));
  return out;
}

std::vector<uint8_t> foreground_mask(const VoxelIndexMap& map,
                                     std::span<const int32_t> cell_classes,
                                     const GridConfig& cfg, const ClassTaxonomy& tax) {
  if (cell_classes.size() != map.cells.size()) {
    throw std::invalid_argument("foreground_mask: class array does not cover the cells");
  }
  std::vector<uint8_t> mask(cfg.bev_cells(), 0);
  for (size_t s = 0; s < map.cells.size(); ++s) {
    if (!tax.thing(cell_classes[s])) continue;
    const CellIndex& ci = map.cells[s].idx;
    mask[static_cast<size_t>(ci.r) * cfg.w + ci.c] = 1;
  }
  return mask;
}

AssignResult assign_instances(std::span<const uint8_t> mask, std::span<const double> offsets,
                              const CenterSet& centers, int h, int w) {
  if (offsets.size() != mask.size() * 2) {
    throw std::invalid_argument("assign_instances: offsets shape mismatch");
  }
  AssignResult out;
  out.ids.assign(mask.size(), 0);

  std::vector<size_t> cells;
  std::vector<double> sr, sc;
  const double wd = static_cast<double>(w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const size_t cell = static_cast<size_t>(r) * w + c;
      if (!mask[cell]) continue;
      cells.push_back(cell);
      sr.push_back(static_cast<double>(r) + offsets[cell * 2]);
      double col = static_cast<double>(c) + offsets[cell * 2 + 1];
      col = std::fmod(col, wd);
      if (col < 0.0) col += wd;
      if (col >= wd) col = 0.0;
      sc.push_back(col);
    }
  }
  if (centers.empty()) {
    out.unassigned = cells.size();
    return out;
  }
  std::vector<double> cr, cc;
  cr.reserve(centers.size());
  for (const Center& ctr : centers) {
    cr.push_back(static_cast<double>(ctr.r));
    cc.push_back(static_cast<double>(ctr.c));
  }
  std::vector<int32_t> nearest(cells.size());
  kernels::ops().nearest_center(sr.data(), sc.data(), cells.size(), cr.data(), cc.data(),
                                centers.size(), wd, nearest.data());
  for (size_t i = 0; i < cells.size(); ++i) out.ids[cells[i]] = nearest[i] + 1;
  return out;
}

std::vector<std::pair<int32_t, int>> majority_vote(const Mat& point_probs,
                                                   std::span<const int32_t> groups,
                                                   const ClassTaxonomy& tax) {
  if (groups.size() != point_probs.n) {
    throw std::invalid_argument("majority_vote: group array does not match the probabilities");
  }
  std::map<int32_t, std::vector<double>> sums;
  for (size_t i = 0; i < groups.size(); ++i) {
    const int32_t g = groups[i];
    if (g <= 0) continue;
    auto& acc = sums[g];
    if (acc.empty()) acc.assign(static_cast<size_t>(point_probs.k), 0.0);
    const double* row = point_probs.row(i);
    for (int c = 0; c < point_probs.k; ++c) acc[static_cast<size_t>(c)] += row[c];
  }
  std::vector<std::pair<int32_t, int>> out;
  out.reserve(sums.size());
  for (const auto& [g, acc] : sums) {
    int best = -1;
    double best_v = 0.0;
    for (int c = 0; c < point_probs.k; ++c) {
      if (!tax.thing(c)) continue;
      if (best < 0 || acc[static_cast<size_t>(c)] > best_v) {
        best = c;
        best_v = acc[static_cast<size_t>(c)];
      }
    }
    out.emplace_back(g, best);
  }
  return out;
}

FuseResult fuse(const DirichletField& voxel_alpha, std::span<const double> heatmap,
                std::span<const double> offsets, const VoxelIndexMap& map,
                const GridConfig& cfg, const ClassTaxonomy& tax, const FusionParams& params) {
  if (voxel_alpha.n != map.cells.size()) {
    throw std::invalid_argument("fuse: evidence does not cover the occupied cells");
  }
  const size_t n = map.point_slot.size();
  FuseResult out;

  std::vector<int32_t> cell_class(map.cells.size());
  if (!map.cells.empty()) {
    kernels::ops().argmax_rows(voxel_alpha.alpha.data(), voxel_alpha.n,
                               static_cast<size_t>(voxel_alpha.k), cell_class.data());
  }

  const std::vector<double> ones(static_cast<size_t>(voxel_alpha.k), 1.0);
  out.point_alpha = scatter_rows(voxel_alpha, map, ones);
  const Prediction pred = predict(out.point_alpha);
  out.u = pred.u;  // out-of-range rows are all ones, so u is exactly 1 there

  out.labels.semantic =
      scatter_to_points<int32_t>(cell_class, map, static_cast<int32_t>(tax.ignore_id));
  out.labels.instance.assign(n, 0);

  const auto mask = foreground_mask(map, cell_class, cfg, tax);
  out.centers = nms_centers(heatmap, cfg.h, cfg.w, params.nms_kernel, params.nms_threshold,
                            params.nms_top_k);
  const AssignResult assign = assign_instances(mask, offsets, out.centers, cfg.h, cfg.w);
  out.unassigned_cells = assign.unassigned;

  for (size_t i = 0; i < n; ++i) {
    const int32_t slot = map.point_slot[i];
    if (slot < 0 || !tax.thing(out.labels.semantic[i])) continue;
    const CellIndex& ci = map.cells[static_cast<size_t>(slot)].idx;
    const int32_t id = assign.ids[static_cast<size_t>(ci.r) * cfg.w + ci.c];
    out.labels.instance[i] = static_cast<uint32_t>(id);
  }

  std::vector<int32_t> group_of(n);
  for (size_t i = 0; i < n; ++i) group_of[i] = static_cast<int32_t>(out.labels.instance[i]);
  const auto votes = majority_vote(pred.p, group_of, tax);
  std::map<int32_t, int> voted;
  for (const auto& [g, cls] : votes) voted[g] = cls;
  for (size_t i = 0; i < n; ++i) {
    const int32_t g = group_of[i];
    if (g > 0) out.labels.semantic[i] = voted[g];
  }

  // contiguous instance ids {1..m}, ascending by original center index
  std::map<uint32_t, uint32_t> remap;
  for (const auto& [g, cls] : votes) remap[static_cast<uint32_t>(g)] = 0;
  uint32_t next = 1;
  for (auto& [old_id, new_id] : remap) new_id = next++;
  for (size_t i = 0; i < n; ++i) {
    if (out.labels.instance[i] > 0) out.labels.instance[i] = remap[out.labels.instance[i]];
  }
  return out;
}

}  // namespace evpan
