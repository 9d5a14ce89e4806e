#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "evpan/evidential.hpp"
#include "evpan/fusion.hpp"
#include "evpan/synth.hpp"
#include "oracles.hpp"

using namespace evpan;

TEST_CASE("nms_centers basics") {
  SUBCASE("all-zero heatmap yields nothing") {
    std::vector<double> heat(10 * 10, 0.0);
    CHECK(nms_centers(heat, 10, 10).empty());
  }
  SUBCASE("a single spike survives") {
    std::vector<double> heat(10 * 10, 0.0);
    heat[3 * 10 + 7] = 1.0;
    const auto c = nms_centers(heat, 10, 10);
    REQUIRE(c.size() == 1);
    CHECK(c[0] == Center{3, 7, 1.0});
  }
  SUBCASE("the larger of two spikes inside one kernel survives") {
    std::vector<double> heat(10 * 10, 0.0);
    heat[5 * 10 + 4] = 0.8;
    heat[5 * 10 + 6] = 0.9;
    const auto c = nms_centers(heat, 10, 10);
    REQUIRE(c.size() == 1);
    CHECK(c[0].c == 6);
  }
  SUBCASE("equal spikes keep only the lexicographic first") {
    std::vector<double> heat(10 * 10, 0.0);
    heat[5 * 10 + 4] = 0.9;
    heat[5 * 10 + 6] = 0.9;
    const auto c = nms_centers(heat, 10, 10);
    REQUIRE(c.size() == 1);
    CHECK(c[0].c == 4);
  }
  SUBCASE("threshold is strict") {
    std::vector<double> heat(10 * 10, 0.1);
    CHECK(nms_centers(heat, 10, 10, 5, 0.1).empty());
  }
  SUBCASE("angular wrap suppresses across the seam") {
    std::vector<double> heat(6 * 12, 0.0);
    heat[2 * 12 + 0] = 0.8;
    heat[2 * 12 + 11] = 0.9;  // inside the wrapped kernel window
    const auto c = nms_centers(heat, 6, 12);
    REQUIRE(c.size() == 1);
    CHECK(c[0].c == 11);
  }
}

TEST_CASE("nms_centers equals the brute-force oracle on random grids") {
  Rng rng(404);
  for (int trial = 0; trial < 60; ++trial) {
    const int h = 3 + static_cast<int>(rng.uniform_int(18));
    const int w = 3 + static_cast<int>(rng.uniform_int(18));
    std::vector<double> heat(static_cast<size_t>(h) * w);
    for (double& v : heat) v = std::floor(rng.uniform() * 8.0) / 8.0;  // force ties
    const int top_k = 1 + static_cast<int>(rng.uniform_int(20));
    const auto got = nms_centers(heat, h, w, 5, 0.1, top_k);
    const auto want = oracles::naive_nms(heat, h, w, 5, 0.1, top_k);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].r == want[i].r);
      CHECK(got[i].c == want[i].c);
      CHECK(got[i].score == want[i].score);
    }
  }
}

namespace {

PointCloud cell_cloud(const GridConfig& cfg, const std::vector<CellIndex>& cells) {
  PointCloud c;
  for (const auto& ci : cells) {
    const double rad = cfg.r_min + (ci.r + 0.5) * (cfg.r_max - cfg.r_min) / cfg.h;
    const double th = (ci.c + 0.5) * 2.0 * std::numbers::pi / cfg.w;
    const double z = cfg.z_min + (ci.z + 0.5) * (cfg.z_max - cfg.z_min) / cfg.z;
    c.x.push_back(static_cast<float>(rad * std::cos(th)));
    c.y.push_back(static_cast<float>(rad * std::sin(th)));
    c.z.push_back(static_cast<float>(z));
    c.remission.push_back(0.5f);
  }
  return c;
}

}  // namespace

TEST_CASE("foreground_mask definition") {
  const auto tax = ClassTaxonomy::semantic_kitti();
  GridConfig cfg;
  const auto cloud = cell_cloud(cfg, {{10, 5, 2}, {10, 5, 9}, {40, 80, 3}});
  const auto map = voxelize(cloud, cfg);
  REQUIRE(map.occupied() == 3);

  SUBCASE("stuff-only column is background, one thing voxel flips it") {
    std::vector<int32_t> classes = {8, 8, 8};  // road everywhere
    auto mask = foreground_mask(map, classes, cfg, tax);
    CHECK(mask[10u * cfg.w + 5u] == 0);
    classes[1] = 0;  // one car voxel at any z
    mask = foreground_mask(map, classes, cfg, tax);
    CHECK(mask[10u * cfg.w + 5u] == 1);
    CHECK(mask[40u * cfg.w + 80u] == 0);
  }
  SUBCASE("random grid against the direct definition") {
    Rng rng(7);
    GridConfig small;
    small.h = 12;
    small.w = 16;
    small.z = 4;
    std::vector<CellIndex> cells;
    for (int i = 0; i < 60; ++i) {
      cells.push_back({static_cast<int>(rng.uniform_int(12)),
                       static_cast<int>(rng.uniform_int(16)),
                       static_cast<int>(rng.uniform_int(4))});
    }
    const auto cl = cell_cloud(small, cells);
    const auto m = voxelize(cl, small);
    std::vector<int32_t> classes(m.occupied());
    for (auto& c : classes) c = static_cast<int32_t>(rng.uniform_int(19));
    const auto mask = foreground_mask(m, classes, small, tax);
    std::vector<uint8_t> want(small.bev_cells(), 0);
    for (size_t s = 0; s < m.occupied(); ++s) {
      if (tax.thing(classes[s]))
        want[static_cast<size_t>(m.cells[s].idx.r) * small.w + m.cells[s].idx.c] = 1;
    }
    CHECK(mask == want);
  }
}

TEST_CASE("assign_instances") {
  const int h = 20, w = 24;
  std::vector<uint8_t> mask(static_cast<size_t>(h) * w, 0);
  std::vector<double> offsets(static_cast<size_t>(h) * w * 2, 0.0);

  SUBCASE("single center claims every masked cell") {
    mask[5u * w + 3u] = 1;
    mask[9u * w + 20u] = 1;
    const CenterSet centers = {{7, 7, 1.0}};
    const auto a = assign_instances(mask, offsets, centers, h, w);
    CHECK(a.ids[5u * w + 3u] == 1);
    CHECK(a.ids[9u * w + 20u] == 1);
    CHECK(a.ids[0] == 0);
    CHECK(a.unassigned == 0);
  }
  SUBCASE("empty center set leaves cells unassigned, counted") {
    mask[5u * w + 3u] = 1;
    const auto a = assign_instances(mask, offsets, {}, h, w);
    CHECK(a.ids[5u * w + 3u] == 0);
    CHECK(a.unassigned == 1);
  }
  SUBCASE("zero offsets give the Voronoi partition (oracle check)") {
    Rng rng(11);
    for (auto& m : mask) m = rng.uniform() < 0.4 ? 1 : 0;
    const CenterSet centers = {{3, 4, 1.0}, {15, 18, 0.9}, {10, 2, 0.8}};
    const auto a = assign_instances(mask, offsets, centers, h, w);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const size_t cell = static_cast<size_t>(r) * w + c;
        if (!mask[cell]) {
          CHECK(a.ids[cell] == 0);
          continue;
        }
        int best = -1;
        double best_d = 0.0;
        for (size_t j = 0; j < centers.size(); ++j) {
          const double dr = r - static_cast<double>(centers[j].r);
          double dc = std::fabs(c - static_cast<double>(centers[j].c));
          dc = std::min(dc, w - dc);
          const double d2 = dr * dr + dc * dc;
          if (best < 0 || d2 < best_d) {
            best_d = d2;
            best = static_cast<int>(j);
          }
        }
        CHECK(a.ids[cell] == best + 1);
      }
    }
  }
  SUBCASE("offsets wrap across the angular seam") {
    mask.assign(mask.size(), 0);
    const size_t cell = 5u * w + (w - 1u);
    mask[cell] = 1;
    offsets[cell * 2 + 1] = 2.0;  // shifts to column 1
    const CenterSet centers = {{5, 1, 1.0}, {5, w - 4, 0.9}};
    const auto a = assign_instances(mask, offsets, centers, h, w);
    CHECK(a.ids[cell] == 1);
  }
}

TEST_CASE("majority_vote") {
  const auto tax = ClassTaxonomy::semantic_kitti();
  SUBCASE("single point group takes its argmax thing class") {
    Mat p(1, 19);
    p.at(0, 5) = 0.9;  // person
    p.at(0, 8) = 0.1;
    const std::vector<int32_t> groups = {1};
    const auto v = majority_vote(p, groups, tax);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == std::pair<int32_t, int>{1, 5});
  }
  SUBCASE("random groups against the direct-sum oracle") {
    Rng rng(3);
    const size_t n = 200;
    Mat p(n, 19);
    for (double& x : p.v) x = rng.uniform();
    std::vector<int32_t> groups(n);
    for (auto& g : groups) g = static_cast<int32_t>(rng.uniform_int(5));  // 0 = none
    const auto got = majority_vote(p, groups, tax);
    std::map<int32_t, std::vector<double>> sums;
    for (size_t i = 0; i < n; ++i) {
      if (groups[i] <= 0) continue;
      auto& acc = sums[groups[i]];
      acc.resize(19, 0.0);
      for (int c = 0; c < 19; ++c) acc[static_cast<size_t>(c)] += p.at(i, c);
    }
    REQUIRE(got.size() == sums.size());
    for (const auto& [g, cls] : got) {
      int best = -1;
      double bv = 0;
      for (int c = 0; c < 19; ++c) {
        if (!tax.thing(c)) continue;
        if (best < 0 || sums[g][static_cast<size_t>(c)] > bv) {
          bv = sums[g][static_cast<size_t>(c)];
          best = c;
        }
      }
      CHECK(cls == best);
    }
  }
}

TEST_CASE("majority_vote sum check") {
  const auto tax = ClassTaxonomy::semantic_kitti();
  Mat p(3, 19);
  p.at(0, 0) = 0.6;
  p.at(0, 5) = 0.4;
  p.at(1, 0) = 0.6;
  p.at(1, 5) = 0.4;
  p.at(2, 0) = 0.1;
  p.at(2, 5) = 0.9;
  const std::vector<int32_t> groups = {4, 4, 4};
  const auto v = majority_vote(p, groups, tax);
  REQUIRE(v.size() == 1);
  CHECK(v[0].second == 5);  // person sums to 1.7, car to 1.3
}

namespace {

struct Fixture {
  Scene scene;
  VoxelIndexMap map;
  FusionInputs inputs;
};

Fixture make_fixture(const GridConfig& cfg, const ClassTaxonomy& tax, uint64_t seed,
                     int oor = 0) {
  SceneSpec spec;
  spec.cars = 3;
  spec.persons = 2;
  spec.road_points = 4000;
  spec.sidewalk_points = 1200;
  spec.oor_stragglers = oor;
  Fixture f;
  f.scene = gen_scene(spec, seed, tax);
  f.map = voxelize(f.scene.cloud, cfg);
  f.inputs = make_fusion_inputs(f.scene.labels, f.map, cfg, tax, 5.0);
  return f;
}

}  // namespace

TEST_CASE("fuse reconstructs a clean synthetic scene") {
  const GridConfig cfg;
  const auto tax = ClassTaxonomy::semantic_kitti();
  const auto f = make_fixture(cfg, tax, 2024, 5);

  const auto result = fuse(f.inputs.cell_alpha, f.inputs.heatmap, f.inputs.offsets, f.map, cfg,
                           tax, FusionParams{});

  // semantic reconstruction; out-of-range points become ignore with u = 1
  size_t sem_errors = 0;
  for (size_t i = 0; i < f.scene.cloud.size(); ++i) {
    if (f.map.point_slot[i] < 0) {
      CHECK(result.labels.semantic[i] == tax.ignore_id);
      CHECK(result.u[i] == 1.0);
      continue;
    }
    if (result.labels.semantic[i] != f.scene.labels.semantic[i]) ++sem_errors;
  }
  CHECK(sem_errors == 0);

  // instance partition equals the gt partition up to id renaming
  std::map<uint32_t, std::set<uint32_t>> gt_to_pred;
  for (size_t i = 0; i < f.scene.cloud.size(); ++i) {
    if (f.map.point_slot[i] < 0) continue;
    if (f.scene.labels.instance[i] != 0) {
      gt_to_pred[f.scene.labels.instance[i]].insert(result.labels.instance[i]);
    } else {
      CHECK(result.labels.instance[i] == 0);
    }
  }
  CHECK(gt_to_pred.size() == 5);  // 3 cars + 2 persons
  std::set<uint32_t> used;
  for (const auto& [g, preds] : gt_to_pred) {
    REQUIRE(preds.size() == 1);
    const uint32_t pid = *preds.begin();
    CHECK(pid != 0);
    CHECK(!used.count(pid));
    used.insert(pid);
  }

  // contiguity of emitted ids
  uint32_t max_id = 0;
  for (const uint32_t id : result.labels.instance) max_id = std::max(max_id, id);
  CHECK(used.size() == max_id);

  // determinism
  const auto again = fuse(f.inputs.cell_alpha, f.inputs.heatmap, f.inputs.offsets, f.map, cfg,
                          tax, FusionParams{});
  CHECK(again.labels.semantic == result.labels.semantic);
  CHECK(again.labels.instance == result.labels.instance);
  CHECK(again.u == result.u);
}

TEST_CASE("fuse with no centers gives a pure semantic output") {
  const GridConfig cfg;
  const auto tax = ClassTaxonomy::semantic_kitti();
  auto f = make_fixture(cfg, tax, 99);
  std::fill(f.inputs.heatmap.begin(), f.inputs.heatmap.end(), 0.0);

  const auto result = fuse(f.inputs.cell_alpha, f.inputs.heatmap, f.inputs.offsets, f.map, cfg,
                           tax, FusionParams{});
  for (const uint32_t id : result.labels.instance) CHECK(id == 0);
  CHECK(result.unassigned_cells > 0);
  size_t sem_errors = 0;
  for (size_t i = 0; i < f.scene.cloud.size(); ++i) {
    if (f.map.point_slot[i] < 0) continue;
    if (result.labels.semantic[i] != f.scene.labels.semantic[i]) ++sem_errors;
  }
  CHECK(sem_errors == 0);
}

TEST_CASE("vote coherence when an instance argmaxes to two thing classes") {
  const GridConfig cfg;
  const auto tax = ClassTaxonomy::semantic_kitti();

  // one instance spread over two BEV cells, one voxel says car, the other truck
  const auto cloud = cell_cloud(cfg, {{100, 50, 12}, {100, 51, 12}, {100, 51, 12}});
  const auto map = voxelize(cloud, cfg);
  REQUIRE(map.occupied() == 2);

  DirichletField alpha(2, tax.k);
  alpha.row(0)[0] = 60.0;  // car voxel, one point
  alpha.row(1)[3] = 80.0;  // truck voxel, two points
  std::vector<double> heat(cfg.bev_cells(), 0.0);
  heat[100u * cfg.w + 50u] = 1.0;
  std::vector<double> offsets(cfg.bev_cells() * 2, 0.0);
  offsets[(100u * cfg.w + 51u) * 2 + 1] = -1.0;

  const auto result = fuse(alpha, heat, offsets, map, cfg, tax, FusionParams{});
  REQUIRE(result.labels.instance == std::vector<uint32_t>{1, 1, 1});
  CHECK(result.labels.semantic[0] == result.labels.semantic[1]);
  CHECK(result.labels.semantic[1] == result.labels.semantic[2]);
  CHECK(result.labels.semantic[0] == 3);  // truck evidence dominates the sum
}
