#pragma once

#include <cstdint>
#include <vector>

#include "evpan/core.hpp"
#include "evpan/io.hpp"

namespace evpan {

// Deterministic synthetic street scene: a road disc, sidewalk sectors,
// and crude car / person / pole / trunk / traffic-sign shapes with
// unique instance ids. Geometry is deliberately simple; the pipeline
// consumes points, not shapes.
struct SceneSpec {
  uint64_t seed = 1;
  int cars = 3, persons = 2, poles = 2, trunks = 2, signs = 1;
  int sidewalk_sectors = 2;
  int road_points = 12000, sidewalk_points = 3000;
  int points_per_car = 500, points_per_person = 150, points_per_pole = 80,
      points_per_trunk = 100, points_per_sign = 60;
  int oor_stragglers = 0;  // extra road points beyond the grid range
  double ground_z = -1.8;

  static SceneSpec from_params(const SynthParams& p);
};

struct Scene {
  PointCloud cloud;
  PanopticLabelSet labels;
};

Scene gen_scene(const SceneSpec& spec, uint64_t seed, const ClassTaxonomy& tax);

// How simulated predictions deviate from the ground truth. In calibrated
// mode each point draws a true-class probability q, keeps its label with
// probability q and reports confidence q, so per-bin accuracy matches
// confidence in expectation (exactly balanced when confusion targets
// form equal-mass symmetric pairs). Overconfident(gamma) raises the
// reported confidence to q^(1/gamma) while errors stay at rate 1-q.
struct CorruptionSpec {
  enum class Mode { calibrated, overconfident, underconfident };
  Mode mode = Mode::calibrated;
  double gamma = 3.0;
  double q_lo = 0.7, q_hi = 0.99;
  double evidence_scale = 1.0;          // != 1 decouples u from 1-q on purpose
  std::vector<double> flip_scale;       // per class, scales the 1-q error rate
  std::vector<int> confusion_target;    // per class

  // symmetric stuff pairs in train-id order, things flip to the first
  // stuff class; flip_scale filled with the global value
  static CorruptionSpec defaults(const ClassTaxonomy& tax, const CorruptParams& p);
};

struct SimPrediction {
  DirichletField alpha;           // per point; argmax row equals semantic
  std::vector<int32_t> semantic;  // predicted class (ignore passes through)
  std::vector<uint32_t> instance;
};

SimPrediction simulate_predictions(const PanopticLabelSet& labels, const CorruptionSpec& spec,
                                   const ClassTaxonomy& tax, uint64_t seed);

// Exact fusion inputs derived from the ground truth: per occupied voxel a
// near-one-hot evidence row on the majority gt class, plus the encoded
// center heatmap and offsets. A fusion pass over these reconstructs the
// gt partition when no voxel mixes classes.
struct FusionInputs {
  DirichletField cell_alpha;     // over occupied cells
  std::vector<double> heatmap;   // h*w
  std::vector<double> offsets;   // h*w*2
};

FusionInputs make_fusion_inputs(const PanopticLabelSet& labels, const VoxelIndexMap& map,
                                const GridConfig& cfg, const ClassTaxonomy& tax, double sigma,
                                double evidence = 100.0);

}  // namespace evpan
