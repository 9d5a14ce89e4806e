#include "evpan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "evpan/grid.hpp"
#include "evpan/util.hpp"

namespace evpan {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// SemanticKITTI train ids used by the generator
constexpr int kCar = 0;
constexpr int kPerson = 5;
constexpr int kRoad = 8;
constexpr int kSidewalk = 10;
constexpr int kTrunk = 15;
constexpr int kPole = 17;
constexpr int kSign = 18;

struct Builder {
  PointCloud cloud;
  PanopticLabelSet labels;

  void add(double x, double y, double z, double rem, int cls, uint32_t inst) {
    cloud.x.push_back(static_cast<float>(x));
    cloud.y.push_back(static_cast<float>(y));
    cloud.z.push_back(static_cast<float>(z));
    cloud.remission.push_back(static_cast<float>(rem));
    labels.semantic.push_back(cls);
    labels.instance.push_back(inst);
  }
};

struct Placement {
  double x, y;
};

// rejection-sample object centers with pairwise separation
std::vector<Placement> place_objects(Rng& rng, int count, double r_lo, double r_hi,
                                     double min_dist, std::vector<Placement>& taken) {
  std::vector<Placement> out;
  for (int i = 0; i < count; ++i) {
    Placement p{0, 0};
    bool ok = false;
    for (int attempt = 0; attempt < 200 && !ok; ++attempt) {
      const double r = rng.uniform(r_lo, r_hi);
      const double th = rng.uniform(0.0, kTwoPi);
      p = {r * std::cos(th), r * std::sin(th)};
      ok = true;
      for (const Placement& q : taken) {
        const double dx = p.x - q.x, dy = p.y - q.y;
        if (dx * dx + dy * dy < min_dist * min_dist) {
          ok = false;
          break;
        }
      }
    }
    taken.push_back(p);
    out.push_back(p);
  }
  return out;
}

}  // namespace

SceneSpec SceneSpec::from_params(const SynthParams& p) {
  SceneSpec s;
  s.seed = p.seed;
  s.cars = p.cars;
  s.persons = p.persons;
  s.poles = p.poles;
  s.trunks = p.trunks;
  s.signs = p.signs;
  s.sidewalk_sectors = p.sidewalk_sectors;
  s.road_points = p.road_points;
  s.sidewalk_points = p.sidewalk_points;
  s.points_per_car = p.points_per_car;
  s.points_per_person = p.points_per_person;
  s.points_per_pole = p.points_per_pole;
  s.points_per_trunk = p.points_per_trunk;
  s.points_per_sign = p.points_per_sign;
  s.oor_stragglers = p.oor_stragglers;
  return s;
}

Scene gen_scene(const SceneSpec& spec, uint64_t seed, const ClassTaxonomy& tax) {
  (void)tax;
  Rng rng(seed);
  Builder b;
  uint32_t next_instance = 1;

  // road disc on the ground plane
  for (int i = 0; i < spec.road_points; ++i) {
    const double r = std::sqrt(rng.uniform(3.2 * 3.2, 48.0 * 48.0));  // uniform by area
    const double th = rng.uniform(0.0, kTwoPi);
    const double z = spec.ground_z + rng.uniform(-0.03, 0.03);
    b.add(r * std::cos(th), r * std::sin(th), z, rng.uniform(), kRoad, 0);
  }

  // sidewalk annulus sectors, slightly raised
  for (int s = 0; s < spec.sidewalk_sectors; ++s) {
    const double r0 = rng.uniform(8.0, 35.0);
    const double th0 = rng.uniform(0.0, kTwoPi);
    const double span = rng.uniform(0.5, 1.2);
    const int pts = spec.sidewalk_points / std::max(1, spec.sidewalk_sectors);
    for (int i = 0; i < pts; ++i) {
      const double r = rng.uniform(r0, r0 + 3.0);
      const double th = th0 + rng.uniform(0.0, span);
      const double z = spec.ground_z + 0.12 + rng.uniform(-0.02, 0.02);
      b.add(r * std::cos(th), r * std::sin(th), z, rng.uniform(), kSidewalk, 0);
    }
  }

  std::vector<Placement> taken;
  const auto car_pos = place_objects(rng, spec.cars, 7.0, 42.0, 7.0, taken);
  const auto person_pos = place_objects(rng, spec.persons, 6.0, 40.0, 7.0, taken);
  const auto pole_pos = place_objects(rng, spec.poles, 6.0, 42.0, 7.0, taken);
  const auto trunk_pos = place_objects(rng, spec.trunks, 8.0, 42.0, 7.0, taken);
  const auto sign_pos = place_objects(rng, spec.signs, 6.0, 40.0, 7.0, taken);

  // cars: yawed boxes ~ 4.0 x 1.9, off the ground band
  for (const Placement& p : car_pos) {
    const double yaw = rng.uniform(0.0, kTwoPi);
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    const uint32_t inst = next_instance++;
    for (int i = 0; i < spec.points_per_car; ++i) {
      const double lx = rng.uniform(-2.0, 2.0);
      const double ly = rng.uniform(-0.95, 0.95);
      const double z = rng.uniform(-1.2, -0.1);
      b.add(p.x + lx * cy - ly * sy, p.y + lx * sy + ly * cy, z, rng.uniform(), kCar, inst);
    }
  }

  // persons: cylinders radius 0.3
  for (const Placement& p : person_pos) {
    const uint32_t inst = next_instance++;
    for (int i = 0; i < spec.points_per_person; ++i) {
      const double ang = rng.uniform(0.0, kTwoPi);
      const double rad = 0.3 * std::sqrt(rng.uniform());
      b.add(p.x + rad * std::cos(ang), p.y + rad * std::sin(ang), rng.uniform(-1.5, 0.1),
            rng.uniform(), kPerson, inst);
    }
  }

  // poles and trunks: vertical lines (stuff, no instances)
  for (const Placement& p : pole_pos) {
    for (int i = 0; i < spec.points_per_pole; ++i) {
      const double ang = rng.uniform(0.0, kTwoPi);
      const double rad = 0.08 * std::sqrt(rng.uniform());
      b.add(p.x + rad * std::cos(ang), p.y + rad * std::sin(ang), rng.uniform(-1.5, 1.4),
            rng.uniform(), kPole, 0);
    }
  }
  for (const Placement& p : trunk_pos) {
    for (int i = 0; i < spec.points_per_trunk; ++i) {
      const double ang = rng.uniform(0.0, kTwoPi);
      const double rad = 0.25 * std::sqrt(rng.uniform());
      b.add(p.x + rad * std::cos(ang), p.y + rad * std::sin(ang), rng.uniform(-1.5, 0.5),
            rng.uniform(), kTrunk, 0);
    }
  }

  // traffic signs: small panels at eye height
  for (const Placement& p : sign_pos) {
    const double yaw = rng.uniform(0.0, kTwoPi);
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    for (int i = 0; i < spec.points_per_sign; ++i) {
      const double lx = rng.uniform(-0.3, 0.3);
      const double ly = rng.uniform(-0.03, 0.03);
      b.add(p.x + lx * cy - ly * sy, p.y + lx * sy + ly * cy, rng.uniform(0.5, 1.1),
            rng.uniform(), kSign, 0);
    }
  }

  // stragglers beyond the grid range keep per-point arrays honest
  for (int i = 0; i < spec.oor_stragglers; ++i) {
    const double r = rng.uniform(55.0, 70.0);
    const double th = rng.uniform(0.0, kTwoPi);
    b.add(r * std::cos(th), r * std::sin(th), spec.ground_z, rng.uniform(), kRoad, 0);
  }

  return {std::move(b.cloud), std::move(b.labels)};
}

CorruptionSpec CorruptionSpec::defaults(const ClassTaxonomy& tax, const CorruptParams& p) {
  CorruptionSpec s;
  if (p.mode == "overconfident") s.mode = Mode::overconfident;
  else if (p.mode == "underconfident") s.mode = Mode::underconfident;
  else s.mode = Mode::calibrated;
  s.gamma = p.gamma;
  s.q_lo = p.q_lo;
  s.q_hi = p.q_hi;
  s.evidence_scale = p.evidence_scale;
  s.flip_scale.assign(static_cast<size_t>(tax.k), p.flip_scale);
  s.confusion_target.assign(static_cast<size_t>(tax.k), 0);

  std::vector<int> stuff;
  for (int c = 0; c < tax.k; ++c)
    if (!tax.thing(c)) stuff.push_back(c);
  if (stuff.empty()) {
    for (int c = 0; c < tax.k; ++c) s.confusion_target[static_cast<size_t>(c)] = c;
    return s;
  }
  for (int c = 0; c < tax.k; ++c) s.confusion_target[static_cast<size_t>(c)] = stuff[0];
  for (size_t i = 0; i + 1 < stuff.size(); i += 2) {
    s.confusion_target[static_cast<size_t>(stuff[i])] = stuff[i + 1];
    s.confusion_target[static_cast<size_t>(stuff[i + 1])] = stuff[i];
  }
  if (stuff.size() % 2 == 1) {
    s.confusion_target[static_cast<size_t>(stuff.back())] = stuff[0];
  }
  return s;
}

SimPrediction simulate_predictions(const PanopticLabelSet& labels, const CorruptionSpec& spec,
                                   const ClassTaxonomy& tax, uint64_t seed) {
  const size_t n = labels.size();
  const int k = tax.k;
  if (spec.flip_scale.size() != static_cast<size_t>(k) ||
      spec.confusion_target.size() != static_cast<size_t>(k)) {
    throw std::invalid_argument("simulate_predictions: spec arrays do not match the taxonomy");
  }
  Rng rng(seed);
  SimPrediction out;
  out.alpha = DirichletField(n, k);
  out.semantic.resize(n);
  out.instance.assign(n, 0);

  for (size_t i = 0; i < n; ++i) {
    const int gt = labels.semantic[i];
    if (gt == tax.ignore_id) {
      out.semantic[i] = tax.ignore_id;  // alpha row stays all-ones, u = 1
      continue;
    }
    const double q = rng.uniform(spec.q_lo, spec.q_hi);
    const bool keep =
        rng.uniform() >= spec.flip_scale[static_cast<size_t>(gt)] * (1.0 - q);
    const int pred = keep ? gt : spec.confusion_target[static_cast<size_t>(gt)];

    double conf = q;
    if (spec.mode == CorruptionSpec::Mode::overconfident) conf = std::pow(q, 1.0 / spec.gamma);
    if (spec.mode == CorruptionSpec::Mode::underconfident) conf = std::pow(q, spec.gamma);
    conf = std::min(conf, 1.0 - 1e-9);

    // invert p = alpha/S, u = K/S: S = K/(1-conf), predicted entry conf*S,
    // the remaining mass spread evenly
    const double s = static_cast<double>(k) / (1.0 - conf);
    const double rest = (1.0 - conf) * s / static_cast<double>(k - 1);
    double* row = out.alpha.row(i);
    for (int c = 0; c < k; ++c) row[c] = rest;
    row[pred] = conf * s;
    if (spec.evidence_scale != 1.0) {
      for (int c = 0; c < k; ++c) row[c] = 1.0 + spec.evidence_scale * (row[c] - 1.0);
    }
    out.semantic[i] = pred;
    out.instance[i] = tax.thing(pred) ? labels.instance[i] : 0;
  }
  return out;
}

FusionInputs make_fusion_inputs(const PanopticLabelSet& labels, const VoxelIndexMap& map,
                                const GridConfig& cfg, const ClassTaxonomy& tax, double sigma,
                                double evidence) {
  FusionInputs out;
  out.cell_alpha = DirichletField(map.cells.size(), tax.k);

  int stuff_fallback = 0;
  for (int c = 0; c < tax.k; ++c) {
    if (!tax.thing(c)) {
      stuff_fallback = c;
      break;
    }
  }
  std::vector<int> counts(static_cast<size_t>(tax.k));
  for (size_t s = 0; s < map.cells.size(); ++s) {
    std::fill(counts.begin(), counts.end(), 0);
    for (const int32_t i : map.cells[s].points) {
      const int cls = labels.semantic[static_cast<size_t>(i)];
      if (cls >= 0 && cls < tax.k) ++counts[static_cast<size_t>(cls)];
    }
    int best = stuff_fallback;  // cells holding only ignore points stay stuff
    int best_count = 0;
    for (int c = 0; c < tax.k; ++c) {
      if (counts[static_cast<size_t>(c)] > best_count) {
        best_count = counts[static_cast<size_t>(c)];
        best = c;
      }
    }
    out.cell_alpha.row(s)[best] = 1.0 + evidence;
  }

  const InstanceTargets targets = encode_instance_targets(labels, map, cfg, tax, sigma);
  out.heatmap = targets.heatmap;
  out.offsets = targets.offsets;
  return out;
}

}  // namespace evpan
