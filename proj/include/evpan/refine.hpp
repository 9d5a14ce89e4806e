#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evpan/core.hpp"
#include "evpan/util.hpp"

namespace evpan {

// Exact 3D k-d tree. Queries rank neighbours by (squared distance, point
// index), so results are deterministic even with duplicate coordinates
// and always match the brute-force ordering.
class KdTree {
 public:
  KdTree() = default;
  KdTree(std::span<const float> x, std::span<const float> y, std::span<const float> z);
  KdTree(std::span<const double> x, std::span<const double> y, std::span<const double> z);

  struct Neighbor {
    int32_t index;
    double d2;
  };

  // k nearest to the stored point `query`, excluding the query itself
  std::vector<Neighbor> knn(int32_t query, size_t k) const;
  // k nearest to an arbitrary position (no exclusion)
  std::vector<Neighbor> knn(double qx, double qy, double qz, size_t k,
                            int32_t exclude = -1) const;
  // indices within radius of an arbitrary position, ascending index
  std::vector<int32_t> radius(double qx, double qy, double qz, double radius) const;

  size_t size() const { return px_.size(); }

 private:
  struct Node {
    int32_t left = -1, right = -1;
    int32_t begin = 0, end = 0;  // leaf range into order_
    int8_t axis = -1;            // -1 for leaves
    double split = 0.0;
    double lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
  };

  int32_t build(int32_t begin, int32_t end);
  double coord(int32_t idx, int axis) const;

  std::vector<double> px_, py_, pz_;
  std::vector<int32_t> order_;
  std::vector<Node> nodes_;
  int32_t root_ = -1;
};

// indices with max_k p < threshold, ascending
std::vector<int32_t> pknn_select(const Mat& p, double threshold);

struct PknnStats {
  size_t selected = 0;
  size_t changed = 0;
  double seconds = 0.0;
  bool skipped = false;  // cloud smaller than k+1
};

struct PknnResult {
  PanopticLabelSet labels;
  std::vector<double> u;
  PknnStats stats;
};

// Probability-gated KNN relabeling. Selected points take the majority
// label of their k nearest neighbours, voting with the pre-refinement
// snapshot so the result is independent of point order; vote ties go to
// the label of the nearest tied voter. When the label changes, the
// uncertainty (and, for thing classes, the instance id) of the nearest
// neighbour voting for the winning label is transferred.
PknnResult pknn_refine(const PointCloud& cloud, const PanopticLabelSet& labels, const Mat& p,
                       std::span<const double> u, int k = 5, double threshold = 0.4);

// indices of the n_top largest uncertainties (ties -> lower index),
// ascending index order
std::vector<int32_t> uqr_select(std::span<const double> u, size_t n_top);

// n x (K+5) rows: p, x, y, z, remission, u
Mat assemble_features(const Mat& p, const PointCloud& cloud, std::span<const double> u);

// Single point-convolution layer: weights attached to kernel points in
// 3D, linear influence falloff, followed by ReLU and a linear classifier.
struct KPConvLayer {
  int m = 15;        // kernel points
  int c_mid = 64;    // hidden width
  int k = 19;        // classes
  int in_dim = 24;   // k + 5
  double sigma = 0.6;
  double radius = 1.2;
  std::vector<double> kernel_pts;  // m x 3 offsets, inside the influence ball
  std::vector<double> weights;     // m x in_dim x c_mid
  std::vector<double> cls_w;       // c_mid x k
  std::vector<double> cls_b;       // k

  // deterministic init: kernel point 0 at the origin, the rest on a
  // Fibonacci sphere of radius sigma; weights seeded Gaussian
  static KPConvLayer random_init(int k, int m, int c_mid, double radius, double sigma,
                                 uint64_t seed);
};

void save_kpconv(const std::string& path, const KPConvLayer& layer);
KPConvLayer load_kpconv(const std::string& path);

struct KpconvOutput {
  DirichletField alpha;             // per selected point
  std::vector<double> u;            // per selected point
  std::vector<uint8_t> passthrough; // 1 where the point had no neighbours
  size_t passthrough_count = 0;
};

// Forward pass over the selected subset; neighbourhoods are searched
// within the subset only. Points with no neighbour in radius pass
// through unchanged (counted).
KpconvOutput kpconv_forward(const Mat& features, std::span<const double> xs,
                            std::span<const double> ys, std::span<const double> zs,
                            const KPConvLayer& layer);

struct UqrStats {
  size_t selected = 0;
  size_t passthrough = 0;
  size_t refined = 0;  // selected minus passthrough
};

struct UqrResult {
  PanopticLabelSet labels;
  DirichletField alpha;
  std::vector<double> u;
  UqrStats stats;
};

// Select the n_top most uncertain points, re-predict them with the
// KPConv layer and splice class/alpha/u back; instance ids and
// unselected points stay untouched.
UqrResult uqr_refine(const PointCloud& cloud, const PanopticLabelSet& labels,
                     const DirichletField& point_alpha, std::span<const double> u,
                     const KPConvLayer& layer, size_t n_top);

// Desk-scale fit of the classifier part only (conv weights stay fixed):
// gradient descent on the mean evidential semantic loss of the conv
// features against the given labels.
void fit_uqr_classifier(KPConvLayer& layer, const Mat& features, std::span<const double> xs,
                        std::span<const double> ys, std::span<const double> zs,
                        std::span<const int32_t> labels, int epochs, double lr, uint64_t seed);

}  // namespace evpan
