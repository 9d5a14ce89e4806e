#include "evpan/refine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <queue>
#include <stdexcept>

#include "evpan/evidential.hpp"
#include "evpan/kernels.hpp"

namespace evpan {

namespace {
constexpr int kLeafSize = 16;
}

KdTree::KdTree(std::span<const float> x, std::span<const float> y, std::span<const float> z) {
  px_.assign(x.begin(), x.end());
  py_.assign(y.begin(), y.end());
  pz_.assign(z.begin(), z.end());
  order_.resize(px_.size());
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int32_t>(i);
  if (!order_.empty()) root_ = build(0, static_cast<int32_t>(order_.size()));
}

KdTree::KdTree(std::span<const double> x, std::span<const double> y, std::span<const double> z) {
  px_.assign(x.begin(), x.end());
  py_.assign(y.begin(), y.end());
  pz_.assign(z.begin(), z.end());
  order_.resize(px_.size());
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int32_t>(i);
  if (!order_.empty()) root_ = build(0, static_cast<int32_t>(order_.size()));
}

double KdTree::coord(int32_t idx, int axis) const {
  switch (axis) {
    case 0: return px_[static_cast<size_t>(idx)];
    case 1: return py_[static_cast<size_t>(idx)];
    default: return pz_[static_cast<size_t>(idx)];
  }
}

int32_t KdTree::build(int32_t begin, int32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  for (int a = 0; a < 3; ++a) {
    node.lo[a] = coord(order_[static_cast<size_t>(begin)], a);
    node.hi[a] = node.lo[a];
  }
  for (int32_t j = begin + 1; j < end; ++j) {
    for (int a = 0; a < 3; ++a) {
      const double v = coord(order_[static_cast<size_t>(j)], a);
      node.lo[a] = std::min(node.lo[a], v);
      node.hi[a] = std::max(node.hi[a], v);
    }
  }
  const int32_t ni = static_cast<int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return ni;

  int axis = 0;
  double width = node.hi[0] - node.lo[0];
  for (int a = 1; a < 3; ++a) {
    if (node.hi[a] - node.lo[a] > width) {
      width = node.hi[a] - node.lo[a];
      axis = a;
    }
  }
  const int32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int32_t a, int32_t b) {
                     const double ca = coord(a, axis), cb = coord(b, axis);
                     if (ca != cb) return ca < cb;
                     return a < b;
                   });
  const double split = coord(order_[static_cast<size_t>(mid)], axis);
  const int32_t left = build(begin, mid);
  const int32_t right = build(mid, end);
  nodes_[static_cast<size_t>(ni)].axis = static_cast<int8_t>(axis);
  nodes_[static_cast<size_t>(ni)].split = split;
  nodes_[static_cast<size_t>(ni)].left = left;
  nodes_[static_cast<size_t>(ni)].right = right;
  return ni;
}

namespace {

struct HeapCmp {
  // priority_queue keeps the worst candidate on top
  bool operator()(const KdTree::Neighbor& a, const KdTree::Neighbor& b) const {
    if (a.d2 != b.d2) return a.d2 < b.d2;
    return a.index < b.index;
  }
};

using Heap = std::priority_queue<KdTree::Neighbor, std::vector<KdTree::Neighbor>, HeapCmp>;

}  // namespace

std::vector<KdTree::Neighbor> KdTree::knn(int32_t query, size_t k) const {
  return knn(px_[static_cast<size_t>(query)], py_[static_cast<size_t>(query)],
             pz_[static_cast<size_t>(query)], k, query);
}

std::vector<KdTree::Neighbor> KdTree::knn(double qx, double qy, double qz, size_t k,
                                          int32_t exclude) const {
  std::vector<Neighbor> result;
  if (root_ < 0 || k == 0) return result;
  const double q[3] = {qx, qy, qz};
  Heap heap;

  auto box_d2 = [&](const Node& node) {
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double d = std::max({0.0, node.lo[a] - q[a], q[a] - node.hi[a]});
      d2 += d * d;
    }
    return d2;
  };

  // candidate strictly better than the current worst under (d2, index)
  auto better = [&](double d2, int32_t idx) {
    if (heap.size() < k) return true;
    const Neighbor& worst = heap.top();
    return d2 < worst.d2 || (d2 == worst.d2 && idx < worst.index);
  };

  auto visit = [&](auto&& self, int32_t ni) -> void {
    const Node& node = nodes_[static_cast<size_t>(ni)];
    if (heap.size() == k && box_d2(node) > heap.top().d2) return;
    if (node.axis < 0) {
      for (int32_t j = node.begin; j < node.end; ++j) {
        const int32_t i = order_[static_cast<size_t>(j)];
        if (i == exclude) continue;
        const double dx = px_[static_cast<size_t>(i)] - qx;
        const double dy = py_[static_cast<size_t>(i)] - qy;
        const double dz = pz_[static_cast<size_t>(i)] - qz;
        const double d2 = dx * dx + dy * dy + dz * dz;
        if (better(d2, i)) {
          heap.push({i, d2});
          if (heap.size() > k) heap.pop();
        }
      }
      return;
    }
    const bool left_first = q[node.axis] <= node.split;
    self(self, left_first ? node.left : node.right);
    self(self, left_first ? node.right : node.left);
  };
  visit(visit, root_);

  result.reserve(heap.size());
  while (!heap.empty()) {
    result.push_back(heap.top());
    heap.pop();
  }
  std::sort(result.begin(), result.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.d2 != b.d2) return a.d2 < b.d2;
    return a.index < b.index;
  });
  return result;
}

std::vector<int32_t> KdTree::radius(double qx, double qy, double qz, double radius) const {
  std::vector<int32_t> out;
  if (root_ < 0 || radius < 0.0) return out;
  const double q[3] = {qx, qy, qz};
  const double r2 = radius * radius;

  auto box_d2 = [&](const Node& node) {
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double d = std::max({0.0, node.lo[a] - q[a], q[a] - node.hi[a]});
      d2 += d * d;
    }
    return d2;
  };

  auto visit = [&](auto&& self, int32_t ni) -> void {
    const Node& node = nodes_[static_cast<size_t>(ni)];
    if (box_d2(node) > r2) return;
    if (node.axis < 0) {
      for (int32_t j = node.begin; j < node.end; ++j) {
        const int32_t i = order_[static_cast<size_t>(j)];
        const double dx = px_[static_cast<size_t>(i)] - qx;
        const double dy = py_[static_cast<size_t>(i)] - qy;
        const double dz = pz_[static_cast<size_t>(i)] - qz;
        if (dx * dx + dy * dy + dz * dz <= r2) out.push_back(i);
      }
      return;
    }
    self(self, node.left);
    self(self, node.right);
  };
  visit(visit, root_);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int32_t> pknn_select(const Mat& p, double threshold) {
  std::vector<int32_t> out;
  for (size_t i = 0; i < p.n; ++i) {
    const double* row = p.row(i);
    double best = row[0];
    for (int c = 1; c < p.k; ++c) best = std::max(best, row[c]);
    if (best < threshold) out.push_back(static_cast<int32_t>(i));
  }
  return out;
}

PknnResult pknn_refine(const PointCloud& cloud, const PanopticLabelSet& labels, const Mat& p,
                       std::span<const double> u, int k, double threshold) {
  const size_t n = cloud.size();
  if (labels.size() != n || p.n != n || u.size() != n) {
    throw std::invalid_argument("pknn_refine: array lengths differ");
  }
  PknnResult out;
  out.labels = labels;
  out.u.assign(u.begin(), u.end());

  const auto t0 = std::chrono::steady_clock::now();
  if (n < static_cast<size_t>(k) + 1) {
    out.stats.skipped = true;
    return out;
  }
  const auto selected = pknn_select(p, threshold);
  out.stats.selected = selected.size();
  if (!selected.empty()) {
    const KdTree tree(cloud.x, cloud.y, cloud.z);
    for (const int32_t idx : selected) {
      const auto neigh = tree.knn(idx, static_cast<size_t>(k));
      // votes use the pre-refinement snapshot in `labels`
      std::map<int32_t, int> votes;
      for (const auto& nb : neigh) ++votes[labels.semantic[static_cast<size_t>(nb.index)]];
      int best_count = 0;
      for (const auto& [lbl, cnt] : votes) best_count = std::max(best_count, cnt);
      // among tied labels, the one whose nearest voter comes first
      int32_t winner = -1;
      int32_t winner_voter = -1;
      for (const auto& nb : neigh) {
        const int32_t lbl = labels.semantic[static_cast<size_t>(nb.index)];
        if (votes[lbl] == best_count) {
          winner = lbl;
          winner_voter = nb.index;
          break;
        }
      }
      if (winner != labels.semantic[static_cast<size_t>(idx)]) {
        out.labels.semantic[static_cast<size_t>(idx)] = winner;
        out.u[static_cast<size_t>(idx)] = u[static_cast<size_t>(winner_voter)];
        out.labels.instance[static_cast<size_t>(idx)] =
            labels.instance[static_cast<size_t>(winner_voter)];
        ++out.stats.changed;
      }
    }
  }
  out.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::vector<int32_t> uqr_select(std::span<const double> u, size_t n_top) {
  std::vector<int32_t> idx(u.size());
  for (size_t i = 0; i < u.size(); ++i) idx[i] = static_cast<int32_t>(i);
  if (n_top < u.size()) {
    std::nth_element(idx.begin(), idx.begin() + static_cast<ptrdiff_t>(n_top), idx.end(),
                     [&](int32_t a, int32_t b) {
                       if (u[static_cast<size_t>(a)] != u[static_cast<size_t>(b)])
                         return u[static_cast<size_t>(a)] > u[static_cast<size_t>(b)];
                       return a < b;
                     });
    idx.resize(n_top);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

Mat assemble_features(const Mat& p, const PointCloud& cloud, std::span<const double> u) {
  if (p.n != cloud.size() || u.size() != p.n) {
    throw std::invalid_argument("assemble_features: array lengths differ");
  }
  Mat f(p.n, p.k + 5);
  for (size_t i = 0; i < p.n; ++i) {
    double* row = f.row(i);
    std::memcpy(row, p.row(i), sizeof(double) * static_cast<size_t>(p.k));
    row[p.k] = cloud.x[i];
    row[p.k + 1] = cloud.y[i];
    row[p.k + 2] = cloud.z[i];
    row[p.k + 3] = cloud.remission[i];
    row[p.k + 4] = u[i];
  }
  return f;
}

KPConvLayer KPConvLayer::random_init(int k, int m, int c_mid, double radius, double sigma,
                                     uint64_t seed) {
  KPConvLayer layer;
  layer.m = m;
  layer.c_mid = c_mid;
  layer.k = k;
  layer.in_dim = k + 5;
  layer.sigma = sigma;
  layer.radius = radius;

  layer.kernel_pts.assign(static_cast<size_t>(m) * 3, 0.0);
  // kernel point 0 at the origin, the rest on a Fibonacci sphere
  constexpr double golden = 2.399963229728653;  // pi * (3 - sqrt(5))
  for (int i = 1; i < m; ++i) {
    const double t = (i - 0.5) / (m - 1);
    const double zc = 1.0 - 2.0 * t;
    const double rc = std::sqrt(std::max(0.0, 1.0 - zc * zc));
    const double phi = golden * i;
    layer.kernel_pts[static_cast<size_t>(i) * 3] = sigma * rc * std::cos(phi);
    layer.kernel_pts[static_cast<size_t>(i) * 3 + 1] = sigma * rc * std::sin(phi);
    layer.kernel_pts[static_cast<size_t>(i) * 3 + 2] = sigma * zc;
  }

  Rng rng(seed);
  const double w_scale = 1.0 / std::sqrt(static_cast<double>(m) * layer.in_dim);
  layer.weights.assign(static_cast<size_t>(m) * layer.in_dim * c_mid, 0.0);
  for (double& w : layer.weights) w = w_scale * rng.gaussian();
  const double c_scale = 1.0 / std::sqrt(static_cast<double>(c_mid));
  layer.cls_w.assign(static_cast<size_t>(c_mid) * k, 0.0);
  for (double& w : layer.cls_w) w = c_scale * rng.gaussian();
  layer.cls_b.assign(static_cast<size_t>(k), 0.0);
  return layer;
}

namespace {

// conv + ReLU hidden features for every point of the subset
struct ConvHidden {
  Mat hidden;  // n x c_mid
  std::vector<uint8_t> passthrough;
  size_t passthrough_count = 0;
};

ConvHidden conv_hidden(const Mat& features, std::span<const double> xs,
                       std::span<const double> ys, std::span<const double> zs,
                       const KPConvLayer& layer) {
  const size_t n = features.n;
  if (xs.size() != n || ys.size() != n || zs.size() != n) {
    throw std::invalid_argument("kpconv: positions do not match the feature rows");
  }
  if (features.k != layer.in_dim) {
    throw std::invalid_argument("kpconv: feature width does not match the layer");
  }
  ConvHidden out;
  out.hidden = Mat(n, layer.c_mid);
  out.passthrough.assign(n, 0);

  KdTree tree(xs, ys, zs);
  std::vector<double> ksum(static_cast<size_t>(layer.m) * layer.in_dim);
  for (size_t q = 0; q < n; ++q) {
    const auto neigh = tree.radius(xs[q], ys[q], zs[q], layer.radius);
    if (neigh.empty()) {
      out.passthrough[q] = 1;
      ++out.passthrough_count;
      continue;
    }
    // s_m = sum_i h_m(x_i - x) * f_i, then hidden = ReLU(sum_m s_m W_m)
    std::fill(ksum.begin(), ksum.end(), 0.0);
    for (const int32_t i : neigh) {
      const double dx = xs[static_cast<size_t>(i)] - xs[q];
      const double dy = ys[static_cast<size_t>(i)] - ys[q];
      const double dz = zs[static_cast<size_t>(i)] - zs[q];
      const double* fi = features.row(static_cast<size_t>(i));
      for (int m = 0; m < layer.m; ++m) {
        const double* kp = layer.kernel_pts.data() + static_cast<size_t>(m) * 3;
        const double ex = dx - kp[0];
        const double ey = dy - kp[1];
        const double ez = dz - kp[2];
        const double dist = std::sqrt(ex * ex + ey * ey + ez * ez);
        const double h = 1.0 - dist / layer.sigma;
        if (h <= 0.0) continue;
        double* sm = ksum.data() + static_cast<size_t>(m) * layer.in_dim;
        for (int f = 0; f < layer.in_dim; ++f) sm[f] += h * fi[f];
      }
    }
    double* hid = out.hidden.row(q);
    for (int m = 0; m < layer.m; ++m) {
      const double* sm = ksum.data() + static_cast<size_t>(m) * layer.in_dim;
      const double* wm = layer.weights.data() +
                         static_cast<size_t>(m) * layer.in_dim * layer.c_mid;
      for (int f = 0; f < layer.in_dim; ++f) {
        const double sv = sm[f];
        if (sv == 0.0) continue;
        const double* wrow = wm + static_cast<size_t>(f) * layer.c_mid;
        for (int c = 0; c < layer.c_mid; ++c) hid[c] += sv * wrow[c];
      }
    }
    for (int c = 0; c < layer.c_mid; ++c) hid[c] = std::max(0.0, hid[c]);
  }
  return out;
}

Logits classifier_logits(const Mat& hidden, const KPConvLayer& layer) {
  Logits l(hidden.n, layer.k);
  for (size_t i = 0; i < hidden.n; ++i) {
    const double* hid = hidden.row(i);
    double* row = l.row(i);
    for (int c = 0; c < layer.k; ++c) row[c] = layer.cls_b[static_cast<size_t>(c)];
    for (int h = 0; h < layer.c_mid; ++h) {
      const double hv = hid[h];
      if (hv == 0.0) continue;
      const double* wrow = layer.cls_w.data() + static_cast<size_t>(h) * layer.k;
      for (int c = 0; c < layer.k; ++c) row[c] += hv * wrow[c];
    }
  }
  return l;
}

}  // namespace

KpconvOutput kpconv_forward(const Mat& features, std::span<const double> xs,
                            std::span<const double> ys, std::span<const double> zs,
                            const KPConvLayer& layer) {
  const ConvHidden conv = conv_hidden(features, xs, ys, zs, layer);
  const Logits logits = classifier_logits(conv.hidden, layer);

  KpconvOutput out;
  out.alpha = alpha_from_logits(logits);
  const Prediction pred = predict(out.alpha);
  out.u = pred.u;
  out.passthrough = conv.passthrough;
  out.passthrough_count = conv.passthrough_count;
  return out;
}

UqrResult uqr_refine(const PointCloud& cloud, const PanopticLabelSet& labels,
                     const DirichletField& point_alpha, std::span<const double> u,
                     const KPConvLayer& layer, size_t n_top) {
  const size_t n = cloud.size();
  if (labels.size() != n || point_alpha.n != n || u.size() != n) {
    throw std::invalid_argument("uqr_refine: array lengths differ");
  }
  UqrResult out;
  out.labels = labels;
  out.alpha = point_alpha;
  out.u.assign(u.begin(), u.end());

  const auto sel = uqr_select(u, n_top);
  out.stats.selected = sel.size();
  if (sel.empty()) return out;

  const Prediction pred = predict(point_alpha);
  const Mat all_features = assemble_features(pred.p, cloud, u);

  Mat sub(sel.size(), all_features.k);
  std::vector<double> xs(sel.size()), ys(sel.size()), zs(sel.size());
  for (size_t j = 0; j < sel.size(); ++j) {
    const size_t i = static_cast<size_t>(sel[j]);
    std::memcpy(sub.row(j), all_features.row(i),
                sizeof(double) * static_cast<size_t>(all_features.k));
    xs[j] = cloud.x[i];
    ys[j] = cloud.y[i];
    zs[j] = cloud.z[i];
  }

  const KpconvOutput refined = kpconv_forward(sub, xs, ys, zs, layer);
  out.stats.passthrough = refined.passthrough_count;
  out.stats.refined = sel.size() - refined.passthrough_count;

  std::vector<int32_t> argmax(sel.size());
  kernels::ops().argmax_rows(refined.alpha.alpha.data(), refined.alpha.n,
                             static_cast<size_t>(refined.alpha.k), argmax.data());
  for (size_t j = 0; j < sel.size(); ++j) {
    if (refined.passthrough[j]) continue;
    const size_t i = static_cast<size_t>(sel[j]);
    out.labels.semantic[i] = argmax[j];
    std::memcpy(out.alpha.row(i), refined.alpha.row(j),
                sizeof(double) * static_cast<size_t>(refined.alpha.k));
    out.u[i] = refined.u[j];
  }
  return out;
}

void fit_uqr_classifier(KPConvLayer& layer, const Mat& features, std::span<const double> xs,
                        std::span<const double> ys, std::span<const double> zs,
                        std::span<const int32_t> labels, int epochs, double lr, uint64_t seed) {
  if (labels.size() != features.n) {
    throw std::invalid_argument("fit_uqr_classifier: labels do not match the features");
  }
  const ConvHidden conv = conv_hidden(features, xs, ys, zs, layer);

  Rng rng(seed);
  const double c_scale = 1.0 / std::sqrt(static_cast<double>(layer.c_mid));
  for (double& w : layer.cls_w) w = c_scale * rng.gaussian();
  std::fill(layer.cls_b.begin(), layer.cls_b.end(), 0.0);

  std::vector<uint8_t> active(features.n, 1);
  for (size_t i = 0; i < features.n; ++i) active[i] = conv.passthrough[i] ? 0 : 1;
  const OneHotTargets targets = OneHotTargets::from_labels(labels, layer.k, active);
  const double inv_n = 1.0 / std::max<size_t>(1, targets.active_count());

  for (int epoch = 0; epoch < epochs; ++epoch) {
    const Logits l = classifier_logits(conv.hidden, layer);
    const Mat g = grad_semantic_loss(l, targets, epoch, 1);
    for (int h = 0; h < layer.c_mid; ++h) {
      for (int c = 0; c < layer.k; ++c) {
        double acc = 0.0;
        for (size_t i = 0; i < features.n; ++i) acc += conv.hidden.at(i, h) * g.at(i, c);
        layer.cls_w[static_cast<size_t>(h) * layer.k + static_cast<size_t>(c)] -=
            lr * acc * inv_n;
      }
    }
    for (int c = 0; c < layer.k; ++c) {
      double acc = 0.0;
      for (size_t i = 0; i < features.n; ++i) acc += g.at(i, c);
      layer.cls_b[static_cast<size_t>(c)] -= lr * acc * inv_n;
    }
  }
}

void save_kpconv(const std::string& path, const KPConvLayer& layer) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_kpconv: cannot open " + path);
  f << "KPCONV v1\n"
    << "M " << layer.m << "\n"
    << "C_MID " << layer.c_mid << "\n"
    << "K " << layer.k << "\n"
    << "SIGMA " << layer.sigma << "\n"
    << "RADIUS " << layer.radius << "\n"
    << "BINARY\n";
  auto write_f32 = [&](const std::vector<double>& v) {
    for (const double d : v) {
      const float x = static_cast<float>(d);
      uint32_t bits;
      std::memcpy(&bits, &x, 4);
      const unsigned char b[4] = {static_cast<unsigned char>(bits & 0xFF),
                                  static_cast<unsigned char>((bits >> 8) & 0xFF),
                                  static_cast<unsigned char>((bits >> 16) & 0xFF),
                                  static_cast<unsigned char>((bits >> 24) & 0xFF)};
      f.write(reinterpret_cast<const char*>(b), 4);
    }
  };
  write_f32(layer.kernel_pts);
  write_f32(layer.weights);
  write_f32(layer.cls_w);
  write_f32(layer.cls_b);
  if (!f) throw std::runtime_error("save_kpconv: write failed for " + path);
}

KPConvLayer load_kpconv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_kpconv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line) || line != "KPCONV v1") {
    throw std::runtime_error("load_kpconv: bad header in " + path);
  }
  KPConvLayer layer;
  bool in_binary = false;
  while (std::getline(f, line)) {
    if (line == "BINARY") {
      in_binary = true;
      break;
    }
    const size_t sp = line.find(' ');
    if (sp == std::string::npos) throw std::runtime_error("load_kpconv: bad header line: " + line);
    const std::string key = line.substr(0, sp);
    const std::string val = line.substr(sp + 1);
    if (key == "M") layer.m = std::stoi(val);
    else if (key == "C_MID") layer.c_mid = std::stoi(val);
    else if (key == "K") layer.k = std::stoi(val);
    else if (key == "SIGMA") layer.sigma = std::stod(val);
    else if (key == "RADIUS") layer.radius = std::stod(val);
    else throw std::runtime_error("load_kpconv: unknown header key: " + key);
  }
  if (!in_binary || layer.m < 1 || layer.c_mid < 1 || layer.k < 1) {
    throw std::runtime_error("load_kpconv: incomplete header in " + path);
  }
  layer.in_dim = layer.k + 5;
  auto read_f32 = [&](std::vector<double>& v, size_t count) {
    v.resize(count);
    for (size_t i = 0; i < count; ++i) {
      unsigned char b[4];
      if (!f.read(reinterpret_cast<char*>(b), 4)) {
        throw std::runtime_error("load_kpconv: truncated payload in " + path);
      }
      const uint32_t bits = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
                            (static_cast<uint32_t>(b[2]) << 16) |
                            (static_cast<uint32_t>(b[3]) << 24);
      float x;
      std::memcpy(&x, &bits, 4);
      v[i] = static_cast<double>(x);
    }
  };
  read_f32(layer.kernel_pts, static_cast<size_t>(layer.m) * 3);
  read_f32(layer.weights, static_cast<size_t>(layer.m) * layer.in_dim * layer.c_mid);
  read_f32(layer.cls_w, static_cast<size_t>(layer.c_mid) * layer.k);
  read_f32(layer.cls_b, static_cast<size_t>(layer.k));
  return layer;
}

}  // namespace evpan
