#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evpan/core.hpp"
#include "evpan/util.hpp"

namespace evpan {

using Logits = Mat;  // n x k, finite entries

// One-hot rows with an activity mask; masked elements drop out of every
// loss term (the occupied-voxel training regime).
struct OneHotTargets {
  size_t n = 0;
  int k = 0;
  std::vector<uint8_t> onehot;  // n*k in {0,1}
  std::vector<uint8_t> active;  // n, 1 = contributes

  OneHotTargets() = default;
  OneHotTargets(size_t n_, int k_)
      : n(n_), k(k_), onehot(n_ * static_cast<size_t>(k_), 0), active(n_, 1) {}

  static OneHotTargets from_labels(std::span<const int32_t> labels, int k,
                                   std::span<const uint8_t> mask = {});

  void set_class(size_t i, int c) { onehot[i * static_cast<size_t>(k) + static_cast<size_t>(c)] = 1; }
  const uint8_t* row(size_t i) const { return onehot.data() + i * static_cast<size_t>(k); }
  size_t active_count() const;
};

// alpha = softplus(logits) + 1, numerically stable for large |l|
DirichletField alpha_from_logits(const Logits& l);

struct Prediction {
  Mat p;                  // n x k probabilities
  std::vector<double> u;  // n uncertainties, K/S
};

Prediction predict(const DirichletField& alpha);

// sum over active elements of sum_k o_ik * log(S_i / alpha_ik)
double log_loss(const DirichletField& alpha, const OneHotTargets& targets);

// KL(Dir(alpha~) || Dir(1)) summed over active elements, with
// alpha~ = o + (1-o) .* alpha
double kl_regularizer(const DirichletField& alpha, const OneHotTargets& targets);

// annealing weight: cap * min(1, t / (ramp_epochs * iters_per_epoch))
double lambda_schedule(int64_t t, int64_t iters_per_epoch, double cap = 0.065,
                       int ramp_epochs = 20);

struct SemanticLoss {
  double log_term = 0.0;
  double kl_term = 0.0;
  double lambda_t = 0.0;
  double total = 0.0;  // log_term + lambda_t * kl_term
};

SemanticLoss semantic_loss(const DirichletField& alpha, const OneHotTargets& targets, int64_t t,
                           int64_t iters_per_epoch, double cap = 0.065, int ramp_epochs = 20);

// d(semantic_loss)/d(logits), analytic; masked rows are zero
Mat grad_semantic_loss(const Logits& l, const OneHotTargets& targets, int64_t t,
                       int64_t iters_per_epoch, double cap = 0.065, int ramp_epochs = 20);

struct AuxLosses {
  double heat_mse = 0.0;   // over all cells
  double offset_l1 = 0.0;  // |dr|+|dc| averaged over valid cells, 0 if none
};

AuxLosses aux_losses(std::span<const double> heat_pred, std::span<const double> heat_gt,
                     std::span<const double> off_pred, std::span<const double> off_gt,
                     std::span<const uint8_t> valid);

struct LossBreakdown {
  double sem_log = 0.0;
  double sem_kl = 0.0;
  double lambda_t = 0.0;
  double heat_mse = 0.0;
  double offset_l1 = 0.0;
  double total = 0.0;  // sem_log + lambda_t*sem_kl + lambda_h*heat_mse + lambda_o*offset_l1
};

LossBreakdown combine_losses(const SemanticLoss& sem, const AuxLosses& aux, double lambda_h,
                             double lambda_o);

// Temperature-scaling baseline: minimizes the mean NLL of
// softmax(logits / T) at the target class by golden-section search on
// T in [0.05, 20]. A degenerate single-class set returns init.
double fit_temperature(const Logits& logits, std::span<const int32_t> targets, double init = 1.0);

// softmax(logits / T); confidence = max probability, u = 1 - confidence
Prediction ts_predict(const Logits& logits, double temperature);

// Linear evidential classifier for desk-scale experiments.
struct ToyModel {
  int d = 0, k = 0;
  std::vector<double> w;  // d x k
  std::vector<double> b;  // k

  Logits logits(const Mat& x) const;
};

struct ToyTrainOptions {
  int epochs = 200;
  double lr = 0.05;
  double kl_cap = 0.065;
  int kl_ramp_epochs = 20;
};

// Full-batch gradient descent on the mean semantic loss; deterministic
// for a given seed. Throws std::runtime_error if the loss goes
// non-finite.
ToyModel train_toy(const Mat& x, std::span<const int32_t> y, int k, const ToyTrainOptions& opt,
                   uint64_t seed);

}  // namespace evpan
