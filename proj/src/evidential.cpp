#include "evpan/evidential.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evpan/kernels.hpp"
#include "evpan/mathfn.hpp"

namespace evpan {

OneHotTargets OneHotTargets::from_labels(std::span<const int32_t> labels, int k,
                                         std::span<const uint8_t> mask) {
  OneHotTargets t(labels.size(), k);
  for (size_t i = 0; i < labels.size(); ++i) {
    if (!mask.empty() && !mask[i]) {
      t.active[i] = 0;
      continue;
    }
    const int32_t c = labels[i];
    if (c < 0 || c >= k) throw std::invalid_argument("from_labels: class id out of range");
    t.set_class(i, c);
  }
  return t;
}

size_t OneHotTargets::active_count() const {
  size_t c = 0;
  for (const uint8_t a : active) c += a;
  return c;
}

DirichletField alpha_from_logits(const Logits& l) {
  DirichletField a(l.n, l.k);
  kernels::ops().softplus1(l.v.data(), a.alpha.data(), l.v.size());
  return a;
}

Prediction predict(const DirichletField& alpha) {
  Prediction out;
  out.p = Mat(alpha.n, alpha.k);
  out.u.assign(alpha.n, 0.0);
  kernels::ops().row_normalize(alpha.alpha.data(), alpha.n, static_cast<size_t>(alpha.k),
                               out.p.v.data(), out.u.data());
  return out;
}

namespace {

void check_targets(const DirichletField& alpha, const OneHotTargets& targets) {
  if (alpha.n != targets.n || alpha.k != targets.k) {
    throw std::invalid_argument("targets do not match the field shape");
  }
}

int onehot_class(const OneHotTargets& targets, size_t i) {
  const uint8_t* row = targets.row(i);
  int gt = -1;
  for (int c = 0; c < targets.k; ++c) {
    if (row[c]) {
      if (gt >= 0) throw std::invalid_argument("one-hot row with multiple ones");
      gt = c;
    }
  }
  if (gt < 0) throw std::invalid_argument("active one-hot row sums to zero");
  return gt;
}

}  // namespace

double log_loss(const DirichletField& alpha, const OneHotTargets& targets) {
  check_targets(alpha, targets);
  std::vector<double> terms;
  terms.reserve(alpha.n);
  for (size_t i = 0; i < alpha.n; ++i) {
    if (!targets.active[i]) continue;
    const int gt = onehot_class(targets, i);
    const double* row = alpha.row(i);
    double s = 0.0;
    for (int c = 0; c < alpha.k; ++c) s += row[c];
    terms.push_back(std::log(s / row[gt]));
  }
  return pairwise_sum(terms);
}

double kl_regularizer(const DirichletField& alpha, const OneHotTargets& targets) {
  check_targets(alpha, targets);
  const int k = alpha.k;
  std::vector<double> terms;
  terms.reserve(alpha.n);
  const double lgamma_k = log_gamma(static_cast<double>(k));
  std::vector<double> at(static_cast<size_t>(k));
  for (size_t i = 0; i < alpha.n; ++i) {
    if (!targets.active[i]) continue;
    const double* row = alpha.row(i);
    const uint8_t* oh = targets.row(i);
    double s = 0.0;
    for (int c = 0; c < k; ++c) {
      at[static_cast<size_t>(c)] = oh[c] ? 1.0 : row[c];
      s += at[static_cast<size_t>(c)];
    }
    double v = log_gamma(s) - lgamma_k;
    const double psi_s = digamma(s);
    for (int c = 0; c < k; ++c) {
      const double a = at[static_cast<size_t>(c)];
      v -= log_gamma(a);
      v += (a - 1.0) * (digamma(a) - psi_s);
    }
    terms.push_back(v);
  }
  return pairwise_sum(terms);
}

double lambda_schedule(int64_t t, int64_t iters_per_epoch, double cap, int ramp_epochs) {
  if (t < 0 || iters_per_epoch < 1) throw std::invalid_argument("lambda_schedule: bad arguments");
  const double frac = static_cast<double>(t) /
                      (static_cast<double>(ramp_epochs) * static_cast<double>(iters_per_epoch));
  return cap * std::min(1.0, frac);
}

SemanticLoss semantic_loss(const DirichletField& alpha, const OneHotTargets& targets, int64_t t,
                           int64_t iters_per_epoch, double cap, int ramp_epochs) {
  SemanticLoss out;
  out.log_term = log_loss(alpha, targets);
  out.kl_term = kl_regularizer(alpha, targets);
  out.lambda_t = lambda_schedule(t, iters_per_epoch, cap, ramp_epochs);
  out.total = out.log_term + out.lambda_t * out.kl_term;
  return out;
}

Mat grad_semantic_loss(const Logits& l, const OneHotTargets& targets, int64_t t,
                       int64_t iters_per_epoch, double cap, int ramp_epochs) {
  if (l.n != targets.n || l.k != targets.k) {
    throw std::invalid_argument("targets do not match the logit shape");
  }
  const int k = l.k;
  const double lambda = lambda_schedule(t, iters_per_epoch, cap, ramp_epochs);

  DirichletField alpha(l.n, k);
  kernels::ops().softplus1(l.v.data(), alpha.alpha.data(), l.v.size());
  Mat sig(l.n, k);
  kernels::ops().sigmoid(l.v.data(), sig.v.data(), l.v.size());

  Mat grad(l.n, k);
  for (size_t i = 0; i < l.n; ++i) {
    if (!targets.active[i]) continue;
    const double* arow = alpha.row(i);
    const uint8_t* oh = targets.row(i);
    double s = 0.0, st = 0.0;
    for (int c = 0; c < k; ++c) {
      s += arow[c];
      st += oh[c] ? 1.0 : arow[c];
    }
    const double inv_s = 1.0 / s;
    // d KL / d alpha_c for non-gt classes; the digamma terms cancel and
    // only trigammas survive
    const double common = (st - static_cast<double>(k)) * trigamma(st);
    for (int c = 0; c < k; ++c) {
      double g = inv_s;  // d log_loss / d alpha_c, S-part
      if (oh[c]) g -= 1.0 / arow[c];
      if (!oh[c] && lambda != 0.0) {
        g += lambda * ((arow[c] - 1.0) * trigamma(arow[c]) - common);
      }
      grad.at(i, c) = g * sig.at(i, c);
    }
  }
  return grad;
}

AuxLosses aux_losses(std::span<const double> heat_pred, std::span<const double> heat_gt,
                     std::span<const double> off_pred, std::span<const double> off_gt,
                     std::span<const uint8_t> valid) {
  if (heat_pred.size() != heat_gt.size() || off_pred.size() != off_gt.size() ||
      off_pred.size() != valid.size() * 2) {
    throw std::invalid_argument("aux_losses: shape mismatch");
  }
  AuxLosses out;
  const size_t cells = heat_pred.size();
  if (cells > 0) {
    out.heat_mse = kernels::ops().sum_sq_diff(heat_pred.data(), heat_gt.data(), cells) /
                   static_cast<double>(cells);
  }
  size_t nv = 0;
  std::vector<double> terms;
  for (size_t i = 0; i < valid.size(); ++i) {
    if (!valid[i]) continue;
    ++nv;
    terms.push_back(std::fabs(off_pred[2 * i] - off_gt[2 * i]) +
                    std::fabs(off_pred[2 * i + 1] - off_gt[2 * i + 1]));
  }
  out.offset_l1 = nv > 0 ? pairwise_sum(terms) / static_cast<double>(nv) : 0.0;
  return out;
}

LossBreakdown combine_losses(const SemanticLoss& sem, const AuxLosses& aux, double lambda_h,
                             double lambda_o) {
  LossBreakdown b;
  b.sem_log = sem.log_term;
  b.sem_kl = sem.kl_term;
  b.lambda_t = sem.lambda_t;
  b.heat_mse = aux.heat_mse;
  b.offset_l1 = aux.offset_l1;
  b.total = b.sem_log + b.lambda_t * b.sem_kl + lambda_h * b.heat_mse + lambda_o * b.offset_l1;
  return b;
}

namespace {

double mean_nll_at_temperature(const Logits& logits, std::span<const int32_t> targets, double t) {
  std::vector<double> terms;
  terms.reserve(logits.n);
  for (size_t i = 0; i < logits.n; ++i) {
    const double* row = logits.row(i);
    double m = row[0];
    for (int c = 1; c < logits.k; ++c) m = std::max(m, row[c]);
    double z = 0.0;
    for (int c = 0; c < logits.k; ++c) z += std::exp((row[c] - m) / t);
    const double log_p = (row[targets[i]] - m) / t - std::log(z);
    terms.push_back(-log_p);
  }
  return pairwise_sum(terms) / static_cast<double>(logits.n);
}

}  // namespace

double fit_temperature(const Logits& logits, std::span<const int32_t> targets, double init) {
  if (logits.n == 0 || targets.size() != logits.n) {
    throw std::invalid_argument("fit_temperature: empty or mismatched held-out set");
  }
  bool single_class = true;
  for (size_t i = 1; i < targets.size(); ++i) {
    if (targets[i] != targets[0]) {
      single_class = false;
      break;
    }
  }
  if (single_class) return init;

  constexpr double phi = 0.6180339887498949;
  double lo = 0.05, hi = 20.0;
  double x1 = hi - phi * (hi - lo);
  double x2 = lo + phi * (hi - lo);
  double f1 = mean_nll_at_temperature(logits, targets, x1);
  double f2 = mean_nll_at_temperature(logits, targets, x2);
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = mean_nll_at_temperature(logits, targets, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = mean_nll_at_temperature(logits, targets, x2);
    }
  }
  return 0.5 * (lo + hi);
}

Prediction ts_predict(const Logits& logits, double temperature) {
  if (temperature <= 0.0) throw std::invalid_argument("ts_predict: temperature must be positive");
  Prediction out;
  out.p = Mat(logits.n, logits.k);
  out.u.assign(logits.n, 0.0);
  for (size_t i = 0; i < logits.n; ++i) {
    const double* row = logits.row(i);
    double m = row[0];
    for (int c = 1; c < logits.k; ++c) m = std::max(m, row[c]);
    double z = 0.0;
    for (int c = 0; c < logits.k; ++c) z += std::exp((row[c] - m) / temperature);
    double best = 0.0;
    for (int c = 0; c < logits.k; ++c) {
      const double p = std::exp((row[c] - m) / temperature) / z;
      out.p.at(i, c) = p;
      best = std::max(best, p);
    }
    out.u[i] = 1.0 - best;
  }
  return out;
}

Logits ToyModel::logits(const Mat& x) const {
  if (x.k != d) throw std::invalid_argument("ToyModel: feature width mismatch");
  Logits l(x.n, k);
  for (size_t i = 0; i < x.n; ++i) {
    const double* xi = x.row(i);
    double* li = l.row(i);
    for (int c = 0; c < k; ++c) li[c] = b[static_cast<size_t>(c)];
    for (int j = 0; j < d; ++j) {
      const double xv = xi[j];
      const double* wj = w.data() + static_cast<size_t>(j) * k;
      for (int c = 0; c < k; ++c) li[c] += xv * wj[c];
    }
  }
  return l;
}

ToyModel train_toy(const Mat& x, std::span<const int32_t> y, int k, const ToyTrainOptions& opt,
                   uint64_t seed) {
  if (x.n != y.size()) throw std::invalid_argument("train_toy: labels do not match features");
  ToyModel m;
  m.d = x.k;
  m.k = k;
  m.w.assign(static_cast<size_t>(m.d) * k, 0.0);
  m.b.assign(static_cast<size_t>(k), 0.0);
  Rng rng(seed);
  for (double& v : m.w) v = 0.01 * rng.gaussian();

  const OneHotTargets targets = OneHotTargets::from_labels(y, k);
  const double inv_n = 1.0 / static_cast<double>(x.n);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const Logits l = m.logits(x);
    const Mat g = grad_semantic_loss(l, targets, epoch, 1, opt.kl_cap, opt.kl_ramp_epochs);
    for (const double v : g.v) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("train_toy: non-finite gradient at epoch " +
                                 std::to_string(epoch));
      }
    }
    // dW = X^T G / n, db = colsum(G) / n
    for (int j = 0; j < m.d; ++j) {
      for (int c = 0; c < k; ++c) {
        double acc = 0.0;
        for (size_t i = 0; i < x.n; ++i) acc += x.at(i, j) * g.at(i, c);
        m.w[static_cast<size_t>(j) * k + static_cast<size_t>(c)] -= opt.lr * acc * inv_n;
      }
    }
    for (int c = 0; c < k; ++c) {
      double acc = 0.0;
      for (size_t i = 0; i < x.n; ++i) acc += g.at(i, c);
      m.b[static_cast<size_t>(c)] -= opt.lr * acc * inv_n;
    }
  }
  return m;
}

}  // namespace evpan
