#include <cmath>
#include <cstdint>

#include "evpan/kernels.hpp"

// Scalar reference kernels. These define the semantics the SIMD variants
// are tested against.

namespace evpan::kernels {

namespace {

void softplus1_scalar(const double* l, double* alpha, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    const double x = l[i];
    const double sp = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    alpha[i] = sp + 1.0;
  }
}

void sigmoid_scalar(const double* l, double* s, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    const double x = l[i];
    if (x >= 0.0) {
      s[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double t = std::exp(x);
      s[i] = t / (1.0 + t);
    }
  }
}

void row_normalize_scalar(const double* alpha, size_t n, size_t k, double* p, double* u) {
  for (size_t i = 0; i < n; ++i) {
    const double* row = alpha + i * k;
    double s = 0.0;
    for (size_t c = 0; c < k; ++c) s += row[c];
    const double inv = 1.0 / s;
    double* prow = p + i * k;
    for (size_t c = 0; c < k; ++c) prow[c] = row[c] * inv;
    u[i] = static_cast<double>(k) / s;
  }
}

void argmax_rows_scalar(const double* rows, size_t n, size_t k, int32_t* out) {
  for (size_t i = 0; i < n; ++i) {
    const double* row = rows + i * k;
    double best = row[0];
    size_t best_c = 0;
    for (size_t c = 1; c < k; ++c) {
      if (row[c] > best) {
        best = row[c];
        best_c = c;
      }
    }
    out[i] = static_cast<int32_t>(best_c);
  }
}

void gauss_max_row_scalar(double* row, size_t w, double center_col, double dr2,
                          double inv_two_sigma2) {
  const double wd = static_cast<double>(w);
  for (size_t c = 0; c < w; ++c) {
    const double dcr = std::fabs(static_cast<double>(c) - center_col);
    const double dc = std::min(dcr, wd - dcr);
    const double d2 = dr2 + dc * dc;
    const double v = std::exp(-d2 * inv_two_sigma2);
    if (v > row[c]) row[c] = v;
  }
}

void nearest_center_scalar(const double* r, const double* c, size_t n,
                           const double* cr, const double* cc, size_t m,
                           double w, int32_t* out) {
  for (size_t i = 0; i < n; ++i) {
    double best = 0.0;
    int32_t best_j = -1;
    for (size_t j = 0; j < m; ++j) {
      const double dr = r[i] - cr[j];
      const double dcr = std::fabs(c[i] - cc[j]);
      const double dc = std::min(dcr, w - dcr);
      const double d2 = dr * dr + dc * dc;
      if (best_j < 0 || d2 < best) {
        best = d2;
        best_j = static_cast<int32_t>(j);
      }
    }
    out[i] = best_j;
  }
}

double sum_sq_diff_scalar(const double* a, const double* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

extern const Ops kScalarOps;
const Ops kScalarOps = {
    softplus1_scalar,     sigmoid_scalar,      row_normalize_scalar,
    argmax_rows_scalar,   gauss_max_row_scalar, nearest_center_scalar,
    sum_sq_diff_scalar,   "scalar",
};

}  // namespace evpan::kernels
