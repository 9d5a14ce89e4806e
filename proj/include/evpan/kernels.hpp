#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops used by the evidential math, the heatmap
// encoder and the instance grouping. Every kernel exists as a scalar
// reference implementation and (on x86-64) an AVX2 variant; the active
// table is picked once at startup from CPUID, overridable with the
// EVPAN_KERNELS environment variable ("scalar" or "avx2") or
// force_backend(). Scalar and AVX2 variants are equivalence-tested
// against each other; the integer-output kernels (argmax_rows,
// nearest_center) must agree exactly, the floating-point ones to a few
// ulps.

namespace evpan::kernels {

enum class Backend { scalar, avx2 };

struct Ops {
  // alpha[i] = softplus(l[i]) + 1, stabilized for large |l|
  void (*softplus1)(const double* l, double* alpha, size_t n);
  // s[i] = 1 / (1 + exp(-l[i]))
  void (*sigmoid)(const double* l, double* s, size_t n);
  // per row: S = sum(alpha), p = alpha / S, u = k / S
  void (*row_normalize)(const double* alpha, size_t n, size_t k, double* p, double* u);
  // per row: index of the first maximum (ties -> lowest column)
  void (*argmax_rows)(const double* rows, size_t n, size_t k, int32_t* out);
  // row[c] = max(row[c], exp(-(dr2 + dc^2) * inv_two_sigma2)) with the
  // column distance dc circular over w columns
  void (*gauss_max_row)(double* row, size_t w, double center_col, double dr2,
                        double inv_two_sigma2);
  // per cell i: index of the center minimizing (r[i]-cr[j])^2 + circ(c[i]-cc[j])^2,
  // circular over w columns; ties -> lowest center index
  void (*nearest_center)(const double* r, const double* c, size_t n,
                         const double* cr, const double* cc, size_t m,
                         double w, int32_t* out);
  // sum of (a[i]-b[i])^2
  double (*sum_sq_diff)(const double* a, const double* b, size_t n);
  const char* name;
};

bool avx2_supported();

// active table (env override applied on first call)
const Ops& ops();

// specific backend, nullptr when unavailable on this machine
const Ops* ops(Backend b);

// override the active table (tests); not thread-safe, call before use
void force_backend(Backend b);

}  // namespace evpan::kernels
