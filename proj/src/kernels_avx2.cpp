#include "evpan/kernels.hpp"

#if defined(__x86_64__)

#include <immintrin.h>

#include <cmath>
#include <cstdint>

// AVX2 kernel variants. This translation unit is the only one compiled
// with -mavx2 -mfma; callers go through the dispatch table so the binary
// still runs on machines without AVX2.

namespace evpan::kernels {

namespace {

const __m256d kOne = _mm256_set1_pd(1.0);
const __m256d kHalf = _mm256_set1_pd(0.5);

inline __m256d abs_pd(__m256d x) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
}

// exp(x) for doubles, Cephes-style Pade approximation with Cody-Waite
// argument reduction. Inputs outside [-708.4, 709.4] are clamped; error
// within a couple of ulps, exp(0) == 1 exactly.
inline __m256d exp_pd(__m256d x) {
  const __m256d hi = _mm256_set1_pd(709.437);
  const __m256d lo = _mm256_set1_pd(-708.396418532264106224);
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);

  x = _mm256_min_pd(x, hi);
  x = _mm256_max_pd(x, lo);

  __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, c1, x);
  r = _mm256_fnmadd_pd(n, c2, r);
  const __m256d rr = _mm256_mul_pd(r, r);

  __m256d px = _mm256_set1_pd(1.26177193074810590878e-4);
  px = _mm256_fmadd_pd(px, rr, _mm256_set1_pd(3.02994407707441961300e-2));
  px = _mm256_fmadd_pd(px, rr, _mm256_set1_pd(9.99999999999999999910e-1));
  px = _mm256_mul_pd(px, r);

  __m256d qx = _mm256_set1_pd(3.00198505138664455042e-6);
  qx = _mm256_fmadd_pd(qx, rr, _mm256_set1_pd(2.52448340349684104192e-3));
  qx = _mm256_fmadd_pd(qx, rr, _mm256_set1_pd(2.27265548208155028766e-1));
  qx = _mm256_fmadd_pd(qx, rr, _mm256_set1_pd(2.00000000000000000005e0));

  __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, kOne);

  // scale by 2^n via exponent bits
  const __m128i ni = _mm256_cvtpd_epi32(n);
  __m256i nl = _mm256_cvtepi32_epi64(ni);
  nl = _mm256_add_epi64(nl, _mm256_set1_epi64x(1023));
  nl = _mm256_slli_epi64(nl, 52);
  return _mm256_mul_pd(e, _mm256_castsi256_pd(nl));
}

// ln(x) for normal positive doubles, Cephes-style. log(1) == 0 exactly
// and the result stays accurate for x near 1 (the softplus path feeds it
// 1 + t with t in (0,1]).
inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  __m256i expi = _mm256_srli_epi64(bits, 52);
  expi = _mm256_and_si256(expi, _mm256_set1_epi64x(0x7ff));
  expi = _mm256_sub_epi64(expi, _mm256_set1_epi64x(1022));
  // exponents are small; pack the low 32 bits of each lane and convert
  const __m256i packperm = _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0);
  const __m128i e32 = _mm256_castsi256_si128(_mm256_permutevar8x32_epi32(expi, packperm));
  __m256d e = _mm256_cvtepi32_pd(e32);

  __m256i mbits = _mm256_and_si256(bits, _mm256_set1_epi64x(0x000fffffffffffffLL));
  mbits = _mm256_or_si256(mbits, _mm256_set1_epi64x(0x3fe0000000000000LL));
  __m256d m = _mm256_castsi256_pd(mbits);  // in [0.5, 1)

  const __m256d sqrth = _mm256_set1_pd(0.70710678118654752440);
  const __m256d below = _mm256_cmp_pd(m, sqrth, _CMP_LT_OQ);
  e = _mm256_sub_pd(e, _mm256_and_pd(below, kOne));
  m = _mm256_add_pd(m, _mm256_and_pd(below, m));  // double where below sqrt(1/2)
  const __m256d xm = _mm256_sub_pd(m, kOne);

  __m256d p = _mm256_set1_pd(1.01875663804580931796e-4);
  p = _mm256_fmadd_pd(p, xm, _mm256_set1_pd(4.97494994976747001425e-1));
  p = _mm256_fmadd_pd(p, xm, _mm256_set1_pd(4.70579119878881725854e0));
  p = _mm256_fmadd_pd(p, xm, _mm256_set1_pd(1.44989225341610930846e1));
  p = _mm256_fmadd_pd(p, xm, _mm256_set1_pd(1.79368678507819816313e1));
  p = _mm256_fmadd_pd(p, xm, _mm256_set1_pd(7.70838733755885391666e0));

  __m256d q = _mm256_add_pd(xm, _mm256_set1_pd(1.12873587189167450590e1));
  q = _mm256_fmadd_pd(q, xm, _mm256_set1_pd(4.52279145837532221105e1));
  q = _mm256_fmadd_pd(q, xm, _mm256_set1_pd(8.29875266912776603211e1));
  q = _mm256_fmadd_pd(q, xm, _mm256_set1_pd(7.11544750618563894466e1));
  q = _mm256_fmadd_pd(q, xm, _mm256_set1_pd(2.31251620126765340583e1));

  const __m256d z = _mm256_mul_pd(xm, xm);
  __m256d y = _mm256_mul_pd(_mm256_mul_pd(xm, z), _mm256_div_pd(p, q));
  y = _mm256_fnmadd_pd(e, _mm256_set1_pd(2.121944400546905827679e-4), y);
  y = _mm256_fnmadd_pd(kHalf, z, y);
  __m256d out = _mm256_add_pd(xm, y);
  out = _mm256_fmadd_pd(e, _mm256_set1_pd(0.693359375), out);
  return out;
}

void softplus1_avx2(const double* l, double* alpha, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(l + i);
    const __m256d neg_abs = _mm256_sub_pd(_mm256_setzero_pd(), abs_pd(x));
    const __m256d t = exp_pd(neg_abs);  // exp(-|l|) in (0, 1]
    const __m256d lg = log_pd(_mm256_add_pd(kOne, t));
    const __m256d pos = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_GT_OQ);
    const __m256d sp = _mm256_blendv_pd(lg, _mm256_add_pd(x, lg), pos);
    _mm256_storeu_pd(alpha + i, _mm256_add_pd(sp, kOne));
  }
  for (; i < n; ++i) {
    const double x = l[i];
    const double sp = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    alpha[i] = sp + 1.0;
  }
}

void sigmoid_avx2(const double* l, double* s, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(l + i);
    const __m256d neg_abs = _mm256_sub_pd(_mm256_setzero_pd(), abs_pd(x));
    const __m256d t = exp_pd(neg_abs);
    const __m256d d = _mm256_add_pd(kOne, t);
    const __m256d pos_val = _mm256_div_pd(kOne, d);
    const __m256d neg_val = _mm256_div_pd(t, d);
    const __m256d pos = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_GE_OQ);
    _mm256_storeu_pd(s + i, _mm256_blendv_pd(neg_val, pos_val, pos));
  }
  for (; i < n; ++i) {
    const double x = l[i];
    if (x >= 0.0) {
      s[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double t = std::exp(x);
      s[i] = t / (1.0 + t);
    }
  }
}

inline double hsum_pd(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);  // (v0+v2, v1+v3)
  return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

void row_normalize_avx2(const double* alpha, size_t n, size_t k, double* p, double* u) {
  for (size_t i = 0; i < n; ++i) {
    const double* row = alpha + i * k;
    double* prow = p + i * k;
    __m256d acc = _mm256_setzero_pd();
    size_t c = 0;
    for (; c + 4 <= k; c += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(row + c));
    double s = hsum_pd(acc);
    for (; c < k; ++c) s += row[c];
    const double inv = 1.0 / s;
    const __m256d vinv = _mm256_set1_pd(inv);
    c = 0;
    for (; c + 4 <= k; c += 4)
      _mm256_storeu_pd(prow + c, _mm256_mul_pd(_mm256_loadu_pd(row + c), vinv));
    for (; c < k; ++c) prow[c] = row[c] * inv;
    u[i] = static_cast<double>(k) / s;
  }
}

void argmax_rows_avx2(const double* rows, size_t n, size_t k, int32_t* out) {
  for (size_t i = 0; i < n; ++i) {
    const double* row = rows + i * k;
    if (k < 4) {
      double best = row[0];
      size_t best_c = 0;
      for (size_t c = 1; c < k; ++c)
        if (row[c] > best) { best = row[c]; best_c = c; }
      out[i] = static_cast<int32_t>(best_c);
      continue;
    }
    __m256d bestv = _mm256_loadu_pd(row);
    __m256d besti = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
    const __m256d four = _mm256_set1_pd(4.0);
    __m256d idx = besti;
    size_t c = 4;
    for (; c + 4 <= k; c += 4) {
      idx = _mm256_add_pd(idx, four);
      const __m256d v = _mm256_loadu_pd(row + c);
      const __m256d gt = _mm256_cmp_pd(v, bestv, _CMP_GT_OQ);
      bestv = _mm256_blendv_pd(bestv, v, gt);
      besti = _mm256_blendv_pd(besti, idx, gt);
    }
    alignas(32) double bv[4];
    alignas(32) double bi[4];
    _mm256_store_pd(bv, bestv);
    _mm256_store_pd(bi, besti);
    double best = bv[0];
    double best_c = bi[0];
    for (int lane = 1; lane < 4; ++lane) {
      if (bv[lane] > best || (bv[lane] == best && bi[lane] < best_c)) {
        best = bv[lane];
        best_c = bi[lane];
      }
    }
    for (; c < k; ++c) {
      if (row[c] > best) {
        best = row[c];
        best_c = static_cast<double>(c);
      }
    }
    out[i] = static_cast<int32_t>(best_c);
  }
}

void gauss_max_row_avx2(double* row, size_t w, double center_col, double dr2,
                        double inv_two_sigma2) {
  const __m256d c0 = _mm256_set1_pd(center_col);
  const __m256d wv = _mm256_set1_pd(static_cast<double>(w));
  const __m256d vdr2 = _mm256_set1_pd(dr2);
  const __m256d nscale = _mm256_set1_pd(-inv_two_sigma2);
  __m256d cols = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  const __m256d four = _mm256_set1_pd(4.0);
  size_t c = 0;
  for (; c + 4 <= w; c += 4) {
    const __m256d dcr = abs_pd(_mm256_sub_pd(cols, c0));
    const __m256d dc = _mm256_min_pd(dcr, _mm256_sub_pd(wv, dcr));
    const __m256d d2 = _mm256_add_pd(vdr2, _mm256_mul_pd(dc, dc));
    const __m256d v = exp_pd(_mm256_mul_pd(d2, nscale));
    const __m256d cur = _mm256_loadu_pd(row + c);
    _mm256_storeu_pd(row + c, _mm256_max_pd(cur, v));
    cols = _mm256_add_pd(cols, four);
  }
  const double wd = static_cast<double>(w);
  for (; c < w; ++c) {
    const double dcr = std::fabs(static_cast<double>(c) - center_col);
    const double dc = std::min(dcr, wd - dcr);
    const double d2 = dr2 + dc * dc;
    const double v = std::exp(-d2 * inv_two_sigma2);
    if (v > row[c]) row[c] = v;
  }
}

void nearest_center_avx2(const double* r, const double* c, size_t n,
                         const double* cr, const double* cc, size_t m,
                         double w, int32_t* out) {
  const __m256d wv = _mm256_set1_pd(w);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ri = _mm256_loadu_pd(r + i);
    const __m256d ci = _mm256_loadu_pd(c + i);
    __m256d bestd = _mm256_set1_pd(0.0);
    __m256d bestj = _mm256_set1_pd(-1.0);
    for (size_t j = 0; j < m; ++j) {
      const __m256d dr = _mm256_sub_pd(ri, _mm256_set1_pd(cr[j]));
      const __m256d dcr = abs_pd(_mm256_sub_pd(ci, _mm256_set1_pd(cc[j])));
      const __m256d dc = _mm256_min_pd(dcr, _mm256_sub_pd(wv, dcr));
      // mul + add (not fma) so distances match the scalar kernel bit for bit
      const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dr, dr), _mm256_mul_pd(dc, dc));
      if (j == 0) {
        bestd = d2;
        bestj = _mm256_setzero_pd();
      } else {
        const __m256d lt = _mm256_cmp_pd(d2, bestd, _CMP_LT_OQ);
        bestd = _mm256_blendv_pd(bestd, d2, lt);
        bestj = _mm256_blendv_pd(bestj, _mm256_set1_pd(static_cast<double>(j)), lt);
      }
    }
    alignas(32) double bj[4];
    _mm256_store_pd(bj, bestj);
    for (int lane = 0; lane < 4; ++lane) out[i + lane] = static_cast<int32_t>(bj[lane]);
  }
  for (; i < n; ++i) {
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

double sum_sq_diff_avx2(const double* a, const double* b, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double s = hsum_pd(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

extern const Ops kAvx2Ops;
const Ops kAvx2Ops = {
    softplus1_avx2,     sigmoid_avx2,      row_normalize_avx2,
    argmax_rows_avx2,   gauss_max_row_avx2, nearest_center_avx2,
    sum_sq_diff_avx2,   "avx2",
};

}  // namespace evpan::kernels

#endif  // __x86_64__
