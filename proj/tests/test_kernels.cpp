#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "evpan/kernels.hpp"
#include "evpan/util.hpp"

using namespace evpan;

namespace {

std::vector<double> random_vec(Rng& rng, size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

const kernels::Ops& scalar() { return *kernels::ops(kernels::Backend::scalar); }

bool have_avx2() { return kernels::ops(kernels::Backend::avx2) != nullptr; }

}  // namespace

TEST_CASE("scalar softplus1 matches std reference and limits") {
  const auto& k = scalar();
  const double ls[] = {0.0, -40.0, 40.0, -1e3, 700.0, 1e-12, -1e-12, 3.7, -3.7};
  for (const double l : ls) {
    double a;
    k.softplus1(&l, &a, 1);
    CHECK(a >= 1.0);
    if (l == 0.0) CHECK(a == doctest::Approx(1.0 + std::log(2.0)).epsilon(1e-15));
    if (l == -40.0) CHECK(std::fabs(a - 1.0) < 1e-12);
    if (l == 40.0) {
      const double exact = 40.0 + std::log1p(std::exp(-40.0)) + 1.0;
      CHECK(std::fabs(a - exact) / exact < 1e-12);
    }
  }
}

TEST_CASE("avx2 kernels match scalar within tolerance") {
  if (!have_avx2()) return;
  const auto& sc = scalar();
  const auto& vx = *kernels::ops(kernels::Backend::avx2);
  Rng rng(42);

  SUBCASE("softplus1 and sigmoid") {
    for (const double span : {1.0, 10.0, 100.0, 700.0}) {
      auto l = random_vec(rng, 1001, -span, span);
      l[0] = 0.0;
      l[1] = -span;
      l[2] = span;
      std::vector<double> a1(l.size()), a2(l.size()), s1(l.size()), s2(l.size());
      sc.softplus1(l.data(), a1.data(), l.size());
      vx.softplus1(l.data(), a2.data(), l.size());
      sc.sigmoid(l.data(), s1.data(), l.size());
      vx.sigmoid(l.data(), s2.data(), l.size());
      for (size_t i = 0; i < l.size(); ++i) {
        CHECK(std::fabs(a1[i] - a2[i]) <= 5e-14 * std::max(1.0, std::fabs(a1[i])));
        CHECK(std::fabs(s1[i] - s2[i]) <= 1e-14);
        CHECK(a2[i] >= 1.0);
      }
    }
  }

  SUBCASE("row_normalize") {
    const size_t n = 257;
    const size_t k = 19;
    auto alpha = random_vec(rng, n * k, 1.0, 50.0);
    std::vector<double> p1(n * k), p2(n * k), u1(n), u2(n);
    sc.row_normalize(alpha.data(), n, k, p1.data(), u1.data());
    vx.row_normalize(alpha.data(), n, k, p2.data(), u2.data());
    for (size_t i = 0; i < n * k; ++i) CHECK(std::fabs(p1[i] - p2[i]) <= 1e-14);
    for (size_t i = 0; i < n; ++i) CHECK(std::fabs(u1[i] - u2[i]) <= 1e-14);
  }

  SUBCASE("argmax_rows exact, including ties") {
    for (const size_t k : {1u, 2u, 3u, 4u, 5u, 8u, 19u, 20u, 37u}) {
      const size_t n = 200;
      auto rows = random_vec(rng, n * k, 0.0, 1.0);
      // quantize so ties actually happen
      for (double& v : rows) v = std::floor(v * 4.0) / 4.0;
      std::vector<int32_t> o1(n), o2(n);
      sc.argmax_rows(rows.data(), n, k, o1.data());
      vx.argmax_rows(rows.data(), n, k, o2.data());
      for (size_t i = 0; i < n; ++i) CHECK(o1[i] == o2[i]);
    }
  }

  SUBCASE("gauss_max_row") {
    for (const size_t w : {3u, 7u, 64u, 360u}) {
      auto base = random_vec(rng, w, 0.0, 0.5);
      auto r1 = base;
      auto r2 = base;
      const double c0 = std::floor(rng.uniform(0.0, static_cast<double>(w)));
      sc.gauss_max_row(r1.data(), w, c0, 4.0, 1.0 / 50.0);
      vx.gauss_max_row(r2.data(), w, c0, 4.0, 1.0 / 50.0);
      for (size_t i = 0; i < w; ++i) CHECK(std::fabs(r1[i] - r2[i]) <= 1e-13);
    }
  }

  SUBCASE("nearest_center exact") {
    const size_t n = 513;
    const size_t m = 37;
    const double w = 360.0;
    auto r = random_vec(rng, n, 0.0, 480.0);
    auto c = random_vec(rng, n, 0.0, w);
    auto cr = random_vec(rng, m, 0.0, 480.0);
    auto cc = random_vec(rng, m, 0.0, w);
    // duplicate a center so distance ties exist
    cr[5] = cr[1];
    cc[5] = cc[1];
    std::vector<int32_t> o1(n), o2(n);
    sc.nearest_center(r.data(), c.data(), n, cr.data(), cc.data(), m, w, o1.data());
    vx.nearest_center(r.data(), c.data(), n, cr.data(), cc.data(), m, w, o2.data());
    for (size_t i = 0; i < n; ++i) CHECK(o1[i] == o2[i]);
  }

  SUBCASE("sum_sq_diff") {
    for (const size_t n : {1u, 5u, 1000u}) {
      auto a = random_vec(rng, n, -3.0, 3.0);
      auto b = random_vec(rng, n, -3.0, 3.0);
      const double s1 = sc.sum_sq_diff(a.data(), b.data(), n);
      const double s2 = vx.sum_sq_diff(a.data(), b.data(), n);
      CHECK(std::fabs(s1 - s2) <= 1e-12 * std::max(1.0, s1));
    }
  }
}

TEST_CASE("gauss_max_row is exactly 1 at zero distance") {
  for (const auto backend : {kernels::Backend::scalar, kernels::Backend::avx2}) {
    const auto* k = kernels::ops(backend);
    if (!k) continue;
    std::vector<double> row(16, 0.0);
    k->gauss_max_row(row.data(), row.size(), 5.0, 0.0, 1.0 / 50.0);
    CHECK(row[5] == 1.0);
  }
}

TEST_CASE("nearest_center picks the lowest index on exact ties") {
  const auto& k = scalar();
  const double r[] = {10.0};
  const double c[] = {100.0};
  const double cr[] = {12.0, 12.0, 12.0};
  const double cc[] = {101.0, 101.0, 99.0};
  int32_t out = -1;
  k.nearest_center(r, c, 1, cr, cc, 3, 360.0, &out);
  CHECK(out == 0);
}

TEST_CASE("gauss_max_row wraps the angular axis") {
  const auto& k = scalar();
  std::vector<double> row(360, 0.0);
  k.gauss_max_row(row.data(), row.size(), 0.0, 0.0, 1.0 / 50.0);
  CHECK(row[359] == doctest::Approx(std::exp(-1.0 / 50.0)).epsilon(1e-14));
  CHECK(row[359] == doctest::Approx(row[1]).epsilon(1e-14));
}

TEST_CASE("dispatch honours force_backend") {
  kernels::force_backend(kernels::Backend::scalar);
  CHECK(std::string(kernels::ops().name) == "scalar");
  if (have_avx2()) {
    kernels::force_backend(kernels::Backend::avx2);
    CHECK(std::string(kernels::ops().name) == "avx2");
  }
}
