#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evpan/evidential.hpp"
#include "evpan/kernels.hpp"
#include "oracles.hpp"

using namespace evpan;

namespace {

Logits random_logits(Rng& rng, size_t n, int k, double lo = -5.0, double hi = 5.0) {
  Logits l(n, k);
  for (double& v : l.v) v = rng.uniform(lo, hi);
  return l;
}

OneHotTargets random_targets(Rng& rng, size_t n, int k) {
  OneHotTargets t(n, k);
  for (size_t i = 0; i < n; ++i) t.set_class(i, static_cast<int>(rng.uniform_int(k)));
  return t;
}

}  // namespace

TEST_CASE("alpha_from_logits limit values") {
  Logits l(3, 1);
  l.v = {0.0, -40.0, 40.0};
  const auto a = alpha_from_logits(l);
  CHECK(a.alpha[0] == doctest::Approx(1.0 + std::log(2.0)).epsilon(1e-14));
  CHECK(std::fabs(a.alpha[1] - 1.0) < 1e-12);
  const double exact = 1.0 + 40.0 + std::log1p(std::exp(-40.0));
  CHECK(std::fabs(a.alpha[2] - exact) / exact < 1e-12);
  for (const double v : a.alpha) CHECK(v >= 1.0);
}

TEST_CASE("alpha_from_logits is monotone in each logit") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Logits l(1, 1);
    const double x = rng.uniform(-50.0, 50.0);
    const double y = x + rng.uniform(0.0, 10.0);
    l.v = {x};
    const double ax = alpha_from_logits(l).alpha[0];
    l.v = {y};
    const double ay = alpha_from_logits(l).alpha[0];
    CHECK(ay >= ax);
  }
}

TEST_CASE("predict implements p = alpha/S and u = K/S") {
  SUBCASE("zero evidence gives maximal uncertainty") {
    DirichletField a(1, 2);
    a.alpha = {1.0, 1.0};
    const auto pr = predict(a);
    CHECK(pr.p.v[0] == doctest::Approx(0.5));
    CHECK(pr.p.v[1] == doctest::Approx(0.5));
    CHECK(pr.u[0] == doctest::Approx(1.0));
  }
  SUBCASE("direct substitution") {
    DirichletField a(1, 2);
    a.alpha = {2.0, 1.0};
    const auto pr = predict(a);
    CHECK(pr.p.v[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(pr.p.v[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(pr.u[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("uncertainty vanishes as evidence grows") {
    double prev = 2.0;
    for (const double c : {1.0, 10.0, 1e3, 1e6}) {
      DirichletField a(1, 3);
      a.alpha = {c, c, c};
      const auto pr = predict(a);
      CHECK(pr.u[0] < prev);
      prev = pr.u[0];
    }
    CHECK(prev < 1e-5);
  }
  SUBCASE("rows sum to one, u*S = K") {
    Rng rng(9);
    DirichletField a(100, 19);
    for (double& v : a.alpha) v = rng.uniform(1.0, 80.0);
    const auto pr = predict(a);
    for (size_t i = 0; i < a.n; ++i) {
      double s = 0.0, row_sum = 0.0;
      for (int c = 0; c < a.k; ++c) {
        row_sum += pr.p.at(i, c);
        s += a.alpha[i * 19 + static_cast<size_t>(c)];
      }
      CHECK(std::fabs(row_sum - 1.0) < 1e-9);
      CHECK(std::fabs(pr.u[i] * s - a.k) < 1e-9);
      CHECK(pr.u[i] > 0.0);
      CHECK(pr.u[i] <= 1.0);
    }
  }
}

TEST_CASE("log_loss examples") {
  DirichletField a(1, 2);
  a.alpha = {2.0, 1.0};
  OneHotTargets t(1, 2);
  t.set_class(0, 0);
  CHECK(log_loss(a, t) == doctest::Approx(std::log(1.5)).epsilon(1e-15));

  SUBCASE("vanishes in the strong-evidence limit") {
    a.alpha = {1e12, 1.0};
    CHECK(log_loss(a, t) < 1e-10);
  }
  SUBCASE("additivity over elements") {
    DirichletField a2(2, 2);
    a2.alpha = {2.0, 1.0, 3.0, 1.5};
    OneHotTargets t2(2, 2);
    t2.set_class(0, 0);
    t2.set_class(1, 1);
    const double expect = std::log(3.0 / 2.0) + std::log(4.5 / 1.5);
    CHECK(log_loss(a2, t2) == doctest::Approx(expect).epsilon(1e-14));
  }
  SUBCASE("masked rows drop out") {
    DirichletField a2(2, 2);
    a2.alpha = {2.0, 1.0, 3.0, 1.5};
    OneHotTargets t2(2, 2);
    t2.set_class(0, 0);
    t2.set_class(1, 1);
    t2.active[1] = 0;
    CHECK(log_loss(a2, t2) == doctest::Approx(std::log(1.5)).epsilon(1e-14));
  }
  SUBCASE("all-zero unmasked row is a contract violation") {
    OneHotTargets bad(1, 2);
    CHECK_THROWS_AS(log_loss(a, bad), std::invalid_argument);
  }
  SUBCASE("non-negative on random fixtures") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      DirichletField af(5, 4);
      for (double& v : af.alpha) v = rng.uniform(1.0, 30.0);
      const auto tf = random_targets(rng, 5, 4);
      CHECK(log_loss(af, tf) >= 0.0);
    }
  }
}

TEST_CASE("kl_regularizer") {
  SUBCASE("uniform row has zero divergence") {
    DirichletField a(1, 4);
    a.alpha = {1.0, 1.0, 1.0, 1.0};
    OneHotTargets t(1, 4);
    t.set_class(0, 1);
    CHECK(std::fabs(kl_regularizer(a, t)) < 1e-9);
  }
  SUBCASE("gt evidence is removed before the divergence") {
    // alpha~ becomes all-ones regardless of the gt entry
    DirichletField a(1, 3);
    a.alpha = {500.0, 1.0, 1.0};
    OneHotTargets t(1, 3);
    t.set_class(0, 0);
    CHECK(std::fabs(kl_regularizer(a, t)) < 1e-9);
  }
  SUBCASE("matches the quadrature oracle, K=2") {
    DirichletField a(1, 2);
    a.alpha = {1.0, 3.0};
    OneHotTargets t(1, 2);
    t.set_class(0, 0);
    const double expect = oracles::kl_dirichlet_quadrature_k2(1.0, 3.0);
    CHECK(kl_regularizer(a, t) == doctest::Approx(expect).epsilon(1e-6));

    a.alpha = {7.5, 2.25};
    t = OneHotTargets(1, 2);
    t.set_class(0, 1);
    const double expect2 = oracles::kl_dirichlet_quadrature_k2(7.5, 1.0);
    CHECK(kl_regularizer(a, t) == doctest::Approx(expect2).epsilon(1e-6));
  }
  SUBCASE("matches the quadrature oracle, K=3") {
    DirichletField a(1, 3);
    a.alpha = {4.0, 1.0, 2.5};
    OneHotTargets t(1, 3);
    t.set_class(0, 1);
    const double expect = oracles::kl_dirichlet_quadrature_k3(4.0, 1.0, 2.5);
    CHECK(kl_regularizer(a, t) == doctest::Approx(expect).epsilon(1e-6));
  }
  SUBCASE("non-negative") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
      DirichletField a(4, 5);
      for (double& v : a.alpha) v = rng.uniform(1.0, 50.0);
      const auto t = random_targets(rng, 4, 5);
      CHECK(kl_regularizer(a, t) >= -1e-12);
    }
  }
}

TEST_CASE("losses are permutation-equivariant in the class axis") {
  Rng rng(23);
  const int k = 6;
  DirichletField a(8, k);
  for (double& v : a.alpha) v = rng.uniform(1.0, 40.0);
  const auto t = random_targets(rng, 8, k);

  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = k - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);

  DirichletField ap(8, k);
  OneHotTargets tp(8, k);
  for (size_t i = 0; i < 8; ++i) {
    for (int c = 0; c < k; ++c) {
      ap.alpha[i * k + static_cast<size_t>(perm[c])] = a.alpha[i * k + static_cast<size_t>(c)];
      tp.onehot[i * k + static_cast<size_t>(perm[c])] = t.onehot[i * k + static_cast<size_t>(c)];
    }
  }
  CHECK(log_loss(ap, tp) == doctest::Approx(log_loss(a, t)).epsilon(1e-12));
  CHECK(kl_regularizer(ap, tp) == doctest::Approx(kl_regularizer(a, t)).epsilon(1e-12));
}

TEST_CASE("lambda_schedule ramp") {
  CHECK(lambda_schedule(0, 100) == 0.0);
  CHECK(lambda_schedule(10 * 100, 100) == 0.0325);
  CHECK(lambda_schedule(20 * 100, 100) == 0.065);
  CHECK(lambda_schedule(50 * 100, 100) == 0.065);
  double prev = -1.0;
  for (int64_t t = 0; t < 3000; t += 37) {
    const double v = lambda_schedule(t, 100);
    CHECK(v >= prev);
    CHECK(v <= 0.065);
    prev = v;
  }
}

TEST_CASE("semantic_loss composition") {
  Rng rng(31);
  DirichletField a(10, 5);
  for (double& v : a.alpha) v = rng.uniform(1.0, 20.0);
  const auto t = random_targets(rng, 10, 5);

  SUBCASE("lambda 0 equals the log loss") {
    const auto s = semantic_loss(a, t, 0, 100);
    CHECK(s.total == doctest::Approx(log_loss(a, t)).epsilon(1e-15));
  }
  SUBCASE("equals log + lambda*kl computed independently") {
    const auto s = semantic_loss(a, t, 1500, 100);
    const double lambda = lambda_schedule(1500, 100);
    CHECK(s.total ==
          doctest::Approx(log_loss(a, t) + lambda * kl_regularizer(a, t)).epsilon(1e-14));
  }
  SUBCASE("all voxels masked gives zero") {
    OneHotTargets masked = t;
    std::fill(masked.active.begin(), masked.active.end(), 0);
    const auto s = semantic_loss(a, masked, 1500, 100);
    CHECK(s.total == 0.0);
  }
}

TEST_CASE("grad_semantic_loss matches central finite differences") {
  Rng rng(77);
  double max_rel = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 1 + rng.uniform_int(8);
    const int k = 2 + static_cast<int>(rng.uniform_int(19));
    Logits l = random_logits(rng, n, k);
    const auto targets = random_targets(rng, n, k);
    const int64_t t = static_cast<int64_t>(rng.uniform_int(3000));

    const Mat g = grad_semantic_loss(l, targets, t, 100);
    const auto fd = oracles::central_difference(l.v, [&]() {
      return semantic_loss(alpha_from_logits(l), targets, t, 100).total;
    });
    for (size_t i = 0; i < fd.size(); ++i) {
      const double scale = std::max({std::fabs(fd[i]), std::fabs(g.v[i]), 1e-6});
      max_rel = std::max(max_rel, std::fabs(fd[i] - g.v[i]) / scale);
    }
  }
  CHECK(max_rel <= 1e-4);
}

TEST_CASE("grad_semantic_loss edge behaviour") {
  SUBCASE("masked element gives a zero row") {
    Logits l(2, 3);
    l.v = {0.5, -0.25, 1.0, 2.0, 0.0, -1.0};
    OneHotTargets t(2, 3);
    t.set_class(0, 0);
    t.set_class(1, 2);
    t.active[0] = 0;
    const Mat g = grad_semantic_loss(l, t, 0, 1);
    CHECK(g.at(0, 0) == 0.0);
    CHECK(g.at(0, 1) == 0.0);
    CHECK(g.at(0, 2) == 0.0);
    CHECK(g.at(1, 0) != 0.0);
  }
  SUBCASE("gt gradient is non-positive and approaches zero with evidence") {
    OneHotTargets t(1, 2);
    t.set_class(0, 0);
    double prev_mag = 1.0;
    for (const double lv : {10.0, 50.0, 200.0}) {
      Logits l(1, 2);
      l.v = {lv, -30.0};
      const Mat g = grad_semantic_loss(l, t, 0, 1);
      CHECK(g.at(0, 0) <= 0.0);
      CHECK(std::fabs(g.at(0, 0)) < prev_mag);
      prev_mag = std::fabs(g.at(0, 0));
    }
    CHECK(prev_mag < 1e-4);
  }
}

TEST_CASE("aux_losses") {
  const std::vector<double> heat_gt = {0.0, 0.5, 1.0, 0.25};
  const std::vector<double> off_gt = {0, 0, 1, -1, 2, 0.5, 0, 0};
  const std::vector<uint8_t> valid = {1, 1, 0, 0};

  SUBCASE("exact prediction gives zero") {
    const auto a = aux_losses(heat_gt, heat_gt, off_gt, off_gt, valid);
    CHECK(a.heat_mse == 0.0);
    CHECK(a.offset_l1 == 0.0);
  }
  SUBCASE("uniform heatmap error of eps gives eps^2") {
    std::vector<double> pred = heat_gt;
    for (double& v : pred) v += 0.1;
    const auto a = aux_losses(pred, heat_gt, off_gt, off_gt, valid);
    CHECK(a.heat_mse == doctest::Approx(0.01).epsilon(1e-12));
  }
  SUBCASE("offset L1 averages valid cells only") {
    std::vector<double> pred = off_gt;
    pred[0] += 0.5;   // valid cell 0, dr
    pred[5] += 10.0;  // invalid cell 2, ignored
    const auto a = aux_losses(heat_gt, heat_gt, pred, off_gt, valid);
    CHECK(a.offset_l1 == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("empty mask gives zero by convention") {
    const std::vector<uint8_t> none = {0, 0, 0, 0};
    const auto a = aux_losses(heat_gt, heat_gt, off_gt, off_gt, none);
    CHECK(a.offset_l1 == 0.0);
  }
  SUBCASE("random fixture against the direct formula") {
    Rng rng(13);
    const size_t cells = 50;
    std::vector<double> hp(cells), hg(cells), op(cells * 2), og(cells * 2);
    std::vector<uint8_t> vm(cells);
    for (size_t i = 0; i < cells; ++i) {
      hp[i] = rng.uniform();
      hg[i] = rng.uniform();
      op[2 * i] = rng.uniform(-3, 3);
      op[2 * i + 1] = rng.uniform(-3, 3);
      og[2 * i] = rng.uniform(-3, 3);
      og[2 * i + 1] = rng.uniform(-3, 3);
      vm[i] = rng.uniform() < 0.5 ? 1 : 0;
    }
    double mse = 0.0, l1 = 0.0;
    size_t nv = 0;
    for (size_t i = 0; i < cells; ++i) {
      mse += (hp[i] - hg[i]) * (hp[i] - hg[i]);
      if (vm[i]) {
        l1 += std::fabs(op[2 * i] - og[2 * i]) + std::fabs(op[2 * i + 1] - og[2 * i + 1]);
        ++nv;
      }
    }
    const auto a = aux_losses(hp, hg, op, og, vm);
    CHECK(a.heat_mse == doctest::Approx(mse / cells).epsilon(1e-12));
    CHECK(a.offset_l1 == doctest::Approx(l1 / static_cast<double>(nv)).epsilon(1e-12));
  }
}

TEST_CASE("combine_losses identity") {
  SemanticLoss s{1.5, 2.0, 0.065, 1.5 + 0.065 * 2.0};
  AuxLosses aux{0.01, 0.2};
  const auto b = combine_losses(s, aux, 100.0, 10.0);
  CHECK(b.total == doctest::Approx(s.log_term + s.lambda_t * s.kl_term + 100.0 * 0.01 +
                                   10.0 * 0.2).epsilon(1e-15));
}

namespace {

// held-out set drawn from a known posterior: logits = log p(class|x) + c
struct CalibratedSet {
  Logits logits;
  std::vector<int32_t> targets;
};

CalibratedSet make_calibrated(Rng& rng, size_t n, int k) {
  CalibratedSet s;
  s.logits = Logits(n, k);
  s.targets.resize(n);
  for (size_t i = 0; i < n; ++i) {
    // random categorical posterior
    std::vector<double> p(static_cast<size_t>(k));
    double z = 0.0;
    for (double& v : p) {
      v = -std::log(1.0 - rng.uniform());
      z += v;
    }
    for (double& v : p) v /= z;
    // sample the label from it
    double r = rng.uniform();
    int y = k - 1;
    for (int c = 0; c < k; ++c) {
      if (r < p[static_cast<size_t>(c)]) {
        y = c;
        break;
      }
      r -= p[static_cast<size_t>(c)];
    }
    s.targets[i] = y;
    for (int c = 0; c < k; ++c) s.logits.at(i, c) = std::log(p[static_cast<size_t>(c)] + 1e-300);
  }
  return s;
}

}  // namespace

TEST_CASE("fit_temperature recovers scaling") {
  Rng rng(101);
  const auto set = make_calibrated(rng, 20000, 4);

  SUBCASE("already calibrated logits give T near 1") {
    const double t = fit_temperature(set.logits, set.targets);
    CHECK(std::fabs(t - 1.0) < 0.1);
  }
  SUBCASE("logits scaled by 3 give T near 3") {
    Logits scaled = set.logits;
    for (double& v : scaled.v) v *= 3.0;
    const double t = fit_temperature(scaled, set.targets);
    CHECK(std::fabs(t - 3.0) / 3.0 < 0.10);
  }
  SUBCASE("argmax is invariant under the fitted temperature") {
    for (const double t : {0.1, 1.0, 3.7, 19.0}) {
      const auto pr = ts_predict(set.logits, t);
      for (size_t i = 0; i < 200; ++i) {
        int am_logit = 0, am_p = 0;
        for (int c = 1; c < set.logits.k; ++c) {
          if (set.logits.at(i, c) > set.logits.at(i, am_logit)) am_logit = c;
          if (pr.p.at(i, c) > pr.p.at(i, am_p)) am_p = c;
        }
        CHECK(am_logit == am_p);
      }
    }
  }
  SUBCASE("single-class set returns init") {
    Logits l(5, 3);
    std::vector<int32_t> y(5, 1);
    CHECK(fit_temperature(l, y, 1.25) == 1.25);
  }
}

TEST_CASE("train_toy") {
  Rng rng(55);
  const int n = 400;
  Mat x(n, 2);
  std::vector<int32_t> y(n);
  for (int i = 0; i < n; ++i) {
    const int cls = i % 2;
    const double cx = cls == 0 ? -3.0 : 3.0;
    x.at(i, 0) = cx + rng.gaussian();
    x.at(i, 1) = rng.gaussian();
    y[i] = cls;
  }

  SUBCASE("zero epochs returns the initialization") {
    ToyTrainOptions opt;
    opt.epochs = 0;
    const auto m = train_toy(x, y, 2, opt, 9);
    // weights are the seeded init; bias untouched
    Rng ref(9);
    for (const double w : m.w) CHECK(w == 0.01 * ref.gaussian());
    for (const double b : m.b) CHECK(b == 0.0);
  }
  SUBCASE("separable blobs reach high train accuracy") {
    ToyTrainOptions opt;
    opt.epochs = 200;
    const auto m = train_toy(x, y, 2, opt, 9);
    const auto pred = predict(alpha_from_logits(m.logits(x)));
    int correct = 0;
    for (int i = 0; i < n; ++i) {
      const int am = pred.p.at(i, 0) >= pred.p.at(i, 1) ? 0 : 1;
      correct += am == y[static_cast<size_t>(i)] ? 1 : 0;
    }
    CHECK(static_cast<double>(correct) / n >= 0.98);
  }
  SUBCASE("deterministic for a fixed seed") {
    ToyTrainOptions opt;
    opt.epochs = 20;
    const auto m1 = train_toy(x, y, 2, opt, 123);
    const auto m2 = train_toy(x, y, 2, opt, 123);
    CHECK(m1.w == m2.w);
    CHECK(m1.b == m2.b);
  }
}
