#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "cks/chaos.hpp"

namespace cks {
namespace {

using cd = std::complex<double>;
constexpr double kE = std::numbers::e;
const GrowthFunction kExp = catalog_lookup("exp");

// Dense reference: visit every ordered index tuple of a kernel.
void for_each_tuple(int d, int k, const std::function<void(const MultiIndex&)>& f) {
  MultiIndex t(k, 0);
  for (;;) {
    f(t);
    int i = 0;
    while (i < k && ++t[i] == d) t[i++] = 0;
    if (i == k) return;
  }
}

double dense_norm_sq(const KernelTensor& k, const SpaceModel& s, double p1, double p2) {
  double total = 0.0;
  for_each_tuple(s.d(), k.l(), [&](const MultiIndex& a) {
    for_each_tuple(s.d(), k.m(), [&](const MultiIndex& b) {
      double w = 1.0;
      for (int i : a) w *= std::pow(s.lambda(i), 2 * p1);
      for (int j : b) w *= std::pow(s.lambda(j), 2 * p2);
      total += w * std::norm(k.get(a, b));
    });
  });
  return total;
}

cd dense_bilinear(const KernelTensor& f, const KernelTensor& g) {
  cd total{};
  for_each_tuple(f.d(), f.l(), [&](const MultiIndex& a) {
    for_each_tuple(f.d(), f.m(), [&](const MultiIndex& b) { total += f.get(a, b) * g.get(a, b); });
  });
  return total;
}

cd dense_contract(const KernelTensor& f, const cvec& x, const cvec& y) {
  cd total{};
  for_each_tuple(f.d(), f.l(), [&](const MultiIndex& a) {
    for_each_tuple(f.d(), f.m(), [&](const MultiIndex& b) {
      cd t = f.get(a, b);
      for (int i : a) t *= x[i];
      for (int j : b) t *= y[j];
      total += t;
    });
  });
  return total;
}

cvec random_point(int d, Rng& rng, double scale = 1.0) {
  cvec v(d);
  for (auto& c : v) c = scale * rng.complex_normal();
  return v;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
double rel(cd a, cd b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

TEST(Space, ValidationAndNorms) {
  EXPECT_THROW(SpaceModel({1.0}), InputError);
  EXPECT_THROW(SpaceModel({3.0, 2.0}), InputError);
  EXPECT_THROW(SpaceModel(std::vector<double>{}), InputError);
  SpaceModel s({2.0, 3.0});
  EXPECT_DOUBLE_EQ(s.rho(), 0.5);
  EXPECT_DOUBLE_EQ(SpaceModel::uniform(1, 2.0).hs_norm(3, 1), 1.0 / 16);
  EXPECT_GT(s.hs_norm(2, 1), s.hs_norm(3, 1));
  EXPECT_THROW(s.hs_norm(1, 1), PreconditionError);
  EXPECT_DOUBLE_EQ(s.norm_sq(cvec{1.0, cd(0, 1)}, 1), 4.0 + 9.0);
  EXPECT_DOUBLE_EQ(s.norm_sq(cvec{2.0, 3.0}, -1), 2.0);
}

TEST(Kernel, MultiplicityAndMultisets) {
  EXPECT_EQ(multiplicity({0, 0, 1}), 3.0);
  EXPECT_EQ(multiplicity({0, 1, 2}), 6.0);
  EXPECT_EQ(multiplicity({}), 1.0);
  for (int d = 1; d <= 4; ++d)
    for (int k = 0; k <= 5; ++k) {
      std::size_t n = 0;
      double perms = 0;
      for_each_multiset(d, k, [&](const MultiIndex& a) {
        ++n;
        perms += multiplicity(a);
        EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
      });
      EXPECT_EQ(n, multiset_count(d, k));
      EXPECT_EQ(perms, std::pow(d, k));
    }
  KernelTensor k(2, 2, 1);
  k.set({1, 0}, {1}, 2.0);
  EXPECT_EQ(k.get({0, 1}, {1}), cd(2.0));
  EXPECT_THROW(k.set({0}, {1}, 1.0), InputError);
  EXPECT_THROW(k.set({0, 2}, {1}, 1.0), InputError);
}

TEST(Chaos, SparseMatchesDenseOracle) {
  Rng rng(11);
  for (int d = 1; d <= 3; ++d) {
    std::vector<double> lam;
    for (int j = 0; j < d; ++j) lam.push_back(1.5 + 0.5 * j);
    SpaceModel s(lam);
    auto f = random_chaos(s, 4, rng);
    auto g = random_chaos(s, 4, rng);
    const cvec x = random_point(d, rng), y = random_point(d, rng);
    cd pair_dense{}, eval_dense{};
    double l2_dense = 0.0;
    for (const auto& [lm, k] : f.kernels()) {
      for (double p : {0.0, 0.7, -1.3})
        EXPECT_LE(rel(k.norm_sq(s, p, 0.5 * p), dense_norm_sq(k, s, p, 0.5 * p)), 1e-12);
      const KernelTensor& kg = *g.kernel(lm.first, lm.second);
      EXPECT_LE(rel(k.bilinear(kg), dense_bilinear(k, kg)), 1e-12);
      const double fact = std::tgamma(lm.first + 1.0) * std::tgamma(lm.second + 1.0);
      pair_dense += fact * dense_bilinear(k, kg);
      eval_dense += dense_contract(k, x, y);
      l2_dense += fact * dense_norm_sq(k, s, 0, 0);
    }
    EXPECT_LE(rel(pairing(f, g), pair_dense), 1e-12);
    EXPECT_LE(rel(evaluate(f, x, y), eval_dense), 1e-12);
    EXPECT_LE(rel(l2_norm(f), std::sqrt(l2_dense)), 1e-12);
  }
}

TEST(Chaos, NormTestExamples) {
  auto s = SpaceModel::uniform(1, 2.0);
  EXPECT_DOUBLE_EQ(norm_test(ChaosVector::constant(s), kExp, kExp, 1, 1), 1.0);
  auto f11 = ChaosVector::monomial(s, {0}, {0});
  const double n = norm_test(f11, kExp, kExp, 1, 1);
  EXPECT_NEAR(n * n, 16 / (kE * kE), 1e-12);
  EXPECT_NEAR(n * n, 2.16536, 1e-5);
  EXPECT_NEAR(norm_test(f11.scaled(3.0), kExp, kExp, 1, 1), 3 * n, 1e-12);
}

TEST(Chaos, NormDualExamples) {
  auto s = SpaceModel::uniform(1, 2.0);
  EXPECT_NEAR(norm_dual(ChaosVector::constant(s), kExp, kExp, 1, 1), 1.0, 1e-12);
  auto F = ChaosVector::monomial(s, {0}, {});
  const double n = norm_dual(F, kExp, kExp, 1, 1);
  EXPECT_NEAR(n * n, 1 / (4 * kE), 1e-10);
  Rng rng(3);
  auto r = random_chaos(SpaceModel({2.0, 2.5}), 3, rng);
  EXPECT_NEAR(norm_dual(r.conj(), kExp, kExp, 0.5, 1), norm_dual(r, kExp, kExp, 0.5, 1), 1e-12);
}

TEST(Chaos, PairingExamplesAndBilinearity) {
  auto s = SpaceModel::uniform(2, 2.0);
  EXPECT_EQ(pairing(ChaosVector::constant(s, cd(2, -1)), ChaosVector::constant(s)), cd(2, -1));
  auto e11 = ChaosVector::monomial(s, {0}, {0});
  EXPECT_EQ(pairing(e11, e11), cd(1.0));
  Rng rng(5);
  auto a = random_chaos(s, 3, rng), b = random_chaos(s, 3, rng), c = random_chaos(s, 3, rng);
  const cd alpha(0.3, -2.0);
  EXPECT_LE(rel(pairing(a.plus(b.scaled(alpha)), c), pairing(a, c) + alpha * pairing(b, c)), 1e-12);
  EXPECT_LE(rel(pairing(c, a.plus(b.scaled(alpha))), pairing(c, a) + alpha * pairing(c, b)), 1e-12);
  EXPECT_THROW(pairing(a, ChaosVector::constant(SpaceModel::uniform(2, 3.0))), InputError);
}

TEST(Chaos, PairingBoundWithExactDualWeight) {
  SpaceModel s({2.0, 3.0});
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    auto F = random_chaos(s, 4, rng), f = random_chaos(s, 4, rng);
    for (double p : {0.0, 1.0})
      EXPECT_LE(std::abs(pairing(F, f)), norm_dual_exact(F, kExp, kExp, p, p) * norm_test(f, kExp, kExp, p, p) * (1 + 1e-12));
  }
  // exact weight over the displayed one: (n!)^2 e^{2n} / n^{2n}, about 2 pi n
  auto gap = log_dual_weight_gap(kExp, 30);
  EXPECT_NEAR(gap[0], 0.0, 1e-12);
  for (int n = 1; n <= 30; ++n) {
    EXPECT_NEAR(gap[n], 2 * log_factorial(n) + 2 * n - 2 * n * std::log(n), 1e-8);
    EXPECT_NEAR(gap[n], std::log(2 * std::numbers::pi * n), 0.2 / n);
  }
}

TEST(Chaos, EvaluateExamples) {
  auto s = SpaceModel::uniform(2, 2.0);
  const cvec y{cd(0.3, 1), cd(-2)};
  EXPECT_EQ(evaluate(ChaosVector::constant(s), cvec{cd(5), cd(1)}, y), cd(1.0));
  EXPECT_EQ(evaluate(ChaosVector::monomial(s, {0}, {}), cvec{cd(2), cd(0)}, y), cd(2.0));
  // e1 (x) e2 symmetrised has component 1/2 at (0,1) and (1,0)
  const cd a(1.5, -0.5), b(0.25, 2);
  EXPECT_LE(rel(evaluate(ChaosVector::monomial(s, {0, 1}, {}, 0.5), cvec{a, b}, y), a * b), 1e-15);
}

TEST(Chaos, SwapBlocksRoundTrip) {
  SpaceModel s({2.0, 2.0});
  Rng rng(1);
  auto f = random_chaos(s, 4, rng);
  auto g = f.swap_blocks().swap_blocks();
  EXPECT_EQ(pairing(f, f), pairing(g, f));
  auto k = catalog_lookup("kondratiev", {{"beta", 0.5}});
  EXPECT_NEAR(norm_test(f.swap_blocks(), k, kExp, 2, 1), norm_test(f, kExp, k, 1, 2), 1e-12);
  const cvec x = random_point(2, rng), y = random_point(2, rng);
  EXPECT_LE(rel(evaluate(f.swap_blocks(), y, x), evaluate(f, x, y)), 1e-13);
}

TEST(Chaos, ExponentialVector) {
  auto s = SpaceModel::uniform(2, 2.0);
  const cvec zero(2);
  auto e0 = exponential_vector(s, zero, zero, 4, 4);
  EXPECT_EQ(evaluate(e0, cvec{cd(3), cd(1, 1)}, cvec{cd(-2), cd(0.5)}), cd(1.0));

  const cvec xi0{cd(0.3, 0.1), cd(-0.2)}, eta0{cd(0.1), cd(0.2, -0.4)};
  const cvec xi{cd(-0.5), cd(0.4, 0.3)}, eta{cd(0.2, 0.1), cd(0.6)};
  auto dot = [](const cvec& a, const cvec& b) { return a[0] * b[0] + a[1] * b[1]; };
  const int L = 25;
  auto ex0 = exponential_vector(s, xi0, eta0, L, L);
  auto ex = exponential_vector(s, xi, eta, L, L);
  const cd target = std::exp(2.0 * dot(xi0, xi) + 2.0 * dot(eta0, eta));
  EXPECT_LE(rel(pairing(ex0, ex), target), 1e-14);
  EXPECT_LE(rel(s_transform(ex0, xi, eta), target), 1e-14);
  const cvec x{cd(0.7), cd(-0.1, 0.2)}, y{cd(0.0, 0.5), cd(1.0)};
  const cd ev = std::exp(std::numbers::sqrt2 * (dot(x, xi0) + dot(y, eta0)));
  EXPECT_LE(rel(evaluate(ex0, x, y), ev), 1e-14);
}

TEST(Chaos, STransformExamples) {
  auto s = SpaceModel::uniform(2, 2.0);
  const cvec xi{cd(0.4, -1), cd(2)}, eta{cd(1), cd(0.1)};
  EXPECT_EQ(s_transform(ChaosVector::constant(s), xi, eta), cd(1.0));
  EXPECT_LE(rel(s_transform(ChaosVector::monomial(s, {0}, {}), xi, eta), std::numbers::sqrt2 * xi[0]), 1e-15);
  auto q = s_transform_integral(ChaosVector::monomial(s, {0}, {}), xi, eta, 1);
  EXPECT_LE(rel(q.value, std::numbers::sqrt2 * xi[0]), 1e-14);
}

TEST(Chaos, STransformIntegralAgreesWithPairingForm) {
  SpaceModel s({2.0, 3.0});
  Rng rng(21);
  for (int i = 0; i < 5; ++i) {
    auto f = random_chaos(s, 4, rng);
    const cvec xi = random_point(2, rng, 0.7), eta = random_point(2, rng, 0.7);
    auto q = s_transform_integral(f, xi, eta, 3);
    EXPECT_TRUE(q.exact);
    EXPECT_LE(std::abs(q.value - s_transform(f, xi, eta)), 1e-10 * std::max(1.0, std::abs(q.value)));
  }
}

TEST(Chaos, GaussHermiteExactnessOnMonomials) {
  auto s = SpaceModel::uniform(2, 2.0);
  const cvec xi{cd(0.5, 0.2), cd(-0.3)}, eta{cd(0.1, -0.6), cd(0.8)};
  for (int order = 1; order <= 3; ++order) {
    const int top = 2 * order - 1;
    for (int l = 0; l <= top; ++l)
      for (int m = 0; m <= top - l; ++m) {
        MultiIndex a(l), b(m);
        for (int i = 0; i < l; ++i) a[i] = i % 2;
        for (int j = 0; j < m; ++j) b[j] = (j + 1) % 2;
        auto mono = ChaosVector::monomial(s, a, b, cd(0.7, 0.2));
        auto q = s_transform_integral(mono, xi, eta, order);
        EXPECT_TRUE(q.exact);
        EXPECT_LE(std::abs(q.value - s_transform(mono, xi, eta)), 1e-12) << order << " " << l << " " << m;
      }
  }
  // even power beyond exactness: E z^4 != 0 for a low-order rule
  auto high = ChaosVector::monomial(s, {0, 0, 0, 0}, {});
  auto q = s_transform_integral(high, cvec(2), cvec(2), 2);
  EXPECT_FALSE(q.exact);
}

TEST(Quadrature, GaussHermiteMoments) {
  for (int n : {1, 5, 20, 60}) {
    auto r = gauss_hermite(n);
    double s0 = 0, s2 = 0, s4 = 0;
    for (int i = 0; i < n; ++i) {
      s0 += r.weights[i];
      s2 += r.weights[i] * r.nodes[i] * r.nodes[i];
      s4 += r.weights[i] * std::pow(r.nodes[i], 4);
    }
    EXPECT_NEAR(s0, 1.0, 1e-13);
    if (n >= 2) { EXPECT_NEAR(s2, 0.5, 1e-13); }
    if (n >= 3) { EXPECT_NEAR(s4, 0.75, 1e-13); }
  }
  EXPECT_THROW(gauss_hermite(0), InputError);
}

TEST(SupNorm, ConstantAndLinear) {
  auto s = SpaceModel::uniform(1, 2.0);
  auto c = sup_norm(ChaosVector::constant(s), kExp, kExp, 1, 1);
  EXPECT_GE(c.value, 1 - 1e-9);
  EXPECT_LE(c.value, 1 + 1e-12);
  // |x| e^{-|x|^2/2} peaks at |x| = 1
  auto lin = ChaosVector::monomial(s, {0}, {});
  auto e1 = sup_norm(lin, kExp, kExp, 0, 0);
  EXPECT_NEAR(e1.value, std::exp(-0.5), 1e-7);
  EXPECT_LE(e1.value, std::exp(-0.5) + 1e-12);
  auto e2 = sup_norm(lin.scaled(2.0), kExp, kExp, 0, 0);
  EXPECT_NEAR(e2.value, 2 * e1.value, 1e-7);
  // with p = 1 the weight is |x|^2 / lambda^2: sup = lambda e^{-1/2}
  EXPECT_NEAR(sup_norm(lin, kExp, kExp, 1, 1).value, 2 * std::exp(-0.5), 1e-6);
}

TEST(SupNorm, NeverExceedsCauchySchwarzBound) {
  // |phi(x,y)| <= norm_test * sqrt(L(|x|^2_{-p}) L(|y|^2_{-p})), and L = exp for
  // the exponential growth only in the limit, so use the direct bound
  SpaceModel s({2.0, 3.0});
  Rng rng(17);
  LFunction L(kExp);
  for (int i = 0; i < 5; ++i) {
    auto f = random_chaos(s, 3, rng);
    auto est = sup_norm(f, kExp, kExp, 1, 1, {.directions = 8, .candidates = {}});
    const double lx = L.evaluate(s.norm_sq(est.x, -1)).log_value;
    const double ly = L.evaluate(s.norm_sq(est.y, -1)).log_value;
    const double bound = norm_test(f, kExp, kExp, 1, 1) * std::exp(0.5 * (lx + ly - kExp(s.norm_sq(est.x, -1)) -
                                                                         kExp(s.norm_sq(est.y, -1))));
    EXPECT_LE(est.value, bound * (1 + 1e-12));
    EXPECT_NEAR(std::abs(evaluate(f, est.x, est.y)) *
                    std::exp(-0.5 * (s.norm_sq(est.x, -1) + s.norm_sq(est.y, -1))),
                est.value, 1e-12 * est.value);
  }
}

TEST(Chaos, MonotoneInPAndEmbedding) {
  SpaceModel s({2.0, 2.5});
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    auto f = random_chaos(s, 4, rng);
    double prev = 0;
    for (double p = 0; p <= 3; p += 0.5) {
      const double n = norm_test(f, kExp, kExp, p, p);
      EXPECT_GE(n, prev);
      prev = n;
    }
    for (double p : {1.0, 2.0}) {
      const double C = embedding_constant(s, kExp, kExp, p, 4);
      EXPECT_TRUE(std::isfinite(C));
      const double n = norm_test(f, kExp, kExp, p, p);
      EXPECT_LE(l2_norm(f) * l2_norm(f), C * n * n * (1 + 1e-12));
    }
  }
}

TEST(Random, StreamsAreReproducible) {
  Rng a(42, 3), b(42, 3), c(42, 4);
  EXPECT_EQ(a.normal(), b.normal());
  EXPECT_NE(Rng(42, 3).normal(), c.normal());
  Rng r1(8), r2(8);
  auto f = random_chaos(SpaceModel::uniform(2, 2.0), 3, r1), g = random_chaos(SpaceModel::uniform(2, 2.0), 3, r2);
  EXPECT_EQ(pairing(f, f), pairing(g, g));
}

}  // namespace
}  // namespace cks
