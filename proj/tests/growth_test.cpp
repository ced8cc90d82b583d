#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cks/growth.hpp"
#include "cks/transforms.hpp"

namespace cks {
namespace {

TEST(Catalog, ExamplesAtFixedPoints) {
  EXPECT_DOUBLE_EQ(catalog_lookup("exp")(1.0), 1.0);
  EXPECT_NEAR(catalog_lookup("kondratiev", {{"beta", 0.5}})(8.0), 6.0, 1e-12);
  EXPECT_NEAR(catalog_lookup("bell")(1.0), std::numbers::e - 1.0, 1e-15);
  // w(r) = exp(2 sqrt(r log sqrt r))
  EXPECT_NEAR(catalog_lookup("bell_w")(std::exp(2.0)), 2.0 * std::sqrt(std::exp(2.0) * 1.0), 1e-12);
  EXPECT_EQ(catalog_lookup("bell_w")(0.5), 0.0);
  // u(r^2) = exp(r^k / k)
  EXPECT_NEAR(catalog_lookup("ouerdiane", {{"k", 1.5}})(4.0), std::pow(2.0, 1.5) / 1.5, 1e-14);
}

TEST(Catalog, Errors) {
  EXPECT_THROW(catalog_lookup("gamma"), InputError);
  EXPECT_THROW(catalog_lookup("kondratiev", {{"beta", 1.0}}), InputError);
  EXPECT_THROW(catalog_lookup("kondratiev", {{"beta", -0.1}}), InputError);
  EXPECT_THROW(catalog_lookup("kondratiev"), InputError);
  EXPECT_THROW(catalog_lookup("ouerdiane", {{"k", 2.5}}), InputError);
  EXPECT_THROW(catalog_lookup("exp", {{"beta", 0.1}}), InputError);
}

TEST(Catalog, ClosedFormsPresentWhereExpected) {
  auto e = catalog_lookup("exp");
  auto k = catalog_lookup("kondratiev", {{"beta", 0.25}});
  EXPECT_TRUE(e.closed_form_legendre && e.closed_form_dual);
  EXPECT_TRUE(k.closed_form_legendre && k.closed_form_dual);
  EXPECT_FALSE(catalog_lookup("bell").closed_form_dual);
}

TEST(Catalog, FiniteInLogDomainOnWideRange) {
  for (const char* spec : {"exp", "kondratiev:beta=0.5", "bell_w", "ouerdiane:k=1.5"}) {
    auto u = parse_growth_spec(spec);
    for (double r : {0.0, 1e-6, 1.0, 1e3, 1e6}) {
      EXPECT_TRUE(std::isfinite(u(r))) << spec << " at " << r;
    }
  }
  // bell's log value exceeds the double range past r ~ 709.78 and saturates
  auto bell = catalog_lookup("bell");
  EXPECT_TRUE(std::isfinite(bell(700.0)));
  EXPECT_EQ(bell(1e6), kInf);
  EXPECT_FALSE(std::isnan(bell(1e6)));
}

TEST(SpecParsing, RoundTripsAndReportsColumns) {
  auto u = parse_growth_spec("kondratiev:beta=0.5");
  EXPECT_EQ(u.name, "kondratiev");
  EXPECT_EQ(u.params.at("beta"), 0.5);
  EXPECT_EQ(u.spec(), "kondratiev:beta=0.5");
  EXPECT_EQ(parse_growth_spec("ouerdiane:k=1.5").spec(), "ouerdiane:k=1.5");
  EXPECT_EQ(parse_growth_spec("exp").spec(), "exp");
  EXPECT_THROW(parse_growth_spec("Exp"), InputError);
  try {
    parse_growth_spec("kondratiev:beta=0.x");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("column 17"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_growth_spec("kondratiev:beta"), InputError);
  EXPECT_THROW(parse_growth_spec(":beta=1"), InputError);
}

TEST(Grid, DefaultIsGeometric) {
  GridSpec g;
  auto pts = g.points();
  ASSERT_EQ(pts.size(), 400u);
  EXPECT_DOUBLE_EQ(pts.front(), 1e-6);
  EXPECT_DOUBLE_EQ(pts.back(), 1e6);
  EXPECT_NEAR(pts[1] / pts[0], pts[200] / pts[199], 1e-12);
  EXPECT_THROW((GridSpec{1.0, 0.5, 10}.points()), InputError);
  EXPECT_THROW((GridSpec{0.0, 1.0, 10, Spacing::geometric}.points()), InputError);
}

TEST(UConditions, ExpSatisfiesAll) {
  auto e = catalog_lookup("exp");
  auto u0 = check_u_condition(e, UCondition::U0);
  EXPECT_TRUE(u0.holds());
  EXPECT_EQ(u0.margin, 0.0);
  EXPECT_EQ(u0.witnesses.at(0), 0.0);
  EXPECT_TRUE(check_u_condition(e, UCondition::U1).holds());
  auto u2 = check_u_condition(e, UCondition::U2);
  EXPECT_TRUE(u2.holds());
  EXPECT_DOUBLE_EQ(u2.measured.at("limit_estimate"), 1.0);
  EXPECT_TRUE(check_u_condition(e, UCondition::U3).holds());
}

// Second-difference oracle for t -> 1.5 t^{4/3} on a uniform grid.
TEST(UConditions, KondratievU3AgreesWithSecondDifferences) {
  auto f = [](double t) { return 1.5 * std::pow(t, 4.0 / 3.0); };
  double h = 0.01;
  for (double t = h; t < 100.0; t += 0.37) {
    EXPECT_GE(f(t + h) - 2 * f(t) + f(t - h), 0.0);
  }
  auto k = catalog_lookup("kondratiev", {{"beta", 0.5}});
  EXPECT_TRUE(check_u_condition(k, UCondition::U3).holds());
  EXPECT_TRUE(check_u_condition(k, UCondition::U0).holds());
  auto u2 = check_u_condition(k, UCondition::U2);
  EXPECT_TRUE(u2.holds());
  EXPECT_LT(u2.measured.at("limit_estimate"), 0.02);
}

TEST(UConditions, FailuresCarryWitnesses) {
  // bell grows doubly exponentially: U2 fails at a sampled point
  auto u2 = check_u_condition(catalog_lookup("bell"), UCondition::U2);
  EXPECT_EQ(u2.verdict, Verdict::fails);
  ASSERT_FALSE(u2.witnesses.empty());

  GrowthFunction shifted;
  shifted.name = "shifted";
  shifted.log_u = [](double r) { return r + 0.5; };
  auto u0 = check_u_condition(shifted, UCondition::U0);
  EXPECT_EQ(u0.verdict, Verdict::fails);
  EXPECT_FALSE(u0.witnesses.empty());

  GrowthFunction bump;
  bump.name = "bump";
  bump.log_u = [](double r) { return std::sin(r) * std::sin(r); };
  auto u1 = check_u_condition(bump, UCondition::U1, GridSpec{0.1, 10.0, 100, Spacing::linear});
  EXPECT_EQ(u1.verdict, Verdict::fails);
  EXPECT_FALSE(u1.witnesses.empty());

  GrowthFunction rlogr;
  rlogr.name = "rlogr";
  rlogr.log_u = [](double r) { return r * std::log1p(r); };
  EXPECT_EQ(check_u_condition(rlogr, UCondition::U2).verdict, Verdict::inconclusive);
}

TEST(Convexity, ExpInBothClasses) {
  auto e = catalog_lookup("exp");
  EXPECT_TRUE(check_convexity_class(e, ConvexityClass::log_exp).holds());
  EXPECT_TRUE(check_convexity_class(e, ConvexityClass::log_xk, 2.0).holds());
  EXPECT_THROW(check_convexity_class(e, ConvexityClass::log_xk, 0.0), InputError);
}

// x -> log w(x^2) = 2 x sqrt(log x) on x > 1 has second derivative
// (2 - 1/log x) / (2 x sqrt(log x)) ... positive iff log x > 1/2, i.e. r = x^2 > e.
TEST(Convexity, BellWConvexOnlyBeyondE) {
  auto f = [](double x) { return 2.0 * x * std::sqrt(std::log(x)); };
  const double h = 1e-4;
  auto d2 = [&](double x) { return f(x + h) - 2 * f(x) + f(x - h); };
  EXPECT_LT(d2(std::sqrt(std::numbers::e) * 0.95), 0.0);
  EXPECT_GT(d2(std::sqrt(std::numbers::e) * 1.05), 0.0);

  auto rep = check_convexity_class(catalog_lookup("bell_w"), ConvexityClass::log_xk, 2.0);
  EXPECT_EQ(rep.verdict, Verdict::fails);
  ASSERT_TRUE(rep.measured.count("holds_from"));
  const double r0 = rep.measured.at("holds_from");
  EXPECT_GT(r0, std::numbers::e / 1.1);
  EXPECT_LT(r0, std::numbers::e * 1.1);
  // from r0 on, the same check passes
  GridSpec tail{r0 * 1.08, 1e6, 300};
  EXPECT_TRUE(check_convexity_class(catalog_lookup("bell_w"), ConvexityClass::log_xk, 2.0, tail).holds());
}

TEST(Theta, ExpAndKondratiev) {
  auto th = theta_from_u(catalog_lookup("exp"));
  for (double s : {0.0, 0.3, 2.0, 17.0}) EXPECT_NEAR(th(s), 0.5 * s * s, 1e-12 * (1 + s * s));

  auto back = u_from_theta([](double s) { return 0.5 * s * s; });
  for (double r : {0.0, 0.5, 3.0, 1e4}) EXPECT_NEAR(back(r), r, 1e-12 * (1 + r));

  const double beta = 0.5;
  auto thk = theta_from_u(catalog_lookup("kondratiev", {{"beta", beta}}));
  for (double s : {0.1, 1.0, 5.0}) {
    EXPECT_NEAR(thk(s), (1 + beta) * std::pow(s, 2 / (1 + beta)) / 2, 1e-12 * (1 + s * s));
  }
}

TEST(Theta, RoundTripIsIdentityOnGrid) {
  for (const char* spec : {"exp", "kondratiev:beta=0.75", "bell_w", "ouerdiane:k=1.2"}) {
    auto u = parse_growth_spec(spec);
    auto v = u_from_theta(theta_from_u(u));
    for (double r : GridSpec{}.points()) {
      const double a = u(r), b = v(r);
      EXPECT_LE(std::abs(a - b), 1e-12 * std::max(std::abs(a), 1e-300)) << spec << " r=" << r;
    }
  }
}

TEST(Equivalence, Identities) {
  auto e = catalog_lookup("exp");
  auto rep = check_equivalence(e, e);
  ASSERT_TRUE(rep.holds());
  EXPECT_EQ(rep.measured.at("b1"), 1.0);
  EXPECT_EQ(rep.measured.at("b2"), 1.0);
  EXPECT_EQ(rep.measured.at("log_a1"), 0.0);
  EXPECT_EQ(rep.measured.at("log_a2"), 0.0);
  EXPECT_EQ(rep.measured.at("r0"), 0.0);

  auto k0 = catalog_lookup("kondratiev", {{"beta", 0.0}});
  auto rk = check_equivalence(e, k0);
  ASSERT_TRUE(rk.holds());
  EXPECT_EQ(rk.measured.at("b1"), 1.0);
  EXPECT_NEAR(rk.measured.at("log_a1"), 0.0, 1e-12);
}

TEST(Equivalence, DualOfBellAgainstW) {
  auto u = dual_function(catalog_lookup("bell"));
  auto w = catalog_lookup("bell_w");
  auto rep = check_equivalence(u, w);
  ASSERT_TRUE(rep.holds());
  for (const char* key : {"log_a1", "log_a2", "b1", "b2", "r0"}) {
    EXPECT_TRUE(std::isfinite(rep.measured.at(key))) << key;
  }
  // exp and kondratiev(0.5) are not equivalent: exp(r) outgrows exp(1.5 r^{2/3}) at any scale
  auto none = check_equivalence(catalog_lookup("exp"), catalog_lookup("kondratiev", {{"beta", 0.5}}));
  EXPECT_FALSE(none.holds());
}

TEST(SuperrootGrowth, CatalogMembers) {
  EXPECT_TRUE(check_superroot_growth(catalog_lookup("exp")).holds());
  EXPECT_TRUE(check_superroot_growth(catalog_lookup("bell")).holds());
  EXPECT_TRUE(check_superroot_growth(catalog_lookup("bell_w")).holds());
  EXPECT_TRUE(check_superroot_growth(catalog_lookup("kondratiev", {{"beta", 0.75}})).holds());
  EXPECT_TRUE(check_superroot_growth(catalog_lookup("ouerdiane", {{"k", 1.5}})).holds());
  // log u = sqrt(r): the ratio is constant
  const auto edge = check_superroot_growth(catalog_lookup("ouerdiane", {{"k", 1.0}}));
  EXPECT_EQ(edge.verdict, Verdict::fails);
  EXPECT_NEAR(edge.measured.at("tail_last_ratio"), 1.0, 1e-12);
}

}  // namespace
}  // namespace cks
