#pragma once

// Two-sided comparison of the sup norm |||.|||_{p1,p2} of the analytic
// extension with the chaos test norm ||.||_{p1,p2} on random vectors.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "cks/chaos.hpp"
#include "cks/errors.hpp"
#include "cks/growth.hpp"
#include "cks/numeric.hpp"
#include "cks/optimize.hpp"
#include "cks/quadrature.hpp"
#include "cks/random.hpp"
#include "cks/space.hpp"
#include "cks/transforms.hpp"

namespace cks {

/// log sup_r sqrt(L_u(s r) / u(r)), so that |phi(x,y)| u1^{-1/2} u2^{-1/2}
/// at level p is bounded by the test norm at q times the product of these
/// factors with s = rho^{2(q-p)}. +inf if the ratio still rises at the edge
/// of the scanned range.
inline double log_sup_l_ratio(const GrowthFunction& u, double s, double r_max = 1e4) {
  const LFunction L(u, kVerifierTermBudget);
  auto g = [&](double r) { return 0.5 * (L.evaluate(s * r).log_value - u(r)); };
  const int n = 801;
  const double lo = std::log(1e-6), hi = std::log(r_max);
  double best = g(0.0);
  int arg = -1;
  std::vector<double> vals(n);
  for (int i = 0; i < n; ++i) {
    vals[i] = g(std::exp(lo + (hi - lo) * i / (n - 1)));
    if (vals[i] > best) {
      best = vals[i];
      arg = i;
    }
  }
  if (arg == n - 1) return kInf;
  if (arg >= 0) {
    const double step = (hi - lo) / (n - 1);
    const double c = lo + step * arg;
    auto f = [&](double x) { return -g(std::exp(x)); };
    const LineMinimum m = detail::golden_section(f, c - step, c + step, 1e-12);
    best = std::max(best, -m.value);
  }
  return best;
}

struct LIntegral {
  double value = kNaN;
  double half_width = 0.0;  // Monte-Carlo only
  std::string method;
  std::size_t points = 0;
};

/// E u(4 |x|^2_{-q})^{1/2} for x standard complex Gaussian (real and
/// imaginary parts N(0, 1/2)). Tensor Gauss-Hermite when the grid has at
/// most max_grid points, otherwise Monte Carlo.
inline LIntegral gaussian_weight_integral(const GrowthFunction& u, const SpaceModel& space, double q, int gh_order = 40,
                                          std::size_t max_grid = 1'000'000, std::size_t mc_samples = 200000,
                                          std::uint64_t seed = 1) {
  const int d = space.d();
  LIntegral out;
  std::vector<double> scale(d);
  for (int j = 0; j < d; ++j) scale[j] = std::pow(space.lambda(j), -2 * q);
  if (std::pow(static_cast<double>(gh_order), 2.0 * d) <= static_cast<double>(max_grid)) {
    const auto rule = gauss_hermite(gh_order);
    std::vector<double> logs, logw;
    for_each_tensor_node(rule, 2 * d, [&](const std::vector<double>& t, double w) {
      double r = 0.0;
      for (int j = 0; j < d; ++j) r += scale[j] * (t[2 * j] * t[2 * j] + t[2 * j + 1] * t[2 * j + 1]);
      logs.push_back(std::log(w) + 0.5 * u(4 * r));
    });
    out.value = std::exp(log_sum_exp(logs));
    out.method = "gauss-hermite order " + std::to_string(gh_order);
    out.points = logs.size();
    return out;
  }
  Rng rng(seed, 0x1a7eULL);
  std::vector<double> vals(mc_samples);
  double sum = 0.0, sum2 = 0.0;
  for (auto& v : vals) {
    double r = 0.0;
    for (int j = 0; j < d; ++j) r += scale[j] * std::norm(rng.complex_normal());
    v = std::exp(0.5 * u(4 * r));
    sum += v;
    sum2 += v * v;
  }
  const double n = static_cast<double>(mc_samples);
  out.value = sum / n;
  out.half_width = 2.5758293035489004 * std::sqrt(std::max(0.0, sum2 / n - out.value * out.value) / n);
  out.method = "monte-carlo";
  out.points = mc_samples;
  return out;
}

struct NormEquivalenceOptions {
  int samples = 100;
  int max_degree = 3;
  int gh_order = 40;
  std::size_t mc_samples = 200000;
  std::uint64_t seed = 1;
  bool strict = true;  // throw when the contraction precondition fails
  SupNormOptions sup;
};

struct NormEquivalenceRow {
  int index = 0;
  int degree = 0;
  double sup_p = 0.0;    // |||phi|||_{p1,p2}
  double norm_q = 0.0;   // ||phi||_{q1,q2}
  double ae_ratio = 0.0; // sup_p / (C_ae norm_q)
  double norm_p = 0.0;   // ||phi||_{p1,p2}
  double sup_q = 0.0;    // |||phi|||_{q1,q2}
  double ea_ratio = kNaN;  // norm_p^2 / (C_ea sup_q^2)
};

struct NormEquivalenceReport {
  double p1 = 0, p2 = 0, q1 = 0, q2 = 0;
  double C_ae = kNaN;
  std::array<double, 2> hs{};
  std::array<double, 2> contraction{};  // 8 e^2 hs
  bool ea_precondition = false;
  std::string precondition_message;
  std::array<LIntegral, 2> L_factors;
  double L = kNaN;
  double L_exact = kNaN;  // closed form for exp weights
  double C_ea = kNaN;     // L^2 prod (1 - 8 e^2 hs)^{-1}
  std::vector<NormEquivalenceRow> rows;
  double worst_ae = 0.0, worst_ea = 0.0;
  int worst_ae_index = -1, worst_ea_index = -1;
  bool ae_holds = false;
  bool ea_holds = false;
  bool holds() const { return ae_holds && ea_holds; }
};

/// Checks |||phi|||_{p} <= C_ae ||phi||_{q} and
/// ||phi||_p^2 <= L^2 prod_i (1 - 8 e^2 hs_i)^{-1} |||phi|||_q^2 on random
/// vectors. The sup norms are lower estimates from a search, which makes
/// the first check lenient and the second conservative.
inline NormEquivalenceReport norm_equivalence_experiment(const SpaceModel& space, const GrowthFunction& u1,
                                                         const GrowthFunction& u2, double p1, double p2, double q1,
                                                         double q2, const NormEquivalenceOptions& opt = {}) {
  if (!(q1 > p1) || !(q2 > p2)) throw PreconditionError("norm equivalence: need q_i > p_i");
  NormEquivalenceReport rep;
  rep.p1 = p1;
  rep.p2 = p2;
  rep.q1 = q1;
  rep.q2 = q2;
  constexpr double e2 = std::numbers::e * std::numbers::e;
  rep.hs = {space.hs_norm(q1, p1), space.hs_norm(q2, p2)};
  rep.contraction = {8 * e2 * rep.hs[0], 8 * e2 * rep.hs[1]};
  rep.ea_precondition = rep.contraction[0] < 1 && rep.contraction[1] < 1;
  if (!rep.ea_precondition) {
    rep.precondition_message = "8 e^2 hs = (" + std::to_string(rep.contraction[0]) + ", " +
                               std::to_string(rep.contraction[1]) + ") is not < 1";
    if (opt.strict) throw PreconditionError("norm equivalence: " + rep.precondition_message);
  }

  const double rho = space.rho();
  rep.C_ae = std::exp(log_sup_l_ratio(u1, std::pow(rho, 2 * (q1 - p1))) +
                      log_sup_l_ratio(u2, std::pow(rho, 2 * (q2 - p2))));

  rep.L_factors = {gaussian_weight_integral(u1, space, q1, opt.gh_order, 1'000'000, opt.mc_samples, opt.seed),
                   gaussian_weight_integral(u2, space, q2, opt.gh_order, 1'000'000, opt.mc_samples, opt.seed + 1)};
  rep.L = rep.L_factors[0].value * rep.L_factors[1].value;
  if (u1.name == "exp" && u2.name == "exp") {
    double l = 0.0;
    bool finite = true;
    for (double q : {q1, q2})
      for (int j = 0; j < space.d(); ++j) {
        const double a = 2 * std::pow(space.lambda(j), -2 * q);
        if (a >= 1) finite = false;
        else l -= std::log1p(-a);
      }
    rep.L_exact = finite ? std::exp(l) : kInf;
  }
  if (rep.ea_precondition)
    rep.C_ea = rep.L * rep.L / ((1 - rep.contraction[0]) * (1 - rep.contraction[1]));

  Rng rng(opt.seed);
  rep.ae_holds = true;
  rep.ea_holds = rep.ea_precondition;
  for (int k = 0; k < opt.samples; ++k) {
    NormEquivalenceRow row;
    row.index = k;
    row.degree = opt.max_degree == 0 ? 0 : k % (opt.max_degree + 1);
    const ChaosVector phi =
        row.degree == 0 ? ChaosVector::constant(space, rng.complex_normal()) : random_chaos(space, row.degree, rng);
    SupNormOptions so = opt.sup;
    so.seed = stream_seed(opt.seed, static_cast<std::uint64_t>(k) + 1);
    row.sup_p = sup_norm(phi, u1, u2, p1, p2, so).value;
    row.norm_q = norm_test(phi, u1, u2, q1, q2);
    row.ae_ratio = row.sup_p / (rep.C_ae * row.norm_q);
    row.norm_p = norm_test(phi, u1, u2, p1, p2);
    row.sup_q = sup_norm(phi, u1, u2, q1, q2, so).value;
    if (rep.ea_precondition) row.ea_ratio = row.norm_p * row.norm_p / (rep.C_ea * row.sup_q * row.sup_q);
    if (row.ae_ratio > rep.worst_ae) {
      rep.worst_ae = row.ae_ratio;
      rep.worst_ae_index = k;
    }
    if (rep.ea_precondition && row.ea_ratio > rep.worst_ea) {
      rep.worst_ea = row.ea_ratio;
      rep.worst_ea_index = k;
    }
    if (!(row.ae_ratio <= 1 + 1e-12)) rep.ae_holds = false;
    if (rep.ea_precondition && !(row.ea_ratio <= 1 + 1e-12)) rep.ea_holds = false;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace cks
