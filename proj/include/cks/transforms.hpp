#pragma once

// Legendre transform l_u(t) = inf_{r>0} u(r)/r^t, dual Legendre transform
// u*(r) = sup_{s>=0} exp(2 sqrt(rs))/u(s), the L-function sum_n l_u(n) r^n
// and weight sequences, all in the log domain.

#include <cmath>
#include <complex>
#include <mutex>
#include <string>
#include <vector>

#include "cks/errors.hpp"
#include "cks/growth.hpp"
#include "cks/numeric.hpp"
#include "cks/optimize.hpp"

namespace cks {

struct TransformValue {
  double log_value = kNaN;
  double log_argument = kNaN;  // log of the optimising r (or s)
  int expansions = 0;
  int evaluations = 0;
  bool limit_at_zero = false;  // optimum is the r -> 0+ limit
};

/// log l_u(t). Golden-section search in x = log r when u claims
/// (log, exp)-convexity, multi-start scan otherwise. At t = 0 the value is
/// inf u, including the limit r -> 0+.
inline TransformValue legendre(const GrowthFunction& u, double t, const BracketPolicy& policy = {}) {
  if (!(t >= 0.0)) throw InputError("legendre: t must be nonnegative");
  const auto& f = u.log_u;
  auto objective = [&f, t](double x) { return f(std::exp(x)) - t * x; };
  const bool zero = t == 0.0;
  LineMinimum m;
  try {
    m = bracketed_minimum(objective, u.claims(Property::log_exp_convex), policy, zero, zero);
  } catch (const DivergentTransform& e) {
    throw DivergentTransform("legendre transform of " + u.spec() + " at t=" + std::to_string(t) +
                             " diverges: " + e.what());
  }
  TransformValue out{m.value, m.x, m.expansions, m.evaluations, false};
  if (zero) {
    const double at0 = f(0.0);
    if (at0 <= out.log_value) {
      out.log_value = at0;
      out.log_argument = -kInf;
      out.limit_at_zero = true;
    }
  }
  return out;
}

/// log u*(r). The search runs in x = log s; it is unimodal when u claims
/// (log, x^2)-convexity. The s = 0 endpoint is always a candidate.
inline TransformValue dual_legendre(const GrowthFunction& u, double r,
                                    const BracketPolicy& policy = {}) {
  if (!(r >= 0.0)) throw InputError("dual_legendre: r must be nonnegative");
  const auto& f = u.log_u;
  const double two_sqrt_r = 2.0 * std::sqrt(r);
  auto objective = [&f, two_sqrt_r](double x) { return two_sqrt_r * std::exp(0.5 * x) - f(std::exp(x)); };
  LineMinimum m;
  try {
    m = bracketed_maximum(objective, u.claims(Property::log_x2_convex), policy, true, r == 0.0);
  } catch (const DivergentTransform& e) {
    throw DivergentTransform("dual Legendre transform of " + u.spec() + " at r=" + std::to_string(r) +
                             " diverges: " + e.what());
  }
  TransformValue out{m.value, m.x, m.expansions, m.evaluations, false};
  const double at0 = -f(0.0);
  if (at0 >= out.log_value) {
    out.log_value = at0;
    out.log_argument = -kInf;
    out.limit_at_zero = true;
  }
  return out;
}

/// The dual Legendre transform as a growth function in its own right.
///
/// u* is always (log, exp)- and (log, x^2)-convex, being a supremum of
/// functions convex in log r and in sqrt r. When u is (log, x^2)-convex the
/// Legendre transform of u* is attached in closed form:
///   log l_{u*}(t) = 2t - log l_u(t) - 2t log t.
inline GrowthFunction dual_function(const GrowthFunction& u, const BracketPolicy& policy = {}) {
  GrowthFunction g;
  g.name = "dual(" + u.spec() + ")";
  g.log_u = [u, policy](double r) { return dual_legendre(u, r, policy).log_value; };
  g.claimed = {Property::U3, Property::log_exp_convex, Property::log_x2_convex};
  if (u.claims(Property::U0)) {
    g.claimed.insert(Property::U0);
    g.claimed.insert(Property::U1);
  }
  if (u.claims(Property::log_x2_convex)) {
    g.closed_form_legendre = [u, policy](double t) {
      return 2.0 * t - legendre(u, t, policy).log_value - 2.0 * xlogx(t);
    };
  }
  return g;
}

/// log u*(r) through the closed form when one is attached.
inline double log_dual_value(const GrowthFunction& u, double r) {
  return u.closed_form_dual ? u.closed_form_dual(r) : dual_legendre(u, r).log_value;
}

/// log l_u(n) for n = 0..max_degree, computed numerically.
inline std::vector<double> legendre_at_degrees(const GrowthFunction& u, int max_degree) {
  std::vector<double> out(static_cast<std::size_t>(max_degree) + 1);
  for (int n = 0; n <= max_degree; ++n) out[n] = legendre(u, n).log_value;
  return out;
}

/// log l_{u*}(n) for n = 0..max_degree. Uses the closed-form identity when u
/// claims (log, x^2)-convexity, nested numeric transforms otherwise.
inline std::vector<double> dual_legendre_at_degrees(const GrowthFunction& u, int max_degree) {
  std::vector<double> out(static_cast<std::size_t>(max_degree) + 1);
  if (u.claims(Property::log_x2_convex)) {
    const auto ell = legendre_at_degrees(u, max_degree);
    for (int n = 0; n <= max_degree; ++n) out[n] = 2.0 * n - ell[n] - 2.0 * xlogx(n);
  } else {
    const auto dual = dual_function(u);
    for (int n = 0; n <= max_degree; ++n) out[n] = legendre(dual, n).log_value;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tables

struct TransformTable {
  std::string source;
  std::vector<double> grid;
  std::vector<double> log_values;
  std::vector<double> argmins;  // optimising r (or s); 0 for the r -> 0+ limit
  std::vector<int> expansions;
  std::vector<int> evaluations;
};

inline TransformTable legendre_table(const GrowthFunction& u, const std::vector<double>& ts) {
  TransformTable tab;
  tab.source = u.spec();
  tab.grid = ts;
  for (double t : ts) {
    const auto v = legendre(u, t);
    tab.log_values.push_back(v.log_value);
    tab.argmins.push_back(v.limit_at_zero ? 0.0 : std::exp(v.log_argument));
    tab.expansions.push_back(v.expansions);
    tab.evaluations.push_back(v.evaluations);
  }
  return tab;
}

inline TransformTable dual_table(const GrowthFunction& u, const std::vector<double>& rs) {
  TransformTable tab;
  tab.source = u.spec();
  tab.grid = rs;
  for (double r : rs) {
    const auto v = dual_legendre(u, r);
    tab.log_values.push_back(v.log_value);
    tab.argmins.push_back(v.limit_at_zero ? 0.0 : std::exp(v.log_argument));
    tab.expansions.push_back(v.expansions);
    tab.evaluations.push_back(v.evaluations);
  }
  return tab;
}

struct WeightSequence {
  int max_degree = 0;
  std::vector<double> log_alpha;  // log alpha_u(n) = -log l_u(n) - log n!
  std::vector<double> log_ell;
  bool root_decreasing = true;  // log l_u(n)/n decreasing on n >= 1
};

inline WeightSequence weight_sequence(const GrowthFunction& u, int max_degree) {
  if (max_degree < 0) throw InputError("weight_sequence: max degree must be >= 0");
  WeightSequence w;
  w.max_degree = max_degree;
  w.log_ell = legendre_at_degrees(u, max_degree);
  for (int n = 0; n <= max_degree; ++n) w.log_alpha.push_back(-w.log_ell[n] - log_factorial(n));
  for (int n = 2; n <= max_degree; ++n) {
    if (!(w.log_ell[n] / n < w.log_ell[n - 1] / (n - 1))) w.root_decreasing = false;
  }
  return w;
}

// ---------------------------------------------------------------------------
// L-function

struct LSeriesValue {
  double log_value = kNaN;
  int degree = 0;  // highest degree included
  int terms = 0;
};

/// The power series sum_n l_u(n) r^n.
///
/// log l_u(n) is concave in n, so the terms are log-concave for fixed r and
/// their successive ratios are monotone on both sides of the peak. The sum
/// starts at the peak and walks outwards; each side stops once a geometric
/// tail bound drops below tol/2 of the partial sum. Coefficients come from
/// the closed-form Legendre transform when attached, otherwise from numeric
/// transforms, memoised.
class LFunction {
 public:
  explicit LFunction(GrowthFunction u, int max_terms = 400) : u_(std::move(u)), max_terms_(max_terms) {}

  const GrowthFunction& growth() const { return u_; }

  double log_coefficient(int n) const {
    if (u_.closed_form_legendre) return u_.closed_form_legendre(static_cast<double>(n));
    std::lock_guard lock(mutex_);
    while (static_cast<int>(cache_.size()) <= n) {
      cache_.push_back(legendre(u_, static_cast<double>(cache_.size())).log_value);
    }
    return cache_[n];
  }

  LSeriesValue evaluate(double r, double tol = 1e-12) const {
    if (!(r >= 0.0)) throw InputError("l_function: r must be nonnegative");
    if (r == 0.0) return {log_coefficient(0), 0, 1};
    const auto range = summation_range(std::log(r), tol);
    return {range.log_sum, range.hi, range.hi - range.lo + 1};
  }

  /// log |L(z)| and arg L(z) for complex z, summed over the range certified
  /// for |z|.
  std::pair<double, double> evaluate_complex(std::complex<double> z, double tol = 1e-12) const {
    const double rho = std::abs(z);
    if (rho == 0.0) return {log_coefficient(0), 0.0};
    const double log_rho = std::log(rho);
    const double theta = std::arg(z);
    const auto range = summation_range(log_rho, tol);
    const double peak = term(range.peak, log_rho);
    std::complex<double> s = 0.0;
    for (int n = range.lo; n <= range.hi; ++n) {
      s += std::polar(std::exp(term(n, log_rho) - peak), n * theta);
    }
    return {peak + std::log(std::abs(s)), std::arg(s)};
  }

 private:
  struct Range {
    int lo = 0, hi = 0, peak = 0;
    double log_sum = kNaN;
  };

  double term(int n, double log_r) const { return log_coefficient(n) + n * log_r; }

  int find_peak(double log_r) const {
    constexpr int kMaxDegree = 1 << 28;
    auto rising = [&](int n) { return term(n + 1, log_r) >= term(n, log_r); };
    if (!rising(0)) return 0;
    int lo = 0, hi = 1;
    while (rising(hi)) {
      lo = hi;
      if (hi >= kMaxDegree) {
        throw TruncationFailure("l_function: no peak below degree " + std::to_string(kMaxDegree),
                                kInf, hi);
      }
      hi *= 2;
    }
    // rising(lo) && !rising(hi)
    while (hi - lo > 1) {
      const int mid = lo + (hi - lo) / 2;
      (rising(mid) ? lo : hi) = mid;
    }
    return hi;
  }

  Range summation_range(double log_r, double tol) const {
    Range g;
    g.peak = find_peak(log_r);
    g.lo = g.hi = g.peak;
    const double half_tol = std::log(0.5 * tol);
    double s = term(g.peak, log_r);
    int count = 1;
    auto fail = [&](const char* side) {
      throw TruncationFailure(std::string("l_function: ") + side + " tail not certified within " +
                                  std::to_string(max_terms_) + " terms",
                              s, g.hi);
    };
    // right tail
    for (;;) {
      const double next = term(g.hi + 1, log_r);
      const double log_q = next - term(g.hi, log_r);
      if (log_q < 0.0) {
        const double tail = next - std::log1p(-std::exp(log_q));
        if (tail <= half_tol + s) break;
      }
      if (++count > max_terms_) fail("right");
      s = log_add(s, next);
      ++g.hi;
    }
    // left tail
    while (g.lo > 0) {
      const double next = term(g.lo - 1, log_r);
      const double log_q = next - term(g.lo, log_r);
      if (log_q < 0.0) {
        const double tail = next - std::log1p(-std::exp(log_q));
        if (tail <= half_tol + s) break;
      }
      if (++count > max_terms_) fail("left");
      s = log_add(s, next);
      --g.lo;
    }
    g.log_sum = s;
    return g;
  }

  GrowthFunction u_;
  int max_terms_;
  mutable std::mutex mutex_;
  mutable std::vector<double> cache_;
};

/// log L_u(r) with the default term budget.
inline LSeriesValue l_function(const GrowthFunction& u, double r, double tol = 1e-12,
                               int max_terms = 400) {
  return LFunction(u, max_terms).evaluate(r, tol);
}

// ---------------------------------------------------------------------------
// Inequalities between u, l_u and L_u

inline constexpr int kVerifierTermBudget = 1'000'000;

namespace detail {
inline std::vector<double> with_zero(const GridSpec& grid) {
  std::vector<double> rs{0.0};
  for (double r : grid.points()) rs.push_back(r);
  return rs;
}
}  // namespace detail

/// L_u(r) <= (e a / log a) u(a r) on {0} and the grid, plus three-point
/// (log, exp)-convexity of L_u. Requires a > 1.
inline ConditionReport verify_l_function_bound(const GrowthFunction& u, double a,
                                               const GridSpec& grid = {}, double tol = kConditionTol) {
  if (!(a > 1.0)) throw PreconditionError("L-function bound needs a > 1");
  const LFunction L(u, kVerifierTermBudget);
  const double log_const = 1.0 + std::log(a) - std::log(std::log(a));
  ConditionReport rep;
  rep.condition = "L-bound";
  rep.grid = grid;
  rep.verdict = Verdict::holds_on_grid;
  rep.measured["a"] = a;
  std::vector<double> xs, fs, rr;
  for (double r : detail::with_zero(grid)) {
    const double lhs = L.evaluate(r).log_value;
    const double rhs = log_const + u(a * r);
    const double slack = rhs - lhs;
    rep.margin = std::min(rep.margin, slack);
    if (slack < -tol * std::max(1.0, std::abs(rhs))) {
      if (rep.verdict != Verdict::fails) rep.witnesses.push_back(r);
      rep.verdict = Verdict::fails;
    }
    if (r > 0.0) {
      xs.push_back(std::log(r));
      fs.push_back(lhs);
      rr.push_back(r);
    }
  }
  const auto conv = detail::scan_convexity(xs, fs, tol);
  rep.measured["convexity_margin"] = conv.min_slack;
  if (!conv.convex) {
    if (rep.verdict != Verdict::fails) rep.witnesses.push_back(rr[conv.first_bad]);
    rep.verdict = Verdict::fails;
  }
  return rep;
}

/// Measures C_hat = max u(r)/L_u(2^k r) over {0} and the grid (log domain
/// in measured["log_C_hat"]). Holds iff C_hat is finite.
inline ConditionReport measure_l_function_lower_constant(const GrowthFunction& u, double k,
                                                         const GridSpec& grid = {}) {
  if (!(k > 0.0)) throw PreconditionError("lower constant needs k > 0");
  const LFunction L(u, kVerifierTermBudget);
  const double scale = std::pow(2.0, k);
  ConditionReport rep;
  rep.condition = "L-lower-constant";
  rep.grid = grid;
  double worst = -kInf, arg = 0.0;
  for (double r : detail::with_zero(grid)) {
    const double v = u(r) - L.evaluate(scale * r).log_value;
    if (!(v <= worst)) {
      worst = v;
      arg = r;
    }
  }
  rep.measured["log_C_hat"] = worst;
  rep.measured["k"] = k;
  rep.witnesses.push_back(arg);
  rep.margin = -worst;
  rep.verdict = std::isfinite(worst) ? Verdict::holds_on_grid : Verdict::fails;
  return rep;
}

/// L_u(r) <= sqrt(l_u(0) e a / log a) u(a 2^{k+1} r)^{1/2} on {0} and the grid.
inline ConditionReport verify_l_function_sqrt_bound(const GrowthFunction& u, double k, double a,
                                                    const GridSpec& grid = {},
                                                    double tol = kConditionTol) {
  if (!(a > 1.0) || !(k > 0.0)) throw PreconditionError("sqrt bound needs a > 1 and k > 0");
  const LFunction L(u, kVerifierTermBudget);
  const double log_const = 0.5 * (legendre(u, 0.0).log_value + 1.0 + std::log(a) - std::log(std::log(a)));
  const double scale = a * std::pow(2.0, k + 1.0);
  ConditionReport rep;
  rep.condition = "L-sqrt-bound";
  rep.grid = grid;
  rep.verdict = Verdict::holds_on_grid;
  rep.measured["a"] = a;
  rep.measured["k"] = k;
  for (double r : detail::with_zero(grid)) {
    const double lhs = L.evaluate(r).log_value;
    const double rhs = log_const + 0.5 * u(scale * r);
    const double slack = rhs - lhs;
    rep.margin = std::min(rep.margin, slack);
    if (slack < -tol * std::max(1.0, std::abs(rhs))) {
      if (rep.verdict != Verdict::fails) rep.witnesses.push_back(r);
      rep.verdict = Verdict::fails;
    }
  }
  return rep;
}

/// Compares the numeric Legendre transform of the numeric dual u* with
/// 2t - log l_u(t) - 2t log t (t^{2t} = 1 at t = 0) on the given t values.
/// measured["max_discrepancy"] is the largest scaled log-domain difference.
inline ConditionReport verify_dual_legendre_identity(const GrowthFunction& u,
                                                     const std::vector<double>& ts,
                                                     double rel_tol = 1e-6) {
  GrowthFunction dual = dual_function(u);
  dual.closed_form_legendre = nullptr;
  ConditionReport rep;
  rep.condition = "dual-legendre-identity";
  rep.verdict = Verdict::holds_on_grid;
  double worst = 0.0;
  for (double t : ts) {
    const double numeric = legendre(dual, t).log_value;
    const double formula = 2.0 * t - legendre(u, t).log_value - 2.0 * xlogx(t);
    const double err = scaled_error(numeric, formula);
    if (err > worst) worst = err;
    if (err > rel_tol) {
      if (rep.verdict != Verdict::fails) rep.witnesses.push_back(t);
      rep.verdict = Verdict::fails;
    }
  }
  rep.measured["max_discrepancy"] = worst;
  rep.margin = rel_tol - worst;
  return rep;
}

}  // namespace cks
