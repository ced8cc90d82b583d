#pragma once

// Growth functions u on [0, inf), held as natural-log evaluators, together
// with the catalog of standard examples and finite-grid condition checks.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cks/errors.hpp"
#include "cks/numeric.hpp"

namespace cks {

using LogEvaluator = std::function<double(double)>;

enum class Property { U0, U1, U2, U3, log_exp_convex, log_x2_convex };

inline std::string to_string(Property p) {
  switch (p) {
    case Property::U0: return "U0";
    case Property::U1: return "U1";
    case Property::U2: return "U2";
    case Property::U3: return "U3";
    case Property::log_exp_convex: return "log-exp-convex";
    case Property::log_x2_convex: return "log-x2-convex";
  }
  return "?";
}

/// A positive continuous function on [0, inf), stored as r -> log u(r).
///
/// Evaluators are pure; a GrowthFunction is immutable once built and may be
/// shared between threads. For super-exponential members of the catalog the
/// log value leaves the double range for large r and is reported as +inf.
struct GrowthFunction {
  std::string name;
  std::map<std::string, double> params;
  LogEvaluator log_u;
  std::set<Property> claimed;
  LogEvaluator closed_form_legendre;  // t -> log l_u(t), may be empty
  LogEvaluator closed_form_dual;      // r -> log u*(r), may be empty

  double operator()(double r) const { return log_u(r); }
  bool claims(Property p) const { return claimed.count(p) != 0; }

  /// Canonical spec string, e.g. "kondratiev:beta=0.5".
  std::string spec() const {
    std::string s = name;
    char sep = ':';
    for (const auto& [k, v] : params) {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      s += sep;
      s += k;
      s += '=';
      s.append(buf, res.ptr);
      sep = ',';
    }
    return s;
  }
};

// ---------------------------------------------------------------------------
// Catalog

namespace detail {

inline double require_param(const std::map<std::string, double>& params, const std::string& fn,
                            const std::string& key) {
  auto it = params.find(key);
  if (it == params.end()) throw InputError(fn + ": missing parameter '" + key + "'");
  return it->second;
}

inline void reject_unknown(const std::map<std::string, double>& params, const std::string& fn,
                           std::initializer_list<const char*> allowed) {
  for (const auto& kv : params) {
    bool ok = std::any_of(allowed.begin(), allowed.end(),
                          [&](const char* a) { return kv.first == a; });
    if (!ok) throw InputError(fn + ": unknown parameter '" + kv.first + "'");
  }
}

}  // namespace detail

/// Looks up one of: exp, kondratiev (beta), bell, bell_w, ouerdiane (k).
///
/// bell_w is sqrt(2 r log r) in the log domain for r >= 1 and is extended
/// by 1 on [0, 1), where the defining expression is not real.
inline GrowthFunction catalog_lookup(const std::string& name,
                                     const std::map<std::string, double>& params = {}) {
  using P = Property;
  GrowthFunction g;
  g.name = name;
  g.params = params;
  if (name == "exp") {
    detail::reject_unknown(params, name, {});
    g.log_u = [](double r) { return r; };
    g.claimed = {P::U0, P::U1, P::U2, P::U3, P::log_exp_convex, P::log_x2_convex};
    g.closed_form_legendre = [](double t) { return t - xlogx(t); };
    g.closed_form_dual = [](double r) { return r; };
  } else if (name == "kondratiev") {
    detail::reject_unknown(params, name, {"beta"});
    const double beta = detail::require_param(params, name, "beta");
    if (!(beta >= 0.0 && beta < 1.0)) throw InputError("kondratiev: beta must lie in [0, 1)");
    g.log_u = [beta](double r) { return (1.0 + beta) * std::pow(r, 1.0 / (1.0 + beta)); };
    g.claimed = {P::U0, P::U1, P::U2, P::U3, P::log_exp_convex, P::log_x2_convex};
    g.closed_form_legendre = [beta](double t) { return (1.0 + beta) * (t - xlogx(t)); };
    g.closed_form_dual = [beta](double r) { return (1.0 - beta) * std::pow(r, 1.0 / (1.0 - beta)); };
  } else if (name == "bell") {
    detail::reject_unknown(params, name, {});
    g.log_u = [](double r) { return std::expm1(r); };
    g.claimed = {P::U0, P::U1, P::U3, P::log_exp_convex, P::log_x2_convex};
  } else if (name == "bell_w") {
    detail::reject_unknown(params, name, {});
    g.log_u = [](double r) { return r <= 1.0 ? 0.0 : std::sqrt(2.0 * r * std::log(r)); };
    g.claimed = {P::U0, P::U1, P::U2};
  } else if (name == "ouerdiane") {
    detail::reject_unknown(params, name, {"k"});
    const double k = detail::require_param(params, name, "k");
    if (!(k >= 1.0 && k <= 2.0)) throw InputError("ouerdiane: k must lie in [1, 2]");
    // u(r^2) = exp(r^k / k)
    g.log_u = [k](double r) { return std::pow(r, 0.5 * k) / k; };
    g.claimed = {P::U0, P::U1, P::U2, P::U3, P::log_exp_convex, P::log_x2_convex};
    g.closed_form_legendre = [k](double t) {
      return t == 0.0 ? 0.0 : (2.0 * t / k) * (1.0 - std::log(2.0 * t));
    };
    if (k > 1.0) {
      g.closed_form_dual = [k](double r) {
        return (1.0 - 1.0 / k) * std::pow(2.0 * std::sqrt(r), k / (k - 1.0));
      };
    }
  } else {
    throw InputError("unknown growth function '" + name + "'");
  }
  return g;
}

/// Parses the growth-function mini-language: `name` or
/// `name:key=decimal[,key=decimal...]`. Case-sensitive.
inline GrowthFunction parse_growth_spec(std::string_view text) {
  const auto colon = text.find(':');
  std::string name(text.substr(0, colon));
  std::map<std::string, double> params;
  if (colon != std::string_view::npos) {
    std::size_t pos = colon + 1;
    while (pos <= text.size()) {
      const auto comma = std::min(text.find(',', pos), text.size());
      const auto item = text.substr(pos, comma - pos);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos || eq == 0) {
        throw InputError("growth spec: expected key=decimal at column " + std::to_string(pos + 1));
      }
      const auto value = item.substr(eq + 1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
        throw InputError("growth spec: bad decimal at column " + std::to_string(pos + eq + 2));
      }
      params[std::string(item.substr(0, eq))] = v;
      pos = comma + 1;
    }
  }
  if (name.empty()) throw InputError("growth spec: empty function name at column 1");
  return catalog_lookup(name, params);
}

// ---------------------------------------------------------------------------
// Grids and reports

enum class Spacing { geometric, linear };

struct GridSpec {
  double r_min = 1e-6;
  double r_max = 1e6;
  std::size_t n = 400;
  Spacing spacing = Spacing::geometric;

  std::vector<double> points() const {
    if (n == 0 || !(r_max >= r_min) || r_min < 0.0 ||
        (spacing == Spacing::geometric && r_min <= 0.0)) {
      throw InputError("malformed grid");
    }
    std::vector<double> xs(n);
    if (n == 1) {
      xs[0] = r_min;
      return xs;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double f = static_cast<double>(i) / static_cast<double>(n - 1);
      xs[i] = spacing == Spacing::geometric
                  ? std::exp(std::log(r_min) + f * (std::log(r_max) - std::log(r_min)))
                  : r_min + f * (r_max - r_min);
    }
    xs.front() = r_min;
    xs.back() = r_max;
    return xs;
  }

  std::string describe() const {
    return std::string(spacing == Spacing::geometric ? "geometric" : "linear") + "[" +
           std::to_string(r_min) + "," + std::to_string(r_max) + "]x" + std::to_string(n);
  }
};

enum class Verdict { holds_on_grid, fails, inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds_on_grid: return "holds-on-grid";
    case Verdict::fails: return "fails";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

/// Outcome of a finite-grid check. A `fails` verdict always carries at
/// least one witness at which the checked inequality is violated.
struct ConditionReport {
  std::string condition;
  Verdict verdict = Verdict::inconclusive;
  std::vector<double> witnesses;
  GridSpec grid;
  double margin = kInf;  // smallest slack seen; negative on violation
  std::map<std::string, double> measured;

  bool holds() const { return verdict == Verdict::holds_on_grid; }
};

namespace detail {

struct ConvexityScan {
  bool convex = true;
  double min_slack = kInf;   // normalised; negative means violation
  std::size_t first_bad = 0;  // middle index of first violating triple
  std::size_t last_bad = 0;
  std::size_t skipped = 0;
};

// Three-point convexity on an arbitrary increasing abscissa:
// f(x1) <= interpolant of (x0, f0), (x2, f2) up to tol * local magnitude.
inline ConvexityScan scan_convexity(const std::vector<double>& xs, const std::vector<double>& fs,
                                    double tol) {
  ConvexityScan s;
  for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
    const double f0 = fs[i - 1], f1 = fs[i], f2 = fs[i + 1];
    if (!std::isfinite(f0) || !std::isfinite(f1) || !std::isfinite(f2)) {
      ++s.skipped;
      continue;
    }
    const double x0 = xs[i - 1], x1 = xs[i], x2 = xs[i + 1];
    const double interp = ((x2 - x1) * f0 + (x1 - x0) * f2) / (x2 - x0);
    const double scale = std::max({1.0, std::abs(f0), std::abs(f1), std::abs(f2)});
    const double slack = (interp - f1) / scale;
    s.min_slack = std::min(s.min_slack, slack);
    if (slack < -tol) {
      if (s.convex) s.first_bad = i;
      s.convex = false;
      s.last_bad = i;
    }
  }
  return s;
}

inline ConditionReport convexity_report(std::string id, const std::vector<double>& xs,
                                        const std::vector<double>& fs,
                                        const std::vector<double>& rs, const GridSpec& grid,
                                        double tol) {
  ConditionReport rep;
  rep.condition = std::move(id);
  rep.grid = grid;
  const auto s = scan_convexity(xs, fs, tol);
  rep.margin = s.min_slack;
  rep.measured["skipped_triples"] = static_cast<double>(s.skipped);
  if (s.convex) {
    rep.verdict = Verdict::holds_on_grid;
  } else {
    rep.verdict = Verdict::fails;
    rep.witnesses.push_back(rs[s.first_bad]);
    rep.measured["holds_from"] = rs[s.last_bad];
  }
  return rep;
}

}  // namespace detail

inline constexpr double kConditionTol = 1e-9;

// ---------------------------------------------------------------------------
// Condition checks

enum class UCondition { U0, U1, U2, U3 };

inline std::string to_string(UCondition c) {
  return std::string("U") + static_cast<char>('0' + static_cast<int>(c));
}

inline UCondition parse_u_condition(std::string_view s) {
  if (s == "U0") return UCondition::U0;
  if (s == "U1") return UCondition::U1;
  if (s == "U2") return UCondition::U2;
  if (s == "U3") return UCondition::U3;
  throw InputError("unknown condition '" + std::string(s) + "'");
}

/// Grid-level check of one of the U-conditions.
///
/// U0: the minimum of log u over {0} and the grid is within tol of 0.
/// U1: log u(0) = 0 and samples are nondecreasing.
/// U2: log u(r)/r on the top quarter of the grid is finite and not
///     increasing; the last ratio is reported as the limit estimate.
///     An increasing tail is inconclusive.
/// U3: three-point convexity of t -> log u(t^2).
inline ConditionReport check_u_condition(const GrowthFunction& u, UCondition which,
                                         const GridSpec& grid = {}, double tol = kConditionTol) {
  const auto rs = grid.points();
  ConditionReport rep;
  rep.condition = to_string(which);
  rep.grid = grid;
  switch (which) {
    case UCondition::U0: {
      double best = u(0.0), arg = 0.0;
      for (double r : rs) {
        const double v = u(r);
        if (v < best) {
          best = v;
          arg = r;
        }
      }
      rep.margin = best;
      rep.measured["grid_min"] = best;
      rep.witnesses.push_back(arg);
      rep.verdict = std::abs(best) <= tol ? Verdict::holds_on_grid : Verdict::fails;
      break;
    }
    case UCondition::U1: {
      const double v0 = u(0.0);
      rep.measured["log_u0"] = v0;
      double prev = v0, prev_r = 0.0;
      double min_step = kInf;
      rep.verdict = Verdict::holds_on_grid;
      if (std::abs(v0) > tol) {
        rep.verdict = Verdict::fails;
        rep.witnesses.push_back(0.0);
      }
      for (double r : rs) {
        const double v = u(r);
        const double step = (v - prev) / std::max(1.0, std::abs(prev));
        min_step = std::min(min_step, step);
        if (step < -tol && rep.verdict != Verdict::fails) {
          rep.verdict = Verdict::fails;
          rep.witnesses.push_back(r);
          rep.measured["decrease_from"] = prev_r;
        }
        prev = v;
        prev_r = r;
      }
      rep.margin = min_step;
      break;
    }
    case UCondition::U2: {
      const std::size_t start = rs.size() - std::max<std::size_t>(2, rs.size() / 4);
      double first = kNaN, last = kNaN, max_ratio = -kInf;
      bool increasing = false;
      rep.verdict = Verdict::holds_on_grid;
      double prev = kNaN;
      for (std::size_t i = start; i < rs.size(); ++i) {
        const double ratio = u(rs[i]) / rs[i];
        if (!std::isfinite(ratio)) {
          rep.verdict = Verdict::fails;
          rep.witnesses.push_back(rs[i]);
          break;
        }
        if (std::isnan(first)) first = ratio;
        if (!std::isnan(prev) && ratio > prev + tol * std::max(1.0, std::abs(prev))) increasing = true;
        prev = ratio;
        last = ratio;
        max_ratio = std::max(max_ratio, ratio);
      }
      rep.measured["r_max"] = rs.back();
      if (rep.verdict != Verdict::fails) {
        rep.measured["limit_estimate"] = last;
        rep.measured["tail_max_ratio"] = max_ratio;
        rep.margin = -max_ratio;
        if (increasing) rep.verdict = Verdict::inconclusive;
      }
      break;
    }
    case UCondition::U3: {
      std::vector<double> xs{0.0}, fs{u(0.0)}, rr{0.0};
      for (double r : rs) {
        xs.push_back(std::sqrt(r));
        fs.push_back(u(r));
        rr.push_back(r);
      }
      auto c = detail::convexity_report("U3", xs, fs, rr, grid, tol);
      c.measured.merge(rep.measured);
      return c;
    }
  }
  return rep;
}

/// Grid-level check that log u(r)/sqrt(r) tends to infinity, the class on
/// which the dual Legendre transform is finite everywhere. Holds when the
/// ratio is nondecreasing on the top quarter of the grid and grows there by
/// more than the factor 1 + min_growth; fails when it does not grow.
inline ConditionReport check_superroot_growth(const GrowthFunction& u, const GridSpec& grid = {},
                                              double min_growth = 1e-3) {
  const auto rs = grid.points();
  ConditionReport rep;
  rep.condition = "superroot-growth";
  rep.grid = grid;
  const std::size_t start = rs.size() - std::max<std::size_t>(2, rs.size() / 4);
  const double first = u(rs[start]) / std::sqrt(rs[start]);
  double prev = first, last = first;
  bool monotone = true;
  for (std::size_t i = start + 1; i < rs.size(); ++i) {
    const double ratio = u(rs[i]) / std::sqrt(rs[i]);
    if (std::isnan(ratio)) break;
    if (ratio < prev * (1 - kConditionTol)) monotone = false;
    prev = ratio;
    last = ratio;
  }
  rep.measured["tail_first_ratio"] = first;
  rep.measured["tail_last_ratio"] = last;
  const double growth = last / first - 1;
  rep.margin = growth - min_growth;
  if (monotone && (growth > min_growth || std::isinf(last))) {
    rep.verdict = Verdict::holds_on_grid;
  } else {
    rep.verdict = Verdict::fails;
    rep.witnesses.push_back(rs.back());
  }
  return rep;
}

enum class ConvexityClass { log_exp, log_xk };

/// Three-point convexity of x -> log u(e^x) (log_exp) or x -> log u(x^k)
/// (log_xk) sampled at the grid's r values. Failing reports carry
/// measured["holds_from"]: the smallest r from which all tested triples pass.
inline ConditionReport check_convexity_class(const GrowthFunction& u, ConvexityClass cls,
                                             double k = 2.0, const GridSpec& grid = {},
                                             double tol = kConditionTol) {
  const auto rs = grid.points();
  std::vector<double> xs, fs, rr;
  if (cls == ConvexityClass::log_exp) {
    for (double r : rs) {
      if (r <= 0.0) continue;
      xs.push_back(std::log(r));
      fs.push_back(u(r));
      rr.push_back(r);
    }
    return detail::convexity_report("log-exp", xs, fs, rr, grid, tol);
  }
  if (!(k > 0.0)) throw InputError("convexity class log-xk needs k > 0");
  xs.push_back(0.0);
  fs.push_back(u(0.0));
  rr.push_back(0.0);
  for (double r : rs) {
    if (r <= 0.0) continue;
    xs.push_back(std::pow(r, 1.0 / k));
    fs.push_back(u(r));
    rr.push_back(r);
  }
  auto rep = detail::convexity_report("log-xk", xs, fs, rr, grid, tol);
  rep.measured["k"] = k;
  return rep;
}

// ---------------------------------------------------------------------------
// theta correspondence: u(r) = exp(2 theta(sqrt r))

inline LogEvaluator theta_from_u(const GrowthFunction& u) {
  auto f = u.log_u;
  return [f](double s) { return 0.5 * f(s * s); };
}

inline GrowthFunction u_from_theta(LogEvaluator theta, std::string name = "from_theta") {
  GrowthFunction g;
  g.name = std::move(name);
  g.log_u = [theta = std::move(theta)](double r) { return 2.0 * theta(std::sqrt(r)); };
  return g;
}

// ---------------------------------------------------------------------------
// Equivalence

struct EquivalenceOptions {
  std::vector<double> scales{1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0};
  std::vector<double> thresholds{0.0, 1.0, 10.0, 100.0};
  double tail_fraction = 0.1;
  double tol = 1e-9;
};

namespace detail {

// Best a with a * f(r) <= g(b r) on grid points r >= r0, accepted only when
// the infimum of log g(b r) - log f(r) is not being pushed down on the
// grid's tail (a finite grid always gives some constant).
inline std::optional<double> lower_constant(const GrowthFunction& f, const GrowthFunction& g,
                                            double b, double r0, const std::vector<double>& rs,
                                            const EquivalenceOptions& opt) {
  std::vector<double> h;
  for (double r : rs) {
    if (r < r0) continue;
    h.push_back(g(b * r) - f(r));
  }
  if (h.size() < 4) return std::nullopt;
  for (double v : h) {
    if (std::isnan(v) || v == -kInf) return std::nullopt;
  }
  const std::size_t tail = std::max<std::size_t>(2, static_cast<std::size_t>(h.size() * opt.tail_fraction));
  const double head_min = *std::min_element(h.begin(), h.end() - tail);
  const double tail_min = *std::min_element(h.end() - tail, h.end());
  if (tail_min < head_min - opt.tol * std::max(1.0, std::abs(head_min))) return std::nullopt;
  return std::min(head_min, tail_min);
}

}  // namespace detail

/// Searches constants a1, a2 > 0, b1, b2 >= 1 and r0 with
/// a1 u(r) <= v(b1 r) and v(r) <= a2 u(b2 r) for grid points r >= r0.
/// Reported constants are log a1, log a2, b1, b2, r0.
inline ConditionReport check_equivalence(const GrowthFunction& u, const GrowthFunction& v,
                                         const GridSpec& grid = {},
                                         const EquivalenceOptions& opt = {}) {
  const auto rs = grid.points();
  ConditionReport rep;
  rep.condition = "equivalence";
  rep.grid = grid;
  for (double r0 : opt.thresholds) {
    std::optional<std::pair<double, double>> lower, upper;
    for (double b : opt.scales) {
      if (auto a = detail::lower_constant(u, v, b, r0, rs, opt)) {
        lower = std::make_pair(*a, b);
        break;
      }
    }
    if (!lower) continue;
    for (double b : opt.scales) {
      // v(r) <= a2 u(b r)  <=>  (1/a2) v(r) <= u(b r)
      if (auto a = detail::lower_constant(v, u, b, r0, rs, opt)) {
        upper = std::make_pair(-*a, b);
        break;
      }
    }
    if (!upper) continue;
    rep.verdict = Verdict::holds_on_grid;
    rep.measured["log_a1"] = lower->first;
    rep.measured["b1"] = lower->second;
    rep.measured["log_a2"] = upper->first;
    rep.measured["b2"] = upper->second;
    rep.measured["r0"] = r0;
    rep.margin = 0.0;
    return rep;
  }
  rep.verdict = Verdict::inconclusive;
  return rep;
}

}  // namespace cks
