#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "cks/errors.hpp"
#include "cks/numeric.hpp"

namespace cks {

/// Search interval policy for one-dimensional extremum searches in a
/// logarithmic coordinate x = log r.
struct BracketPolicy {
  double lo = -40.0;
  double hi = 40.0;
  double edge_fraction = 0.05;  // minimiser this close to an edge triggers expansion
  int max_expansions = 5;
  double x_tol = 1e-12;
  int scan_points = 512;  // coarse scan for objectives not known to be unimodal
  int scan_starts = 3;
  double hard_lo = -700.0;  // expansion never goes past these; e^x stays representable
  double hard_hi = 700.0;
};

struct LineMinimum {
  double x = 0.0;
  double value = kInf;
  double lo = 0.0;  // final bracket
  double hi = 0.0;
  int expansions = 0;
  int evaluations = 0;
  bool at_left_edge = false;
  bool at_right_edge = false;
};

namespace detail {

template <class F>
double guarded(F& f, double x, int& count) {
  ++count;
  double v = f(x);
  return std::isnan(v) ? kInf : v;
}

// Golden-section minimisation on [a, b]; finishes with one parabolic step
// through the final three points.
template <class F>
LineMinimum golden_section(F& f, double a, double b, double x_tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  LineMinimum out;
  int n = 0;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = guarded(f, c, n);
  double fd = guarded(f, d, n);
  while (b - a > x_tol * std::max(1.0, std::abs(a) + std::abs(b)) * 0.5 && n < 400) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = guarded(f, c, n);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = guarded(f, d, n);
    }
  }
  double x = fc <= fd ? c : d;
  double fx = std::min(fc, fd);
  double fa = guarded(f, a, n);
  double fb = guarded(f, b, n);
  if (fa < fx) {
    x = a;
    fx = fa;
  }
  if (fb < fx) {
    x = b;
    fx = fb;
  }
  // Parabolic vertex through (a, x, b).
  if (std::isfinite(fa) && std::isfinite(fb) && a < x && x < b) {
    const double p = (x - a) * (x - a) * (fx - fb) - (x - b) * (x - b) * (fx - fa);
    const double q = (x - a) * (fx - fb) - (x - b) * (fx - fa);
    if (q != 0.0) {
      const double xv = x - 0.5 * p / q;
      if (xv > a && xv < b) {
        const double fv = guarded(f, xv, n);
        if (fv < fx) {
          x = xv;
          fx = fv;
        }
      }
    }
  }
  out.x = x;
  out.value = fx;
  out.lo = a;
  out.hi = b;
  out.evaluations = n;
  return out;
}

template <class F>
LineMinimum scan_then_refine(F& f, double lo, double hi, const BracketPolicy& policy) {
  const int m = std::max(8, policy.scan_points);
  std::vector<double> xs(m), vs(m);
  int n = 0;
  for (int i = 0; i < m; ++i) {
    xs[i] = lo + (hi - lo) * i / (m - 1);
    vs[i] = guarded(f, xs[i], n);
  }
  std::vector<int> order(m);
  for (int i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int i, int j) { return vs[i] < vs[j]; });
  LineMinimum best;
  best.value = kInf;
  best.x = xs[order[0]];
  std::vector<int> used;
  for (int idx : order) {
    if (static_cast<int>(used.size()) >= policy.scan_starts) break;
    // distinct starting cells only
    bool near = std::any_of(used.begin(), used.end(), [&](int u) { return std::abs(u - idx) <= 1; });
    if (near) continue;
    used.push_back(idx);
    const double a = xs[std::max(0, idx - 1)];
    const double b = xs[std::min(m - 1, idx + 1)];
    LineMinimum local = golden_section(f, a, b, policy.x_tol);
    n += local.evaluations;
    if (local.value < best.value) best = local;
  }
  if (vs[order[0]] < best.value) {
    best.x = xs[order[0]];
    best.value = vs[order[0]];
  }
  best.evaluations = n;
  return best;
}

}  // namespace detail

/// Minimises f over x in an adaptively expanded bracket.
///
/// The bracket starts at [policy.lo, policy.hi]; while the minimiser lies
/// within edge_fraction of an endpoint that endpoint is pushed out by
/// doubling, at most max_expansions times. If the minimiser still sits on
/// an edge that is not allowed, DivergentTransform is thrown. `unimodal`
/// selects golden-section search; otherwise a coarse scan seeds local
/// golden-section refinements.
template <class F>
LineMinimum bracketed_minimum(F&& f, bool unimodal, const BracketPolicy& policy,
                              bool allow_left_edge, bool allow_right_edge) {
  double lo = policy.lo;
  double hi = policy.hi;
  int expansions = 0;
  int evaluations = 0;
  for (;;) {
    LineMinimum m = unimodal ? detail::golden_section(f, lo, hi, policy.x_tol)
                             : detail::scan_then_refine(f, lo, hi, policy);
    evaluations += m.evaluations;
    const double margin = policy.edge_fraction * (hi - lo);
    const bool left = m.x - lo < margin;
    const bool right = hi - m.x < margin;
    const bool can_left = left && lo > policy.hard_lo;
    const bool can_right = right && hi < policy.hard_hi;
    if ((can_left || can_right) && expansions < policy.max_expansions) {
      if (can_left) lo = std::max(policy.hard_lo, lo < 0 ? 2.0 * lo : lo - (hi - lo));
      if (can_right) hi = std::min(policy.hard_hi, hi > 0 ? 2.0 * hi : hi + (hi - lo));
      ++expansions;
      continue;
    }
    m.lo = lo;
    m.hi = hi;
    m.expansions = expansions;
    m.evaluations = evaluations;
    m.at_left_edge = left;
    m.at_right_edge = right;
    if ((left && !allow_left_edge) || (right && !allow_right_edge)) {
      throw DivergentTransform("extremum search left the bracket [" + std::to_string(lo) + ", " +
                               std::to_string(hi) + "]");
    }
    return m;
  }
}

/// Maximisation counterpart of bracketed_minimum; the returned value is the
/// maximum (not its negation).
template <class F>
LineMinimum bracketed_maximum(F&& f, bool unimodal, const BracketPolicy& policy,
                              bool allow_left_edge, bool allow_right_edge) {
  auto neg = [&f](double x) { return -f(x); };
  LineMinimum m = bracketed_minimum(neg, unimodal, policy, allow_left_edge, allow_right_edge);
  m.value = -m.value;
  return m;
}

}  // namespace cks
