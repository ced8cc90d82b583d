#pragma once

// Entire functions on C^d x C^d: Taylor kernels by trapezoidal Cauchy
// integrals, growth certificates, the per-bidegree kernel bounds and the
// inverse S-transform.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "cks/chaos.hpp"
#include "cks/errors.hpp"
#include "cks/growth.hpp"
#include "cks/kernel.hpp"
#include "cks/numeric.hpp"
#include "cks/optimize.hpp"
#include "cks/random.hpp"
#include "cks/space.hpp"
#include "cks/transforms.hpp"

namespace cks {

/// Which side of the growth condition: weights u*(K |.|^2_{p}) or u(K |.|^2_{-p}).
enum class GrowthSide { dual, primal };

struct GrowthProfile {
  double C = 1.0;  // |F|^2 <= C w1 w2
  double K1 = 1.0, K2 = 1.0;
  double p1 = 0.0, p2 = 0.0;
  GrowthFunction u1, u2;  // the weight functions themselves (pass u* for the dual side)
  GrowthSide side = GrowthSide::dual;
};

/// The evaluator must be safe to call concurrently.
struct AnalyticFunction {
  int d = 1;
  std::function<std::complex<double>(const cvec&, const cvec&)> eval;
  std::optional<GrowthProfile> profile;

  std::complex<double> operator()(const cvec& xi, const cvec& eta) const { return eval(xi, eta); }
};

struct PolynomialTerm {
  MultiIndex idx_l;  // xi variables, repeated indices are powers
  MultiIndex idx_m;  // eta variables
  std::complex<double> coeff;
};

/// sum_t c_t prod xi_{idx_l} prod eta_{idx_m}.
inline AnalyticFunction polynomial(int d, std::vector<PolynomialTerm> terms) {
  for (const auto& t : terms)
    for (const auto* idx : {&t.idx_l, &t.idx_m})
      for (int i : *idx)
        if (i < 0 || i >= d) throw InputError("polynomial: index " + std::to_string(i) + " out of range");
  AnalyticFunction f;
  f.d = d;
  f.eval = [terms = std::move(terms)](const cvec& xi, const cvec& eta) {
    std::complex<double> s{};
    for (const auto& t : terms) {
      std::complex<double> v = t.coeff;
      for (int i : t.idx_l) v *= xi[i];
      for (int j : t.idx_m) v *= eta[j];
      s += v;
    }
    return s;
  };
  return f;
}

/// e^{2<xi0, xi> + 2<eta0, eta>}.
inline AnalyticFunction exponential_function(cvec xi0, cvec eta0) {
  if (xi0.size() != eta0.size()) throw InputError("exponential: xi0 and eta0 differ in length");
  AnalyticFunction f;
  f.d = static_cast<int>(xi0.size());
  f.eval = [xi0 = std::move(xi0), eta0 = std::move(eta0)](const cvec& xi, const cvec& eta) {
    std::complex<double> s{};
    for (std::size_t j = 0; j < xi0.size(); ++j) s += xi0[j] * xi[j] + eta0[j] * eta[j];
    return std::exp(2.0 * s);
  };
  return f;
}

inline AnalyticFunction s_transform_function(const ChaosVector& v) {
  AnalyticFunction f;
  f.d = v.space().d();
  f.eval = [v](const cvec& xi, const cvec& eta) { return s_transform(v, xi, eta); };
  return f;
}

struct RadiusChoice {
  double radius = 1.0;
  double log_bound = kNaN;  // log of K^{n/2} (n^n / n!) l_{u*}(n)^{1/2}
};

/// Minimises u*(K n^2 r^2)^{1/2} / r^n over r > 0 in log r. The returned bound
/// is the minimum divided by n!, the Cauchy estimate for a degree-n
/// coefficient in a unit direction.
inline RadiusChoice optimal_radius(const GrowthFunction& u_star, double K, int n,
                                   const BracketPolicy& policy = {}) {
  if (n < 1) throw InputError("optimal_radius: degree must be >= 1");
  if (!(K > 0.0)) throw InputError("optimal_radius: K must be positive");
  const double c = std::log(K) + 2.0 * std::log(static_cast<double>(n));
  auto objective = [&](double x) { return 0.5 * u_star(std::exp(c + 2.0 * x)) - n * x; };
  LineMinimum m;
  try {
    m = bracketed_minimum(objective, u_star.claims(Property::log_exp_convex), policy, false, false);
  } catch (const DivergentTransform& e) {
    throw DivergentTransform("optimal_radius for " + u_star.spec() + ": " + e.what());
  }
  return {std::exp(m.x), m.value - log_factorial(n)};
}

struct ExtractionOptions {
  int nodes = 0;                  // per circle; 0 means 4 (cap + 1)
  std::vector<double> radii_xi;   // per variable; empty means 1
  std::vector<double> radii_eta;
};

namespace detail {

inline std::vector<int> active_variables(const MultiIndex& sorted) {
  std::vector<int> v(sorted);
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline double radius_at(const std::vector<double>& radii, int j) { return radii.empty() ? 1.0 : radii[j]; }

struct Radii {
  std::vector<double> xi, eta;
};

/// Taylor kernels for several bidegrees. Keys sharing active variables (and,
/// with per_degree radii, the bidegree) share one torus grid of N^k points;
/// inactive variables are held at 0.
inline std::map<Bidegree, KernelTensor> extract_kernels(const AnalyticFunction& F,
                                                        const std::vector<Bidegree>& degrees, int N,
                                                        const std::function<Radii(int, int)>& radii,
                                                        bool per_degree) {
  const int d = F.d;
  struct Item {
    Bidegree lm;
    KernelKey key;
  };
  using GroupKey = std::tuple<std::vector<int>, std::vector<int>, int, int>;
  std::map<GroupKey, std::vector<Item>> groups;
  std::map<Bidegree, KernelTensor> out;
  for (const auto& [l, m] : degrees) {
    out.try_emplace({l, m}, d, l, m);
    for_each_multiset(d, l, [&](const MultiIndex& a) {
      for_each_multiset(d, m, [&](const MultiIndex& b) {
        groups[{active_variables(a), active_variables(b), per_degree ? l : -1, per_degree ? m : -1}].push_back(
            {{l, m}, {a, b}});
      });
    });
  }
  std::vector<std::complex<double>> roots(N);
  for (int k = 0; k < N; ++k) roots[k] = std::polar(1.0, 2.0 * std::numbers::pi * k / N);

  for (const auto& [gk, items] : groups) {
    const auto& [vx, vy, gl, gm] = gk;
    const Radii r = radii(gl, gm);
    const int nx = static_cast<int>(vx.size());
    const int nv = nx + static_cast<int>(vy.size());
    std::vector<double> rad;
    for (int j : vx) rad.push_back(radius_at(r.xi, j));
    for (int j : vy) rad.push_back(radius_at(r.eta, j));
    std::vector<std::vector<int>> expo;
    for (const auto& it : items) {
      std::vector<int> e(nv, 0);
      for (int i : it.key.a) ++e[std::find(vx.begin(), vx.end(), i) - vx.begin()];
      for (int i : it.key.b) ++e[nx + (std::find(vy.begin(), vy.end(), i) - vy.begin())];
      expo.push_back(std::move(e));
    }
    std::vector<std::complex<double>> acc(items.size());
    std::vector<int> idx(nv, 0);
    cvec xi(d), eta(d);
    std::size_t count = 0;
    for (;;) {
      for (int i = 0; i < nv; ++i) {
        const std::complex<double> z = rad[i] * roots[idx[i]];
        if (i < nx) xi[vx[i]] = z;
        else eta[vy[i - nx]] = z;
      }
      const std::complex<double> f = F(xi, eta);
      if (!std::isfinite(f.real()) || !std::isfinite(f.imag()))
        throw InputError("taylor_coeffs: evaluator returned a non-finite value on the contour");
      for (std::size_t k = 0; k < items.size(); ++k) {
        int phase = 0;
        for (int i = 0; i < nv; ++i) phase += expo[k][i] * idx[i];
        acc[k] += f * std::conj(roots[phase % N]);
      }
      ++count;
      int i = 0;
      while (i < nv && ++idx[i] == N) idx[i++] = 0;
      if (i == nv) break;
    }
    for (std::size_t k = 0; k < items.size(); ++k) {
      double scale = static_cast<double>(count);
      for (int i = 0; i < nv; ++i) scale *= std::pow(rad[i], expo[k][i]);
      const auto& key = items[k].key;
      out.at(items[k].lm).set(key.a, key.b, acc[k] / (scale * multiplicity(key.a) * multiplicity(key.b)));
    }
  }
  return out;
}

inline void check_radii(const ExtractionOptions& opt, int d) {
  for (const auto* r : {&opt.radii_xi, &opt.radii_eta}) {
    if (!r->empty() && static_cast<int>(r->size()) != d) throw InputError("taylor_coeffs: radii length must equal d");
    for (double x : *r)
      if (!(x > 0.0)) throw InputError("taylor_coeffs: radii must be positive");
  }
}

}  // namespace detail

/// Degree-(l, m) Taylor kernel of F by the tensor trapezoidal rule on circles.
inline KernelTensor taylor_coeffs(const AnalyticFunction& F, int l, int m, const ExtractionOptions& opt = {}) {
  if (l < 0 || m < 0) throw InputError("taylor_coeffs: degrees must be >= 0");
  const int N = opt.nodes > 0 ? opt.nodes : 4 * (std::max(l, m) + 1);
  if (N < 2 * std::max(l, m) + 2) throw InputError("taylor_coeffs: need at least 2 * degree + 2 nodes per circle");
  detail::check_radii(opt, F.d);
  auto radii = [&](int, int) { return detail::Radii{opt.radii_xi, opt.radii_eta}; };
  return detail::extract_kernels(F, {{l, m}}, N, radii, false).at({l, m});
}

enum class RadiiPolicy { unit, optimal };

struct ReconstructOptions {
  RadiiPolicy radii = RadiiPolicy::unit;  // optimal needs F.profile on the dual side
  int nodes = 0;
  double prune = 1e-13;  // drop entries below prune * largest coefficient
};

/// Inverse S-transform: kernels F_{l,m} = Taylor kernel / 2^{(l+m)/2}.
inline ChaosVector reconstruct_chaos(const AnalyticFunction& F, int L, int M, const SpaceModel& space,
                                     const ReconstructOptions& opt = {}) {
  if (L < 0 || M < 0) throw InputError("reconstruct_chaos: caps must be >= 0");
  if (F.d != space.d()) throw InputError("reconstruct_chaos: function dimension differs from the space");
  const int N = opt.nodes > 0 ? opt.nodes : 4 * (std::max(L, M) + 1);
  if (N < 2 * std::max(L, M) + 2) throw InputError("reconstruct_chaos: need at least 2 * cap + 2 nodes per circle");
  std::vector<Bidegree> degrees;
  for (int l = 0; l <= L; ++l)
    for (int m = 0; m <= M; ++m) degrees.emplace_back(l, m);
  const bool optimal = opt.radii == RadiiPolicy::optimal && F.profile && F.profile->side == GrowthSide::dual;
  auto radii = [&](int l, int m) {
    detail::Radii r;
    if (!optimal) return r;
    const auto& g = *F.profile;
    auto per_var = [&](const GrowthFunction& u, double K, double p, int n) {
      std::vector<double> v(space.d(), 1.0);
      if (n == 0) return v;
      const double r0 = optimal_radius(u, K, n).radius;
      for (int j = 0; j < space.d(); ++j) v[j] = r0 * std::pow(space.lambda(j), -p);
      return v;
    };
    r.xi = per_var(g.u1, g.K1, g.p1, l);
    r.eta = per_var(g.u2, g.K2, g.p2, m);
    return r;
  };
  std::vector<KernelTensor> ks;
  double largest = 0.0;
  for (auto& [lm, k] : detail::extract_kernels(F, degrees, N, radii, optimal)) {
    KernelTensor scaled = k.scaled(std::exp(-0.5 * (lm.first + lm.second) * std::numbers::ln2));
    for (const auto& [key, v] : scaled.entries()) largest = std::max(largest, std::abs(v));
    ks.push_back(std::move(scaled));
  }
  std::vector<KernelTensor> kept;
  for (const auto& k : ks) {
    KernelTensor pruned(k.d(), k.l(), k.m());
    for (const auto& [key, v] : k.entries())
      if (std::abs(v) > opt.prune * largest) pruned.set(key.a, key.b, v);
    if (!pruned.empty()) kept.push_back(std::move(pruned));
  }
  if (kept.empty()) return ChaosVector::constant(space, 0.0);
  return ChaosVector(space, kept);
}

struct SampleCloud {
  int directions = 64;
  int radii = 24;
  double r_min = 1e-2;
  double r_max = 10.0;
  bool axes = true;  // add real and imaginary coordinate directions
  int climb_steps = 400;
  std::uint64_t seed = 1;

  std::string describe() const {
    return std::to_string(directions) + " random directions x " + std::to_string(radii) + " radii in [" +
           std::to_string(r_min) + ", " + std::to_string(r_max) + "]" + (axes ? " + axes" : "") + " + origin";
  }
};

struct GrowthCertificate {
  double C_hat = 0.0;
  double log_C_hat = -kInf;
  cvec witness_xi, witness_eta;  // where C_hat is attained
  std::optional<double> claimed_C;
  std::vector<std::pair<cvec, cvec>> violations;  // points exceeding the claimed C
  std::size_t samples = 0;
  std::string sample_description;

  bool holds() const { return violations.empty(); }
};

/// C_hat = max over the cloud of |F|^2 / (w1(K1 |xi|^2) w2(K2 |eta|^2)), the
/// norms being |.|_{p} on the dual side and |.|_{-p} on the primal side. The
/// best cloud point is then improved by a hill climb.
inline GrowthCertificate check_growth_condition(const AnalyticFunction& F, const GrowthProfile& g,
                                                const SpaceModel& space, const SampleCloud& cloud = {},
                                                std::optional<double> claimed_C = std::nullopt) {
  if (F.d != space.d()) throw InputError("check_growth_condition: function dimension differs from the space");
  const int d = space.d();
  const double s = g.side == GrowthSide::dual ? 1.0 : -1.0;
  GrowthCertificate cert;
  cert.claimed_C = claimed_C;
  cert.sample_description = cloud.describe();
  cert.witness_xi.assign(d, 0.0);
  cert.witness_eta.assign(d, 0.0);
  const double log_claim = claimed_C ? std::log(*claimed_C) : kInf;
  auto log_ratio = [&](const cvec& xi, const cvec& eta) {
    ++cert.samples;
    const double a = std::abs(F(xi, eta));
    if (a == 0.0) return -kInf;
    const double r = 2.0 * std::log(a) - g.u1(g.K1 * space.norm_sq(xi, s * g.p1)) -
                     g.u2(g.K2 * space.norm_sq(eta, s * g.p2));
    return std::isnan(r) ? kInf : r;
  };
  auto offer = [&](const cvec& xi, const cvec& eta) {
    const double r = log_ratio(xi, eta);
    if (r > log_claim && cert.violations.size() < 16) cert.violations.emplace_back(xi, eta);
    if (r > cert.log_C_hat) {
      cert.log_C_hat = r;
      cert.witness_xi = xi;
      cert.witness_eta = eta;
    }
    return r;
  };
  offer(cvec(d), cvec(d));

  Rng rng(cloud.seed);
  std::vector<std::pair<cvec, cvec>> dirs;
  if (cloud.axes)
    for (int j = 0; j < 2 * d; ++j)
      for (std::complex<double> ph : {std::complex<double>(1, 0), std::complex<double>(0, 1)}) {
        cvec a(d), b(d);
        (j < d ? a[j] : b[j - d]) = ph;
        dirs.emplace_back(a, b);
      }
  for (int k = 0; k < cloud.directions; ++k) {
    cvec a(d), b(d);
    for (auto& c : a) c = rng.complex_normal();
    for (auto& c : b) c = rng.complex_normal();
    dirs.emplace_back(a, b);
  }
  const double lr0 = std::log(cloud.r_min), lr1 = std::log(cloud.r_max);
  for (const auto& [a, b] : dirs) {
    const double na = std::sqrt(space.norm_sq(a, 0.0) + space.norm_sq(b, 0.0));
    for (int i = 0; i < cloud.radii; ++i) {
      const double r = std::exp(lr0 + (lr1 - lr0) * i / std::max(1, cloud.radii - 1)) / na;
      cvec x(a), y(b);
      for (auto& c : x) c *= r;
      for (auto& c : y) c *= r;
      offer(x, y);
    }
  }
  cvec x = cert.witness_xi, y = cert.witness_eta;
  double best = cert.log_C_hat;
  double step = 0.1;
  for (int it = 0; it < cloud.climb_steps && step > 1e-10; ++it) {
    cvec xn = x, yn = y;
    const double scale = step * (1e-3 + std::sqrt(space.norm_sq(x, 0.0) + space.norm_sq(y, 0.0)));
    for (auto& c : xn) c += scale * rng.complex_normal();
    for (auto& c : yn) c += scale * rng.complex_normal();
    const double r = offer(xn, yn);
    if (r > best) {
      best = r;
      x = std::move(xn);
      y = std::move(yn);
      step *= 1.5;
    } else {
      step *= 0.85;
    }
  }
  cert.C_hat = std::exp(cert.log_C_hat);
  return cert;
}

enum class KernelBoundDirection { dual_side, primal_side };

struct BidegreeBound {
  int l = 0, m = 0;
  double log_lhs = -kInf;  // log |k|^2 in the checked norm
  double log_rhs = kInf;
};

struct KernelBoundReport {
  Verdict verdict = Verdict::holds_on_grid;
  double margin = kInf;  // min log_rhs - log_lhs
  std::vector<BidegreeBound> rows;
  std::vector<std::pair<int, int>> witnesses;  // failing bidegrees

  bool holds() const { return verdict == Verdict::holds_on_grid; }
};

/// Per-bidegree kernel bound
///   dual_side:   |k|^2_{-q1,-q2} <= C^2 (K1 e^2 hs(q1,p1))^l (K2 e^2 hs(q2,p2))^m l_{u1*}(l) l_{u2*}(m), q > p
///   primal_side: |k|^2_{q1,q2}   <= C^2 (K1 e^2 hs(p1,q1))^l (K2 e^2 hs(p2,q2))^m l_{u1}(l) l_{u2}(m),   q < p
/// with C the amplitude constant (|F| <= C w1^{1/2} w2^{1/2}) and u1, u2 the
/// primal growth functions.
inline KernelBoundReport verify_kernel_bounds(const std::vector<KernelTensor>& kernels, const SpaceModel& space,
                                              double C, double K1, double K2, double p1, double p2, double q1,
                                              double q2, const GrowthFunction& u1, const GrowthFunction& u2,
                                              KernelBoundDirection dir) {
  const bool dual = dir == KernelBoundDirection::dual_side;
  if (dual ? !(q1 > p1 && q2 > p2) : !(q1 < p1 && q2 < p2))
    throw PreconditionError(dual ? "kernel bound: need q > p" : "kernel bound: need q < p");
  const double hs1 = dual ? space.hs_norm(q1, p1) : space.hs_norm(p1, q1);
  const double hs2 = dual ? space.hs_norm(q2, p2) : space.hs_norm(p2, q2);
  const double a1 = K1 * std::exp(2.0) * hs1, a2 = K2 * std::exp(2.0) * hs2;
  if (!(a1 < 1.0) || !(a2 < 1.0)) throw PreconditionError("kernel bound: need K e^2 hs < 1");
  int top_l = 0, top_m = 0;
  for (const auto& k : kernels) {
    top_l = std::max(top_l, k.l());
    top_m = std::max(top_m, k.m());
  }
  const auto w1 = dual ? dual_legendre_at_degrees(u1, top_l) : legendre_at_degrees(u1, top_l);
  const auto w2 = dual ? dual_legendre_at_degrees(u2, top_m) : legendre_at_degrees(u2, top_m);
  const double sgn = dual ? -1.0 : 1.0;
  KernelBoundReport rep;
  for (const auto& k : kernels) {
    BidegreeBound row{k.l(), k.m(), -kInf, kInf};
    const double n2 = k.norm_sq(space, sgn * q1, sgn * q2);
    row.log_lhs = n2 > 0.0 ? std::log(n2) : -kInf;
    row.log_rhs = 2.0 * std::log(C) + k.l() * std::log(a1) + k.m() * std::log(a2) + w1[k.l()] + w2[k.m()];
    if (row.log_lhs > -kInf) rep.margin = std::min(rep.margin, row.log_rhs - row.log_lhs);
    if (row.log_lhs > row.log_rhs) {
      rep.verdict = Verdict::fails;
      rep.witnesses.emplace_back(k.l(), k.m());
    }
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace cks
