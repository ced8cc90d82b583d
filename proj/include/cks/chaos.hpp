#pragma once

// Finitely supported chaos vectors on the complex Gaussian space: norms,
// pairing, holomorphic evaluation, exponential vectors and the multiple
// S-transform in pairing and integral form.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iterator>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "cks/errors.hpp"
#include "cks/growth.hpp"
#include "cks/kernel.hpp"
#include "cks/numeric.hpp"
#include "cks/quadrature.hpp"
#include "cks/random.hpp"
#include "cks/space.hpp"
#include "cks/transforms.hpp"

namespace cks {

using Bidegree = std::pair<int, int>;

class ChaosVector {
 public:
  using value_type = std::complex<double>;

  explicit ChaosVector(SpaceModel space) : space_(std::move(space)) {}
  /// Kernels of equal bidegree are summed.
  ChaosVector(SpaceModel space, const std::vector<KernelTensor>& kernels) : space_(std::move(space)) {
    for (const auto& k : kernels) {
      if (k.d() != space_.d()) throw InputError("chaos vector: kernel dimension differs from the space");
      auto [it, fresh] = kernels_.try_emplace({k.l(), k.m()}, k);
      if (!fresh)
        for (const auto& [key, v] : k.entries()) it->second.add(key.a, key.b, v);
    }
  }

  static ChaosVector constant(SpaceModel space, value_type c = 1.0) {
    KernelTensor k(space.d(), 0, 0);
    k.set({}, {}, c);
    return ChaosVector(std::move(space), {k});
  }

  /// Single entry c at (a, b), symmetrised.
  static ChaosVector monomial(SpaceModel space, MultiIndex a, MultiIndex b, value_type c = 1.0) {
    KernelTensor k(space.d(), static_cast<int>(a.size()), static_cast<int>(b.size()));
    k.set(std::move(a), std::move(b), c);
    return ChaosVector(std::move(space), {k});
  }

  const SpaceModel& space() const { return space_; }
  const std::map<Bidegree, KernelTensor>& kernels() const { return kernels_; }
  const KernelTensor* kernel(int l, int m) const {
    auto it = kernels_.find({l, m});
    return it == kernels_.end() ? nullptr : &it->second;
  }
  int max_l() const {
    int v = 0;
    for (const auto& [lm, k] : kernels_) v = std::max(v, lm.first);
    return v;
  }
  int max_m() const {
    int v = 0;
    for (const auto& [lm, k] : kernels_) v = std::max(v, lm.second);
    return v;
  }
  int total_degree() const {
    int v = 0;
    for (const auto& [lm, k] : kernels_) v = std::max(v, lm.first + lm.second);
    return v;
  }

  ChaosVector scaled(value_type c) const { return map([c](const KernelTensor& k) { return k.scaled(c); }); }
  ChaosVector conj() const { return map([](const KernelTensor& k) { return k.conj(); }); }
  ChaosVector swap_blocks() const { return map([](const KernelTensor& k) { return k.swap_blocks(); }); }

  ChaosVector plus(const ChaosVector& other) const {
    if (!(other.space_ == space_)) throw InputError("chaos vector: spaces differ");
    std::vector<KernelTensor> all;
    for (const auto& [lm, k] : kernels_) all.push_back(k);
    for (const auto& [lm, k] : other.kernels_) all.push_back(k);
    return ChaosVector(space_, all);
  }

 private:
  template <class F>
  ChaosVector map(F&& f) const {
    std::vector<KernelTensor> ks;
    for (const auto& [lm, k] : kernels_) ks.push_back(f(k));
    return ChaosVector(space_, ks);
  }

  SpaceModel space_;
  std::map<Bidegree, KernelTensor> kernels_;
};

namespace detail {

inline void require_same_space(const ChaosVector& a, const ChaosVector& b) {
  if (!(a.space() == b.space())) throw InputError("chaos vectors live on different space models");
}

/// sqrt(sum_{l,m} |k_{l,m}|^2_{p1,p2} e^{w1[l] + w2[m]}) with log weights w.
inline double weighted_norm(const ChaosVector& v, double p1, double p2, const std::vector<double>& w1,
                            const std::vector<double>& w2) {
  std::vector<double> logs;
  for (const auto& [lm, k] : v.kernels()) {
    const double n2 = k.norm_sq(v.space(), p1, p2);
    if (n2 == 0.0) continue;
    logs.push_back(std::log(n2) + w1[lm.first] + w2[lm.second]);
  }
  if (logs.empty()) return 0.0;
  return std::exp(0.5 * log_sum_exp(logs));
}

inline std::vector<double> negated(std::vector<double> v) {
  for (double& x : v) x = -x;
  return v;
}

}  // namespace detail

/// L^2 norm: sum l! m! |f_{l,m}|_0^2.
inline double l2_norm(const ChaosVector& v) {
  std::vector<double> w(std::max(v.max_l(), v.max_m()) + 1);
  for (std::size_t n = 0; n < w.size(); ++n) w[n] = log_factorial(static_cast<int>(n));
  return detail::weighted_norm(v, 0.0, 0.0, w, w);
}

/// Test-function norm: sqrt(sum |f_{l,m}|^2_{p1,p2} / (l_{u1}(l) l_{u2}(m))).
inline double norm_test(const ChaosVector& v, const GrowthFunction& u1, const GrowthFunction& u2, double p1,
                        double p2) {
  return detail::weighted_norm(v, p1, p2, detail::negated(legendre_at_degrees(u1, v.max_l())),
                               detail::negated(legendre_at_degrees(u2, v.max_m())));
}

/// Dual norm with weight 1 / (l_{u1*}(l) l_{u2*}(m)).
inline double norm_dual(const ChaosVector& v, const GrowthFunction& u1, const GrowthFunction& u2, double p1,
                        double p2) {
  return detail::weighted_norm(v, -p1, -p2, detail::negated(dual_legendre_at_degrees(u1, v.max_l())),
                               detail::negated(dual_legendre_at_degrees(u2, v.max_m())));
}

/// Dual norm with the weight (l! m!)^2 l_{u1}(l) l_{u2}(m) that makes
/// |pairing(F, f)| <= norm_dual_exact(F) * norm_test(f) hold by Cauchy-Schwarz.
inline double norm_dual_exact(const ChaosVector& v, const GrowthFunction& u1, const GrowthFunction& u2, double p1,
                              double p2) {
  auto w1 = legendre_at_degrees(u1, v.max_l());
  auto w2 = legendre_at_degrees(u2, v.max_m());
  for (std::size_t n = 0; n < w1.size(); ++n) w1[n] += 2 * log_factorial(static_cast<int>(n));
  for (std::size_t n = 0; n < w2.size(); ++n) w2[n] += 2 * log_factorial(static_cast<int>(n));
  return detail::weighted_norm(v, -p1, -p2, w1, w2);
}

/// log of (n!)^2 l_u(n) l_{u*}(n): how far the exact dual weight exceeds
/// 1 / l_{u*}(n) at degree n.
inline std::vector<double> log_dual_weight_gap(const GrowthFunction& u, int max_degree) {
  auto a = legendre_at_degrees(u, max_degree);
  auto b = dual_legendre_at_degrees(u, max_degree);
  std::vector<double> out(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) out[n] = 2 * log_factorial(static_cast<int>(n)) + a[n] + b[n];
  return out;
}

/// sum l! m! <F_{l,m}, f_{l,m}>, bilinear.
inline std::complex<double> pairing(const ChaosVector& F, const ChaosVector& f) {
  detail::require_same_space(F, f);
  std::complex<double> total{};
  for (const auto& [lm, k] : F.kernels()) {
    const KernelTensor* g = f.kernel(lm.first, lm.second);
    if (!g) continue;
    total += std::exp(log_factorial(lm.first) + log_factorial(lm.second)) * k.bilinear(*g);
  }
  return total;
}

/// Holomorphic evaluation sum <f_{l,m}, x^{(x)l} (x) y^{(x)m}>.
inline std::complex<double> evaluate(const ChaosVector& v, const cvec& x, const cvec& y) {
  v.space().check_dim(x.size());
  v.space().check_dim(y.size());
  std::complex<double> total{};
  for (const auto& [lm, k] : v.kernels()) total += k.contract(x, y);
  return total;
}

/// Kernels (sqrt 2)^{l+m} / (l! m!) xi^{(x)l} (x) eta^{(x)m} for l <= L, m <= M.
inline ChaosVector exponential_vector(const SpaceModel& space, const cvec& xi, const cvec& eta, int L, int M) {
  if (L < 0 || M < 0) throw InputError("exponential_vector: cutoffs must be >= 0");
  space.check_dim(xi.size());
  space.check_dim(eta.size());
  std::vector<KernelTensor> ks;
  for (int l = 0; l <= L; ++l)
    for (int m = 0; m <= M; ++m) {
      const double c = std::exp(0.5 * (l + m) * std::numbers::ln2 - log_factorial(l) - log_factorial(m));
      ks.push_back(KernelTensor::product(xi, l, eta, m).scaled(c));
    }
  return ChaosVector(space, ks);
}

/// Pairing form: sum 2^{(l+m)/2} <F_{l,m}, xi^{(x)l} (x) eta^{(x)m}>.
inline std::complex<double> s_transform(const ChaosVector& v, const cvec& xi, const cvec& eta) {
  v.space().check_dim(xi.size());
  v.space().check_dim(eta.size());
  std::complex<double> total{};
  for (const auto& [lm, k] : v.kernels())
    total += std::exp(0.5 * (lm.first + lm.second) * std::numbers::ln2) * k.contract(xi, eta);
  return total;
}

struct QuadratureValue {
  std::complex<double> value;
  bool exact = true;  // order high enough for every occupied degree
  std::size_t points = 0;
};

/// Integral form: E phi(x + sqrt2 xi, y + sqrt2 eta) where each coordinate of
/// x and y is complex Gaussian with real and imaginary parts N(0, 1/2),
/// by tensor Gauss-Hermite quadrature. Factors with degree 0 are not
/// integrated.
inline QuadratureValue s_transform_integral(const ChaosVector& v, const cvec& xi, const cvec& eta, int order) {
  const auto& s = v.space();
  s.check_dim(xi.size());
  s.check_dim(eta.size());
  const int d = s.d();
  const GaussHermiteRule rule = gauss_hermite(order);
  const bool with_x = v.max_l() > 0;
  const bool with_y = v.max_m() > 0;
  const int dim = 2 * d * (static_cast<int>(with_x) + static_cast<int>(with_y));
  QuadratureValue out;
  out.exact = rule.exact_degree() >= std::max(v.max_l(), v.max_m());
  cvec x(d), y(d);
  auto shift = [](const cvec& c) {
    cvec o(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) o[j] = std::numbers::sqrt2 * c[j];
    return o;
  };
  const cvec sx = shift(xi), sy = shift(eta);
  if (dim == 0) {
    out.value = evaluate(v, sx, sy);
    out.points = 1;
    return out;
  }
  for_each_tensor_node(rule, dim, [&](const std::vector<double>& pt, double w) {
    int c = 0;
    for (int j = 0; j < d; ++j) {
      x[j] = sx[j];
      y[j] = sy[j];
    }
    if (with_x)
      for (int j = 0; j < d; ++j, c += 2) x[j] += std::complex<double>(pt[c], pt[c + 1]);
    if (with_y)
      for (int j = 0; j < d; ++j, c += 2) y[j] += std::complex<double>(pt[c], pt[c + 1]);
    out.value += w * evaluate(v, x, y);
    ++out.points;
  });
  return out;
}

struct SupNormOptions {
  int directions = 32;
  int radial_points = 40;
  double radial_min = 1e-3;
  double radial_max = 1e3;
  int refine_starts = 4;
  int climb_steps = 300;
  std::uint64_t seed = 1;
  std::vector<std::pair<cvec, cvec>> candidates;  // extra points to evaluate
};

struct SupNormEstimate {
  double value = 0.0;
  double log_value = -kInf;
  cvec x;
  cvec y;
  std::size_t evaluations = 0;
};

/// Lower estimate of sup |phi(x,y)| u1(|x|^2_{-p1})^{-1/2} u2(|y|^2_{-p2})^{-1/2}
/// over complex (x, y). Each random direction pair is scanned on a 2-D radial
/// grid; the best few points are then refined by radial golden sections and
/// a random-perturbation hill climb over all coordinates.
inline SupNormEstimate sup_norm(const ChaosVector& v, const GrowthFunction& u1, const GrowthFunction& u2, double p1,
                                double p2, const SupNormOptions& opt = {}) {
  const auto& s = v.space();
  const int d = s.d();
  SupNormEstimate best;
  best.x.assign(d, 0.0);
  best.y.assign(d, 0.0);
  auto objective = [&](const cvec& x, const cvec& y) {
    ++best.evaluations;
    const double a = std::abs(evaluate(v, x, y));
    if (a == 0.0) return -kInf;
    const double g = std::log(a) - 0.5 * (u1(s.norm_sq(x, -p1)) + u2(s.norm_sq(y, -p2)));
    return std::isnan(g) ? -kInf : g;
  };
  auto offer = [&](const cvec& x, const cvec& y, double g) {
    if (g > best.log_value) {
      best.log_value = g;
      best.x = x;
      best.y = y;
    }
  };
  offer(best.x, best.y, objective(best.x, best.y));
  for (const auto& [x, y] : opt.candidates) offer(x, y, objective(x, y));

  Rng rng(opt.seed);
  auto unit = [&](double p) {
    cvec dir(d);
    for (auto& c : dir) c = rng.complex_normal();
    const double n = std::sqrt(s.norm_sq(dir, -p));
    for (auto& c : dir) c /= n;
    return dir;
  };
  std::vector<double> radii{0.0};
  const double lr0 = std::log(opt.radial_min), lr1 = std::log(opt.radial_max);
  for (int i = 0; i < opt.radial_points; ++i)
    radii.push_back(std::exp(lr0 + (lr1 - lr0) * i / std::max(1, opt.radial_points - 1)));

  struct Start {
    double g;
    cvec dx, dy;
    double sx, sy;
  };
  std::vector<Start> starts;
  auto point = [](const cvec& dir, double r) {
    cvec p(dir);
    for (auto& c : p) c *= r;
    return p;
  };
  for (int k = 0; k < opt.directions; ++k) {
    const cvec dx = unit(p1), dy = unit(p2);
    Start st{-kInf, dx, dy, 0.0, 0.0};
    for (double a : radii)
      for (double b : radii) {
        const double g = objective(point(dx, a), point(dy, b));
        if (g > st.g) st = {g, dx, dy, a, b};
      }
    offer(point(st.dx, st.sx), point(st.dy, st.sy), st.g);
    starts.push_back(std::move(st));
  }
  std::sort(starts.begin(), starts.end(), [](const Start& a, const Start& b) { return a.g > b.g; });
  if (static_cast<int>(starts.size()) > opt.refine_starts) starts.resize(opt.refine_starts);

  for (auto& st : starts) {
    // alternate radial golden sections in log radius
    for (int sweep = 0; sweep < 3; ++sweep) {
      for (int which = 0; which < 2; ++which) {
        double& r = which == 0 ? st.sx : st.sy;
        if (r == 0.0) continue;
        auto f = [&](double lr) {
          const double a = which == 0 ? std::exp(lr) : st.sx;
          const double b = which == 0 ? st.sy : std::exp(lr);
          return -objective(point(st.dx, a), point(st.dy, b));
        };
        const double c = std::log(r);
        LineMinimum m = detail::golden_section(f, c - 0.5, c + 0.5, 1e-10);
        if (-m.value > st.g) {
          st.g = -m.value;
          r = std::exp(m.x);
        }
      }
    }
    cvec x = point(st.dx, st.sx), y = point(st.dy, st.sy);
    double g = st.g;
    double step = 0.1;
    for (int it = 0; it < opt.climb_steps && step > 1e-9; ++it) {
      cvec xn = x, yn = y;
      const double sx = step * (1e-3 + std::sqrt(s.norm_sq(x, 0.0)));
      const double sy = step * (1e-3 + std::sqrt(s.norm_sq(y, 0.0)));
      if (v.max_l() > 0)
        for (auto& c : xn) c += sx * rng.complex_normal();
      if (v.max_m() > 0)
        for (auto& c : yn) c += sy * rng.complex_normal();
      const double gn = objective(xn, yn);
      if (gn > g) {
        g = gn;
        x = std::move(xn);
        y = std::move(yn);
        step *= 1.5;
      } else {
        step *= 0.85;
      }
    }
    offer(x, y, g);
  }
  best.value = std::exp(best.log_value);
  return best;
}

using MonomialMap = std::map<KernelKey, std::complex<double>>;

/// Coefficients of the monomials prod x_a prod y_b: multiplicity times the
/// kernel entry.
inline MonomialMap to_monomials(const ChaosVector& v) {
  MonomialMap out;
  for (const auto& [lm, k] : v.kernels())
    for (const auto& [key, c] : k.entries()) out[key] += c * (multiplicity(key.a) * multiplicity(key.b));
  return out;
}

inline ChaosVector from_monomials(const SpaceModel& space, const MonomialMap& mono) {
  std::map<Bidegree, KernelTensor> ks;
  for (const auto& [key, c] : mono) {
    const int l = static_cast<int>(key.a.size()), m = static_cast<int>(key.b.size());
    auto it = ks.try_emplace({l, m}, space.d(), l, m).first;
    it->second.add(key.a, key.b, c / (multiplicity(key.a) * multiplicity(key.b)));
  }
  std::vector<KernelTensor> list;
  for (auto& [lm, k] : ks) list.push_back(std::move(k));
  return ChaosVector(space, list);
}

/// Pointwise product of the two evaluated polynomials.
inline ChaosVector multiply(const ChaosVector& f, const ChaosVector& g) {
  detail::require_same_space(f, g);
  const MonomialMap a = to_monomials(f), b = to_monomials(g);
  MonomialMap out;
  for (const auto& [ka, ca] : a)
    for (const auto& [kb, cb] : b) {
      KernelKey k;
      std::merge(ka.a.begin(), ka.a.end(), kb.a.begin(), kb.a.end(), std::back_inserter(k.a));
      std::merge(ka.b.begin(), ka.b.end(), kb.b.begin(), kb.b.end(), std::back_inserter(k.b));
      out[k] += ca * cb;
    }
  return from_monomials(f.space(), out);
}

/// psi * conj-coefficient psi: equals |psi|^2 at real points.
inline ChaosVector modulus_squared(const ChaosVector& psi) { return multiply(psi, psi.conj()); }

/// Random vector with every bidegree l + m <= total_degree occupied on all
/// sorted index pairs; coefficients are standard complex normal scaled by
/// 1 / sqrt(l! m! * entries in the kernel).
inline ChaosVector random_chaos(const SpaceModel& space, int total_degree, Rng& rng) {
  if (total_degree < 0) throw InputError("random_chaos: degree must be >= 0");
  std::vector<KernelTensor> ks;
  const int d = space.d();
  for (int l = 0; l <= total_degree; ++l)
    for (int m = 0; l + m <= total_degree; ++m) {
      KernelTensor k(d, l, m);
      const double n = static_cast<double>(multiset_count(d, l) * multiset_count(d, m));
      const double scale = std::exp(-0.5 * (log_factorial(l) + log_factorial(m) + std::log(n)));
      for_each_multiset(d, l, [&](const MultiIndex& a) {
        for_each_multiset(d, m, [&](const MultiIndex& b) { k.set(a, b, scale * rng.complex_normal()); });
      });
      ks.push_back(std::move(k));
    }
  return ChaosVector(space, ks);
}

/// C(p) = max over l, m <= max_degree of l! m! l_{u1}(l) l_{u2}(m) lambda_1^{-2p(l+m)},
/// so that l2_norm^2 <= C(p) norm_test(., u1, u2, p, p)^2 up to that degree.
inline double embedding_constant(const SpaceModel& space, const GrowthFunction& u1, const GrowthFunction& u2,
                                 double p, int max_degree) {
  const auto a = legendre_at_degrees(u1, max_degree);
  const auto b = legendre_at_degrees(u2, max_degree);
  const double ll = std::log(space.lambda(0));
  double best = -kInf;
  for (int l = 0; l <= max_degree; ++l)
    for (int m = 0; m <= max_degree; ++m)
      best = std::max(best, log_factorial(l) + log_factorial(m) + a[l] + b[m] - 2 * p * (l + m) * ll);
  return std::exp(best);
}

}  // namespace cks
