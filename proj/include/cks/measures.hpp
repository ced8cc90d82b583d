#pragma once

// Product measures nu1 x nu2 on R^d x R^d: Monte-Carlo integrability of the
// growth weights, the induced functional and its boundedness, the omega test
// function, and positivity / pseudo-positivity probes.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "cks/chaos.hpp"
#include "cks/errors.hpp"
#include "cks/growth.hpp"
#include "cks/kernel.hpp"
#include "cks/numeric.hpp"
#include "cks/random.hpp"
#include "cks/space.hpp"
#include "cks/transforms.hpp"

namespace cks {

// ---------------------------------------------------------------------------
// Component measures

enum class MeasureKind { gaussian, pointmass, student_t };

/// A measure on R^d with independent coordinates. Parameters given as a
/// single value broadcast to every coordinate.
class ComponentMeasure {
 public:
  static ComponentMeasure gaussian(std::vector<double> sigmas) {
    for (double s : sigmas)
      if (!(s >= 0.0) || !std::isfinite(s)) throw InputError("gaussian: sigma must be finite and >= 0");
    if (sigmas.empty()) throw InputError("gaussian: no sigma given");
    ComponentMeasure m(MeasureKind::gaussian);
    m.params_ = std::move(sigmas);
    return m;
  }
  static ComponentMeasure pointmass(std::vector<double> at) {
    for (double a : at)
      if (!std::isfinite(a)) throw InputError("pointmass: coordinates must be finite");
    if (at.empty()) throw InputError("pointmass: no location given");
    ComponentMeasure m(MeasureKind::pointmass);
    m.params_ = std::move(at);
    return m;
  }
  static ComponentMeasure student_t(double nu) {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw InputError("student_t: nu must be positive");
    ComponentMeasure m(MeasureKind::student_t);
    m.params_ = {nu};
    return m;
  }

  MeasureKind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }

  /// Dimension fixed by the parameters, 0 when broadcast.
  int fixed_dim() const {
    if (kind_ == MeasureKind::student_t) return 0;
    return params_.size() == 1 && kind_ == MeasureKind::gaussian ? 0 : static_cast<int>(params_.size());
  }
  void check_dim(int d) const {
    const int f = fixed_dim();
    if (f != 0 && f != d)
      throw InputError("measure " + spec() + " has dimension " + std::to_string(f) + ", space has " +
                       std::to_string(d));
  }

  double param(int j) const { return params_.size() == 1 ? params_[0] : params_[j]; }

  void sample(Rng& rng, double* out, int d) const {
    switch (kind_) {
      case MeasureKind::gaussian:
        for (int j = 0; j < d; ++j) out[j] = param(j) * rng.normal();
        break;
      case MeasureKind::pointmass:
        for (int j = 0; j < d; ++j) out[j] = params_[j];
        break;
      case MeasureKind::student_t: {
        std::student_t_distribution<double> t(params_[0]);
        for (int j = 0; j < d; ++j) out[j] = t(rng.engine());
        break;
      }
    }
  }

  /// Log-density with respect to Lebesgue measure; empty for point masses.
  std::optional<double> log_density(std::span<const double> x) const {
    double s = 0.0;
    switch (kind_) {
      case MeasureKind::pointmass:
        return std::nullopt;
      case MeasureKind::gaussian:
        for (std::size_t j = 0; j < x.size(); ++j) {
          const double sg = param(static_cast<int>(j));
          if (sg == 0.0) return std::nullopt;
          s += -0.5 * (x[j] / sg) * (x[j] / sg) - std::log(sg) - 0.5 * std::log(2 * std::numbers::pi);
        }
        return s;
      case MeasureKind::student_t: {
        const double nu = params_[0];
        const double c = std::lgamma(0.5 * (nu + 1)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi);
        for (double v : x) s += c - 0.5 * (nu + 1) * std::log1p(v * v / nu);
        return s;
      }
    }
    return std::nullopt;
  }

  /// E prod_j x_j^{k_j}; +inf when the moment does not exist.
  double moment(const std::vector<int>& powers) const {
    double out = 1.0;
    for (std::size_t j = 0; j < powers.size(); ++j) {
      const int k = powers[j];
      if (k == 0) continue;
      switch (kind_) {
        case MeasureKind::pointmass:
          out *= std::pow(params_[j], k);
          break;
        case MeasureKind::gaussian: {
          if (k % 2) return 0.0;
          double dfact = 1.0;
          for (int i = k - 1; i > 1; i -= 2) dfact *= i;
          out *= dfact * std::pow(param(static_cast<int>(j)), k);
          break;
        }
        case MeasureKind::student_t: {
          const double nu = params_[0];
          if (k >= nu) return kInf;
          if (k % 2) return 0.0;
          double m = 1.0;
          for (int i = 1; i <= k / 2; ++i) m *= nu * (2 * i - 1) / (nu - 2 * i);
          out *= m;
          break;
        }
      }
    }
    return out;
  }

  std::string spec() const {
    std::ostringstream os;
    os.precision(17);
    auto list = [&] {
      os << '[';
      for (std::size_t i = 0; i < params_.size(); ++i) os << (i ? "," : "") << params_[i];
      os << ']';
    };
    switch (kind_) {
      case MeasureKind::gaussian:
        if (params_.size() == 1) {
          os << "gaussian:sigma=" << params_[0];
        } else {
          os << "gaussian_diag:sigmas=";
          list();
        }
        break;
      case MeasureKind::pointmass:
        os << "pointmass:at=";
        list();
        break;
      case MeasureKind::student_t:
        os << "student_t:nu=" << params_[0];
        break;
    }
    return os.str();
  }

 private:
  explicit ComponentMeasure(MeasureKind k) : kind_(k) {}
  MeasureKind kind_;
  std::vector<double> params_;
};

namespace detail {

inline double parse_number(std::string_view s, std::string_view what) {
  std::string t(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw InputError("measure spec: bad number '" + t + "' for " + std::string(what));
  }
  if (used != t.size()) throw InputError("measure spec: bad number '" + t + "' for " + std::string(what));
  return v;
}

inline std::vector<double> parse_number_list(std::string_view s, std::string_view what) {
  if (s.size() < 2 || s.front() != '[' || s.back() != ']')
    throw InputError("measure spec: " + std::string(what) + " must be a list like [1,2]");
  s = s.substr(1, s.size() - 2);
  std::vector<double> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    out.push_back(parse_number(s.substr(0, comma), what));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace detail

/// Parses `gaussian:sigma=1`, `gaussian_diag:sigmas=[1,2]`, `pointmass:at=[0,0]`
/// and `student_t:nu=3`.
inline ComponentMeasure parse_measure_spec(std::string_view text) {
  const auto colon = text.find(':');
  const std::string kind(text.substr(0, colon));
  std::map<std::string, std::string> kv;
  if (colon != std::string_view::npos) {
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      std::size_t end = 0;
      int depth = 0;
      while (end < rest.size() && !(rest[end] == ',' && depth == 0)) {
        if (rest[end] == '[') ++depth;
        if (rest[end] == ']') --depth;
        ++end;
      }
      const std::string_view item = rest.substr(0, end);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) throw InputError("measure spec: expected key=value in '" + std::string(item) + "'");
      kv[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
      rest = end < rest.size() ? rest.substr(end + 1) : std::string_view{};
    }
  }
  auto take = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw InputError("measure spec: " + kind + " requires " + key);
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto done = [&] {
    if (!kv.empty()) throw InputError("measure spec: unknown parameter '" + kv.begin()->first + "' for " + kind);
  };
  if (kind == "gaussian") {
    const double s = detail::parse_number(take("sigma"), "sigma");
    done();
    return ComponentMeasure::gaussian({s});
  }
  if (kind == "gaussian_diag") {
    auto s = detail::parse_number_list(take("sigmas"), "sigmas");
    done();
    return ComponentMeasure::gaussian(std::move(s));
  }
  if (kind == "pointmass") {
    auto a = detail::parse_number_list(take("at"), "at");
    done();
    return ComponentMeasure::pointmass(std::move(a));
  }
  if (kind == "student_t") {
    const double nu = detail::parse_number(take("nu"), "nu");
    done();
    return ComponentMeasure::student_t(nu);
  }
  throw InputError("measure spec: unknown measure '" + kind + "'");
}

struct ProductMeasureModel {
  ProductMeasureModel(SpaceModel s, ComponentMeasure a, ComponentMeasure b)
      : space(std::move(s)), nu1(std::move(a)), nu2(std::move(b)) {
    nu1.check_dim(space.d());
    nu2.check_dim(space.d());
  }
  SpaceModel space;
  ComponentMeasure nu1;
  ComponentMeasure nu2;
};

// ---------------------------------------------------------------------------
// Sampling

struct MonteCarloOptions {
  int batches = 50;
  double z = 2.5758293035489004;  // two-sided 99%
  unsigned threads = 0;           // 0: hardware concurrency
};

namespace detail {

/// Runs f(b) for b in [0, count) on worker threads.
template <class F>
void parallel_batches(int count, unsigned threads, F&& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(1, count)));
  if (threads <= 1) {
    for (int b = 0; b < count; ++b) f(b);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int b; (b = next.fetch_add(1)) < count;) {
        try {
          f(b);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// n samples of (x, y) ~ nu1 x nu2 split into batches; batch b is drawn from
/// stream b of the seed, so the set does not depend on the thread count.
class SampleSet {
 public:
  SampleSet(const ProductMeasureModel& model, std::size_t n, std::uint64_t seed, const MonteCarloOptions& opt = {})
      : d_(model.space.d()), n_(n), seed_(seed) {
    if (n == 0) throw InputError("samples: n must be positive");
    batches_ = static_cast<int>(std::min<std::size_t>(std::max(1, opt.batches), n));
    xs_.resize(n * d_);
    ys_.resize(n * d_);
    detail::parallel_batches(batches_, opt.threads, [&](int b) {
      Rng rng(seed, static_cast<std::uint64_t>(b));
      for (std::size_t i = begin(b); i < end(b); ++i) {
        model.nu1.sample(rng, &xs_[i * d_], d_);
        model.nu2.sample(rng, &ys_[i * d_], d_);
      }
    });
  }

  int d() const { return d_; }
  std::size_t size() const { return n_; }
  int batches() const { return batches_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t begin(int b) const { return n_ * b / batches_; }
  std::size_t end(int b) const { return n_ * (b + 1) / batches_; }
  std::span<const double> x(std::size_t i) const { return {&xs_[i * d_], static_cast<std::size_t>(d_)}; }
  std::span<const double> y(std::size_t i) const { return {&ys_[i * d_], static_cast<std::size_t>(d_)}; }

 private:
  int d_;
  std::size_t n_;
  std::uint64_t seed_;
  int batches_ = 1;
  std::vector<double> xs_, ys_;
};

namespace detail {

inline double real_norm_sq(const SpaceModel& s, std::span<const double> x, double p) {
  double t = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) t += std::pow(s.lambda(static_cast<int>(j)), 2 * p) * x[j] * x[j];
  return t;
}

/// log of u1(|x|^2_{-p1})^{1/2} u2(|y|^2_{-p2})^{1/2}.
inline double log_weight(const SpaceModel& s, const GrowthFunction& u1, const GrowthFunction& u2, double p1,
                         double p2, std::span<const double> x, std::span<const double> y) {
  return 0.5 * (u1(real_norm_sq(s, x, -p1)) + u2(real_norm_sq(s, y, -p2)));
}

struct BatchStats {
  double mean = 0.0;
  double half_width = 0.0;
};

inline BatchStats batch_stats(const std::vector<double>& batch_means, const std::vector<double>& weights, double z) {
  double total = 0.0, wsum = 0.0;
  for (std::size_t b = 0; b < batch_means.size(); ++b) {
    total += weights[b] * batch_means[b];
    wsum += weights[b];
  }
  BatchStats s;
  s.mean = total / wsum;
  const std::size_t B = batch_means.size();
  if (B < 2 || !std::isfinite(s.mean)) {
    s.half_width = B < 2 ? kInf : kNaN;
    return s;
  }
  double v = 0.0;
  for (double m : batch_means) v += (m - s.mean) * (m - s.mean);
  v /= static_cast<double>(B - 1);
  s.half_width = z * std::sqrt(v / static_cast<double>(B));
  return s;
}

}  // namespace detail

/// Fast evaluation of a chaos vector at real points through its monomials.
class RealPointEvaluator {
 public:
  explicit RealPointEvaluator(const ChaosVector& v) : d_(v.space().d()) {
    for (const auto& [key, c] : to_monomials(v)) {
      if (c == 0.0) continue;
      Term t{c, {}, {}};
      for (int j : key.a) t.x.push_back(j);
      for (int j : key.b) t.y.push_back(j);
      terms_.push_back(std::move(t));
    }
  }
  std::complex<double> operator()(std::span<const double> x, std::span<const double> y) const {
    std::complex<double> s = 0.0;
    for (const auto& t : terms_) {
      double m = 1.0;
      for (int j : t.x) m *= x[j];
      for (int j : t.y) m *= y[j];
      s += t.c * m;
    }
    return s;
  }

 private:
  struct Term {
    std::complex<double> c;
    std::vector<int> x, y;
  };
  int d_;
  std::vector<Term> terms_;
};

// ---------------------------------------------------------------------------
// Integrability

enum class Convergence { converged, suspected_divergent };

inline std::string to_string(Convergence c) {
  return c == Convergence::converged ? "converged" : "suspected-divergent";
}

struct IntegrabilityEstimate {
  double estimate = kNaN;
  double ci_low = kNaN;
  double ci_high = kNaN;
  double half_width = kNaN;
  double level = 0.99;
  Convergence verdict = Convergence::converged;
  bool doubling_flag = false;
  bool tail_flag = false;
  std::vector<std::size_t> checkpoints;
  std::vector<double> running_means;
  double tail_index = kInf;  // Hill estimate on log values
  std::size_t tail_count = 0;
  std::size_t n = 0;
  int batches = 0;
  std::uint64_t seed = 0;
  bool converged() const { return verdict == Convergence::converged; }
};

struct DivergenceOptions {
  std::size_t min_checkpoint = 1000;
  double growth_factor = 1.5;
  int consecutive = 2;
  double tail_threshold = 1.0;
};

namespace detail {

/// Mean of exp(logs[begin, end)) computed in the log domain.
inline double mean_exp(const std::vector<double>& logs, std::size_t begin, std::size_t end) {
  double m = -kInf;
  for (std::size_t i = begin; i < end; ++i) m = std::max(m, logs[i]);
  if (m == -kInf) return 0.0;
  if (m == kInf) return kInf;
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += std::exp(logs[i] - m);
  const double lv = m + std::log(s / static_cast<double>(end - begin));
  return lv > 709.0 ? kInf : std::exp(lv);
}

/// Hill estimator of the Pareto index of exp(logs) from the top k values.
inline double hill_index(std::vector<double> logs, std::size_t k) {
  if (k + 1 > logs.size()) return kNaN;
  std::nth_element(logs.begin(), logs.begin() + k, logs.end(), std::greater<>());
  const double threshold = logs[k];
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += logs[i] - threshold;
  return s > 0.0 ? static_cast<double>(k) / s : kInf;
}

}  // namespace detail

/// Monte-Carlo estimate of the integral of the weight from per-sample logs,
/// with a batch-means interval and two heuristic divergence flags: the
/// running mean grows by more than growth_factor across consecutive sample
/// doublings, or the Hill tail index of the integrand is below 1.
inline IntegrabilityEstimate integrability_from_logs(const std::vector<double>& logs, const SampleSet& samples,
                                                     const MonteCarloOptions& mc = {},
                                                     const DivergenceOptions& div = {}) {
  IntegrabilityEstimate out;
  out.n = samples.size();
  out.seed = samples.seed();
  out.batches = samples.batches();
  out.level = std::erf(mc.z / std::numbers::sqrt2);
  std::vector<double> means(samples.batches()), weights(samples.batches());
  for (int b = 0; b < samples.batches(); ++b) {
    means[b] = detail::mean_exp(logs, samples.begin(b), samples.end(b));
    weights[b] = static_cast<double>(samples.end(b) - samples.begin(b));
  }
  const auto st = detail::batch_stats(means, weights, mc.z);
  out.estimate = detail::mean_exp(logs, 0, logs.size());
  out.half_width = st.half_width;
  out.ci_low = out.estimate - st.half_width;
  out.ci_high = out.estimate + st.half_width;

  for (std::size_t c = out.n; c >= div.min_checkpoint; c /= 2) out.checkpoints.push_back(c);
  std::reverse(out.checkpoints.begin(), out.checkpoints.end());
  int run = 0;
  for (std::size_t i = 0; i < out.checkpoints.size(); ++i) {
    out.running_means.push_back(detail::mean_exp(logs, 0, out.checkpoints[i]));
    if (i == 0) continue;
    const double prev = out.running_means[i - 1], cur = out.running_means[i];
    run = cur > div.growth_factor * prev ? run + 1 : 0;
    if (run >= div.consecutive) out.doubling_flag = true;
  }
  out.tail_count = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(out.n))));
  out.tail_index = detail::hill_index(logs, out.tail_count);
  out.tail_flag = out.tail_index < div.tail_threshold;
  const bool finite = std::isfinite(out.estimate) && std::isfinite(out.half_width);
  out.verdict = out.doubling_flag || out.tail_flag || !finite ? Convergence::suspected_divergent
                                                               : Convergence::converged;
  return out;
}

inline std::vector<double> log_weights(const SampleSet& samples, const SpaceModel& space, const GrowthFunction& u1,
                                       const GrowthFunction& u2, double p1, double p2,
                                       const MonteCarloOptions& mc = {}) {
  std::vector<double> logs(samples.size());
  detail::parallel_batches(samples.batches(), mc.threads, [&](int b) {
    for (std::size_t i = samples.begin(b); i < samples.end(b); ++i)
      logs[i] = detail::log_weight(space, u1, u2, p1, p2, samples.x(i), samples.y(i));
  });
  return logs;
}

/// Integral of u1(|x|^2_{-p1})^{1/2} u2(|y|^2_{-p2})^{1/2} under nu1 x nu2.
inline IntegrabilityEstimate integrability_estimate(const ProductMeasureModel& model, const GrowthFunction& u1,
                                                    const GrowthFunction& u2, double p1, double p2, std::size_t n,
                                                    std::uint64_t seed, const MonteCarloOptions& mc = {},
                                                    const DivergenceOptions& div = {}) {
  if (n < 1000) throw PreconditionError("integrability_estimate: needs n >= 1000 samples");
  const SampleSet samples(model, n, seed, mc);
  return integrability_from_logs(log_weights(samples, model.space, u1, u2, p1, p2, mc), samples, mc, div);
}

/// prod_j (1 - s_j^2 lambda_j^{-2p})^{-1/2} over both factors for diagonal
/// Gaussian variances and u1 = u2 = exp; +inf past the pole.
inline double integrability_exact_gaussian(const std::vector<double>& var1, const std::vector<double>& var2,
                                           const GrowthFunction& u1, const GrowthFunction& u2, double p1, double p2,
                                           const SpaceModel& space) {
  if (u1.name != "exp" || u2.name != "exp")
    throw PreconditionError("integrability_exact_gaussian: closed form only for u = exp");
  double log_v = 0.0;
  auto factor = [&](const std::vector<double>& var, double p) {
    if (var.size() != 1 && static_cast<int>(var.size()) != space.d())
      throw InputError("integrability_exact_gaussian: variance list does not match the dimension");
    for (int j = 0; j < space.d(); ++j) {
      const double a = (var.size() == 1 ? var[0] : var[j]) * std::pow(space.lambda(j), -2 * p);
      if (a >= 1.0) return false;
      log_v += -0.5 * std::log1p(-a);
    }
    return true;
  };
  if (!factor(var1, p1) || !factor(var2, p2)) return kInf;
  return std::exp(log_v);
}

// ---------------------------------------------------------------------------
// Induced functional

struct FunctionalEstimate {
  std::complex<double> value;
  double half_width_re = 0.0;
  double half_width_im = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

template <class F>
FunctionalEstimate induced_functional(const SampleSet& samples, F&& phi, const MonteCarloOptions& mc = {}) {
  const int B = samples.batches();
  std::vector<double> re(B), im(B), w(B);
  detail::parallel_batches(B, mc.threads, [&](int b) {
    std::complex<double> s = 0.0;
    for (std::size_t i = samples.begin(b); i < samples.end(b); ++i) s += phi(samples.x(i), samples.y(i));
    const double cnt = static_cast<double>(samples.end(b) - samples.begin(b));
    re[b] = s.real() / cnt;
    im[b] = s.imag() / cnt;
    w[b] = cnt;
  });
  const auto a = detail::batch_stats(re, w, mc.z);
  const auto c = detail::batch_stats(im, w, mc.z);
  return {{a.mean, c.mean}, a.half_width, c.half_width, samples.size(), samples.seed()};
}

/// Monte-Carlo estimate of the double integral of phi at real points.
inline FunctionalEstimate induced_functional(const ProductMeasureModel& model, const ChaosVector& phi, std::size_t n,
                                             std::uint64_t seed, const MonteCarloOptions& mc = {}) {
  if (!(phi.space() == model.space)) throw InputError("induced_functional: space mismatch");
  const SampleSet samples(model, n, seed, mc);
  return induced_functional(samples, RealPointEvaluator(phi), mc);
}

// ---------------------------------------------------------------------------
// Boundedness

struct BoundednessOptions {
  int family = 50;
  int max_degree = 3;
  std::size_t samples = 100000;
  MonteCarloOptions mc;
  SupNormOptions sup;
  double growth_flag = 1.5;
};

struct BoundednessReport {
  IntegrabilityEstimate integral;
  double K_hat = 0.0;
  int witness = -1;
  std::vector<double> K_by_degree;  // index = total degree
  bool within_bound = false;        // K_hat <= estimate + half width, to rounding
  bool precondition_met = false;    // integral converged
  bool unbounded_suspected = false;
  std::uint64_t seed = 0;
};

/// Ratio |<<Phi, phi>>| / |||phi|||_{p1,p2} over random chaos vectors, all
/// integrals taken on one sample set. The sup norm used is the larger of
/// the sup_norm search and the maximum over the samples themselves, so the
/// ratio is bounded by the sample mean of the weight.
inline BoundednessReport boundedness_probe(const ProductMeasureModel& model, const GrowthFunction& u1,
                                           const GrowthFunction& u2, double p1, double p2, std::uint64_t seed,
                                           const BoundednessOptions& opt = {}) {
  if (opt.family < 1 || opt.max_degree < 0) throw InputError("boundedness_probe: empty family");
  BoundednessReport rep;
  rep.seed = seed;
  const SampleSet samples(model, std::max<std::size_t>(opt.samples, 1000), seed, opt.mc);
  const auto logs = log_weights(samples, model.space, u1, u2, p1, p2, opt.mc);
  rep.integral = integrability_from_logs(logs, samples, opt.mc);
  rep.precondition_met = rep.integral.converged();
  rep.K_by_degree.assign(opt.max_degree + 1, 0.0);

  Rng rng(seed, 0x5eedULL);
  for (int k = 0; k < opt.family; ++k) {
    const int degree = opt.family == 1 ? opt.max_degree : k * (opt.max_degree + 1) / opt.family;
    const ChaosVector phi = degree == 0 ? ChaosVector::constant(model.space, rng.complex_normal())
                                        : random_chaos(model.space, degree, rng);
    const RealPointEvaluator f(phi);
    const auto value = induced_functional(samples, f, opt.mc);
    SupNormOptions so = opt.sup;
    so.seed = stream_seed(seed, static_cast<std::uint64_t>(k) + 1);
    double log_sup = sup_norm(phi, u1, u2, p1, p2, so).log_value;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double a = std::abs(f(samples.x(i), samples.y(i)));
      if (a > 0.0) log_sup = std::max(log_sup, std::log(a) - logs[i]);
    }
    const double ratio = std::abs(value.value) == 0.0 ? 0.0 : std::exp(std::log(std::abs(value.value)) - log_sup);
    rep.K_by_degree[degree] = std::max(rep.K_by_degree[degree], ratio);
    if (ratio > rep.K_hat) {
      rep.K_hat = ratio;
      rep.witness = k;
    }
  }
  rep.within_bound = rep.K_hat <= (rep.integral.estimate + rep.integral.half_width) * (1 + 1e-12);
  bool rising = opt.max_degree >= 2;
  for (int n = 1; n <= opt.max_degree; ++n)
    if (!(rep.K_by_degree[n] > opt.growth_flag * rep.K_by_degree[n - 1])) rising = false;
  rep.unbounded_suspected = !rep.precondition_met || rising;
  return rep;
}

// ---------------------------------------------------------------------------
// The omega test function

struct OmegaValue {
  double log_abs = -kInf;
  double arg = 0.0;
};

struct OmegaBoundReport {
  std::size_t points = 0;
  std::size_t violations = 0;
  double max_log_excess = -kInf;  // max of log|omega| - log bound
  cvec worst_x, worst_y;
  bool holds() const { return violations == 0; }
};

/// omega(x, y) = L_{u1}(2^{-4} <x,x>_{-q1}) L_{u2}(2^{-4} <y,y>_{-q2}) with the
/// complex bilinear form <x,x>_{-q} = sum lambda_j^{-2q} x_j^2.
class OmegaFunction {
 public:
  OmegaFunction(GrowthFunction u1, GrowthFunction u2, double q1, double q2, SpaceModel space,
                int max_terms = kVerifierTermBudget)
      : L1_(std::move(u1), max_terms), L2_(std::move(u2), max_terms), q1_(q1), q2_(q2), space_(std::move(space)) {}

  static std::complex<double> bilinear(const SpaceModel& s, const cvec& x, double q) {
    std::complex<double> t = 0.0;
    for (int j = 0; j < s.d(); ++j) t += std::pow(s.lambda(j), -2 * q) * x[j] * x[j];
    return t;
  }

  OmegaValue operator()(const cvec& x, const cvec& y) const {
    space_.check_dim(x.size());
    space_.check_dim(y.size());
    const auto a = L1_.evaluate_complex(bilinear(space_, x, q1_) / 16.0);
    const auto b = L2_.evaluate_complex(bilinear(space_, y, q2_) / 16.0);
    return {a.first + b.first, std::remainder(a.second + b.second, 2 * std::numbers::pi)};
  }

  /// log of (2e / log 2) u1(|x|^2_{-q1})^{1/2} u2(|y|^2_{-q2})^{1/2}.
  double log_bound(const cvec& x, const cvec& y) const {
    return std::log(2 * std::numbers::e / std::numbers::ln2) +
           0.5 * (L1_.growth()(space_.norm_sq(x, -q1_)) + L2_.growth()(space_.norm_sq(y, -q2_)));
  }

  /// Bound check at `points` random complex points with radii log-uniform
  /// in [r_min, r_max].
  OmegaBoundReport check_bound(std::size_t points, std::uint64_t seed, double r_min = 1e-2,
                               double r_max = 100.0) const {
    OmegaBoundReport rep;
    Rng rng(seed);
    const int d = space_.d();
    auto draw = [&] {
      cvec v(d);
      for (auto& c : v) c = rng.complex_normal();
      const double n = std::sqrt(space_.norm_sq(v, 0.0));
      const double r = std::exp(std::log(r_min) + (std::log(r_max) - std::log(r_min)) * rng.uniform());
      for (auto& c : v) c *= r / n;
      return v;
    };
    for (std::size_t k = 0; k < points; ++k) {
      const cvec x = draw(), y = draw();
      const double excess = (*this)(x, y).log_abs - log_bound(x, y);
      ++rep.points;
      if (excess > 1e-12) ++rep.violations;
      if (excess > rep.max_log_excess) {
        rep.max_log_excess = excess;
        rep.worst_x = x;
        rep.worst_y = y;
      }
    }
    return rep;
  }

  const SpaceModel& space() const { return space_; }

 private:
  LFunction L1_, L2_;
  double q1_, q2_;
  SpaceModel space_;
};

inline OmegaFunction omega_test_function(const GrowthFunction& u1, const GrowthFunction& u2, double q1, double q2,
                                         const SpaceModel& space) {
  return OmegaFunction(u1, u2, q1, q2, space);
}

// ---------------------------------------------------------------------------
// Positivity

struct SignedPointMasses {
  struct Atom {
    double weight;
    std::vector<double> x, y;
  };
  SpaceModel space;
  std::vector<Atom> atoms;
};

/// A nonnegative test function: |psi|^2 for a polynomial psi, or the
/// exponential e^{sqrt2 <x,xi> + sqrt2 <y,eta>} with real xi, eta.
struct NonnegativeMember {
  std::string label;
  std::optional<ChaosVector> square;
  std::vector<double> xi, eta;
};

struct PositivityOptions {
  int squares = 60;
  int degree = 2;
  int exponentials = 20;
  double exp_scale = 0.5;
  std::size_t samples = 20000;
  double tol = 1e-12;
  MonteCarloOptions mc;
};

struct PositivityReport {
  double min_value = kInf;
  double min_half_width = 0.0;
  int witness = -1;
  std::string witness_label;
  std::optional<ChaosVector> witness_square;
  std::vector<double> witness_xi, witness_eta;
  int family_size = 0;
  bool violated = false;
  std::string verdict() const { return violated ? "not positive" : "no violation found (sound, incomplete)"; }
};

inline std::vector<NonnegativeMember> nonnegative_family(const SpaceModel& space, std::uint64_t seed,
                                                         const PositivityOptions& opt) {
  std::vector<NonnegativeMember> fam;
  fam.push_back({"one", ChaosVector::constant(space), {}, {}});
  Rng rng(seed, 0xf00dULL);
  for (int k = 0; k < opt.squares; ++k) {
    const int deg = 1 + k % std::max(1, opt.degree);
    fam.push_back({"square#" + std::to_string(k), modulus_squared(random_chaos(space, deg, rng)), {}, {}});
  }
  for (int k = 0; k < opt.exponentials; ++k) {
    NonnegativeMember m{"exponential#" + std::to_string(k), std::nullopt, std::vector<double>(space.d()),
                        std::vector<double>(space.d())};
    for (auto& v : m.xi) v = opt.exp_scale * rng.normal();
    for (auto& v : m.eta) v = opt.exp_scale * rng.normal();
    fam.push_back(std::move(m));
  }
  return fam;
}

namespace detail {

inline double real_dot(std::span<const double> a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) s += a[j] * b[j];
  return s;
}

inline cvec to_cvec(const std::vector<double>& v) { return cvec(v.begin(), v.end()); }

template <class Pair>
PositivityReport run_positivity(const std::vector<NonnegativeMember>& fam, double tol, Pair&& pair) {
  PositivityReport rep;
  rep.family_size = static_cast<int>(fam.size());
  for (std::size_t k = 0; k < fam.size(); ++k) {
    const auto [value, half] = pair(fam[k]);
    if (value < rep.min_value) {
      rep.min_value = value;
      rep.min_half_width = half;
      rep.witness = static_cast<int>(k);
    }
  }
  const auto& w = fam[rep.witness];
  rep.violated = rep.min_value + rep.min_half_width < -tol;
  rep.witness_label = w.label;
  rep.witness_square = w.square;
  rep.witness_xi = w.xi;
  rep.witness_eta = w.eta;
  return rep;
}

}  // namespace detail

/// Integrals of the nonnegative family under nu1 x nu2.
inline PositivityReport positivity_probe(const ProductMeasureModel& model, std::uint64_t seed,
                                         const PositivityOptions& opt = {}) {
  const auto fam = nonnegative_family(model.space, seed, opt);
  const SampleSet samples(model, std::max<std::size_t>(opt.samples, 1), seed, opt.mc);
  return detail::run_positivity(fam, opt.tol, [&](const NonnegativeMember& m) {
    FunctionalEstimate e;
    if (m.square) {
      e = induced_functional(samples, RealPointEvaluator(*m.square), opt.mc);
    } else {
      e = induced_functional(
          samples,
          [&](std::span<const double> x, std::span<const double> y) {
            return std::complex<double>(
                std::exp(std::numbers::sqrt2 * (detail::real_dot(x, m.xi) + detail::real_dot(y, m.eta))));
          },
          opt.mc);
    }
    return std::pair{e.value.real(), e.half_width_re};
  });
}

/// Exact pairings of a finitely supported generalized function with the
/// family; the exponential pairs through its S-transform.
inline PositivityReport positivity_probe(const ChaosVector& Phi, std::uint64_t seed,
                                         const PositivityOptions& opt = {}) {
  const auto fam = nonnegative_family(Phi.space(), seed, opt);
  return detail::run_positivity(fam, opt.tol, [&](const NonnegativeMember& m) {
    const std::complex<double> v = m.square ? pairing(Phi, *m.square)
                                            : s_transform(Phi, detail::to_cvec(m.xi), detail::to_cvec(m.eta));
    return std::pair{v.real(), 0.0};
  });
}

inline PositivityReport positivity_probe(const SignedPointMasses& Phi, std::uint64_t seed,
                                         const PositivityOptions& opt = {}) {
  for (const auto& a : Phi.atoms) {
    Phi.space.check_dim(a.x.size());
    Phi.space.check_dim(a.y.size());
  }
  const auto fam = nonnegative_family(Phi.space, seed, opt);
  return detail::run_positivity(fam, opt.tol, [&](const NonnegativeMember& m) {
    double s = 0.0;
    std::optional<RealPointEvaluator> f;
    if (m.square) f.emplace(*m.square);
    for (const auto& a : Phi.atoms) {
      const double v = f ? (*f)(a.x, a.y).real()
                         : std::exp(std::numbers::sqrt2 * (detail::real_dot(a.x, m.xi) + detail::real_dot(a.y, m.eta)));
      s += a.weight * v;
    }
    return std::pair{s, 0.0};
  });
}

// ---------------------------------------------------------------------------
// Pseudo-positivity

/// Monomials x^alpha on R^d with |alpha| <= degree, alpha stored as a sorted
/// multi-index.
class MonomialBasis {
 public:
  MonomialBasis(int d, int degree) : d_(d), degree_(degree) {
    if (d < 1 || degree < 0) throw InputError("monomial basis: need d >= 1 and degree >= 0");
    for (int k = 0; k <= degree; ++k)
      for_each_multiset(d, k, [&](const MultiIndex& a) {
        index_.emplace(a, static_cast<int>(elems_.size()));
        elems_.push_back(a);
      });
  }
  int d() const { return d_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(elems_.size()); }
  const MultiIndex& operator[](int i) const { return elems_[i]; }
  int index_of(const MultiIndex& a) const {
    auto it = index_.find(a);
    return it == index_.end() ? -1 : it->second;
  }
  std::vector<int> powers(int i) const {
    std::vector<int> p(d_, 0);
    for (int j : elems_[i]) ++p[j];
    return p;
  }

 private:
  int d_, degree_;
  std::vector<MultiIndex> elems_;
  std::map<MultiIndex, int> index_;
};

/// Finite-rank operator on monomial coefficients: <<Xi phi1, phi2>> = c2^T M c1.
struct PseudoOperator {
  MonomialBasis basis1, basis2;
  Eigen::MatrixXd matrix;  // rows basis2, columns basis1

  double pair(const Eigen::VectorXd& c1, const Eigen::VectorXd& c2) const {
    if (c1.size() != basis1.size() || c2.size() != basis2.size())
      throw InputError("pseudo operator: coefficient vector has the wrong length");
    return c2.dot(matrix * c1);
  }
};

/// Xi = m2 m1^T with m_i the monomial moments of nu_i, so that the pairing is
/// the double integral of phi1(x) phi2(y).
inline PseudoOperator measure_induced_operator(const ProductMeasureModel& model, int degree) {
  PseudoOperator op{MonomialBasis(model.space.d(), degree), MonomialBasis(model.space.d(), degree), {}};
  Eigen::VectorXd m1(op.basis1.size()), m2(op.basis2.size());
  for (int i = 0; i < op.basis1.size(); ++i) m1[i] = model.nu1.moment(op.basis1.powers(i));
  for (int i = 0; i < op.basis2.size(); ++i) m2[i] = model.nu2.moment(op.basis2.powers(i));
  if (!m1.allFinite() || !m2.allFinite())
    throw PreconditionError("measure_induced_operator: a moment up to degree " + std::to_string(degree) +
                            " does not exist");
  op.matrix = m2 * m1.transpose();
  return op;
}

struct PseudoPositivityOptions {
  int pairs = 100;
  double tol = 1e-12;
};

struct PseudoPositivityReport {
  double min_value = kInf;
  Eigen::VectorXd witness1, witness2;  // coefficients of the nonnegative pair
  int pairs = 0;
  bool violated = false;
  std::optional<IntegrabilityEstimate> cross_check;
  bool consistent = true;  // false if a converged integral meets a violation
  std::string verdict() const { return violated ? "not pseudo-positive" : "no violation found (sound, incomplete)"; }
};

/// Coefficients of |psi|^2 for psi with degree <= basis.degree()/2 and
/// coefficients CN(0,1) sqrt(l_u(k)) at degree k.
inline Eigen::VectorXd random_square(const MonomialBasis& basis, const GrowthFunction& u, Rng& rng) {
  const MonomialBasis half(basis.d(), basis.degree() / 2);
  const auto w = legendre_at_degrees(u, half.degree());
  std::vector<std::complex<double>> a(half.size());
  for (int i = 0; i < half.size(); ++i) a[i] = std::exp(0.5 * w[half[i].size()]) * rng.complex_normal();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(basis.size());
  for (int i = 0; i < half.size(); ++i)
    for (int j = 0; j < half.size(); ++j) {
      MultiIndex k;
      std::merge(half[i].begin(), half[i].end(), half[j].begin(), half[j].end(), std::back_inserter(k));
      c[basis.index_of(k)] += (a[i] * std::conj(a[j])).real();
    }
  return c;
}

/// Searches pairs of nonnegative polynomials (the constant 1 first, then
/// random squares) for a negative pairing.
inline PseudoPositivityReport pseudo_positivity_probe(const PseudoOperator& Xi, const GrowthFunction& u1,
                                                      const GrowthFunction& u2, std::uint64_t seed,
                                                      const PseudoPositivityOptions& opt = {}) {
  if (Xi.matrix.rows() != Xi.basis2.size() || Xi.matrix.cols() != Xi.basis1.size())
    throw InputError("pseudo_positivity_probe: matrix shape does not match the bases");
  PseudoPositivityReport rep;
  Rng rng(seed, 0xabcdULL);
  auto one = [](const MonomialBasis& b) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(b.size());
    c[0] = 1.0;
    return c;
  };
  for (int k = 0; k < std::max(1, opt.pairs); ++k) {
    const Eigen::VectorXd c1 = k == 0 ? one(Xi.basis1) : random_square(Xi.basis1, u1, rng);
    const Eigen::VectorXd c2 = k == 0 ? one(Xi.basis2) : random_square(Xi.basis2, u2, rng);
    const double v = Xi.pair(c1, c2);
    ++rep.pairs;
    if (v < rep.min_value) {
      rep.min_value = v;
      rep.witness1 = c1;
      rep.witness2 = c2;
    }
  }
  const double scale = std::max(1.0, Xi.matrix.cwiseAbs().maxCoeff());
  rep.violated = rep.min_value < -opt.tol * scale;
  return rep;
}

/// Probe of the operator induced by a product measure, cross-checked
/// against the integrability estimate at (p1, p2).
inline PseudoPositivityReport pseudo_positivity_probe(const ProductMeasureModel& model, int degree,
                                                      const GrowthFunction& u1, const GrowthFunction& u2, double p1,
                                                      double p2, std::size_t n, std::uint64_t seed,
                                                      const PseudoPositivityOptions& opt = {},
                                                      const MonteCarloOptions& mc = {}) {
  auto rep = pseudo_positivity_probe(measure_induced_operator(model, degree), u1, u2, seed, opt);
  rep.cross_check = integrability_estimate(model, u1, u2, p1, p2, n, seed, mc);
  rep.consistent = !(rep.cross_check->converged() && rep.violated);
  return rep;
}

}  // namespace cks
