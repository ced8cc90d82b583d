#pragma once

// Sparse symmetric kernels of bidegree (l, m). An entry is keyed by a sorted
// l-tuple and a sorted m-tuple of basis indices; its coefficient is the
// tensor component at every permutation of those tuples, so a key stands
// for multiplicity(a) * multiplicity(b) components.

#include <algorithm>
#include <complex>
#include <compare>
#include <map>
#include <string>
#include <vector>

#include "cks/errors.hpp"
#include "cks/numeric.hpp"
#include "cks/space.hpp"

namespace cks {

using MultiIndex = std::vector<int>;

struct KernelKey {
  MultiIndex a;  // first block, degree l
  MultiIndex b;  // second block, degree m
  auto operator<=>(const KernelKey&) const = default;
};

namespace detail {

inline double sorted_multiplicity(const MultiIndex& sorted) {
  static constexpr double fact[] = {1, 1, 2, 6, 24, 120, 720, 5040, 40320, 362880, 3628800, 39916800, 479001600};
  const std::size_t k = sorted.size();
  const bool small = k < std::size(fact);
  double lg = small ? fact[k] : log_factorial(static_cast<int>(k));
  for (std::size_t i = 0; i < k;) {
    std::size_t j = i;
    while (j < k && sorted[j] == sorted[i]) ++j;
    if (small) lg /= fact[j - i];
    else lg -= log_factorial(static_cast<int>(j - i));
    i = j;
  }
  return small ? lg : std::round(std::exp(lg));
}

}  // namespace detail

/// Number of distinct permutations of a tuple: k! / prod k_j!.
inline double multiplicity(const MultiIndex& idx) {
  if (std::is_sorted(idx.begin(), idx.end())) return detail::sorted_multiplicity(idx);
  MultiIndex sorted(idx);
  std::sort(sorted.begin(), sorted.end());
  return detail::sorted_multiplicity(sorted);
}

/// Calls f(sorted tuple) for every multiset of size k drawn from 0..d-1.
template <class F>
void for_each_multiset(int d, int k, F&& f) {
  MultiIndex idx(k, 0);
  if (k == 0) {
    f(idx);
    return;
  }
  for (;;) {
    f(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == d - 1) --i;
    if (i < 0) return;
    const int v = idx[i] + 1;
    for (int j = i; j < k; ++j) idx[j] = v;
  }
}

inline std::size_t multiset_count(int d, int k) {
  std::size_t c = 1;
  for (int i = 1; i <= k; ++i) c = c * static_cast<std::size_t>(d + i - 1) / static_cast<std::size_t>(i);
  return c;
}

class KernelTensor {
 public:
  using value_type = std::complex<double>;

  KernelTensor(int d, int l, int m) : d_(d), l_(l), m_(m) {
    if (d < 1 || l < 0 || m < 0) throw InputError("kernel: need d >= 1 and l, m >= 0");
  }

  int d() const { return d_; }
  int l() const { return l_; }
  int m() const { return m_; }
  const std::map<KernelKey, value_type>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  /// Sets the component at (a, b) and all its permutations.
  void set(MultiIndex a, MultiIndex b, value_type v) { entries_[make_key(std::move(a), std::move(b))] = v; }
  void add(MultiIndex a, MultiIndex b, value_type v) { entries_[make_key(std::move(a), std::move(b))] += v; }
  value_type get(MultiIndex a, MultiIndex b) const {
    auto it = entries_.find(make_key(std::move(a), std::move(b)));
    return it == entries_.end() ? value_type{} : it->second;
  }

  /// |(A^{p1})^{(x)l} (x) (A^{p2})^{(x)m} k|_0^2.
  double norm_sq(const SpaceModel& s, double p1, double p2) const {
    double total = 0.0;
    for (const auto& [k, v] : entries_) {
      double w = multiplicity(k.a) * multiplicity(k.b);
      for (int i : k.a) w *= std::pow(s.lambda(i), 2.0 * p1);
      for (int j : k.b) w *= std::pow(s.lambda(j), 2.0 * p2);
      total += w * std::norm(v);
    }
    return total;
  }

  /// <k, x^{(x)l} (x) y^{(x)m}>, bilinear (no conjugation).
  value_type contract(const cvec& x, const cvec& y) const {
    value_type total{};
    for (const auto& [k, v] : entries_) {
      value_type t = v * (multiplicity(k.a) * multiplicity(k.b));
      for (int i : k.a) t *= x[i];
      for (int j : k.b) t *= y[j];
      total += t;
    }
    return total;
  }

  /// Full bilinear contraction <this, other> over all components.
  value_type bilinear(const KernelTensor& other) const {
    if (other.l_ != l_ || other.m_ != m_ || other.d_ != d_) throw InputError("kernel: bidegree mismatch");
    value_type total{};
    const auto& small = entries_.size() <= other.entries_.size() ? entries_ : other.entries_;
    const auto& big = &small == &entries_ ? other.entries_ : entries_;
    for (const auto& [k, v] : small) {
      auto it = big.find(k);
      if (it != big.end()) total += v * it->second * (multiplicity(k.a) * multiplicity(k.b));
    }
    return total;
  }

  KernelTensor scaled(value_type c) const {
    KernelTensor out = *this;
    for (auto& [k, v] : out.entries_) v *= c;
    return out;
  }

  KernelTensor conj() const {
    KernelTensor out = *this;
    for (auto& [k, v] : out.entries_) v = std::conj(v);
    return out;
  }

  /// Exchanges the two blocks: bidegree (l, m) becomes (m, l).
  KernelTensor swap_blocks() const {
    KernelTensor out(d_, m_, l_);
    for (const auto& [k, v] : entries_) out.entries_[KernelKey{k.b, k.a}] = v;
    return out;
  }

  /// xi^{(x)l} (x) eta^{(x)m}.
  static KernelTensor product(const cvec& xi, int l, const cvec& eta, int m) {
    const int d = static_cast<int>(xi.size());
    if (eta.size() != xi.size()) throw InputError("kernel: xi and eta differ in length");
    KernelTensor out(d, l, m);
    for_each_multiset(d, l, [&](const MultiIndex& a) {
      value_type pa = 1.0;
      for (int i : a) pa *= xi[i];
      for_each_multiset(d, m, [&](const MultiIndex& b) {
        value_type pb = pa;
        for (int j : b) pb *= eta[j];
        out.entries_[KernelKey{a, b}] = pb;
      });
    });
    return out;
  }

 private:
  KernelKey make_key(MultiIndex a, MultiIndex b) const {
    if (static_cast<int>(a.size()) != l_ || static_cast<int>(b.size()) != m_)
      throw InputError("kernel: index tuple lengths must be (" + std::to_string(l_) + ", " + std::to_string(m_) + ")");
    for (const auto* t : {&a, &b})
      for (int i : *t)
        if (i < 0 || i >= d_) throw InputError("kernel: index " + std::to_string(i) + " out of range");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {std::move(a), std::move(b)};
  }

  int d_;
  int l_;
  int m_;
  std::map<KernelKey, value_type> entries_;
};

}  // namespace cks
