#pragma once

// Diagonal space scale: basis e_1..e_d with A e_j = lambda_j e_j.

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "cks/errors.hpp"

namespace cks {

using cvec = std::vector<std::complex<double>>;

class SpaceModel {
 public:
  SpaceModel() = default;
  explicit SpaceModel(std::vector<double> lambda) : lambda_(std::move(lambda)) {
    if (lambda_.empty()) throw InputError("space: need at least one eigenvalue");
    for (std::size_t j = 0; j < lambda_.size(); ++j) {
      if (!(lambda_[j] > 1.0) || !std::isfinite(lambda_[j]))
        throw InputError("space: eigenvalue " + std::to_string(j) + " must be finite and > 1");
      if (j > 0 && lambda_[j] < lambda_[j - 1]) throw InputError("space: eigenvalues must be nondecreasing");
    }
  }
  /// d copies of lambda.
  static SpaceModel uniform(int d, double lambda) { return SpaceModel(std::vector<double>(d < 1 ? 0 : d, lambda)); }

  int d() const { return static_cast<int>(lambda_.size()); }
  const std::vector<double>& lambda() const { return lambda_; }
  double lambda(int j) const { return lambda_[j]; }
  /// Operator norm of A^{-1}.
  double rho() const { return 1.0 / lambda_.front(); }

  /// Squared Hilbert-Schmidt norm of the embedding E_q -> E_p.
  double hs_norm(double q, double p) const {
    if (!(q > p)) throw PreconditionError("hs_norm: need q > p");
    double s = 0.0;
    for (double l : lambda_) s += std::pow(l, -2.0 * (q - p));
    return s;
  }

  /// |x|_p^2 = sum_j lambda_j^{2p} |x_j|^2; negative p gives the dual norms.
  double norm_sq(std::span<const std::complex<double>> x, double p) const {
    check_dim(x.size());
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += std::pow(lambda_[j], 2.0 * p) * std::norm(x[j]);
    return s;
  }

  void check_dim(std::size_t n) const {
    if (n != lambda_.size())
      throw InputError("vector of length " + std::to_string(n) + " does not match d=" + std::to_string(d()));
  }

  bool operator==(const SpaceModel&) const = default;

 private:
  std::vector<double> lambda_;
};

}  // namespace cks
