#pragma once

// JSON encoding of chaos vectors and polynomial fixtures. Needs the bundled
// nlohmann json.hpp on the include path.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <json.hpp>

#include "cks/analytic.hpp"
#include "cks/chaos.hpp"
#include "cks/errors.hpp"
#include "cks/kernel.hpp"
#include "cks/space.hpp"

namespace cks {

using json = nlohmann::ordered_json;

/// Finite doubles as numbers, the rest as the strings "inf", "-inf", "nan".
inline json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double number_from_json(const json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return kNaN;
  }
  throw InputError("json: " + what + " must be a number");
}

namespace detail {

inline const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw InputError("json: " + where + " lacks field '" + key + "'");
  return j.at(key);
}

inline MultiIndex index_list(const json& j, int d, const std::string& where) {
  if (!j.is_array()) throw InputError("json: " + where + " must be an array of indices");
  MultiIndex out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw InputError("json: " + where + " must contain integers");
    const int i = v.get<int>();
    if (i < 0 || i >= d) throw InputError("json: index " + std::to_string(i) + " out of range in " + where);
    out.push_back(i);
  }
  return out;
}

inline std::complex<double> complex_of(const json& j, const std::string& where) {
  return {number_from_json(field(j, "re", where), where + ".re"),
          j.contains("im") ? number_from_json(j.at("im"), where + ".im") : 0.0};
}

inline SpaceModel space_of(const json& j, const std::string& where) {
  const int d = field(j, "d", where).get<int>();
  std::vector<double> lambda;
  if (j.contains("lambda")) {
    for (const auto& v : j.at("lambda")) lambda.push_back(number_from_json(v, where + ".lambda"));
  }
  if (lambda.size() == 1 && d > 1) lambda.assign(d, lambda[0]);
  if (static_cast<int>(lambda.size()) != d)
    throw InputError("json: " + where + " lambda has " + std::to_string(lambda.size()) + " entries for d = " +
                     std::to_string(d));
  return SpaceModel(lambda);
}

}  // namespace detail

inline json to_json(const SpaceModel& s) {
  return json{{"d", s.d()}, {"lambda", s.lambda()}};
}

/// {d, lambda[], kernels: [{l, m, entries: [{idx_l, idx_m, re, im}]}]}
inline json to_json(const ChaosVector& v) {
  json ks = json::array();
  for (const auto& [lm, k] : v.kernels()) {
    json entries = json::array();
    for (const auto& [key, c] : k.entries())
      entries.push_back({{"idx_l", key.a}, {"idx_m", key.b}, {"re", json_number(c.real())}, {"im", json_number(c.imag())}});
    ks.push_back({{"l", lm.first}, {"m", lm.second}, {"entries", std::move(entries)}});
  }
  return json{{"d", v.space().d()}, {"lambda", v.space().lambda()}, {"kernels", std::move(ks)}};
}

inline ChaosVector chaos_from_json(const json& j) {
  const SpaceModel space = detail::space_of(j, "chaos vector");
  std::vector<KernelTensor> ks;
  for (const auto& kj : detail::field(j, "kernels", "chaos vector")) {
    const int l = detail::field(kj, "l", "kernel").get<int>();
    const int m = detail::field(kj, "m", "kernel").get<int>();
    KernelTensor k(space.d(), l, m);
    for (const auto& e : detail::field(kj, "entries", "kernel")) {
      auto a = detail::index_list(detail::field(e, "idx_l", "entry"), space.d(), "idx_l");
      auto b = detail::index_list(detail::field(e, "idx_m", "entry"), space.d(), "idx_m");
      if (static_cast<int>(a.size()) != l || static_cast<int>(b.size()) != m)
        throw InputError("json: entry index lengths do not match bidegree (" + std::to_string(l) + ", " +
                         std::to_string(m) + ")");
      k.add(std::move(a), std::move(b), detail::complex_of(e, "entry"));
    }
    ks.push_back(std::move(k));
  }
  return ChaosVector(space, ks);
}

struct PolynomialFixture {
  SpaceModel space;
  std::vector<PolynomialTerm> terms;
};

/// {d, lambda[], terms: [{idx_l, idx_m, re, im}]}; lambda defaults to 2.
inline PolynomialFixture polynomial_from_json(const json& j) {
  json withspace = j;
  if (!j.contains("lambda")) withspace["lambda"] = json::array({2.0});
  PolynomialFixture out{detail::space_of(withspace, "polynomial"), {}};
  for (const auto& t : detail::field(j, "terms", "polynomial")) {
    out.terms.push_back({detail::index_list(detail::field(t, "idx_l", "term"), out.space.d(), "idx_l"),
                         detail::index_list(detail::field(t, "idx_m", "term"), out.space.d(), "idx_m"),
                         detail::complex_of(t, "term")});
  }
  return out;
}

inline json to_json(const PolynomialFixture& p) {
  json terms = json::array();
  for (const auto& t : p.terms)
    terms.push_back({{"idx_l", t.idx_l}, {"idx_m", t.idx_m}, {"re", json_number(t.coeff.real())},
                     {"im", json_number(t.coeff.imag())}});
  return json{{"d", p.space.d()}, {"lambda", p.space.lambda()}, {"terms", std::move(terms)}};
}

}  // namespace cks
