// cks: command-line front end for transforms, verification, S-transform
// characterisation and product-measure experiments.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cks/cks.hpp"
#include "cks/json_io.hpp"

namespace {

using namespace cks;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 2;
constexpr int kExitInput = 3;
constexpr int kExitNonConvergence = 4;

// ---------------------------------------------------------------------------
// Small parsers

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InputError(what + ": cannot parse '" + s + "' as a number");
  }
  if (used != s.size())
    throw InputError(what + ": unexpected character at column " + std::to_string(used + 1) + " of '" + s + "'");
  return v;
}

std::size_t parse_count(const std::string& s, const std::string& what) {
  const double v = parse_double(s, what);
  if (!(v >= 1) || v != std::floor(v) || v > 1e12) throw InputError(what + ": '" + s + "' is not a positive count");
  return static_cast<std::size_t>(v);
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::string t = s;
  if (!t.empty() && t.front() == '[') t.erase(0, 1);
  if (!t.empty() && t.back() == ']') t.pop_back();
  std::vector<double> out;
  for (const auto& part : split(t, ',')) out.push_back(parse_double(part, what));
  if (out.empty()) throw InputError(what + ": empty list");
  return out;
}

/// a:b:step, inclusive of b up to rounding.
std::vector<double> parse_range(const std::string& s, const std::string& what) {
  const auto parts = split(s, ':');
  if (parts.size() != 3) throw InputError(what + ": expected start:stop:step, got '" + s + "'");
  const double a = parse_double(parts[0], what), b = parse_double(parts[1], what),
               h = parse_double(parts[2], what);
  if (!(h > 0) || !(b >= a)) throw InputError(what + ": need step > 0 and stop >= start");
  std::vector<double> out;
  for (long k = 0;; ++k) {
    const double v = a + static_cast<double>(k) * h;
    if (v > b + 1e-9 * h) break;
    out.push_back(v);
    if (out.size() > 10'000'000) throw InputError(what + ": range too long");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

class Report {
 public:
  void row(json r) { rows_.push_back(std::move(r)); }
  void check(const std::string& name, bool ok) {
    (ok ? passed_ : failed_).push_back(name);
  }
  bool all_passed() const { return failed_.empty(); }

  void write(std::ostream& os, const std::string& format, const std::string& command, const json& config,
             int exit_code) const {
    json summary{{"record", "summary"},
                 {"command", command},
                 {"checks_passed", passed_},
                 {"checks_failed", failed_},
                 {"exit_code", exit_code},
                 {"config", config}};
    if (format == "csv") {
      std::vector<std::string> keys;
      std::set<std::string> seen;
      for (const auto& r : rows_)
        for (const auto& [k, v] : r.items())
          if (seen.insert(k).second) keys.push_back(k);
      for (std::size_t i = 0; i < keys.size(); ++i) os << (i ? "," : "") << keys[i];
      os << '\n';
      for (const auto& r : rows_) {
        for (std::size_t i = 0; i < keys.size(); ++i) {
          if (i) os << ',';
          if (!r.contains(keys[i])) continue;
          const auto& v = r.at(keys[i]);
          if (v.is_string()) {
            os << csv_quote(v.get<std::string>());
          } else if (v.is_primitive()) {
            os << v.dump();
          } else {
            os << csv_quote(v.dump());
          }
        }
        os << '\n';
      }
      os << "# " << summary.dump() << '\n';
      return;
    }
    for (const auto& r : rows_) os << r.dump() << '\n';
    os << summary.dump() << '\n';
  }

 private:
  static std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  }
  std::vector<json> rows_;
  std::vector<std::string> passed_, failed_;
};

json verdict_json(const ConditionReport& r) {
  json measured = json::object();
  for (const auto& [k, v] : r.measured) measured[k] = json_number(v);
  json witnesses = json::array();
  for (double w : r.witnesses) witnesses.push_back(json_number(w));
  return json{{"record", "check"},
              {"check", r.condition},
              {"verdict", to_string(r.verdict)},
              {"margin", json_number(r.margin)},
              {"witnesses", witnesses},
              {"grid", r.grid.describe()},
              {"measured", measured}};
}

json cvec_json(const cvec& v) {
  json out = json::array();
  for (const auto& c : v) out.push_back(json::array({json_number(c.real()), json_number(c.imag())}));
  return out;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

SpaceModel space_from(int d, const std::string& lambda) {
  if (d < 1) throw InputError("--d must be >= 1");
  auto l = parse_list(lambda, "--lambda");
  if (l.size() == 1) l.assign(d, l[0]);
  if (static_cast<int>(l.size()) != d) throw InputError("--lambda needs 1 or d values");
  return SpaceModel(l);
}

// ---------------------------------------------------------------------------
// Commands

struct TransformArgs {
  std::string fn;
  bool legendre = false, dual = false, lfunc = false, weights = false;
  std::string t = "0:10:0.5", r = "0:100:1";
  int n = 20;
};

int run_transform(const TransformArgs& a, double tol, Report& rep) {
  const GrowthFunction u = parse_growth_spec(a.fn);
  if (!a.legendre && !a.dual && !a.lfunc && !a.weights)
    throw InputError("transform: choose at least one of --legendre, --dual, --lfunc, --weights");
  if (a.legendre) {
    for (double t : parse_range(a.t, "--t")) {
      const auto v = legendre(u, t);
      json row{{"record", "legendre"}, {"fn", u.spec()}, {"t", t}, {"log_value", json_number(v.log_value)},
               {"value", json_number(std::exp(v.log_value))},
               {"argmin", json_number(v.limit_at_zero ? 0.0 : std::exp(v.log_argument))}};
      if (u.closed_form_legendre) {
        const double c = u.closed_form_legendre(t);
        row["closed_form_log"] = json_number(c);
        row["scaled_error"] = json_number(scaled_error(v.log_value, c));
      }
      rep.row(std::move(row));
    }
  }
  if (a.dual) {
    for (double r : parse_range(a.r, "--r")) {
      const auto v = dual_legendre(u, r);
      json row{{"record", "dual"}, {"fn", u.spec()}, {"r", r}, {"log_value", json_number(v.log_value)},
               {"argmax", json_number(v.limit_at_zero ? 0.0 : std::exp(v.log_argument))}};
      if (u.closed_form_dual) {
        const double c = u.closed_form_dual(r);
        row["closed_form_log"] = json_number(c);
        row["scaled_error"] = json_number(scaled_error(v.log_value, c));
      }
      rep.row(std::move(row));
    }
  }
  if (a.lfunc) {
    const LFunction L(u, kVerifierTermBudget);
    for (double r : parse_range(a.r, "--r")) {
      const auto v = L.evaluate(r, std::min(tol, 1e-12));
      rep.row({{"record", "l_function"}, {"fn", u.spec()}, {"r", r}, {"log_value", json_number(v.log_value)},
               {"degree", v.degree}, {"terms", v.terms}});
    }
  }
  if (a.weights) {
    const auto w = weight_sequence(u, a.n);
    for (int n = 0; n <= a.n; ++n)
      rep.row({{"record", "weight"}, {"fn", u.spec()}, {"n", n}, {"log_alpha", json_number(w.log_alpha[n])},
               {"alpha", json_number(std::exp(w.log_alpha[n]))}, {"log_ell", json_number(w.log_ell[n])}});
    rep.row({{"record", "weight_summary"}, {"fn", u.spec()}, {"root_decreasing", w.root_decreasing}});
  }
  return kExitOk;
}

struct VerifyArgs {
  std::string fn = "exp";
  std::string facts;
  std::string conditions;
  std::string convexity;
  std::string equivalent_to;
  std::string a_values = "2,2.718281828459045";
  double k = 2.0;
  std::string dual_t = "0.1:30:0.5";
  bool norm_equivalence = false;
  int d = 1;
  std::string lambda = "2";
  double p = 1.0, q = 3.0;
  int samples = 100;
  int degree = 3;
};

int run_verify(const VerifyArgs& a, std::uint64_t seed, Report& rep) {
  bool any = false;
  auto record = [&](const ConditionReport& r, const std::string& name) {
    json row = verdict_json(r);
    row["fn"] = a.fn;
    rep.row(std::move(row));
    rep.check(name, r.holds());
    any = true;
  };
  if (!a.conditions.empty() || !a.facts.empty() || !a.convexity.empty() || !a.equivalent_to.empty()) {
    const GrowthFunction u = parse_growth_spec(a.fn);
    for (const auto& c : split(a.conditions, ',')) record(check_u_condition(u, parse_u_condition(c)), c);
    for (const auto& c : split(a.convexity, ',')) {
      if (c == "log-exp") {
        record(check_convexity_class(u, ConvexityClass::log_exp), "convexity:log-exp");
      } else if (c == "log-x2") {
        record(check_convexity_class(u, ConvexityClass::log_xk, 2.0), "convexity:log-x2");
      } else {
        throw InputError("--convexity: unknown class '" + c + "' (log-exp, log-x2)");
      }
    }
    if (!a.facts.empty()) {
      std::set<std::string> want;
      for (const auto& f : split(a.facts, ',')) {
        if (f == "all") {
          want.insert({"l-bound", "l-lower", "l-sqrt-bound", "dual-identity"});
        } else if (f == "l-bound" || f == "l-lower" || f == "l-sqrt-bound" || f == "dual-identity") {
          want.insert(f);
        } else {
          throw InputError("--facts: unknown item '" + f + "' (all, l-bound, l-lower, l-sqrt-bound, dual-identity)");
        }
      }
      const auto as = parse_list(a.a_values, "--a");
      for (const std::string f : {"l-bound", "l-lower", "l-sqrt-bound", "dual-identity"}) {
        if (!want.count(f)) continue;
        if (f == "l-bound")
          for (double av : as) record(verify_l_function_bound(u, av), "l-bound(a=" + std::to_string(av) + ")");
        if (f == "l-lower") record(measure_l_function_lower_constant(u, a.k), "l-lower");
        if (f == "l-sqrt-bound")
          for (double av : as)
            record(verify_l_function_sqrt_bound(u, a.k, av), "l-sqrt-bound(a=" + std::to_string(av) + ")");
        if (f == "dual-identity") record(verify_dual_legendre_identity(u, parse_range(a.dual_t, "--dual-t")), f);
      }
    }
    if (!a.equivalent_to.empty())
      record(check_equivalence(u, parse_growth_spec(a.equivalent_to)), "equivalence");
  }
  if (a.norm_equivalence) {
    any = true;
    const SpaceModel s = space_from(a.d, a.lambda);
    const GrowthFunction u = parse_growth_spec(a.fn);
    NormEquivalenceOptions opt;
    opt.samples = a.samples;
    opt.max_degree = a.degree;
    opt.seed = seed;
    opt.strict = false;
    const auto r = norm_equivalence_experiment(s, u, u, a.p, a.p, a.q, a.q, opt);
    for (const auto& row : r.rows)
      rep.row({{"record", "norm_equivalence_sample"}, {"index", row.index}, {"degree", row.degree},
               {"sup_p", json_number(row.sup_p)}, {"norm_q", json_number(row.norm_q)},
               {"ae_ratio", json_number(row.ae_ratio)}, {"norm_p", json_number(row.norm_p)},
               {"sup_q", json_number(row.sup_q)}, {"ea_ratio", json_number(row.ea_ratio)}});
    rep.row({{"record", "norm_equivalence"},
             {"p", a.p},
             {"q", a.q},
             {"C_ae", json_number(r.C_ae)},
             {"hs", {json_number(r.hs[0]), json_number(r.hs[1])}},
             {"contraction", {json_number(r.contraction[0]), json_number(r.contraction[1])}},
             {"ea_precondition", r.ea_precondition},
             {"precondition_message", r.precondition_message},
             {"L", json_number(r.L)},
             {"L_exact", json_number(r.L_exact)},
             {"L_method", r.L_factors[0].method},
             {"C_ea", json_number(r.C_ea)},
             {"worst_ae_ratio", json_number(r.worst_ae)},
             {"worst_ea_ratio", json_number(r.worst_ea)},
             {"ae_holds", r.ae_holds},
             {"ea_holds", r.ea_holds}});
    rep.check("norm-equivalence:ae", r.ae_holds);
    rep.check("norm-equivalence:ea-precondition", r.ea_precondition);
    rep.check("norm-equivalence:ea", r.ea_holds);
  }
  if (!any)
    throw InputError("verify: nothing to check (use --facts, --conditions, --convexity, --equivalent-to or "
                     "--norm-equivalence)");
  return rep.all_passed() ? kExitOk : kExitCheckFailed;
}

struct CharacterizeArgs {
  std::string fixture;
  int random = 0;
  int d = 2;
  std::string lambda = "2";
  int degree = 3;
  bool round_trip = false;
  bool certificate = false;
  bool kernel_bounds = false;
  std::string u = "exp";
  double p = 1.0, q = 3.0, K = 1.0;
  double inflate = 1.0;
  double round_trip_tol = 1e-8;
};

struct Subject {
  std::string name;
  AnalyticFunction F;
  SpaceModel space;
  std::optional<ChaosVector> chaos;
  int degree = 0;
};

std::vector<Subject> characterize_subjects(const CharacterizeArgs& a, std::uint64_t seed) {
  std::vector<Subject> out;
  if (!a.fixture.empty()) {
    const json j = load_json_file(a.fixture);
    const std::string type = j.value("type", j.contains("kernels") ? "chaos" : "polynomial");
    if (type == "chaos") {
      const ChaosVector v = chaos_from_json(j);
      out.push_back({a.fixture, s_transform_function(v), v.space(), v, std::max(v.max_l(), v.max_m())});
    } else if (type == "polynomial") {
      const auto p = polynomial_from_json(j);
      int deg = 0;
      for (const auto& t : p.terms) deg = std::max<int>({deg, static_cast<int>(t.idx_l.size()),
                                                         static_cast<int>(t.idx_m.size())});
      out.push_back({a.fixture, polynomial(p.space.d(), p.terms), p.space, std::nullopt, deg});
    } else if (type == "exponential") {
      const SpaceModel s = detail::space_of(j, "exponential fixture");
      auto read = [&](const char* key) {
        cvec v;
        for (const auto& x : detail::field(j, key, "exponential fixture")) v.push_back(number_from_json(x, key));
        s.check_dim(v.size());
        return v;
      };
      out.push_back({a.fixture, exponential_function(read("xi0"), read("eta0")), s, std::nullopt,
                     j.value("degree", a.degree)});
    } else {
      throw InputError("fixture type must be chaos, polynomial or exponential");
    }
  }
  if (a.random > 0) {
    const SpaceModel s = space_from(a.d, a.lambda);
    Rng rng(seed);
    for (int k = 0; k < a.random; ++k) {
      const ChaosVector v = random_chaos(s, a.degree, rng);
      out.push_back({"random#" + std::to_string(k), s_transform_function(v), s, v, a.degree});
    }
  }
  if (out.empty()) throw InputError("characterize: give --fixture or --random N");
  return out;
}

int run_characterize(const CharacterizeArgs& a, std::uint64_t seed, Report& rep) {
  if (!a.round_trip && !a.certificate && !a.kernel_bounds)
    throw InputError("characterize: choose --round-trip, --growth-certificate or --kernel-bounds");
  const GrowthFunction u = parse_growth_spec(a.u);
  for (auto& sub : characterize_subjects(a, seed)) {
    const int D = sub.degree;
    if (a.round_trip) {
      const ChaosVector back = reconstruct_chaos(sub.F, D, D, sub.space);
      const ChaosVector reference = sub.chaos ? *sub.chaos : back;
      const ChaosVector again = sub.chaos ? back : reconstruct_chaos(s_transform_function(back), D, D, sub.space);
      double worst = 0.0, largest = 0.0;
      const auto a_mono = to_monomials(reference), b_mono = to_monomials(again);
      for (const auto& [k, v] : a_mono) largest = std::max(largest, std::abs(v));
      for (const auto& [k, v] : a_mono) {
        auto it = b_mono.find(k);
        worst = std::max(worst, std::abs(v - (it == b_mono.end() ? 0.0 : it->second)));
      }
      for (const auto& [k, v] : b_mono)
        if (!a_mono.count(k)) worst = std::max(worst, std::abs(v));
      const double rel = largest > 0 ? worst / largest : worst;
      json row{{"record", "round_trip"}, {"subject", sub.name}, {"degree", D},
               {"max_coefficient_error", json_number(rel)}, {"tolerance", a.round_trip_tol},
               {"pass", rel <= a.round_trip_tol}};
      if (!sub.chaos) row["chaos"] = to_json(back);
      rep.row(std::move(row));
      rep.check("round-trip:" + sub.name, rel <= a.round_trip_tol);
    }
    if (a.certificate || a.kernel_bounds) {
      GrowthProfile g{.C = 1, .K1 = a.K, .K2 = a.K, .p1 = a.p, .p2 = a.p, .u1 = u, .u2 = u,
                      .side = GrowthSide::dual};
      SampleCloud cloud;
      cloud.seed = seed;
      const auto cert = check_growth_condition(sub.F, g, sub.space, cloud);
      rep.row({{"record", "growth_certificate"}, {"subject", sub.name}, {"C_hat", json_number(cert.C_hat)},
               {"log_C_hat", json_number(cert.log_C_hat)}, {"witness_xi", cvec_json(cert.witness_xi)},
               {"witness_eta", cvec_json(cert.witness_eta)}, {"samples", cert.samples},
               {"cloud", cert.sample_description}});
      if (a.certificate) rep.check("certificate-finite:" + sub.name, std::isfinite(cert.C_hat));
      if (a.kernel_bounds) {
        std::vector<KernelTensor> ks;
        for (int l = 0; l <= D; ++l)
          for (int m = 0; l + m <= 2 * D && m <= D; ++m) {
            KernelTensor k = taylor_coeffs(sub.F, l, m);
            bool nonzero = false;
            for (const auto& [key, v] : k.entries()) nonzero = nonzero || std::abs(v) > 1e-12;
            if (nonzero) ks.push_back(std::move(k));
          }
        if (a.inflate != 1.0 && !ks.empty()) ks.back() = ks.back().scaled(a.inflate);
        const auto kb = verify_kernel_bounds(ks, sub.space, std::sqrt(cert.C_hat), a.K, a.K, a.p, a.p, a.q, a.q,
                                             u, u, KernelBoundDirection::dual_side);
        json rows = json::array();
        for (const auto& b : kb.rows)
          rows.push_back({{"l", b.l}, {"m", b.m}, {"log_lhs", json_number(b.log_lhs)},
                          {"log_rhs", json_number(b.log_rhs)}});
        json wit = json::array();
        for (const auto& [l, m] : kb.witnesses) wit.push_back({l, m});
        rep.row({{"record", "kernel_bounds"}, {"subject", sub.name}, {"verdict", to_string(kb.verdict)},
                 {"margin", json_number(kb.margin)}, {"inflate", a.inflate}, {"bidegrees", rows},
                 {"witnesses", wit}});
        rep.check("kernel-bounds:" + sub.name, kb.holds());
      }
    }
  }
  return rep.all_passed() ? kExitOk : kExitCheckFailed;
}

struct MeasureArgs {
  std::string nu1 = "gaussian:sigma=1", nu2;
  std::string fn = "exp";
  double p = 0.5;
  int d = 1;
  std::string lambda = "2";
  std::string n = "1e5";
  int batches = 50;
  bool exact = false;
  bool boundedness = false;
  int family = 50;
  int degree = 3;
  bool positivity = false;
  bool pseudo_positivity = false;
  int pairs = 100;
  bool omega = false;
  double q = 1.0;
  int points = 1000;
};

json integrability_json(const IntegrabilityEstimate& e) {
  json means = json::array();
  for (double m : e.running_means) means.push_back(json_number(m));
  return json{{"record", "integrability"},
              {"integral", json_number(e.estimate)},
              {"ci", {json_number(e.ci_low), json_number(e.ci_high)}},
              {"ci_level", e.level},
              {"verdict", to_string(e.verdict)},
              {"doubling_flag", e.doubling_flag},
              {"tail_flag", e.tail_flag},
              {"tail_index", json_number(e.tail_index)},
              {"checkpoints", e.checkpoints},
              {"running_means", means},
              {"n", e.n},
              {"batches", e.batches},
              {"seed", e.seed}};
}

std::optional<std::vector<double>> gaussian_variances(const ComponentMeasure& m) {
  if (m.kind() != MeasureKind::gaussian) return std::nullopt;
  std::vector<double> v;
  for (double s : m.params()) v.push_back(s * s);
  return v;
}

int run_measure(const MeasureArgs& a, std::uint64_t seed, Report& rep) {
  const SpaceModel s = space_from(a.d, a.lambda);
  const ProductMeasureModel model(s, parse_measure_spec(a.nu1), parse_measure_spec(a.nu2.empty() ? a.nu1 : a.nu2));
  const GrowthFunction u = parse_growth_spec(a.fn);
  const std::size_t n = parse_count(a.n, "--n");
  MonteCarloOptions mc;
  mc.batches = a.batches;

  const auto est = integrability_estimate(model, u, u, a.p, a.p, n, seed, mc);
  json row = integrability_json(est);
  row["nu1"] = model.nu1.spec();
  row["nu2"] = model.nu2.spec();
  rep.row(std::move(row));

  if (a.exact) {
    const auto v1 = gaussian_variances(model.nu1), v2 = gaussian_variances(model.nu2);
    if (!v1 || !v2) throw InputError("--exact needs Gaussian measures");
    const double exact = integrability_exact_gaussian(*v1, *v2, u, u, a.p, a.p, s);
    const bool ok = std::isfinite(exact) ? std::abs(est.estimate - exact) <= est.half_width : !est.converged();
    rep.row({{"record", "integrability_exact"}, {"exact", json_number(exact)},
             {"estimate", json_number(est.estimate)}, {"half_width", json_number(est.half_width)},
             {"agrees", ok}});
    rep.check("exact-agreement", ok);
  }
  if (a.boundedness) {
    BoundednessOptions bo;
    bo.family = a.family;
    bo.max_degree = a.degree;
    bo.samples = n;
    bo.mc = mc;
    const auto b = boundedness_probe(model, u, u, a.p, a.p, seed, bo);
    json by = json::array();
    for (double k : b.K_by_degree) by.push_back(json_number(k));
    rep.row({{"record", "boundedness"}, {"K_hat", json_number(b.K_hat)}, {"K_by_degree", by},
             {"integral", json_number(b.integral.estimate)}, {"half_width", json_number(b.integral.half_width)},
             {"within_bound", b.within_bound}, {"precondition_met", b.precondition_met},
             {"unbounded_suspected", b.unbounded_suspected}, {"witness", b.witness}});
    if (b.precondition_met) rep.check("boundedness", b.within_bound);
  }
  if (a.positivity) {
    PositivityOptions po;
    po.samples = std::min<std::size_t>(n, 100000);
    po.mc = mc;
    const auto r = positivity_probe(model, seed, po);
    rep.row({{"record", "positivity"}, {"min_value", json_number(r.min_value)},
             {"half_width", json_number(r.min_half_width)}, {"witness", r.witness_label},
             {"family_size", r.family_size}, {"verdict", r.verdict()}});
    rep.check("positivity", !r.violated);
  }
  if (a.pseudo_positivity) {
    PseudoPositivityOptions po;
    po.pairs = a.pairs;
    const auto r = pseudo_positivity_probe(model, a.degree, u, u, a.p, a.p, n, seed, po, mc);
    rep.row({{"record", "pseudo_positivity"}, {"min_value", json_number(r.min_value)}, {"pairs", r.pairs},
             {"verdict", r.verdict()}, {"integral_verdict", to_string(r.cross_check->verdict)},
             {"consistent", r.consistent}});
    rep.check("pseudo-positivity", !r.violated && r.consistent);
  }
  if (a.omega) {
    const auto w = omega_test_function(u, u, a.q, a.q, s);
    const auto r = w.check_bound(static_cast<std::size_t>(a.points), seed);
    rep.row({{"record", "omega_bound"}, {"points", r.points}, {"violations", r.violations},
             {"max_log_excess", json_number(r.max_log_excess)}, {"worst_x", cvec_json(r.worst_x)},
             {"worst_y", cvec_json(r.worst_y)}});
    rep.check("omega-bound", r.holds());
  }
  return rep.all_passed() ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// Config files

struct ConfigEntry {
  std::string key, value;
};

std::vector<ConfigEntry> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  std::vector<ConfigEntry> out;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError(path + ":" + std::to_string(lineno) + ":" + std::to_string(first + 1) +
                       ": expected key = value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    ConfigEntry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
    if (e.key.empty())
      throw InputError(path + ":" + std::to_string(lineno) + ":" + std::to_string(first + 1) + ": empty key");
    if (e.value.size() >= 2 && e.value.front() == '"' && e.value.back() == '"')
      e.value = e.value.substr(1, e.value.size() - 2);
    out.push_back(std::move(e));
  }
  return out;
}

std::set<const CLI::Option*> g_flags;

CLI::Option* flag(CLI::App* app, const std::string& name, bool& target, const std::string& desc) {
  CLI::Option* o = app->add_flag(name, target, desc);
  g_flags.insert(o);
  return o;
}

/// Resolved values of every long option of `app` except help, config and out.
void collect_options(const CLI::App& app, json& into) {
  for (const CLI::Option* o : app.get_options()) {
    const std::string name = o->get_lnames().empty() ? "" : o->get_lnames().front();
    if (name.empty() || name == "help" || name == "config" || name == "out") continue;
    std::string value;
    if (g_flags.count(o)) {
      value = o->as<bool>() ? "true" : "false";
    } else if (o->count() > 0) {
      value = o->results().back();
    } else {
      value = o->get_default_str();
    }
    into[name] = value;
  }
}

std::string config_text(const std::string& command, const json& config) {
  std::ostringstream os;
  os << "command = " << command << '\n';
  for (const auto& [k, v] : config.items())
    if (k != "command") os << k << " = " << v.get<std::string>() << '\n';
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Growth-function transforms, CKS-space checks and product-measure experiments"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(0, 1);

  std::uint64_t seed = 1;
  double tol = 1e-8;
  std::string out, format = "json", config_path;
  app.add_option("--seed", seed, "Root random seed");
  app.add_option("--tol", tol, "Numeric tolerance");
  app.add_option("--out", out, "Output file (default stdout); the resolved config goes to <out>.config");
  app.add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--config", config_path, "Flat key = value file mirroring the flags");

  TransformArgs ta;
  auto* tr = app.add_subcommand("transform", "Tables of l_u, u*, L_u and alpha_u");
  tr->add_option("--fn", ta.fn, "Growth function, e.g. exp or kondratiev:beta=0.5")->required();
  flag(tr, "--legendre", ta.legendre, "Legendre transform on --t");
  flag(tr, "--dual", ta.dual, "Dual Legendre transform on --r");
  flag(tr, "--lfunc", ta.lfunc, "L-function on --r");
  flag(tr, "--weights", ta.weights, "Weight sequence up to --n");
  tr->add_option("--t", ta.t, "start:stop:step");
  tr->add_option("--r", ta.r, "start:stop:step");
  tr->add_option("--n", ta.n, "Largest degree for --weights");

  VerifyArgs va;
  auto* ve = app.add_subcommand("verify", "Growth-function inequalities and norm equivalence");
  ve->add_option("--fn", va.fn, "Growth function");
  ve->add_option("--facts", va.facts, "all or a list of l-bound, l-lower, l-sqrt-bound, dual-identity");
  ve->add_option("--conditions", va.conditions, "List of U0, U1, U2, U3");
  ve->add_option("--convexity", va.convexity, "List of log-exp, log-x2");
  ve->add_option("--equivalent-to", va.equivalent_to, "Second growth function for the equivalence check");
  ve->add_option("--a", va.a_values, "Scale constants a > 1 for the L-function bounds");
  ve->add_option("--k", va.k, "Exponent k for the lower-constant and square-root bounds");
  ve->add_option("--dual-t", va.dual_t, "start:stop:step for the dual Legendre identity");
  flag(ve, "--norm-equivalence", va.norm_equivalence, "Compare sup norm and chaos norm");
  ve->add_option("--d", va.d, "Dimension");
  ve->add_option("--lambda", va.lambda, "Eigenvalues, one value or a list");
  ve->add_option("--p", va.p, "Lower level");
  ve->add_option("--q", va.q, "Upper level");
  ve->add_option("--samples", va.samples, "Random vectors");
  ve->add_option("--degree", va.degree, "Largest total degree");

  CharacterizeArgs ca;
  auto* ch = app.add_subcommand("characterize", "S-transform round trip, growth certificate and kernel bounds");
  ch->add_option("--fixture", ca.fixture, "JSON fixture: chaos vector, polynomial or exponential");
  ch->add_option("--random", ca.random, "Number of random chaos vectors");
  ch->add_option("--d", ca.d, "Dimension for --random");
  ch->add_option("--lambda", ca.lambda, "Eigenvalues for --random");
  ch->add_option("--degree", ca.degree, "Degree cap");
  flag(ch, "--round-trip", ca.round_trip, "Reconstruct kernels from the S-transform");
  flag(ch, "--growth-certificate", ca.certificate, "Measure the growth constant C_hat");
  flag(ch, "--kernel-bounds", ca.kernel_bounds, "Check kernel norms against the measured constant");
  ch->add_option("--u", ca.u, "Weight growth function on the dual side");
  ch->add_option("--p", ca.p, "Level of the growth condition");
  ch->add_option("--q", ca.q, "Level of the kernel norms (q > p)");
  ch->add_option("--K", ca.K, "Scale constant in the growth condition");
  ch->add_option("--inflate", ca.inflate, "Multiply the highest extracted kernel by this factor");
  ch->add_option("--round-trip-tol", ca.round_trip_tol, "Relative coefficient tolerance");

  MeasureArgs ma;
  auto* me = app.add_subcommand("measure", "Integrability, boundedness and positivity for product measures");
  me->add_option("--nu1", ma.nu1, "First component measure");
  me->add_option("--nu2", ma.nu2, "Second component measure (default: same as --nu1)");
  me->add_option("--fn", ma.fn, "Growth function used for both factors");
  me->add_option("--p", ma.p, "Level p1 = p2");
  me->add_option("--d", ma.d, "Dimension");
  me->add_option("--lambda", ma.lambda, "Eigenvalues");
  me->add_option("--n", ma.n, "Monte-Carlo samples, e.g. 1e5");
  me->add_option("--batches", ma.batches, "Batches for the confidence interval");
  flag(me, "--exact", ma.exact, "Compare with the Gaussian closed form");
  flag(me, "--boundedness", ma.boundedness, "Probe the induced functional");
  me->add_option("--family", ma.family, "Random vectors in the boundedness probe");
  me->add_option("--degree", ma.degree, "Degree for boundedness and pseudo-positivity");
  flag(me, "--positivity", ma.positivity, "Positivity probe of the induced functional");
  flag(me, "--pseudo-positivity", ma.pseudo_positivity, "Probe the induced operator");
  me->add_option("--pairs", ma.pairs, "Pairs in the pseudo-positivity probe");
  flag(me, "--omega", ma.omega, "Check the omega bound");
  me->add_option("--q", ma.q, "Level for omega");
  me->add_option("--points", ma.points, "Random points for omega");

  for (auto* s : {tr, ve, ch, me}) s->fallthrough();

  // Config entries become --key=value arguments ahead of the command line.
  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);  // CLI11 expects reversed order
  try {
    std::vector<std::string> forward(args.rbegin(), args.rend());
    std::string cfg;
    for (std::size_t i = 0; i < forward.size(); ++i) {
      if (forward[i] == "--config" && i + 1 < forward.size()) cfg = forward[i + 1];
      if (forward[i].rfind("--config=", 0) == 0) cfg = forward[i].substr(9);
    }
    if (!cfg.empty()) {
      const auto entries = read_config(cfg);
      std::string command;
      std::vector<std::string> global, sub;
      for (const auto& e : entries) {
        if (e.value.empty()) continue;
        if (e.key == "command") {
          command = e.value;
        } else if (app.get_option_no_throw("--" + e.key)) {
          global.push_back("--" + e.key + "=" + e.value);
        } else {
          sub.push_back("--" + e.key + "=" + e.value);
        }
      }
      std::vector<std::string> merged;
      const bool has_command = std::any_of(forward.begin(), forward.end(), [&](const std::string& s) {
        return s == "transform" || s == "verify" || s == "characterize" || s == "measure";
      });
      merged.insert(merged.end(), global.begin(), global.end());
      if (!has_command) {
        if (command.empty()) throw InputError(cfg + ": no command given");
        merged.push_back(command);
        merged.insert(merged.end(), sub.begin(), sub.end());
        merged.insert(merged.end(), forward.begin(), forward.end());
      } else {
        for (const auto& f : forward) {
          merged.push_back(f);
          if (f == "transform" || f == "verify" || f == "characterize" || f == "measure")
            merged.insert(merged.end(), sub.begin(), sub.end());
        }
      }
      args.assign(merged.rbegin(), merged.rend());
    }
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  }

  std::string command;
  CLI::App* sub = nullptr;
  for (auto* s : {tr, ve, ch, me})
    if (s->parsed()) {
      command = s->get_name();
      sub = s;
    }
  if (!sub) {
    std::cerr << app.help();
    return kExitInput;
  }

  json config = json::object();
  collect_options(app, config);
  collect_options(*sub, config);

  Report rep;
  int code = kExitOk;
  try {
    if (command == "transform") code = run_transform(ta, tol, rep);
    if (command == "verify") code = run_verify(va, seed, rep);
    if (command == "characterize") code = run_characterize(ca, seed, rep);
    if (command == "measure") code = run_measure(ma, seed, rep);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition failed: " << e.what() << '\n';
    return kExitInput;
  } catch (const TruncationFailure& e) {
    std::cerr << "non-convergence: " << e.what() << '\n';
    return kExitNonConvergence;
  } catch (const DivergentTransform& e) {
    std::cerr << "non-convergence: " << e.what() << '\n';
    return kExitNonConvergence;
  }

  if (out.empty()) {
    rep.write(std::cout, format, command, config, code);
  } else {
    std::ofstream os(out, std::ios::binary);
    if (!os) {
      std::cerr << "input error: cannot write '" << out << "'\n";
      return kExitInput;
    }
    rep.write(os, format, command, config, code);
    std::ofstream cfg(out + ".config", std::ios::binary);
    cfg << config_text(command, config);
  }
  return code;
}
