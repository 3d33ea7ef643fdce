#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "selab/errors.hpp"
#include "selab/mesh.hpp"
#include "selab/numerics.hpp"

namespace selab {

/// Singular nonlinearity g. Closed-form tagged variants so that hypothesis
/// flags and integral criteria have analytic ground truth.
struct GSpec {
  enum class Form { None, PowerSingular, PowerPlusConstant, LogSingular };

  Form form = Form::None;
  double theta = 0.0;  // exponent of the power forms
  double a_inf = 0.0;  // additive constant of PowerPlusConstant

  static GSpec none() { return {}; }
  static GSpec power(double theta) {
    if (!(theta > 0.0)) throw ConfigError("GSpec power form needs theta > 0");
    return {Form::PowerSingular, theta, 0.0};
  }
  static GSpec power_plus_constant(double theta, double a) {
    if (!(theta > 0.0) || a < 0.0) throw ConfigError("GSpec power_plus_constant needs theta > 0, a >= 0");
    return {Form::PowerPlusConstant, theta, a};
  }
  static GSpec log_singular() { return {Form::LogSingular, 0.0, 0.0}; }

  bool is_none() const { return form == Form::None; }

  double value(double s) const {
    switch (form) {
      case Form::None:
        return 0.0;
      case Form::PowerSingular:
        return std::pow(s, -theta);
      case Form::PowerPlusConstant:
        return std::pow(s, -theta) + a_inf;
      case Form::LogSingular:
        return s < 1.0 ? -std::log(s) : 0.0;
    }
    return 0.0;
  }

  double derivative(double s) const {
    switch (form) {
      case Form::None:
        return 0.0;
      case Form::PowerSingular:
        return -theta * std::pow(s, -theta - 1.0);
      case Form::PowerPlusConstant:
        return -theta * std::pow(s, -theta - 1.0);
      case Form::LogSingular:
        return s < 1.0 ? -1.0 / s : 0.0;
    }
    return 0.0;
  }

  /// a := lim_{s->inf} g(s)
  double asymptote() const { return form == Form::PowerPlusConstant ? a_inf : 0.0; }

  /// Blow-up exponent at the origin (alpha of (g2), gamma of (g4)).
  double blowup_exponent() const {
    return (form == Form::PowerSingular || form == Form::PowerPlusConstant) ? theta : 0.0;
  }
};

/// Smooth nonlinearity f, nonnegative and nondecreasing.
struct FSpec {
  enum class Form { Zero, One, Sublinear, Linear, Saturating };

  Form form = Form::Zero;
  double p = 0.0;  // Sublinear exponent, in (0,1)
  double m = 0.0;  // asymptotic slope of the linear-type forms

  static FSpec zero() { return {}; }
  static FSpec one() { return {Form::One, 0.0, 0.0}; }
  static FSpec sublinear(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("FSpec sublinear needs p in (0,1)");
    return {Form::Sublinear, p, 0.0};
  }
  static FSpec linear(double m) {
    if (!(m > 0.0)) throw ConfigError("FSpec linear needs m > 0");
    return {Form::Linear, 0.0, m};
  }
  /// f(s) = m s^2 / (1+s): f(s)/s strictly nondecreasing with limit m.
  static FSpec saturating(double m) {
    if (!(m > 0.0)) throw ConfigError("FSpec saturating needs m > 0");
    return {Form::Saturating, 0.0, m};
  }

  double value(double s) const {
    switch (form) {
      case Form::Zero:
        return 0.0;
      case Form::One:
        return 1.0;
      case Form::Sublinear:
        return std::pow(s, p);
      case Form::Linear:
        return m * s;
      case Form::Saturating:
        return m * s * s / (1.0 + s);
    }
    return 0.0;
  }

  double derivative(double s) const {
    switch (form) {
      case Form::Zero:
      case Form::One:
        return 0.0;
      case Form::Sublinear:
        // Clamped at the origin so Newton linearizations stay finite.
        return p * std::pow(std::max(s, 1e-12), p - 1.0);
      case Form::Linear:
        return m;
      case Form::Saturating: {
        const double q = 1.0 + s;
        return m * s * (s + 2.0) / (q * q);
      }
    }
    return 0.0;
  }

  /// m := lim_{s->inf} f(s)/s (0 for the sublinear and constant forms).
  double slope_at_infinity() const {
    return (form == Form::Linear || form == Form::Saturating) ? m : 0.0;
  }
};

/// Spatial coefficient: a constant, or sign * d(x)^beta with envelope
/// constants c1 = c2 = 1 exactly.
struct CoefficientSpec {
  enum class Kind { Constant, DistancePower };

  Kind kind = Kind::Constant;
  double value = 0.0;  // Constant
  int sign = 1;        // DistancePower
  double beta = 0.0;   // DistancePower

  static CoefficientSpec constant(double v) { return {Kind::Constant, v, 1, 0.0}; }
  static CoefficientSpec distance_power(int sign, double beta) {
    if (sign != 1 && sign != -1) throw ConfigError("DistancePower sign must be +1 or -1");
    return {Kind::DistancePower, 0.0, sign, beta};
  }

  double eval(double d) const {
    return kind == Kind::Constant ? value : sign * std::pow(d, beta);
  }
  bool is_zero() const { return kind == Kind::Constant && value == 0.0; }
};

/// Range of a coefficient over the interior nodes of a mesh (K^*, K_*).
struct CoefficientRange {
  double min = 0.0, max = 0.0;
};

inline CoefficientRange coefficient_range(const CoefficientSpec& c, const Mesh& mesh) {
  CoefficientRange r{std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity()};
  const auto& d = mesh.boundary_distance();
  for (std::size_t i = mesh.interior_begin(); i < mesh.interior_end(); ++i) {
    const double v = c.eval(d[i]);
    r.min = std::min(r.min, v);
    r.max = std::max(r.max, v);
  }
  return r;
}

enum class Family {
  Plamu,                // -Delta u + K(x) g(u) = lambda f(u) + mu h(x)
  Pla,                  // -Delta u = lambda f(u) + a(x) g(u)
  Convection,           // -Delta u = g(u) + lambda |grad u|^p + mu f(u)
  Ppart,                // -Delta u = g(u) + lambda |grad u|^2 + mu
  WeightedConvection,   // -Delta u = p(x) g(u) + q(x) |grad u|^a
  RadialShi,            // -Delta u = lambda (u^p - u^{-alpha}) on the ball
  SublinearTwoParam     // -Delta u = u^{-alpha} + lambda u^p
};

inline std::string family_name(Family f) {
  switch (f) {
    case Family::Plamu: return "plamu";
    case Family::Pla: return "pla";
    case Family::Convection: return "convection";
    case Family::Ppart: return "ppart";
    case Family::WeightedConvection: return "weighted_convection";
    case Family::RadialShi: return "radial_shi";
    case Family::SublinearTwoParam: return "sublinear_two_param";
  }
  return "?";
}

/// One problem instance: a family plus its nonlinearities, coefficients and
/// parameters. Immutable value type.
struct ProblemInstance {
  Family family = Family::Pla;
  GSpec g;
  FSpec f;
  CoefficientSpec K = CoefficientSpec::constant(0.0);       // Plamu potential
  CoefficientSpec h = CoefficientSpec::constant(1.0);       // Plamu source
  CoefficientSpec a = CoefficientSpec::constant(0.0);       // Pla weight of g
  CoefficientSpec p_coef = CoefficientSpec::constant(1.0);  // WeightedConvection potential
  CoefficientSpec q = CoefficientSpec::constant(1.0);       // WeightedConvection convection weight
  double lambda = 0.0;
  double mu = 0.0;
  double p_grad = 0.0;  // Convection gradient exponent, (0,2]
  double a_grad = 0.0;  // WeightedConvection gradient exponent, (0,1)

  bool has_gradient_term() const {
    return family == Family::Convection || family == Family::Ppart ||
           family == Family::WeightedConvection;
  }

  double gradient_exponent() const {
    if (family == Family::Ppart) return 2.0;
    if (family == Family::Convection) return p_grad;
    if (family == Family::WeightedConvection) return a_grad;
    return 0.0;
  }

  void validate() const {
    switch (family) {
      case Family::Plamu:
        if (g.is_none()) throw ConfigError("plamu requires a singular g");
        break;
      case Family::Pla:
        break;
      case Family::Convection:
        if (!(p_grad > 0.0 && p_grad <= 2.0)) throw ConfigError("convection requires p_grad in (0,2]");
        if (g.is_none()) throw ConfigError("convection requires a singular g");
        break;
      case Family::Ppart:
        if (p_grad != 0.0 && p_grad != 2.0) throw ConfigError("ppart requires p_grad = 2");
        if (g.is_none()) throw ConfigError("ppart requires a singular g");
        break;
      case Family::WeightedConvection: {
        if (!(a_grad > 0.0 && a_grad < 1.0))
          throw ConfigError("weighted_convection requires a_grad in (0,1)");
        if (p_coef.kind != CoefficientSpec::Kind::DistancePower)
          throw ConfigError("weighted_convection requires a distance-power potential p(x)");
        const double gamma = g.blowup_exponent();
        if (!(gamma > std::max(1.0, p_coef.beta + 1.0)))
          throw ConfigError("weighted_convection requires gamma > max{1, beta + 1} (hypothesis g4)");
        break;
      }
      case Family::RadialShi:
        if (f.form != FSpec::Form::Sublinear) throw ConfigError("radial_shi requires f(s) = s^p, p in (0,1)");
        if (g.form != GSpec::Form::PowerSingular || !(g.theta < 1.0))
          throw ConfigError("radial_shi shooting is restricted to alpha in (0,1)");
        if (!(lambda > 0.0)) throw ConfigError("radial_shi requires lambda > 0");
        break;
      case Family::SublinearTwoParam:
        if (f.form != FSpec::Form::Sublinear) throw ConfigError("sublinear_two_param requires f(s) = s^p");
        if (g.form != GSpec::Form::PowerSingular || !(g.theta < 1.0))
          throw ConfigError("sublinear_two_param requires g(s) = s^{-alpha}, alpha in (0,1)");
        break;
    }
  }
};

enum class Tri { True, False, Inconclusive };

inline std::string tri_name(Tri t) {
  return t == Tri::True ? "true" : (t == Tri::False ? "false" : "inconclusive");
}

struct KellerOsserman {
  enum class Kind { Finite, Divergent, NonIntegrableInner };
  Kind kind = Kind::Divergent;
  double value = std::numeric_limits<double>::quiet_NaN();
};

/// true iff the integral of g over (0,1) diverges. Analytic for the power
/// forms (theta >= 1), decided by a decade-cutoff refinement heuristic
/// otherwise: the integral over [10^-k, 1] must stabilize for k = 2..10.
inline bool g_integral_divergent(const GSpec& g) {
  switch (g.form) {
    case GSpec::Form::None:
      return false;
    case GSpec::Form::PowerSingular:
    case GSpec::Form::PowerPlusConstant:
      return g.theta >= 1.0;
    case GSpec::Form::LogSingular:
      break;
  }
  double prev = 0.0;
  for (int k = 2; k <= 10; ++k) {
    const double eps = std::pow(10.0, -k);
    const double cur =
        adaptive_simpson([&](double s) { return g.value(s); }, eps, 1.0, 1e-10);
    if (k > 2 && std::abs(cur - prev) < 1e-6 * std::abs(cur)) return false;
    prev = cur;
  }
  return true;
}

/// Keller-Osserman criterion (g3): finiteness of the integral over (0,1) of
/// (int_0^t g)^{-1/2}. The inner antiderivative is analytic for the supported
/// forms; the outer integral is summed over dyadic intervals toward 0 with an
/// analytic tail bound.
inline KellerOsserman keller_osserman_integral(const GSpec& g, double tol = 1e-8) {
  KellerOsserman out;
  if (g.is_none()) {
    out.kind = KellerOsserman::Kind::Divergent;
    return out;
  }
  if ((g.form == GSpec::Form::PowerSingular || g.form == GSpec::Form::PowerPlusConstant) &&
      g.theta >= 1.0) {
    out.kind = KellerOsserman::Kind::NonIntegrableInner;
    return out;
  }
  auto inner = [&](double t) -> double {
    switch (g.form) {
      case GSpec::Form::PowerSingular:
        return std::pow(t, 1.0 - g.theta) / (1.0 - g.theta);
      case GSpec::Form::PowerPlusConstant:
        return std::pow(t, 1.0 - g.theta) / (1.0 - g.theta) + g.a_inf * t;
      case GSpec::Form::LogSingular:
        return t < 1.0 ? t * (1.0 - std::log(t)) : 1.0;
      default:
        return 0.0;
    }
  };
  auto integrand = [&](double t) { return 1.0 / std::sqrt(inner(t)); };
  // Tail bound on (0,a): inner(t) >= t^{1-theta}/(1-theta) for the power forms
  // (theta = 0 works for the log form since inner(t) >= t there).
  const double th = (g.form == GSpec::Form::LogSingular) ? 0.0 : g.theta;
  auto tail_bound = [&](double a) {
    return std::sqrt(1.0 - th) * 2.0 / (1.0 + th) * std::pow(a, 0.5 * (1.0 + th));
  };
  double total = 0.0;
  double hi = 1.0;
  for (int k = 0; k < 60; ++k) {
    const double lo = 0.5 * hi;
    total += adaptive_simpson(integrand, lo, hi, tol / 64.0);
    hi = lo;
    if (tail_bound(hi) < 0.5 * tol) break;
  }
  out.kind = KellerOsserman::Kind::Finite;
  out.value = total;
  return out;
}

/// Flags for the hypothesis sets (f1)-(f7), (g1)-(g4) plus the two integral
/// criteria. Pure function of (problem, sample grid).
struct HypothesisReport {
  Tri f1 = Tri::Inconclusive, f2 = Tri::Inconclusive, f3 = Tri::Inconclusive;
  Tri f4 = Tri::Inconclusive, f5 = Tri::Inconclusive, f6 = Tri::Inconclusive;
  Tri f7 = Tri::Inconclusive;
  Tri g1 = Tri::Inconclusive, g2 = Tri::Inconclusive, g3 = Tri::Inconclusive;
  Tri g4 = Tri::Inconclusive;
  double f3_limit = 0.0;   // measured m when f3 holds
  double g2_alpha = 0.0;   // alpha certifying (g2)
  bool g_integral_divergent = false;
  KellerOsserman keller_osserman;
  bool g2_implies_ko_ok = true;  // (g2) => Keller-Osserman finite, when both evaluated
};

namespace detail {

inline Tri tri_of(bool b) { return b ? Tri::True : Tri::False; }

/// Sampled monotonicity of ratio(s) = f(s)/s along an increasing grid.
/// dir = +1 tests nondecreasing, dir = -1 nonincreasing.
inline bool ratio_monotone(const FSpec& f, std::span<const double> grid, int dir) {
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (double s : grid) {
    if (!(s > 0.0)) continue;
    const double r = f.value(s) / s;
    if (std::isfinite(prev)) {
      const double slack = 1e-12 * (std::abs(prev) + std::abs(r));
      if (dir > 0 && r < prev - slack) return false;
      if (dir < 0 && r > prev + slack) return false;
    }
    prev = r;
  }
  return true;
}

}  // namespace detail

/// Evaluates every hypothesis flag by sampled monotonicity and two-probe limit
/// tests (s = 10^3 and 10^6 against the declared asymptote, 5% relative).
inline HypothesisReport check_hypotheses(const ProblemInstance& prob,
                                         std::span<const double> sample_grid) {
  HypothesisReport rep;
  const FSpec& f = prob.f;
  const GSpec& g = prob.g;

  // --- f flags ---
  const bool mono_dec = detail::ratio_monotone(f, sample_grid, -1);
  const bool mono_inc = detail::ratio_monotone(f, sample_grid, +1);
  rep.f1 = detail::tri_of(mono_dec);
  rep.f6 = rep.f1;  // same condition, quoted by the convection theorems
  rep.f5 = detail::tri_of(mono_inc);

  const double r3 = f.value(1e3) / 1e3;
  const double r6 = f.value(1e6) / 1e6;
  const double m_decl = f.slope_at_infinity();
  if (m_decl > 0.0) {
    const bool near3 = std::abs(r3 - m_decl) <= 0.05 * m_decl;
    const bool near6 = std::abs(r6 - m_decl) <= 0.05 * m_decl;
    rep.f3 = (near3 && near6) ? Tri::True : (near6 ? Tri::Inconclusive : Tri::False);
    if (rep.f3 == Tri::True) rep.f3_limit = m_decl;
  } else {
    rep.f3 = Tri::False;
  }
  const bool to_zero = r6 <= 0.05 * std::max(r3, 1e-300) || r6 < 1e-12;
  rep.f7 = detail::tri_of(to_zero);
  // (f2): f(s)/s -> infinity as s -> 0 and -> 0 at infinity.
  const double r_small = f.value(1e-3) * 1e3;
  const double r_tiny = f.value(1e-6) * 1e6;
  const bool to_inf = r_tiny >= 10.0 * std::max(r_small, 1e-300) && r_tiny > 1e2;
  rep.f2 = detail::tri_of(to_inf && to_zero);
  // (f4): f(s) >= c s for some c > 0. The declared slope m is the candidate
  // c; sampling checks that the ratio never drops below m/2.
  double inf_ratio = std::numeric_limits<double>::infinity();
  for (double s : sample_grid)
    if (s > 0.0) inf_ratio = std::min(inf_ratio, f.value(s) / s);
  inf_ratio = std::min(inf_ratio, f.value(1e-9) * 1e9);
  rep.f4 = detail::tri_of(m_decl > 0.0 && inf_ratio >= 0.5 * m_decl);

  // --- g flags ---
  if (g.is_none()) {
    rep.g1 = rep.g2 = rep.g3 = rep.g4 = Tri::False;
  } else {
    const double g_small = g.value(1e-6);
    const double g_smaller = g.value(1e-9);
    const double growth = g_smaller / std::max(g_small, 1e-300);
    rep.g1 = growth >= 1.45 ? Tri::True : (growth <= 1.05 ? Tri::False : Tri::Inconclusive);
    // (g2): g(s) <= C s^{-alpha} with alpha in (0,1), near the origin.
    bool g2 = false;
    double alpha = 0.0;
    switch (g.form) {
      case GSpec::Form::PowerSingular:
      case GSpec::Form::PowerPlusConstant:
        g2 = g.theta < 1.0;
        alpha = g.theta;
        break;
      case GSpec::Form::LogSingular:
        g2 = true;
        alpha = 0.5;  // -log s <= s^{-1/2} on (0,1)
        break;
      default:
        break;
    }
    rep.g2 = detail::tri_of(g2);
    rep.g2_alpha = alpha;
    rep.keller_osserman = keller_osserman_integral(g);
    rep.g3 = detail::tri_of(rep.keller_osserman.kind == KellerOsserman::Kind::Finite);
    if (rep.g2 == Tri::True)
      rep.g2_implies_ko_ok = rep.keller_osserman.kind == KellerOsserman::Kind::Finite;
    // (g4): lim s^gamma g(s) in (0,inf) with gamma > max{1, beta+1}.
    const double beta = prob.family == Family::WeightedConvection ? prob.p_coef.beta : 0.0;
    const double gamma = g.blowup_exponent();
    bool g4 = false;
    if (gamma > 0.0) {
      const double l1 = std::pow(1e-6, gamma) * g.value(1e-6);
      const double l2 = std::pow(1e-9, gamma) * g.value(1e-9);
      g4 = std::abs(l1 - l2) <= 0.05 * std::abs(l2) && l2 > 0.0 &&
           gamma > std::max(1.0, beta + 1.0);
    }
    rep.g4 = detail::tri_of(g4);
  }
  rep.g_integral_divergent = selab::g_integral_divergent(g);
  return rep;
}

}  // namespace selab
