#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "selab/errors.hpp"
#include "selab/problem.hpp"

namespace selab {

/// One radial profile found by shooting: u(0) = center_value, u'(0) = 0,
/// u(1) = 0 to within the bisection tolerance, u > 0 on [0,1).
struct RadialSolution {
  double center_value = 0.0;
  double end_value = 0.0;
  std::vector<double> r, u;
};

struct ShootOutcome {
  bool reached_one = false;
  double u_end = std::numeric_limits<double>::quiet_NaN();
  double r_stop = 0.0;
};

namespace detail {

struct RadialOde {
  double lambda, p, alpha;
  int dim;

  // u'' = -lambda (u^p - u^{-alpha}) - ((N-1)/r) u'
  std::array<double, 2> operator()(double r, const std::array<double, 2>& y) const {
    const double u = y[0];
    const double force = -lambda * (std::pow(u, p) - std::pow(u, -alpha));
    double acc = force;
    if (dim > 1) acc -= (dim - 1) / r * y[1];
    return {y[1], acc};
  }
};

/// Dormand-Prince 5(4) with PI-free step control, series start at r = 0, and
/// a stop event when u reaches zero.
inline ShootOutcome integrate_radial(const RadialOde& ode, double c, double rtol, double atol,
                                     std::vector<double>* path_r = nullptr,
                                     std::vector<double>* path_u = nullptr) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
  const double u_floor = 1e-11;

  // Series start away from the (N-1)/r singularity: u''(0) = -lambda F(c)/N.
  const double F0 = ode.lambda * (std::pow(c, ode.p) - std::pow(c, -ode.alpha));
  const double r0 = 1e-8;
  double r = r0;
  std::array<double, 2> y{c - F0 * r0 * r0 / (2.0 * ode.dim), -F0 * r0 / ode.dim};
  if (path_r) {
    path_r->push_back(0.0);
    path_u->push_back(c);
  }

  double h = 1e-4;
  ShootOutcome out;
  const long max_steps = 4000000;
  for (long step = 0; step < max_steps; ++step) {
    if (r >= 1.0 - 1e-14) {
      out.reached_one = true;
      out.u_end = y[0];
      out.r_stop = 1.0;
      return out;
    }
    if (y[0] <= u_floor) {
      out.u_end = y[0];
      out.r_stop = r;
      return out;
    }
    h = std::min(h, 1.0 - r);
    auto axpy = [](const std::array<double, 2>& y0, double h, auto&&... terms) {
      std::array<double, 2> out = y0;
      ((out[0] += h * terms.first * terms.second[0], out[1] += h * terms.first * terms.second[1]),
       ...);
      return out;
    };
    using P = std::pair<double, const std::array<double, 2>&>;
    bool bad_stage = false;
    auto guarded = [&](double rr, const std::array<double, 2>& yy) -> std::array<double, 2> {
      if (yy[0] <= 0.0) {
        bad_stage = true;
        return {0.0, 0.0};
      }
      return ode(rr, yy);
    };
    const auto k1 = guarded(r, y);
    const auto k2 = guarded(r + h / 5, axpy(y, h, P{a21, k1}));
    const auto k3 = guarded(r + 3 * h / 10, axpy(y, h, P{a31, k1}, P{a32, k2}));
    const auto k4 = guarded(r + 4 * h / 5, axpy(y, h, P{a41, k1}, P{a42, k2}, P{a43, k3}));
    const auto k5 =
        guarded(r + 8 * h / 9, axpy(y, h, P{a51, k1}, P{a52, k2}, P{a53, k3}, P{a54, k4}));
    const auto k6 =
        guarded(r + h, axpy(y, h, P{a61, k1}, P{a62, k2}, P{a63, k3}, P{a64, k4}, P{a65, k5}));
    std::array<double, 2> y5{}, err{};
    if (!bad_stage) {
      y5 = axpy(y, h, P{b1, k1}, P{b3, k3}, P{b4, k4}, P{b5, k5}, P{b6, k6});
      const auto k7 = guarded(r + h, y5);
      if (!bad_stage) {
        err = {h * (e1 * k1[0] + e3 * k3[0] + e4 * k4[0] + e5 * k5[0] + e6 * k6[0] + e7 * k7[0]),
               h * (e1 * k1[1] + e3 * k3[1] + e4 * k4[1] + e5 * k5[1] + e6 * k6[1] + e7 * k7[1])};
      }
    }
    if (bad_stage || y5[0] <= 0.0 || !std::isfinite(y5[0]) || !std::isfinite(y5[1])) {
      h *= 0.5;
      if (h < 1e-12) {  // unresolvable: the trajectory is at the singular graze
        out.u_end = y[0];
        out.r_stop = r;
        return out;
      }
      continue;
    }
    const double sc0 = atol + rtol * std::max(std::abs(y[0]), std::abs(y5[0]));
    const double sc1 = atol + rtol * std::max(std::abs(y[1]), std::abs(y5[1]));
    const double en = std::max(std::abs(err[0]) / sc0, std::abs(err[1]) / sc1);
    if (en <= 1.0) {
      r += h;
      y = y5;
      if (path_r) {
        path_r->push_back(r);
        path_u->push_back(y[0]);
      }
      if (y[0] <= u_floor) {
        out.u_end = y[0];
        out.r_stop = r;
        return out;
      }
    }
    const double fac = std::clamp(0.9 * std::pow(std::max(en, 1e-10), -0.2), 0.2, 5.0);
    h *= fac;
    if (h < 1e-12) {
      // Step collapse happens against the singularity: either creeping near
      // the graze or plunging so steeply that the crossing is certain.
      if (y[0] < std::max(1e-8, -y[1] * 1e-6)) {
        out.u_end = y[0];
        out.r_stop = r;
        return out;
      }
      h = 1e-12;
    }
  }
  throw IterationLimit("radial shooting exceeded the step budget");
}

}  // namespace detail

/// Classifier value used by the shooting scan: u(1;c) when the integration
/// reaches r = 1 with u > 0, and -(1 - r_stop) when u hits zero earlier.
/// Transversal roots of u(1;c) = 0 are exactly its continuous sign changes.
inline double shoot_classifier(const ProblemInstance& prob, int dim, double c,
                               double rtol = 1e-13, double atol = 1e-14) {
  detail::RadialOde ode{prob.lambda, prob.f.p, prob.g.theta, dim};
  auto o = detail::integrate_radial(ode, c, rtol, atol);
  return o.reached_one ? o.u_end : -(1.0 - o.r_stop);
}

/// Scans a grid of center values, collects the sign changes of u(1;c), and
/// refines each bracket by bisection until |u(1;c)| < 1e-10 (relative to the
/// center-value scale, which is the achievable integration accuracy for the
/// large-amplitude branch). Discontinuous sign changes (the trajectory family
/// that dies inside the interval without a small end value) are rejected.
inline std::vector<RadialSolution> shoot_radial(const ProblemInstance& prob, int dim,
                                                std::span<const double> center_values) {
  prob.validate();
  if (prob.family != Family::RadialShi)
    throw ConfigError("shoot_radial requires the radial_shi family");
  detail::RadialOde ode{prob.lambda, prob.f.p, prob.g.theta, dim};

  std::vector<double> phi(center_values.size());
  for (std::size_t i = 0; i < center_values.size(); ++i)
    phi[i] = shoot_classifier(prob, dim, center_values[i]);

  std::vector<RadialSolution> roots;
  for (std::size_t i = 0; i + 1 < center_values.size(); ++i) {
    if (!(phi[i] > 0.0) == !(phi[i + 1] > 0.0)) continue;
    double lo = center_values[i], hi = center_values[i + 1];
    double flo = phi[i];
    double best_c = std::numeric_limits<double>::quiet_NaN();
    double best_abs = std::numeric_limits<double>::infinity();
    auto accepted = [&] {
      return std::isfinite(best_c) && best_abs < 1e-10 * std::max(1.0, best_c);
    };
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = shoot_classifier(prob, dim, mid);
      if (fm > 0.0 && std::abs(fm) < best_abs) {
        best_abs = std::abs(fm);
        best_c = mid;
      }
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
      if (accepted()) break;
    }
    if (!accepted()) continue;  // discontinuous crossing, not a solution
    RadialSolution sol;
    sol.center_value = best_c;
    auto o = detail::integrate_radial(ode, best_c, 1e-13, 1e-14, &sol.r, &sol.u);
    sol.end_value = o.reached_one ? o.u_end : 0.0;
    bool positive_inside = true;
    for (std::size_t k = 0; k + 1 < sol.u.size(); ++k)
      if (!(sol.u[k] > 0.0)) positive_inside = false;
    if (!positive_inside) continue;
    // Deduplicate nearly identical roots from adjacent brackets.
    bool dup = false;
    for (const auto& rs : roots)
      if (std::abs(rs.center_value - best_c) <= 1e-7 * std::max(1.0, best_c)) dup = true;
    if (!dup) roots.push_back(std::move(sol));
  }
  return roots;
}

}  // namespace selab
