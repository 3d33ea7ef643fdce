#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "selab/discrete_operator.hpp"
#include "selab/errors.hpp"
#include "selab/mesh.hpp"
#include "selab/numerics.hpp"
#include "selab/problem.hpp"
#include "selab/solve.hpp"

namespace selab {

/// Fitted boundary decay exponent: u ~ C d(x)^sigma over the window.
struct RateFit {
  double sigma = 0.0;
  double constant = 0.0;
  double window_lo = 0.0, window_hi = 0.0;
  double fit_residual = 0.0;  // RMS of the log-log residuals
  std::size_t node_count = 0;
  double sigma_asymmetry = 0.0;  // |sigma_left - sigma_right| on the interval
};

/// Default fit window [2 * boundary cell, 0.1]: below two cells the power is
/// unresolved, above 0.1 the asymptotic regime has not set in.
inline std::pair<double, double> default_rate_window(const Mesh& mesh) {
  return {2.0 * mesh.boundary_cell_width(), 0.1};
}

/// Least-squares fit of log u against log d over the window, taken on the
/// boundary side nearest x = 0 on the interval (the other side is fitted too
/// and reported as asymmetry).
inline RateFit fit_boundary_rate(const Mesh& mesh, std::span<const double> field, double d_min,
                                 double d_max) {
  const auto& x = mesh.nodes();
  const auto& d = mesh.boundary_distance();
  const bool interval = mesh.geometry().is_interval();

  auto collect = [&](bool left_side) {
    std::vector<double> ld, lu;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      if (d[i] < d_min || d[i] > d_max || !(field[i] > 0.0)) continue;
      if (interval && left_side && x[i] >= 0.5) continue;
      if (interval && !left_side && x[i] <= 0.5) continue;
      ld.push_back(std::log(d[i]));
      lu.push_back(std::log(field[i]));
    }
    return std::pair(ld, lu);
  };

  auto [ld, lu] = collect(true);
  if (!interval) {
    // Single Dirichlet side on the ball.
    ld.clear();
    lu.clear();
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      if (d[i] < d_min || d[i] > d_max || !(field[i] > 0.0)) continue;
      ld.push_back(std::log(d[i]));
      lu.push_back(std::log(field[i]));
    }
  }
  if (ld.size() < 10) throw WindowTooSparse("rate-fit window holds fewer than 10 nodes");
  const auto fit = fit_line(ld, lu);

  RateFit out;
  out.sigma = fit.slope;
  out.constant = std::exp(fit.intercept);
  out.window_lo = d_min;
  out.window_hi = d_max;
  out.fit_residual = fit.rms_residual;
  out.node_count = ld.size();
  if (interval) {
    auto [rd, ru] = collect(false);
    if (rd.size() >= 10) {
      const auto rfit = fit_line(rd, ru);
      out.sigma_asymmetry = std::abs(fit.slope - rfit.slope);
    }
  }
  return out;
}

struct LinearBoundsResult {
  bool violation = false;  // u decays faster than linearly
  double c1 = 0.0;         // min over interior of u/d
  double c2 = 0.0;         // max over interior of u/d
  double ratio = std::numeric_limits<double>::quiet_NaN();
};

/// Constants of c1 d(x) <= u <= c2 d(x); BoundViolation flagged when c1 <= 1e-10.
inline LinearBoundsResult linear_bounds_check(const Mesh& mesh, std::span<const double> field) {
  const auto& d = mesh.boundary_distance();
  LinearBoundsResult out;
  out.c1 = std::numeric_limits<double>::infinity();
  for (std::size_t i = mesh.interior_begin(); i < mesh.interior_end(); ++i) {
    const double r = field[i] / d[i];
    out.c1 = std::min(out.c1, r);
    out.c2 = std::max(out.c2, r);
  }
  out.violation = !(out.c1 > 1e-10);
  if (!out.violation) out.ratio = out.c2 / out.c1;
  return out;
}

enum class Membership { Member, NonMember, Inconclusive };

inline std::string membership_name(Membership m) {
  switch (m) {
    case Membership::Member: return "member";
    case Membership::NonMember: return "non_member";
    case Membership::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct MembershipVerdict {
  Membership verdict = Membership::Inconclusive;
  std::vector<double> seminorm_sequence;
  std::vector<std::size_t> node_counts;
  std::vector<double> boundary_cells;  // boundary-cell widths per mesh
  double loglog_slope = 0.0;           // d log2(seminorm) / d log2(n)
};

/// Discrete H^1_0 verdict under mesh refinement: the seminorm of the solved
/// field either stabilizes (Member) or keeps growing (NonMember). The buffer
/// zone between the slope thresholds maps to Inconclusive.
inline MembershipVerdict h1_membership(const ProblemInstance& prob,
                                       std::span<const Mesh> mesh_sequence,
                                       const SolveOptions& opts = {}) {
  if (mesh_sequence.size() < 3) throw ConfigError("h1_membership needs >= 3 meshes");
  MembershipVerdict out;
  for (const auto& mesh : mesh_sequence) {
    const auto rep = solve_auto(prob, mesh, opts);
    if (!rep.converged())
      throw Error("h1_membership: solve failed (" + status_name(rep.status) + ") at n = " +
                  std::to_string(mesh.size()));
    out.seminorm_sequence.push_back(rep.h1_seminorm);
    out.node_counts.push_back(mesh.size());
    out.boundary_cells.push_back(mesh.boundary_cell_width());
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < out.seminorm_sequence.size(); ++i) {
    lx.push_back(std::log2(static_cast<double>(out.node_counts[i])));
    ly.push_back(std::log2(out.seminorm_sequence[i]));
  }
  out.loglog_slope = fit_line(lx, ly).slope;
  if (std::abs(out.loglog_slope) < 0.1)
    out.verdict = Membership::Member;
  else if (out.loglog_slope > 0.3)
    out.verdict = Membership::NonMember;
  else
    out.verdict = Membership::Inconclusive;
  return out;
}

/// Discrete H^1 seminorm of a given nodal field (quadrature of |grad u|^2).
inline double h1_seminorm_of(const Mesh& mesh, std::span<const double> field) {
  const auto w = quadrature_weights(mesh);
  const auto g = gradient_magnitude(mesh, field);
  double s = 0.0;
  for (std::size_t i = 0; i < mesh.size(); ++i) s += w[i] * g[i] * g[i];
  return s;
}

struct LazerMcKennaResult {
  enum class Verdict { Finite, Divergent, Inconclusive };
  Verdict verdict = Verdict::Inconclusive;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> values;  // per refinement level
  std::vector<std::size_t> node_counts;
};

namespace detail {

/// Integral of a positive integrand sampled at the nodes, with each cell
/// integrated under the local power model h(d) = A d^q (product trapezoid).
/// Cells touching a Dirichlet node use the exponent fitted from the two
/// nearest interior nodes; when the local model is non-integrable (q <= -1)
/// the boundary cell is omitted, which turns the value into a cutoff
/// integral whose growth under refinement signals divergence.
inline double singular_quadrature(const Mesh& mesh, std::span<const double> h) {
  const auto& d = mesh.boundary_distance();
  const std::size_t n = mesh.size();
  double total = 0.0;
  auto power_cell = [&](double d1, double h1, double d2, double h2) {
    const double lr = std::log(d2 / d1);
    if (std::abs(lr) < 1e-12 || !(h1 > 0.0) || !(h2 > 0.0))
      return 0.5 * (h1 + h2) * std::abs(d2 - d1);
    const double q = std::log(h2 / h1) / lr;
    if (std::abs(q + 1.0) < 1e-3) return h1 * d1 * std::abs(lr);
    return std::abs(h2 * d2 - h1 * d1) / std::abs(q + 1.0);
  };
  auto boundary_cell = [&](std::size_t ia, std::size_t ib) {
    // Dirichlet node at ia; fit the exponent from the pair (ib, next inward).
    const std::size_t ic = ib > ia ? ib + 1 : ib - 1;
    const double q = std::log(h[ic] / h[ib]) / std::log(d[ic] / d[ib]);
    if (q <= -0.999) return 0.0;  // non-integrable local model: cutoff
    return h[ib] * d[ib] / (q + 1.0);
  };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (mesh.is_dirichlet(i)) {
      total += boundary_cell(i, i + 1);
    } else if (mesh.is_dirichlet(i + 1)) {
      total += boundary_cell(i + 1, i);
    } else {
      total += power_cell(d[i], h[i], d[i + 1], h[i + 1]);
    }
  }
  return total;
}

}  // namespace detail

/// Quadrature of phi_1^{-s} on successively refined meshes: Finite when the
/// values stabilize (relative change < 1e-3), Divergent when they keep
/// growing by > 10% per refinement.
inline LazerMcKennaResult lazer_mckenna_check(const Mesh& base_mesh, double s, int levels) {
  if (s < 0.0) throw ConfigError("lazer_mckenna_check requires s >= 0");
  if (levels < 3) throw ConfigError("lazer_mckenna_check requires >= 3 refinement levels");
  LazerMcKennaResult out;
  double surface = 1.0;
  const bool interval = base_mesh.geometry().is_interval();
  const int dim = base_mesh.geometry().dimension;
  if (!interval) surface = 2.0 * std::pow(M_PI, 0.5 * dim) / std::tgamma(0.5 * dim);
  for (int l = 0; l < levels; ++l) {
    const std::size_t n = (base_mesh.size() - 1) * (std::size_t{1} << l) + 1;
    const Mesh mesh = build_mesh(base_mesh.geometry(), n, base_mesh.grading_exponent());
    const auto eig = principal_eigenpair(assemble(mesh));
    std::vector<double> h(mesh.size(), 0.0);
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      const double measure = interval ? 1.0 : surface * std::pow(mesh.nodes()[i], dim - 1);
      h[i] = mesh.is_dirichlet(i) ? 0.0 : measure * std::pow(eig.phi[i], -s);
    }
    out.values.push_back(detail::singular_quadrature(mesh, h));
    out.node_counts.push_back(n);
  }
  const std::size_t L = out.values.size();
  const double last_change = std::abs(out.values[L - 1] - out.values[L - 2]) /
                             std::abs(out.values[L - 1]);
  bool growing = true;
  for (std::size_t l = 1; l < L; ++l)
    if (!(out.values[l] > 1.10 * out.values[l - 1])) growing = false;
  if (last_change < 1e-3) {
    out.verdict = LazerMcKennaResult::Verdict::Finite;
    out.value = out.values.back();
  } else if (growing) {
    out.verdict = LazerMcKennaResult::Verdict::Divergent;
  }
  return out;
}

/// Residual field of the reciprocal-transform identity: for v = 1/u,
/// r2 = Delta_h v + v^{2-p} - (2/v)|grad v|^2. Against the manufactured
/// check r2 + u^{-2}(Delta_h u - u^p) the continuum terms cancel exactly,
/// so the sum converges to zero at the discretization order.
inline std::vector<double> reciprocal_residual(const Mesh& mesh, std::span<const double> u,
                                               double p) {
  DiscreteOperator op(mesh);
  std::vector<double> v(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) v[i] = 1.0 / u[i];
  const auto av = op.apply(v);  // (-Delta_h v) at interior
  const auto gv = gradient_magnitude(mesh, v);
  std::vector<double> r2(mesh.size(), 0.0);
  const std::size_t ib = mesh.interior_begin();
  for (std::size_t k = 0; k < op.interior_count(); ++k) {
    const std::size_t i = ib + k;
    r2[i] = -av[k] + std::pow(v[i], 2.0 - p) - 2.0 / v[i] * gv[i] * gv[i];
  }
  return r2;
}

/// r2 + u^{-2} (Delta_h u - u^p), the quantity that vanishes under refinement.
inline std::vector<double> reciprocal_identity_sum(const Mesh& mesh, std::span<const double> u,
                                                   double p) {
  DiscreteOperator op(mesh);
  auto r2 = reciprocal_residual(mesh, u, p);
  const auto au = op.apply(u);
  const std::size_t ib = mesh.interior_begin();
  for (std::size_t k = 0; k < op.interior_count(); ++k) {
    const std::size_t i = ib + k;
    r2[i] += (-au[k] - std::pow(u[i], p)) / (u[i] * u[i]);
  }
  return r2;
}

/// Majorant constants of the proof estimate chain: f(t) <= A t + B and
/// g(t) <= C t^{-alpha} + D.
struct EnergyBoundParams {
  double A = 0.0, B = 0.0;
  double C = 0.0, D = 0.0;
  double alpha = 0.5;
  double a_sup = 0.0;  // ||a||_inf of the singular term's weight

  static EnergyBoundParams from_problem(const ProblemInstance& prob, const Mesh& mesh) {
    EnergyBoundParams p;
    switch (prob.f.form) {
      case FSpec::Form::Zero:
        break;
      case FSpec::Form::One:
        p.B = 1.0;
        break;
      case FSpec::Form::Sublinear:  // t^q <= t + 1
        p.A = 1.0;
        p.B = 1.0;
        break;
      case FSpec::Form::Linear:
      case FSpec::Form::Saturating:
        p.A = prob.f.m;
        break;
    }
    switch (prob.g.form) {
      case GSpec::Form::None:
        break;
      case GSpec::Form::PowerSingular:
      case GSpec::Form::PowerPlusConstant:
        if (!(prob.g.theta < 1.0))
          throw ConfigError("energy bound needs g with exponent alpha in (0,1)");
        p.C = 1.0;
        p.D = prob.g.a_inf;
        p.alpha = prob.g.theta;
        break;
      case GSpec::Form::LogSingular:  // -log t <= t^{-1/2} on (0,1]
        p.C = 1.0;
        p.alpha = 0.5;
        break;
    }
    p.a_sup = prob.family == Family::Pla ? coefficient_range(prob.a, mesh).max : 1.0;
    return p;
  }

  /// Sampled verification of both majorants on t in (0, 1e6].
  bool verify(const GSpec& g, const FSpec& f) const {
    for (double t : logspace(1e-9, 1e6, 400)) {
      const double fslack = 1e-12 * (1.0 + A * t + B);
      if (f.value(t) > A * t + B + fslack) return false;
      if (!g.is_none()) {
        const double bound = C * std::pow(t, -alpha) + D;
        if (g.value(t) > bound + 1e-12 * (1.0 + bound)) return false;
      }
    }
    return true;
  }
};

struct EnergyBoundResult {
  bool holds = false;
  double margin = 0.0;
  double lhs = 0.0;   // discrete integral of |grad u|^2
  double rhs = 0.0;   // majorant chain value
  double l2_norm = 0.0;
  double rayleigh_lower = 0.0;  // lambda_1 ||u||_2^2, a floor for lhs
};

/// Discrete form of the proof's energy estimate:
/// int |grad u|^2 <= lambda A ||u||_2^2
///                   + ||a||_inf C ||u||_2^{1-alpha} |Omega|^{(1+alpha)/2}
///                   + (lambda B + ||a||_inf D) ||u||_2 |Omega|^{1/2}.
inline EnergyBoundResult energy_bound_check(const Mesh& mesh, std::span<const double> solution,
                                            const EigenPair& eigenpair,
                                            const EnergyBoundParams& params, double lambda) {
  const auto w = quadrature_weights(mesh);
  EnergyBoundResult out;
  out.lhs = h1_seminorm_of(mesh, solution);
  double m2 = 0.0, omega = 0.0;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    m2 += w[i] * solution[i] * solution[i];
    omega += w[i];
  }
  out.l2_norm = std::sqrt(m2);
  const double M = out.l2_norm;
  out.rhs = lambda * params.A * M * M +
            params.a_sup * params.C * std::pow(M, 1.0 - params.alpha) *
                std::pow(omega, 0.5 * (1.0 + params.alpha)) +
            (lambda * params.B + params.a_sup * params.D) * M * std::sqrt(omega);
  out.margin = out.rhs - out.lhs;
  out.holds = out.margin >= -1e-12 * std::abs(out.rhs);
  out.rayleigh_lower = eigenpair.lambda1 * M * M;
  return out;
}

}  // namespace selab
