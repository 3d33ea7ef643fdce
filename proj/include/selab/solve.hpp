#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "selab/discrete_operator.hpp"
#include "selab/errors.hpp"
#include "selab/mesh.hpp"
#include "selab/numerics.hpp"
#include "selab/problem.hpp"

namespace selab {

enum class SolveStatus { Converged, Diverged, Stalled, NoSolutionEvidence };

inline std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::Diverged: return "diverged";
    case SolveStatus::Stalled: return "stalled";
    case SolveStatus::NoSolutionEvidence: return "no_solution_evidence";
  }
  return "?";
}

struct SolveReport {
  SolveStatus status = SolveStatus::Stalled;
  std::vector<double> solution;  // full nodal field, exact zeros on the boundary
  int iterations = 0;
  double final_residual = std::numeric_limits<double>::quiet_NaN();
  double sup_norm = std::numeric_limits<double>::quiet_NaN();
  double h1_seminorm = std::numeric_limits<double>::quiet_NaN();
  double min_interior_value = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> epsilon_schedule_used;
  double deepest_epsilon = std::numeric_limits<double>::quiet_NaN();
  double original_residual = std::numeric_limits<double>::quiet_NaN();  // exp transform only
  std::vector<std::string> notes;

  bool converged() const { return status == SolveStatus::Converged; }
};

struct SolveOptions {
  double residual_tol = 1e-10;
  int max_newton = 200;
  double norm_cap = 1e6;
  double grad_smoothing = 1e-8;  // delta in (|grad u|^2 + delta^2)^{p/2}
  int max_backtracks = 30;
  double eps_start = 1e-1;
  double eps_floor = 1e-8;
  double cauchy_tol = 1e-6;       // sup-norm agreement of successive eps solutions
  long max_picard = 200000;       // monotone iteration budget
  std::vector<double> extra_source;  // optional manufactured forcing, full nodes
};

/// Value and partial derivatives of the right-hand side at one node.
struct RhsPoint {
  double value = 0.0;
  double du = 0.0;      // d/du_i
  double dgrad2 = 0.0;  // d/d(|grad u|_i^2)
};

class RhsModel {
 public:
  virtual ~RhsModel() = default;
  virtual bool uses_gradient() const = 0;
  virtual RhsPoint eval(std::size_t node, double u, double grad2) const = 0;
  /// Singular models demand a strictly positive interior solution.
  virtual bool requires_positivity() const = 0;
  /// RHS with the singular g-term dropped (cold-start seeding).
  virtual double nonsingular_value(std::size_t node, double u, double grad2) const = 0;
};

/// RHS(x,u,|grad u|) = ag(x) g(u+eps) + af(x) f(u) + agrad(x) (|grad u|^2+d^2)^{pg/2} + a0(x).
/// Every family maps onto this template; eps enters only through g.
class SeparableRhs final : public RhsModel {
 public:
  SeparableRhs(const ProblemInstance& prob, const Mesh& mesh, double eps,
               const SolveOptions& opts)
      : g_(prob.g), f_(prob.f), eps_(eps), pg_(prob.gradient_exponent()),
        delta2_(opts.grad_smoothing * opts.grad_smoothing) {
    const std::size_t n = mesh.size();
    ag_.assign(n, 0.0);
    af_.assign(n, 0.0);
    agrad_.assign(n, 0.0);
    a0_.assign(n, 0.0);
    const auto& d = mesh.boundary_distance();
    for (std::size_t i = mesh.interior_begin(); i < mesh.interior_end(); ++i) {
      switch (prob.family) {
        case Family::Plamu:
          ag_[i] = -prob.K.eval(d[i]);
          af_[i] = prob.lambda;
          a0_[i] = prob.mu * prob.h.eval(d[i]);
          break;
        case Family::Pla:
          ag_[i] = prob.a.eval(d[i]);
          af_[i] = prob.lambda;
          break;
        case Family::Convection:
          ag_[i] = 1.0;
          af_[i] = prob.mu;
          agrad_[i] = prob.lambda;
          break;
        case Family::Ppart:
          ag_[i] = 1.0;
          agrad_[i] = prob.lambda;
          a0_[i] = prob.mu;
          break;
        case Family::WeightedConvection:
          ag_[i] = prob.p_coef.eval(d[i]);
          agrad_[i] = prob.q.eval(d[i]);
          break;
        case Family::RadialShi:
          ag_[i] = -prob.lambda;
          af_[i] = prob.lambda;
          break;
        case Family::SublinearTwoParam:
          ag_[i] = 1.0;
          af_[i] = prob.lambda;
          break;
      }
      if (!opts.extra_source.empty()) a0_[i] += opts.extra_source[i];
    }
    use_grad_ = std::any_of(agrad_.begin(), agrad_.end(), [](double v) { return v != 0.0; });
    singular_ = !g_.is_none() &&
                std::any_of(ag_.begin(), ag_.end(), [](double v) { return v != 0.0; });
  }

  bool uses_gradient() const override { return use_grad_; }

  bool requires_positivity() const override { return singular_; }

  RhsPoint eval(std::size_t i, double u, double grad2) const override {
    RhsPoint p;
    p.value = a0_[i];
    if (ag_[i] != 0.0) {
      const double s = u + eps_;
      if (!(s > 0.0)) {
        p.value = std::numeric_limits<double>::quiet_NaN();
        return p;
      }
      p.value += ag_[i] * g_.value(s);
      p.du += ag_[i] * g_.derivative(s);
    }
    if (af_[i] != 0.0) {
      if (u < 0.0 && needs_nonnegative(f_)) {
        p.value = std::numeric_limits<double>::quiet_NaN();
        return p;
      }
      p.value += af_[i] * f_.value(u);
      p.du += af_[i] * f_.derivative(u);
    }
    if (agrad_[i] != 0.0) {
      const double s2 = grad2 + delta2_;
      const double t = std::pow(s2, 0.5 * pg_);
      p.value += agrad_[i] * t;
      p.dgrad2 += agrad_[i] * 0.5 * pg_ * t / s2;
    }
    return p;
  }

  double nonsingular_value(std::size_t i, double u, double grad2) const override {
    RhsPoint p;
    p.value = a0_[i];
    if (af_[i] != 0.0 && !(u < 0.0 && needs_nonnegative(f_))) p.value += af_[i] * f_.value(u);
    if (agrad_[i] != 0.0)
      p.value += agrad_[i] * std::pow(grad2 + delta2_, 0.5 * pg_);
    return p.value;
  }

  static bool needs_nonnegative(const FSpec& f) {
    return f.form == FSpec::Form::Sublinear || f.form == FSpec::Form::Saturating;
  }

  const std::vector<double>& ag() const { return ag_; }
  const std::vector<double>& af() const { return af_; }
  const std::vector<double>& agrad() const { return agrad_; }
  const std::vector<double>& a0() const { return a0_; }
  const GSpec& g() const { return g_; }
  const FSpec& f() const { return f_; }
  double eps() const { return eps_; }

 private:
  GSpec g_;
  FSpec f_;
  double eps_;
  double pg_;
  double delta2_;
  bool use_grad_ = false;
  bool singular_ = false;
  std::vector<double> ag_, af_, agrad_, a0_;
};

/// Right-hand side of the gradient-free problem obtained from the substitution
/// v = (e^{lambda u} - 1)/lambda applied to -Delta u = g(u) + lambda|grad u|^2
/// + mu f(u): it satisfies -Delta v = (1 + lambda v)[g(u(v)) + mu f(u(v))]
/// with u(v) = ln(1 + lambda v)/lambda.
class ExpTransformedRhs final : public RhsModel {
 public:
  ExpTransformedRhs(const ProblemInstance& prob, double eps)
      : g_(prob.g), f_(prob.f), lambda_(prob.lambda), mu_(prob.mu), eps_(eps),
        constant_f_(prob.family == Family::Ppart) {}

  bool uses_gradient() const override { return false; }

  bool requires_positivity() const override { return true; }

  double nonsingular_value(std::size_t, double v, double) const override {
    const double q = 1.0 + lambda_ * v;
    if (!(q > 0.0)) return 0.0;
    const double u = std::log1p(lambda_ * v) / lambda_;
    const double fv = constant_f_ ? 1.0 : (u >= 0.0 ? f_.value(u) : 0.0);
    return q * mu_ * fv;
  }

  RhsPoint eval(std::size_t, double v, double) const override {
    RhsPoint p;
    const double q = 1.0 + lambda_ * v;
    if (!(q > 0.0)) {
      p.value = std::numeric_limits<double>::quiet_NaN();
      return p;
    }
    const double u = std::log1p(lambda_ * v) / lambda_;
    const double s = u + eps_;
    if (!(s > 0.0)) {
      p.value = std::numeric_limits<double>::quiet_NaN();
      return p;
    }
    double fv = constant_f_ ? 1.0 : f_.value(u);
    double fd = constant_f_ ? 0.0 : f_.derivative(u);
    if (!constant_f_ && u < 0.0 && SeparableRhs::needs_nonnegative(f_)) {
      p.value = std::numeric_limits<double>::quiet_NaN();
      return p;
    }
    const double gg = g_.value(s);
    const double gd = g_.derivative(s);
    p.value = q * (gg + mu_ * fv);
    // d/dv, using du/dv = 1/(1 + lambda v)
    p.du = lambda_ * (gg + mu_ * fv) + (gd + mu_ * fd);
    return p;
  }

 private:
  GSpec g_;
  FSpec f_;
  double lambda_, mu_, eps_;
  bool constant_f_;
};

namespace detail {

struct NewtonOutcome {
  SolveStatus status = SolveStatus::Stalled;
  std::vector<double> u;
  int iterations = 0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  bool used_picard_fallback = false;
};

/// Residual F = (-Delta_h) u - RHS(u) at the interior nodes. `norm` is the
/// raw sup norm; `effective_norm` subtracts the rounding floor of each row
/// (a few ulps of the term magnitudes), which is the achievable accuracy of
/// the discrete system in double precision on fine or graded meshes.
inline void eval_residual(const DiscreteOperator& op, const RhsModel& model,
                          const std::vector<double>& u, std::vector<double>& grad,
                          std::vector<double>& rhs_pointwise, std::vector<double>& F,
                          double& norm, double* effective_norm = nullptr) {
  const Mesh& mesh = op.mesh();
  const std::size_t ib = op.interior_begin();
  const std::size_t m = op.interior_count();
  const bool with_grad = model.uses_gradient();
  if (with_grad) grad = gradient_magnitude(mesh, u);
  auto au = op.apply(u);
  const auto& b = op.bands();
  F.resize(m);
  rhs_pointwise.resize(m);
  norm = 0.0;
  double eff = 0.0;
  constexpr double row_ulp = 8.0 * std::numeric_limits<double>::epsilon();
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = ib + k;
    const double g2 = with_grad ? grad[i] * grad[i] : 0.0;
    const double r = model.eval(i, u[i], g2).value;
    rhs_pointwise[k] = r;
    F[k] = au[k] - r;
    if (std::isfinite(F[k])) {
      norm = std::max(norm, std::abs(F[k]));
      if (effective_norm) {
        double rowscale = std::abs(b.diag[k] * u[i]) + std::abs(r);
        if (i > 0) rowscale += std::abs(b.sub[k] * u[i - 1]);
        rowscale += std::abs(b.super[k] * u[i + 1]);
        eff = std::max(eff, std::abs(F[k]) - row_ulp * rowscale);
      }
    } else {
      norm = std::numeric_limits<double>::infinity();
      eff = std::numeric_limits<double>::infinity();
    }
  }
  if (effective_norm) *effective_norm = std::max(eff, 0.0);
}

/// Damped Newton on (-Delta_h) u = RHS(x, u, |grad u|). The convection term is
/// linearized through its |grad u| dependence; after 3 consecutive failed line
/// searches the gradient coupling is lagged (Picard fallback).
inline NewtonOutcome newton_solve(const DiscreteOperator& op, const RhsModel& model,
                                  std::vector<double> u, const SolveOptions& opts) {
  const Mesh& mesh = op.mesh();
  const auto& x = mesh.nodes();
  const std::size_t ib = op.interior_begin();
  const std::size_t m = op.interior_count();

  NewtonOutcome out;
  std::vector<double> grad, rhs_pw, F, trial(u.size());
  double rnorm = 0.0, enorm = 0.0;
  eval_residual(op, model, u, grad, rhs_pw, F, rnorm, &enorm);
  if (!std::isfinite(rnorm)) {
    out.u = std::move(u);
    out.residual = rnorm;
    return out;
  }

  bool picard = false;
  int fails_in_row = 0;
  int no_progress = 0;
  for (int it = 1; it <= opts.max_newton; ++it) {
    out.iterations = it;
    const double scale = 1.0 + sup_norm(u);
    if (enorm <= opts.residual_tol * scale) {
      out.status = SolveStatus::Converged;
      break;
    }
    if (sup_norm(u) > opts.norm_cap) {
      out.status = SolveStatus::Diverged;
      break;
    }

    // Jacobian: operator bands minus the RHS linearization.
    TriDiag J = op.bands();
    const bool with_grad = model.uses_gradient();
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = ib + k;
      const double g2 = with_grad ? grad[i] * grad[i] : 0.0;
      const RhsPoint p = model.eval(i, u[i], g2);
      J.diag[k] -= p.du;
      if (with_grad && !picard && p.dgrad2 != 0.0 && !(i == 0 && !mesh.geometry().is_interval())) {
        const double D = centered_derivative(mesh, u, i);
        const double den = x[i + 1] - x[i - 1];
        const double c = p.dgrad2 * 2.0 * D / den;
        J.super[k] -= c;
        J.sub[k] += c;
      }
    }

    std::vector<double> delta;
    bool solved = true;
    try {
      std::vector<double> rhs(m);
      for (std::size_t k = 0; k < m; ++k) rhs[k] = -F[k];
      delta = J.solve(std::move(rhs));
    } catch (const SingularSystem&) {
      solved = false;
    }

    bool accepted = false;
    if (solved && !has_non_finite(delta)) {
      double alpha = 1.0;
      for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
        trial = u;
        for (std::size_t k = 0; k < m; ++k) trial[ib + k] += alpha * delta[k];
        double tnorm, tenorm;
        eval_residual(op, model, trial, grad, rhs_pw, F, tnorm, &tenorm);
        if (std::isfinite(tnorm) && tnorm <= (1.0 - 1e-4 * alpha) * rnorm) {
          u.swap(trial);
          rnorm = tnorm;
          enorm = tenorm;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
    }
    if (accepted) {
      fails_in_row = 0;
      no_progress = 0;
      continue;
    }
    // Restore residual state for u (grad/F refer to the last rejected trial).
    eval_residual(op, model, u, grad, rhs_pw, F, rnorm, &enorm);
    ++fails_in_row;
    ++no_progress;
    if (fails_in_row >= 3 && with_grad && !picard) {
      picard = true;
      out.used_picard_fallback = true;
      fails_in_row = 0;
      continue;
    }
    if (no_progress >= 8) break;  // stalled: no descent direction left
  }

  out.u = std::move(u);
  out.residual = rnorm;
  if (out.status == SolveStatus::Converged && model.requires_positivity()) {
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) mn = std::min(mn, out.u[ib + k]);
    if (!(mn > 0.0)) out.status = SolveStatus::NoSolutionEvidence;  // nonpositive artifact
  }
  return out;
}

inline std::vector<double> zero_field(const Mesh& mesh) {
  return std::vector<double>(mesh.size(), 0.0);
}

inline std::vector<double> init_or_zero(const Mesh& mesh, std::span<const double> init) {
  if (init.empty()) return zero_field(mesh);
  if (init.size() != mesh.size()) throw ConfigError("initial field size does not match mesh");
  std::vector<double> u(init.begin(), init.end());
  for (std::size_t i = 0; i < mesh.size(); ++i)
    if (mesh.is_dirichlet(i)) u[i] = 0.0;
  return u;
}

/// Cold start: Picard iterations u <- (-Delta_h)^{-1} [RHS(x, u, |grad u|)]_+
/// from zero. This walks into the basin of the nontrivial solution branch
/// (plain Newton from zero can sink into the dead corner at u = 0 when the
/// sublinear forms make the Jacobian indefinite at moderate amplitude) and
/// keeps the first Jacobian away from the u = 0 derivative singularities.
inline std::vector<double> cold_start(const DiscreteOperator& op, const RhsModel& model) {
  const Mesh& mesh = op.mesh();
  const std::size_t ib = op.interior_begin();
  const std::size_t m = op.interior_count();
  const bool with_grad = model.uses_gradient();
  std::vector<double> u = zero_field(mesh);
  std::vector<double> rhs(mesh.size(), 0.0), grad;
  for (int it = 0; it < 40; ++it) {
    if (with_grad) grad = gradient_magnitude(mesh, u);
    bool usable = true;
    double rhs_sup = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = ib + k;
      const double g2 = with_grad ? grad[i] * grad[i] : 0.0;
      const double v = model.eval(i, u[i], g2).value;
      if (!std::isfinite(v)) {
        usable = false;
        break;
      }
      rhs[i] = std::max(v, 0.0);
      rhs_sup = std::max(rhs_sup, rhs[i]);
    }
    if (!usable) break;
    if (it == 0 && rhs_sup == 0.0) {
      // The singular term dominates at u = 0 (g(eps) above the forcing):
      // seed from the nonsingular part so the walk can leave the origin.
      for (std::size_t k = 0; k < m; ++k)
        rhs[ib + k] = std::max(model.nonsingular_value(ib + k, 0.0, 0.0), 0.0);
    }
    auto next = linear_solve(op, rhs);
    for (auto& x : next) x = std::max(x, 0.0);
    const double change = sup_diff(next, u);
    u = std::move(next);
    if (change <= 0.02 * (1.0 + sup_norm(u))) break;
    if (sup_norm(u) > 1e7) break;  // supercritical growth: hand over as-is
  }
  return u;
}

inline void fill_report_fields(SolveReport& rep, const Mesh& mesh) {
  if (rep.solution.empty()) return;
  const std::size_t ib = mesh.interior_begin();
  rep.sup_norm = sup_norm(rep.solution);
  double mn = std::numeric_limits<double>::infinity();
  for (std::size_t i = ib; i < mesh.interior_end(); ++i) mn = std::min(mn, rep.solution[i]);
  rep.min_interior_value = mn;
  const auto w = quadrature_weights(mesh);
  const auto g = gradient_magnitude(mesh, rep.solution);
  double h1 = 0.0;
  for (std::size_t i = 0; i < mesh.size(); ++i) h1 += w[i] * g[i] * g[i];
  rep.h1_seminorm = h1;
}

}  // namespace detail

/// Damped Newton solve of the eps-regularized problem: every singular factor
/// is evaluated at u + eps and the gradient power is smoothed.
inline SolveReport solve_regularized(const ProblemInstance& prob, const Mesh& mesh, double eps,
                                     std::span<const double> init = {},
                                     const SolveOptions& opts = {}) {
  if (!(eps > 0.0)) throw ConfigError("solve_regularized requires eps > 0");
  prob.validate();
  DiscreteOperator op(mesh);
  SeparableRhs rhs(prob, mesh, eps, opts);
  auto u0 = init.empty() ? detail::cold_start(op, rhs) : detail::init_or_zero(mesh, init);
  auto res = detail::newton_solve(op, rhs, std::move(u0), opts);
  if (res.status != SolveStatus::Converged && !init.empty()) {
    // A poor warm start can sit outside the Newton basin; retry once from
    // the Picard walk.
    auto retry = detail::newton_solve(op, rhs, detail::cold_start(op, rhs), opts);
    if (retry.status == SolveStatus::Converged) res = std::move(retry);
  }
  SolveReport rep;
  rep.status = res.status;
  rep.solution = std::move(res.u);
  rep.iterations = res.iterations;
  rep.final_residual = res.residual;
  rep.epsilon_schedule_used = {eps};
  rep.deepest_epsilon = eps;
  if (res.used_picard_fallback) rep.notes.push_back("picard fallback engaged");
  detail::fill_report_fields(rep, mesh);
  return rep;
}

namespace detail {

inline std::vector<double> epsilon_schedule(const SolveOptions& opts) {
  std::vector<double> eps;
  double e = opts.eps_start;
  while (true) {
    eps.push_back(e);
    if (e <= opts.eps_floor) break;
    e *= 0.5;
  }
  return eps;
}

struct StageRecord {
  double eps;
  SolveStatus status;
  double sup;
};

/// Geometric eps-continuation shared by solve_singular and exp_transform_solve.
/// model_factory(eps) builds the RHS for one regularization level.
template <typename ModelFactory>
SolveReport eps_continuation(const Mesh& mesh, ModelFactory&& model_factory,
                             std::span<const double> init, const SolveOptions& opts) {
  DiscreteOperator op(mesh);
  const auto schedule = epsilon_schedule(opts);
  auto warm = init.empty() ? cold_start(op, *model_factory(schedule.front()))
                           : init_or_zero(mesh, init);

  std::vector<StageRecord> stages;
  std::vector<double> last_sol, prev_sol;
  SolveStatus last_status = SolveStatus::Stalled;
  SolveStatus prev_status = SolveStatus::Stalled;
  double last_residual = std::numeric_limits<double>::quiet_NaN();
  int total_iters = 0;
  double deepest_converged = std::numeric_limits<double>::quiet_NaN();

  bool first_stage = true;
  for (double eps : schedule) {
    auto model = model_factory(eps);
    auto res = newton_solve(op, *model, warm, opts);
    total_iters += res.iterations;
    if (res.status != SolveStatus::Converged && !first_stage) {
      auto retry = newton_solve(op, *model, cold_start(op, *model), opts);
      total_iters += retry.iterations;
      if (retry.status == SolveStatus::Converged) res = std::move(retry);
    }
    first_stage = false;
    stages.push_back({eps, res.status, sup_norm(res.u)});
    prev_status = last_status;
    prev_sol = last_sol;
    last_status = res.status;
    last_residual = res.residual;
    if (res.status == SolveStatus::Converged) {
      last_sol = res.u;
      warm = std::move(res.u);
      deepest_converged = eps;
    } else {
      last_sol.clear();
    }
  }

  SolveReport rep;
  rep.iterations = total_iters;
  for (const auto& s : stages) rep.epsilon_schedule_used.push_back(s.eps);
  rep.deepest_epsilon = deepest_converged;

  std::vector<double> sup_seq;
  for (const auto& s : stages)
    if (s.status == SolveStatus::Converged) sup_seq.push_back(s.sup);
  const bool any_converged = !sup_seq.empty();
  bool monotone_growth = sup_seq.size() >= 2;
  for (std::size_t i = 0; i + 1 < sup_seq.size(); ++i)
    if (sup_seq[i + 1] < sup_seq[i] - 1e-9 * (1.0 + sup_seq[i])) monotone_growth = false;

  if (!any_converged) {
    rep.status = SolveStatus::NoSolutionEvidence;
    rep.notes.push_back("every epsilon stage failed");
    return rep;
  }

  const bool tail_ok =
      last_status == SolveStatus::Converged && prev_status == SolveStatus::Converged;
  if (tail_ok) {
    const double diff = sup_diff(last_sol, prev_sol);
    if (diff < opts.cauchy_tol) {
      rep.status = SolveStatus::Converged;
      rep.solution = last_sol;
      rep.final_residual = last_residual;
      fill_report_fields(rep, mesh);
      return rep;
    }
    if (monotone_growth) {
      rep.status = SolveStatus::NoSolutionEvidence;
      rep.notes.push_back("sup norms grow across the epsilon schedule without Cauchy behavior");
      return rep;
    }
    rep.status = SolveStatus::Stalled;
    rep.notes.push_back("epsilon solutions did not become Cauchy");
    return rep;
  }

  // The chain broke before the bottom of the schedule.
  if (monotone_growth && sup_seq.back() > 1.05 * sup_seq.front()) {
    rep.status = SolveStatus::NoSolutionEvidence;
    rep.notes.push_back("sup norms grow across the epsilon schedule and deep stages fail");
    return rep;
  }
  rep.status = SolveStatus::Stalled;
  rep.notes.push_back("deepest converged epsilon: " +
                      std::to_string(deepest_converged));
  return rep;
}

}  // namespace detail

/// Solves the singular problem by the geometric eps-schedule, warm-starting
/// each level from the previous solution. Converged means the two deepest
/// eps-solutions agree to cauchy_tol in sup norm.
inline SolveReport solve_singular(const ProblemInstance& prob, const Mesh& mesh,
                                  const SolveOptions& opts = {},
                                  std::span<const double> init = {}) {
  prob.validate();
  auto rep = detail::eps_continuation(
      mesh,
      [&](double eps) { return std::make_unique<SeparableRhs>(prob, mesh, eps, opts); },
      init, opts);
  if (prob.family == Family::Plamu) {
    const double kmin = coefficient_range(prob.K, mesh).min;
    if (kmin > 0.0 && g_integral_divergent(prob.g))
      rep.notes.push_back("g_integral_divergent: K > 0 with non-integrable g");
  }
  return rep;
}

/// Exponential-substitution solver for the quadratic-gradient families.
/// Solves the transformed problem for v, back-transforms, and reports the
/// residual of the original equation as metadata.
inline SolveReport exp_transform_solve(const ProblemInstance& prob, const Mesh& mesh,
                                       const SolveOptions& opts = {},
                                       std::span<const double> init = {}) {
  prob.validate();
  const bool ok = prob.family == Family::Ppart ||
                  (prob.family == Family::Convection && prob.p_grad == 2.0);
  if (!ok) throw ConfigError("exp_transform_solve requires p_grad = 2");
  if (!(prob.lambda > 0.0)) throw ConfigError("exp_transform_solve requires lambda > 0");

  // Warm starts arrive in u variables; move them to v = (e^{lambda u}-1)/lambda.
  std::vector<double> vinit;
  if (!init.empty()) {
    vinit.assign(init.begin(), init.end());
    for (auto& v : vinit) v = std::expm1(prob.lambda * v) / prob.lambda;
  }

  auto rep = detail::eps_continuation(
      mesh, [&](double eps) { return std::make_unique<ExpTransformedRhs>(prob, eps); },
      vinit, opts);

  if (rep.converged()) {
    // Back-transform and evaluate the residual of the original equation.
    for (auto& v : rep.solution) v = std::log1p(prob.lambda * v) / prob.lambda;
    detail::fill_report_fields(rep, mesh);
    DiscreteOperator op(mesh);
    SeparableRhs orig(prob, mesh, rep.deepest_epsilon, opts);
    std::vector<double> grad, rhs_pw, F;
    double rnorm;
    detail::eval_residual(op, orig, rep.solution, grad, rhs_pw, F, rnorm);
    // Interior window d >= 0.1: the boundary layer's truncation error scales
    // like a negative power of h and would mask the agreement being measured.
    double wres = 0.0;
    const auto& dd = mesh.boundary_distance();
    for (std::size_t k = 0; k < op.interior_count(); ++k)
      if (dd[op.interior_begin() + k] >= 0.1) wres = std::max(wres, std::abs(F[k]));
    rep.original_residual = wres;
  }
  return rep;
}

/// Dispatch: quadratic-gradient families go through the exponential
/// substitution, everything else through eps-continuation.
inline SolveReport solve_auto(const ProblemInstance& prob, const Mesh& mesh,
                              const SolveOptions& opts = {}, std::span<const double> init = {}) {
  if (prob.family == Family::Ppart ||
      (prob.family == Family::Convection && prob.p_grad == 2.0))
    return exp_transform_solve(prob, mesh, opts, init);
  return solve_singular(prob, mesh, opts, init);
}

/// Sub/supersolution Picard iteration. The decreasing (singular) part of the
/// RHS is treated implicitly, which keeps every step monotone with the shift
/// sigma covering only the non-singular part; the iterates then climb from
/// the subsolution without leaving [sub, super].
inline SolveReport monotone_iterate(const ProblemInstance& prob, const Mesh& mesh,
                                    std::span<const double> sub, std::span<const double> super,
                                    const SolveOptions& opts = {}) {
  prob.validate();
  if (sub.size() != mesh.size() || super.size() != mesh.size())
    throw ConfigError("sub/super size does not match mesh");
  const std::size_t ib = mesh.interior_begin();
  const std::size_t ie = mesh.interior_end();
  const std::size_t m = ie - ib;
  for (std::size_t i = 0; i < mesh.size(); ++i)
    if (sub[i] > super[i] + 1e-14)
      throw OrderViolation("subsolution exceeds supersolution at node " + std::to_string(i));

  DiscreteOperator op(mesh);
  SeparableRhs rhs(prob, mesh, 0.0, opts);

  // Split coefficients: decreasing-in-u terms go implicit.
  std::vector<double> ag_imp(mesh.size(), 0.0), ag_exp(mesh.size(), 0.0);
  std::vector<double> af_imp(mesh.size(), 0.0), af_exp(mesh.size(), 0.0);
  for (std::size_t i = ib; i < ie; ++i) {
    ag_imp[i] = std::max(rhs.ag()[i], 0.0);
    ag_exp[i] = std::min(rhs.ag()[i], 0.0);
    af_exp[i] = std::max(rhs.af()[i], 0.0);
    af_imp[i] = std::min(rhs.af()[i], 0.0);
  }
  const bool has_implicit_g =
      std::any_of(ag_imp.begin(), ag_imp.end(), [](double v) { return v > 0.0; });

  double min_sub = std::numeric_limits<double>::infinity();
  double max_super = 0.0;
  for (std::size_t i = ib; i < ie; ++i) {
    min_sub = std::min(min_sub, sub[i]);
    max_super = std::max(max_super, super[i]);
  }
  if (has_implicit_g && !(min_sub > 0.0))
    throw OrderViolation("singular problems need a positive interior subsolution");

  // sigma: Lipschitz bound of the non-singular part on [min sub, max super].
  double lip_f = 0.0;
  if (prob.f.form != FSpec::Form::Zero && prob.f.form != FSpec::Form::One) {
    const double lo = std::max(min_sub, 1e-12);
    for (double s : logspace(lo, std::max(max_super, 2.0 * lo), 64))
      lip_f = std::max(lip_f, std::abs(prob.f.derivative(s)));
  }
  double af_max = 0.0;
  for (std::size_t i = ib; i < ie; ++i) af_max = std::max(af_max, af_exp[i]);
  const double sigma = af_max * lip_f;

  // Residual-sign diagnostics (checked and reported, not enforced).
  auto equation_residual = [&](std::span<const double> u) {
    std::vector<double> grad, rhs_pw, F;
    double norm;
    detail::eval_residual(op, rhs, std::vector<double>(u.begin(), u.end()), grad, rhs_pw, F, norm);
    return F;
  };
  SolveReport rep;
  {
    auto rs = equation_residual(sub);
    auto rS = equation_residual(super);
    std::size_t sub_ok = 0, super_ok = 0;
    for (std::size_t k = 0; k < m; ++k) {
      if (!(rs[k] > 1e-10)) ++sub_ok;
      if (!(rS[k] < -1e-10)) ++super_ok;
    }
    rep.notes.push_back("subsolution residual sign holds at " + std::to_string(sub_ok) + "/" +
                        std::to_string(m) + " nodes");
    rep.notes.push_back("supersolution residual sign holds at " + std::to_string(super_ok) + "/" +
                        std::to_string(m) + " nodes");
  }

  std::vector<double> u(sub.begin(), sub.end());
  for (std::size_t i = 0; i < mesh.size(); ++i)
    if (mesh.is_dirichlet(i)) u[i] = 0.0;
  std::vector<double> grad(mesh.size(), 0.0);
  const bool with_grad = rhs.uses_gradient();

  bool monotone_ok = true;
  long outer = 0;
  double last_diff = std::numeric_limits<double>::infinity();
  for (; outer < opts.max_picard; ++outer) {
    if (with_grad) grad = gradient_magnitude(mesh, u);
    // Explicit side: E(u_k) + sigma u_k.
    std::vector<double> rhsE(m);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = ib + k;
      double v = rhs.a0()[i] + sigma * u[i];
      if (ag_exp[i] != 0.0) v += ag_exp[i] * prob.g.value(u[i]);
      if (af_exp[i] != 0.0) v += af_exp[i] * prob.f.value(u[i]);
      if (rhs.agrad()[i] != 0.0) {
        const double s2 = grad[i] * grad[i] + opts.grad_smoothing * opts.grad_smoothing;
        v += rhs.agrad()[i] * std::pow(s2, 0.5 * prob.gradient_exponent());
      }
      rhsE[k] = v;
    }
    // Implicit solve: (A + sigma I) w - D(w) = rhsE, Newton on the diagonal
    // nonlinearity, warm-started from u.
    std::vector<double> w(u);
    double prev_fnorm = std::numeric_limits<double>::infinity();
    for (int inner = 0; inner < 60; ++inner) {
      TriDiag J = op.bands();
      std::vector<double> Fv(m);
      auto aw = op.apply(w);
      double fnorm = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const std::size_t i = ib + k;
        double dv = 0.0, val = 0.0;
        if (ag_imp[i] != 0.0) {
          val += ag_imp[i] * prob.g.value(w[i]);
          dv += ag_imp[i] * prob.g.derivative(w[i]);
        }
        if (af_imp[i] != 0.0) {
          val += af_imp[i] * prob.f.value(w[i]);
          dv += af_imp[i] * prob.f.derivative(w[i]);
        }
        Fv[k] = aw[k] + sigma * w[i] - val - rhsE[k];
        J.diag[k] += sigma - dv;
        fnorm = std::max(fnorm, std::abs(Fv[k]));
      }
      if (fnorm <= 1e-12 * (1.0 + sup_norm(w)) || !std::isfinite(fnorm)) break;
      if (inner > 4 && fnorm > 0.5 * prev_fnorm) break;  // rounding floor reached
      prev_fnorm = fnorm;
      for (auto& f : Fv) f = -f;
      auto dw = J.solve(std::move(Fv));
      double alpha = 1.0;
      for (int bt = 0; bt < 60; ++bt) {
        bool positive = true;
        if (has_implicit_g) {
          for (std::size_t k = 0; k < m && positive; ++k)
            if (ag_imp[ib + k] != 0.0 && w[ib + k] + alpha * dw[k] <= 0.0) positive = false;
        }
        if (positive) break;
        alpha *= 0.5;
      }
      for (std::size_t k = 0; k < m; ++k) w[ib + k] += alpha * dw[k];
    }

    if (has_non_finite(w)) {
      rep.notes.push_back("inner solve produced non-finite values");
      break;
    }
    // Order bookkeeping.
    double drop = 0.0, rise = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = ib + k;
      drop = std::min(drop, w[i] - u[i]);
      if (w[i] > super[i] + 1e-9 * (1.0 + std::abs(super[i])) ||
          w[i] < sub[i] - 1e-9 * (1.0 + std::abs(sub[i])))
        throw OrderViolation("iterate left the [sub, super] interval");
      rise = std::max(rise, std::abs(w[i] - u[i]));
    }
    if (drop < -1e-10 * (1.0 + sup_norm(u))) monotone_ok = false;
    u.swap(w);
    last_diff = rise;
    if (rise < 1e-10) break;
  }
  if (!monotone_ok) rep.notes.push_back("monotonicity violated beyond slack");
  rep.notes.push_back("picard iterations: " + std::to_string(outer));

  // Polish with a few full Newton steps to push the equation residual to
  // tolerance (the Picard stopping rule controls increments, not residuals).
  SolveOptions popts = opts;
  popts.max_newton = 8;
  auto polish = detail::newton_solve(op, rhs, u, popts);
  if (polish.status == SolveStatus::Converged) u = std::move(polish.u);

  std::vector<double> gradf, rhs_pw, F;
  double rnorm, enorm;
  detail::eval_residual(op, rhs, u, gradf, rhs_pw, F, rnorm, &enorm);
  rep.solution = std::move(u);
  rep.iterations = static_cast<int>(outer);
  rep.final_residual = rnorm;
  detail::fill_report_fields(rep, mesh);
  const double scale = 1.0 + rep.sup_norm;
  if (last_diff < 1e-9 && enorm <= opts.residual_tol * scale && rep.min_interior_value > 0.0)
    rep.status = SolveStatus::Converged;
  else
    rep.status = SolveStatus::Stalled;
  return rep;
}

/// Constants of the gradient-majorization inequality s^a <= C^{a/2-1} s^2 +
/// C^{a/2} and of the exact quadratic-gradient substitution.
struct ExpTransformConfig {
  double A = 0.0;
  double B = 0.0;
  double C = 1.0;
  double a = 0.0;
  double s_bar = 0.0;  // maximizer of psi(s) = s^a / (s^2 + C)

  static ExpTransformConfig exact(double lambda) {
    ExpTransformConfig c;
    c.A = lambda;
    return c;
  }

  static ExpTransformConfig majorization(double q_sup, double C, double a) {
    if (!(C > 0.0) || !(a > 0.0 && a < 1.0))
      throw ConfigError("majorization needs C > 0 and a in (0,1)");
    ExpTransformConfig c;
    c.C = C;
    c.a = a;
    c.A = q_sup * std::pow(C, 0.5 * a - 1.0);
    c.B = q_sup * std::pow(C, 0.5 * a);
    c.s_bar = std::sqrt(C * a / (2.0 - a));
    return c;
  }

  static double psi(double s, double a, double C) { return std::pow(s, a) / (s * s + C); }

  static bool inequality_holds(double s, double a, double C) {
    return std::pow(s, a) <= std::pow(C, 0.5 * a - 1.0) * s * s + std::pow(C, 0.5 * a) +
                                 1e-12 * std::pow(C, 0.5 * a);
  }
};

}  // namespace selab
