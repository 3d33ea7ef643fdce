#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "selab/errors.hpp"
#include "selab/mesh.hpp"
#include "selab/numerics.hpp"
#include "selab/tridiag.hpp"

namespace selab {

/// Discrete negative Laplacian with homogeneous Dirichlet conditions:
/// -u'' on the interval, -u'' - ((N-1)/r) u' on the ball, on the 3-point
/// nonuniform stencil. Rows are indexed by interior nodes; the radial center
/// r = 0 uses the symmetry-regularized row -2N (u_1 - u_0) / h^2.
/// Immutable after assembly.
class DiscreteOperator {
 public:
  explicit DiscreteOperator(const Mesh& mesh) : mesh_(&mesh) {
    const auto& x = mesh.nodes();
    const std::size_t ib = mesh.interior_begin();
    const std::size_t m = mesh.interior_count();
    bands_.sub.assign(m, 0.0);
    bands_.diag.assign(m, 0.0);
    bands_.super.assign(m, 0.0);
    const bool radial = !mesh.geometry().is_interval();
    const int dim = mesh.geometry().dimension;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = ib + k;
      if (radial && i == 0) {
        const double h = x[1] - x[0];
        bands_.diag[k] = 2.0 * dim / (h * h);
        bands_.super[k] = -2.0 * dim / (h * h);
        continue;
      }
      const double hm = x[i] - x[i - 1];
      const double hp = x[i + 1] - x[i];
      // -u''
      bands_.sub[k] = -2.0 / (hm * (hm + hp));
      bands_.diag[k] = 2.0 / (hm * hp);
      bands_.super[k] = -2.0 / (hp * (hm + hp));
      if (radial && dim > 1) {
        // -((N-1)/r) u' with the centered nonuniform first derivative.
        const double c = (dim - 1) / x[i];
        bands_.sub[k] += c * hp / (hm * (hm + hp));
        bands_.diag[k] -= c * (hp - hm) / (hm * hp);
        bands_.super[k] -= c * hm / (hp * (hm + hp));
      }
    }
  }

  const Mesh& mesh() const { return *mesh_; }
  std::size_t interior_count() const { return bands_.size(); }
  std::size_t interior_begin() const { return mesh_->interior_begin(); }
  const TriDiag& bands() const { return bands_; }

  /// (-Delta_h u) at interior nodes, for a full nodal field u.
  void apply(std::span<const double> u_full, std::span<double> out_interior) const {
    const std::size_t ib = interior_begin();
    const std::size_t m = interior_count();
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = ib + k;
      double v = bands_.diag[k] * u_full[i];
      if (i > 0) v += bands_.sub[k] * u_full[i - 1];
      v += bands_.super[k] * u_full[i + 1];
      out_interior[k] = v;
    }
  }

  std::vector<double> apply(std::span<const double> u_full) const {
    std::vector<double> out(interior_count());
    apply(u_full, out);
    return out;
  }

 private:
  const Mesh* mesh_;
  TriDiag bands_;
};

inline DiscreteOperator assemble(const Mesh& mesh) { return DiscreteOperator(mesh); }

/// Nodal |grad u| for a full field (boundary values included). Centered
/// differences inside, one-sided second order at the boundary nodes and the
/// nodes adjacent to them; the radial center returns 0 by symmetry.
inline std::vector<double> gradient_magnitude(const Mesh& mesh, std::span<const double> u) {
  const auto& x = mesh.nodes();
  const std::size_t n = x.size();
  std::vector<double> g(n, 0.0);
  auto one_sided = [&](std::size_t i0, std::size_t i1, std::size_t i2) {
    // derivative at x[i0] from the stencil {i0, i1, i2}
    const double h1 = x[i1] - x[i0];
    const double h2 = x[i2] - x[i1];
    return -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * u[i0] + (h1 + h2) / (h1 * h2) * u[i1] -
           h1 / (h2 * (h1 + h2)) * u[i2];
  };
  auto one_sided_rev = [&](std::size_t i0, std::size_t i1, std::size_t i2) {
    // derivative at x[i0] from the stencil {i0, i1, i2} with i1, i2 to the left
    const double h1 = x[i0] - x[i1];
    const double h2 = x[i1] - x[i2];
    return (2.0 * h1 + h2) / (h1 * (h1 + h2)) * u[i0] - (h1 + h2) / (h1 * h2) * u[i1] +
           h1 / (h2 * (h1 + h2)) * u[i2];
  };
  const bool interval = mesh.geometry().is_interval();
  for (std::size_t i = 0; i < n; ++i) {
    double d;
    if (!interval && i == 0) {
      d = 0.0;  // u'(0) = 0 at the radial center
    } else if (interval && i <= 1) {
      d = one_sided(i, i + 1, i + 2);
    } else if (i + 2 >= n) {
      d = one_sided_rev(i, i - 1, i - 2);
    } else {
      const double hm = x[i] - x[i - 1];
      const double hp = x[i + 1] - x[i];
      d = -hp / (hm * (hm + hp)) * u[i - 1] + (hp - hm) / (hm * hp) * u[i] +
          hm / (hp * (hm + hp)) * u[i + 1];
    }
    g[i] = std::abs(d);
  }
  return g;
}

/// Signed centered derivative at one interior node (used by Newton couplings).
inline double centered_derivative(const Mesh& mesh, std::span<const double> u, std::size_t i) {
  const auto& x = mesh.nodes();
  if (!mesh.geometry().is_interval() && i == 0) return 0.0;
  const double hm = x[i] - x[i - 1];
  const double hp = x[i + 1] - x[i];
  return -hp / (hm * (hm + hp)) * u[i - 1] + (hp - hm) / (hm * hp) * u[i] +
         hm / (hp * (hm + hp)) * u[i + 1];
}

/// Direct tridiagonal solve of (-Delta_h) u = rhs with zero Dirichlet data.
/// rhs is a full nodal field; entries at Dirichlet nodes are ignored.
inline std::vector<double> linear_solve(const DiscreteOperator& op, std::span<const double> rhs) {
  const std::size_t ib = op.interior_begin();
  const std::size_t m = op.interior_count();
  std::vector<double> r(m);
  for (std::size_t k = 0; k < m; ++k) r[k] = rhs[ib + k];
  auto sol = op.bands().solve(std::move(r));
  std::vector<double> full(op.mesh().size(), 0.0);
  for (std::size_t k = 0; k < m; ++k) full[ib + k] = sol[k];
  return full;
}

/// Principal Dirichlet eigenpair (lambda_1, phi_1), phi_1 > 0, sup-normalized.
struct EigenPair {
  double lambda1 = 0.0;
  std::vector<double> phi;  // full nodal field
  double residual = 0.0;    // ||(-Delta_h) phi - lambda1 phi||_inf
  int iterations = 0;
  double c1 = 0.0, c2 = 0.0;  // bounds in c1 d(x) <= phi <= c2 d(x)
};

/// Inverse power iteration with a positive start; stops when successive
/// Rayleigh quotients agree to tol (relative) and the sup-norm residual is
/// below 1e-8 * lambda1.
inline EigenPair principal_eigenpair(const DiscreteOperator& op, double tol = 1e-12) {
  const Mesh& mesh = op.mesh();
  const std::size_t n = mesh.size();
  const std::size_t ib = op.interior_begin();
  const std::size_t m = op.interior_count();
  const auto w = quadrature_weights(mesh);

  std::vector<double> v(n, 0.0);
  for (std::size_t k = 0; k < m; ++k) v[ib + k] = mesh.boundary_distance()[ib + k];

  auto rayleigh = [&](const std::vector<double>& u, const std::vector<double>& au) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      num += w[ib + k] * u[ib + k] * au[k];
      den += w[ib + k] * u[ib + k] * u[ib + k];
    }
    return num / den;
  };

  double rho_prev = 0.0;
  EigenPair out;
  const int max_iter = 10000;
  for (int it = 1; it <= max_iter; ++it) {
    std::vector<double> y = linear_solve(op, v);
    double ymax = sup_norm(y);
    if (!(ymax > 0.0)) throw IterationLimit("inverse iteration collapsed to zero");
    for (auto& yi : y) yi /= ymax;
    auto ay = op.apply(y);
    const double rho = rayleigh(y, ay);
    double res = 0.0;
    for (std::size_t k = 0; k < m; ++k) res = std::max(res, std::abs(ay[k] - rho * y[ib + k]));
    v = std::move(y);
    out.iterations = it;
    if (it > 1 && std::abs(rho - rho_prev) <= tol * std::abs(rho) && res <= 1e-8 * rho) {
      out.lambda1 = rho;
      out.residual = res;
      break;
    }
    rho_prev = rho;
    if (it == max_iter) throw IterationLimit("principal_eigenpair: no convergence in 10^4 iterations");
  }

  // Sign-fix positive and sup-normalize (linear_solve of a positive vector
  // stays positive, so this is a formality).
  double mx = 0.0;
  for (double x : v) mx = std::max(mx, std::abs(x));
  double sign = 0.0;
  for (std::size_t k = 0; k < m; ++k) sign += v[ib + k];
  const double scale = (sign < 0 ? -1.0 : 1.0) * mx;
  for (auto& x : v) x /= scale;
  out.phi = std::move(v);

  const auto& d = mesh.boundary_distance();
  out.c1 = std::numeric_limits<double>::infinity();
  out.c2 = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double ratio = out.phi[ib + k] / d[ib + k];
    out.c1 = std::min(out.c1, ratio);
    out.c2 = std::max(out.c2, ratio);
  }
  return out;
}

}  // namespace selab
