#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "selab/errors.hpp"

namespace selab {

enum class GeometryKind { Interval, RadialBall };

struct Geometry {
  GeometryKind kind = GeometryKind::Interval;
  int dimension = 1;  // spatial dimension N, RadialBall only

  static Geometry interval() { return {GeometryKind::Interval, 1}; }
  static Geometry ball(int dim) {
    if (dim < 1) throw ConfigError("RadialBall dimension must be >= 1");
    return {GeometryKind::RadialBall, dim};
  }
  bool is_interval() const { return kind == GeometryKind::Interval; }
};

/// 1D grid on the interval (0,1) or on the radial coordinate of the unit ball.
///
/// Interval meshes carry Dirichlet nodes at both endpoints; ball meshes only at
/// r = 1 (the center r = 0 is a symmetry node and stays an unknown). Grading
/// clusters nodes toward the Dirichlet boundary: the interval uses the map
/// x = t^gamma composed symmetrically from both endpoints, the ball grades
/// single-sidedly toward r = 1. Immutable after construction.
class Mesh {
 public:
  Mesh(Geometry geom, std::vector<double> nodes, double grading)
      : geometry_(geom), nodes_(std::move(nodes)), grading_(grading) {
    if (nodes_.size() < 2) throw ConfigError("mesh needs at least 2 nodes");
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
      if (!(nodes_[i] < nodes_[i + 1])) throw ConfigError("mesh nodes must be strictly increasing");
    distance_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const double x = nodes_[i];
      distance_[i] = geometry_.is_interval() ? std::min(x, 1.0 - x) : 1.0 - x;
    }
  }

  const Geometry& geometry() const { return geometry_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& boundary_distance() const { return distance_; }
  double grading_exponent() const { return grading_; }

  /// Non-Dirichlet unknowns occupy the contiguous index range [interior_begin, interior_end).
  std::size_t interior_begin() const { return geometry_.is_interval() ? 1 : 0; }
  std::size_t interior_end() const { return nodes_.size() - 1; }
  std::size_t interior_count() const { return interior_end() - interior_begin(); }

  bool is_dirichlet(std::size_t i) const {
    return i + 1 == nodes_.size() || (geometry_.is_interval() && i == 0);
  }

  /// Width of the cell touching the Dirichlet boundary (left cell on the
  /// interval; the cell at r = 1 on the ball).
  double boundary_cell_width() const {
    return geometry_.is_interval() ? nodes_[1] - nodes_[0]
                                   : nodes_[nodes_.size() - 1] - nodes_[nodes_.size() - 2];
  }

 private:
  Geometry geometry_;
  std::vector<double> nodes_;
  std::vector<double> distance_;
  double grading_;
};

/// Builds an n-node mesh; grading_exponent = 1 gives the uniform partition.
inline Mesh build_mesh(Geometry geom, std::size_t n, double grading_exponent) {
  if (n < 8) throw ConfigError("build_mesh requires n >= 8");
  if (grading_exponent < 1.0) throw ConfigError("build_mesh requires grading_exponent >= 1");
  std::vector<double> nodes(n);
  const double g = grading_exponent;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    double x;
    if (geom.is_interval()) {
      // Symmetric composition of x = t^g from both endpoints.
      x = (t <= 0.5) ? 0.5 * std::pow(2.0 * t, g) : 1.0 - 0.5 * std::pow(2.0 * (1.0 - t), g);
    } else {
      // Single-sided grading toward r = 1.
      x = 1.0 - std::pow(1.0 - t, g);
    }
    nodes[i] = x;
  }
  nodes.front() = 0.0;
  nodes.back() = 1.0;
  return Mesh(geom, std::move(nodes), grading_exponent);
}

/// Trapezoidal weights on the (nonuniform) grid. For RadialBall the weights
/// carry the surface-measure factor omega_N r^{N-1}, so sum_i w_i f(r_i)
/// approximates the volume integral of f(|x|) over the unit ball.
inline std::vector<double> quadrature_weights(const Mesh& mesh) {
  const auto& x = mesh.nodes();
  const std::size_t n = x.size();
  std::vector<double> w(n, 0.0);
  double surface = 1.0;
  int dim = 1;
  if (!mesh.geometry().is_interval()) {
    dim = mesh.geometry().dimension;
    surface = 2.0 * std::pow(M_PI, 0.5 * dim) / std::tgamma(0.5 * dim);
  }
  auto density = [&](std::size_t i) {
    if (mesh.geometry().is_interval()) return 1.0;
    return surface * std::pow(x[i], dim - 1);
  };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = x[i + 1] - x[i];
    w[i] += 0.5 * h * density(i);
    w[i + 1] += 0.5 * h * density(i + 1);
  }
  return w;
}

}  // namespace selab
