#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "selab/errors.hpp"

namespace selab {

/// Tridiagonal system; sub[0] and super[m-1] are unused.
struct TriDiag {
  std::vector<double> sub, diag, super;

  std::size_t size() const { return diag.size(); }

  /// Thomas elimination. Pivot magnitudes below 1e-14 signal SingularSystem.
  std::vector<double> solve(std::vector<double> rhs) const {
    const std::size_t m = diag.size();
    std::vector<double> c(m);
    double piv = diag[0];
    if (std::abs(piv) < 1e-14) throw SingularSystem("zero pivot in tridiagonal solve");
    c[0] = super[0] / piv;
    rhs[0] /= piv;
    for (std::size_t i = 1; i < m; ++i) {
      piv = diag[i] - sub[i] * c[i - 1];
      if (std::abs(piv) < 1e-14) throw SingularSystem("zero pivot in tridiagonal solve");
      if (i + 1 < m) c[i] = super[i] / piv;
      rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / piv;
    }
    for (std::size_t i = m - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
    return rhs;
  }
};

}  // namespace selab
