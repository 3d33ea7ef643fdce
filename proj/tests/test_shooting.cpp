#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "selab/shooting.hpp"

using namespace selab;

namespace {

ProblemInstance shi(double lambda) {
  ProblemInstance p;
  p.family = Family::RadialShi;
  p.f = FSpec::sublinear(0.5);
  p.g = GSpec::power(0.5);
  p.lambda = lambda;
  return p;
}

std::vector<double> centers() { return logspace(1e-2, 1e6, 600); }

}  // namespace

// Fold endpoints for p = alpha = 1/2, N = 1, frozen from the time-map oracle
// T(c) = int_0^c du / sqrt(2(V(c) - V(u))), V(u) = (2/3)u^{3/2} - 2u^{1/2}:
// lambda_0 = (min T)^2 = 6.7798, lambda_1 = T(3)^2 = 7.4593.

TEST_CASE("tiny lambda shoots no solutions") {
  REQUIRE(shoot_radial(shi(1e-3), 1, centers()).empty());
}

TEST_CASE("below the fold there are no solutions") {
  REQUIRE(shoot_radial(shi(3.39), 1, centers()).empty());  // about lambda_0 / 2
}

TEST_CASE("inside the fold window there are exactly two") {
  const auto roots = shoot_radial(shi(7.0), 1, centers());
  REQUIRE(roots.size() == 2);
  for (const auto& r : roots) {
    REQUIRE(std::abs(r.end_value) <= 1e-10 * std::max(1.0, r.center_value));
    for (std::size_t k = 0; k + 1 < r.u.size(); ++k) REQUIRE(r.u[k] > 0.0);
    REQUIRE(r.center_value > 3.0);  // both branches sit above the zero-energy center value
  }
  REQUIRE(roots[0].center_value < roots[1].center_value);
}

TEST_CASE("above the fold there is exactly one") {
  REQUIRE(shoot_radial(shi(14.92), 1, centers()).size() == 1);  // about 2 lambda_1
  REQUIRE(shoot_radial(shi(1e3), 1, centers()).size() == 1);
}

TEST_CASE("radial dimension 2 integrates through the center") {
  // Counts stay in {0,1,2}; the damping term only shifts the fold.
  for (double lam : {1.0, 20.0}) {
    const auto roots = shoot_radial(shi(lam), 2, centers());
    REQUIRE(roots.size() <= 2);
  }
}

TEST_CASE("shoot_radial validates the family") {
  ProblemInstance p;
  p.family = Family::SublinearTwoParam;
  p.f = FSpec::sublinear(0.5);
  p.g = GSpec::power(0.5);
  p.lambda = 1.0;
  REQUIRE_THROWS_AS(shoot_radial(p, 1, centers()), ConfigError);
}
