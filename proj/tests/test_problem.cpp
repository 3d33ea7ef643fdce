#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "selab/numerics.hpp"
#include "selab/problem.hpp"

using namespace selab;
using Catch::Approx;

namespace {
std::vector<double> sample_grid() { return logspace(1e-6, 1e6, 121); }
}  // namespace

TEST_CASE("g_integral_divergent matches the analytic power rule") {
  for (double theta = 0.1; theta <= 2.05; theta += 0.1) {
    CAPTURE(theta);
    REQUIRE(g_integral_divergent(GSpec::power(theta)) == (theta >= 1.0));
  }
  REQUIRE_FALSE(g_integral_divergent(GSpec::log_singular()));
  REQUIRE_FALSE(g_integral_divergent(GSpec::none()));
  REQUIRE(g_integral_divergent(GSpec::power_plus_constant(1.5, 2.0)));
}

TEST_CASE("keller_osserman_integral closed forms") {
  // For g = s^{-theta}, theta < 1: value = 2 sqrt(1-theta) / (1+theta).
  for (double theta : {0.25, 0.5, 0.75}) {
    const auto ko = keller_osserman_integral(GSpec::power(theta), 1e-9);
    REQUIRE(ko.kind == KellerOsserman::Kind::Finite);
    REQUIRE(ko.value == Approx(2.0 * std::sqrt(1.0 - theta) / (1.0 + theta)).epsilon(1e-6));
  }
  const auto half = keller_osserman_integral(GSpec::power(0.5));
  REQUIRE(half.value == Approx(0.9428090416).epsilon(1e-6));
  REQUIRE(keller_osserman_integral(GSpec::power(1.0)).kind ==
          KellerOsserman::Kind::NonIntegrableInner);
  REQUIRE(keller_osserman_integral(GSpec::power(1.5)).kind ==
          KellerOsserman::Kind::NonIntegrableInner);
}

TEST_CASE("keller_osserman_integral for the shifted power form matches a direct oracle") {
  const GSpec g = GSpec::power_plus_constant(0.5, 1.0);
  const auto ko = keller_osserman_integral(g, 1e-9);
  REQUIRE(ko.kind == KellerOsserman::Kind::Finite);
  // Independent oracle: midpoint rule on a graded grid of the outer integral
  // with the analytic inner antiderivative.
  auto inner = [&](double t) { return 2.0 * std::sqrt(t) + t; };
  double oracle = 0.0;
  const std::size_t nseg = 400000;
  for (std::size_t k = 0; k < nseg; ++k) {
    const double a = std::pow(double(k) / nseg, 2.0);
    const double b = std::pow(double(k + 1) / nseg, 2.0);
    oracle += (b - a) / std::sqrt(inner(0.5 * (a + b)));
  }
  REQUIRE(ko.value == Approx(oracle).epsilon(1e-5));
}

TEST_CASE("g2 implies Keller-Osserman finiteness") {
  for (const auto& g : {GSpec::power(0.3), GSpec::power(0.7), GSpec::power_plus_constant(0.5, 3.0),
                        GSpec::log_singular()}) {
    ProblemInstance prob;
    prob.family = Family::Pla;
    prob.g = g;
    prob.f = FSpec::sublinear(0.5);
    prob.a = CoefficientSpec::constant(1.0);
    const auto rep = check_hypotheses(prob, sample_grid());
    if (rep.g2 == Tri::True) {
      REQUIRE(rep.keller_osserman.kind == KellerOsserman::Kind::Finite);
      REQUIRE(rep.g2_implies_ko_ok);
    }
  }
}

TEST_CASE("hypothesis flags for the power nonlinearities") {
  ProblemInstance prob;
  prob.family = Family::SublinearTwoParam;
  prob.g = GSpec::power(0.5);
  prob.f = FSpec::sublinear(0.5);
  const auto rep = check_hypotheses(prob, sample_grid());
  REQUIRE(rep.g1 == Tri::True);
  REQUIRE(rep.g2 == Tri::True);
  REQUIRE(rep.g2_alpha == Approx(0.5));
  REQUIRE(rep.f1 == Tri::True);
  REQUIRE(rep.f2 == Tri::True);
  REQUIRE(rep.f7 == Tri::True);
  REQUIRE(rep.f5 == Tri::False);
  REQUIRE(rep.g_integral_divergent == false);
}

TEST_CASE("hypothesis flags for the saturating form") {
  ProblemInstance prob;
  prob.family = Family::Pla;
  prob.g = GSpec::power(0.5);
  prob.a = CoefficientSpec::constant(1.0);
  prob.f = FSpec::saturating(1.0);
  const auto rep = check_hypotheses(prob, sample_grid());
  REQUIRE(rep.f5 == Tri::True);
  REQUIRE(rep.f3 == Tri::True);
  REQUIRE(rep.f3_limit == Approx(1.0));
  REQUIRE(rep.f1 == Tri::False);
  REQUIRE(rep.f2 == Tri::False);
  REQUIRE(rep.f4 == Tri::False);  // f(s)/s vanishes at the origin
}

TEST_CASE("hypothesis flags for the linear form") {
  ProblemInstance prob;
  prob.family = Family::Pla;
  prob.g = GSpec::power(0.5);
  prob.a = CoefficientSpec::constant(1.0);
  prob.f = FSpec::linear(2.0);
  const auto rep = check_hypotheses(prob, sample_grid());
  REQUIRE(rep.f1 == Tri::True);  // constant ratio is weakly nonincreasing
  REQUIRE(rep.f3 == Tri::True);
  REQUIRE(rep.f3_limit == Approx(2.0));
  REQUIRE(rep.f4 == Tri::True);
  REQUIRE(rep.f5 == Tri::True);
  REQUIRE(rep.f2 == Tri::False);
}

TEST_CASE("hypothesis report is deterministic") {
  ProblemInstance prob;
  prob.family = Family::SublinearTwoParam;
  prob.g = GSpec::power(0.5);
  prob.f = FSpec::sublinear(0.5);
  const auto a = check_hypotheses(prob, sample_grid());
  const auto b = check_hypotheses(prob, sample_grid());
  REQUIRE(a.f1 == b.f1);
  REQUIRE(a.g2_alpha == b.g2_alpha);
  REQUIRE(a.keller_osserman.value == b.keller_osserman.value);
}

TEST_CASE("g4 needs gamma above max{1, beta+1}") {
  ProblemInstance w;
  w.family = Family::WeightedConvection;
  w.a_grad = 0.5;
  w.q = CoefficientSpec::constant(1.0);
  w.p_coef = CoefficientSpec::distance_power(1, 0.0);
  w.g = GSpec::power(2.0);
  REQUIRE_NOTHROW(w.validate());
  REQUIRE(check_hypotheses(w, sample_grid()).g4 == Tri::True);

  w.g = GSpec::power(0.5);  // gamma below the threshold
  REQUIRE_THROWS_AS(w.validate(), ConfigError);

  w.g = GSpec::power(2.0);
  w.p_coef = CoefficientSpec::distance_power(1, 1.5);  // beta+1 = 2.5 > gamma
  REQUIRE_THROWS_AS(w.validate(), ConfigError);
}

TEST_CASE("family validation catches malformed instances") {
  ProblemInstance shi;
  shi.family = Family::RadialShi;
  shi.f = FSpec::sublinear(0.5);
  shi.g = GSpec::power(1.5);  // alpha >= 1 is out of the shooting range
  shi.lambda = 1.0;
  REQUIRE_THROWS_AS(shi.validate(), ConfigError);

  ProblemInstance conv;
  conv.family = Family::Convection;
  conv.g = GSpec::power(0.5);
  conv.p_grad = 2.5;
  REQUIRE_THROWS_AS(conv.validate(), ConfigError);
}

TEST_CASE("distance-power coefficients hit the envelope exactly") {
  const auto mesh = build_mesh(Geometry::interval(), 65, 1.0);
  const auto c = CoefficientSpec::distance_power(-1, 2.0);
  const auto& d = mesh.boundary_distance();
  for (std::size_t i = mesh.interior_begin(); i < mesh.interior_end(); ++i)
    REQUIRE(std::abs(c.eval(d[i])) == Approx(std::pow(d[i], 2.0)).epsilon(1e-15));
  const auto r = coefficient_range(c, mesh);
  REQUIRE(r.max < 0.0);
}
