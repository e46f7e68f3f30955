#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "glmvi/links.hpp"
#include "glmvi/quadrature.hpp"
#include "glmvi/vi_core.hpp"
#include "oracles.hpp"

using glmvi::Link;
using glmvi::Mat;
using glmvi::Rng;
using glmvi::Vec;
using glmvi::VectorField;

namespace {
constexpr Link kAllLinks[] = {Link::Logistic, Link::Linear, Link::Hinge, Link::Ramp, Link::Arctan};

// Deterministic Monte Carlo approximation of the population field: a fixed
// bank of regressors shared across evaluations, so the field is a genuine
// (deterministic) VectorField that estimate_modulus can probe.
VectorField mc_radial_field(Link link, int n, int bank_size, std::uint64_t seed) {
  Rng rng(seed);
  Mat bank = rng.normal_matrix(n, bank_size);
  VectorField f;
  f.dim = n;
  f.eval = [link, bank, bank_size](const Vec& z) -> Vec {
    Vec u = bank.transpose() * z;
    for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = glmvi::eval_link(link, u[j]);
    return bank * u / bank_size;
  };
  return f;
}
}  // namespace

TEST_CASE("link evaluations match their defining formulas", "[links]") {
  REQUIRE(glmvi::eval_link(Link::Logistic, 0.0) == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(glmvi::eval_link(Link::Hinge, -3.0) == 0.0);
  REQUIRE(glmvi::eval_link(Link::Ramp, 0.5) == 0.5);
  REQUIRE(glmvi::eval_link(Link::Linear, 1.7) == 1.7);
  REQUIRE(glmvi::eval_link(Link::Arctan, 1.0) == Catch::Approx(std::numbers::pi / 4));
  // overflow safety at extreme arguments
  REQUIRE(glmvi::eval_link(Link::Logistic, 800.0) == Catch::Approx(1.0));
  REQUIRE(glmvi::eval_link(Link::Logistic, -800.0) == Catch::Approx(0.0).margin(1e-300));
  REQUIRE_THROWS_AS(glmvi::eval_link(Link::Linear, std::nan("")), std::invalid_argument);
}

TEST_CASE("links are nondecreasing with the advertised ranges", "[links]") {
  for (Link link : kAllLinks) {
    double prev = glmvi::eval_link(link, -30.0);
    for (int i = -299; i <= 300; ++i) {
      double s = i / 10.0;
      double v = glmvi::eval_link(link, s);
      REQUIRE(v >= prev);
      prev = v;
      switch (link) {
        case Link::Logistic:
          REQUIRE((v > 0.0 && v < 1.0));
          break;
        case Link::Ramp:
          REQUIRE((v >= 0.0 && v <= 1.0));
          break;
        case Link::Hinge:
          REQUIRE(v >= 0.0);
          break;
        case Link::Arctan:
          REQUIRE(std::abs(v) < std::numbers::pi / 2);
          break;
        case Link::Linear:
          break;
      }
    }
  }
}

TEST_CASE("link names round-trip through the parser", "[links]") {
  for (Link link : kAllLinks) REQUIRE(glmvi::parse_link(glmvi::link_name(link)) == link);
  REQUIRE_THROWS_AS(glmvi::parse_link("probit"), std::invalid_argument);
}

TEST_CASE("diagonal fields apply the link elementwise", "[links]") {
  Vec u(3);
  u << -0.4, 0.0, 2.5;
  REQUIRE((glmvi::diagonal_field(Link::Linear, 3).eval(u) - u).norm() == 0.0);
  REQUIRE(glmvi::diagonal_field(Link::Arctan, 2).eval(Vec::Zero(2)).norm() == 0.0);
  Vec half = glmvi::diagonal_field(Link::Logistic, 3).eval(Vec::Zero(3));
  REQUIRE((half - Vec::Constant(3, 0.5)).norm() < 1e-15);
}

TEST_CASE("gauss-hermite rules integrate normal moments exactly", "[links]") {
  auto sq = [](double z) { return z * z; };
  auto quartic = [](double z) { return z * z * z * z; };
  REQUIRE(glmvi::expect_std_normal(sq, 64) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(glmvi::expect_std_normal(quartic, 64) == Catch::Approx(3.0).margin(1e-11));
  REQUIRE(glmvi::expect_std_normal([](double) { return 1.0; }, 16) ==
          Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("normal cdf matches the erf form", "[links]") {
  for (double u : {-3.0, -1.0, -0.2, 0.0, 0.7, 2.5})
    REQUIRE(glmvi::normal_cdf(u) == Catch::Approx(oracles::normal_cdf(u)).margin(1e-15));
}

TEST_CASE("radial profile has the known closed-form values", "[links]") {
  REQUIRE(glmvi::h_profile(Link::Linear, 0.8) == Catch::Approx(0.8).margin(1e-12));
  REQUIRE(glmvi::h_profile(Link::Hinge, 1.0) == Catch::Approx(0.5).margin(1e-12));
  for (Link link : kAllLinks) REQUIRE(glmvi::h_profile(link, 0.0) == 0.0);
  REQUIRE_THROWS_AS(glmvi::h_profile(Link::Linear, -0.1), std::invalid_argument);
}

TEST_CASE("radial profile agrees with Monte Carlo for every link", "[links]") {
  Rng rng(2024);
  for (Link link : kAllLinks) {
    for (double t : {0.1, 0.5, 1.0, 2.0}) {
      auto mc = oracles::h_monte_carlo(link, t, 1000000, rng);
      double quad = glmvi::h_profile(link, t);
      INFO("link=" << glmvi::link_name(link) << " t=" << t << " quad=" << quad
                   << " mc=" << mc.mean << " se=" << mc.se);
      REQUIRE(std::abs(quad - mc.mean) <= 4.0 * mc.se);
    }
  }
}

TEST_CASE("radial profile is nondecreasing and dominated by t", "[links]") {
  for (Link link : kAllLinks) {
    double prev = 0.0;
    for (int i = 1; i <= 60; ++i) {
      double t = 3.0 * i / 60;
      double h = glmvi::h_profile(link, t);
      REQUIRE(h >= prev - 1e-10);
      REQUIRE(h <= t + 1e-10);  // every implemented link is 1-Lipschitz
      prev = h;
    }
  }
}

TEST_CASE("profile ordering across links", "[links]") {
  for (int i = 1; i <= 30; ++i) {
    double t = 0.1 * i;
    double lin = glmvi::h_profile(Link::Linear, t);
    double hinge = glmvi::h_profile(Link::Hinge, t);
    double logi = glmvi::h_profile(Link::Logistic, t);
    REQUIRE(hinge == Catch::Approx(lin / 2).margin(1e-12));
    REQUIRE(lin >= hinge);
    REQUIRE(hinge >= logi - 1e-10);
  }
}

TEST_CASE("modulus profile for the closed-form links", "[links]") {
  for (double R : {0.3, 1.0, 2.0, 3.0}) {
    REQUIRE(glmvi::modulus_profile(Link::Linear, R) == Catch::Approx(1.0).margin(1e-6));
    REQUIRE(glmvi::modulus_profile(Link::Hinge, R) == Catch::Approx(0.5).margin(1e-6));
  }
  REQUIRE_THROWS_AS(glmvi::modulus_profile(Link::Linear, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(glmvi::modulus_profile(Link::Linear, 1.0, 8), std::invalid_argument);
}

TEST_CASE("logistic modulus approaches the slope at zero", "[links]") {
  // h'(0) = E{zeta^2} f'(0) = 1/4 for the logistic link.
  REQUIRE(glmvi::modulus_profile(Link::Logistic, 1e-3) == Catch::Approx(0.25).margin(1e-3));
}

TEST_CASE("modulus profile decreases with the radius for sigmoid links", "[links]") {
  double prev = glmvi::modulus_profile(Link::Logistic, 0.25);
  for (double R : {0.5, 1.0, 2.0, 3.0}) {
    double cur = glmvi::modulus_profile(Link::Logistic, R);
    REQUIRE(cur <= prev + 1e-9);
    prev = cur;
  }
}

TEST_CASE("sampled modulus of the Monte Carlo field matches the profile", "[links]") {
  const int n = 5;
  for (Link link : {Link::Linear, Link::Hinge}) {
    VectorField F = mc_radial_field(link, n, 40000, 314159);
    auto est = glmvi::estimate_modulus(F, glmvi::ball_set(n), 800, 17);
    double reference = glmvi::modulus_profile(link, 1.0);
    INFO("link=" << glmvi::link_name(link) << " est=" << est.modulus_lower
                 << " profile=" << reference);
    REQUIRE(est.modulus_lower == Catch::Approx(reference).epsilon(0.10));
  }
}

TEST_CASE("radial field points along z with magnitude h", "[links]") {
  const int n = 6;
  VectorField F = glmvi::radial_field(Link::Logistic, n);
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    Vec z = rng.normal_vector(n);
    Vec out = F.eval(z);
    double r = z.norm();
    REQUIRE((out - glmvi::h_profile(Link::Logistic, r) / r * z).norm() < 1e-12);
  }
  REQUIRE(F.eval(Vec::Zero(n)).norm() == 0.0);
}

TEST_CASE("smallest link slope over a symmetric window", "[links]") {
  REQUIRE(glmvi::link_slope_min(Link::Linear, 5.0) == 1.0);
  REQUIRE(glmvi::link_slope_min(Link::Hinge, 0.5) == 0.0);
  REQUIRE(glmvi::link_slope_min(Link::Hinge, 0.0) == 1.0);
  REQUIRE(glmvi::link_slope_min(Link::Arctan, 2.0) == Catch::Approx(0.2));
  double p = glmvi::eval_link(Link::Logistic, 3.0);
  REQUIRE(glmvi::link_slope_min(Link::Logistic, 3.0) == Catch::Approx(p * (1 - p)));
  REQUIRE_THROWS_AS(glmvi::link_slope_min(Link::Linear, -1.0), std::invalid_argument);
}
