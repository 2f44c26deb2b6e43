#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "chtumor/model.hpp"

using namespace chtumor;
using Catch::Approx;

namespace {

const Params kRef{1.0, 1.0, 1.0, 0.5, 0.5};

void check_potential_invariants(const Potential& p) {
  for (int i = -1000; i <= 1000; ++i) {
    const double r = i * 0.005;
    // centered differences; the step is 1e-6 so kinks in ψ'' cost O(1e-6)
    const double fd = (p.psi(r + 1e-6) - p.psi(r - 1e-6)) / 2e-6;
    CHECK(std::abs(fd - p.psi_prime(r)) <= 1e-5 * std::max(1.0, std::abs(p.psi_prime(r))));
    CHECK(p.psi_prime(r) == Approx(p.beta(r) - p.lambda * r).margin(1e-12));
    CHECK(p.beta(r + 0.005) >= p.beta(r));
    CHECK(p.beta_hat(r) >= 0.0);
    const double fdb = (p.beta_hat(r + 1e-6) - p.beta_hat(r - 1e-6)) / 2e-6;
    CHECK(std::abs(fdb - p.beta(r)) <= 1e-5 * std::max(1.0, std::abs(p.beta(r))));
    CHECK(std::abs(p.beta(r)) <= p.c_beta * (1.0 + p.psi(r)));
    CHECK(p.psi(r) >= -1e-12);
    const double s = r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0);
    CHECK(p.beta(r) * s >= p.kappa_beta * std::pow(std::abs(r), p.p_beta) - p.C_beta - 1e-12);
  }
  CHECK(p.beta(0.0) == 0.0);
  CHECK(p.beta_hat(0.0) == 0.0);
}

}  // namespace

TEST_CASE("quartic potential", "[model]") {
  const auto p = make_quartic_potential();
  CHECK(p.psi(1.0) == 0.0);
  CHECK(p.psi(-1.0) == 0.0);
  CHECK(p.psi_prime(2.0) == 6.0);
  CHECK(p.beta(2.0) - p.lambda * 2.0 == 6.0);
  CHECK(p.lambda == 1.0);
  CHECK(p.p_beta == 3.0);
  CHECK(p.kappa_beta == 1.0);
  CHECK(p.C_beta == 0.0);
  for (double r : {-3.0, -0.7, 0.0, 0.4, 2.5}) CHECK(p.beta(r) * (r >= 0 ? 1 : -1) >= std::pow(std::abs(r), 3) - 1e-15);
  check_potential_invariants(p);
}

TEST_CASE("piecewise demo potential", "[model]") {
  const auto p = make_demo_potential();
  CHECK(p.psi(0.0) == 0.5);
  CHECK(p.psi(3.0) == 3.0);
  CHECK(p.psi(-3.0) == 3.0);
  // both branches meet at r = 2
  CHECK((2.0 - 1.0) * (2.0 - 1.0) == 2.0 * 2.0 - 3.0);
  CHECK(p.psi(2.0) == 1.0);
  CHECK(p.psi(1.0) == 0.0);
  CHECK(p.lambda == 2.0);
  CHECK(p.p_beta == 1.0);
  check_potential_invariants(p);
  // curvature bound is attained on the shoulders only
  CHECK(p.max_curvature(-0.2, 0.2) == -2.0);
  CHECK(p.max_curvature(-0.2, 1.0) == 2.0);
  CHECK(p.max_curvature(2.5, 4.0) == 0.0);
}

TEST_CASE("polynomial potential", "[model]") {
  // β(r) = r³ with λ = 1 reproduces the quartic
  const auto p = make_polynomial_potential({0.0, 1.0}, 1.0);
  const auto q = make_quartic_potential();
  for (double r : {-2.0, -1.0, 0.0, 0.3, 1.7}) CHECK(p.psi(r) == Approx(q.psi(r)).margin(1e-12));
  CHECK(p.p_beta == 3.0);
  check_potential_invariants(p);
  const auto sixth = make_polynomial_potential({0.5, 0.0, 2.0}, 3.0);
  CHECK(sixth.p_beta == 5.0);
  check_potential_invariants(sixth);
  CHECK_THROWS_AS(make_polynomial_potential({1.0}, 2.0), ConfigError);
  CHECK_THROWS_AS(make_polynomial_potential({-1.0, 1.0}, 0.0), ConfigError);
}

TEST_CASE("proliferation switch", "[model]") {
  const auto h = make_proliferation(0.5, -2.0);
  CHECK(h(1.0) == 1.0);
  CHECK(h(-1.0) == 0.0);
  CHECK(h(0.0) == 0.5);
  CHECK(h(5.0) == 1.0);
  for (double r : {-2.0, -3.0, -100.0}) CHECK(h(r) == -0.5);

  CHECK_THROWS_AS(make_proliferation(0.5, -1.0), ConfigError);
  CHECK_THROWS_AS(make_proliferation(-0.1, -2.0), ConfigError);
  CHECK_THROWS_AS(make_proliferation(0.0, -0.5), ConfigError);
  CHECK_NOTHROW(make_proliferation(0.0, -1.0));

  for (const auto& p : {h, make_proliferation(0.0, -1.0), make_proliferation(2.0, -1.1)}) {
    double prev = p(-6.0), lip = 0.0;
    for (int i = 1; i <= 10000; ++i) {
      const double r = -6.0 + 12.0 * i / 10000;
      const double v = p(r);
      CHECK(v >= prev);
      CHECK(std::abs(v) <= std::max(1.0, p.h_star()) + 1e-15);
      lip = std::max(lip, (v - prev) / (12.0 / 10000));
      prev = v;
      const double fd = (p(r + 1e-7) - p(r - 1e-7)) / 2e-7;
      CHECK(std::abs(fd - p.h_prime(r)) < 1e-5);
    }
    CHECK(std::isfinite(lip));
  }
  // derivative is continuous at the joins
  for (double r : {1.0, -1.0, -2.0})
    CHECK(h.h_prime(r - 1e-9) == Approx(h.h_prime(r + 1e-9)).margin(1e-7));
}

TEST_CASE("certificate for the reference parameters", "[model]") {
  const auto h = make_proliferation(0.5, -2.0);
  const auto c = check_dissipativity(kRef, make_quartic_potential(), h);
  CHECK(c.dissipative());
  CHECK(c.sigma_upper_limit == Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(c.sigma_lower_limit == Approx(1.0 / 3.0).epsilon(1e-14));
  REQUIRE(c.epsilon_max);
  CHECK(*c.epsilon_max == Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(*c.epsilon == Approx(1.0 / 12.0).epsilon(1e-14));
  // T1 at ε = 1/6: max{(2/3) ln 2, (4/3) ln 2}
  CHECK(*c.T1_at_epsilon_max == Approx(4.0 / 3.0 * std::numbers::ln2).epsilon(1e-14));
  CHECK(*c.T1 == Approx(arrival_time(kRef, h, 1.0 / 12.0)).epsilon(1e-15));
  // admissibility of the chosen ε
  const double eps = *c.epsilon;
  CHECK(2 * eps <= kRef.A - kRef.P * c.sigma_upper_limit);
  CHECK(c.sigma_upper_limit + eps / kRef.P < 1.0);
  CHECK(c.sigma_lower_limit < c.sigma_upper_limit);
  // envelopes have reached the ε/P bands at T1
  CHECK(envelope_upper(kRef, h, *c.T1) <= c.sigma_upper_limit + eps / kRef.P + 1e-15);
  CHECK(envelope_lower(kRef, *c.T1) >= c.sigma_lower_limit - eps / kRef.P - 1e-15);
}

TEST_CASE("certificate failures", "[model]") {
  const auto quartic = make_quartic_potential();
  {
    const auto c = check_dissipativity(kRef, quartic, make_proliferation(0.0, -1.0));
    CHECK_FALSE(c.nutrient_decay);
    CHECK_FALSE(c.dissipative());
    CHECK_FALSE(c.epsilon);
    CHECK_FALSE(c.T1);
  }
  {
    Params p = kRef;
    p.B = 0.5;
    p.C = 1.0;
    const auto c = check_dissipativity(p, quartic, make_proliferation(1.0, -2.0));
    CHECK_FALSE(c.nutrient_decay);
    CHECK_FALSE(c.dissipative());
  }
  {
    const auto c = check_dissipativity(kRef, make_demo_potential(), make_proliferation(0.5, -2.0));
    CHECK(c.nutrient_decay);
    CHECK(c.net_apoptosis);
    CHECK_FALSE(c.superquadratic);
  }
  {
    Params p = kRef;
    p.A = 0.5;  // A < P·2/3
    const auto c = check_dissipativity(p, quartic, make_proliferation(0.5, -2.0));
    CHECK_FALSE(c.net_apoptosis);
  }
}

TEST_CASE("certificate booleans are invariant under scaling of A and P", "[model][property]") {
  const auto quartic = make_quartic_potential();
  for (int i = 0; i < 200; ++i) {
    const double t = i / 200.0;
    Params p{0.2 + 2.0 * t, 0.1 + std::fmod(7.3 * t, 2.0), 0.3 + std::fmod(3.1 * t, 1.5),
             0.1 + std::fmod(5.7 * t, 1.0), 0.05 + 0.9 * std::fmod(11.3 * t, 1.0)};
    const auto h = make_proliferation(std::fmod(13.1 * t, 1.5), -1.5);
    const auto a = check_dissipativity(p, quartic, h);
    for (double k : {0.01, 0.5, 3.0, 100.0}) {
      Params q = p;
      q.A *= k;
      q.P *= k;
      const auto b = check_dissipativity(q, quartic, h);
      CHECK(a.nutrient_decay == b.nutrient_decay);
      CHECK(a.nutrient_bound == b.nutrient_bound);
      CHECK(a.net_apoptosis == b.net_apoptosis);
      CHECK(a.superquadratic == b.superquadratic);
    }
  }
}

TEST_CASE("envelopes", "[model]") {
  const auto h = make_proliferation(0.5, -2.0);
  CHECK(envelope_upper(kRef, h, 0.0) == 1.0);
  CHECK(envelope_lower(kRef, 0.0) == 0.0);
  CHECK(envelope_upper(kRef, h, 1.0) ==
        Approx(2.0 / 3.0 + std::exp(-0.75) / 3.0).epsilon(1e-14));
  CHECK(envelope_upper(kRef, h, 1.0) == Approx(0.8241).margin(5e-5));
  CHECK(envelope_lower(kRef, 1.0) == Approx((1.0 - std::exp(-1.5)) / 3.0).epsilon(1e-14));
  CHECK(envelope_lower(kRef, 1.0) == Approx(0.2590).margin(5e-5));
  CHECK(envelope_upper(kRef, h, 1e3) == Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(envelope_lower(kRef, 1e3) == Approx(1.0 / 3.0).epsilon(1e-14));

  Params bad = kRef;
  bad.B = 0.25;
  CHECK_THROWS_AS(envelope_upper(bad, h, 1.0), DomainError);

  // defining ODEs under finite differences
  for (double t : {0.1, 0.5, 1.0, 3.0, 7.0}) {
    const double d = 1e-5;
    const double up = (envelope_upper(kRef, h, t + d) - envelope_upper(kRef, h, t - d)) / (2 * d);
    const double up_rhs = -(kRef.B - kRef.C * h.h_star()) * envelope_upper(kRef, h, t) +
                          kRef.B * kRef.sigma_s;
    CHECK(std::abs(up - up_rhs) <= 1e-6 * std::max(std::abs(up_rhs), 1e-3));
    const double lo = (envelope_lower(kRef, t + d) - envelope_lower(kRef, t - d)) / (2 * d);
    const double lo_rhs = -(kRef.B + kRef.C) * envelope_lower(kRef, t) + kRef.B * kRef.sigma_s;
    CHECK(std::abs(lo - lo_rhs) <= 1e-6 * std::max(std::abs(lo_rhs), 1e-3));
  }
}

TEST_CASE("params validation", "[model]") {
  CHECK_NOTHROW(kRef.validate());
  Params p = kRef;
  p.sigma_s = 1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = kRef;
  p.C = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
