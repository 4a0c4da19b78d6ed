#include <doctest.h>

#include <cmath>

#include "xformlab/carleman.hpp"

using namespace xformlab;

namespace {

struct Setup {
  SpaceGrid s;
  TimeGrid t;
  CoefficientField a, p;
  WeightSpec w;
};

Setup setup(int n, Real lambda = 2.0) {
  const SpaceGrid s(1.0, n);
  const TimeGrid t(1.0, n);
  return {s, t, sample_coefficient([](Real) { return 1.0; }, s, Role::Diffusion),
          sample_coefficient([](Real) { return 0.0; }, s, Role::PotentialP), build_weight(s, t, 0.5, lambda)};
}

// Analytic bump [4s(1-s)]^4 [4r(1-r)]^4 on a box and its derivatives.
struct AnalyticBump {
  Real x_lo, x_hi, t_lo, t_hi;

  static void profile(Real v, Real lo, Real hi, Real& f, Real& d1, Real& d2) {
    f = d1 = d2 = 0.0;
    if (v <= lo || v >= hi) return;
    const Real L = hi - lo, s = (v - lo) / L;
    const Real g = 4.0 * s * (1.0 - s), gp = (4.0 - 8.0 * s) / L, gpp = -8.0 / (L * L);
    f = std::pow(g, 4);
    d1 = 4.0 * std::pow(g, 3) * gp;
    d2 = 12.0 * g * g * gp * gp + 4.0 * std::pow(g, 3) * gpp;
  }
};

}  // namespace

TEST_SUITE("carleman") {
  TEST_CASE("weight closed forms") {
    const SpaceGrid s(1.0, 10);
    const TimeGrid t(1.0, 10);
    const WeightSpec w = build_weight(s, t, 0.5, 2.0);
    CHECK(w.N == 16.0);
    CHECK(w.psi(5, 0) == doctest::Approx(3.0).epsilon(1e-15));
    for (int j = 0; j <= 10; ++j) {
      CHECK(w.psi(0, j) == doctest::Approx(-1.0 - s.node(j)).epsilon(1e-14));
      CHECK(w.psi(10, j) < 0.0);
      CHECK(w.alpha(3, j) == doctest::Approx(std::exp(2.0 * w.psi(3, j))).epsilon(1e-14));
      if (j > 0) {
        for (int k = 0; k <= 10; ++k) {
          CHECK((w.psi(k, j) - w.psi(k, j - 1)) / s.h() == doctest::Approx(-1.0).epsilon(1e-12));
          CHECK(w.alpha(k, j) < w.alpha(k, j - 1));
        }
      }
    }
    CHECK(w.max_alpha() == doctest::Approx(std::exp(6.0)).epsilon(1e-14));
  }

  TEST_CASE("weight with an off-centre anchor") {
    const SpaceGrid s(2.0, 20);
    const TimeGrid t(1.0, 10);
    const WeightSpec w = build_weight(s, t, 0.3, 1.0);
    CHECK(w.N == doctest::Approx(5.0 / 0.09).epsilon(1e-14));
  }

  TEST_CASE("weight errors") {
    const SpaceGrid s(1.0, 10);
    const TimeGrid t(1.0, 10);
    CHECK_THROWS_AS(build_weight(s, t, 0.0, 2.0), ValidationError);
    CHECK_THROWS_AS(build_weight(s, t, 1.0, 2.0), ValidationError);
    CHECK_THROWS_AS(build_weight(s, t, 0.5, 0.0), ValidationError);
  }

  TEST_CASE("cutoff") {
    const Cutoff mu = Cutoff::for_point(1.0, 0.5, 0.1);
    CHECK(mu.lower() == doctest::Approx(2.1));
    CHECK(mu.upper() == doctest::Approx(2.4));
    CHECK(mu(2.0) == 0.0);
    CHECK(mu(2.1) == 0.0);
    CHECK(mu(2.5) == 1.0);
    CHECK(mu(2.25) == doctest::Approx(0.5).epsilon(1e-14));
    // C^2: one-sided second differences vanish at the ends.
    auto d2 = [&](Real e) { return std::abs(mu(2.1 + 2 * e) - 2 * mu(2.1 + e) + mu(2.1)) / (e * e); };
    CHECK(d2(1e-5) < 0.2 * d2(1e-4));
    CHECK(d2(1e-6) < 0.2 * d2(1e-5));
    Real prev = 0.0;
    for (Real s = 2.1; s <= 2.4; s += 0.01) {
      CHECK(mu(s) >= prev);
      prev = mu(s);
    }
    CHECK_THROWS_AS(Cutoff::for_point(1.0, 0.5, 0.25), ValidationError);
    CHECK_THROWS_AS(Cutoff(2.0, 1.0), ValidationError);
    RealVector sv(3);
    sv << 1.0, 2.25, 3.0;
    const RealVector out = cutoff_mu(0.1, 0.5, 1.0, sv);
    CHECK(out[0] == 0.0);
    CHECK(out[2] == 1.0);
  }

  TEST_CASE("sides of the zero field vanish") {
    const Setup st = setup(40);
    const EvolutionField z(st.s, st.t);
    const CarlemanSides sides = carleman_sides(z, st.w, 1.0, Sigma::parabolic(), st.a, st.p);
    CHECK(sides.lhs == 0.0);
    CHECK(sides.rhs == 0.0);
  }

  TEST_CASE("sides are exactly quadratic in z") {
    const Setup st = setup(60);
    const EvolutionField z = sample_bump({0.3, 0.7, 0.2, 0.8, 4, 1.0}, st.s, st.t);
    EvolutionField cz = z;
    cz.values *= Complex(3.0, 0.0);
    for (const Sigma& sg : {Sigma::parabolic(), Sigma::schrodinger()}) {
      const CarlemanSides s1 = carleman_sides(z, st.w, 0.4, sg, st.a, st.p);
      const CarlemanSides s3 = carleman_sides(cz, st.w, 0.4, sg, st.a, st.p);
      CHECK(s3.lhs == doctest::Approx(9.0 * s1.lhs).epsilon(1e-14));
      CHECK(s3.rhs == doctest::Approx(9.0 * s1.rhs).epsilon(1e-14));
      CHECK(s3.log_scale == s1.log_scale);
    }
  }

  TEST_CASE("sides against analytic derivatives") {
    const Setup st = setup(400);
    const AnalyticBump ab{0.3, 0.7, 0.2, 0.8};
    const EvolutionField z = sample_bump({ab.x_lo, ab.x_hi, ab.t_lo, ab.t_hi, 4, 1.0}, st.s, st.t);
    const Real tau = 0.2;
    for (const Sigma& sg : {Sigma::parabolic(), Sigma::schrodinger()}) {
      const CarlemanSides sides = carleman_sides(z, st.w, tau, sg, st.a, st.p);
      // Midpoint rule on a finer mesh, weight shifted by the same log_scale.
      const int fine = 1200;
      const Real hf = 1.0 / fine;
      Real lhs = 0.0, rhs = 0.0;
      for (int k = 0; k < fine; ++k) {
        const Real t = (k + 0.5) * hf;
        Real ft, ft1, ft2;
        AnalyticBump::profile(t, ab.t_lo, ab.t_hi, ft, ft1, ft2);
        if (ft == 0.0 && ft1 == 0.0) continue;
        for (int j = 0; j < fine; ++j) {
          const Real x = (j + 0.5) * hf;
          Real fx, fx1, fx2;
          AnalyticBump::profile(x, ab.x_lo, ab.x_hi, fx, fx1, fx2);
          const Real psi = 3.0 - x - st.w.N * (t - 0.5) * (t - 0.5);
          const Real weight = std::exp(2.0 * tau * std::exp(2.0 * psi) - sides.log_scale);
          const Real zz = fx * ft, zx = fx1 * ft;
          const Complex pz = sg.value() * (fx * ft1) - fx2 * ft;
          lhs += (tau * zx * zx + tau * tau * tau * zz * zz) * weight;
          rhs += std::norm(pz) * weight;
        }
      }
      lhs *= hf * hf;
      rhs *= hf * hf;
      CHECK(sides.lhs == doctest::Approx(lhs).epsilon(1e-3));
      CHECK(sides.rhs == doctest::Approx(rhs).epsilon(1e-3));
    }
  }

  TEST_CASE("support violations are reported") {
    const Setup st = setup(40);
    EvolutionField z(st.s, st.t);
    z.values(10, 0) = 1.0;
    CHECK(support_violation(z).magnitude > 0.0);
    CHECK(support_violation(z).space_index == 0);
    CHECK_THROWS_AS(carleman_sides(z, st.w, 1.0, Sigma::parabolic(), st.a, st.p), ValidationError);
    // Nonzero slope at x = 0 with zero value.
    EvolutionField zs(st.s, st.t);
    zs.values(10, 1) = 1.0;
    CHECK(support_violation(zs).magnitude > 0.0);
    CHECK(support_violation(sample_bump({0.3, 0.7, 0.2, 0.8, 4, 1.0}, st.s, st.t)).magnitude == 0.0);
  }

  TEST_CASE("degenerate family") {
    const Setup st = setup(40);
    const CarlemanReport r =
        carleman_study({EvolutionField(st.s, st.t)}, st.w, {0.1, 0.2}, Sigma::parabolic(), st.a, st.p);
    CHECK(r.degenerate);
    CHECK(r.violation);
    CHECK_THROWS_AS(carleman_study({}, st.w, {0.1}, Sigma::parabolic(), st.a, st.p), ValidationError);
  }

  TEST_CASE("random bumps are seeded and inside the box") {
    const auto b1 = random_bumps(5, 7, 0.3, 0.7, 0.2, 0.8);
    const auto b2 = random_bumps(5, 7, 0.3, 0.7, 0.2, 0.8);
    REQUIRE(b1.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(b1[i].x_lo == b2[i].x_lo);
      CHECK(b1[i].t_hi == b2[i].t_hi);
      CHECK(b1[i].x_lo >= 0.3);
      CHECK(b1[i].x_hi <= 0.7);
      CHECK(b1[i].t_lo >= 0.2);
      CHECK(b1[i].t_hi <= 0.8);
    }
    CHECK(random_bumps(5, 8, 0.3, 0.7, 0.2, 0.8)[0].x_lo != b1[0].x_lo);
  }

  TEST_CASE("Carleman inequality holds for random bumps") {
    const Setup st = setup(600);
    std::vector<EvolutionField> family;
    for (const Bump& b : random_bumps(5, 7, 0.3, 0.7, 0.2, 0.8)) family.push_back(sample_bump(b, st.s, st.t));
    for (const Sigma& sg : {Sigma::parabolic(), Sigma::schrodinger()}) {
      const CarlemanReport r = carleman_study(family, st.w, {0.8, 0.1, 0.2, 0.4}, sg, st.a, st.p);
      CHECK(r.tau_grid.front() == 0.1);
      CHECK_FALSE(r.degenerate);
      CHECK(r.fitted_C > 0.0);
      CHECK(r.max_ratio <= CarlemanReport::kSlack * r.fitted_C);
      CHECK_FALSE(r.violation);
    }
  }

  TEST_CASE("scaled left side grows at most polynomially of degree three") {
    const Setup st = setup(400);
    const EvolutionField z = sample_bump({0.3, 0.7, 0.2, 0.8, 4, 1.0}, st.s, st.t);
    const std::vector<Real> taus{1.0, 2.0, 4.0, 8.0, 16.0};
    std::vector<Real> local, global, lt;
    for (Real tau : taus) {
      const CarlemanSides sides = carleman_sides(z, st.w, tau, Sigma::parabolic(), st.a, st.p);
      // Stored lhs is already scaled by the largest alpha on the integrand's support.
      local.push_back(std::log(sides.lhs));
      global.push_back(std::log(sides.lhs) + sides.log_scale - 2.0 * tau * st.w.max_alpha());
      lt.push_back(std::log(tau));
    }
    for (std::size_t i = 1; i < taus.size(); ++i) {
      CHECK((local[i] - local[i - 1]) / (lt[i] - lt[i - 1]) <= 3.2);
      CHECK((global[i] - global[i - 1]) / (lt[i] - lt[i - 1]) <= 3.2);
    }
  }

  TEST_CASE("UCP separation demo") {
    const UcpSeparation r = ucp_separation_demo(1.0, 0.5, 0.1, {1.0, 2.0, 4.0}, {1.0, 1.0});
    CHECK(r.upper_exponent == doctest::Approx(2.1));
    CHECK(r.lower_exponent == doctest::Approx(2.4));
    CHECK(r.separated);
    REQUIRE(r.crossing_tau.has_value());
    CHECK(*r.crossing_tau == 0.0);
    CHECK(r.log_lower[2] - r.log_upper[2] == doctest::Approx(2.0 * 4.0 * 0.3));

    const UcpSeparation big = ucp_separation_demo(1.0, 0.5, 0.1, {1.0}, {std::exp(6.0), 1.0});
    REQUIRE(big.crossing_tau.has_value());
    CHECK(*big.crossing_tau == doctest::Approx(6.0 / 0.6).epsilon(1e-12));

    const UcpSeparation edge = ucp_separation_demo(1.0, 0.5, 0.25, {1.0}, {1.0, 1.0});
    CHECK(edge.upper_exponent == edge.lower_exponent);
    CHECK_FALSE(edge.separated);
    CHECK_FALSE(edge.crossing_tau.has_value());

    CHECK_THROWS_AS(ucp_separation_demo(1.0, 0.5, 0.3, {1.0}, {1.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(ucp_separation_demo(1.0, 0.5, 0.0, {1.0}, {1.0, 1.0}), ValidationError);
  }

  TEST_CASE("fitted UCP constants give a finite crossing") {
    const Setup st = setup(400);
    const EvolutionField z = sample_bump({0.2, 0.8, 0.2, 0.8, 4, 1.0}, st.s, st.t);
    const std::vector<Real> taus{5.0, 10.0, 20.0, 40.0};
    const UcpConstants c = fit_ucp_constants(z, st.w, 0.5, 0.1, taus, Sigma::parabolic(), st.a, st.p);
    CHECK(c.C4 > 0.0);
    CHECK(c.C5 > 0.0);
    CHECK(std::isfinite(c.C4));
    const UcpSeparation r = ucp_separation_demo(1.0, 0.5, 0.1, taus, c);
    CHECK(r.separated);
    REQUIRE(r.crossing_tau.has_value());
    CHECK(std::isfinite(*r.crossing_tau));
    // Beyond the crossing the lower bound wins on the tabulated grid.
    for (std::size_t i = 0; i < taus.size(); ++i) {
      if (taus[i] > *r.crossing_tau) CHECK(r.log_lower[i] > r.log_upper[i]);
    }
  }
}
