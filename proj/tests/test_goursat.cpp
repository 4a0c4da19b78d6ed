#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "xformlab/goursat.hpp"

using namespace xformlab;

namespace {

CoefficientField field(const std::function<Real(Real)>& f, const SpaceGrid& g, Role r) {
  return sample_coefficient(f, g, r);
}

CoefficientField constant(Real c, const SpaceGrid& g, Role r) {
  return field([c](Real) { return c; }, g, r);
}

Real sup_diff(const Kernel& a, const Kernel& b) {
  return (a.values() - b.values()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("goursat") {
  TEST_CASE("diagonal kernel closed forms") {
    const SpaceGrid g(1.0, 64);
    const auto one = constant(1.0, g, Role::Diffusion);
    const RealVector d = diagonal_kernel(one, constant(0.5, g, Role::PotentialP), constant(2.0, g, Role::PotentialQ));
    for (int i = 0; i <= 64; ++i) CHECK(d[i] == doctest::Approx(0.75 * g.node(i)).epsilon(1e-13));

    const auto same = field([](Real x) { return std::sin(x); }, g, Role::PotentialP);
    CHECK(diagonal_kernel(one, same, same.with_role(Role::PotentialQ)).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("diagonal kernel for a = (1+x)^2 against the refined closed form") {
    // a^{-1/2} int_0^x 1 / (2 (1+s)) ds = ln(1+x) / (2 (1+x)); trapezoid error ~ 0.016 h^2.
    auto a = [](Real x) { return (1.0 + x) * (1.0 + x); };
    auto exact = [](Real x) { return std::log1p(x) / (2.0 * (1.0 + x)); };
    const SpaceGrid g(1.0, 4096);
    const RealVector d = diagonal_kernel(field(a, g, Role::Diffusion), constant(0.0, g, Role::PotentialP),
                                         constant(1.0, g, Role::PotentialQ));
    Real worst = 0.0;
    for (int i = 0; i <= g.n(); ++i) worst = std::max(worst, std::abs(d[i] - exact(g.node(i))));
    CHECK(worst < 1e-8);
  }

  TEST_CASE("equal potentials give a vanishing kernel") {
    const SpaceGrid g(1.0, 128);
    const std::function<Real(Real)> as[] = {[](Real) { return 1.0; },
                                            [](Real x) { return (1.0 + x) * (1.0 + x); },
                                            [](Real x) { return 2.0 + x * x; }};
    const std::function<Real(Real)> ps[] = {[](Real) { return 0.0; },
                                            [](Real x) { return 1.0 + x; },
                                            [](Real x) { return std::cos(3.0 * x); }};
    for (int i = 0; i < 3; ++i) {
      const auto p = field(ps[i], g, Role::PotentialP);
      const Kernel k = solve_kernel(field(as[i], g, Role::Diffusion), p, p.with_role(Role::PotentialQ));
      CHECK(k.values().cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("solve_kernel diagonal is the diagonal kernel, K(0,0) = 0") {
    const SpaceGrid g(1.0, 64);
    const auto a = field([](Real x) { return (1.0 + x) * (1.0 + x); }, g, Role::Diffusion);
    const auto p = field([](Real x) { return x; }, g, Role::PotentialP);
    const auto q = field([](Real x) { return 1.0 - x * x; }, g, Role::PotentialQ);
    const Kernel k = solve_kernel(a, p, q);
    CHECK(k(0, 0) == 0.0);
    CHECK(k.diagonal() == diagonal_kernel(a, p, q));
  }

  TEST_CASE("constant coefficients match the Picard oracle") {
    const SpaceGrid g(1.0, 256);
    const auto one = constant(1.0, g, Role::Diffusion);
    const Kernel k = solve_kernel(one, constant(0.0, g, Role::PotentialP), constant(1.0, g, Role::PotentialQ));
    const Kernel ref = oracle::picard_kernel([](Real) { return 0.0; }, [](Real) { return 1.0; }, g, 4);
    CHECK(sup_diff(k, ref) < 1e-4);
  }

  TEST_CASE("variable potentials with a = 1 match the Picard oracle") {
    const SpaceGrid g(1.0, 128);
    auto p = [](Real x) { return std::sin(2.0 * x); };
    auto q = [](Real x) { return 1.0 + x * x; };
    const Kernel k = solve_kernel(constant(1.0, g, Role::Diffusion), field(p, g, Role::PotentialP),
                                  field(q, g, Role::PotentialQ));
    CHECK(sup_diff(k, oracle::picard_kernel(p, q, g, 4)) < 4e-4);
  }

  TEST_CASE("manufactured solution converges at second order") {
    Real errors[3];
    int level = 0;
    for (int n : {32, 64, 128}) {
      const oracle::Manufactured mf = oracle::manufactured_goursat(n);
      errors[level++] = sup_diff(march_goursat(mf.problem), mf.exact);
    }
    const Real order1 = std::log2(errors[0] / errors[1]);
    const Real order2 = std::log2(errors[1] / errors[2]);
    CHECK(order1 == doctest::Approx(2.0).epsilon(0.15));
    CHECK(order2 == doctest::Approx(2.0).epsilon(0.15));
  }

  TEST_CASE("kernel residual is second order for variable a") {
    auto residual = [](int n) {
      const SpaceGrid g(1.0, n);
      const auto a = field([](Real x) { return (1.0 + x) * (1.0 + x); }, g, Role::Diffusion);
      const auto p = field([](Real x) { return std::cos(x); }, g, Role::PotentialP);
      const auto q = field([](Real x) { return 1.0 + x; }, g, Role::PotentialQ);
      return kernel_residual(solve_kernel(a, p, q), a, p, q);
    };
    CHECK(residual(32) / residual(64) == doctest::Approx(4.0).epsilon(0.3));
  }

  TEST_CASE("mesh condition: decreasing a is refused") {
    const SpaceGrid g(1.0, 32);
    const auto a = field([](Real x) { return 2.0 - x; }, g, Role::Diffusion);
    CHECK_FALSE(check_mesh_condition(a).satisfied);
    CHECK(check_mesh_condition(a).max_speed > 1.0);
    CHECK_THROWS_AS(solve_kernel(a, constant(0.0, g, Role::PotentialP), constant(1.0, g, Role::PotentialQ)),
                    ValidationError);
  }

  TEST_CASE("restriction to a sub-triangle reproduces the full solution") {
    const SpaceGrid g(1.0, 96);
    const auto a = field([](Real x) { return 1.0 + x; }, g, Role::Diffusion);
    const auto p = field([](Real x) { return x * x; }, g, Role::PotentialP);
    const auto q = field([](Real x) { return std::exp(-x); }, g, Role::PotentialQ);
    const Kernel full = solve_kernel(a, p, q);
    const int count = 40;
    const Kernel part = solve_kernel(a.prefix(count), p.prefix(count), q.prefix(count));
    Real worst = 0.0;
    for (int i = 0; i <= count; ++i)
      for (int j = 0; j <= i; ++j) worst = std::max(worst, std::abs(full(i, j) - part(i, j)));
    CHECK(worst <= 1e-10);
  }

  TEST_CASE("swapping p and q negates the kernel at leading order") {
    const SpaceGrid g(1.0, 128);
    const auto one = constant(1.0, g, Role::Diffusion);
    const auto p = field([](Real x) { return 0.05 * std::sin(3.0 * x); }, g, Role::PotentialP);
    const auto q = field([](Real x) { return 0.1 * x; }, g, Role::PotentialQ);
    const Kernel k1 = solve_kernel(one, p, q);
    const Kernel k2 = solve_kernel(one, q.with_role(Role::PotentialP), p.with_role(Role::PotentialQ));
    CHECK(k1.diagonal() == -k2.diagonal());
    CHECK((k1.values() + k2.values()).cwiseAbs().maxCoeff() <= 1e-3);
  }

  TEST_CASE("characteristics for constant a are straight lines") {
    for (Real c : {1.0, 4.0}) {
      const CharacteristicCurve curve = characteristic_curve([c](Real) { return c; }, 0.1);
      CHECK(curve.axis_hit == doctest::Approx(0.2).epsilon(1e-12));
      CHECK_FALSE(curve.extrapolated);
      for (std::size_t i = 0; i < curve.x.size(); ++i) {
        CHECK(curve.y[i] == doctest::Approx(0.2 - curve.x[i]).epsilon(1e-12));
      }
      CHECK(curve.y.front() == 0.1);
      for (std::size_t i = 1; i < curve.y.size(); ++i) REQUIRE(curve.y[i] < curve.y[i - 1]);
    }
  }

  TEST_CASE("characteristic for a = e^x against a step-halving oracle") {
    auto a = [](Real x) { return std::exp(x); };
    const CharacteristicCurve curve = characteristic_curve(a, 0.1);
    CHECK(std::abs(curve.axis_hit - oracle::characteristic_hit(a, 0.1, 4000)) < 1e-6);
    CHECK(curve.axis_hit > 0.1);
  }

  TEST_CASE("axis hit shrinks monotonically with the start point") {
    auto a = [](Real x) { return 1.0 + x + 0.5 * x * x; };
    Real prev = 1e300;
    for (Real d : {0.2, 0.1, 0.05, 0.025}) {
      const Real hit = characteristic_curve(a, d).axis_hit;
      CHECK(hit > d);
      CHECK(hit < prev);
      prev = hit;
    }
    CHECK(prev < 0.06);
  }

  TEST_CASE("sampled and analytic a give the same characteristic") {
    const SpaceGrid g(1.0, 512);
    auto a = [](Real x) { return std::exp(x); };
    const Real h1 = characteristic_curve(a, 0.2).axis_hit;
    const Real h2 = characteristic_curve(field(a, g, Role::Diffusion), 0.2).axis_hit;
    CHECK(std::abs(h1 - h2) < 1e-5);
  }

  TEST_CASE("kernel bound fit") {
    const SpaceGrid g64(1.0, 64);
    const auto p = constant(0.3, g64, Role::PotentialP);
    const KernelBound vac = kernel_bound_fit(solve_kernel(constant(1.0, g64, Role::Diffusion), p,
                                                          p.with_role(Role::PotentialQ)),
                                             p, p.with_role(Role::PotentialQ));
    CHECK(vac.vacuous);
    CHECK(vac.constant == 0.0);

    Real c[3];
    int i = 0;
    for (int n : {64, 128, 256}) {
      const SpaceGrid g(1.0, n);
      const auto p0 = constant(0.0, g, Role::PotentialP);
      const auto q1 = constant(1.0, g, Role::PotentialQ);
      c[i++] = kernel_bound_fit(solve_kernel(constant(1.0, g, Role::Diffusion), p0, q1), p0, q1).constant;
    }
    CHECK(std::isfinite(c[0]));
    CHECK(c[1] == doctest::Approx(c[0]).epsilon(0.1));
    CHECK(c[2] == doctest::Approx(c[1]).epsilon(0.1));
  }

  TEST_CASE("kernel bound is insensitive to the contrast at small contrast") {
    // K is linear in q - p only at leading order; the relative change of C is
    // O(contrast), so 1e-6 needs contrast ~ 1e-6.
    const SpaceGrid g(1.0, 128);
    const auto one = constant(1.0, g, Role::Diffusion);
    const auto p0 = constant(0.0, g, Role::PotentialP);
    auto fit = [&](Real c) {
      const auto q = field([c](Real x) { return c * (1.0 + x); }, g, Role::PotentialQ);
      return kernel_bound_fit(solve_kernel(one, p0, q), p0, q).constant;
    };
    CHECK(fit(2e-6) == doctest::Approx(fit(1e-6)).epsilon(1e-6));
    CHECK(fit(0.1) == doctest::Approx(fit(0.05)).epsilon(0.05));
  }
}
