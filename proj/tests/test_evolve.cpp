#include <doctest.h>

#include <cmath>
#include <random>

#include "xformlab/evolve.hpp"

using namespace xformlab;

namespace {

const Real kPi = 3.141592653589793;

struct ModeSetup {
  SpaceGrid s;
  TimeGrid t;
  CoefficientField a, p, b;

  ModeSetup(int n, int m, Real horizon, Real c = 0.0)
      : s(1.0, n),
        t(horizon, m),
        a(sample_coefficient([](Real) { return 1.0; }, s, Role::Diffusion)),
        p(sample_coefficient([c](Real) { return c; }, s, Role::PotentialP)),
        b(sample_coefficient([](Real x) { return std::sin(kPi * x); }, s, Role::Initial)) {}
};

Real mode_error(const Sigma& sigma, int n) {
  ModeSetup st(n, n, 0.5);
  const EvolutionField u = forward_solve(sigma, st.a, st.p, st.b, {}, st.t);
  Real err = 0.0;
  for (int k = 0; k <= n; ++k) {
    const Complex decay = std::exp(-kPi * kPi * st.t.node(k) / sigma.value());
    for (int j = 0; j <= n; ++j) {
      err = std::max(err, std::abs(u(k, j) - decay * std::sin(kPi * st.s.node(j))));
    }
  }
  return err;
}

}  // namespace

TEST_SUITE("evolve") {
  TEST_CASE("heat mode against separation of variables") {
    ModeSetup st(128, 128, 0.2);
    const EvolutionField u = forward_solve(Sigma::parabolic(), st.a, st.p, st.b, {}, st.t);
    CHECK(u.row(0) == st.b.values().cast<Complex>());
    const Complex v = u(64, 64);  // t = 0.1, x = 0.5
    CHECK(std::abs(v - std::exp(-0.1 * kPi * kPi)) < 1e-4);
  }

  TEST_CASE("potential shifts the decay rate") {
    ModeSetup st(128, 128, 0.2, 2.0);
    const EvolutionField u = forward_solve(Sigma::parabolic(), st.a, st.p, st.b, {}, st.t);
    CHECK(std::abs(u(64, 64) - std::exp(-(kPi * kPi + 2.0) * 0.1)) < 1e-4);
  }

  TEST_CASE("Schrodinger mode keeps its modulus") {
    ModeSetup st(64, 64, 1.0);
    const EvolutionField u = forward_solve(Sigma::schrodinger(), st.a, st.p, st.b, {}, st.t);
    Real worst = 0.0;
    for (int k = 0; k <= 64; ++k) {
      for (int j = 0; j <= 64; ++j) {
        worst = std::max(worst, std::abs(std::abs(u(k, j)) - std::abs(std::sin(kPi * st.s.node(j)))));
      }
    }
    CHECK(worst < 1e-10);
  }

  TEST_CASE("second-order convergence on the single mode") {
    for (const Sigma& sigma : {Sigma::parabolic(), Sigma::schrodinger()}) {
      const Real e32 = mode_error(sigma, 32), e64 = mode_error(sigma, 64), e128 = mode_error(sigma, 128);
      CHECK(e32 / e64 == doctest::Approx(4.0).epsilon(0.2));
      CHECK(e64 / e128 == doctest::Approx(4.0).epsilon(0.2));
    }
  }

  TEST_CASE("re sigma < 0 is rejected") {
    ModeSetup st(16, 16, 1.0);
    CHECK_THROWS_AS(forward_solve(Sigma(-1.0, 0.0), st.a, st.p, st.b, {}, st.t), ValidationError);
  }

  TEST_CASE("end-time anchor only for imaginary sigma; conjugate reversal is exact") {
    ModeSetup st(32, 32, 1.0, 1.5);
    CHECK_THROWS_AS(forward_solve_anchored(Sigma::parabolic(), st.a, st.p, st.b, {}, st.t, Anchor::End),
                    ValidationError);
    const EvolutionField u =
        forward_solve_anchored(Sigma::schrodinger(), st.a, st.p, st.b, {}, st.t, Anchor::End);
    CHECK((u.row(32) - st.b.values().cast<Complex>()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(step_residual(u, Sigma::schrodinger(), st.a, st.p, {}) < 1e-12);
  }

  TEST_CASE("linearity in the initial value") {
    ModeSetup st(48, 40, 0.5, 0.7);
    const auto b2 = sample_coefficient([](Real x) { return x * (1.0 - x) * std::exp(x); }, st.s, Role::Initial);
    const Real alpha = 0.3, beta = -2.1;
    const auto mix = sample_coefficient(
        [&](Real x) { return alpha * std::sin(kPi * x) + beta * x * (1.0 - x) * std::exp(x); }, st.s,
        Role::Initial);
    for (const Sigma& sigma : {Sigma::parabolic(), Sigma(1.0, 2.0)}) {
      const auto u1 = forward_solve(sigma, st.a, st.p, st.b, {}, st.t);
      const auto u2 = forward_solve(sigma, st.a, st.p, b2, {}, st.t);
      const auto u3 = forward_solve(sigma, st.a, st.p, mix, {}, st.t);
      CHECK((alpha * u1.values + beta * u2.values - u3.values).cwiseAbs().maxCoeff() < 1e-13);
    }
  }

  TEST_CASE("parabolic dissipation and Schrodinger unitarity") {
    const SpaceGrid s(1.0, 64);
    const TimeGrid t(1.0, 64);
    const auto a = sample_coefficient([](Real x) { return 1.0 + 0.5 * x; }, s, Role::Diffusion);
    const auto p = sample_coefficient([](Real x) { return 2.0 + std::sin(3.0 * x); }, s, Role::PotentialP);
    const auto b = sample_coefficient([](Real x) { return x * (1.0 - x) * (1.0 + 4.0 * x); }, s, Role::Initial);

    // The operator is self-adjoint in the inner product h sum u conj(v) / a, so
    // CN contracts (sigma = 1) or conserves (sigma = i) the matching norm.
    auto norm2 = [&](const EvolutionField& f, int k) {
      Real sum = 0.0;
      for (int j = 1; j < s.n(); ++j) sum += std::norm(f(k, j)) / a[j];
      return sum * s.h();
    };
    const auto u = forward_solve(Sigma::parabolic(), a, p, b, {}, t);
    for (int k = 1; k <= t.m(); ++k) CHECK(norm2(u, k) < norm2(u, k - 1));

    const auto w = forward_solve(Sigma::schrodinger(), a, p, b, {}, t);
    CHECK(std::abs(norm2(w, t.m()) - norm2(w, 0)) <= 1e-10 * t.horizon() * norm2(w, 0));
  }

  TEST_CASE("trace extraction") {
    ModeSetup st(128, 64, 0.25);
    const auto u = forward_solve(Sigma::parabolic(), st.a, st.p, st.b, {}, st.t);
    const CauchyTrace tr = extract_cauchy_trace(u);
    REQUIRE(tr.u0.size() == 65);
    Real worst = 0.0;
    for (int k = 0; k <= 64; ++k) {
      worst = std::max(worst, std::abs(tr.ux0[k] - kPi * std::exp(-kPi * kPi * st.t.node(k))));
    }
    CHECK(worst < 2e-3);

    BoundaryConditionSpec neumann;
    neumann.left = BoundaryCondition::neumann();
    for (int n : {32, 64}) {
      const SpaceGrid s(1.0, n);
      const TimeGrid t(0.25, n);
      const auto a = sample_coefficient([](Real) { return 1.0; }, s, Role::Diffusion);
      const auto p = sample_coefficient([](Real) { return 0.0; }, s, Role::PotentialP);
      const auto b = sample_coefficient([](Real x) { return std::cos(0.5 * kPi * x); }, s, Role::Initial);
      const auto tr2 = extract_cauchy_trace(forward_solve(Sigma::parabolic(), a, p, b, neumann, t));
      CHECK(tr2.ux0.cwiseAbs().maxCoeff() <= 2.0 * s.h() * s.h());
    }
  }

  TEST_CASE("trace stencil against a ghost-extended centered oracle") {
    // Random smooth field: the oracle evaluates the exact function one cell to
    // the left and uses the centered difference on a grid 8x finer.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<Real> coef(-1.0, 1.0);
    Real c[4];
    for (Real& v : c) v = coef(rng);
    auto f = [&](Real t, Real x) {
      return Complex(std::sin(c[0] + 2.0 * x) * std::cos(t), c[1] * x * x * x + c[2] * std::exp(x - t)) +
             c[3] * x;
    };
    auto fx_oracle = [&](Real t, Real hf) { return (f(t, hf) - f(t, -hf)) / (2.0 * hf); };
    Real prev = 0.0;
    for (int n : {16, 32, 64}) {
      const SpaceGrid s(1.0, n);
      const TimeGrid t(1.0, 8);
      EvolutionField u(s, t);
      for (int k = 0; k <= 8; ++k)
        for (int j = 0; j <= n; ++j) u.values(k, j) = f(t.node(k), s.node(j));
      const CauchyTrace tr = extract_cauchy_trace(u);
      Real err = 0.0;
      for (int k = 0; k <= 8; ++k) err = std::max(err, std::abs(tr.ux0[k] - fx_oracle(t.node(k), s.h() / 8.0)));
      if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.25));
      prev = err;
    }
  }

  TEST_CASE("pde_residual: zero field, exact mode, refinement") {
    ModeSetup st(64, 64, 0.5);
    EvolutionField zero(st.s, st.t);
    CHECK(pde_residual(zero, Sigma::parabolic(), st.a, st.p) == 0.0);

    auto exact_residual = [](int n) {
      ModeSetup m(n, n, 0.5);
      EvolutionField u(m.s, m.t);
      for (int k = 0; k <= n; ++k)
        for (int j = 0; j <= n; ++j)
          u.values(k, j) = std::exp(-kPi * kPi * m.t.node(k)) * std::sin(kPi * m.s.node(j));
      return pde_residual(u, Sigma::parabolic(), m.a, m.p);
    };
    CHECK(exact_residual(32) / exact_residual(64) == doctest::Approx(4.0).epsilon(0.2));

    auto solved_residual = [](int n) {
      ModeSetup m(n, n, 0.5);
      return pde_residual(forward_solve(Sigma::parabolic(), m.a, m.p, m.b, {}, m.t), Sigma::parabolic(), m.a, m.p);
    };
    CHECK(solved_residual(64) / solved_residual(128) == doctest::Approx(4.0).epsilon(0.2));
  }

  TEST_CASE("step residual is at round-off level") {
    ModeSetup st(64, 64, 1.0, 0.3);
    BoundaryConditionSpec bc;
    bc.right = BoundaryCondition::neumann();
    const auto u = forward_solve(Sigma(1.0, 0.5), st.a, st.p, st.b, bc, st.t);
    CHECK(step_residual(u, Sigma(1.0, 0.5), st.a, st.p, bc) < 1e-12);
  }

  TEST_CASE("prescribed boundary values are honoured") {
    ModeSetup st(32, 32, 0.5);
    ComplexVector series(33);
    for (int k = 0; k <= 32; ++k) series[k] = Complex(0.1 * st.t.node(k), 0.0);
    BoundaryConditionSpec bc;
    bc.right = BoundaryCondition::prescribed(series);
    const auto u = forward_solve(Sigma::parabolic(), st.a, st.p, st.b, bc, st.t);
    for (int k = 1; k <= 32; ++k) CHECK(std::abs(u(k, 32) - series[k]) < 1e-14);
    bc.right = BoundaryCondition::prescribed(ComplexVector::Zero(5));
    CHECK_THROWS_AS(forward_solve(Sigma::parabolic(), st.a, st.p, st.b, bc, st.t), ValidationError);
  }
}
