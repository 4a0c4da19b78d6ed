#include "xformlab/evolve.hpp"

#include <cmath>

namespace xformlab {

std::string to_string(BoundaryCondition::Kind kind) {
  switch (kind) {
    case BoundaryCondition::Kind::DirichletZero: return "dirichlet";
    case BoundaryCondition::Kind::NeumannZero: return "neumann";
    case BoundaryCondition::Kind::PrescribedTrace: return "prescribed";
  }
  return "unknown";
}

namespace {

void check_forward_inputs(const Sigma& sigma, const CoefficientField& a, const CoefficientField& p,
                          const BoundaryConditionSpec& bc, const TimeGrid& tgrid) {
  require(a.role() == Role::Diffusion, "a must be a diffusion field");
  require_same_grid(a.grid(), p.grid(), "a and p");
  require(sigma.re() >= 0.0,
          "sigma with negative real part gives a backward parabolic problem; forward solve refused");
  for (const auto* side : {&bc.left, &bc.right}) {
    if (side->kind == BoundaryCondition::Kind::PrescribedTrace) {
      require(side->series.size() == tgrid.size(),
              "prescribed boundary series length does not match the time grid");
    }
  }
}

}  // namespace

CrankNicolson::CrankNicolson(const Sigma& sigma, const CoefficientField& a,
                             const CoefficientField& p, const BoundaryConditionSpec& bc,
                             const TimeGrid& tgrid)
    : bc_(bc), size_(a.size()), lhs_(a.size()), rhs_(a.size()), pde_rows_(a.size(), true) {
  check_forward_inputs(sigma, a, p, bc, tgrid);
  const int n = size_ - 1;
  const Real h2 = a.grid().h() * a.grid().h();
  const Complex mass = sigma.value() / tgrid.dt();

  for (int j = 0; j <= n; ++j) {
    const Real off = a[j] / h2;
    const Real centre = 2.0 * a[j] / h2 + p[j];
    lhs_.diag[j] = mass + 0.5 * centre;
    rhs_.diag[j] = mass - 0.5 * centre;
    if (j > 0) {
      lhs_.lower[j] = -0.5 * off;
      rhs_.lower[j] = 0.5 * off;
    }
    if (j < n) {
      lhs_.upper[j] = -0.5 * off;
      rhs_.upper[j] = 0.5 * off;
    }
  }

  auto close = [&](const BoundaryCondition& side, int row, int inner) {
    if (side.kind == BoundaryCondition::Kind::NeumannZero) {
      // Mirrored ghost doubles the coupling to the first interior node.
      const Real off = a[row] / h2;
      if (inner > row) {
        lhs_.upper[row] = -off;
        rhs_.upper[row] = off;
      } else {
        lhs_.lower[row] = -off;
        rhs_.lower[row] = off;
      }
      return;
    }
    pde_rows_[row] = false;
    lhs_.diag[row] = 1.0;
    rhs_.diag[row] = 0.0;
    if (inner > row) {
      lhs_.upper[row] = 0.0;
      rhs_.upper[row] = 0.0;
    } else {
      lhs_.lower[row] = 0.0;
      rhs_.lower[row] = 0.0;
    }
  };
  close(bc.left, 0, 1);
  close(bc.right, n, n - 1);

  lhs_factor_ = lhs_.factorize();
  lhs_adjoint_factor_ = lhs_.adjoint().factorize();
}

ComplexVector CrankNicolson::forcing(int k) const {
  ComplexVector g = ComplexVector::Zero(size_);
  if (bc_.left.kind == BoundaryCondition::Kind::PrescribedTrace) g[0] = bc_.left.series[k];
  if (bc_.right.kind == BoundaryCondition::Kind::PrescribedTrace) {
    g[size_ - 1] = bc_.right.series[k];
  }
  return g;
}

ComplexVector CrankNicolson::step(const ComplexVector& current, int k) const {
  return lhs_factor_.solve(rhs_.multiply(current) + forcing(k));
}

ComplexVector CrankNicolson::solve_adjoint(const ComplexVector& y) const {
  return lhs_adjoint_factor_.solve(y);
}

EvolutionField forward_solve(const Sigma& sigma, const CoefficientField& a,
                             const CoefficientField& p, const CoefficientField& b,
                             const BoundaryConditionSpec& bc, const TimeGrid& tgrid) {
  require_same_grid(a.grid(), b.grid(), "a and b");
  const CrankNicolson scheme(sigma, a, p, bc, tgrid);
  EvolutionField u(a.grid(), tgrid);
  u.values.row(0) = b.values().cast<Complex>().transpose();
  ComplexVector level = u.row(0);
  for (int k = 1; k <= tgrid.m(); ++k) {
    level = scheme.step(level, k);
    if (!level.allFinite()) {
      throw NumericalError("forward solve produced non-finite values at step " + std::to_string(k));
    }
    u.values.row(k) = level.transpose();
  }
  return u;
}

EvolutionField forward_solve_anchored(const Sigma& sigma, const CoefficientField& a,
                                      const CoefficientField& p, const CoefficientField& b,
                                      const BoundaryConditionSpec& bc, const TimeGrid& tgrid,
                                      Anchor anchor) {
  if (anchor == Anchor::Start) return forward_solve(sigma, a, p, b, bc, tgrid);
  require(sigma.re() == 0.0,
          "end-time anchor needs a time-reversible equation (purely imaginary sigma)");

  auto reverse_conj = [](const ComplexVector& s) {
    ComplexVector r(s.size());
    for (Eigen::Index k = 0; k < s.size(); ++k) r[k] = std::conj(s[s.size() - 1 - k]);
    return r;
  };
  BoundaryConditionSpec reversed = bc;
  for (auto* side : {&reversed.left, &reversed.right}) {
    if (side->kind == BoundaryCondition::Kind::PrescribedTrace) side->series = reverse_conj(side->series);
  }
  const EvolutionField w = forward_solve(sigma, a, p, b, reversed, tgrid);
  EvolutionField u(w.sgrid, tgrid);
  const int m = tgrid.m();
  for (int k = 0; k <= m; ++k) u.values.row(k) = w.values.row(m - k).conjugate();
  return u;
}

CauchyTrace extract_cauchy_trace(const EvolutionField& u) {
  const int rows = u.tgrid.size();
  const Real h = u.sgrid.h();
  ComplexVector value(rows), slope(rows);
  for (int k = 0; k < rows; ++k) {
    value[k] = u(k, 0);
    slope[k] = left_slope(u(k, 0), u(k, 1), u(k, 2), h);
  }
  return {u.tgrid, std::move(value), std::move(slope)};
}

Real pde_residual(const EvolutionField& u, const Sigma& sigma, const CoefficientField& a,
                  const CoefficientField& p) {
  require_same_grid(u.sgrid, a.grid(), "field and a");
  require_same_grid(u.sgrid, p.grid(), "field and p");
  const Real h2 = u.sgrid.h() * u.sgrid.h();
  const Real dt = u.tgrid.dt();
  const Complex s = sigma.value();
  Real worst = 0.0;
  for (int k = 1; k < u.tgrid.m(); ++k) {
    for (int j = 1; j < u.sgrid.n(); ++j) {
      const Complex ut = (u(k + 1, j) - u(k - 1, j)) / (2.0 * dt);
      const Complex uxx = (u(k, j + 1) - 2.0 * u(k, j) + u(k, j - 1)) / h2;
      worst = std::max(worst, std::abs(s * ut - a[j] * uxx + p[j] * u(k, j)));
    }
  }
  return worst;
}

Real step_residual(const EvolutionField& u, const Sigma& sigma, const CoefficientField& a,
                   const CoefficientField& p, const BoundaryConditionSpec& bc) {
  const CrankNicolson scheme(sigma, a, p, bc, u.tgrid);
  const Real scale = std::max(u.values.cwiseAbs().maxCoeff(), 1e-300);
  Real worst = 0.0;
  for (int k = 1; k <= u.tgrid.m(); ++k) {
    const ComplexVector r =
        scheme.lhs().multiply(u.row(k)) - scheme.rhs().multiply(u.row(k - 1)) - scheme.forcing(k);
    worst = std::max(worst, max_abs(r));
  }
  return worst / scale;
}

Real residual_scale(const EvolutionField& u, const CoefficientField& a) {
  require_same_grid(u.sgrid, a.grid(), "field and a");
  const Real h2 = u.sgrid.h() * u.sgrid.h();
  Real scale = u.values.cwiseAbs().maxCoeff();
  for (int k = 0; k <= u.tgrid.m(); ++k) {
    for (int j = 1; j < u.sgrid.n(); ++j) {
      scale = std::max(scale, a[j] * std::abs(u(k, j + 1) - 2.0 * u(k, j) + u(k, j - 1)) / h2);
    }
  }
  return scale;
}

Real residual_gate(const SpaceGrid& s, const TimeGrid& t, Real scale) {
  return 10.0 * (t.dt() * t.dt() + s.h() * s.h()) * scale;
}

}  // namespace xformlab
