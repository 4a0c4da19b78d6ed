#pragma once

#include <optional>

#include "xformlab/core.hpp"
#include "xformlab/tridiagonal.hpp"

namespace xformlab {

struct BoundaryCondition {
  enum class Kind { DirichletZero, NeumannZero, PrescribedTrace };

  Kind kind = Kind::DirichletZero;
  /// Boundary values u(t_k, boundary) for PrescribedTrace, one per time node.
  ComplexVector series;

  static BoundaryCondition dirichlet() { return {Kind::DirichletZero, {}}; }
  static BoundaryCondition neumann() { return {Kind::NeumannZero, {}}; }
  static BoundaryCondition prescribed(ComplexVector values) {
    return {Kind::PrescribedTrace, std::move(values)};
  }

  bool is_dirichlet_type() const { return kind != Kind::NeumannZero; }
};

struct BoundaryConditionSpec {
  BoundaryCondition left = BoundaryCondition::dirichlet();
  BoundaryCondition right = BoundaryCondition::dirichlet();
};

std::string to_string(BoundaryCondition::Kind kind);

/// Time level that carries the initial value b.
enum class Anchor { Start, End };

/// Crank-Nicolson discretization of sigma u_t = a u_xx - p u on one grid pair.
///
/// Each step solves A u^{k+1} = B u^k + g^{k+1}. Dirichlet-type rows are
/// identity rows of A with a zero row in B; Neumann rows use the mirrored
/// ghost node u_{-1} = u_1. The factorization of A is computed once.
class CrankNicolson {
 public:
  CrankNicolson(const Sigma& sigma, const CoefficientField& a, const CoefficientField& p,
                const BoundaryConditionSpec& bc, const TimeGrid& tgrid);

  const Tridiagonal<Complex>& lhs() const { return lhs_; }
  const Tridiagonal<Complex>& rhs() const { return rhs_; }

  /// Rows of the system where the PDE (and thus p) enters.
  const std::vector<bool>& pde_rows() const { return pde_rows_; }

  /// Advance one level; `k` is the index of the new level.
  ComplexVector step(const ComplexVector& current, int k) const;

  /// Solve A^H x = y.
  ComplexVector solve_adjoint(const ComplexVector& y) const;

  /// Multiply B^H x.
  ComplexVector apply_rhs_adjoint(const ComplexVector& x) const { return rhs_.adjoint_multiply(x); }

  /// Boundary forcing g^k.
  ComplexVector forcing(int k) const;

 private:
  BoundaryConditionSpec bc_;
  int size_;
  Tridiagonal<Complex> lhs_;
  Tridiagonal<Complex> rhs_;
  Tridiagonal<Complex>::Factorization lhs_factor_;
  Tridiagonal<Complex>::Factorization lhs_adjoint_factor_;
  std::vector<bool> pde_rows_;
};

/// Forward sweep from u(0, .) = b. Rejects Re sigma < 0.
EvolutionField forward_solve(const Sigma& sigma, const CoefficientField& a,
                             const CoefficientField& p, const CoefficientField& b,
                             const BoundaryConditionSpec& bc, const TimeGrid& tgrid);

/// Solution with u(T, .) = b instead of u(0, .) = b. Only purely imaginary
/// sigma is accepted: the field is the conjugated time reversal of a forward
/// solve, which is exact for the discrete scheme.
EvolutionField forward_solve_anchored(const Sigma& sigma, const CoefficientField& a,
                                      const CoefficientField& p, const CoefficientField& b,
                                      const BoundaryConditionSpec& bc, const TimeGrid& tgrid,
                                      Anchor anchor);

/// u(t, 0) and a second-order one-sided estimate of u_x(t, 0).
CauchyTrace extract_cauchy_trace(const EvolutionField& u);

/// max over interior nodes of |sigma D_t u - a D_x^2 u + p u|, centered stencils.
Real pde_residual(const EvolutionField& u, const Sigma& sigma, const CoefficientField& a,
                  const CoefficientField& p);

/// Algebraic residual of the per-step linear systems, relative to max|u|.
Real step_residual(const EvolutionField& u, const Sigma& sigma, const CoefficientField& a,
                   const CoefficientField& p, const BoundaryConditionSpec& bc);

/// Size of the operator terms: max(|u|, |a D_x^2 u|) over the grid.
Real residual_scale(const EvolutionField& u, const CoefficientField& a);

/// Gate used before trusting a field as a PDE solution: 10 (dt^2 + h^2) scale.
Real residual_gate(const SpaceGrid& s, const TimeGrid& t, Real scale);

}  // namespace xformlab
