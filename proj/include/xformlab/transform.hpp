#pragma once

#include <optional>

#include "xformlab/core.hpp"
#include "xformlab/goursat.hpp"

namespace xformlab {

/// (K v)(x_i) = int_0^{x_i} K(x_i, y) v(y) dy by the trapezoid rule on each row.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_kernel(
    const Kernel& k, const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const int n = k.tri().n();
  require(v.size() == n + 1, "grid mismatch: kernel and vector");
  const Real h = k.tri().h();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n + 1);
  out[0] = Scalar(0);
  for (int i = 1; i <= n; ++i) {
    Scalar s = 0.5 * (k(i, 0) * v[0] + k(i, i) * v[i]);
    for (int j = 1; j < i; ++j) s += k(i, j) * v[j];
    out[i] = h * s;
  }
  return out;
}

/// v~ = u + K u on every time level.
EvolutionField transform_field(const EvolutionField& u, const Kernel& k);

struct IntertwiningReport {
  /// max |sigma D_t v~ - a D_x^2 v~ + q v~ + a(0) K(x,0) u_x(t,0)| over interior nodes.
  Real interior_residual = 0.0;
  /// max_t |v~(t,0) - u(t,0)|.
  Real trace_gap_value = 0.0;
  /// max_t |D_x v~(t,0) - D_x u(t,0)| with the one-sided boundary stencil.
  Real trace_gap_slope = 0.0;
  std::optional<Real> refinement_ratio;
};

/// Checks that u + K u solves the q-equation up to the boundary forcing
/// -a(0) K(x,0) u_x(t,0). `u` must solve the p-equation; it is gated by
/// pde_residual <= `gate` (a negative gate selects residual_gate with residual_scale).
IntertwiningReport intertwining_residual(const EvolutionField& u, const Kernel& k,
                                         const Sigma& sigma, const CoefficientField& a,
                                         const CoefficientField& p, const CoefficientField& q,
                                         Real gate = -1.0);

/// Two-level version: fills refinement_ratio = coarse / fine interior residual.
IntertwiningReport intertwining_refinement(const IntertwiningReport& coarse,
                                           const IntertwiningReport& fine);

struct OrthogonalityProfile {
  RealVector x;
  ComplexVector profile;
  Real max_magnitude = 0.0;
};

/// x -> int_0^x K(x,y) w(y) dy with its sup norm; vanishes identically when
/// two coefficients share the same data.
OrthogonalityProfile data_orthogonality(const Kernel& k, const ComplexVector& w);
OrthogonalityProfile data_orthogonality(const Kernel& k, const RealVector& w);

}  // namespace xformlab
