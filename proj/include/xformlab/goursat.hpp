#pragma once

#include <vector>

#include "xformlab/core.hpp"

namespace xformlab {

/// Nodes (x_i, y_j) with 0 <= j <= i <= n on a square mesh.
class TriangleGrid {
 public:
  explicit TriangleGrid(SpaceGrid base) : base_(base) {}

  const SpaceGrid& base() const { return base_; }
  int n() const { return base_.n(); }
  Real h() const { return base_.h(); }
  Eigen::Index node_count() const {
    return static_cast<Eigen::Index>(n() + 1) * (n() + 2) / 2;
  }
  Eigen::Index index(int i, int j) const { return static_cast<Eigen::Index>(i) * (i + 1) / 2 + j; }

  friend bool operator==(const TriangleGrid&, const TriangleGrid&) = default;

 private:
  SpaceGrid base_;
};

/// Real values on the closed triangle 0 <= y <= x <= ell, packed column by column.
template <typename Scalar>
class TriangleField {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit TriangleField(TriangleGrid tri) : tri_(tri), values_(Vector::Zero(tri.node_count())) {}
  TriangleField(TriangleGrid tri, Vector values) : tri_(tri), values_(std::move(values)) {
    require(values_.size() == tri_.node_count(), "triangle field size mismatch");
  }

  const TriangleGrid& tri() const { return tri_; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

  Scalar operator()(int i, int j) const { return values_[tri_.index(i, j)]; }
  Scalar& operator()(int i, int j) { return values_[tri_.index(i, j)]; }

  /// Column x_i restricted to 0 <= y <= x_i.
  Vector column(int i) const { return values_.segment(tri_.index(i, 0), i + 1); }
  Vector diagonal() const {
    Vector d(tri_.n() + 1);
    for (int i = 0; i <= tri_.n(); ++i) d[i] = (*this)(i, i);
    return d;
  }

 private:
  TriangleGrid tri_;
  Vector values_;
};

using Kernel = TriangleField<Real>;

/// K(x, x) from 2a dK/dx + a' K = q - p, K(0,0) = 0:
/// K(x,x) = a(x)^{-1/2} int_0^x (q - p) / (2 sqrt a) ds, trapezoid quadrature.
RealVector diagonal_kernel(const CoefficientField& a, const CoefficientField& p,
                           const CoefficientField& q);

/// Generic Goursat data for the column march, so that manufactured problems
/// can reuse the same stencils:
///   a(x) K_xx - (a(y) K)_yy - K (q(x) - p(y)) = source
///   a(0) K_y(x,0) + a'(0) K(x,0) = robin(x)
///   K(x,x) = diagonal(x), dK(x,x)/dx = diagonal_slope(x).
struct GoursatProblem {
  CoefficientField a;
  CoefficientField p;
  CoefficientField q;
  RealVector diagonal;
  RealVector diagonal_slope;
  /// Optional interior source on triangle nodes (empty = zero).
  RealVector source;
  /// Optional Robin right-hand side per column (empty = zero).
  RealVector robin;
};

struct MeshCondition {
  /// max over y <= x of sqrt(a(y) / a(x)); the explicit march needs <= 1.
  Real max_speed = 0.0;
  bool satisfied = false;
};

MeshCondition check_mesh_condition(const CoefficientField& a);

/// Column march for a GoursatProblem.
Kernel march_goursat(const GoursatProblem& problem);

/// Transformation kernel for the pair (p, q) on the full triangle.
Kernel solve_kernel(const CoefficientField& a, const CoefficientField& p, const CoefficientField& q);

/// Interior residual of the kernel equation, max over 1 <= j < i - 1.
Real kernel_residual(const Kernel& k, const CoefficientField& a, const CoefficientField& p,
                     const CoefficientField& q);

struct CharacteristicCurve {
  Real start = 0.0;
  std::vector<Real> x;
  std::vector<Real> y;
  /// x-coordinate where the curve meets y = 0.
  Real axis_hit = 0.0;
  bool extrapolated = false;
};

/// Integrates dy/dx = -sqrt(a(y) / a(x)) from y(x0) = x0 until y <= 0 with
/// classical RK4. `a` is evaluated pointwise; pass `step` <= 0 for x0 / 200.
CharacteristicCurve characteristic_curve(const ScalarFunction& a, Real x0, Real step = 0.0);

/// Same curve using a piecewise-linear interpolant of a sampled field.
CharacteristicCurve characteristic_curve(const CoefficientField& a, Real x0, Real step = 0.0);

struct KernelBound {
  Real constant = 0.0;
  /// Set when p = q on the whole grid and the bound is vacuous.
  bool vacuous = false;
  /// Per-column ratio sup|K(x,.)| / (x max|p - q|), NaN where skipped.
  RealVector column_ratio;
};

/// Fits C in sup_{y<=x} |K(x,y)| <= C x max_{s<=x} |p(s) - q(s)|.
KernelBound kernel_bound_fit(const Kernel& k, const CoefficientField& p, const CoefficientField& q);

}  // namespace xformlab
