#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace xformlab {

using Real = double;
using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Bad input: violated precondition, malformed grid or coefficient.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation that started but could not finish (singular system,
/// non-finite growth, line-search breakdown).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nonzero complex constant in front of the time derivative.
class Sigma {
 public:
  Sigma(Real re, Real im);
  explicit Sigma(Complex value) : Sigma(value.real(), value.imag()) {}

  static Sigma parabolic() { return {1.0, 0.0}; }
  static Sigma schrodinger() { return {0.0, 1.0}; }

  Real re() const { return re_; }
  Real im() const { return im_; }
  Complex value() const { return {re_, im_}; }

 private:
  Real re_;
  Real im_;
};

/// Uniform grid x_j = ell * j / n on [0, ell].
class SpaceGrid {
 public:
  SpaceGrid(Real ell, int n);

  Real ell() const { return ell_; }
  int n() const { return n_; }
  Real h() const { return ell_ / n_; }
  int size() const { return n_ + 1; }
  Real node(int j) const { return ell_ * static_cast<Real>(j) / n_; }
  RealVector nodes() const;

  /// Leading sub-grid [0, x_count] with the same spacing.
  SpaceGrid prefix(int count) const;

  friend bool operator==(const SpaceGrid&, const SpaceGrid&) = default;

 private:
  Real ell_;
  int n_;
};

/// Uniform grid t_k = horizon * k / m on [0, horizon].
class TimeGrid {
 public:
  TimeGrid(Real horizon, int m);

  Real horizon() const { return horizon_; }
  int m() const { return m_; }
  Real dt() const { return horizon_ / m_; }
  int size() const { return m_ + 1; }
  Real node(int k) const { return horizon_ * static_cast<Real>(k) / m_; }
  RealVector nodes() const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  Real horizon_;
  int m_;
};

inline constexpr int kMinIntervals = 8;

std::pair<SpaceGrid, TimeGrid> make_grids(Real ell, Real horizon, int n, int m);

enum class Role { Diffusion, PotentialP, PotentialQ, Initial };

std::string to_string(Role role);

/// Real function sampled on a SpaceGrid. Diffusion fields are strictly positive.
class CoefficientField {
 public:
  CoefficientField(SpaceGrid grid, RealVector values, Role role);

  const SpaceGrid& grid() const { return grid_; }
  const RealVector& values() const { return values_; }
  Role role() const { return role_; }
  Real operator[](int j) const { return values_[j]; }
  int size() const { return static_cast<int>(values_.size()); }

  CoefficientField with_role(Role role) const { return {grid_, values_, role}; }
  CoefficientField prefix(int count) const;

 private:
  SpaceGrid grid_;
  RealVector values_;
  Role role_;
};

using ScalarFunction = std::function<Real(Real)>;

CoefficientField sample_coefficient(const ScalarFunction& f, const SpaceGrid& grid, Role role);

struct ZeroReport {
  struct Zero {
    Real location;
    Real slope;
    bool near_boundary;
  };
  std::vector<Zero> zeros;
  bool admissible = false;
  /// Set when b vanishes on a run of consecutive nodes (zero set not finite).
  bool degenerate = false;
};

/// Locates the zeros of an initial value and checks that each one is simple.
ZeroReport check_b_admissible(const CoefficientField& b);

/// Relative slope threshold for simple-zero detection, scaled by max|b| / ell.
inline constexpr Real kSlopeTolerance = 1e-6;

/// Solution samples u(t_k, x_j); row k is time level k.
struct EvolutionField {
  SpaceGrid sgrid;
  TimeGrid tgrid;
  ComplexMatrix values;

  EvolutionField(SpaceGrid s, TimeGrid t, ComplexMatrix v);
  EvolutionField(SpaceGrid s, TimeGrid t);

  Complex operator()(int k, int j) const { return values(k, j); }
  ComplexVector row(int k) const { return values.row(k).transpose(); }
};

/// Lateral Cauchy data at x = 0.
struct CauchyTrace {
  TimeGrid tgrid;
  ComplexVector u0;
  ComplexVector ux0;

  CauchyTrace(TimeGrid t, ComplexVector value, ComplexVector slope);
};

void require(bool condition, const std::string& message);
void require_same_grid(const SpaceGrid& a, const SpaceGrid& b, const char* what);

// Shared numeric primitives.

/// Composite trapezoid over samples spaced h apart.
template <typename Derived>
typename Derived::Scalar trapezoid(const Eigen::MatrixBase<Derived>& f, Real h) {
  const Eigen::Index n = f.size();
  if (n < 2) return typename Derived::Scalar(0);
  return h * (f.sum() - 0.5 * (f(0) + f(n - 1)));
}

/// Running trapezoid integral from x_0; result[0] = 0.
RealVector cumulative_trapezoid(const RealVector& f, Real h);

/// Second-order one-sided derivative at the left end: (-3 f0 + 4 f1 - f2) / 2h.
template <typename Scalar>
Scalar left_slope(Scalar f0, Scalar f1, Scalar f2, Real h) {
  return (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
}

/// First derivative of samples: centered inside, second-order one-sided at both ends.
RealVector derivative(const RealVector& f, Real h);

/// Second derivative of samples: centered inside, second-order one-sided at both ends.
RealVector second_derivative(const RealVector& f, Real h);

Real max_abs(const RealVector& v);
Real max_abs(const ComplexVector& v);

}  // namespace xformlab
