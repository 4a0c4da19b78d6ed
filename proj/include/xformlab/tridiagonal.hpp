#pragma once

#include <cmath>
#include <complex>
#include <sstream>

#include <Eigen/Dense>

#include "xformlab/core.hpp"

namespace xformlab {

namespace detail {
inline double conj_if_complex(double v) { return v; }
inline std::complex<double> conj_if_complex(std::complex<double> v) { return std::conj(v); }
}  // namespace detail

/// Tridiagonal matrix stored by bands. lower[0] and upper[n-1] are unused.
template <typename Scalar>
struct Tridiagonal {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector lower;
  Vector diag;
  Vector upper;

  explicit Tridiagonal(Eigen::Index n = 0)
      : lower(Vector::Zero(n)), diag(Vector::Zero(n)), upper(Vector::Zero(n)) {}

  Eigen::Index size() const { return diag.size(); }

  Vector multiply(const Vector& x) const {
    const Eigen::Index n = size();
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar s = diag[i] * x[i];
      if (i > 0) s += lower[i] * x[i - 1];
      if (i + 1 < n) s += upper[i] * x[i + 1];
      y[i] = s;
    }
    return y;
  }

  /// Conjugate transpose as a new band matrix.
  Tridiagonal adjoint() const {
    const Eigen::Index n = size();
    Tridiagonal t(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      t.diag[i] = detail::conj_if_complex(diag[i]);
      if (i + 1 < n) {
        t.upper[i] = detail::conj_if_complex(lower[i + 1]);
        t.lower[i + 1] = detail::conj_if_complex(upper[i]);
      }
    }
    return t;
  }

  Vector adjoint_multiply(const Vector& x) const { return adjoint().multiply(x); }

  /// Thomas elimination without pivoting, kept for repeated solves.
  struct Factorization {
    Vector lower;
    Vector pivot;
    Vector upper;

    Vector solve(const Vector& rhs) const {
      const Eigen::Index n = pivot.size();
      Vector y(n);
      y[0] = rhs[0] / pivot[0];
      for (Eigen::Index i = 1; i < n; ++i) y[i] = (rhs[i] - lower[i] * y[i - 1]) / pivot[i];
      for (Eigen::Index i = n - 2; i >= 0; --i) y[i] -= upper[i] * y[i + 1];
      return y;
    }
  };

  Factorization factorize() const {
    const Eigen::Index n = size();
    Factorization f{lower, Vector(n), Vector(n)};
    const double scale = diag.cwiseAbs().maxCoeff() + 1e-300;
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar piv = diag[i];
      if (i > 0) piv -= lower[i] * f.upper[i - 1];
      if (!(std::abs(piv) > 1e-14 * scale) || !std::isfinite(std::abs(piv))) {
        std::ostringstream os;
        os << "singular tridiagonal system at row " << i;
        throw NumericalError(os.str());
      }
      f.pivot[i] = piv;
      f.upper[i] = (i + 1 < n) ? upper[i] / piv : Scalar(0);
    }
    return f;
  }

  Vector solve(const Vector& rhs) const { return factorize().solve(rhs); }
};

}  // namespace xformlab
