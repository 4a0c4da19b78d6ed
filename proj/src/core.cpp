#include "xformlab/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace xformlab {

void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

void require_same_grid(const SpaceGrid& a, const SpaceGrid& b, const char* what) {
  if (!(a == b)) throw ValidationError(std::string("grid mismatch: ") + what);
}

Sigma::Sigma(Real re, Real im) : re_(re), im_(im) {
  require(std::isfinite(re) && std::isfinite(im), "sigma must be finite");
  require(re * re + im * im > 0.0, "sigma must be nonzero");
}

SpaceGrid::SpaceGrid(Real ell, int n) : ell_(ell), n_(n) {
  require(std::isfinite(ell) && ell > 0.0, "space length must be positive");
  require(n >= kMinIntervals, "space grid needs at least 8 intervals");
}

RealVector SpaceGrid::nodes() const {
  RealVector x(size());
  for (int j = 0; j <= n_; ++j) x[j] = node(j);
  return x;
}

SpaceGrid SpaceGrid::prefix(int count) const {
  require(count >= kMinIntervals && count <= n_, "prefix grid out of range");
  return SpaceGrid(node(count), count);
}

TimeGrid::TimeGrid(Real horizon, int m) : horizon_(horizon), m_(m) {
  require(std::isfinite(horizon) && horizon > 0.0, "time horizon must be positive");
  require(m >= kMinIntervals, "time grid needs at least 8 steps");
}

RealVector TimeGrid::nodes() const {
  RealVector t(size());
  for (int k = 0; k <= m_; ++k) t[k] = node(k);
  return t;
}

std::pair<SpaceGrid, TimeGrid> make_grids(Real ell, Real horizon, int n, int m) {
  return {SpaceGrid(ell, n), TimeGrid(horizon, m)};
}

std::string to_string(Role role) {
  switch (role) {
    case Role::Diffusion: return "diffusion";
    case Role::PotentialP: return "potential_p";
    case Role::PotentialQ: return "potential_q";
    case Role::Initial: return "initial";
  }
  return "unknown";
}

CoefficientField::CoefficientField(SpaceGrid grid, RealVector values, Role role)
    : grid_(grid), values_(std::move(values)), role_(role) {
  require(values_.size() == grid_.size(), "coefficient length does not match grid");
  for (int j = 0; j < values_.size(); ++j) {
    if (!std::isfinite(values_[j])) {
      std::ostringstream os;
      os << to_string(role_) << " coefficient is not finite at node " << j;
      throw ValidationError(os.str());
    }
    if (role_ == Role::Diffusion && values_[j] <= 0.0) {
      std::ostringstream os;
      os << "diffusion coefficient must be positive; a(x_" << j << " = " << grid_.node(j)
         << ") = " << values_[j];
      throw ValidationError(os.str());
    }
  }
}

CoefficientField CoefficientField::prefix(int count) const {
  return {grid_.prefix(count), values_.head(count + 1), role_};
}

CoefficientField sample_coefficient(const ScalarFunction& f, const SpaceGrid& grid, Role role) {
  RealVector v(grid.size());
  for (int j = 0; j < grid.size(); ++j) v[j] = f(grid.node(j));
  return {grid, std::move(v), role};
}

namespace {

Real node_slope(const RealVector& b, int j, Real h) {
  const int last = static_cast<int>(b.size()) - 1;
  if (j == 0) return left_slope(b[0], b[1], b[2], h);
  if (j == last) return -left_slope(b[last], b[last - 1], b[last - 2], h);
  return (b[j + 1] - b[j - 1]) / (2.0 * h);
}

}  // namespace

ZeroReport check_b_admissible(const CoefficientField& b) {
  require(b.role() == Role::Initial, "admissibility check expects an initial-value field");
  const RealVector& v = b.values();
  const Real h = b.grid().h();
  const Real ell = b.grid().ell();
  const int last = b.size() - 1;
  const Real scale = max_abs(v);

  ZeroReport report;
  if (scale == 0.0) {
    report.degenerate = true;
    return report;
  }
  const Real node_tol = 1e-10 * scale;
  const Real slope_tol = kSlopeTolerance * scale / ell;
  auto near_edge = [&](Real x) { return x <= h || x >= ell - h; };
  auto is_zero = [&](int j) { return std::abs(v[j]) <= node_tol; };
  auto add = [&](Real x, Real slope) { report.zeros.push_back({x, slope, near_edge(x)}); };

  for (int j = 0; j <= last; ++j) {
    if (is_zero(j)) {
      if (j > 0 && is_zero(j - 1)) report.degenerate = true;
      add(b.grid().node(j), node_slope(v, j, h));
      continue;
    }
    if (j < last && !is_zero(j + 1) && (v[j] > 0.0) != (v[j + 1] > 0.0)) {
      const Real x = b.grid().node(j) + h * v[j] / (v[j] - v[j + 1]);
      add(x, (v[j + 1] - v[j]) / h);
    }
    // Tangential zero between nodes: |b| has a local minimum that a parabola
    // through three nodes brings down to zero.
    if (j > 0 && j < last && !is_zero(j - 1) && !is_zero(j + 1) &&
        (v[j - 1] > 0.0) == (v[j] > 0.0) && (v[j + 1] > 0.0) == (v[j] > 0.0) &&
        std::abs(v[j]) <= std::abs(v[j - 1]) && std::abs(v[j]) <= std::abs(v[j + 1])) {
      const Real c2 = (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (2.0 * h * h);
      const Real c1 = (v[j + 1] - v[j - 1]) / (2.0 * h);
      if (c2 != 0.0) {
        const Real offset = -c1 / (2.0 * c2);
        const Real vertex = v[j] + c1 * offset + c2 * offset * offset;
        if (std::abs(offset) <= h && std::abs(vertex) <= kSlopeTolerance * scale) {
          add(b.grid().node(j) + offset, 0.0);
        }
      }
    }
  }
  std::sort(report.zeros.begin(), report.zeros.end(),
            [](const auto& l, const auto& r) { return l.location < r.location; });

  report.admissible = !report.degenerate;
  for (const auto& z : report.zeros) {
    if (!(std::abs(z.slope) > slope_tol)) report.admissible = false;
  }
  return report;
}

EvolutionField::EvolutionField(SpaceGrid s, TimeGrid t, ComplexMatrix v)
    : sgrid(s), tgrid(t), values(std::move(v)) {
  require(values.rows() == tgrid.size() && values.cols() == sgrid.size(),
          "evolution field shape does not match grids");
  require(values.allFinite(), "evolution field has non-finite entries");
}

EvolutionField::EvolutionField(SpaceGrid s, TimeGrid t)
    : sgrid(s), tgrid(t), values(ComplexMatrix::Zero(t.size(), s.size())) {}

CauchyTrace::CauchyTrace(TimeGrid t, ComplexVector value, ComplexVector slope)
    : tgrid(t), u0(std::move(value)), ux0(std::move(slope)) {
  require(u0.size() == tgrid.size() && ux0.size() == tgrid.size(),
          "Cauchy trace length does not match time grid");
}

RealVector cumulative_trapezoid(const RealVector& f, Real h) {
  RealVector out(f.size());
  if (f.size() == 0) return out;
  out[0] = 0.0;
  for (Eigen::Index j = 1; j < f.size(); ++j) out[j] = out[j - 1] + 0.5 * h * (f[j - 1] + f[j]);
  return out;
}

RealVector derivative(const RealVector& f, Real h) {
  const Eigen::Index n = f.size();
  require(n >= 3, "derivative needs at least three samples");
  RealVector d(n);
  d[0] = left_slope(f[0], f[1], f[2], h);
  d[n - 1] = -left_slope(f[n - 1], f[n - 2], f[n - 3], h);
  for (Eigen::Index j = 1; j + 1 < n; ++j) d[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
  return d;
}

RealVector second_derivative(const RealVector& f, Real h) {
  const Eigen::Index n = f.size();
  require(n >= 4, "second derivative needs at least four samples");
  RealVector d(n);
  const Real h2 = h * h;
  d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
  d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
  for (Eigen::Index j = 1; j + 1 < n; ++j) d[j] = (f[j + 1] - 2.0 * f[j] + f[j - 1]) / h2;
  return d;
}

Real max_abs(const RealVector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }
Real max_abs(const ComplexVector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace xformlab
