#include "xformlab/goursat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace xformlab {

namespace {

void check_triple(const CoefficientField& a, const CoefficientField& p, const CoefficientField& q) {
  require(a.role() == Role::Diffusion, "a must be a diffusion field");
  require_same_grid(a.grid(), p.grid(), "a and p");
  require_same_grid(a.grid(), q.grid(), "a and q");
}

constexpr Real kGrowthLimit = 1e150;

}  // namespace

RealVector diagonal_kernel(const CoefficientField& a, const CoefficientField& p,
                           const CoefficientField& q) {
  check_triple(a, p, q);
  const RealVector root = a.values().cwiseSqrt();
  const RealVector integrand = (q.values() - p.values()).cwiseQuotient(2.0 * root);
  return cumulative_trapezoid(integrand, a.grid().h()).cwiseQuotient(root);
}

MeshCondition check_mesh_condition(const CoefficientField& a) {
  MeshCondition mc;
  Real running_max = a[0];
  for (int i = 0; i < a.size(); ++i) {
    running_max = std::max(running_max, a[i]);
    mc.max_speed = std::max(mc.max_speed, std::sqrt(running_max / a[i]));
  }
  mc.satisfied = mc.max_speed <= 1.0 + 1e-12;
  return mc;
}

Kernel march_goursat(const GoursatProblem& pr) {
  check_triple(pr.a, pr.p, pr.q);
  const int n = pr.a.grid().n();
  require(pr.diagonal.size() == n + 1 && pr.diagonal_slope.size() == n + 1,
          "Goursat diagonal data length does not match grid");
  const TriangleGrid tri(pr.a.grid());
  require(pr.source.size() == 0 || pr.source.size() == tri.node_count(),
          "Goursat source size does not match triangle");
  require(pr.robin.size() == 0 || pr.robin.size() == n + 1, "Robin data length does not match grid");

  const MeshCondition mc = check_mesh_condition(pr.a);
  if (!mc.satisfied) {
    std::ostringstream os;
    os << "mesh condition violated: max sqrt(a(y)/a(x)) over y <= x is " << mc.max_speed
       << " > 1; the square-mesh march needs a nondecreasing diffusion coefficient";
    throw ValidationError(os.str());
  }

  const Real h = tri.h();
  const Real h2 = h * h;
  const RealVector& a = pr.a.values();
  const RealVector& p = pr.p.values();
  const RealVector& q = pr.q.values();
  const RealVector da = derivative(a, h);
  const RealVector dda = second_derivative(a, h);
  auto source = [&](int i, int j) { return pr.source.size() ? pr.source[tri.index(i, j)] : 0.0; };
  auto robin = [&](int i) { return pr.robin.size() ? pr.robin[i] : 0.0; };

  Kernel k(tri);
  k(0, 0) = pr.diagonal[0];
  {
    // First column: Taylor step from the corner using the diagonal slope and
    // the Robin condition for K_y(0,0).
    const Real ky = (robin(0) - da[0] * k(0, 0)) / a[0];
    k(1, 0) = k(0, 0) + h * (pr.diagonal_slope[0] - ky);
    k(1, 1) = pr.diagonal[1];
  }

  for (int i = 1; i < n; ++i) {
    auto ak = [&](int j) { return a[j] * k(i, j); };
    const Real scale = h2 / a[i];

    // Bottom row: ghost value (aK)_{-1} = (aK)_1 - 2h * robin.
    {
      const Real lap = (2.0 * ak(1) - 2.0 * ak(0) - 2.0 * h * robin(i)) / h2;
      k(i + 1, 0) = 2.0 * k(i, 0) - k(i - 1, 0) +
                    scale * (lap + k(i, 0) * (q[i] - p[0]) + source(i, 0));
    }
    for (int j = 1; j < i; ++j) {
      const Real lap = (ak(j + 1) - 2.0 * ak(j) + ak(j - 1)) / h2;
      k(i + 1, j) = 2.0 * k(i, j) - k(i - 1, j) +
                    scale * (lap + k(i, j) * (q[i] - p[j]) + source(i, j));
    }
    // Node just below the new diagonal entry: second-order Taylor step from
    // (x_i, x_i), with K_x recovered from the diagonal slope and K_xx from the
    // equation itself.
    {
      const Real kd = k(i, i);
      Real ky = 0.0;
      Real kyy = 0.0;
      if (i >= 2) {
        ky = (3.0 * kd - 4.0 * k(i, i - 1) + k(i, i - 2)) / (2.0 * h);
        kyy = (kd - 2.0 * k(i, i - 1) + k(i, i - 2)) / h2;
      } else {
        ky = (kd - k(i, i - 1)) / h;
      }
      const Real ayy = a[i] * kyy + 2.0 * da[i] * ky + dda[i] * kd;
      const Real kxx = (ayy + kd * (q[i] - p[i]) + source(i, i)) / a[i];
      const Real kx = pr.diagonal_slope[i] - ky;
      k(i + 1, i) = kd + h * kx + 0.5 * h2 * kxx;
    }
    k(i + 1, i + 1) = pr.diagonal[i + 1];

    const auto col = k.column(i + 1);
    if (!col.allFinite() || col.cwiseAbs().maxCoeff() > kGrowthLimit) {
      throw NumericalError("kernel march became unstable at column " + std::to_string(i + 1));
    }
  }
  return k;
}

Kernel solve_kernel(const CoefficientField& a, const CoefficientField& p, const CoefficientField& q) {
  check_triple(a, p, q);
  const RealVector diag = diagonal_kernel(a, p, q);
  const RealVector da = derivative(a.values(), a.grid().h());
  RealVector slope(diag.size());
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    slope[i] = (q[i] - p[i] - da[i] * diag[i]) / (2.0 * a[i]);
  }
  return march_goursat(GoursatProblem{a, p, q, diag, slope, {}, {}});
}

Real kernel_residual(const Kernel& k, const CoefficientField& a, const CoefficientField& p,
                     const CoefficientField& q) {
  check_triple(a, p, q);
  require(k.tri().base() == a.grid(), "kernel grid does not match coefficients");
  const Real h = a.grid().h();
  const Real h2 = h * h;
  const RealVector da = derivative(a.values(), h);
  const RealVector dda = second_derivative(a.values(), h);
  Real worst = 0.0;
  for (int i = 2; i < a.grid().n(); ++i) {
    for (int j = 1; j < i - 1; ++j) {
      const Real kxx = (k(i + 1, j) - 2.0 * k(i, j) + k(i - 1, j)) / h2;
      const Real ky = (k(i, j + 1) - k(i, j - 1)) / (2.0 * h);
      const Real kyy = (k(i, j + 1) - 2.0 * k(i, j) + k(i, j - 1)) / h2;
      const Real ayy = a[j] * kyy + 2.0 * da[j] * ky + dda[j] * k(i, j);
      worst = std::max(worst, std::abs(a[i] * kxx - ayy - k(i, j) * (q[i] - p[j])));
    }
  }
  return worst;
}

namespace {

CharacteristicCurve trace_characteristic(const ScalarFunction& a, Real x0, Real step) {
  require(x0 > 0.0, "characteristic start must be positive");
  if (step <= 0.0) step = x0 / 200.0;
  auto slope = [&](Real x, Real y) { return -std::sqrt(a(std::max(y, 0.0)) / a(x)); };

  CharacteristicCurve c;
  c.start = x0;
  c.x.push_back(x0);
  c.y.push_back(x0);
  Real x = x0;
  Real y = x0;
  // A curve that leaves the axis untouched after this many steps is treated
  // as stalled; the crossing is then extrapolated from the last slope.
  const int max_steps = 1000000;
  for (int s = 0; s < max_steps; ++s) {
    const Real k1 = slope(x, y);
    const Real k2 = slope(x + 0.5 * step, y + 0.5 * step * k1);
    const Real k3 = slope(x + 0.5 * step, y + 0.5 * step * k2);
    const Real k4 = slope(x + step, y + step * k3);
    const Real yn = y + step * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    const Real xn = x + step;
    if (!std::isfinite(yn)) throw NumericalError("characteristic integration diverged");
    if (yn <= 0.0) {
      c.axis_hit = x + step * y / (y - yn);
      c.x.push_back(c.axis_hit);
      c.y.push_back(0.0);
      return c;
    }
    x = xn;
    y = yn;
    c.x.push_back(x);
    c.y.push_back(y);
  }
  c.extrapolated = true;
  c.axis_hit = x + y / std::abs(slope(x, y));
  return c;
}

}  // namespace

CharacteristicCurve characteristic_curve(const ScalarFunction& a, Real x0, Real step) {
  return trace_characteristic(a, x0, step);
}

CharacteristicCurve characteristic_curve(const CoefficientField& a, Real x0, Real step) {
  require(a.role() == Role::Diffusion, "a must be a diffusion field");
  require(x0 > 0.0 && x0 < a.grid().ell(), "characteristic start must lie in (0, ell)");
  const SpaceGrid g = a.grid();
  // Piecewise-linear interpolant, held constant beyond ell.
  auto interp = [&a, g](Real x) {
    if (x <= 0.0) return a[0];
    if (x >= g.ell()) return a[g.n()];
    const Real s = x / g.h();
    const int j = std::min(static_cast<int>(s), g.n() - 1);
    const Real w = s - j;
    return (1.0 - w) * a[j] + w * a[j + 1];
  };
  return trace_characteristic(interp, x0, step);
}

KernelBound kernel_bound_fit(const Kernel& k, const CoefficientField& p, const CoefficientField& q) {
  require_same_grid(p.grid(), q.grid(), "p and q");
  require(k.tri().base() == p.grid(), "kernel grid does not match coefficients");
  const int n = p.grid().n();
  KernelBound fit;
  fit.column_ratio = RealVector::Constant(n + 1, std::numeric_limits<Real>::quiet_NaN());
  const RealVector diff = (p.values() - q.values()).cwiseAbs();
  if (diff.maxCoeff() == 0.0) {
    fit.vacuous = true;
    return fit;
  }
  Real running = diff[0];
  for (int i = 1; i <= n; ++i) {
    running = std::max(running, diff[i]);
    const Real denom = p.grid().node(i) * running;
    if (denom < 1e-14) continue;
    fit.column_ratio[i] = k.column(i).cwiseAbs().maxCoeff() / denom;
    fit.constant = std::max(fit.constant, fit.column_ratio[i]);
  }
  return fit;
}

}  // namespace xformlab
